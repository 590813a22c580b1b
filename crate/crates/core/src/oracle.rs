//! Closed-form energy of a spherical solute around a single atom.
//!
//! `G(R) = 4πR²γ₀ + 16πρ_wε(σ¹²/(9R⁹) − σ⁶/(3R³)) + (k_e Q²/(2R))(1/ε_w − 1/ε_m)`

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::site::{Atom, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneAtomParams {
    pub gamma0: f64,
    pub rho_w: f64,
    pub eps_m: f64,
    pub eps_w: f64,
    pub k_e: f64,
    pub charge: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

impl Default for OneAtomParams {
    fn default() -> Self {
        OneAtomParams::new(&PhysicalParams::default(), 1.0, 3.5, 0.3)
    }
}

impl OneAtomParams {
    pub fn new(p: &PhysicalParams, charge: f64, sigma: f64, epsilon: f64) -> Self {
        OneAtomParams {
            gamma0: p.gamma0,
            rho_w: p.rho_w,
            eps_m: p.eps_m,
            eps_w: p.eps_w,
            k_e: p.coulomb_constant,
            charge,
            sigma,
            epsilon,
        }
    }

    pub fn from_atom(p: &PhysicalParams, atom: &Atom) -> Self {
        Self::new(p, atom.charge, atom.sigma, atom.epsilon)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Input(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.eps_m > 0.0 && self.eps_w > 0.0) {
            return Err(Error::Input("permittivities must be positive".into()));
        }
        Ok(())
    }

    fn born(&self) -> f64 {
        0.5 * self.k_e * self.charge * self.charge * (1.0 / self.eps_w - 1.0 / self.eps_m)
    }

    /// Analytic `dG/dR`.
    pub fn derivative(&self, r: f64) -> f64 {
        let s6 = self.sigma.powi(6);
        8.0 * PI * r * self.gamma0 + 16.0 * PI * self.rho_w * self.epsilon * (s6 / r.powi(4) - s6 * s6 / r.powi(10))
            - self.born() / (r * r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneAtomEnergy {
    pub radius: f64,
    pub surf: f64,
    pub vdw: f64,
    pub elec: f64,
    pub total: f64,
}

pub fn one_atom_energy(p: &OneAtomParams, radius: f64) -> Result<OneAtomEnergy> {
    p.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Input(format!("radius must be positive, got {radius}")));
    }
    let surf = 4.0 * PI * radius * radius * p.gamma0;
    let s3 = (p.sigma / radius).powi(3);
    let vdw = 16.0 * PI * p.rho_w * p.epsilon * p.sigma.powi(3) * (s3 * s3 * s3 / 9.0 - s3 / 3.0);
    let elec = p.born() / radius;
    Ok(OneAtomEnergy {
        radius,
        surf,
        vdw,
        elec,
        total: surf + vdw + elec,
    })
}

/// Minimizes `G(R)` over `bracket` by bisection on `dG/dR`, which must go
/// from negative at the lower end to positive at the upper end.
pub fn one_atom_minimize(p: &OneAtomParams, bracket: (f64, f64)) -> Result<OneAtomEnergy> {
    p.validate()?;
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Input(format!("bad bracket ({lo}, {hi})")));
    }
    if !(p.derivative(lo) < 0.0 && p.derivative(hi) > 0.0) {
        return Err(Error::Numeric(format!(
            "no interior minimum in ({lo}, {hi}): dG/dR = {} .. {}",
            p.derivative(lo),
            p.derivative(hi)
        )));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p.derivative(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    one_atom_energy(p, 0.5 * (lo + hi))
}

/// Bracket `(0.5σ, 3σ)` used when none is given.
pub fn default_bracket(p: &OneAtomParams) -> (f64, f64) {
    (0.5 * p.sigma, 3.0 * p.sigma)
}
