//! Per-cell solvent-occupancy energies and the outside-box correction.
//!
//! A cell filled with solvent contributes `G^vdW_i = ρ_w h³ Σ_j U_j(|x_i − r_j|)`
//! and `G^elec_i = h³ · u_elec(x_i)`, where `u_elec` is the Coulomb-field
//! approximation density. Lengths are in Å, energies in kBT, charges in e.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Cells whose center is closer than this to an atom are clamped.
pub const SINGULAR_DISTANCE: f64 = 1e-6;
/// vdW energy assigned to a clamped cell; such a cell must stay solute.
pub const CLAMPED_VDW: f64 = 1e12;

/// Vacuum Coulomb constant `1/(4πε₀)` in kBT·Å/e² (Bjerrum length near room temperature).
pub const DEFAULT_COULOMB_CONSTANT: f64 = 560.74;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(default)]
    pub name: String,
    pub position: [f64; 3],
    pub charge: f64,
    /// LJ well depth ε (kBT).
    pub epsilon: f64,
    /// LJ length σ (Å).
    pub sigma: f64,
}

impl Atom {
    pub fn new(position: [f64; 3], charge: f64, sigma: f64, epsilon: f64) -> Result<Self> {
        let atom = Atom {
            name: String::from("ATOM"),
            position,
            charge,
            epsilon,
            sigma,
        };
        atom.validate()?;
        Ok(atom)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.position.iter().all(|x| x.is_finite())
            && self.charge.is_finite()
            && self.epsilon.is_finite()
            && self.sigma.is_finite();
        if !finite {
            return Err(Error::Input(format!("atom {:?} has non-finite parameters", self.name)));
        }
        if self.sigma <= 0.0 {
            return Err(Error::Input(format!("atom {:?}: sigma must be positive", self.name)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::Input(format!("atom {:?}: epsilon must be non-negative", self.name)));
        }
        Ok(())
    }

    #[inline]
    fn distance(&self, x: [f64; 3]) -> f64 {
        let d = [x[0] - self.position[0], x[1] - self.position[1], x[2] - self.position[2]];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// Lennard-Jones energy at distance `r`: `4ε[(σ/r)¹² − (σ/r)⁶]`.
    pub fn lj_potential(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Input(format!("LJ potential undefined at r = {r}")));
        }
        Ok(self.lj(r))
    }

    #[inline]
    fn lj(&self, r: f64) -> f64 {
        let s6 = (self.sigma / r).powi(6);
        4.0 * self.epsilon * (s6 * s6 - s6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Surface tension γ₀ (kBT/Å²).
    pub gamma0: f64,
    /// Solvent number density ρ_w (Å⁻³).
    pub rho_w: f64,
    pub eps_m: f64,
    pub eps_w: f64,
    /// `1/(4πε₀)` (kBT·Å/e²).
    pub coulomb_constant: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            gamma0: 0.174,
            rho_w: 0.0333,
            eps_m: 1.0,
            eps_w: 80.0,
            coulomb_constant: DEFAULT_COULOMB_CONSTANT,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("gamma0", self.gamma0),
            ("rho_w", self.rho_w),
            ("eps_m", self.eps_m),
            ("eps_w", self.eps_w),
            ("coulomb_constant", self.coulomb_constant),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `(k_e / 8π)(1/ε_w − 1/ε_m)`: multiplies |E|² in the CFA density.
    pub fn cfa_prefactor(&self) -> f64 {
        self.coulomb_constant / (8.0 * std::f64::consts::PI) * (1.0 / self.eps_w - 1.0 / self.eps_m)
    }
}

/// Coulomb-field vector `Σ_i Q_i (x − r_i)/|x − r_i|³`, or `None` at a charged atom center.
#[inline]
fn coulomb_field(atoms: &[Atom], x: [f64; 3]) -> Option<[f64; 3]> {
    let mut e = [0.0; 3];
    for a in atoms {
        if a.charge == 0.0 {
            continue;
        }
        let d = [x[0] - a.position[0], x[1] - a.position[1], x[2] - a.position[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if r2 == 0.0 {
            return None;
        }
        let s = a.charge / (r2 * r2.sqrt());
        for k in 0..3 {
            e[k] += s * d[k];
        }
    }
    Some(e)
}

/// CFA electrostatic energy density (kBT/Å³) at `x`.
pub fn cfa_density(atoms: &[Atom], params: &PhysicalParams, x: [f64; 3]) -> Result<f64> {
    let e = coulomb_field(atoms, x)
        .ok_or_else(|| Error::Input(format!("CFA density evaluated at a charged atom center {x:?}")))?;
    Ok(params.cfa_prefactor() * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]))
}

/// vdW energy density (kBT/Å³) `ρ_w Σ_j U_j(|x − r_j|)` away from atom centers.
#[inline]
fn vdw_density(atoms: &[Atom], params: &PhysicalParams, x: [f64; 3]) -> f64 {
    params.rho_w * atoms.iter().map(|a| a.lj(a.distance(x))).sum::<f64>()
}

/// Sample counts for the outside-box quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutsideSampling {
    pub polar: usize,
    pub azimuthal: usize,
    pub radial: usize,
}

impl Default for OutsideSampling {
    fn default() -> Self {
        OutsideSampling {
            polar: 64,
            azimuthal: 128,
            radial: 64,
        }
    }
}

/// Per-cell energies a cell contributes when it holds solvent.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteEnergies {
    pub g_vdw: Vec<f64>,
    pub g_elec: Vec<f64>,
    pub outside_vdw: f64,
    pub outside_elec: f64,
    /// Cells clamped because an atom sits at their center.
    pub clamped: usize,
}

impl SiteEnergies {
    pub fn zeros(grid: &Grid) -> Self {
        SiteEnergies {
            g_vdw: vec![0.0; grid.cell_count()],
            g_elec: vec![0.0; grid.cell_count()],
            outside_vdw: 0.0,
            outside_elec: 0.0,
            clamped: 0,
        }
    }

    #[inline]
    pub fn site(&self, l: usize) -> f64 {
        self.g_vdw[l] + self.g_elec[l]
    }

    pub fn len(&self) -> usize {
        self.g_vdw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_vdw.is_empty()
    }

    /// Content hash of everything the energies depend on.
    pub fn cache_key(
        grid: &Grid,
        atoms: &[Atom],
        params: &PhysicalParams,
        sampling: Option<&OutsideSampling>,
    ) -> String {
        let payload = serde_json::json!({
            "format": 1,
            "grid": grid,
            "atoms": atoms,
            "params": params,
            "sampling": sampling,
        });
        let digest = Sha256::digest(payload.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    const MAGIC: &'static [u8; 8] = b"VXSITE01";

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(Self::MAGIC)?;
        out.write_all(&(self.g_vdw.len() as u64).to_le_bytes())?;
        out.write_all(&(self.clamped as u64).to_le_bytes())?;
        out.write_all(&self.outside_vdw.to_le_bytes())?;
        out.write_all(&self.outside_elec.to_le_bytes())?;
        for v in self.g_vdw.iter().chain(&self.g_elec) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> std::io::Result<Self> {
        let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(bad("not a site-energy cache"));
        }
        let mut word = [0u8; 8];
        let mut next = |input: &mut R| -> std::io::Result<[u8; 8]> {
            input.read_exact(&mut word)?;
            Ok(word)
        };
        let len = u64::from_le_bytes(next(&mut input)?) as usize;
        let clamped = u64::from_le_bytes(next(&mut input)?) as usize;
        let outside_vdw = f64::from_le_bytes(next(&mut input)?);
        let outside_elec = f64::from_le_bytes(next(&mut input)?);
        let mut bytes = vec![0u8; 16 * len];
        input.read_exact(&mut bytes)?;
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (v, e) = vals.split_at(len);
        Ok(SiteEnergies {
            g_vdw: v.to_vec(),
            g_elec: e.to_vec(),
            outside_vdw,
            outside_elec,
            clamped,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Fills `G^vdW_i` and `G^elec_i` for every cell, plus the outside-box
/// corrections when `sampling` is given.
pub fn precompute_site_energies(
    grid: &Grid,
    atoms: &[Atom],
    params: &PhysicalParams,
    sampling: Option<&OutsideSampling>,
) -> Result<SiteEnergies> {
    params.validate()?;
    for a in atoms {
        a.validate()?;
    }
    let mut site = SiteEnergies::zeros(grid);
    let (outside_vdw, outside_elec) = match sampling {
        Some(s) => outside_box_correction(atoms, params, grid.half_width(), s)?,
        None => (0.0, 0.0),
    };
    site.outside_vdw = outside_vdw;
    site.outside_elec = outside_elec;
    if atoms.is_empty() {
        return Ok(site);
    }
    let vol = grid.cell_volume();
    let slab = grid.n() * grid.n();
    let clamped: usize = site
        .g_vdw
        .par_chunks_mut(slab)
        .zip(site.g_elec.par_chunks_mut(slab))
        .enumerate()
        .map(|(k, (vdw, elec))| {
            let mut clamped = 0;
            for (m, (gv, ge)) in vdw.iter_mut().zip(elec.iter_mut()).enumerate() {
                let x = grid.center_of(k * slab + m);
                if atoms.iter().any(|a| a.distance(x) < SINGULAR_DISTANCE) {
                    *gv = CLAMPED_VDW;
                    *ge = 0.0;
                    clamped += 1;
                    continue;
                }
                *gv = vol * vdw_density(atoms, params, x);
                *ge = match coulomb_field(atoms, x) {
                    Some(e) => vol * params.cfa_prefactor() * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]),
                    None => 0.0,
                };
            }
            clamped
        })
        .sum();
    if clamped > 0 {
        log::warn!("{clamped} cells contain an atom center; their vdW energy is clamped to {CLAMPED_VDW:e}");
    }
    site.clamped = clamped;
    Ok(site)
}

/// vdW and electrostatic integrals over the region outside `[-a, a]^3`.
///
/// Spherical coordinates about the box center with `ρ = 1/r`: for each
/// direction the ray leaves the box at `r_exit = a / max(|u_x|, |u_y|, |u_z|)`,
/// so the radial integral runs over `ρ ∈ (0, 1/r_exit)` with Jacobian `ρ⁻⁴`.
/// Midpoint rule in all three coordinates.
pub fn outside_box_correction(
    atoms: &[Atom],
    params: &PhysicalParams,
    half_width: f64,
    sampling: &OutsideSampling,
) -> Result<(f64, f64)> {
    if sampling.polar == 0 || sampling.azimuthal == 0 || sampling.radial == 0 {
        return Err(Error::Config("outside-box sample counts must be positive".into()));
    }
    for a in atoms {
        if a.position.iter().any(|c| c.abs() >= half_width) {
            return Err(Error::Input(format!(
                "atom {:?} at {:?} is not strictly inside the box [-{half_width}, {half_width}]^3",
                a.name, a.position
            )));
        }
    }
    if atoms.is_empty() {
        return Ok((0.0, 0.0));
    }
    let pi = std::f64::consts::PI;
    let dtheta = pi / sampling.polar as f64;
    let dphi = 2.0 * pi / sampling.azimuthal as f64;
    let prefactor = params.cfa_prefactor();
    let rows: Vec<(f64, f64)> = (0..sampling.polar)
        .into_par_iter()
        .map(|it| {
            let theta = (it as f64 + 0.5) * dtheta;
            let (st, ct) = theta.sin_cos();
            let (mut vdw, mut elec) = (0.0, 0.0);
            for ip in 0..sampling.azimuthal {
                let phi = (ip as f64 + 0.5) * dphi;
                let (sp, cp) = phi.sin_cos();
                let u = [st * cp, st * sp, ct];
                let rho_exit = u.iter().fold(0.0f64, |m, c| m.max(c.abs())) / half_width;
                let drho = rho_exit / sampling.radial as f64;
                let (mut ray_v, mut ray_e) = (0.0, 0.0);
                for ir in 0..sampling.radial {
                    let rho = (ir as f64 + 0.5) * drho;
                    let r = 1.0 / rho;
                    let x = [u[0] * r, u[1] * r, u[2] * r];
                    let jac = r.powi(4);
                    ray_v += vdw_density(atoms, params, x) * jac;
                    if let Some(e) = coulomb_field(atoms, x) {
                        ray_e += prefactor * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]) * jac;
                    }
                }
                vdw += ray_v * drho;
                elec += ray_e * drho;
            }
            (vdw * st * dtheta * dphi, elec * st * dtheta * dphi)
        })
        .collect();
    Ok(rows
        .iter()
        .fold((0.0, 0.0), |(v, e), &(rv, re)| (v + rv, e + re)))
}
