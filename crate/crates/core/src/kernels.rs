//! Compact radial kernels, their area-normalization constant, and the
//! discrete stencil of pair weights used by the surface term.
//!
//! For a kernel `K` supported on the unit ball and a radius `κ`, the
//! interface area is recovered from the solute/solvent pair integral
//! through the constant
//!
//! ```text
//! C_{K,κ,d} = ( κ^{d+1} · C_d · ∫₀¹ K(r) r^d dr )⁻¹,
//! C_d       = 2 π^{(d-1)/2} / ((d-1) Γ((d-1)/2))
//! ```
//!
//! so `C_3 = π` and `C_2 = 2`. On a grid with spacing `h` the pair weight
//! for an offset `o` (in cells) is `γ₀ · C_{K,κ,3} · h⁶ · K(|o| h / κ)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::adaptive_simpson;

/// Upper bound on stencil size unless the caller asks for more.
pub const DEFAULT_MAX_OFFSETS: usize = 4_000_000;

/// Radial profile of the kernel on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "table")]
pub enum KernelKind {
    /// `sin²(πr)`
    SinSquared,
    /// `cos(πr) + 1`
    CosPlusOne,
    /// Piecewise-linear interpolation of `(r, K(r))` samples.
    UserTabulated(Vec<(f64, f64)>),
}

impl KernelKind {
    /// Parses the short CLI names (`sin2`, `cos1`) and the long forms.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sin2" | "sin_squared" => Ok(KernelKind::SinSquared),
            "cos1" | "cos_plus_one" => Ok(KernelKind::CosPlusOne),
            other => Err(Error::Config(format!(
                "unknown kernel {other:?} (expected sin2 or cos1)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::SinSquared => "sin_squared",
            KernelKind::CosPlusOne => "cos_plus_one",
            KernelKind::UserTabulated(_) => "user_tabulated",
        }
    }

    fn validate(&self) -> Result<()> {
        let KernelKind::UserTabulated(table) = self else {
            return Ok(());
        };
        if table.len() < 2 {
            return Err(Error::Config("kernel table needs at least two samples".into()));
        }
        if table[0].0 != 0.0 {
            return Err(Error::Config("kernel table must start at r = 0".into()));
        }
        if table.last().is_none_or(|s| s.0 < 1.0) {
            return Err(Error::Config("kernel table must extend to r = 1".into()));
        }
        for w in table.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Config("kernel table radii must be strictly increasing".into()));
            }
        }
        if table.iter().any(|&(r, k)| !r.is_finite() || !k.is_finite() || k < 0.0) {
            return Err(Error::Config("kernel table values must be finite and non-negative".into()));
        }
        Ok(())
    }

    #[inline]
    fn profile(&self, r: f64) -> f64 {
        if r > 1.0 {
            return 0.0;
        }
        match self {
            KernelKind::SinSquared => {
                let s = (PI * r).sin();
                s * s
            }
            KernelKind::CosPlusOne => (PI * r).cos() + 1.0,
            KernelKind::UserTabulated(table) => {
                let pos = table.partition_point(|&(x, _)| x <= r);
                if pos == 0 {
                    return table[0].1;
                }
                if pos == table.len() {
                    return table[pos - 1].1;
                }
                let (x0, y0) = table[pos - 1];
                let (x1, y1) = table[pos];
                y0 + (y1 - y0) * (r - x0) / (x1 - x0)
            }
        }
    }
}

/// A kernel profile together with its radius κ and the dimension it is
/// normalized for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Size parameter `C` in `κ = C·√h`; `None` when κ was given directly.
    pub size_param: Option<f64>,
    pub kappa: f64,
    pub dimension: u32,
}

impl KernelSpec {
    /// `κ = C·√h` in three dimensions.
    pub fn for_grid(kind: KernelKind, size_param: f64, h: f64) -> Result<Self> {
        if !(size_param.is_finite() && size_param > 0.0) {
            return Err(Error::Config(format!("kernel size parameter C must be positive, got {size_param}")));
        }
        let mut spec = Self::with_radius(kind, size_param * h.sqrt())?;
        spec.size_param = Some(size_param);
        Ok(spec)
    }

    pub fn with_radius(kind: KernelKind, kappa: f64) -> Result<Self> {
        kind.validate()?;
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Config(format!("kernel radius must be positive, got {kappa}")));
        }
        Ok(KernelSpec {
            kind,
            size_param: None,
            kappa,
            dimension: 3,
        })
    }

    pub fn with_dimension(mut self, d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::Config(format!("dimension must be at least 2, got {d}")));
        }
        self.dimension = d;
        Ok(self)
    }

    /// `K(r)`: the profile on `[0, 1]`, zero beyond.
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Input(format!("kernel argument must be non-negative, got {r}")));
        }
        Ok(self.kind.profile(r))
    }

    /// `∫₀¹ K(r) r^d dr`.
    pub fn radial_moment(&self) -> Result<f64> {
        let d = self.dimension as i32;
        adaptive_simpson(|r| self.kind.profile(r) * r.powi(d), 0.0, 1.0, 1e-12)
    }

    /// Area normalization constant `C_{K,κ,d}`.
    pub fn constant(&self) -> Result<f64> {
        let moment = self.radial_moment()?;
        if !(moment > 0.0) {
            return Err(Error::Config("kernel has a vanishing radial moment".into()));
        }
        let d = self.dimension;
        Ok(1.0 / (self.kappa.powi(d as i32 + 1) * sphere_cap_factor(d) * moment))
    }
}

/// `C_d = ∫_{S^{d-1} ∩ {x_d > 0}} x_d dx`.
pub fn sphere_cap_factor(d: u32) -> f64 {
    match d {
        2 => 2.0,
        3 => PI,
        _ => {
            let half = (d as f64 - 1.0) / 2.0;
            2.0 * PI.powf(half) / ((d as f64 - 1.0) * statrs::function::gamma::gamma(half))
        }
    }
}

/// Precomputed pair weights `K_ij` indexed by lattice offset.
#[derive(Debug, Clone)]
pub struct KernelStencil {
    offsets: Vec<[i32; 3]>,
    weights: Vec<f64>,
    normalization: f64,
    spec: KernelSpec,
    h: f64,
    gamma0: f64,
    reach: i32,
}

impl KernelStencil {
    pub fn build(spec: &KernelSpec, grid: &Grid, gamma0: f64) -> Result<Self> {
        Self::build_capped(spec, grid, gamma0, DEFAULT_MAX_OFFSETS)
    }

    /// Enumerates every offset `o` with `|o|·h ≤ κ`, failing if the count
    /// would exceed `max_offsets`.
    pub fn build_capped(spec: &KernelSpec, grid: &Grid, gamma0: f64, max_offsets: usize) -> Result<Self> {
        if spec.dimension != 3 {
            return Err(Error::Config("grid stencils are three-dimensional".into()));
        }
        if !(gamma0.is_finite() && gamma0 > 0.0) {
            return Err(Error::Config(format!("surface tension must be positive, got {gamma0}")));
        }
        let h = grid.h();
        if spec.kappa < h {
            return Err(Error::Config(format!(
                "kernel radius κ = {:.6} is smaller than the grid spacing h = {:.6}; increase C or n",
                spec.kappa, h
            )));
        }
        let radius = spec.kappa / h;
        let estimate = 4.0 / 3.0 * PI * radius.powi(3);
        if estimate > max_offsets as f64 {
            return Err(Error::Config(format!(
                "kernel stencil would hold about {estimate:.0} offsets (cap {max_offsets}); \
                 κ/h = {radius:.1}, lower C or n, or raise the cap"
            )));
        }
        let normalization = spec.constant()?;
        let scale = gamma0 * normalization * h.powi(6);
        let r2_max = radius * radius * (1.0 + 1e-12);
        let reach = radius.floor() as i32;
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let r2 = (dx * dx + dy * dy + dz * dz) as f64;
                    if r2 > r2_max {
                        continue;
                    }
                    let r = (r2.sqrt() / radius).min(1.0);
                    offsets.push([dx, dy, dz]);
                    weights.push(scale * spec.kind.profile(r));
                }
            }
        }
        Ok(KernelStencil {
            offsets,
            weights,
            normalization,
            spec: spec.clone(),
            h,
            gamma0,
            reach,
        })
    }

    #[inline]
    pub fn offsets(&self) -> &[[i32; 3]] {
        &self.offsets
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// `C_{K,κ,3}`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn kappa(&self) -> f64 {
        self.spec.kappa
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// Largest |component| of any offset.
    pub fn reach(&self) -> i32 {
        self.reach
    }

    /// Weight of the zero offset.
    pub fn center_weight(&self) -> f64 {
        self.weights[self.center_position()]
    }

    pub(crate) fn center_position(&self) -> usize {
        self.offsets.len() / 2
    }

    /// Sum of all weights except the center one.
    pub fn off_center_total(&self) -> f64 {
        self.weights.iter().sum::<f64>() - self.center_weight()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub(crate) fn matches(&self, grid: &Grid) -> bool {
        (self.h - grid.h()).abs() <= 1e-12 * grid.h()
    }
}
