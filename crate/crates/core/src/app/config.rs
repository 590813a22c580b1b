//! Run configuration: TOML file, CLI overrides, and up-front validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::initials::InitKind;
use crate::kernels::{KernelKind, KernelSpec, DEFAULT_MAX_OFFSETS};
use crate::site::{Atom, OutsideSampling, PhysicalParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// `sin2`/`sin_squared`, `cos1`/`cos_plus_one`, or `tabulated`.
    pub kind: String,
    #[serde(rename = "C")]
    pub size_param: f64,
    /// `(r, K(r))` samples, used when `kind = "tabulated"`.
    pub table: Option<Vec<(f64, f64)>>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kind: "sin2".into(),
            size_param: 3.0,
            table: None,
        }
    }
}

impl KernelConfig {
    pub fn kernel_kind(&self) -> Result<KernelKind> {
        match (self.kind.as_str(), &self.table) {
            ("tabulated" | "user_tabulated", Some(t)) => Ok(KernelKind::UserTabulated(t.clone())),
            ("tabulated" | "user_tabulated", None) => {
                Err(Error::Config("tabulated kernel requires kernel.table".into()))
            }
            (name, _) => KernelKind::from_name(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Box half-width `a`; the box is `[-a, a]³`.
    pub a: f64,
    /// Cells per side.
    pub n: usize,
    pub init: InitKind,
    /// Start from a saved mask instead of `init`.
    pub initial_mask: Option<PathBuf>,
    /// Required clearance between atoms and the box wall. Defaults to
    /// `max σ + κ`.
    pub margin: Option<f64>,
    pub seed: u64,
    /// Output prefix; nothing is written when unset.
    pub output: Option<PathBuf>,
    /// Directory for cached site energies.
    pub site_cache: Option<PathBuf>,
    pub max_stencil_offsets: usize,
    /// Add the analytic-quadrature contribution of the region beyond the box.
    pub outside_correction: bool,
    pub kernel: KernelConfig,
    pub physical: PhysicalParams,
    pub outside: OutsideSampling,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            a: 10.0,
            n: 100,
            init: InitKind::Tight,
            initial_mask: None,
            margin: None,
            seed: 0,
            output: None,
            site_cache: None,
            max_stencil_offsets: DEFAULT_MAX_OFFSETS,
            outside_correction: true,
            kernel: KernelConfig::default(),
            physical: PhysicalParams::default(),
            outside: OutsideSampling::default(),
        }
    }
}

/// Quantities derived from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub grid: Grid,
    pub spec: KernelSpec,
    pub margin: f64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Checks everything that can be checked without heavy computation.
    pub fn validate(&self, atoms: &[Atom]) -> Result<Resolved> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        let grid = Grid::new(self.a, self.n).map_err(|e| Error::Config(e.to_string()))?;
        self.physical.validate()?;
        let spec = KernelSpec::for_grid(self.kernel.kernel_kind()?, self.kernel.size_param, grid.h())?;
        if spec.kappa < grid.h() {
            return Err(Error::Config(format!(
                "kernel radius κ = {:.6} is smaller than h = {:.6}; raise C or n",
                spec.kappa,
                grid.h()
            )));
        }
        let radius = spec.kappa / grid.h();
        let estimate = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
        if estimate > self.max_stencil_offsets as f64 {
            return Err(Error::Config(format!(
                "kernel stencil would hold about {estimate:.0} offsets (cap {}); lower C or n",
                self.max_stencil_offsets
            )));
        }
        for a in atoms {
            a.validate()?;
        }
        let max_sigma = atoms.iter().map(|a| a.sigma).fold(0.0, f64::max);
        let margin = self.margin.unwrap_or(max_sigma + spec.kappa);
        if !(margin >= 0.0) {
            return Err(Error::Config(format!("margin must be non-negative, got {margin}")));
        }
        for a in atoms {
            let reach = a.position.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if reach + margin > self.a {
                return Err(Error::Config(format!(
                    "box [-{a}, {a}]³ too small: atom {name:?} at {pos:?} needs half-width ≥ {need:.4} (margin {margin:.4})",
                    a = self.a,
                    name = a.name,
                    pos = a.position,
                    need = reach + margin
                )));
            }
        }
        if self.outside_correction && atoms.iter().any(|a| a.position.iter().any(|c| c.abs() >= self.a)) {
            return Err(Error::Config("atoms must lie strictly inside the box".into()));
        }
        Ok(Resolved { grid, spec, margin })
    }

    pub fn sampling(&self) -> Option<&OutsideSampling> {
        self.outside_correction.then_some(&self.outside)
    }
}
