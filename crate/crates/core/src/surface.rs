//! Interface area and surface energy of a binary field.
//!
//! The surface energy is the double sum of pair weights over (solute,
//! solvent) cell pairs within the kernel radius, with cells outside the box
//! counted as solvent. Dividing by γ₀ gives the area estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convolution::solute_solvent_pair_counts;
use crate::error::{Error, Result};
use crate::grid::{BinaryField, Grid, Region};
use crate::kernels::{KernelKind, KernelSpec, KernelStencil};
use crate::quadrature::least_squares_slope;

fn check_grid(field: &BinaryField, stencil: &KernelStencil) -> Result<()> {
    if !stencil.matches(field.grid()) {
        return Err(Error::Input(format!(
            "stencil built for h = {} used on a grid with h = {}",
            stencil.h(),
            field.grid().h()
        )));
    }
    Ok(())
}

/// Surface energy `Σ_{i∈Ω_m} Σ_{j∈Ω_w, |x_j−x_i|≤κ} K_ij`.
///
/// Evaluated as `Σ_o K(o) · N(o)` where `N(o)` counts solute cells whose
/// `o` neighbour is solvent; the counts are exact integers.
pub fn surface_energy(field: &BinaryField, stencil: &KernelStencil) -> Result<f64> {
    check_grid(field, stencil)?;
    let counts = solute_solvent_pair_counts(field, stencil)?;
    Ok(counts
        .iter()
        .zip(stencil.weights())
        .map(|(&c, &w)| c as f64 * w)
        .sum())
}

/// Same double sum, accumulated cell by cell over solute cells that have a
/// solvent cell in their stencil. Cost is O(interface cells × stencil).
pub fn surface_energy_direct(field: &BinaryField, stencil: &KernelStencil) -> Result<f64> {
    check_grid(field, stencil)?;
    let grid = field.grid();
    let mut total = 0.0;
    for l in 0..grid.cell_count() {
        if !field.is_solute(l) {
            continue;
        }
        let c = grid.multi_index(l).map(|x| x as i64);
        let mut cell = 0.0;
        for (o, &w) in stencil.offsets().iter().zip(stencil.weights()) {
            if field.sign_at([c[0] + o[0] as i64, c[1] + o[1] as i64, c[2] + o[2] as i64]) > 0 {
                cell += w;
            }
        }
        total += cell;
    }
    Ok(total)
}

/// Area estimate: surface energy divided by γ₀.
pub fn estimate_area(field: &BinaryField, stencil: &KernelStencil) -> Result<f64> {
    Ok(surface_energy(field, stencil)? / stencil.gamma0())
}

/// Digitized ball: cells whose centers lie within `radius` of `center`.
pub fn ball_field(grid: Grid, center: [f64; 3], radius: f64) -> BinaryField {
    BinaryField::from_fn(grid, |x| {
        let d2 = (0..3).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>();
        if d2 <= radius * radius {
            Region::Solute
        } else {
            Region::Solvent
        }
    })
}

/// Parameters of the perturbed-sphere area study.
#[derive(Debug, Clone, Serialize)]
pub struct AreaStudy {
    pub kernel: KernelKind,
    pub size_param: f64,
    pub half_width: f64,
    pub radius: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
    pub trials: usize,
    /// Center offsets are drawn uniformly from `[-shift·h, shift·h]³`.
    pub shift: f64,
    pub seed: u64,
}

impl Default for AreaStudy {
    fn default() -> Self {
        AreaStudy {
            kernel: KernelKind::SinSquared,
            size_param: 3.0,
            half_width: 1.0,
            radius: 0.5,
            n_min: 20,
            n_max: 200,
            n_step: 5,
            trials: 6,
            shift: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AreaStudyRow {
    pub n: usize,
    pub h: f64,
    pub kappa: f64,
    pub trials: usize,
    pub mean_rel_err: f64,
    /// Least-squares slope of log(error) against log(n) over rows so far.
    pub slope_so_far: Option<f64>,
}

impl AreaStudy {
    pub fn resolutions(&self) -> Vec<usize> {
        (self.n_min..=self.n_max).step_by(self.n_step.max(1)).collect()
    }

    /// Runs the study, calling `on_row` as each resolution finishes.
    pub fn run(&self, mut on_row: impl FnMut(&AreaStudyRow)) -> Result<Vec<AreaStudyRow>> {
        if self.trials == 0 {
            return Err(Error::Config("area study needs at least one trial".into()));
        }
        let exact = 4.0 * std::f64::consts::PI * self.radius * self.radius;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut rows = Vec::new();
        let (mut logn, mut loge) = (Vec::new(), Vec::new());
        for n in self.resolutions() {
            let grid = Grid::new(self.half_width, n)?;
            let spec = KernelSpec::for_grid(self.kernel.clone(), self.size_param, grid.h())?;
            let stencil = KernelStencil::build(&spec, &grid, 1.0)?;
            let mut err_sum = 0.0;
            for _ in 0..self.trials {
                let s = self.shift * grid.h();
                let center = [0; 3].map(|_| rng.gen_range(-s..=s));
                let field = ball_field(grid, center, self.radius);
                let area = estimate_area(&field, &stencil)?;
                err_sum += ((area - exact) / exact).abs();
            }
            let mean = err_sum / self.trials as f64;
            logn.push((n as f64).ln());
            loge.push(mean.ln());
            let row = AreaStudyRow {
                n,
                h: grid.h(),
                kappa: spec.kappa,
                trials: self.trials,
                mean_rel_err: mean,
                slope_so_far: least_squares_slope(&logn, &loge),
            };
            on_row(&row);
            rows.push(row);
        }
        Ok(rows)
    }
}
