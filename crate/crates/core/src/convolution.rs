//! FFT-backed bulk evaluation of stencil sums over the solute indicator.
//!
//! Two quantities are needed in bulk:
//!
//! * for every stencil offset `o`, the number of solute cells whose `o`
//!   neighbour is solvent (the pair counts behind the surface double sum);
//! * for every cell, the weighted and unweighted number of solute cells in
//!   its stencil (the starting point of every flip cost).
//!
//! Both are correlations of the 0/1 solute indicator, which is zero outside
//! the box, so zero padding reproduces the "outside is solvent" convention
//! exactly. Integer-valued results are rounded back to integers.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::BinaryField;
use crate::kernels::KernelStencil;

/// Smallest integer `>= min` whose only prime factors are 2, 3, 5 and 7.
pub(crate) fn smooth_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5, 7] {
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

struct Fft3 {
    dims: [usize; 3],
    plans: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    fn new(dims: [usize; 3], forward: bool) -> Self {
        let mut planner = FftPlanner::new();
        let mut plan = |len| {
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        };
        let plans = [plan(dims[0]), plan(dims[1]), plan(dims[2])];
        Fft3 { dims, plans }
    }

    fn process(&self, data: &mut [Complex64]) {
        let [d0, d1, d2] = self.dims;
        debug_assert_eq!(data.len(), d0 * d1 * d2);
        let scratch_len = self.plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![Complex64::default(); scratch_len];
        // Axis 0 is contiguous.
        self.plans[0].process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); d1.max(d2)];
        for k in 0..d2 {
            for i in 0..d0 {
                let base = i + d0 * d1 * k;
                for j in 0..d1 {
                    line[j] = data[base + d0 * j];
                }
                self.plans[1].process_with_scratch(&mut line[..d1], &mut scratch);
                for j in 0..d1 {
                    data[base + d0 * j] = line[j];
                }
            }
        }
        for j in 0..d1 {
            for i in 0..d0 {
                let base = i + d0 * j;
                for k in 0..d2 {
                    line[k] = data[base + d0 * d1 * k];
                }
                self.plans[2].process_with_scratch(&mut line[..d2], &mut scratch);
                for k in 0..d2 {
                    data[base + d0 * d1 * k] = line[k];
                }
            }
        }
    }
}

#[inline]
fn wrap(o: i32, n: usize) -> usize {
    o.rem_euclid(n as i32) as usize
}

fn round_count(x: f64) -> Result<u64> {
    let r = x.round();
    if (x - r).abs() > 0.25 || r < -0.5 {
        return Err(Error::Numeric(format!(
            "FFT correlation lost integer precision ({x})"
        )));
    }
    Ok(r.max(0.0) as u64)
}

/// For each stencil offset `o`, the number of solute cells `i` with `i + o`
/// solvent (including positions outside the box).
pub fn solute_solvent_pair_counts(field: &BinaryField, stencil: &KernelStencil) -> Result<Vec<u64>> {
    let grid = field.grid();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut solute = 0u64;
    for l in 0..grid.cell_count() {
        if field.is_solute(l) {
            solute += 1;
            let c = grid.multi_index(l);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
    }
    if solute == 0 {
        return Ok(vec![0; stencil.len()]);
    }
    let reach = stencil.reach() as usize;
    let ext = [0, 1, 2].map(|a| hi[a] - lo[a] + 1);
    let dims = ext.map(|e| smooth_size(e + reach));
    let mut buf = vec![Complex64::default(); dims[0] * dims[1] * dims[2]];
    for l in 0..grid.cell_count() {
        if field.is_solute(l) {
            let c = grid.multi_index(l);
            let p = (c[0] - lo[0]) + dims[0] * ((c[1] - lo[1]) + dims[1] * (c[2] - lo[2]));
            buf[p] = Complex64::new(1.0, 0.0);
        }
    }
    Fft3::new(dims, true).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    Fft3::new(dims, false).process(&mut buf);
    let norm = (dims[0] * dims[1] * dims[2]) as f64;
    stencil
        .offsets()
        .iter()
        .map(|o| {
            let p = wrap(o[0], dims[0]) + dims[0] * (wrap(o[1], dims[1]) + dims[1] * wrap(o[2], dims[2]));
            let overlap = round_count(buf[p].re / norm)?;
            Ok(solute - overlap.min(solute))
        })
        .collect()
}

/// Per-cell stencil sums over solute cells, self included.
pub struct SoluteStencilSums {
    /// `Σ_o w(o) · [cell i + o is solute]`
    pub weighted: Vec<f64>,
    /// `Σ_o [cell i + o is solute]`
    pub count: Vec<u32>,
}

pub fn solute_stencil_sums(field: &BinaryField, stencil: &KernelStencil) -> Result<SoluteStencilSums> {
    let grid = field.grid();
    let n = grid.n();
    let reach = stencil.reach() as usize;
    let d = smooth_size(n + reach);
    let dims = [d, d, d];
    let wmax = stencil.max_weight();
    let wscale = if wmax > 0.0 { wmax } else { 1.0 };

    let mut kernel = vec![Complex64::default(); d * d * d];
    for (o, w) in stencil.offsets().iter().zip(stencil.weights()) {
        let p = wrap(o[0], d) + d * (wrap(o[1], d) + d * wrap(o[2], d));
        // Real part carries the normalized weight, imaginary part the count.
        kernel[p] = Complex64::new(w / wscale, 1.0);
    }
    let mut indicator = vec![Complex64::default(); d * d * d];
    for l in 0..grid.cell_count() {
        if field.is_solute(l) {
            let [i, j, k] = grid.multi_index(l);
            indicator[i + d * (j + d * k)] = Complex64::new(1.0, 0.0);
        }
    }
    let fwd = Fft3::new(dims, true);
    fwd.process(&mut kernel);
    fwd.process(&mut indicator);
    for (a, b) in indicator.iter_mut().zip(&kernel) {
        *a *= *b;
    }
    drop(kernel);
    Fft3::new(dims, false).process(&mut indicator);
    let norm = (d * d * d) as f64;
    let mut weighted = Vec::with_capacity(grid.cell_count());
    let mut count = Vec::with_capacity(grid.cell_count());
    for l in 0..grid.cell_count() {
        let [i, j, k] = grid.multi_index(l);
        let z = indicator[i + d * (j + d * k)] / norm;
        weighted.push(z.re * wscale);
        count.push(round_count(z.im)? as u32);
    }
    Ok(SoluteStencilSums { weighted, count })
}
