//! Greedy steepest-descent flipping driven by an indexed min-heap.
//!
//! `ΔG_i` is the energy change of negating cell `i`:
//! `ΔG_i = φ_i Σ_{j≠i} φ_j K_ij − φ_i (G^vdW_i + G^elec_i)`, where `j` runs
//! over the whole stencil and cells outside the box count as solvent.
//! After flipping `i`, each neighbour changes by `−2 φ_i φ_j K_ij` (with
//! `φ_i` taken before the flip) and `ΔG_i` changes sign.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::convolution::solute_stencil_sums;
use crate::error::{Error, Result};
use crate::grid::BinaryField;
use crate::heap::IndexedMinHeap;
use crate::kernels::KernelStencil;
use crate::site::SiteEnergies;

/// Cells with `ΔG ≥ −HEAP_THRESHOLD · max K` are never flipped; this keeps
/// rounding noise on exactly-neutral flips out of the descent.
pub const HEAP_THRESHOLD: f64 = 1e-10;
/// Tolerance of the exit certificate, in units of `max K`.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub surf: f64,
    /// Includes `vdw_outside`.
    pub vdw: f64,
    /// Includes `elec_outside`.
    pub elec: f64,
    pub vdw_outside: f64,
    pub elec_outside: f64,
    pub total: f64,
    pub flips: u64,
    pub wall_time: f64,
}

fn check_inputs(field: &BinaryField, stencil: &KernelStencil, site: &SiteEnergies) -> Result<()> {
    if !stencil.matches(field.grid()) {
        return Err(Error::Input(format!(
            "stencil built for h = {} used on a grid with h = {}",
            stencil.h(),
            field.grid().h()
        )));
    }
    if site.len() != field.grid().cell_count() {
        return Err(Error::Input(format!(
            "site energies hold {} cells, grid has {}",
            site.len(),
            field.grid().cell_count()
        )));
    }
    Ok(())
}

/// Energy of `field` evaluated from scratch.
pub fn total_energy(field: &BinaryField, stencil: &KernelStencil, site: &SiteEnergies) -> Result<EnergyBreakdown> {
    check_inputs(field, stencil, site)?;
    let surf = crate::surface::surface_energy(field, stencil)?;
    let (mut vdw, mut elec) = (0.0, 0.0);
    for l in 0..site.len() {
        if !field.is_solute(l) {
            vdw += site.g_vdw[l];
            elec += site.g_elec[l];
        }
    }
    vdw += site.outside_vdw;
    elec += site.outside_elec;
    Ok(EnergyBreakdown {
        surf,
        vdw,
        elec,
        vdw_outside: site.outside_vdw,
        elec_outside: site.outside_elec,
        total: surf + vdw + elec,
        flips: 0,
        wall_time: 0.0,
    })
}

/// From-scratch flip cost of cell `i`, O(stencil).
pub fn delta_g(i: usize, field: &BinaryField, stencil: &KernelStencil, site: &SiteEnergies) -> f64 {
    let grid = field.grid();
    let c = grid.multi_index(i).map(|x| x as i64);
    let center = stencil.center_position();
    let mut sum = 0.0;
    for (m, (o, &w)) in stencil.offsets().iter().zip(stencil.weights()).enumerate() {
        if m == center {
            continue;
        }
        let s = field.sign_at([c[0] + o[0] as i64, c[1] + o[1] as i64, c[2] + o[2] as i64]);
        sum += s as f64 * w;
    }
    let p = field.sign(i) as f64;
    p * sum - p * site.site(i)
}

/// Magnitude against which flip-cost rounding is judged.
pub fn delta_g_scale(i: usize, stencil: &KernelStencil, site: &SiteEnergies) -> f64 {
    stencil.off_center_total() + site.g_vdw[i].abs() + site.g_elec[i].abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub flip: u64,
    /// Flipped cell; `None` for the starting entry.
    pub cell: Option<u32>,
    pub delta_g: f64,
    pub energy: f64,
}

/// Cached flip costs, opposite-sign neighbour counts and the heap of
/// flippable cells for one field.
pub struct FlipState<'a> {
    field: BinaryField,
    stencil: &'a KernelStencil,
    site: &'a SiteEnergies,
    delta: Vec<f64>,
    /// Opposite-sign cells (outside positions included) within the stencil.
    opposite: Vec<u32>,
    heap: IndexedMinHeap,
    linear: Vec<isize>,
    threshold: f64,
    energy: f64,
    trace: Vec<TraceEntry>,
    flips: u64,
}

impl<'a> FlipState<'a> {
    pub fn new(field: BinaryField, stencil: &'a KernelStencil, site: &'a SiteEnergies) -> Result<Self> {
        check_inputs(&field, stencil, site)?;
        let grid = *field.grid();
        let n = grid.n() as isize;
        let sums = solute_stencil_sums(&field, stencil)?;
        let len = stencil.len() as u32;
        let k0 = stencil.center_weight();
        let ktot: f64 = stencil.weights().iter().sum();
        let off_center = stencil.off_center_total();
        let mut delta = Vec::with_capacity(grid.cell_count());
        let mut opposite = Vec::with_capacity(grid.cell_count());
        for l in 0..grid.cell_count() {
            let p = field.sign(l);
            let solute = sums.count[l];
            let pf = p as f64;
            let s = site.site(l);
            let (opp, dg) = if p < 0 {
                if solute == len {
                    (0, off_center + s)
                } else {
                    (len - solute, pf * (ktot - 2.0 * sums.weighted[l]) - k0 - pf * s)
                }
            } else if solute == 0 {
                (0, off_center - s)
            } else {
                (solute, pf * (ktot - 2.0 * sums.weighted[l]) - k0 - pf * s)
            };
            opposite.push(opp);
            delta.push(dg);
        }
        drop(sums);
        let threshold = HEAP_THRESHOLD * stencil.max_weight();
        let mut heap = IndexedMinHeap::new(grid.cell_count());
        for l in 0..grid.cell_count() {
            if opposite[l] > 0 && delta[l] < -threshold {
                heap.push_or_update(l, delta[l]);
            }
        }
        let linear = stencil
            .offsets()
            .iter()
            .map(|o| o[0] as isize + n * (o[1] as isize + n * o[2] as isize))
            .collect();
        let energy = total_energy(&field, stencil, site)?.total;
        Ok(FlipState {
            field,
            stencil,
            site,
            delta,
            opposite,
            heap,
            linear,
            threshold,
            energy,
            trace: vec![TraceEntry {
                flip: 0,
                cell: None,
                delta_g: 0.0,
                energy,
            }],
            flips: 0,
        })
    }

    pub fn field(&self) -> &BinaryField {
        &self.field
    }

    pub fn into_field(self) -> BinaryField {
        self.field
    }

    pub fn cached_delta_g(&self, i: usize) -> f64 {
        self.delta[i]
    }

    pub fn opposite_count(&self, i: usize) -> u32 {
        self.opposite[i]
    }

    pub fn is_interface_adjacent(&self, i: usize) -> bool {
        self.opposite[i] > 0
    }

    pub fn in_heap(&self, i: usize) -> bool {
        self.heap.contains(i)
    }

    pub fn heap_len(&self) -> usize {
        self.heap.len()
    }

    pub fn heap_is_consistent(&self) -> bool {
        self.heap.check_consistency()
    }

    /// Steepest available flip, if any.
    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.peek()
    }

    /// Energy tracked incrementally since construction.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceEntry> {
        std::mem::take(&mut self.trace)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[inline]
    fn refresh(&mut self, j: usize) {
        if self.opposite[j] > 0 && self.delta[j] < -self.threshold {
            self.heap.push_or_update(j, self.delta[j]);
        } else {
            self.heap.remove(j);
        }
    }

    #[inline]
    fn touch(&mut self, j: usize, p: i8, two_p: f64, w: f64) {
        let pj = self.field.sign(j);
        self.delta[j] -= two_p * pj as f64 * w;
        if pj == p {
            self.opposite[j] += 1;
        } else {
            self.opposite[j] -= 1;
        }
        self.refresh(j);
    }

    /// Negates cell `i` and updates every cached quantity within the stencil.
    /// Returns the flip cost that was applied.
    pub fn apply_flip(&mut self, i: usize) -> f64 {
        let grid = *self.field.grid();
        let n = grid.n();
        let p = self.field.sign(i);
        let two_p = 2.0 * p as f64;
        let applied = self.delta[i];
        let center = self.stencil.center_position();
        let stencil = self.stencil;
        let weights = stencil.weights();
        let reach = stencil.reach() as usize;
        let c = grid.multi_index(i);
        let interior = c.iter().all(|&x| x >= reach && x + reach < n);
        if interior {
            for m in 0..weights.len() {
                if m == center {
                    continue;
                }
                let j = (i as isize + self.linear[m]) as usize;
                self.touch(j, p, two_p, weights[m]);
            }
        } else {
            let ci = c.map(|x| x as i64);
            for (m, o) in stencil.offsets().iter().enumerate() {
                if m == center {
                    continue;
                }
                if let Some(j) = grid.checked_index([ci[0] + o[0] as i64, ci[1] + o[1] as i64, ci[2] + o[2] as i64]) {
                    self.touch(j, p, two_p, weights[m]);
                }
            }
        }
        self.field.flip(i);
        self.delta[i] = -applied;
        self.opposite[i] = stencil.len() as u32 - 1 - self.opposite[i];
        self.refresh(i);
        self.energy += applied;
        self.flips += 1;
        self.trace.push(TraceEntry {
            flip: self.flips,
            cell: Some(i as u32),
            delta_g: applied,
            energy: self.energy,
        });
        applied
    }

    /// Extracts the steepest flip and applies it.
    pub fn step(&mut self) -> Option<(usize, f64)> {
        let (i, _) = self.heap.peek()?;
        let applied = self.apply_flip(i);
        Some((i, applied))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub interface_cells: usize,
    /// Smallest recomputed flip cost among interface-adjacent cells.
    pub min_delta_g: f64,
    pub tolerance: f64,
}

/// Recomputes every interface-adjacent flip cost in bulk and reports the
/// smallest one.
pub fn certify(field: &BinaryField, stencil: &KernelStencil, site: &SiteEnergies) -> Result<Certificate> {
    check_inputs(field, stencil, site)?;
    let sums = solute_stencil_sums(field, stencil)?;
    let len = stencil.len() as u32;
    let k0 = stencil.center_weight();
    let ktot: f64 = stencil.weights().iter().sum();
    let mut interface_cells = 0;
    let mut min_delta_g = f64::INFINITY;
    for l in 0..site.len() {
        let p = field.sign(l);
        let solute = sums.count[l];
        let adjacent = if p < 0 { solute < len } else { solute > 0 };
        if !adjacent {
            continue;
        }
        interface_cells += 1;
        let pf = p as f64;
        let dg = pf * (ktot - 2.0 * sums.weighted[l]) - k0 - pf * site.site(l);
        min_delta_g = min_delta_g.min(dg);
    }
    Ok(Certificate {
        interface_cells,
        min_delta_g,
        tolerance: CERTIFICATE_TOLERANCE * stencil.max_weight(),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MinimizeOptions {
    /// Defaults to `10·n³`.
    pub max_flips: Option<u64>,
    /// Recompute the energy from scratch every this many flips and fail on
    /// disagreement (test aid; costs one FFT per audit).
    pub audit_every: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub init_secs: f64,
    pub flip_secs: f64,
    pub certify_secs: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub field: BinaryField,
    pub breakdown: EnergyBreakdown,
    pub trace: Vec<TraceEntry>,
    pub certificate: Certificate,
    pub timings: Timings,
}

fn audit(state: &FlipState) -> Result<()> {
    let fresh = total_energy(state.field(), state.stencil, state.site)?.total;
    let scale = state.stencil.off_center_total() * state.flips.max(1) as f64 + fresh.abs();
    if (fresh - state.energy).abs() > 1e-9 * scale {
        return Err(Error::Numeric(format!(
            "tracked energy {} drifted from recomputed {} after {} flips",
            state.energy, fresh, state.flips
        )));
    }
    Ok(())
}

/// Flips the steepest cell until no interface-adjacent flip lowers the energy.
pub fn minimize(
    field: BinaryField,
    stencil: &KernelStencil,
    site: &SiteEnergies,
    options: &MinimizeOptions,
) -> Result<MinimizeOutcome> {
    let start = Instant::now();
    let n3 = field.grid().cell_count() as u64;
    let max_flips = options.max_flips.unwrap_or(10 * n3);
    let mut state = FlipState::new(field, stencil, site)?;
    let init_secs = start.elapsed().as_secs_f64();
    log::info!(
        "initialized: E = {:.6}, {} flippable cells ({init_secs:.2} s)",
        state.energy(),
        state.heap_len()
    );

    let flip_start = Instant::now();
    while state.step().is_some() {
        if state.flips() > max_flips {
            return Err(Error::Numeric(format!(
                "flip cap of {max_flips} exceeded; the heap bookkeeping is inconsistent"
            )));
        }
        if let Some(every) = options.audit_every {
            if every > 0 && state.flips() % every == 0 {
                audit(&state)?;
            }
        }
        if state.flips() % 100_000 == 0 {
            log::debug!("{} flips, E = {:.6}, heap {}", state.flips(), state.energy(), state.heap_len());
        }
    }
    let flip_secs = flip_start.elapsed().as_secs_f64();
    log::info!("{} flips in {flip_secs:.2} s", state.flips());

    let cert_start = Instant::now();
    let flips = state.flips();
    let trace = state.take_trace();
    let field = state.into_field();
    let certificate = certify(&field, stencil, site)?;
    if certificate.min_delta_g < -certificate.tolerance {
        return Err(Error::Numeric(format!(
            "descent stopped with a flip of cost {} still available",
            certificate.min_delta_g
        )));
    }
    let mut breakdown = total_energy(&field, stencil, site)?;
    let certify_secs = cert_start.elapsed().as_secs_f64();
    breakdown.flips = flips;
    breakdown.wall_time = start.elapsed().as_secs_f64();
    Ok(MinimizeOutcome {
        field,
        breakdown,
        trace,
        certificate,
        timings: Timings {
            init_secs,
            flip_secs,
            certify_secs,
        },
    })
}
