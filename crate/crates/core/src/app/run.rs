//! End-to-end pipelines behind the CLI subcommands and their artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Resolved, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{connected_components, BinaryField, Grid, Region};
use crate::kernels::KernelStencil;
use crate::mesh::extract_surface_mesh;
use crate::minimizer::{minimize, total_energy, Certificate, EnergyBreakdown, MinimizeOptions, TraceEntry};
use crate::site::{precompute_site_energies, Atom, SiteEnergies};
use crate::surface::{AreaStudy, AreaStudyRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub stencil_secs: f64,
    pub site_secs: f64,
    /// Heap and flip-cost construction.
    pub init_secs: f64,
    /// Flipping phase only.
    pub flip_secs: f64,
    pub certify_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutsideCorrections {
    pub vdw: f64,
    pub elec: f64,
}

/// Everything needed to rebuild the energy model of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEcho {
    pub config: RunConfig,
    pub atoms: Vec<Atom>,
    pub h: f64,
    pub kappa: f64,
    pub kernel_constant: f64,
    pub stencil_offsets: usize,
    pub margin: f64,
    pub coulomb_constant: f64,
}

/// Contents of `PREFIX.energy.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub breakdown: EnergyBreakdown,
    pub outside_corrections: OutsideCorrections,
    pub initial_energy: f64,
    pub flips: u64,
    pub solute_cells: usize,
    pub solute_components: usize,
    pub boundary_solute_cells: usize,
    pub certificate: Certificate,
    pub timings: RunTimings,
    pub parameters: ParameterEcho,
}

impl RunReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug)]
pub struct RunResult {
    pub report: RunReport,
    pub field: BinaryField,
    pub trace: Vec<TraceEntry>,
    /// Files written, in order.
    pub artifacts: Vec<PathBuf>,
}

/// Site energies, read from or written to the cache directory when one is set.
pub fn site_energies(config: &RunConfig, grid: &Grid, atoms: &[Atom]) -> Result<SiteEnergies> {
    let sampling = config.sampling();
    let Some(dir) = &config.site_cache else {
        return precompute_site_energies(grid, atoms, &config.physical, sampling);
    };
    let key = SiteEnergies::cache_key(grid, atoms, &config.physical, sampling);
    let path = dir.join(format!("{key}.site"));
    if path.exists() {
        match SiteEnergies::load(&path) {
            Ok(site) if site.len() == grid.cell_count() => {
                log::info!("site energies loaded from {}", path.display());
                return Ok(site);
            }
            Ok(_) => log::warn!("ignoring cache {} of the wrong size", path.display()),
            Err(e) => log::warn!("ignoring unreadable cache: {e}"),
        }
    }
    let site = precompute_site_energies(grid, atoms, &config.physical, sampling)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    site.save(&path)?;
    Ok(site)
}

fn initial_field(config: &RunConfig, grid: Grid, atoms: &[Atom]) -> Result<BinaryField> {
    let Some(path) = &config.initial_mask else {
        return config.init.build(grid, atoms);
    };
    let field = BinaryField::load_mask(path)?;
    let g = field.grid();
    if g.n() != grid.n() || (g.half_width() - grid.half_width()).abs() > 1e-12 * grid.half_width() {
        return Err(Error::Config(format!(
            "initial mask grid (n = {}, a = {}) differs from the run grid (n = {}, a = {})",
            g.n(),
            g.half_width(),
            grid.n(),
            grid.half_width()
        )));
    }
    Ok(field)
}

fn echo(config: &RunConfig, atoms: &[Atom], resolved: &Resolved, stencil: &KernelStencil) -> ParameterEcho {
    ParameterEcho {
        config: config.clone(),
        atoms: atoms.to_vec(),
        h: resolved.grid.h(),
        kappa: resolved.spec.kappa,
        kernel_constant: stencil.normalization(),
        stencil_offsets: stencil.len(),
        margin: resolved.margin,
        coulomb_constant: config.physical.coulomb_constant,
    }
}

/// Initial field → site energies → descent → artifacts.
pub fn run_minimize(config: &RunConfig, atoms: &[Atom]) -> Result<RunResult> {
    let start = Instant::now();
    if atoms.is_empty() {
        return Err(Error::Input("minimize needs at least one atom".into()));
    }
    let resolved = config.validate(atoms)?;
    let grid = resolved.grid;

    let t = Instant::now();
    let stencil = KernelStencil::build_capped(&resolved.spec, &grid, config.physical.gamma0, config.max_stencil_offsets)?;
    let stencil_secs = t.elapsed().as_secs_f64();
    log::info!("stencil: {} offsets, κ = {:.4}, h = {:.4}", stencil.len(), stencil.kappa(), grid.h());

    let t = Instant::now();
    let site = site_energies(config, &grid, atoms)?;
    let site_secs = t.elapsed().as_secs_f64();

    let field = initial_field(config, grid, atoms)?;
    field.warn_if_touching_boundary();
    let outcome = minimize(field, &stencil, &site, &MinimizeOptions::default())?;
    let field = outcome.field;
    let components = connected_components(&field, Region::Solute).count;
    let report = RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        breakdown: outcome.breakdown,
        outside_corrections: OutsideCorrections {
            vdw: site.outside_vdw,
            elec: site.outside_elec,
        },
        initial_energy: outcome.trace.first().map_or(f64::NAN, |e| e.energy),
        flips: outcome.breakdown.flips,
        solute_cells: field.solute_count(),
        solute_components: components,
        boundary_solute_cells: field.boundary_solute_cells(),
        certificate: outcome.certificate,
        timings: RunTimings {
            stencil_secs,
            site_secs,
            init_secs: outcome.timings.init_secs,
            flip_secs: outcome.timings.flip_secs,
            certify_secs: outcome.timings.certify_secs,
            total_secs: start.elapsed().as_secs_f64(),
        },
        parameters: echo(config, atoms, &resolved, &stencil),
    };
    let mut result = RunResult {
        report,
        field,
        trace: outcome.trace,
        artifacts: Vec::new(),
    };
    if let Some(prefix) = &config.output {
        result.artifacts = write_artifacts(prefix, &result)?;
    }
    Ok(result)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_trace<W: Write>(trace: &[TraceEntry], mut out: W) -> std::io::Result<()> {
    writeln!(out, "flip,cell,delta_g,energy")?;
    for e in trace {
        match e.cell {
            Some(c) => writeln!(out, "{},{},{},{}", e.flip, c, e.delta_g, e.energy)?,
            None => writeln!(out, "{},,{},{}", e.flip, e.delta_g, e.energy)?,
        }
    }
    Ok(())
}

/// Writes `PREFIX.energy.json`, `.mask.bin`, `.obj` and `.trace.csv`.
pub fn write_artifacts(prefix: &Path, result: &RunResult) -> Result<Vec<PathBuf>> {
    let json = with_suffix(prefix, ".energy.json");
    let mut out = create(&json)?;
    serde_json::to_writer_pretty(&mut out, &result.report)?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| Error::io(&json, e))?;

    let mask = with_suffix(prefix, ".mask.bin");
    if let Some(dir) = mask.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    result.field.save_mask(&mask)?;

    let obj = with_suffix(prefix, ".obj");
    let mut out = create(&obj)?;
    extract_surface_mesh(&result.field)
        .write_obj(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&obj, e))?;

    let trace = with_suffix(prefix, ".trace.csv");
    let mut out = create(&trace)?;
    write_trace(&result.trace, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&trace, e))?;
    Ok(vec![json, mask, obj, trace])
}

/// Breakdown of an arbitrary field under the configuration's energy model.
pub fn recompute_energy(config: &RunConfig, atoms: &[Atom], field: &BinaryField) -> Result<EnergyBreakdown> {
    let resolved = config.validate(atoms)?;
    let g = field.grid();
    if g.n() != resolved.grid.n() || g.half_width() != resolved.grid.half_width() {
        return Err(Error::Config(format!(
            "mask grid (n = {}, a = {}) does not match the configuration (n = {}, a = {})",
            g.n(),
            g.half_width(),
            resolved.grid.n(),
            resolved.grid.half_width()
        )));
    }
    let stencil = KernelStencil::build_capped(&resolved.spec, g, config.physical.gamma0, config.max_stencil_offsets)?;
    let site = site_energies(config, g, atoms)?;
    total_energy(field, &stencil, &site)
}

/// Recomputes the breakdown of a saved mask with the parameters echoed in a report.
pub fn recompute_from_report(report: &RunReport, field: &BinaryField) -> Result<EnergyBreakdown> {
    recompute_energy(&report.parameters.config, &report.parameters.atoms, field)
}

pub const AREA_CSV_HEADER: &str = "n,h,kappa,trials,mean_rel_err,slope_so_far";

pub fn area_csv_row(row: &AreaStudyRow) -> String {
    let slope = row.slope_so_far.map_or(String::new(), |s| s.to_string());
    format!("{},{},{},{},{},{}", row.n, row.h, row.kappa, row.trials, row.mean_rel_err, slope)
}

/// Runs the sphere-area study, streaming CSV rows to `out` as they finish.
pub fn run_area_convergence<W: Write>(study: &AreaStudy, mut out: W) -> Result<Vec<AreaStudyRow>> {
    let io = |e: std::io::Error| Error::Numeric(format!("writing study output: {e}"));
    writeln!(out, "{AREA_CSV_HEADER}").map_err(io)?;
    let mut write_err = None;
    let rows = study.run(|row| {
        if write_err.is_none() {
            if let Err(e) = writeln!(out, "{}", area_csv_row(row)).and_then(|_| out.flush()) {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(io(e));
    }
    Ok(rows)
}
