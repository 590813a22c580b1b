use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use voxsolv::app::{self, RunConfig, RunReport};
use voxsolv::oracle::{default_bracket, one_atom_minimize, OneAtomParams};
use voxsolv::surface::AreaStudy;
use voxsolv::{BinaryField, InitKind, KernelKind, PhysicalParams};

#[derive(Parser)]
#[command(name = "voxsolv", version, about = "Binary level-set solver for implicit-solvent free energies")]
struct Cli {
    /// Worker threads for the parallel precomputation (default: all cores).
    #[arg(long, global = true, env = "VOXSOLV_THREADS")]
    threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relax a solute region by steepest-descent cell flipping.
    Minimize(MinimizeArgs),
    /// Sphere-area convergence study of the surface estimator.
    AreaConvergence(AreaArgs),
    /// Closed-form one-atom energy minimum.
    Oracle(OracleArgs),
    /// Recompute the energy breakdown of a saved mask.
    Energy(EnergyArgs),
}

#[derive(Args, Default)]
struct PhysicalArgs {
    /// Surface tension γ₀ (kBT/Å²).
    #[arg(long)]
    gamma0: Option<f64>,
    /// Solvent density ρ_w (Å⁻³).
    #[arg(long)]
    rho_w: Option<f64>,
    #[arg(long)]
    eps_m: Option<f64>,
    #[arg(long)]
    eps_w: Option<f64>,
    /// Coulomb constant 1/(4πε₀) in kBT·Å/e².
    #[arg(long)]
    k_e: Option<f64>,
}

impl PhysicalArgs {
    fn apply(&self, p: &mut PhysicalParams) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.gamma0, self.gamma0);
        set(&mut p.rho_w, self.rho_w);
        set(&mut p.eps_m, self.eps_m);
        set(&mut p.eps_w, self.eps_w);
        set(&mut p.coulomb_constant, self.k_e);
    }
}

#[derive(Args)]
struct ModelArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Atom file: `name x y z Q sigma epsilon` per line.
    #[arg(long)]
    atoms: Option<PathBuf>,
    /// Box half-width a (box is [-a, a]³).
    #[arg(long = "box")]
    half_width: Option<f64>,
    /// Cells per side.
    #[arg(long)]
    n: Option<usize>,
    /// sin2 or cos1.
    #[arg(long)]
    kernel: Option<String>,
    /// Kernel size parameter in κ = C·√h.
    #[arg(long = "C")]
    size_param: Option<f64>,
    /// Required atom-to-wall clearance (default: max σ + κ).
    #[arg(long)]
    margin: Option<f64>,
    /// Skip the contribution of the region outside the box.
    #[arg(long)]
    no_outside: bool,
    /// Cache directory for site energies.
    #[arg(long)]
    site_cache: Option<PathBuf>,
    #[command(flatten)]
    physical: PhysicalArgs,
}

impl ModelArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(a) = self.half_width {
            cfg.a = a;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(k) = &self.kernel {
            KernelKind::from_name(k)?;
            cfg.kernel.kind = k.clone();
        }
        if let Some(c) = self.size_param {
            cfg.kernel.size_param = c;
        }
        if self.margin.is_some() {
            cfg.margin = self.margin;
        }
        if self.no_outside {
            cfg.outside_correction = false;
        }
        if self.site_cache.is_some() {
            cfg.site_cache = self.site_cache.clone();
        }
        self.physical.apply(&mut cfg.physical);
        Ok(cfg)
    }

    fn atoms(&self) -> Result<Vec<voxsolv::Atom>> {
        match &self.atoms {
            Some(path) => Ok(app::load_atoms(path)?),
            None => Ok(Vec::new()),
        }
    }
}

#[derive(Args)]
struct MinimizeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Initial field: tight (union of σ-balls) or loose (all solute).
    #[arg(long)]
    init: Option<InitKind>,
    /// Start from a saved mask instead.
    #[arg(long, conflicts_with = "init")]
    init_mask: Option<PathBuf>,
    /// Output prefix for .energy.json, .mask.bin, .obj and .trace.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AreaArgs {
    #[arg(long, default_value = "sin2")]
    kernel: String,
    #[arg(long = "C", default_value_t = 3.0)]
    size_param: f64,
    #[arg(long, default_value_t = 20)]
    n_min: usize,
    #[arg(long, default_value_t = 200)]
    n_max: usize,
    #[arg(long, default_value_t = 5)]
    n_step: usize,
    #[arg(long, default_value_t = 6)]
    trials: usize,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long = "box", default_value_t = 1.0)]
    half_width: f64,
    /// Center offsets are uniform in [-shift·h, shift·h]³.
    #[arg(long, default_value_t = 0.5)]
    shift: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 3.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    charge: f64,
    /// Search interval for R (default: 0.5σ to 3σ).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    bracket: Option<Vec<f64>>,
    #[command(flatten)]
    physical: PhysicalArgs,
}

#[derive(Args)]
struct EnergyArgs {
    /// Mask to evaluate.
    #[arg(long)]
    mask: PathBuf,
    /// Take every parameter from a previous run's energy.json.
    #[arg(long, conflicts_with_all = ["config", "atoms"])]
    report: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

fn minimize(args: &MinimizeArgs) -> Result<()> {
    let mut cfg = args.model.config()?;
    if let Some(init) = args.init {
        cfg.init = init;
    }
    if args.init_mask.is_some() {
        cfg.initial_mask = args.init_mask.clone();
    }
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let atoms = args.model.atoms()?;
    let result = app::run_minimize(&cfg, &atoms)?;
    let r = &result.report;
    let b = &r.breakdown;
    println!(
        "total {:.6}  surf {:.6}  vdw {:.6}  elec {:.6}  (outside vdw {:.6}, elec {:.6})",
        b.total, b.surf, b.vdw, b.elec, b.vdw_outside, b.elec_outside
    );
    println!(
        "flips {}  solute cells {}  components {}  init {:.3} s  flipping {:.3} s",
        r.flips,
        r.solute_cells,
        r.solute_components,
        r.timings.stencil_secs + r.timings.site_secs + r.timings.init_secs,
        r.timings.flip_secs
    );
    for p in &result.artifacts {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn area_convergence(args: &AreaArgs) -> Result<()> {
    let study = AreaStudy {
        kernel: KernelKind::from_name(&args.kernel)?,
        size_param: args.size_param,
        half_width: args.half_width,
        radius: args.radius,
        n_min: args.n_min,
        n_max: args.n_max,
        n_step: args.n_step,
        trials: args.trials,
        shift: args.shift,
        seed: args.seed,
    };
    let rows = match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            app::run_area_convergence(&study, std::io::BufWriter::new(file))?
        }
        None => app::run_area_convergence(&study, std::io::stdout().lock())?,
    };
    let summary = match rows.last().and_then(|r| r.slope_so_far) {
        Some(s) => format!("fitted slope {s:.4} over {} resolutions", rows.len()),
        None => format!("fitted slope unavailable ({} resolutions)", rows.len()),
    };
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let mut physical = PhysicalParams::default();
    args.physical.apply(&mut physical);
    let p = OneAtomParams::new(&physical, args.charge, args.sigma, args.epsilon);
    let bracket = match &args.bracket {
        Some(b) => (b[0], b[1]),
        None => default_bracket(&p),
    };
    let minimum = one_atom_minimize(&p, bracket)?;
    let out = serde_json::json!({ "params": p, "bracket": bracket, "minimum": minimum });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn energy(args: &EnergyArgs) -> Result<()> {
    let field = BinaryField::load_mask(&args.mask)?;
    let breakdown = match &args.report {
        Some(path) => {
            let report = RunReport::load(path)?;
            app::recompute_from_report(&report, &field)?
        }
        None => {
            let mut cfg = args.model.config()?;
            cfg.a = field.grid().half_width();
            cfg.n = field.grid().n();
            app::recompute_energy(&cfg, &args.model.atoms()?, &field)?
        }
    };
    println!("{}", serde_json::to_string_pretty(&breakdown)?);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<voxsolv::Error>() {
        Some(voxsolv::Error::Numeric(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Minimize(a) => minimize(a),
        Command::AreaConvergence(a) => area_convergence(a),
        Command::Oracle(a) => oracle(a),
        Command::Energy(a) => energy(a),
    };
    match result {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
