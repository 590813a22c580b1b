//! Operational shell: atom files, run configuration, pipelines and artifacts.

pub mod atoms;
pub mod config;
pub mod run;

pub use atoms::{format_atoms, load_atoms, parse_atoms};
pub use config::{KernelConfig, Resolved, RunConfig};
pub use run::{
    recompute_energy, recompute_from_report, run_area_convergence, run_minimize, RunReport, RunResult,
};
