//! Binary level-set minimization of implicit-solvent free energies.
//!
//! The solute/solvent interface is a ±1 field on a cell-centered voxel
//! grid. Its energy is a kernel-convolution surface term plus per-cell
//! van der Waals and Coulomb-field electrostatic terms; a greedy descent
//! flips one cell at a time, steepest first.

pub mod app;
pub mod convolution;
pub mod error;
pub mod grid;
pub mod heap;
pub mod initials;
pub mod kernels;
pub mod mesh;
pub mod minimizer;
pub mod oracle;
pub mod quadrature;
pub mod site;
pub mod surface;

pub use error::{Error, Result};
pub use grid::{connected_components, BinaryField, Components, Grid, Region};
pub use kernels::{KernelKind, KernelSpec, KernelStencil};
pub use site::{Atom, OutsideSampling, PhysicalParams, SiteEnergies};
pub use initials::{loose_initial, tight_initial, InitKind};
pub use minimizer::{minimize, total_energy, EnergyBreakdown, FlipState, MinimizeOptions, MinimizeOutcome};
pub use oracle::{one_atom_energy, one_atom_minimize, OneAtomParams};
