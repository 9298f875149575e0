//! Localization landscape theory for tight-binding Schrödinger operators
//! `H = -Δ + V` on periodic and Dirichlet lattices in any dimension.
//!
//! The crate solves the landscape equation `H u = 1`, builds Agmon weights,
//! wells and distances from the effective potential `W = 1/u`, maps the top
//! of the spectrum to the bottom through the dual operator
//! `-Δ + (V_max - V)`, and checks the identities and decay bounds of the
//! theory numerically.
//!
//! ```
//! use lattice_landscape::{generate, solve_landscape, HamiltonianOperator, LatticeGeometry, PotentialSpec};
//!
//! let geom = LatticeGeometry::dirichlet(1, 100).unwrap();
//! let v = generate(&PotentialSpec::bernoulli(0.0, 5.0, 0.7, 1), &geom).unwrap();
//! let h = HamiltonianOperator::new(v);
//! let u = solve_landscape(&h, 1e-10).unwrap();
//! assert!(u.min_u() >= 1.0 / 6.0);
//! ```

pub mod agmon;
pub mod error;
pub mod exec;
pub mod landscape;
pub mod lattice;
pub mod operators;
pub mod random_media;
pub mod spectral;
pub mod verify;

pub use agmon::{agmon_distance_field, agmon_metric, brute_force_metric, weight_field, wells, AgmonField};
pub use error::{Error, Result};
pub use exec::Exec;
pub use landscape::{dual_landscape, solve_landscape, solve_landscape_with, LandscapeField, SolverOptions};
pub use lattice::{BoundaryCondition, LatticeGeometry, SiteIndex};
pub use operators::{AntiPeriodicOperator, HamiltonianOperator, OperatorForm, PotentialField, SiteOperator};
pub use random_media::{generate, generate_with, PotentialKind, PotentialSpec};
pub use spectral::{check_duality, dual_transform, eigenpairs, Eigenpair, Selection};
pub use verify::{CheckKind, CheckResult, DecayBoundParams};

/// Crate version, recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
