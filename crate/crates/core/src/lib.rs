//! Meshless generalized finite difference solver for a density-suppressed
//! motility system on 2-D point clouds.
//!
//! ```text
//! u_t = Δ(γ(v) u) + μ u (1 - u)
//! 0   = Δv - v + u
//! ```
//!
//! with homogeneous Neumann conditions on a rectangle. Time stepping is
//! explicit in `u` and implicit in `v`, with spatial derivatives from weighted
//! least-squares stencils on clouds of scattered nodes.
//!
//! A typical run builds a cloud, a [`SimulationConfig`], and calls
//! [`Simulation::run`]:
//!
//! ```
//! use gfdm::{generate_regular_cloud, gamma_exp, Domain, ModelParameters, Simulation, SimulationConfig};
//!
//! let cloud = generate_regular_cloud(11, 11, Domain::unit_square()).unwrap();
//! let config = SimulationConfig::new(1e-3, 1e-2, gamma_exp(), ModelParameters::new(3.0).unwrap());
//! let sim = Simulation::new(cloud, config).unwrap();
//! let result = sim.run(|x, y| 1.0 + 0.1 * x * y).unwrap();
//! assert_eq!(result.series.len(), 11);
//! ```

// Comparisons are written so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cloud;
pub mod elliptic;
pub mod error;
pub mod linalg;
pub mod motility;
pub mod output;
pub mod presets;
pub mod simulation;
pub mod stability;
pub mod stars;
pub mod stencil;

pub use cloud::{
    generate_irregular_cloud, generate_regular_cloud, load_cloud, read_cloud, save_cloud,
    write_cloud, Domain, Node, NodeKind, PointCloud,
};
pub use elliptic::{assemble_elliptic, solve_elliptic, EllipticSystem, NeumannRows};
pub use error::{Error, Result};
pub use linalg::{BandedLu, CsrMatrix};
pub use motility::{
    gamma_exp, gamma_rational, validate_hypotheses, validate_initial_condition, HypothesisReport,
    InitialDataReport, ModelParameters, MotilityFunction,
};
pub use presets::ExperimentPreset;
pub use simulation::{
    norms, FieldState, NormRecord, Simulation, SimulationConfig, SimulationResult, Snapshot,
};
pub use stability::{
    constant_state_bound, max_stable_dt, Fields, NodeCoefficients, StabilityOptions,
    StabilityReport,
};
pub use stars::{build_all_stars, build_boundary_stars, build_star, nearest_star, Star};
pub use stencil::{
    apply_stencil, compute_stencil, compute_stencils, Discretization, StencilRow, WeightScheme,
};
