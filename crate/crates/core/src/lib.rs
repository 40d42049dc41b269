//! Equilibrium engine for spatial price competition with a brand effect.
//!
//! Companies sit at fixed points of a one- or two-dimensional feature
//! space and compete on price. A customer at `x` buys from the company with
//! the lowest aggregate price `P_i + ‖x − x_i‖² − β S_i^q`, where `S_i` is
//! the company's market area. The crate computes market partitions, best
//! responses and pure-strategy equilibria, and checks the equilibrium
//! price/area identities against brute-force grid oracles.

pub mod areas;
pub mod best_response;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod model;
pub mod oracle;

pub use areas::{
    compute_wipeout_diagnostics, solve_areas, solve_areas_q0, solve_areas_q1_1d, Cell,
    MarketPartition, Neighbor, WipeoutDiagnostics, WipeoutEntry,
};
pub use best_response::{best_response, find_breakpoints, utility, BestResponse};
pub use equilibrium::{
    construct_activation, deviation_audit, iterate_best_response, verify_equilibrium,
    ActivationScheme, CompanyReport, DeviationAudit, EquilibriumReport, Schedule, SolverOptions,
};
pub use oracle::{grid_best_response, grid_partition, ownership_conflicts, GridPartition, GridSpec, OwnershipMap};
pub use error::{Error, Result};
pub use geometry::{Aabb, ConvexPolygon, Interval, Point};
pub use model::{
    aggregate_price, emit_scenario, load_scenario, BrandExponent, Company, Dimension,
    PriceVector, Scenario,
};
