//! Colored generalization of the multipartite-entanglement potential treated
//! as a classical statistical-mechanics system: exact coupling tables, exact
//! and Monte Carlo cumulants, the large-N_c Dyson fixed point, Metropolis
//! sampling with annealing / hysteresis / overlap protocols, and ground-state
//! (frustration) scans.

pub mod coupling;
pub mod error;
pub mod field;
pub mod largenc;
pub mod moments;
pub mod sampler;
pub mod stats;
mod util;

pub use coupling::{
    balanced_bipartitions, binomial, bit_ops, Bipartition, BitString, CouplingContext, Rational,
    MAX_QUBITS,
};
pub use error::{Error, Result};
pub use field::{
    complex_to_colored, energy, energy_bruteforce, gradient, gradient_at, purity_bipartition,
    purity_complex, quartic, quartic_at, tangent_project, ColoredState, ComplexState, PurityReport,
};
pub use largenc::{beta0, dyson_solve, energy_prediction, lambda_of_beta, lower_bound, DysonParams, DysonSolution};
pub use moments::{
    cactus_cumulant, exact_cumulant_f64, exact_cumulant_rational, exact_cumulants,
    first_moment_colored, first_moment_colored_f64, fit_scaling,
    mc_cumulants, reference_constants, sphere_moment, CumulantReport, MomentSpec, ScalingFit,
};
pub use sampler::{
    beta_tilde_grid, find_minimum, frustration_scan, hysteresis, overlap, run_chain, Chain,
    ChainRecord, FrustrationPoint, Leg, LegStats, MCConfig, MinimizeParams, ReplicaPair, Schedule,
    ScheduleKind,
};
pub use util::derive_seed;
