//! Continuous location–routing on gridded domains.
//!
//! Given a resource density `ρ`, the solvers compute facility densities `μ`
//! trading a location cost `ε∫ρ/μ^{p/d}` against a routing cost
//! `∫∫K|x−y|^q dμ dμ`, locate the single main hub the optimum collapses to
//! as `ε → 0`, and build demand and cost inputs for airfreight networks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airfreight;
pub mod asymptotics;
pub mod error;
pub mod grid;
pub mod hub;
pub mod io;
pub mod kernel;
pub mod masscoupled;
pub mod solver;

pub use airfreight::{
    breguet_fuel_fraction, cost_per_ton_km_curve, demand_at, demand_field, fit_cost_exponent, integrate_cost_curve,
    AircraftParams, CentroidRecord, DemandCoefficients,
};
pub use asymptotics::{hexagon_constant, limit_location_cost, optimal_pure_location_density};
pub use error::{Error, Result};
pub use grid::{gaussian_sum_density, Axis, DensityField, GaussianPeak, Grid};
pub use hub::{find_main_hub, hub_constant, hub_functional, HubResult};
pub use io::{read_density, write_density, DensityFormat};
pub use kernel::{ConvolutionOperator, RoutingKernel};
pub use masscoupled::{
    mass_coupled_solve, pushforward_1d, total_cost_mass, transport_map_step, wasserstein_1d, MassCoupledConfig,
    MassCoupledResult, TransportMap1D,
};
pub use solver::{
    eps_sweep, exponents, fixed_point_solve, fixed_point_solve_from, iterate_once, location_term, rescaled_cost,
    scaling_probe, total_cost, IterationMode, IterationRecord, MultiplierMode, ScalingReport, SolveResult,
    SolverConfig,
};
