//! Per-slot source-rate allocation for energy-harvesting wireless body area
//! networks.
//!
//! A network of battery-powered sensor nodes harvests energy (modeled as a
//! discrete-time Markov chain per node) and transmits to a mains-powered
//! aggregator over a body channel with log-normal shadowing. Each time slot,
//! an allocator picks per-node source rates maximizing network energy
//! efficiency (total bit/s over total watts) subject to battery bounds:
//!
//! * [`optimizer::solve_optimal`] — exact solution via a Charnes-Cooper
//!   transformation of the linear-fractional objective into an LP, solved by
//!   the built-in two-phase simplex ([`lp`]).
//! * [`optimizer::suboptimal_sweep`] — low-complexity heuristic sweeping a
//!   split point over nodes sorted by their per-bit energy cost.
//! * [`optimizer::exhaustive_extremes`] — brute force over all
//!   min/max-rate corner assignments (test oracle, capped at 16 nodes).
//! * [`optimizer::steady_rate_baseline`] — constant-rate comparison scheme
//!   matching expected consumption to the long-term harvest rate.
//!
//! [`sim`] drives the slot loop (harvest sampling, shadowing, allocation,
//! battery update with overflow) and records reproducible traces.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`]
//! (`f64` for production use, `f32` supported); concrete `f64` aliases live
//! at the crate root.

pub mod channel;
pub mod harvest;
mod linalg;
pub mod lp;
pub mod optimizer;
pub mod scalar;
pub mod sim;

pub use scalar::Real;

/// `f64` aliases for the common case.
pub type HarvestChain64 = harvest::HarvestChain<f64>;
pub type SteadyState64 = harvest::SteadyState<f64>;
pub type SensorParams64 = channel::SensorParams<f64>;
pub type ActivityProfile64 = channel::ActivityProfile<f64>;
pub type LpProblem64 = lp::LpProblem<f64>;
pub type LpSolution64 = lp::LpSolution<f64>;
pub type SlotContext64 = optimizer::SlotContext<f64>;
pub type RateBounds64 = optimizer::RateBounds<f64>;
pub type Allocation64 = optimizer::Allocation<f64>;
pub type Scenario64 = sim::Scenario<f64>;
pub type SimResult64 = sim::SimResult<f64>;
