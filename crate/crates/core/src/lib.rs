//! Simulation and analysis engine for fairness-constrained connection
//! recommendation.
//!
//! The crate has two halves that share a common vocabulary of groups,
//! degrees and seeds:
//!
//! * A discrete-time simulator of a "people you may know" system: a social
//!   graph evolves as members receive ranked connection recommendations,
//!   where each ranking comes from a probabilistic policy solved as a small
//!   linear program, optionally under an exposure- or utility-parity
//!   constraint ([`graph`], [`population`], [`scoring`], [`ranking`],
//!   [`simulator`], [`metrics`]).
//! * A mixed preferential attachment urn engine plus closed-form limit
//!   calculators used to verify the long-run minority degree share under
//!   the same interventions ([`mpa`]).
//!
//! Everything is deterministic given a seed; random streams are derived
//! per (run, step, member) so results do not depend on scheduling.

pub mod graph;
pub mod metrics;
pub mod mpa;
pub mod population;
pub mod ranking;
pub mod rng;
pub mod scoring;
pub mod simulator;

pub use graph::{SbmParams, SocialGraph};
pub use population::{Group, Population};
pub use ranking::{FairnessConstraint, PositionBias, RankingPolicy};
pub use scoring::{FeatureNormalizers, ScoringParams};
pub use simulator::{Intervention, SimConfig};
