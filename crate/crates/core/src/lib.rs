//! Entropic herding.
//!
//! Herding turns a set of feature-moment targets into a sequence of
//! pseudo-samples whose feature averages track the targets. Entropic herding
//! replaces each point with a tractable distribution chosen by greedily
//! minimising a moment-error-plus-negative-entropy objective, so the output is
//! a mixture with a closed-form density that can be sampled, conditioned and
//! scored.
//!
//! The crate is organised around two strategy registries:
//!
//! - [`families::FamilyRegistry`] holds the candidate families (independent
//!   Gaussians, independent spins, point masses) that each herding step
//!   optimises over.
//! - [`engine::StrategyRegistry`] holds the herding dynamics themselves
//!   (`entropic`, `entropic-scan`, `point`, `point-metropolis`), selected by
//!   name at runtime.
//!
//! Exact small-instance oracles (Gibbs enumeration, KL, the target loss, the
//! entropy-gap decomposition and the fixed-point solver) live in [`eval`].

pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod families;
pub mod features;
pub mod mixture;
pub mod moments;
pub mod numeric;
pub mod rng;
pub mod state;

pub use config::{EpsilonSchedule, HerdingConfig};
pub use engine::{HerdingRun, HerdingStrategy, Problem, StepRecord, StrategyRegistry};
pub use error::{Error, Result};
pub use families::{CandidateFamily, ComponentParams, FamilyRegistry};
pub use features::{FeatureId, FeatureKind, FeatureMap};
pub use mixture::{FamilyTag, MixtureModel};
pub use moments::MomentSpec;
pub use state::WeightState;
