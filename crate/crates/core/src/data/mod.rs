//! Experiment inputs: the bimodal target, Boltzmann instances, wine tables
//! and evaluation metrics.

pub mod bimodal;
pub mod boltzmann;
pub mod metrics;
pub mod wine;

pub use bimodal::{mh_sample_bimodal, BimodalTarget};
pub use boltzmann::{boltzmann_couplings, make_boltzmann_instance};
pub use metrics::{auc, quantile_coverage, MvnBaseline};
pub use wine::WineData;
