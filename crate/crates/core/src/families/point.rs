//! Point masses.

use crate::features::{FeatureKind, FeatureMap};

pub fn moments(x: &[f64], features: &FeatureMap) -> Vec<f64> {
    features.eval(x)
}

/// `d phi / d x`; only defined for features on a continuous space.
pub fn jacobian(x: &[f64], features: &FeatureMap) -> Option<Vec<Vec<f64>>> {
    match features.kind() {
        FeatureKind::SpinPairwise { .. } => None,
        _ => Some(features.eval_gradient(x)),
    }
}
