//! Built-in feature families.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    /// `x^i` for `i = 1..=max_degree` on a scalar input.
    Poly1D { max_degree: usize },
    /// `x_i x_j` for `i < j` on a spin vector.
    SpinPairwise { n_spins: usize },
    /// Centred first, second (`i <= j`), third and fourth order moments.
    CenteredMoments { n_vars: usize, centers: Vec<f64> },
}

/// Identifier of one feature function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureId {
    Power(usize),
    Pair(usize, usize),
    /// `(order, i, j)`; `j == i` except for second order cross terms.
    Centered(u8, usize, usize),
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FeatureId::Power(k) => write!(f, "x^{k}"),
            FeatureId::Pair(i, j) => write!(f, "x{}x{}", i + 1, j + 1),
            FeatureId::Centered(1, i, _) => write!(f, "c1_{}", i + 1),
            FeatureId::Centered(2, i, j) => write!(f, "c2_{}_{}", i + 1, j + 1),
            FeatureId::Centered(o, i, _) => write!(f, "c{o}_{}", i + 1),
        }
    }
}

/// An ordered set of feature functions `phi_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    kind: FeatureKind,
    ids: Vec<FeatureId>,
}

impl FeatureMap {
    pub fn poly1d(max_degree: usize) -> Self {
        let ids = (1..=max_degree).map(FeatureId::Power).collect();
        Self {
            kind: FeatureKind::Poly1D { max_degree },
            ids,
        }
    }

    pub fn spin_pairwise(n_spins: usize) -> Self {
        let mut ids = Vec::with_capacity(n_spins * n_spins.saturating_sub(1) / 2);
        for i in 0..n_spins {
            for j in i + 1..n_spins {
                ids.push(FeatureId::Pair(i, j));
            }
        }
        Self {
            kind: FeatureKind::SpinPairwise { n_spins },
            ids,
        }
    }

    pub fn centered_moments(n_vars: usize) -> Self {
        Self::centered_moments_at(vec![0.0; n_vars])
    }

    pub fn centered_moments_at(centers: Vec<f64>) -> Self {
        let n = centers.len();
        let mut ids = Vec::with_capacity(n * (n + 7) / 2);
        ids.extend((0..n).map(|i| FeatureId::Centered(1, i, i)));
        for i in 0..n {
            for j in i..n {
                ids.push(FeatureId::Centered(2, i, j));
            }
        }
        ids.extend((0..n).map(|i| FeatureId::Centered(3, i, i)));
        ids.extend((0..n).map(|i| FeatureId::Centered(4, i, i)));
        Self {
            kind: FeatureKind::CenteredMoments { n_vars: n, centers },
            ids,
        }
    }

    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    pub fn ids(&self) -> &[FeatureId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Dimension of the input space.
    pub fn input_dim(&self) -> usize {
        match &self.kind {
            FeatureKind::Poly1D { .. } => 1,
            FeatureKind::SpinPairwise { n_spins } => *n_spins,
            FeatureKind::CenteredMoments { n_vars, .. } => *n_vars,
        }
    }

    pub fn centers(&self) -> Option<&[f64]> {
        match &self.kind {
            FeatureKind::CenteredMoments { centers, .. } => Some(centers),
            _ => None,
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.ids.iter().map(ToString::to_string).collect()
    }

    pub fn label(&self) -> String {
        match &self.kind {
            FeatureKind::Poly1D { max_degree } => format!("poly1d({max_degree})"),
            FeatureKind::SpinPairwise { n_spins } => format!("spin_pairwise({n_spins})"),
            FeatureKind::CenteredMoments { n_vars, .. } => format!("centered_moments({n_vars})"),
        }
    }

    /// Evaluates every feature at `x` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match &self.kind {
            FeatureKind::Poly1D { max_degree } => {
                let mut p = 1.0;
                for _ in 0..*max_degree {
                    p *= x[0];
                    out.push(p);
                }
            }
            FeatureKind::SpinPairwise { .. } => {
                out.extend(self.ids.iter().map(|id| match *id {
                    FeatureId::Pair(i, j) => x[i] * x[j],
                    _ => unreachable!(),
                }));
            }
            FeatureKind::CenteredMoments { centers, .. } => {
                out.extend(self.ids.iter().map(|id| match *id {
                    FeatureId::Centered(order, i, j) => {
                        let di = x[i] - centers[i];
                        match order {
                            1 => di,
                            2 => di * (x[j] - centers[j]),
                            3 => di * di * di,
                            _ => di * di * di * di,
                        }
                    }
                    _ => unreachable!(),
                }));
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.eval_into(x, &mut out);
        out
    }

    /// Jacobian `d phi_m / d x_k` (row per feature).
    pub fn eval_gradient(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.input_dim();
        self.ids
            .iter()
            .map(|id| {
                let mut row = vec![0.0; d];
                match (*id, &self.kind) {
                    (FeatureId::Power(k), _) => row[0] = k as f64 * x[0].powi(k as i32 - 1),
                    (FeatureId::Pair(i, j), _) => {
                        row[i] = x[j];
                        row[j] = x[i];
                    }
                    (FeatureId::Centered(order, i, j), FeatureKind::CenteredMoments { centers, .. }) => {
                        let di = x[i] - centers[i];
                        match order {
                            1 => row[i] = 1.0,
                            2 if i == j => row[i] = 2.0 * di,
                            2 => {
                                row[i] = x[j] - centers[j];
                                row[j] = di;
                            }
                            3 => row[i] = 3.0 * di * di,
                            _ => row[i] = 4.0 * di * di * di,
                        }
                    }
                    _ => unreachable!(),
                }
                row
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_sizes() {
        assert_eq!(FeatureMap::poly1d(4).len(), 4);
        assert_eq!(FeatureMap::spin_pairwise(10).len(), 45);
        assert_eq!(FeatureMap::centered_moments(11).len(), 11 + 66 + 11 + 11);
    }

    #[test]
    fn centered_order_is_lexicographic() {
        let f = FeatureMap::centered_moments(2);
        assert_eq!(
            f.ids(),
            &[
                FeatureId::Centered(1, 0, 0),
                FeatureId::Centered(1, 1, 1),
                FeatureId::Centered(2, 0, 0),
                FeatureId::Centered(2, 0, 1),
                FeatureId::Centered(2, 1, 1),
                FeatureId::Centered(3, 0, 0),
                FeatureId::Centered(3, 1, 1),
                FeatureId::Centered(4, 0, 0),
                FeatureId::Centered(4, 1, 1),
            ]
        );
        let mut sorted = f.ids().to_vec();
        sorted.sort();
        assert_eq!(sorted, f.ids());
    }

    #[test]
    fn evaluation() {
        assert_eq!(FeatureMap::poly1d(4).eval(&[2.0]), vec![2.0, 4.0, 8.0, 16.0]);
        assert_eq!(
            FeatureMap::spin_pairwise(3).eval(&[1.0, -1.0, 1.0]),
            vec![-1.0, 1.0, -1.0]
        );
        let c = FeatureMap::centered_moments_at(vec![1.0, 0.0]);
        assert_eq!(c.eval(&[3.0, -1.0]), vec![2.0, -1.0, 4.0, -2.0, 1.0, 8.0, -1.0, 16.0, 1.0]);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let f = FeatureMap::centered_moments_at(vec![0.3, -0.2, 0.1]);
        let x = [0.7, -1.1, 0.4];
        let g = f.eval_gradient(&x);
        let h = 1e-6;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (fp, fm) = (f.eval(&xp), f.eval(&xm));
            for m in 0..f.len() {
                let fd = (fp[m] - fm[m]) / (2.0 * h);
                assert!((fd - g[m][k]).abs() < 1e-6, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn names_are_stable() {
        assert_eq!(FeatureMap::spin_pairwise(3).names(), vec!["x1x2", "x1x3", "x2x3"]);
    }
}
