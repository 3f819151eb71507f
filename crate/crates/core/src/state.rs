use serde::{Deserialize, Serialize};

/// Herding weights together with the running aggregate they summarise.
///
/// All moments are in standardised coordinates, so `a_m = lambda *
/// running_moment_m` whenever the state is advanced with [`WeightState::update`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightState {
    pub a: Vec<f64>,
    pub running_moment: Vec<f64>,
    pub running_entropy: f64,
    pub step: usize,
}

impl WeightState {
    /// `a^(0) = lambda * eta'(r^(0))`.
    pub fn initial(r0_moments: &[f64], r0_entropy: f64, lambda: f64) -> Self {
        Self {
            a: r0_moments.iter().map(|v| lambda * v).collect(),
            running_moment: r0_moments.to_vec(),
            running_entropy: r0_entropy,
            step: 0,
        }
    }

    /// Advances one outer step with the freshly selected component `r^(T)`.
    pub fn update(&mut self, r_moments: &[f64], r_entropy: f64, lambda: f64, eps: f64) {
        debug_assert_eq!(r_moments.len(), self.a.len());
        for ((a, eta), run) in self.a.iter_mut().zip(r_moments).zip(&mut self.running_moment) {
            *a += eps * (lambda * eta - *a);
            *run += eps * (eta - *run);
        }
        self.running_entropy += eps * (r_entropy - self.running_entropy);
        self.step += 1;
    }

    /// Modified weights `a'` for the current inner iterate.
    pub fn modified(&self, q_moments: &[f64], lambda: f64, eps: f64) -> Vec<f64> {
        self.a
            .iter()
            .zip(q_moments)
            .map(|(a, eta)| a + eps * (lambda * eta - a))
            .collect()
    }

    /// `L~ = lambda/2 * sum running^2 - H~`.
    pub fn tentative_loss(&self, lambda: f64) -> f64 {
        0.5 * lambda * self.running_moment.iter().map(|v| v * v).sum::<f64>() - self.running_entropy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_is_stationary() {
        let mut s = WeightState::initial(&[0.0, 0.0], 1.0, 5.0);
        s.update(&[0.0, 0.0], 1.0, 5.0, 0.3);
        assert_eq!(s.a, vec![0.0, 0.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn full_replacement_with_unit_eps() {
        let mut s = WeightState::initial(&[0.4, -0.1], 0.0, 3.0);
        s.update(&[0.25, 2.0], 0.7, 3.0, 1.0);
        assert_eq!(s.a, vec![0.75, 6.0]);
        assert_eq!(s.running_entropy, 0.7);
    }

    #[test]
    fn modified_weight_arithmetic() {
        // a = 0.2, lambda * eta = 1.0, eps = 0.05 -> 0.24
        let mut s = WeightState::initial(&[0.02], 0.0, 10.0);
        assert!((s.a[0] - 0.2).abs() < 1e-15);
        let a_mod = s.modified(&[0.1], 10.0, 0.05);
        assert!((a_mod[0] - 0.24).abs() < 1e-15);
        s.update(&[0.1], 0.0, 10.0, 0.05);
        assert!((s.a[0] - 0.24).abs() < 1e-15);
    }

    #[test]
    fn a_tracks_running_moment() {
        let lambda = 7.5;
        let mut s = WeightState::initial(&[0.3, -0.2, 1.1], 0.5, lambda);
        for t in 1..200 {
            let x = t as f64;
            s.update(&[x.sin(), x.cos(), (0.3 * x).sin()], x.ln(), lambda, 0.05);
            for (a, r) in s.a.iter().zip(&s.running_moment) {
                assert!((a - lambda * r).abs() < 1e-12);
            }
        }
    }
}
