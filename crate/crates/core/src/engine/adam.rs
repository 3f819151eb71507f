use serde::{Deserialize, Serialize};

pub const BETA1: f64 = 0.8;
pub const BETA2: f64 = 0.99;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moment estimates for one inner optimisation; a fresh state is made
/// at every outer step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub adam_t: u32,
    pub eta_learn: f64,
}

impl OptimizerState {
    pub fn new(dim: usize, eta_learn: f64) -> Self {
        Self {
            adam_m: vec![0.0; dim],
            adam_v: vec![0.0; dim],
            adam_t: 0,
            eta_learn,
        }
    }

    /// Displacement for gradient `grad` (to be added to the coordinates).
    pub fn step(&mut self, grad: &[f64]) -> Vec<f64> {
        self.adam_t += 1;
        let c1 = 1.0 - BETA1.powi(self.adam_t as i32);
        let c2 = 1.0 - BETA2.powi(self.adam_t as i32);
        grad.iter()
            .zip(self.adam_m.iter_mut().zip(self.adam_v.iter_mut()))
            .map(|(g, (m, v))| {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                -self.eta_learn * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_of_unit_gradient() {
        let mut s = OptimizerState::new(1, 0.2);
        let d = s.step(&[1.0]);
        assert!((d[0] + 0.2 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_does_not_move() {
        let mut s = OptimizerState::new(3, 0.2);
        for _ in 0..5 {
            assert_eq!(s.step(&[0.0; 3]), vec![0.0; 3]);
        }
        assert!(s.adam_v.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut s = OptimizerState::new(2, 0.05);
        let mut x = [3.0, -2.0];
        for _ in 0..2000 {
            let d = s.step(&[2.0 * (x[0] - 1.0), 2.0 * (x[1] + 0.5)]);
            x[0] += d[0];
            x[1] += d[1];
        }
        assert!((x[0] - 1.0).abs() < 1e-2 && (x[1] + 0.5).abs() < 1e-2);
    }
}
