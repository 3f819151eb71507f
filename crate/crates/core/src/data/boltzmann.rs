use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::eval::GibbsModel;
use crate::rng::{stream, Stream};

/// Chain coupling assigned to neighbouring spins.
pub const CHAIN_COUPLING: f64 = -0.3;

/// Random couplings `W_ij ~ N(0, 0.2^2 / n)` for `i < j`, with the chain
/// `W_{i,i+1} = -0.3` written over them except between spins 4 and 5
/// (1-based), which are decoupled.
pub fn boltzmann_couplings(n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(Error::Config(format!("Boltzmann instance needs at least 2 spins, got {n}")));
    }
    let mut rng = stream(seed, Stream::Instance);
    let sd = 0.2 / (n as f64).sqrt();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let z: f64 = rng.sample(StandardNormal);
            w[i][j] = sd * z;
        }
    }
    for i in 0..n - 1 {
        w[i][i + 1] = if i == 3 { 0.0 } else { CHAIN_COUPLING };
    }
    for i in 0..n {
        for j in 0..i {
            w[i][j] = w[j][i];
        }
    }
    Ok(w)
}

pub fn make_boltzmann_instance(n: usize, seed: u64) -> Result<GibbsModel> {
    GibbsModel::boltzmann(boltzmann_couplings(n, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_entries() {
        for seed in 0..5 {
            let w = boltzmann_couplings(10, seed).unwrap();
            assert_eq!(w[3][4], 0.0);
            assert_eq!(w[0][1], -0.3);
            assert_eq!(w[8][9], -0.3);
            for i in 0..10 {
                assert_eq!(w[i][i], 0.0);
                for j in 0..10 {
                    assert_eq!(w[i][j], w[j][i]);
                }
            }
        }
        assert_eq!(boltzmann_couplings(10, 4).unwrap(), boltzmann_couplings(10, 4).unwrap());
        assert!(boltzmann_couplings(1, 0).is_err());
    }

    #[test]
    fn off_chain_spread() {
        let mut vals = Vec::new();
        for seed in 0..10_000 {
            let w = boltzmann_couplings(10, seed).unwrap();
            vals.push(w[0][5]);
            vals.push(w[2][7]);
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((sd - 0.2 / 10f64.sqrt()).abs() < 0.002, "{sd}");
    }

    #[test]
    fn instance_normalises() {
        let g = make_boltzmann_instance(10, 0).unwrap();
        assert_eq!(g.states().len(), 1024);
        let total: f64 = g.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
