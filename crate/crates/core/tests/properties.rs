use entroherd::config::KvConfig;
use entroherd::data::metrics::auc;
use entroherd::data::wine::split_indices;
use entroherd::eval::{kl_discrete, total_variation};
use entroherd::families::spin;
use entroherd::{HerdingConfig, WeightState};
use proptest::prelude::*;

fn normalise(v: Vec<f64>) -> Vec<f64> {
    let z: f64 = v.iter().sum();
    v.into_iter().map(|x| x / z).collect()
}

fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(normalise)
}

proptest! {
    #[test]
    fn kl_is_nonnegative_and_zero_on_self(p in dist(8), q in dist(8)) {
        prop_assert!(kl_discrete(&p, &q) >= 0.0);
        prop_assert!(kl_discrete(&p, &p).abs() < 1e-12);
    }

    #[test]
    fn tv_is_a_bounded_metric(p in dist(6), q in dist(6), r in dist(6)) {
        let pq = total_variation(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        prop_assert!((pq - total_variation(&q, &p)).abs() < 1e-15);
        prop_assert!(pq <= total_variation(&p, &r) + total_variation(&r, &q) + 1e-12);
    }

    #[test]
    fn spin_entropy_is_bounded(s in prop::collection::vec(-8.0f64..8.0, 1..7)) {
        let h = spin::entropy(&s);
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= s.len() as f64 * std::f64::consts::LN_2 + 1e-12);
        prop_assert!(spin::probs(&s).iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn weights_track_lambda_times_running_moment(
        r0 in prop::collection::vec(-1.0f64..1.0, 3),
        steps in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 3), 0.0f64..2.0, 0.001f64..1.0), 1..20),
        lambda in 0.1f64..50.0,
    ) {
        let mut s = WeightState::initial(&r0, 0.5, lambda);
        for (eta, h, eps) in &steps {
            s.update(eta, *h, lambda, *eps);
        }
        for (a, m) in s.a.iter().zip(&s.running_moment) {
            prop_assert!((a - lambda * m).abs() <= 1e-9 * (1.0 + a.abs()));
        }
        prop_assert_eq!(s.step, steps.len());
    }

    #[test]
    fn split_partitions_the_rows(n in 5usize..400, frac in 0.05f64..0.95, seed: u64) {
        let (train, val) = split_indices(n, frac, seed).unwrap();
        prop_assert_eq!(val.len(), (frac * n as f64).floor() as usize);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn auc_is_antisymmetric(
        pos in prop::collection::vec(-3.0f64..3.0, 1..30),
        neg in prop::collection::vec(-3.0f64..3.0, 1..30),
    ) {
        let a = auc(&pos, &neg).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a + auc(&neg, &pos).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herding_config_round_trips(
        eps in 0.001f64..0.999,
        t_output in 1usize..5000,
        k in 1usize..200,
        p_jump in 0.0f64..=1.0,
        lambda in 0.01f64..500.0,
        seed: u64,
    ) {
        let c = HerdingConfig { eps_herding: eps, t_output, k_update: k, p_jump, lambda, seed, ..HerdingConfig::bimodal() };
        let text = c.to_kv().to_string();
        let back = HerdingConfig::from_kv(&KvConfig::parse(&text).unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}
