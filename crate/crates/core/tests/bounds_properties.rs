use proptest::prelude::*;
use tuckreg_core::bounds::{log_cover_core, log_cover_factor, log_cover_g, sample_complexity, BoundInputs};

fn inputs() -> impl Strategy<Value = BoundInputs> {
    (1usize..4).prop_flat_map(|d| {
        (
            prop::collection::vec((2usize..60, 1usize..5, 1usize..10), d),
            0.1f64..5.0,
            0.05f64..1.0,
            0.05f64..0.95,
            0.01f64..0.5,
        )
            .prop_map(|(modes, tau, eps, delta, fail)| BoundInputs {
                tau,
                epsilon_cover: eps,
                delta,
                failure_prob: fail,
                ..BoundInputs::new(
                    modes.iter().map(|m| m.0).collect(),
                    modes.iter().map(|m| m.1).collect(),
                    modes.iter().map(|m| m.2.min(m.0)).collect(),
                )
            })
    })
}

proptest! {
    #[test]
    fn cover_of_g_decomposes(inp in inputs()) {
        let d1 = (inp.order() + 1) as f64;
        let core = log_cover_core(&inp.rank, inp.tau, inp.epsilon_cover / d1).unwrap();
        let scaled = inp.epsilon_cover / (inp.tau * d1);
        prop_assume!(scaled <= 1.0);
        let factors: f64 = (0..inp.order())
            .map(|k| log_cover_factor(inp.n_bar(), inp.rank[k], inp.sparsity[k], scaled).unwrap())
            .sum();
        let g = log_cover_g(&inp).unwrap();
        prop_assert!((g - core - factors).abs() <= 1e-12 * g.abs().max(1.0));
    }

    #[test]
    fn calculators_are_monotone(inp in inputs()) {
        let g = log_cover_g(&inp).unwrap();
        let m = sample_complexity(&inp).unwrap();
        prop_assert!(m > 0.0);

        let mut more_tau = inp.clone();
        more_tau.tau *= 1.5;
        prop_assert!(log_cover_g(&more_tau).unwrap() > g);

        let mut more_rank = inp.clone();
        more_rank.rank[0] += 1;
        prop_assert!(log_cover_g(&more_rank).unwrap() >= g);
        prop_assert!(sample_complexity(&more_rank).unwrap() >= m);
        prop_assert!(log_cover_core(&more_rank.rank, 1.0, 0.5).unwrap() > log_cover_core(&inp.rank, 1.0, 0.5).unwrap());

        let mut half = inp.clone();
        half.delta /= 2.0;
        let ratio = sample_complexity(&half).unwrap() / m;
        prop_assert!((ratio - 4.0).abs() <= 4.0 * 1e-12);
    }
}
