//! Descent invariants, determinism and gradient accuracy.

use proptest::prelude::*;
use tesh_core::search::{
    cost_gradient, finite_difference_gradient, minimize, search_te, CostGradient, SearchParams, SearchSummary,
};
use tesh_core::separability::verify_te;
use tesh_core::state::haar_random_state;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accepted_steps_decrease_the_cost_and_stay_normalized(n in 4usize..=6, seed: u64) {
        let start = haar_random_state(n, seed).unwrap();
        let r = minimize(&start, &SearchParams { max_iterations: 200, ..Default::default() }).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(r.max_norm_drift <= 1e-12);
        prop_assert!((r.state.unwrap().norm_sqr() - 1.0).abs() <= 1e-12);
    }
}

fn fingerprint(s: &SearchSummary) -> Vec<(u64, u64, usize, Vec<u64>)> {
    s.results
        .iter()
        .map(|r| {
            let bits = r
                .state
                .as_ref()
                .unwrap()
                .amplitudes()
                .iter()
                .flat_map(|a| [a.re.to_bits(), a.im.to_bits()])
                .collect();
            (r.seed, r.cost.to_bits(), r.iterations, bits)
        })
        .collect()
}

#[test]
fn search_is_deterministic_across_thread_counts() {
    let params = SearchParams::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| search_te(5, 6, 42, &params).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(fingerprint(&a), fingerprint(&b));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn reported_successes_reverify() {
    for n in [4, 5, 6] {
        let s = search_te(n, 6, 7, &SearchParams::default()).unwrap();
        for r in s.results.iter().filter(|r| r.is_success()) {
            assert!(verify_te(r.state.as_ref().unwrap(), 1e-9).unwrap().verdict);
        }
        assert_eq!(s.successes, s.results.iter().filter(|r| r.is_success()).count());
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut checked = 0;
    for seed in 0..200u64 {
        if checked == 50 {
            break;
        }
        let psi = haar_random_state(4 + (seed % 3) as usize, seed).unwrap();
        let CostGradient::Tangent(g) = cost_gradient(&psi, 1e-8).unwrap() else {
            continue;
        };
        let fd = finite_difference_gradient(&psi, 1e-8, 1e-5).unwrap();
        let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(diff <= 1e-5 * norm.max(1e-12), "seed {seed}: {diff} vs {norm}");
        checked += 1;
    }
    assert_eq!(checked, 50);
}
