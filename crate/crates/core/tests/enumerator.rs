//! Weight-enumerator identities and LP soundness on sampled states.

use proptest::prelude::*;
use tesh_core::enumerator::{a_from_aprime, aprime_from_state, lp_lower_bound, shadow_from_aprime};
use tesh_core::state::{average_marginal_purity, haar_random_state, pauli_expectation, PauliString};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn enumerators_match_pauli_weights(n in 1usize..=5, seed: u64) {
        let psi = haar_random_state(n, seed).unwrap();
        let e = aprime_from_state(&psi).unwrap();
        let a = a_from_aprime(&e);
        let mut by_weight = vec![0.0; n + 1];
        for i in 0..1usize << (2 * n) {
            let p = PauliString::from_index(n, i);
            by_weight[p.weight()] += pauli_expectation(&psi, &p).unwrap().powi(2);
        }
        for j in 0..=n {
            prop_assert!((a[j] - by_weight[j]).abs() <= 1e-8, "j = {j}");
        }
        prop_assert!((a.iter().sum::<f64>() - (1u64 << n) as f64).abs() <= 1e-8);
    }

    #[test]
    fn sampled_enumerators_are_lp_feasible(n in 2usize..=6, seed: u64) {
        let e = aprime_from_state(&haar_random_state(n, seed).unwrap()).unwrap();
        let a = a_from_aprime(&e);
        let s = shadow_from_aprime(&e);
        let ap = e.aprime();
        for j in 0..=n {
            prop_assert!(a[j] >= -1e-9);
            prop_assert!(s[j] >= -1e-9);
            if (n - j) % 2 == 1 {
                prop_assert!(s[j].abs() <= 1e-9);
            }
            prop_assert!((ap[j] - ap[n - j]).abs() <= 1e-9);
        }
    }
}

#[test]
fn lp_value_never_exceeds_a_sampled_average_purity() {
    for n in 4..=9 {
        let lb = lp_lower_bound(n).unwrap().value.unwrap();
        for seed in 0..20 {
            let psi = haar_random_state(n, seed).unwrap();
            let p = average_marginal_purity(&psi, n / 2).unwrap();
            assert!(lb <= p + 1e-7, "n = {n}: {lb} > {p}");
        }
        for f in tesh_core::fixtures::te_fixtures(n) {
            assert!(lb <= average_marginal_purity(&f.state(), n / 2).unwrap() + 1e-7);
        }
    }
}
