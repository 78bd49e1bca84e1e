//! Properties of states, marginals, spectra and Pauli expectations.

mod common;

use proptest::prelude::*;
use tesh_core::combinatorics::combinations;
use tesh_core::state::{
    average_marginal_purity, haar_random_state, partial_trace, pauli_expectation, spectrum, spectrum_of_matrix,
    PauliString,
};

fn subset_of(n: usize, mask: u32) -> Vec<usize> {
    (0..n).filter(|q| mask >> q & 1 == 1).collect()
}

proptest! {
    #[test]
    fn purity_is_symmetric_across_a_cut(n in 2usize..=7, seed: u64, mask: u32) {
        let psi = haar_random_state(n, seed).unwrap();
        let full = (1u32 << n) - 1;
        let mask = (mask % full).max(1);
        let s = subset_of(n, mask);
        let c = subset_of(n, full & !mask);
        let a = partial_trace(&psi, &s).unwrap().purity();
        let b = partial_trace(&psi, &c).unwrap().purity();
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn marginals_are_density_matrices(n in 1usize..=7, seed: u64, mask: u32) {
        let psi = haar_random_state(n, seed).unwrap();
        let mask = mask % ((1u32 << n) - 1) + 1;
        let rho = partial_trace(&psi, &subset_of(n, mask)).unwrap();
        let m = rho.matrix();
        let trace: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
        prop_assert!((trace - 1.0).abs() <= 1e-12);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                prop_assert!((m[(i, j)] - m[(j, i)].conj()).norm() <= 1e-12);
            }
        }
        let lam = spectrum(&rho).unwrap();
        prop_assert!(lam.values().iter().all(|&v| v >= -1e-10));
        prop_assert!(lam.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn spectrum_is_unitarily_invariant(k in 1usize..=4, seed: u64) {
        let psi = haar_random_state(k + 2, seed).unwrap();
        let rho = partial_trace(&psi, &(0..k).collect::<Vec<_>>()).unwrap();
        let u = common::random_unitary(1 << k, &mut common::rng(seed ^ 0x5eed));
        let rotated = &u * rho.matrix() * u.adjoint();
        let a = spectrum(&rho).unwrap();
        let b = spectrum_of_matrix(&rotated).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn pauli_squares_sum_to_dimension(n in 1usize..=5, seed: u64) {
        let psi = haar_random_state(n, seed).unwrap();
        let total: f64 = (0..1usize << (2 * n))
            .map(|i| pauli_expectation(&psi, &PauliString::from_index(n, i)).unwrap().powi(2))
            .sum();
        prop_assert!((total - (1u64 << n) as f64).abs() <= 1e-8);
    }

    #[test]
    fn average_purity_is_in_range(n in 2usize..=8, seed: u64, k in 1usize..=4) {
        let k = k.min(n - 1);
        let psi = haar_random_state(n, seed).unwrap();
        let p = average_marginal_purity(&psi, k).unwrap();
        prop_assert!(p >= 2f64.powi(-(k as i32)) - 1e-12 && p <= 1.0 + 1e-12);
    }
}

#[test]
fn haar_two_qubit_marginal_purity_mean() {
    let samples = 1000;
    let mean: f64 = (0..samples)
        .map(|s| tesh_core::state::marginal_purity(&haar_random_state(4, s).unwrap(), &[0, 1]).unwrap())
        .sum::<f64>()
        / samples as f64;
    // Haar average (d_A + d_B) / (d_A d_B + 1) for d_A = d_B = 4.
    assert!((mean - 8.0 / 17.0).abs() < 0.01, "{mean}");
}

#[test]
fn subsets_cover_every_half_marginal() {
    assert_eq!(combinations(6, 3).count(), 20);
}
