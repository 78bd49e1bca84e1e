//! Helpers shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tesh_core::state::{StateVector, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar unitary from the QR decomposition of a complex Ginibre matrix.
pub fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_local(n: usize, rng: &mut ChaCha8Rng) -> Vec<Matrix2<C64>> {
    (0..n)
        .map(|_| {
            let u = random_unitary(2, rng);
            Matrix2::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)])
        })
        .collect()
}

/// Applies `gates[q]` to qubit `q` (qubit 0 is the most significant bit).
pub fn apply_local(psi: &StateVector, gates: &[Matrix2<C64>]) -> StateVector {
    let n = psi.num_qubits();
    let mut amps = psi.amplitudes().to_vec();
    for (q, g) in gates.iter().enumerate() {
        let bit = 1usize << (n - 1 - q);
        for i in 0..amps.len() {
            if i & bit == 0 {
                let (a, b) = (amps[i], amps[i | bit]);
                amps[i] = g[(0, 0)] * a + g[(0, 1)] * b;
                amps[i | bit] = g[(1, 0)] * a + g[(1, 1)] * b;
            }
        }
    }
    StateVector::from_unnormalized(n, amps).unwrap()
}

/// Random single-qubit Clifford as a word in `H` and `S`.
pub fn random_clifford(rng: &mut ChaCha8Rng) -> Matrix2<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = Matrix2::new(C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0));
    let p = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    let mut u = Matrix2::identity();
    for _ in 0..rng.random_range(0..12) {
        u = if rng.random::<bool>() { h * u } else { p * u };
    }
    u
}

/// Flat Dirichlet sample sorted in non-increasing order.
pub fn sorted_dirichlet(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}
