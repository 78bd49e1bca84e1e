//! Stabilizer Rényi entropies and Pauli stabilizers of pure states.
//!
//! For a fixed bit-flip mask `x`, the expectations of all strings sharing
//! that mask are the Walsh–Hadamard transform of `k ↦ ψ*(k⊕x) ψ(k)`, up to
//! a phase. The full Pauli spectrum therefore costs `O(n·4ⁿ)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TeshError};
use crate::search::mix_seed;
use crate::state::{haar_random_state, pauli_expectation, Pauli, PauliString, StateVector, C64};

/// Largest qubit count for full Pauli enumeration.
pub const MAX_MAGIC_QUBITS: usize = 8;
/// Largest qubit count for Haar statistics.
pub const MAX_HAAR_MAGIC_QUBITS: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagicReport {
    pub n: usize,
    pub alpha: f64,
    /// Entropy in bits.
    pub entropy: f64,
    /// `Σ_P ⟨ψ|P|ψ⟩^{2α}`.
    pub moment_sum: f64,
    /// `log2(2ⁿ + 1) − 1`.
    pub bound: f64,
}

fn check_magic_n(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(TeshError::Refused(format!(
            "Pauli enumeration on {n} qubits exceeds the {limit}-qubit limit"
        )));
    }
    Ok(())
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        h *= 2;
    }
}

/// `⟨ψ|P_{x,z}|ψ⟩²` for every mask pair, indexed `[x * 2ⁿ + z]`.
fn squared_pauli_spectrum(amps: &[C64]) -> Vec<f64> {
    let dim = amps.len();
    let mut out = vec![0.0; dim * dim];
    out.par_chunks_mut(dim).enumerate().for_each(|(x, row)| {
        let mut re: Vec<f64> = Vec::with_capacity(dim);
        let mut im: Vec<f64> = Vec::with_capacity(dim);
        for (k, &a) in amps.iter().enumerate() {
            let f = amps[k ^ x].conj() * a;
            re.push(f.re);
            im.push(f.im);
        }
        walsh_hadamard(&mut re);
        walsh_hadamard(&mut im);
        for (slot, (r, i)) in row.iter_mut().zip(re.iter().zip(&im)) {
            *slot = r * r + i * i;
        }
    });
    out
}

/// Pauli string with the given bit-flip and phase masks.
fn pauli_from_masks(n: usize, x: usize, z: usize) -> PauliString {
    let letters = (0..n)
        .map(|q| {
            let bit = 1usize << (n - 1 - q);
            match (x & bit != 0, z & bit != 0) {
                (false, false) => Pauli::I,
                (true, false) => Pauli::X,
                (true, true) => Pauli::Y,
                (false, true) => Pauli::Z,
            }
        })
        .collect();
    PauliString::new(letters).expect("length checked by caller")
}

pub fn magic_bound(n: usize) -> f64 {
    ((2f64).powi(n as i32) + 1.0).log2() - 1.0
}

/// `S_α = log2(Σ_P ⟨P⟩^{2α} / 2ⁿ) / (1 − α)`.
pub fn stabilizer_renyi(psi: &StateVector, alpha: f64) -> Result<MagicReport> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(TeshError::Argument(format!("α must be positive, got {alpha}")));
    }
    if (alpha - 1.0).abs() < 1e-12 {
        return Err(TeshError::Argument("α = 1 is not supported".into()));
    }
    let n = psi.num_qubits();
    check_magic_n(n, MAX_MAGIC_QUBITS)?;
    let squares = squared_pauli_spectrum(psi.amplitudes());
    let dim = psi.dim() as f64;
    let total: f64 = squares.iter().sum();
    if (total - dim).abs() > 1e-8 {
        return Err(TeshError::Internal(format!(
            "Pauli spectrum sums to {total}, expected {dim}"
        )));
    }
    let moment_sum: f64 = squares.iter().map(|s| s.powf(alpha)).sum();
    let mut entropy = (moment_sum / dim).log2() / (1.0 - alpha);
    // Stabilizer states land a few ulps either side of zero.
    if entropy <= 0.0 && entropy > -1e-12 {
        entropy = 0.0;
    }
    Ok(MagicReport {
        n,
        alpha,
        entropy,
        moment_sum,
        bound: magic_bound(n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagicStats {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub mean: f64,
    pub std_dev: f64,
}

/// Sample mean and standard deviation of `S_2` over Haar-random states.
pub fn haar_magic_stats(n: usize, samples: usize, seed: u64) -> Result<MagicStats> {
    check_magic_n(n, MAX_HAAR_MAGIC_QUBITS)?;
    if samples == 0 {
        return Err(TeshError::Argument("need at least one sample".into()));
    }
    let values = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let psi = haar_random_state(n, mix_seed(seed, i))?;
            Ok(stabilizer_renyi(&psi, 2.0)?.entropy)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std_dev) = mean_std(&values);
    Ok(MagicStats {
        n,
        samples,
        seed,
        mean,
        std_dev,
    })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Non-identity Pauli strings with `|⟨P⟩| ≥ 1 − tol`, with the sign of the
/// expectation, in base-4 order `I < X < Y < Z`.
pub fn find_pauli_stabilizers(psi: &StateVector, tol: f64) -> Result<Vec<(PauliString, i8)>> {
    let n = psi.num_qubits();
    check_magic_n(n, MAX_MAGIC_QUBITS)?;
    let dim = psi.dim();
    let squares = squared_pauli_spectrum(psi.amplitudes());
    let threshold = (1.0 - tol).max(0.0).powi(2);
    let mut found = Vec::new();
    for x in 0..dim {
        for z in 0..dim {
            if (x, z) != (0, 0) && squares[x * dim + z] >= threshold - 1e-12 {
                let p = pauli_from_masks(n, x, z);
                let v = pauli_expectation(psi, &p)?;
                if v.abs() >= 1.0 - tol {
                    found.push((p, if v > 0.0 { 1 } else { -1 }));
                }
            }
        }
    }
    found.sort();
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::phi4_state;

    #[test]
    fn stabilizer_states_have_zero_magic() {
        for n in 1..=4 {
            let r = stabilizer_renyi(&StateVector::zero(n).unwrap(), 2.0).unwrap();
            assert!(r.entropy.abs() < 1e-12);
        }
    }

    #[test]
    fn t_state_magic() {
        let s = 1.0 / 2f64.sqrt();
        let psi = StateVector::new(1, vec![C64::new(s, 0.0), C64::from_polar(s, std::f64::consts::FRAC_PI_4)])
            .unwrap();
        let r = stabilizer_renyi(&psi, 2.0).unwrap();
        assert!((r.entropy - (4.0f64 / 3.0).log2()).abs() < 1e-9);
        assert!((r.moment_sum - 1.5).abs() < 1e-12);
    }

    #[test]
    fn spectrum_matches_direct_expectations() {
        let psi = haar_random_state(3, 5).unwrap();
        let squares = squared_pauli_spectrum(psi.amplitudes());
        for x in 0..8 {
            for z in 0..8 {
                let p = pauli_from_masks(3, x, z);
                let v = pauli_expectation(&psi, &p).unwrap();
                assert!((squares[x * 8 + z] - v * v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bound_values() {
        assert!((magic_bound(1) - (3f64.log2() - 1.0)).abs() < 1e-15);
        assert!((magic_bound(4) - 3.0875).abs() < 1e-4);
        assert!((magic_bound(7) - 6.0112).abs() < 1e-4);
    }

    #[test]
    fn argument_checks() {
        let psi = StateVector::zero(2).unwrap();
        assert!(stabilizer_renyi(&psi, 1.0).is_err());
        assert!(stabilizer_renyi(&psi, 0.0).is_err());
        assert!(stabilizer_renyi(&StateVector::zero(9).unwrap(), 2.0).is_err());
        assert!(haar_magic_stats(8, 1, 0).is_err());
        assert!(haar_magic_stats(2, 0, 0).is_err());
    }

    #[test]
    fn phi4_stabilizers() {
        let found = find_pauli_stabilizers(&phi4_state(), 1e-9).unwrap();
        let names: Vec<(String, i8)> = found.iter().map(|(p, s)| (p.to_string(), *s)).collect();
        assert_eq!(
            names,
            vec![("XXXX".to_string(), 1), ("YYYY".to_string(), 1), ("ZZZZ".to_string(), 1)]
        );
        let found = find_pauli_stabilizers(&StateVector::zero(2).unwrap(), 1e-9).unwrap();
        let names: Vec<String> = found.iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(names, vec!["IZ", "ZI", "ZZ"]);
        assert!(find_pauli_stabilizers(&haar_random_state(4, 1).unwrap(), 1e-9)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn single_qubit_haar_mean_is_bounded() {
        let s = haar_magic_stats(1, 50, 3).unwrap();
        assert!(s.mean >= 0.0 && s.mean <= magic_bound(1));
    }
}
