//! Spectral absolute-separability test for one-qubit-versus-rest cuts and
//! threshold-entanglement verification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::combinations;
use crate::error::{Result, TeshError};
use crate::state::{clamp_eigenvalues, partial_trace, sorted_eigen, spectrum, Bipartition, Spectrum, StateVector};

/// Default tolerance on θ when deciding absolute separability.
pub const DEFAULT_AS_TOL: f64 = 1e-9;

pub const REPORT_FORMAT: &str = "tesh-report-v1";

/// `λ₁ − λ_{D−1} − 2√(λ_{D−2}λ_D + ε²)` on a sorted slice with `D ≥ 4`.
pub(crate) fn theta_raw(v: &[f64], eps: f64) -> f64 {
    let d = v.len();
    v[0] - v[d - 2] - 2.0 * (v[d - 3] * v[d - 1] + eps * eps).max(0.0).sqrt()
}

/// θ of a spectrum; non-positive values certify absolute separability of a
/// qubit against the rest.
pub fn theta(lam: &Spectrum) -> Result<f64> {
    if lam.len() < 4 {
        return Err(TeshError::Argument(format!(
            "θ needs at least four eigenvalues, got {}",
            lam.len()
        )));
    }
    Ok(theta_raw(lam.values(), 0.0))
}

pub fn is_as(lam: &Spectrum, tol: f64) -> Result<bool> {
    Ok(theta(lam)? <= tol)
}

fn check_n(psi: &StateVector) -> Result<usize> {
    let n = psi.num_qubits();
    if n < 4 {
        return Err(TeshError::Argument(format!(
            "threshold entanglement needs n ≥ 4, got {n}"
        )));
    }
    Ok(n)
}

/// Sorted, clamped spectrum of the marginal on `subset`, skipping the
/// density-matrix validation used on the public path.
pub(crate) fn marginal_eigenvalues(psi: &StateVector, subset: &[usize]) -> Result<Vec<f64>> {
    let cut = Bipartition::new(psi.num_qubits(), subset);
    let rho = cut.marginal(psi.amplitudes());
    let (mut values, _) = sorted_eigen(&rho);
    clamp_eigenvalues(&mut values)?;
    Ok(values)
}

/// Sum over half-size subsets of `max(0, θ)²`.
pub fn cost_theta(psi: &StateVector) -> Result<f64> {
    let n = check_n(psi)?;
    let subsets: Vec<Vec<usize>> = combinations(n, n / 2).collect();
    let terms = subsets
        .par_iter()
        .map(|s| {
            let v = marginal_eigenvalues(psi, s)?;
            Ok(theta_raw(&v, 0.0).max(0.0).powi(2))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// θ of one marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub subset: Vec<usize>,
    pub size: usize,
    pub theta: f64,
    pub absolutely_separable: bool,
}

/// Outcome of checking every half-size marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TEReport {
    pub format: String,
    pub n: usize,
    pub tolerance: f64,
    /// Which criterion backs the verdict.
    pub criterion: String,
    pub records: Vec<SubsetRecord>,
    pub verdict: bool,
}

impl TEReport {
    pub fn max_theta(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.theta)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks θ ≤ `tol` on every marginal of ⌊n/2⌋ qubits. Smaller marginals
/// inherit the property by partial-trace monotonicity.
pub fn verify_te(psi: &StateVector, tol: f64) -> Result<TEReport> {
    let n = check_n(psi)?;
    if !(tol >= 0.0) {
        return Err(TeshError::Argument(format!("tolerance must be ≥ 0, got {tol}")));
    }
    let subsets: Vec<Vec<usize>> = combinations(n, n / 2).collect();
    let records = subsets
        .into_par_iter()
        .map(|s| {
            let lam = spectrum(&partial_trace(psi, &s)?)?;
            let t = theta(&lam)?;
            Ok(SubsetRecord {
                size: s.len(),
                subset: s,
                theta: t,
                absolutely_separable: t <= tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = records.iter().all(|r| r.absolutely_separable);
    Ok(TEReport {
        format: REPORT_FORMAT.to_string(),
        n,
        tolerance: tol,
        criterion: "AS_{1|rest} certified".to_string(),
        records,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{graph_state, phi4_state, GraphSpec};

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn theta_examples() {
        let t = theta(&spec(&[0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0])).unwrap();
        assert!(t.abs() <= 1e-15, "{t}");
        assert_eq!(theta(&spec(&[0.25; 4])).unwrap(), -0.5);
        assert_eq!(theta(&spec(&[1.0, 0.0, 0.0, 0.0])).unwrap(), 1.0);
        let r = 2f64.sqrt();
        let b = [(2.0 + r) / 8.0, (2.0 + r) / 8.0, (2.0 - r) / 8.0, (2.0 - r) / 8.0];
        assert!(theta(&spec(&b)).unwrap().abs() < 1e-12);
        assert!(theta(&spec(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn is_as_examples() {
        assert!(is_as(&spec(&[0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]), 1e-9).unwrap());
        assert!(!is_as(&spec(&[1.0, 0.0, 0.0, 0.0]), 1e-9).unwrap());
    }

    #[test]
    fn cost_examples() {
        assert!(cost_theta(&phi4_state()).unwrap() <= 1e-12);
        let zero = StateVector::zero(4).unwrap();
        assert!((cost_theta(&zero).unwrap() - 6.0).abs() < 1e-12);
        let c5 = graph_state(&GraphSpec::cycle(5).unwrap());
        assert_eq!(cost_theta(&c5).unwrap(), 0.0);
        assert!(cost_theta(&StateVector::zero(3).unwrap()).is_err());
    }

    #[test]
    fn verify_examples() {
        let r = verify_te(&phi4_state(), DEFAULT_AS_TOL).unwrap();
        assert!(r.verdict);
        assert_eq!(r.records.len(), 6);
        assert!(r.records.iter().all(|x| x.theta.abs() < 1e-12));
        assert!(!verify_te(&StateVector::zero(4).unwrap(), DEFAULT_AS_TOL).unwrap().verdict);
        let c5 = graph_state(&GraphSpec::cycle(5).unwrap());
        let r = verify_te(&c5, DEFAULT_AS_TOL).unwrap();
        assert!(r.verdict && r.records.len() == 10);
        assert!(verify_te(&c5, -1.0).is_err());
    }

    #[test]
    fn report_json_has_format_tag() {
        let r = verify_te(&phi4_state(), DEFAULT_AS_TOL).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["format"], REPORT_FORMAT);
        assert_eq!(v["records"].as_array().unwrap().len(), 6);
    }
}
