//! Riemannian gradient descent on the unit sphere for states whose
//! half-size marginals all pass the separability test.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::combinations;
use crate::error::{Result, TeshError};
use crate::separability::{theta_raw, verify_te, DEFAULT_AS_TOL};
use crate::state::{haar_random_state, sorted_eigen, Bipartition, StateVector, C64};

/// Eigenvalue gap below which the analytic gradient is not trusted.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// SplitMix64 finalizer applied to `(master, index)`.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub max_iterations: usize,
    pub initial_step: f64,
    /// Step multiplier after a rejected trial, in `(0, 1)`.
    pub backtrack: f64,
    /// Stop once the unsmoothed cost is at or below this.
    pub threshold: f64,
    pub gradient: GradientMode,
    /// Smoothing inside the square root of θ during descent.
    pub eps: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            initial_step: 1.0,
            backtrack: 0.5,
            threshold: 1e-14,
            gradient: GradientMode::Analytic,
            eps: 1e-8,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.initial_step > 0.0
            && self.initial_step.is_finite()
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.threshold > 0.0
            && self.threshold < DEFAULT_AS_TOL
            && self.eps >= 0.0
            && self.eps.is_finite();
        if ok {
            Ok(())
        } else {
            Err(TeshError::Argument(format!("invalid search parameters: {self:?}")))
        }
    }
}

/// Cut structure for all half-size subsets of an `n`-qubit state.
#[derive(Debug, Clone)]
pub(crate) struct CostModel {
    cuts: Vec<Bipartition>,
}

/// Per-cut eigen data reused by the gradient.
struct CutTerm {
    theta: f64,
    values: Vec<f64>,
    vectors: DMatrix<C64>,
    psi: DMatrix<C64>,
}

impl CostModel {
    pub fn new(n: usize) -> Self {
        let cuts = combinations(n, n / 2).map(|s| Bipartition::new(n, &s)).collect();
        Self { cuts }
    }

    fn term(&self, cut: &Bipartition, amps: &[C64], eps: f64) -> CutTerm {
        let psi = cut.reshape(amps);
        let rho = &psi * psi.adjoint();
        let (mut values, vectors) = sorted_eigen(&rho);
        // tiny negative round-off would poison the square root
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        CutTerm {
            theta: theta_raw(&values, eps),
            values,
            vectors,
            psi,
        }
    }

    /// `Σ max(0, θ_ε)²` on raw (not necessarily normalized) amplitudes.
    pub fn cost(&self, amps: &[C64], eps: f64) -> f64 {
        self.cuts
            .iter()
            .map(|c| self.term(c, amps, eps).theta.max(0.0).powi(2))
            .sum()
    }

    /// Euclidean gradient as interleaved `(re, im)` pairs, or `None` when an
    /// active term has a near-degenerate eigenvalue pair with different
    /// weights.
    fn euclidean_gradient(&self, amps: &[C64], eps: f64) -> Option<Vec<f64>> {
        let mut grad = vec![C64::new(0.0, 0.0); amps.len()];
        for cut in &self.cuts {
            let t = self.term(cut, amps, eps);
            if t.theta <= 0.0 {
                continue;
            }
            let v = &t.values;
            let d = v.len();
            let root = (v[d - 3] * v[d - 1] + eps * eps).sqrt();
            if root == 0.0 {
                return None;
            }
            let mut weights = vec![0.0; d];
            weights[0] += 1.0;
            weights[d - 2] -= 1.0;
            weights[d - 3] -= v[d - 1] / root;
            weights[d - 1] -= v[d - 3] / root;
            for i in 0..d - 1 {
                if (v[i] - v[i + 1]).abs() < DEGENERACY_GAP
                    && (weights[i] - weights[i + 1]).abs() > 1e-6
                {
                    return None;
                }
            }
            // W = Σ w_i v_i v_i†, gradient of tr(W ΨΨ†) is 2WΨ
            let mut w = DMatrix::<C64>::zeros(d, d);
            for (i, &wi) in weights.iter().enumerate() {
                if wi != 0.0 {
                    let col = t.vectors.column(i);
                    w += &col * col.adjoint() * C64::new(wi, 0.0);
                }
            }
            let g = &w * &t.psi * C64::new(4.0 * t.theta, 0.0);
            for a in 0..cut.rows {
                for c in 0..cut.cols {
                    grad[cut.index[a * cut.cols + c]] += g[(a, c)];
                }
            }
        }
        Some(grad.iter().flat_map(|z| [z.re, z.im]).collect())
    }

    /// Central differences of [`CostModel::cost`] in every real coordinate.
    fn fd_gradient(&self, amps: &[C64], eps: f64, h: f64) -> Vec<f64> {
        let dim = amps.len();
        (0..2 * dim)
            .into_par_iter()
            .map(|k| {
                let mut x = amps.to_vec();
                let unit = if k % 2 == 0 { C64::new(h, 0.0) } else { C64::new(0.0, h) };
                x[k / 2] += unit;
                let plus = self.cost(&x, eps);
                x[k / 2] -= unit * 2.0;
                let minus = self.cost(&x, eps);
                (plus - minus) / (2.0 * h)
            })
            .collect()
    }
}

/// Removes the component along `psi` (real inner product on `ℝ^{2^{n+1}}`).
fn project_tangent(psi: &[C64], g: &mut [f64]) {
    let dot: f64 = psi
        .iter()
        .enumerate()
        .map(|(i, z)| z.re * g[2 * i] + z.im * g[2 * i + 1])
        .sum();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    for (i, z) in psi.iter().enumerate() {
        g[2 * i] -= dot / norm * z.re;
        g[2 * i + 1] -= dot / norm * z.im;
    }
}

/// Tangent gradient of the smoothed cost.
#[derive(Debug, Clone, PartialEq)]
pub enum CostGradient {
    /// Interleaved `(re, im)` components, orthogonal to the state.
    Tangent(Vec<f64>),
    /// Eigenvalue degeneracy in an active term; use finite differences.
    Degenerate,
}

pub fn cost_gradient(psi: &StateVector, eps: f64) -> Result<CostGradient> {
    check_search_n(psi.num_qubits(), 4, 20)?;
    let model = CostModel::new(psi.num_qubits());
    Ok(match model.euclidean_gradient(psi.amplitudes(), eps) {
        Some(mut g) => {
            project_tangent(psi.amplitudes(), &mut g);
            CostGradient::Tangent(g)
        }
        None => CostGradient::Degenerate,
    })
}

/// Tangent gradient by central differences with step `h`.
pub fn finite_difference_gradient(psi: &StateVector, eps: f64, h: f64) -> Result<Vec<f64>> {
    check_search_n(psi.num_qubits(), 4, 20)?;
    let model = CostModel::new(psi.num_qubits());
    let mut g = model.fd_gradient(psi.amplitudes(), eps, h);
    project_tangent(psi.amplitudes(), &mut g);
    Ok(g)
}

fn check_search_n(n: usize, lo: usize, hi: usize) -> Result<()> {
    if n < lo || n > hi {
        return Err(TeshError::Argument(format!("qubit count {n} outside {lo}..={hi}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    #[serde(skip)]
    pub state: Option<StateVector>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Passed the separability check at the default tolerance without
    /// smoothing.
    pub verified: bool,
    pub seed: u64,
    /// Iterations that fell back to finite differences.
    pub fallback_iterations: usize,
    /// Smoothed cost at the start and after every accepted step.
    #[serde(skip)]
    pub history: Vec<f64>,
    /// Largest `|‖ψ‖² − 1|` over all iterates.
    pub max_norm_drift: f64,
}

impl SearchResult {
    pub fn is_success(&self) -> bool {
        self.converged && self.verified
    }
}

fn normalized(x: &[C64]) -> Vec<C64> {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    x.iter().map(|z| z / norm).collect()
}

/// Descends from `seed_state`; `seed` is recorded in the result only.
pub fn minimize_with_seed(seed_state: &StateVector, params: &SearchParams, seed: u64) -> Result<SearchResult> {
    params.validate()?;
    let n = seed_state.num_qubits();
    check_search_n(n, 4, 20)?;
    if (seed_state.norm_sqr() - 1.0).abs() > 1e-10 {
        return Err(TeshError::Argument("seed state is not normalized".into()));
    }
    let model = CostModel::new(n);
    let mut x = seed_state.amplitudes().to_vec();
    let mut smooth = model.cost(&x, params.eps);
    let mut exact = model.cost(&x, 0.0);
    let mut iterations = 0;
    let mut fallback_iterations = 0;
    let mut history = vec![smooth];
    let mut max_norm_drift: f64 = 0.0;
    while exact > params.threshold && iterations < params.max_iterations {
        let analytic = match params.gradient {
            GradientMode::Analytic => model.euclidean_gradient(&x, params.eps),
            GradientMode::FiniteDifference => None,
        };
        let mut g = match analytic {
            Some(g) => g,
            None => {
                if params.gradient == GradientMode::Analytic {
                    fallback_iterations += 1;
                }
                model.fd_gradient(&x, params.eps, 1e-6)
            }
        };
        project_tangent(&x, &mut g);
        if g.iter().all(|v| *v == 0.0) {
            break;
        }
        let mut step = params.initial_step;
        let mut accepted = None;
        while step > 1e-20 {
            let cand: Vec<C64> = x
                .iter()
                .enumerate()
                .map(|(i, z)| z - C64::new(g[2 * i], g[2 * i + 1]) * step)
                .collect();
            let cand = normalized(&cand);
            let c = model.cost(&cand, params.eps);
            if c < smooth {
                accepted = Some((cand, c));
                break;
            }
            step *= params.backtrack;
        }
        iterations += 1;
        match accepted {
            Some((cand, c)) => {
                let norm_sqr: f64 = cand.iter().map(|z| z.norm_sqr()).sum();
                max_norm_drift = max_norm_drift.max((norm_sqr - 1.0).abs());
                x = cand;
                smooth = c;
                history.push(c);
                exact = model.cost(&x, 0.0);
            }
            None => break,
        }
    }
    let state = StateVector::from_unnormalized(n, x)?;
    let converged = exact <= params.threshold;
    let verified = converged && verify_te(&state, DEFAULT_AS_TOL)?.verdict;
    Ok(SearchResult {
        state: Some(state),
        cost: exact,
        iterations,
        converged,
        verified,
        seed,
        fallback_iterations,
        history,
        max_norm_drift,
    })
}

pub fn minimize(seed_state: &StateVector, params: &SearchParams) -> Result<SearchResult> {
    minimize_with_seed(seed_state, params, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub n: usize,
    pub master_seed: u64,
    pub results: Vec<SearchResult>,
    pub successes: usize,
}

/// Runs [`minimize`] from `num_seeds` Haar-random states; results are in
/// seed order whatever the thread schedule.
pub fn search_te(n: usize, num_seeds: usize, master_seed: u64, params: &SearchParams) -> Result<SearchSummary> {
    check_search_n(n, 4, 9)?;
    params.validate()?;
    let results = (0..num_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = mix_seed(master_seed, i);
            let start = haar_random_state(n, seed)?;
            minimize_with_seed(&start, params, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let successes = results.iter().filter(|r| r.is_success()).count();
    Ok(SearchSummary {
        n,
        master_seed,
        results,
        successes,
    })
}
