//! Weight enumerators of pure states, their shadow transforms, and the
//! linear program that bounds the average half-size marginal purity from
//! below.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use tesh_conic::{solve, Cone, ConicProblem, SolveStatus, SolverSettings, SparseSym};

use crate::combinatorics::{binomial, binomial_i, combinations};
use crate::error::{Result, TeshError};
use crate::state::{marginal_purity, StateVector};

/// `K_m(k) = Σ_α C(n−k, m−α) C(k, α) (−1)^α`.
pub fn krawtchouk(n: usize, m: usize, k: usize) -> Result<i64> {
    if m > n || k > n {
        return Err(TeshError::Argument(format!(
            "Krawtchouk index out of range: n={n}, m={m}, k={k}"
        )));
    }
    Ok(krawtchouk_unchecked(n, m, k))
}

fn krawtchouk_unchecked(n: usize, m: usize, k: usize) -> i64 {
    (0..=m)
        .map(|a| {
            let term = binomial_i((n - k) as i64, (m - a) as i64) * binomial_i(k as i64, a as i64);
            if a % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .sum()
}

/// Summed marginal purities `a'_0 … a'_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumeratorVector {
    n: usize,
    aprime: Vec<f64>,
}

impl EnumeratorVector {
    pub fn new(aprime: Vec<f64>) -> Result<Self> {
        if aprime.len() < 2 {
            return Err(TeshError::InvalidSize("need at least a'_0 and a'_1".into()));
        }
        if (aprime[0] - 1.0).abs() > 1e-12 {
            return Err(TeshError::Argument(format!("a'_0 must be 1, got {}", aprime[0])));
        }
        if aprime.iter().any(|v| !v.is_finite() || *v < -1e-12) {
            return Err(TeshError::Argument("a' entries must be finite and non-negative".into()));
        }
        Ok(Self {
            n: aprime.len() - 1,
            aprime,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn aprime(&self) -> &[f64] {
        &self.aprime
    }
}

/// `a'_j = Σ_{|S|=j} tr ϱ_S²`, with `a'_0 = a'_n = 1`.
pub fn aprime_from_state(psi: &StateVector) -> Result<EnumeratorVector> {
    let n = psi.num_qubits();
    let mut aprime = vec![1.0; n + 1];
    for (j, slot) in aprime.iter_mut().enumerate().take(n).skip(1) {
        let mut total = 0.0;
        for s in combinations(n, j) {
            total += marginal_purity(psi, &s)?;
        }
        *slot = total;
    }
    EnumeratorVector::new(aprime)
}

/// Row `j` of the map `a' ↦ A`: coefficients of `a'_r`.
fn a_row(n: usize, j: usize) -> Vec<f64> {
    (0..=n)
        .map(|r| {
            if r > j {
                return 0.0;
            }
            let sign = if (j - r) % 2 == 0 { 1.0 } else { -1.0 };
            sign * 2f64.powi(r as i32) * binomial(n - r, n - j) as f64
        })
        .collect()
}

/// Row `j` of the inverse map `A ↦ a'`: coefficients of `A_r`.
fn aprime_row(n: usize, j: usize) -> Vec<f64> {
    (0..=n)
        .map(|r| {
            if r > j {
                0.0
            } else {
                binomial(n - r, j - r) as f64 / 2f64.powi(j as i32)
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `A_j = Σ_r (−1)^{j−r} 2^r C(n−r, n−j) a'_r`.
pub fn a_from_aprime(e: &EnumeratorVector) -> Vec<f64> {
    (0..=e.n).map(|j| dot(&a_row(e.n, j), &e.aprime)).collect()
}

/// Inverse of [`a_from_aprime`].
pub fn aprime_from_a(n: usize, a: &[f64]) -> Vec<f64> {
    (0..=n).map(|j| dot(&aprime_row(n, j), a)).collect()
}

/// `S_j = Σ_k K_{n−j}(k) a'_k`.
pub fn shadow_from_aprime(e: &EnumeratorVector) -> Vec<f64> {
    let n = e.n;
    (0..=n)
        .map(|j| {
            (0..=n)
                .map(|k| krawtchouk_unchecked(n, n - j, k) as f64 * e.aprime[k])
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LpOptions {
    /// Also impose `a'_j ≤ C(n, j)` (every marginal purity is at most one).
    pub purity_caps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPCertificate {
    pub n: usize,
    /// Minimal average half-size purity; absent unless solved to optimality.
    pub value: Option<f64>,
    /// Optimal `a'` vector.
    pub aprime: Vec<f64>,
    pub status: SolveStatus,
    /// `|primal − dual|` of the solver.
    pub gap: f64,
    pub iterations: usize,
    pub seconds: f64,
}

fn check_lp_n(n: usize) -> Result<()> {
    if !(2..=12).contains(&n) {
        return Err(TeshError::Argument(format!("LP bound needs 2 ≤ n ≤ 12, got {n}")));
    }
    Ok(())
}

/// Linear equalities over the variables `Ã_j = A_j / 2^n` (orthant), as
/// dense rows with right-hand sides. Shadow inequalities are returned
/// separately and get their own slack.
struct LpRows {
    equalities: Vec<(Vec<f64>, f64)>,
    inequalities: Vec<(Vec<f64>, f64)>,
    objective: Vec<f64>,
}

fn lp_rows(n: usize, options: &LpOptions, fixed: &[(usize, f64)]) -> LpRows {
    let scale = 2f64.powi(n as i32);
    let ap: Vec<Vec<f64>> = (0..=n)
        .map(|j| aprime_row(n, j).iter().map(|c| c * scale).collect())
        .collect();
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    equalities.push((ap[0].clone(), 1.0));
    for j in 1..=n / 2 {
        if j != n - j {
            let row: Vec<f64> = ap[j].iter().zip(&ap[n - j]).map(|(a, b)| a - b).collect();
            equalities.push((row, 0.0));
        }
    }
    for j in 0..=n {
        let row: Vec<f64> = (0..=n)
            .map(|r| {
                (0..=n)
                    .map(|k| krawtchouk_unchecked(n, n - j, k) as f64 * ap[k][r])
                    .sum()
            })
            .collect();
        if (n - j) % 2 == 1 {
            equalities.push((row, 0.0));
        } else {
            inequalities.push((row, 0.0));
        }
    }
    if options.purity_caps {
        for (j, row) in ap.iter().enumerate() {
            // C(n,j) − a'_j ≥ 0
            inequalities.push((row.iter().map(|c| -c).collect(), -(binomial(n, j) as f64)));
        }
    }
    for &(j, v) in fixed {
        equalities.push((ap[j].clone(), v));
    }
    let h = n / 2;
    let objective = ap[h].iter().map(|c| c / binomial(n, h) as f64).collect();
    LpRows {
        equalities,
        inequalities,
        objective,
    }
}

/// Divides a row and its right-hand side by the largest coefficient.
fn normalize(row: &[f64], rhs: f64) -> (Vec<f64>, f64) {
    let s = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s == 0.0 {
        (row.to_vec(), rhs)
    } else {
        (row.iter().map(|v| v / s).collect(), rhs / s)
    }
}

/// Standard form: one orthant block holding `Ã_0 … Ã_n`, one slack per
/// inequality and, when `elastic`, a pair of deviation variables per
/// equality (objective = total deviation).
fn assemble_lp(n: usize, rows: &LpRows, elastic: bool) -> ConicProblem {
    let nineq = rows.inequalities.len();
    let neq = rows.equalities.len();
    let total = n + 1 + nineq + if elastic { 2 * (neq + nineq) } else { 0 };
    let mut p = ConicProblem::new(vec![Cone::NonNeg(total)]);
    if elastic {
        for k in n + 1 + nineq..total {
            p.objective.push(0, k, k, 1.0);
        }
    } else {
        for (r, &c) in rows.objective.iter().enumerate() {
            if c != 0.0 {
                p.objective.push(0, r, r, c);
            }
        }
    }
    let mut elastic_slot = n + 1 + nineq;
    let mut add = |p: &mut ConicProblem, row: &[f64], rhs: f64, slack: Option<usize>| {
        let (row, rhs) = normalize(row, rhs);
        let mut a = SparseSym::new();
        for (r, &c) in row.iter().enumerate() {
            if c != 0.0 {
                a.push(0, r, r, c);
            }
        }
        if let Some(k) = slack {
            a.push(0, k, k, -1.0);
        }
        if elastic {
            a.push(0, elastic_slot, elastic_slot, 1.0);
            a.push(0, elastic_slot + 1, elastic_slot + 1, -1.0);
            elastic_slot += 2;
        }
        p.add_constraint(a, rhs);
    };
    for (row, rhs) in &rows.equalities {
        add(&mut p, row, *rhs, None);
    }
    for (i, (row, rhs)) in rows.inequalities.iter().enumerate() {
        add(&mut p, row, *rhs, Some(n + 1 + i));
    }
    p.canonicalize();
    p
}

/// The lower-bound LP in standard form (for export or external solvers).
pub fn lp_problem(n: usize, options: &LpOptions) -> Result<ConicProblem> {
    check_lp_n(n)?;
    Ok(assemble_lp(n, &lp_rows(n, options, &[]), false))
}

pub fn lp_lower_bound(n: usize) -> Result<LPCertificate> {
    lp_lower_bound_with(n, &LpOptions::default())
}

pub fn lp_lower_bound_with(n: usize, options: &LpOptions) -> Result<LPCertificate> {
    let start = Instant::now();
    let problem = lp_problem(n, options)?;
    let sol = solve(&problem, &SolverSettings::default())?;
    let scale = 2f64.powi(n as i32);
    let a: Vec<f64> = (0..=n).map(|r| sol.x[0].get(r, r) * scale).collect();
    Ok(LPCertificate {
        n,
        value: sol.is_optimal().then_some(sol.primal_value),
        aprime: aprime_from_a(n, &a),
        status: sol.status,
        gap: sol.gap,
        iterations: sol.iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `C(n, j) 2^{−j}`: the summed purity of size-`j` marginals of an
/// absolutely maximally entangled state, `j ≤ n/2`.
pub fn ame_aprime(n: usize, j: usize) -> f64 {
    binomial(n, j) as f64 / 2f64.powi(j.min(n - j) as i32)
}

/// Feasibility tolerance of [`lp_ame_feasible`] on the total elastic
/// deviation.
pub const AME_FEASIBILITY_TOL: f64 = 1e-8;

/// Minimal total constraint violation of the LP with every `a'_j`,
/// `j ≤ ⌊n/2⌋`, pinned to its maximally-entangled value.
pub fn lp_ame_violation(n: usize) -> Result<f64> {
    check_lp_n(n)?;
    let fixed: Vec<(usize, f64)> = (1..=n / 2).map(|j| (j, ame_aprime(n, j))).collect();
    let rows = lp_rows(n, &LpOptions::default(), &fixed);
    let problem = assemble_lp(n, &rows, true);
    // the optimum of a feasible instance is zero, so only absolute accuracy
    // matters here
    let settings = SolverSettings {
        gap_tol: 1e-13,
        feas_tol: 1e-12,
        ..SolverSettings::default()
    };
    let sol = solve(&problem, &settings)?;
    if !sol.is_optimal() {
        return Err(TeshError::Numeric(format!(
            "phase-one LP for n={n} ended with status {:?}",
            sol.status
        )));
    }
    Ok(sol.primal_value.max(0.0))
}

pub fn lp_ame_feasible(n: usize) -> Result<bool> {
    Ok(lp_ame_violation(n)? <= AME_FEASIBILITY_TOL)
}
