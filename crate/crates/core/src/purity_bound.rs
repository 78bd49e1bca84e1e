//! Maximal purity of spectra that pass the one-qubit absolute-separability
//! test: a moment relaxation giving certified upper bounds and a multi-start
//! local search giving feasible lower witnesses.
//!
//! The relaxation works in centered coordinates `v_i = D·λ_i − 1`, which
//! vanish at the maximally mixed spectrum. `v_1 … v_{D−1}` are free and
//! `v_D = −Σ v_i`, so no large constants enter the localizing matrices.
//! Moments of degree `1..=2L` are the free variables of an LMI; the constant
//! moment is fixed to one.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tesh_conic::{solve, Block, Cone, ConicProblem, LmiBuilder, SolveStatus, SolverSettings};

use crate::combinatorics::binomial;
use crate::error::{Result, TeshError};
use crate::separability::theta_raw;
use crate::state::Spectrum;

/// Sorted multiset of variable indices.
pub type Monomial = Vec<u8>;

/// Sparse polynomial in the free scaled coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
struct Poly(BTreeMap<Monomial, f64>);

impl Poly {
    fn constant(c: f64) -> Self {
        let mut p = Poly::default();
        p.add_term(Vec::new(), c);
        p
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.0.entry(m.clone()).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.0.remove(&m);
        }
    }

    fn scaled(&self, c: f64) -> Self {
        Poly(self.0.iter().map(|(k, v)| (k.clone(), v * c)).collect())
    }

    fn plus(&self, other: &Poly) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.0 {
            out.add_term(k.clone(), *v);
        }
        out
    }

    fn minus(&self, other: &Poly) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    fn times(&self, other: &Poly) -> Self {
        let mut out = Poly::default();
        for (a, x) in &self.0 {
            for (b, y) in &other.0 {
                out.add_term(merge(a, b), x * y);
            }
        }
        out
    }
}

fn merge(a: &[u8], b: &[u8]) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// All monomials of degree `≤ deg` in `nv` variables, graded lexicographic.
fn monomials_up_to(nv: usize, deg: usize) -> Vec<Monomial> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Monomial> = vec![Vec::new()];
    for _ in 0..deg {
        let mut next = Vec::new();
        for m in &layer {
            let start = m.last().map_or(0, |&v| v as usize);
            for v in start..nv {
                let mut w = m.clone();
                w.push(v as u8);
                next.push(w);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Limits that keep relaxations at a size the embedded solver handles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationLimits {
    /// Largest moment-matrix side accepted.
    pub max_moment_side: usize,
    /// Largest number of free moments (Schur complement order).
    pub max_moments: usize,
}

impl Default for RelaxationLimits {
    fn default() -> Self {
        Self {
            max_moment_side: 500,
            max_moments: 10_000,
        }
    }
}

/// An assembled moment relaxation together with its bookkeeping.
#[derive(Debug, Clone)]
pub struct MomentRelaxation {
    pub m: usize,
    pub dim: usize,
    pub level: usize,
    /// Row/column labels of the moment matrix.
    pub basis: Vec<Monomial>,
    /// Monomial → free-variable index (the constant monomial is not a
    /// variable).
    pub index: HashMap<Monomial, usize>,
    builder: LmiBuilder,
    problem: ConicProblem,
}

/// Side of the moment matrix for `nv` variables at `level`.
pub fn moment_side(nv: usize, level: usize) -> usize {
    binomial(nv + level, level) as usize
}

fn check_args(m: usize, level: usize) -> Result<()> {
    if !(2..=4).contains(&m) {
        return Err(TeshError::Argument(format!("marginal size m={m} outside 2..=4")));
    }
    if !(1..=3).contains(&level) {
        return Err(TeshError::Argument(format!("relaxation level {level} outside 1..=3")));
    }
    Ok(())
}

pub fn assemble_relaxation(m: usize, level: usize) -> Result<MomentRelaxation> {
    assemble_relaxation_with(m, level, &RelaxationLimits::default())
}

pub fn assemble_relaxation_with(
    m: usize,
    level: usize,
    limits: &RelaxationLimits,
) -> Result<MomentRelaxation> {
    check_args(m, level)?;
    let dim = 1usize << m;
    let nv = dim - 1;
    let side = moment_side(nv, level);
    let num_moments = moment_side(nv, 2 * level) - 1;
    if side > limits.max_moment_side || num_moments > limits.max_moments {
        return Err(TeshError::Refused(format!(
            "m={m} level={level} needs a {side}×{side} moment matrix and {num_moments} moments \
             (limits {} and {})",
            limits.max_moment_side, limits.max_moments
        )));
    }

    let all = monomials_up_to(nv, 2 * level);
    let index: HashMap<Monomial, usize> = all
        .iter()
        .skip(1)
        .enumerate()
        .map(|(k, mono)| (mono.clone(), k))
        .collect();
    let basis = monomials_up_to(nv, level);
    let low_basis = monomials_up_to(nv, level - 1);

    // scaled eigenvalues u_i = D·λ_i = 1 + v_i in the free coordinates
    let u: Vec<Poly> = (0..dim)
        .map(|i| {
            let mut p = Poly::constant(1.0);
            if i < nv {
                p.add_term(vec![i as u8], 1.0);
            } else {
                for k in 0..nv {
                    p.add_term(vec![k as u8], -1.0);
                }
            }
            p
        })
        .collect();
    let (a, b, c, d) = (&u[0], &u[dim - 3], &u[dim - 2], &u[dim - 1]);
    let spread = a.minus(c);
    let quadratic = d.times(b).scaled(4.0).minus(&spread.times(&spread));

    let mut builder = LmiBuilder::new(all.len() - 1);
    let put = |builder: &mut LmiBuilder, block: usize, row: usize, col: usize, p: &Poly| {
        let mut constant = 0.0;
        let mut terms = Vec::with_capacity(p.0.len());
        for (mono, &coef) in &p.0 {
            if mono.is_empty() {
                constant += coef;
            } else {
                terms.push((index[mono], coef));
            }
        }
        builder.add_entry(block, row, col, constant, &terms);
    };

    let moment_block = builder.add_cone(Cone::Psd(side));
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate().skip(i) {
            let mut p = Poly::default();
            p.add_term(merge(bi, bj), 1.0);
            put(&mut builder, moment_block, i, j, &p);
        }
    }

    // scalar constraints collected into one orthant block
    let mut scalars: Vec<Poly> = Vec::new();
    // linear and quadratic constraints both use the degree ≤ L−1 basis
    let localize = |builder: &mut LmiBuilder, g: &Poly, scalars: &mut Vec<Poly>| {
        let basis = &low_basis;
        if basis.len() == 1 {
            scalars.push(g.clone());
            return;
        }
        let blk = builder.add_cone(Cone::Psd(basis.len()));
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate().skip(i) {
                let mut w = Poly::default();
                w.add_term(merge(bi, bj), 1.0);
                put(builder, blk, i, j, &g.times(&w));
            }
        }
    };
    localize(&mut builder, d, &mut scalars);
    for i in 0..dim - 1 {
        localize(&mut builder, &u[i].minus(&u[i + 1]), &mut scalars);
    }
    localize(&mut builder, &quadratic, &mut scalars);

    // 2×2 matrix form of the criterion, localized by the degree ≤ L−1 basis
    let s = low_basis.len();
    let matrix_block = builder.add_cone(Cone::Psd(2 * s));
    let g = [[d.scaled(2.0), spread.clone()], [spread.clone(), b.scaled(2.0)]];
    for r in 0..2 * s {
        for col in r..2 * s {
            let (ra, ma) = (r / s, &low_basis[r % s]);
            let (cb, mb) = (col / s, &low_basis[col % s]);
            let mut w = Poly::default();
            w.add_term(merge(ma, mb), 1.0);
            put(&mut builder, matrix_block, r, col, &g[ra][cb].times(&w));
        }
    }

    // products of eigenvalues and of ordering gaps with eigenvalues
    for i in 0..dim {
        for j in i..dim {
            scalars.push(u[i].times(&u[j]));
        }
    }
    for i in 0..dim - 1 {
        let gap = u[i].minus(&u[i + 1]);
        for uj in &u {
            scalars.push(gap.times(uj));
        }
    }
    let orthant = builder.add_cone(Cone::NonNeg(scalars.len()));
    for (k, p) in scalars.iter().enumerate() {
        put(&mut builder, orthant, k, k, p);
    }

    // purity = Σ u_i² / D²
    let mut objective = Poly::default();
    for ui in &u {
        objective = objective.plus(&ui.times(ui));
    }
    let objective = objective.scaled(1.0 / (dim * dim) as f64);
    let mut offset = 0.0;
    let mut terms = Vec::new();
    for (mono, &coef) in &objective.0 {
        if mono.is_empty() {
            offset += coef;
        } else {
            terms.push((index[mono], coef));
        }
    }
    builder.set_objective(&terms, offset);
    let problem = builder.build();
    Ok(MomentRelaxation {
        m,
        dim,
        level,
        basis,
        index,
        builder,
        problem,
    })
}

impl MomentRelaxation {
    pub fn moment_matrix_side(&self) -> usize {
        self.basis.len()
    }

    pub fn num_moments(&self) -> usize {
        self.index.len()
    }

    /// The conic problem whose primal value plus [`Self::objective_offset`]
    /// bounds the maximal purity from above.
    pub fn problem(&self) -> &ConicProblem {
        &self.problem
    }

    pub fn objective_offset(&self) -> f64 {
        self.builder.objective_offset()
    }

    /// Moments of the point mass at a spectrum (sorted, summing to one).
    pub fn moment_vector(&self, lam: &[f64]) -> Result<Vec<f64>> {
        if lam.len() != self.dim {
            return Err(TeshError::Argument(format!(
                "spectrum of length {} for D={}",
                lam.len(),
                self.dim
            )));
        }
        let v: Vec<f64> = lam.iter().map(|l| l * self.dim as f64 - 1.0).collect();
        let mut y = vec![0.0; self.index.len()];
        for (mono, &k) in &self.index {
            y[k] = mono.iter().map(|&i| v[i as usize]).product();
        }
        Ok(y)
    }

    /// Smallest eigenvalue over every constraint block at moments `y`
    /// (non-negative means feasible).
    pub fn min_constraint_eigenvalue(&self, y: &[f64]) -> f64 {
        self.builder
            .evaluate(y)
            .iter()
            .map(Block::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    /// Relaxation objective at moments `y`.
    pub fn objective_at(&self, y: &[f64]) -> f64 {
        self.problem
            .rhs
            .iter()
            .zip(y)
            .map(|(b, v)| b * v)
            .sum::<f64>()
            + self.objective_offset()
    }
}

/// Result of solving one relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityBound {
    pub m: usize,
    pub level: usize,
    /// Certified upper bound; absent unless the solver reached optimality.
    pub value: Option<f64>,
    /// Objective at the moment vector (lower end of the solver gap).
    pub moment_value: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub gap: f64,
    pub moment_matrix_side: usize,
    pub num_moments: usize,
    pub seconds: f64,
}

pub fn upper_bound(m: usize, level: usize) -> Result<PurityBound> {
    upper_bound_with(m, level, &RelaxationLimits::default(), &SolverSettings::default())
}

pub fn upper_bound_with(
    m: usize,
    level: usize,
    limits: &RelaxationLimits,
    settings: &SolverSettings,
) -> Result<PurityBound> {
    let start = Instant::now();
    let relax = assemble_relaxation_with(m, level, limits)?;
    let sol = solve(relax.problem(), settings)?;
    let offset = relax.objective_offset();
    Ok(PurityBound {
        m,
        level,
        value: sol.is_optimal().then_some(sol.primal_value + offset),
        moment_value: sol.dual_value + offset,
        status: sol.status,
        iterations: sol.iterations,
        gap: sol.gap,
        moment_matrix_side: relax.moment_matrix_side(),
        num_moments: relax.num_moments(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Best separable spectrum found by local search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub spectrum: Spectrum,
    pub purity: f64,
    pub restarts: usize,
}

pub const DEFAULT_RESTARTS: usize = 200;

/// Pool-adjacent-violators fit of a non-increasing sequence.
fn decreasing_fit(v: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            *last = ((m1 * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64, c1 + c2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, c)| std::iter::repeat_n(m, c))
        .collect()
}

/// Euclidean projection onto sorted probability vectors.
pub(crate) fn project_sorted_simplex(v: &[f64]) -> Vec<f64> {
    let fit = decreasing_fit(v);
    let mass = |tau: f64| fit.iter().map(|x| (x - tau).max(0.0)).sum::<f64>();
    let mut lo = fit[fit.len() - 1] - 1.0;
    let mut hi = fit[0];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-17 * (1.0 + hi.abs()) {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut out: Vec<f64> = fit.iter().map(|x| (x - tau).max(0.0)).collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= s);
    out
}

fn theta_gradient(v: &[f64], eps: f64) -> Vec<f64> {
    let d = v.len();
    let mut g = vec![0.0; d];
    let root = (v[d - 3] * v[d - 1] + eps * eps).sqrt();
    g[0] += 1.0;
    g[d - 2] -= 1.0;
    g[d - 3] -= v[d - 1] / root;
    g[d - 1] -= v[d - 3] / root;
    g
}

/// Moves `v` toward the uniform spectrum just far enough to satisfy θ ≤ 0.
/// θ is convex, so feasibility along the segment is an interval ending at
/// the uniform point.
fn repair(v: &[f64]) -> Vec<f64> {
    if theta_raw(v, 0.0) <= 0.0 {
        return v.to_vec();
    }
    let d = v.len() as f64;
    let mix = |t: f64| -> Vec<f64> { v.iter().map(|x| (1.0 - t) * x + t / d).collect() };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if theta_raw(&mix(mid), 0.0) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    mix(hi)
}

fn purity(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// One augmented-Lagrangian ascent from a random sorted start.
fn local_ascent(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gamma = Gamma::new(0.5, 1.0).expect("valid shape");
    let raw: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
    let mut sorted = raw;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = sorted.iter().sum();
    let mut x: Vec<f64> = sorted.iter().map(|v| v / total).collect();

    let eps = 1e-9;
    let mut rho = 10.0;
    let mut nu = 0.0f64;
    let mut last_violation = f64::INFINITY;
    for _outer in 0..40 {
        // maximize  Σx² − (1/2ρ)(max(0, ν + ρθ)² − ν²)
        let value = |x: &[f64]| {
            let t = theta_raw(x, eps);
            let s = (nu + rho * t).max(0.0);
            purity(x) - (s * s - nu * nu) / (2.0 * rho)
        };
        let mut step = 0.1 / rho;
        for _ in 0..400 {
            let t = theta_raw(&x, eps);
            let s = (nu + rho * t).max(0.0);
            let gt = theta_gradient(&x, eps);
            let grad: Vec<f64> = x.iter().zip(&gt).map(|(xi, gi)| 2.0 * xi - s * gi).collect();
            let f0 = value(&x);
            let mut moved = false;
            for _ in 0..40 {
                let cand: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + step * gi).collect();
                let cand = project_sorted_simplex(&cand);
                let f1 = value(&cand);
                if f1 > f0 + 1e-16 {
                    let change: f64 = cand.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
                    x = cand;
                    moved = change > 1e-15;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let t = theta_raw(&x, 0.0);
        nu = (nu + rho * t).max(0.0);
        let violation = t.max(0.0);
        if violation > 0.25 * last_violation {
            rho *= 2.0;
        }
        last_violation = violation;
        if violation < 1e-13 && _outer > 5 {
            break;
        }
    }
    repair(&x)
}

/// Multi-start local search for the purest separable spectrum on `m` qubits.
/// Restarts use per-restart seeds so the result does not depend on thread
/// scheduling.
pub fn oracle_max_purity(m: usize, restarts: usize, seed: u64) -> Result<OracleResult> {
    if !(2..=4).contains(&m) {
        return Err(TeshError::Argument(format!("marginal size m={m} outside 2..=4")));
    }
    let restarts = restarts.max(1);
    let dim = 1usize << m;
    let candidates: Vec<Vec<f64>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::search::mix_seed(seed, r as u64));
            local_ascent(dim, &mut rng)
        })
        .collect();
    let best = candidates
        .into_iter()
        .max_by(|a, b| purity(a).total_cmp(&purity(b)))
        .expect("at least one restart");
    let spectrum = Spectrum::new(best)?;
    Ok(OracleResult {
        purity: spectrum.purity(),
        spectrum,
        restarts,
    })
}
