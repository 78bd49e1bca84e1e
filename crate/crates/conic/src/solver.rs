//! Infeasible-start primal-dual path-following method with the HKM search
//! direction and Mehrotra predictor-corrector steps.
//!
//! Orthant blocks are treated as diagonal PSD blocks, so LPs and SDPs share
//! one code path.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::{self, SymMatrix};
use crate::error::{ConicError, Result};
use crate::problem::{blocks_inner, blocks_norm, Block, ConicProblem, Cone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Relative duality gap `|p − d| / (1 + |p| + |d|)`.
    pub gap_tol: f64,
    /// Relative primal and dual residual norms.
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// Guard on the summed side of all PSD blocks.
    pub max_psd_side: usize,
    /// Emit one line per iteration on stderr.
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-9,
            max_iterations: 200,
            max_psd_side: 1200,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// `C • X` at the returned iterate.
    pub primal_value: f64,
    /// `bᵀy` at the returned iterate.
    pub dual_value: f64,
    pub x: Vec<Block>,
    pub y: Vec<f64>,
    pub z: Vec<Block>,
    pub iterations: usize,
    /// `‖b − A(X)‖ / (1 + ‖b‖)`.
    pub primal_residual: f64,
    /// `‖C − Aᵀy − Z‖ / (1 + ‖C‖)`.
    pub dual_residual: f64,
    /// `|C•X − bᵀy|`.
    pub gap: f64,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Per-constraint, per-block nonzeros, mirrored for dense blocks.
struct RowBlock {
    block: usize,
    entries: Vec<(u32, u32, f64)>,
}

struct Compiled<'a> {
    problem: &'a ConicProblem,
    c: Vec<Block>,
    rows: Vec<Vec<RowBlock>>,
    /// For each dense block: (constraint, position in `rows[constraint]`).
    dense_touch: Vec<Vec<(usize, usize)>>,
    /// For each orthant block and coordinate: (constraint, coefficient).
    diag_touch: Vec<Vec<Vec<(usize, f64)>>>,
    b: Vec<f64>,
    nu: f64,
}

impl<'a> Compiled<'a> {
    fn new(problem: &'a ConicProblem, active: &[usize]) -> Self {
        let cones = &problem.cones;
        let mut c = problem.zero_blocks();
        problem.objective.add_to(1.0, &mut c);
        let mut rows = Vec::with_capacity(active.len());
        let mut dense_touch = vec![Vec::new(); cones.len()];
        let mut diag_touch: Vec<Vec<Vec<(usize, f64)>>> = cones
            .iter()
            .map(|c| match c {
                Cone::NonNeg(k) => vec![Vec::new(); *k],
                Cone::Psd(_) => Vec::new(),
            })
            .collect();
        for (i, &orig) in active.iter().enumerate() {
            let mut by_block: Vec<RowBlock> = Vec::new();
            for e in &problem.constraints[orig].entries {
                let rb = match by_block.iter_mut().position(|r| r.block == e.block) {
                    Some(p) => &mut by_block[p],
                    None => {
                        by_block.push(RowBlock {
                            block: e.block,
                            entries: Vec::new(),
                        });
                        by_block.last_mut().unwrap()
                    }
                };
                rb.entries.push((e.row as u32, e.col as u32, e.value));
                if e.row != e.col && matches!(cones[e.block], Cone::Psd(_)) {
                    rb.entries.push((e.col as u32, e.row as u32, e.value));
                }
            }
            for (pos, rb) in by_block.iter().enumerate() {
                match cones[rb.block] {
                    Cone::Psd(_) => dense_touch[rb.block].push((i, pos)),
                    Cone::NonNeg(_) => {
                        for &(r, _, v) in &rb.entries {
                            diag_touch[rb.block][r as usize].push((i, v));
                        }
                    }
                }
            }
            rows.push(by_block);
        }
        let b = active.iter().map(|&i| problem.rhs[i]).collect();
        let nu = cones.iter().map(|c| c.degree() as f64).sum();
        Self {
            problem,
            c,
            rows,
            dense_touch,
            diag_touch,
            b,
            nu,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// `A_i • K` for every constraint; `K` may be non-symmetric.
    fn apply_a(&self, k: &[Block]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|rb| match &k[rb.block] {
                        Block::Diagonal(d) => rb
                            .entries
                            .iter()
                            .map(|&(r, _, v)| v * d[r as usize])
                            .sum::<f64>(),
                        Block::Dense(mat) => rb
                            .entries
                            .iter()
                            .map(|&(r, c, v)| v * mat[(r as usize, c as usize)])
                            .sum::<f64>(),
                    })
                    .sum()
            })
            .collect()
    }

    /// `Σ y_i A_i`.
    fn apply_at(&self, y: &[f64]) -> Vec<Block> {
        let mut out = self.problem.zero_blocks();
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for rb in row {
                match &mut out[rb.block] {
                    Block::Diagonal(d) => {
                        for &(r, _, v) in &rb.entries {
                            d[r as usize] += yi * v;
                        }
                    }
                    Block::Dense(mat) => {
                        for &(r, c, v) in &rb.entries {
                            mat[(r as usize, c as usize)] += yi * v;
                        }
                    }
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = tr(A_i X A_j Z⁻¹)`, lower triangle.
    fn schur(&self, x: &[Block], zinv: &[Block]) -> SymMatrix {
        let m = self.m();
        let mut out = SymMatrix::zeros(m);
        for (bidx, cone) in self.problem.cones.iter().enumerate() {
            match cone {
                Cone::Psd(n) => {
                    let (Block::Dense(xm), Block::Dense(wm)) = (&x[bidx], &zinv[bidx]) else {
                        unreachable!()
                    };
                    let n = *n;
                    let xs = xm.as_slice();
                    let ws = wm.as_slice();
                    let touch = &self.dense_touch[bidx];
                    // G_i = X A_i W is formed on the fly per pair; matrices
                    // are symmetric so column-major indexing is irrelevant.
                    for (ti, &(i, pi)) in touch.iter().enumerate() {
                        let ei = &self.rows[i][pi].entries;
                        // dense G = X A_i W restricted to what A_j needs
                        let g = x_a_w(xs, ws, n, ei);
                        for &(j, pj) in &touch[..=ti] {
                            let ej = &self.rows[j][pj].entries;
                            let s: f64 = ej
                                .iter()
                                .map(|&(r, c, v)| v * g[c as usize * n + r as usize])
                                .sum();
                            let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                            *out.at_mut(hi, lo) += s;
                        }
                    }
                }
                Cone::NonNeg(_) => {
                    let (Block::Diagonal(xd), Block::Diagonal(zd)) = (&x[bidx], &zinv[bidx]) else {
                        unreachable!()
                    };
                    for (k, list) in self.diag_touch[bidx].iter().enumerate() {
                        let w = xd[k] * zd[k];
                        for (p, &(i, vi)) in list.iter().enumerate() {
                            for &(j, vj) in &list[..=p] {
                                let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                                *out.at_mut(hi, lo) += w * vi * vj;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Returns `X A W` as a dense `n × n` buffer (index `[row * n + col]`)
/// for sparse symmetric `A`.
fn x_a_w(x: &[f64], w: &[f64], n: usize, a: &[(u32, u32, f64)]) -> Vec<f64> {
    // (X A)[:, q] = Σ_p X[:, p] A[p, q]; then (X A W)[r, s] = Σ_q (X A)[r, q] W[q, s]
    let mut g = vec![0.0; n * n];
    for &(p, q, v) in a {
        let (p, q) = (p as usize, q as usize);
        // contribution v * X[:, p] ⊗ W[q, :]
        let xcol = &x[p * n..p * n + n];
        let wrow = &w[q * n..q * n + n];
        for (r, &xr) in xcol.iter().enumerate() {
            let f = v * xr;
            if f == 0.0 {
                continue;
            }
            let grow = &mut g[r * n..r * n + n];
            for (gs, &ws) in grow.iter_mut().zip(wrow) {
                *gs += f * ws;
            }
        }
    }
    g
}

fn check_guard(problem: &ConicProblem, settings: &SolverSettings) -> Result<()> {
    let side = problem.psd_side();
    if side > settings.max_psd_side {
        return Err(ConicError::SizeGuard {
            side,
            limit: settings.max_psd_side,
        });
    }
    Ok(())
}

/// Outcome of the linear-dependence presolve.
enum Presolve {
    Active(Vec<usize>),
    Inconsistent,
}

/// Drops linearly dependent equality rows, detecting inconsistent ones.
fn presolve(problem: &ConicProblem) -> Presolve {
    let m = problem.num_constraints();
    if m == 0 {
        return Presolve::Active(Vec::new());
    }
    // Gram matrix of the constraint matrices under the trace inner product.
    let mut gram = SymMatrix::zeros(m);
    // sparse accumulation keyed by (block,row,col)
    let mut index: std::collections::HashMap<(usize, usize, usize), Vec<(usize, f64)>> =
        std::collections::HashMap::new();
    for (i, a) in problem.constraints.iter().enumerate() {
        for e in &a.entries {
            let w: f64 = if e.row == e.col { 1.0 } else { 2.0 };
            index
                .entry((e.block, e.row, e.col))
                .or_default()
                .push((i, e.value * w.sqrt()));
        }
    }
    for list in index.values() {
        for (p, &(i, vi)) in list.iter().enumerate() {
            for &(j, vj) in &list[..=p] {
                let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                *gram.at_mut(hi, lo) += vi * vj;
            }
        }
    }
    let mut trial = gram.clone();
    let scale = gram.max_diagonal();
    if scale == 0.0 {
        return if problem.rhs.iter().all(|&b| b == 0.0) {
            Presolve::Active(Vec::new())
        } else {
            Presolve::Inconsistent
        };
    }
    if dense::cholesky(&mut trial).is_ok() {
        let min_pivot = (0..m).map(|i| trial.at(i, i)).fold(f64::INFINITY, f64::min);
        if min_pivot * min_pivot > 1e-12 * scale {
            return Presolve::Active((0..m).collect());
        }
    }
    let pc = dense::pivoted_cholesky(&gram, 1e-12);
    let lead = &pc.order[..pc.rank];
    let b_norm = 1.0 + problem.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    for &d in &pc.order[pc.rank..] {
        // express row d through the independent rows and compare rhs
        let mut w: Vec<f64> = lead.iter().map(|&i| sym_at(&gram, i, d)).collect();
        pc.solve_leading(&mut w);
        let predicted: f64 = lead.iter().zip(&w).map(|(&i, wi)| wi * problem.rhs[i]).sum();
        if (predicted - problem.rhs[d]).abs() > 1e-8 * b_norm {
            return Presolve::Inconsistent;
        }
    }
    let mut active = lead.to_vec();
    active.sort_unstable();
    Presolve::Active(active)
}

fn sym_at(g: &SymMatrix, i: usize, j: usize) -> f64 {
    if i >= j {
        g.at(i, j)
    } else {
        g.at(j, i)
    }
}

struct Factorized {
    /// Cholesky factor of each dense block of the iterate.
    chol: Vec<Option<DMatrix<f64>>>,
}

fn cholesky_blocks(v: &[Block]) -> Option<Factorized> {
    let mut chol = Vec::with_capacity(v.len());
    for b in v {
        match b {
            Block::Diagonal(d) => {
                if d.iter().any(|&x| !(x > 0.0)) {
                    return None;
                }
                chol.push(None);
            }
            Block::Dense(m) => {
                let c = m.clone().cholesky()?;
                chol.push(Some(c.l()));
            }
        }
    }
    Some(Factorized { chol })
}

fn inverse_blocks(v: &[Block]) -> Option<Vec<Block>> {
    v.iter()
        .map(|b| match b {
            Block::Diagonal(d) => Some(Block::Diagonal(d.iter().map(|x| 1.0 / x).collect())),
            Block::Dense(m) => {
                let inv = m.clone().cholesky()?.inverse();
                Some(Block::Dense(symmetrize(inv)))
            }
        })
        .collect()
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Largest `α` with `V + α·Δ` in the cone (may be infinite).
fn max_step(v: &[Block], fac: &Factorized, delta: &[Block]) -> f64 {
    let mut alpha = f64::INFINITY;
    for ((b, d), l) in v.iter().zip(delta).zip(&fac.chol) {
        match (b, d) {
            (Block::Diagonal(x), Block::Diagonal(dx)) => {
                for (&xi, &di) in x.iter().zip(dx) {
                    if di < 0.0 {
                        alpha = alpha.min(-xi / di);
                    }
                }
            }
            (Block::Dense(_), Block::Dense(dm)) => {
                let l = l.as_ref().unwrap();
                // eigenvalues of L⁻¹ Δ L⁻ᵀ
                let t = l.solve_lower_triangular(dm).unwrap();
                let t = l.solve_lower_triangular(&t.transpose()).unwrap();
                let t = symmetrize(t);
                let lmin = t
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if lmin < 0.0 {
                    alpha = alpha.min(-1.0 / lmin);
                }
            }
            _ => unreachable!(),
        }
    }
    alpha
}

fn axpy_blocks(alpha: f64, x: &[Block], y: &mut [Block]) {
    for (a, b) in x.iter().zip(y.iter_mut()) {
        match (a, b) {
            (Block::Diagonal(u), Block::Diagonal(v)) => {
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi += alpha * ui;
                }
            }
            (Block::Dense(u), Block::Dense(v)) => {
                *v += u * alpha;
            }
            _ => unreachable!(),
        }
    }
}

fn sub_blocks(a: &[Block], b: &[Block]) -> Vec<Block> {
    let mut out = a.to_vec();
    axpy_blocks(-1.0, b, &mut out);
    out
}

/// `P Q` block-wise (non-symmetric result for dense blocks).
fn mul_blocks(p: &[Block], q: &[Block]) -> Vec<Block> {
    p.iter()
        .zip(q)
        .map(|(a, b)| match (a, b) {
            (Block::Diagonal(u), Block::Diagonal(v)) => {
                Block::Diagonal(u.iter().zip(v).map(|(x, y)| x * y).collect())
            }
            (Block::Dense(u), Block::Dense(v)) => Block::Dense(u * v),
            _ => unreachable!(),
        })
        .collect()
}

fn scale_blocks(alpha: f64, p: &[Block]) -> Vec<Block> {
    let mut out = p.to_vec();
    for b in &mut out {
        match b {
            Block::Diagonal(u) => u.iter_mut().for_each(|x| *x *= alpha),
            Block::Dense(u) => *u *= alpha,
        }
    }
    out
}

fn sym_blocks(p: Vec<Block>) -> Vec<Block> {
    p.into_iter()
        .map(|b| match b {
            Block::Dense(m) => Block::Dense(symmetrize(m)),
            d => d,
        })
        .collect()
}

fn trace(settings: &SolverSettings, message: &str) {
    if settings.verbose {
        eprintln!("stop: {message}");
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves a conic problem; see the module docs for the method.
const REFINEMENT_STEPS: usize = 3;

/// Loosest iterate still reported as optimal when the strict tolerances
/// cannot be reached: absolute gap ≤ 1e-7·(1 + |primal|) and relative
/// residuals ≤ 1e-8.
const ACCEPT_GAP: f64 = 1e-7;
const ACCEPT_RESIDUAL: f64 = 1e-8;

pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    problem.validate()?;
    check_guard(problem, settings)?;

    let m_total = problem.num_constraints();
    let active = match presolve(problem) {
        Presolve::Active(a) => a,
        Presolve::Inconsistent => {
            return Ok(ConicSolution {
                status: SolveStatus::Infeasible,
                primal_value: f64::NAN,
                dual_value: f64::NAN,
                x: problem.zero_blocks(),
                y: vec![0.0; m_total],
                z: problem.zero_blocks(),
                iterations: 0,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                gap: f64::NAN,
            });
        }
    };
    let cp = Compiled::new(problem, &active);
    let m = cp.m();
    let cones = &problem.cones;

    // starting point
    let a_norms: Vec<Vec<f64>> = cones
        .iter()
        .enumerate()
        .map(|(bidx, _)| {
            cp.rows
                .iter()
                .map(|row| {
                    row.iter()
                        .filter(|rb| rb.block == bidx)
                        .map(|rb| rb.entries.iter().map(|e| e.2 * e.2).sum::<f64>())
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let mut x = Vec::with_capacity(cones.len());
    let mut z = Vec::with_capacity(cones.len());
    for (bidx, &cone) in cones.iter().enumerate() {
        let n = cone.side() as f64;
        let mut xi = 10f64.max(n.sqrt());
        let mut eta = 10f64.max(n.sqrt());
        for (i, &an) in a_norms[bidx].iter().enumerate() {
            if an > 0.0 {
                xi = xi.max(n * (1.0 + cp.b[i].abs()) / (1.0 + an));
                eta = eta.max(an);
            }
        }
        eta = eta.max(cp.c[bidx].frobenius_norm_sq().sqrt());
        x.push(Block::identity(cone, xi));
        z.push(Block::identity(cone, eta));
    }
    let mut y = vec![0.0; m];

    let b_norm = norm(&cp.b);
    let c_norm = blocks_norm(&cp.c);
    let mut status = SolveStatus::NumericalFailure;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut best: Option<(f64, Vec<Block>, Vec<f64>, Vec<Block>)> = None;
    let mut best_acceptable = false;

    for iter in 0..=settings.max_iterations {
        iterations = iter;
        let ax = cp.apply_a(&x);
        let rp: Vec<f64> = cp.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = cp.apply_at(&y);
        let rd = sub_blocks(&sub_blocks(&cp.c, &aty), &z);
        let pobj = blocks_inner(&cp.c, &x);
        let dobj: f64 = cp.b.iter().zip(&y).map(|(b, v)| b * v).sum();
        let pinf = norm(&rp) / (1.0 + b_norm);
        let dinf = blocks_norm(&rd) / (1.0 + c_norm);
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if settings.verbose {
            eprintln!(
                "iter {iter:3}  pobj {pobj:+.10e}  dobj {dobj:+.10e}  gap {rel_gap:.2e}  pinf {pinf:.2e}  dinf {dinf:.2e}"
            );
        }
        let merit = rel_gap.max(pinf).max(dinf);
        if best.as_ref().map_or(true, |b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone(), z.clone()));
            best_acceptable = (pobj - dobj).abs() <= ACCEPT_GAP * (1.0 + pobj.abs())
                && pinf <= ACCEPT_RESIDUAL
                && dinf <= ACCEPT_RESIDUAL;
        }
        if rel_gap <= settings.gap_tol && pinf <= settings.feas_tol && dinf <= settings.feas_tol {
            status = SolveStatus::Optimal;
            break;
        }
        // infeasibility certificates along diverging iterates
        if dobj > 0.0 && (c_norm + blocks_norm(&rd)) / dobj < 1e-8 && norm(&y) > 1e6 {
            status = SolveStatus::Infeasible;
            break;
        }
        if pobj < 0.0 && (b_norm + norm(&rp)) / (-pobj) < 1e-8 && blocks_norm(&x) > 1e6 {
            status = SolveStatus::Unbounded;
            break;
        }
        if iter == settings.max_iterations {
            break;
        }

        let Some(zinv) = inverse_blocks(&z) else {
            trace(settings, "slack matrix lost definiteness");
            break;
        };
        let (Some(xfac), Some(zfac)) = (cholesky_blocks(&x), cholesky_blocks(&z)) else {
            trace(settings, "iterate lost definiteness");
            break;
        };
        let mu = blocks_inner(&x, &z) / cp.nu;

        let schur = cp.schur(&x, &zinv);
        let mut factor = schur.clone();
        let mut reg = 0.0;
        let scale = schur.max_diagonal().max(1e-300);
        loop {
            if dense::cholesky(&mut factor).is_ok() {
                break;
            }
            reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
            if reg > 1e-6 * scale {
                break;
            }
            factor = schur.clone();
            factor.add_diagonal(reg);
        }
        if reg > 1e-6 * scale {
            trace(settings, "Schur complement is not positive definite");
            break;
        }
        if reg > 0.0 && settings.verbose {
            eprintln!("  Schur regularization {reg:.1e}");
        }

        // K(σ, corr) = σμZ⁻¹ − X − X Rd Z⁻¹ − corr
        let x_rd_zinv = mul_blocks(&mul_blocks(&x, &rd), &zinv);
        let direction = |sigma: f64, corr: Option<&Vec<Block>>| {
            let mut k = scale_blocks(sigma * mu, &zinv);
            axpy_blocks(-1.0, &x, &mut k);
            let base = k.clone();
            axpy_blocks(-1.0, &x_rd_zinv, &mut k);
            let mut base = base;
            if let Some(c) = corr {
                axpy_blocks(-1.0, c, &mut k);
                axpy_blocks(-1.0, c, &mut base);
            }
            let ak = cp.apply_a(&k);
            let rhs: Vec<f64> = rp.iter().zip(&ak).map(|(r, a)| r - a).collect();
            let mut dy = rhs.clone();
            dense::cholesky_solve(&factor, &mut dy);
            // iterative refinement against the assembled Schur matrix
            for _ in 0..REFINEMENT_STEPS {
                let mdy = dense::sym_matvec(&schur, &dy);
                let mut res: Vec<f64> = rhs.iter().zip(&mdy).map(|(r, v)| r - v).collect();
                dense::cholesky_solve(&factor, &mut res);
                dy.iter_mut().zip(&res).for_each(|(d, r)| *d += r);
            }
            let atdy = cp.apply_at(&dy);
            let dz = sub_blocks(&rd, &atdy);
            // ΔX = σμZ⁻¹ − X − corr − X ΔZ Z⁻¹
            let mut dx = base;
            axpy_blocks(-1.0, &mul_blocks(&mul_blocks(&x, &dz), &zinv), &mut dx);
            let mut dx = sym_blocks(dx);
            // X ΔZ Z⁻¹ loses accuracy as Z approaches the boundary; push the
            // remaining primal residual back through the same operator
            for _ in 0..REFINEMENT_STEPS {
                let adx = cp.apply_a(&dx);
                let mut w: Vec<f64> = rp.iter().zip(&adx).map(|(r, a)| r - a).collect();
                if norm(&w) <= 1e-15 * (1.0 + norm(&rp)) {
                    break;
                }
                dense::cholesky_solve(&factor, &mut w);
                let fix = mul_blocks(&mul_blocks(&x, &cp.apply_at(&w)), &zinv);
                axpy_blocks(1.0, &sym_blocks(fix), &mut dx);
            }
            (dx, dy, dz)
        };

        let (dx_a, _, dz_a) = direction(0.0, None);
        let ap = max_step(&x, &xfac, &dx_a).min(1.0);
        let ad = max_step(&z, &zfac, &dz_a).min(1.0);
        let mut x_aff = x.clone();
        axpy_blocks(ap, &dx_a, &mut x_aff);
        let mut z_aff = z.clone();
        axpy_blocks(ad, &dz_a, &mut z_aff);
        let mu_aff = blocks_inner(&x_aff, &z_aff) / cp.nu;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr = mul_blocks(&mul_blocks(&dx_a, &dz_a), &zinv);
        let (dx, dy, dz) = direction(sigma, Some(&corr));

        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * max_step(&x, &xfac, &dx)).min(1.0);
        let ad = (gamma * max_step(&z, &zfac, &dz)).min(1.0);
        if settings.verbose {
            eprintln!("  steps {ap:.3e} {ad:.3e}  sigma {sigma:.2e}");
        }
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                trace(settings, "step lengths stalled");
                break;
            }
        } else {
            stalls = 0;
        }
        axpy_blocks(ap, &dx, &mut x);
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
        axpy_blocks(ad, &dz, &mut z);
        x = sym_blocks(x);
        z = sym_blocks(z);
    }

    if status == SolveStatus::NumericalFailure {
        if let Some((_, bx, by, bz)) = best {
            x = bx;
            y = by;
            z = bz;
            if best_acceptable {
                status = SolveStatus::Optimal;
            }
        }
    }

    // report in terms of the original constraint list
    let mut y_full = vec![0.0; m_total];
    for (k, &i) in active.iter().enumerate() {
        y_full[i] = y[k];
    }
    let primal_value = blocks_inner(&cp.c, &x);
    let dual_value: f64 = problem.rhs.iter().zip(&y_full).map(|(b, v)| b * v).sum();
    let rp = problem.primal_residual(&x);
    let rd = sub_blocks(&problem.dual_slack(&y_full), &z);
    let full_b_norm = norm(&problem.rhs);
    Ok(ConicSolution {
        status,
        primal_value,
        dual_value,
        x,
        y: y_full,
        z,
        iterations,
        primal_residual: norm(&rp) / (1.0 + full_b_norm),
        dual_residual: blocks_norm(&rd) / (1.0 + c_norm),
        gap: (primal_value - dual_value).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LmiBuilder, SparseSym};

    #[test]
    fn psd_boundary_two_by_two() {
        // min t  s.t. [[t, 1], [1, t]] ⪰ 0   →   t = 1
        let mut b = LmiBuilder::new(1);
        let blk = b.add_cone(Cone::Psd(2));
        b.add_entry(blk, 0, 0, 0.0, &[(0, 1.0)]);
        b.add_entry(blk, 1, 1, 0.0, &[(0, 1.0)]);
        b.add_entry(blk, 0, 1, 1.0, &[]);
        b.set_objective(&[(0, -1.0)], 0.0);
        let sol = solve(&b.build(), &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.y[0] - 1.0).abs() < 1e-8, "t = {}", sol.y[0]);
        assert!((-sol.dual_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lp_lower_bound_on_scalar() {
        // min x s.t. x ≥ 3 written as x − s = 3, x, s ≥ 0
        let mut p = ConicProblem::new(vec![Cone::NonNeg(2)]);
        p.objective.push(0, 0, 0, 1.0);
        let mut a = SparseSym::new();
        a.push(0, 0, 0, 1.0);
        a.push(0, 1, 1, -1.0);
        p.add_constraint(a, 3.0);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let mut p = ConicProblem::new(vec![Cone::NonNeg(1)]);
        for rhs in [0.0, 1.0] {
            let mut a = SparseSym::new();
            a.push(0, 0, 0, 1.0);
            p.add_constraint(a, rhs);
        }
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn negative_rhs_on_orthant_is_infeasible() {
        // x1 + x2 = −1 with x ≥ 0
        let mut p = ConicProblem::new(vec![Cone::NonNeg(2)]);
        let mut a = SparseSym::new();
        a.push(0, 0, 0, 1.0);
        a.push(0, 1, 1, 1.0);
        p.add_constraint(a, -1.0);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray_is_detected() {
        // min −x1 s.t. x1 − x2 = 0, x ≥ 0
        let mut p = ConicProblem::new(vec![Cone::NonNeg(2)]);
        p.objective.push(0, 0, 0, -1.0);
        let mut a = SparseSym::new();
        a.push(0, 0, 0, 1.0);
        a.push(0, 1, 1, -1.0);
        p.add_constraint(a, 0.0);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn dependent_consistent_rows_are_dropped() {
        // x = 2 stated twice; min x
        let mut p = ConicProblem::new(vec![Cone::NonNeg(1)]);
        p.objective.push(0, 0, 0, 1.0);
        for _ in 0..2 {
            let mut a = SparseSym::new();
            a.push(0, 0, 0, 1.0);
            p.add_constraint(a, 2.0);
        }
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn size_guard_refuses() {
        let p = ConicProblem::new(vec![Cone::Psd(10)]);
        let settings = SolverSettings {
            max_psd_side: 5,
            ..SolverSettings::default()
        };
        assert!(matches!(
            solve(&p, &settings),
            Err(ConicError::SizeGuard { side: 10, limit: 5 })
        ));
    }
}
