//! Problem data in standard primal form.
//!
//! ```text
//!   minimize    C • X
//!   subject to  A_i • X = b_i      i = 1..m
//!               X ∈ K_1 × ... × K_p
//! ```
//!
//! Each `K_j` is either a nonnegative orthant (stored as a diagonal block) or
//! the cone of positive semidefinite matrices of a given side. The dual is
//!
//! ```text
//!   maximize    bᵀy
//!   subject to  Z = C − Σ y_i A_i ∈ K
//! ```
//!
//! Matrices are given as sparse symmetric block matrices listing the upper
//! triangle only, which is also how they travel through SDPA files.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ConicError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    /// Nonnegative orthant of the given dimension.
    NonNeg(usize),
    /// Positive semidefinite matrices of the given side.
    Psd(usize),
}

impl Cone {
    pub fn side(&self) -> usize {
        match *self {
            Cone::NonNeg(k) | Cone::Psd(k) => k,
        }
    }

    /// Number of scalar variables the cone contributes (`d(d+1)/2` for PSD).
    pub fn num_vars(&self) -> usize {
        match *self {
            Cone::NonNeg(k) => k,
            Cone::Psd(d) => d * (d + 1) / 2,
        }
    }

    /// Barrier parameter contribution.
    pub fn degree(&self) -> usize {
        self.side()
    }
}

/// One upper-triangle entry of a symmetric block matrix (`row <= col`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Sparse symmetric block-diagonal matrix, upper triangle only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    pub entries: Vec<SymEntry>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(row, col)` of `block`; the pair is reordered to the
    /// upper triangle.
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: f64) {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.entries.push(SymEntry {
            block,
            row,
            col,
            value,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts entries, merges duplicates and drops exact zeros.
    pub fn canonicalize(&mut self) {
        let mut merged: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for e in &self.entries {
            let (r, c) = if e.row <= e.col {
                (e.row, e.col)
            } else {
                (e.col, e.row)
            };
            *merged.entry((e.block, r, c)).or_insert(0.0) += e.value;
        }
        self.entries = merged
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((block, row, col), value)| SymEntry {
                block,
                row,
                col,
                value,
            })
            .collect();
    }

    /// `self • K` for block values `K` (full symmetric inner product).
    pub fn dot(&self, blocks: &[Block]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let scale = if e.row == e.col { 1.0 } else { 2.0 };
                scale * e.value * blocks[e.block].get(e.row, e.col)
            })
            .sum()
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let scale = if e.row == e.col { 1.0 } else { 2.0 };
                scale * e.value * e.value
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Adds `alpha * self` into dense block values.
    pub fn add_to(&self, alpha: f64, blocks: &mut [Block]) {
        for e in &self.entries {
            let v = alpha * e.value;
            match &mut blocks[e.block] {
                Block::Diagonal(d) => d[e.row] += v,
                Block::Dense(m) => {
                    m[(e.row, e.col)] += v;
                    if e.row != e.col {
                        m[(e.col, e.row)] += v;
                    }
                }
            }
        }
    }
}

/// Dense value of one cone block.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl Block {
    pub fn zeros(cone: Cone) -> Self {
        match cone {
            Cone::NonNeg(k) => Block::Diagonal(vec![0.0; k]),
            Cone::Psd(d) => Block::Dense(DMatrix::zeros(d, d)),
        }
    }

    pub fn identity(cone: Cone, scale: f64) -> Self {
        match cone {
            Cone::NonNeg(k) => Block::Diagonal(vec![scale; k]),
            Cone::Psd(d) => Block::Dense(DMatrix::identity(d, d) * scale),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        match self {
            Block::Diagonal(d) => {
                if row == col {
                    d[row]
                } else {
                    0.0
                }
            }
            Block::Dense(m) => m[(row, col)],
        }
    }

    /// Trace inner product `tr(self · other)` for symmetric blocks.
    pub fn inner(&self, other: &Block) -> f64 {
        match (self, other) {
            (Block::Diagonal(a), Block::Diagonal(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Block::Dense(a), Block::Dense(b)) => a.dot(b),
            _ => panic!("block kind mismatch"),
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    /// Smallest eigenvalue (entry for diagonal blocks).
    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            Block::Diagonal(d) => d.iter().copied().fold(f64::INFINITY, f64::min),
            Block::Dense(m) => {
                if m.nrows() == 0 {
                    return f64::INFINITY;
                }
                m.clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

pub fn blocks_inner(a: &[Block], b: &[Block]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

pub fn blocks_norm(a: &[Block]) -> f64 {
    a.iter().map(Block::frobenius_norm_sq).sum::<f64>().sqrt()
}

/// Conic problem in standard primal form (see module docs).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub cones: Vec<Cone>,
    pub objective: SparseSym,
    pub constraints: Vec<SparseSym>,
    pub rhs: Vec<f64>,
}

impl ConicProblem {
    pub fn new(cones: Vec<Cone>) -> Self {
        Self {
            cones,
            ..Self::default()
        }
    }

    pub fn add_constraint(&mut self, a: SparseSym, rhs: f64) -> usize {
        self.constraints.push(a);
        self.rhs.push(rhs);
        self.constraints.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Total number of scalar variables across all cones.
    pub fn num_vars(&self) -> usize {
        self.cones.iter().map(Cone::num_vars).sum()
    }

    /// Sum of the sides of all PSD blocks.
    pub fn psd_side(&self) -> usize {
        self.cones
            .iter()
            .map(|c| match c {
                Cone::Psd(d) => *d,
                Cone::NonNeg(_) => 0,
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.len() != self.rhs.len() {
            return Err(ConicError::InvalidProblem(format!(
                "{} constraint matrices but {} right-hand sides",
                self.constraints.len(),
                self.rhs.len()
            )));
        }
        if self.cones.iter().any(|c| c.side() == 0) {
            return Err(ConicError::InvalidProblem("empty cone block".into()));
        }
        let check = |m: &SparseSym, what: &str| -> Result<()> {
            for e in &m.entries {
                let cone = self.cones.get(e.block).ok_or_else(|| {
                    ConicError::InvalidProblem(format!("{what}: block {} out of range", e.block))
                })?;
                if e.row >= cone.side() || e.col >= cone.side() {
                    return Err(ConicError::InvalidProblem(format!(
                        "{what}: entry ({}, {}) outside block {} of side {}",
                        e.row,
                        e.col,
                        e.block,
                        cone.side()
                    )));
                }
                if matches!(cone, Cone::NonNeg(_)) && e.row != e.col {
                    return Err(ConicError::InvalidProblem(format!(
                        "{what}: off-diagonal entry in orthant block {}",
                        e.block
                    )));
                }
                if !e.value.is_finite() {
                    return Err(ConicError::InvalidProblem(format!(
                        "{what}: non-finite coefficient"
                    )));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, a) in self.constraints.iter().enumerate() {
            check(a, &format!("constraint {i}"))?;
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err(ConicError::InvalidProblem("non-finite right-hand side".into()));
        }
        Ok(())
    }

    pub fn canonicalize(&mut self) {
        self.objective.canonicalize();
        for a in &mut self.constraints {
            a.canonicalize();
        }
    }

    pub fn zero_blocks(&self) -> Vec<Block> {
        self.cones.iter().map(|&c| Block::zeros(c)).collect()
    }

    /// `b - A(X)`.
    pub fn primal_residual(&self, x: &[Block]) -> Vec<f64> {
        self.constraints
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| b - a.dot(x))
            .collect()
    }

    /// `C - Σ y_i A_i`.
    pub fn dual_slack(&self, y: &[f64]) -> Vec<Block> {
        let mut z = self.zero_blocks();
        self.objective.add_to(1.0, &mut z);
        for (a, &yi) in self.constraints.iter().zip(y) {
            if yi != 0.0 {
                a.add_to(-yi, &mut z);
            }
        }
        z
    }
}

/// Builds a problem whose *dual* reads `maximize bᵀy + const` over free `y`
/// subject to affine block constraints `F_0 + Σ y_k F_k ∈ K`.
///
/// This is the natural shape of moment relaxations and of LPs written over
/// free variables; the primal of the generated problem is the certificate
/// side (`C • X + const` is a valid upper bound for any primal-feasible `X`).
#[derive(Debug, Clone)]
pub struct LmiBuilder {
    cones: Vec<Cone>,
    constant: SparseSym,
    coefficients: Vec<SparseSym>,
    objective: Vec<f64>,
    objective_offset: f64,
}

impl LmiBuilder {
    pub fn new(num_vars: usize) -> Self {
        Self {
            cones: Vec::new(),
            constant: SparseSym::new(),
            coefficients: vec![SparseSym::new(); num_vars],
            objective: vec![0.0; num_vars],
            objective_offset: 0.0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_cone(&mut self, cone: Cone) -> usize {
        self.cones.push(cone);
        self.cones.len() - 1
    }

    /// Adds `constant + Σ coef·y_k` to entry `(row, col)` of `block`
    /// (and its mirror).
    pub fn add_entry(
        &mut self,
        block: usize,
        row: usize,
        col: usize,
        constant: f64,
        terms: &[(usize, f64)],
    ) {
        if constant != 0.0 {
            self.constant.push(block, row, col, constant);
        }
        for &(k, c) in terms {
            if c != 0.0 {
                self.coefficients[k].push(block, row, col, c);
            }
        }
    }

    /// Sets the objective `Σ coef·y_k + offset` to be maximized.
    pub fn set_objective(&mut self, terms: &[(usize, f64)], offset: f64) {
        self.objective.iter_mut().for_each(|c| *c = 0.0);
        for &(k, c) in terms {
            self.objective[k] += c;
        }
        self.objective_offset = offset;
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    /// Emits the standard-form problem: `C = F_0`, `A_k = -F_k`, `b = objective`.
    pub fn build(&self) -> ConicProblem {
        let mut p = ConicProblem::new(self.cones.clone());
        p.objective = self.constant.clone();
        p.objective.canonicalize();
        for (f, &b) in self.coefficients.iter().zip(&self.objective) {
            let mut a = SparseSym {
                entries: f
                    .entries
                    .iter()
                    .map(|e| SymEntry {
                        value: -e.value,
                        ..*e
                    })
                    .collect(),
            };
            a.canonicalize();
            p.add_constraint(a, b);
        }
        p
    }

    /// Evaluates every block `F_0 + Σ y_k F_k` at a given `y`.
    pub fn evaluate(&self, y: &[f64]) -> Vec<Block> {
        let mut blocks: Vec<Block> = self.cones.iter().map(|&c| Block::zeros(c)).collect();
        self.constant.add_to(1.0, &mut blocks);
        for (f, &yk) in self.coefficients.iter().zip(y) {
            if yk != 0.0 {
                f.add_to(yk, &mut blocks);
            }
        }
        blocks
    }
}
