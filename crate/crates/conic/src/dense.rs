//! Row-major dense symmetric kernels for the Schur complement system.
//!
//! Only the lower triangle of the buffers is read or written.

const BLOCK: usize = 64;

/// Row-major square matrix with lower-triangle storage semantics.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.at(i, i)).fold(0.0, f64::max)
    }

    pub fn add_diagonal(&mut self, delta: f64) {
        for i in 0..self.n {
            *self.at_mut(i, i) += delta;
        }
    }
}

/// In-place lower Cholesky factorization `A = L Lᵀ`.
///
/// Returns the index of the first non-positive pivot on failure; the buffer
/// is then left partially overwritten.
pub fn cholesky(a: &mut SymMatrix) -> Result<(), usize> {
    let n = a.n;
    let mut k = 0;
    while k < n {
        let kb = BLOCK.min(n - k);
        factor_diagonal_block(a, k, kb)?;
        let below = k + kb;
        if below < n {
            solve_panel(a, k, kb);
            update_trailing(a, k, kb);
        }
        k += kb;
    }
    Ok(())
}

fn factor_diagonal_block(a: &mut SymMatrix, k: usize, kb: usize) -> Result<(), usize> {
    let n = a.n;
    for j in k..k + kb {
        let mut d = a.data[j * n + j];
        for l in k..j {
            let v = a.data[j * n + l];
            d -= v * v;
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let d = d.sqrt();
        a.data[j * n + j] = d;
        for i in j + 1..k + kb {
            let mut s = a.data[i * n + j];
            for l in k..j {
                s -= a.data[i * n + l] * a.data[j * n + l];
            }
            a.data[i * n + j] = s / d;
        }
    }
    Ok(())
}

/// Rows below the diagonal block: `A21 ← A21 L11⁻ᵀ`.
fn solve_panel(a: &mut SymMatrix, k: usize, kb: usize) {
    let n = a.n;
    for i in k + kb..n {
        for j in k..k + kb {
            let mut s = a.data[i * n + j];
            for l in k..j {
                s -= a.data[i * n + l] * a.data[j * n + l];
            }
            a.data[i * n + j] = s / a.data[j * n + j];
        }
    }
}

/// `A22 ← A22 − L21 L21ᵀ`, lower block-triangle only.
fn update_trailing(a: &mut SymMatrix, k: usize, kb: usize) {
    let n = a.n;
    let start = k + kb;
    let ptr = a.data.as_mut_ptr();
    let mut ib = start;
    while ib < n {
        let ibs = BLOCK.min(n - ib);
        let cols = ib + ibs - start;
        // SAFETY: the panel columns k..k+kb are only read, the destination
        // columns start.. are only written; both lie inside `a.data`.
        unsafe {
            matrixmultiply::dgemm(
                ibs,
                kb,
                cols,
                -1.0,
                ptr.add(ib * n + k),
                n as isize,
                1,
                ptr.add(start * n + k),
                1,
                n as isize,
                1.0,
                ptr.add(ib * n + start),
                n as isize,
                1,
            );
        }
        ib += ibs;
    }
}

/// Solves `L Lᵀ x = b` in place given the factor from [`cholesky`].
pub fn cholesky_solve(l: &SymMatrix, b: &mut [f64]) {
    let n = l.n;
    for i in 0..n {
        let row = &l.data[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
        b[i] = (b[i] - s) / l.data[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= l.data[j * n + i] * b[j];
        }
        b[i] = s / l.data[i * n + i];
    }
}

/// `y = A x` for a matrix stored in the lower triangle.
pub fn sym_matvec(a: &SymMatrix, x: &[f64]) -> Vec<f64> {
    let n = a.n;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let row = &a.data[i * n..i * n + i];
        let mut s = a.data[i * n + i] * x[i];
        for (j, &v) in row.iter().enumerate() {
            s += v * x[j];
            y[j] += v * x[i];
        }
        y[i] += s;
    }
    y
}

/// Outcome of a rank-revealing Cholesky on a Gram matrix.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    /// Pivot order; the first `rank` entries index independent rows.
    pub order: Vec<usize>,
    pub rank: usize,
    /// Factor of the leading `rank × rank` permuted block, row-major.
    factor: SymMatrix,
}

/// Diagonal-pivoted Cholesky of a PSD Gram matrix, stopping when the largest
/// remaining pivot drops below `rel_tol` times the largest initial diagonal.
pub fn pivoted_cholesky(gram: &SymMatrix, rel_tol: f64) -> PivotedCholesky {
    let n = gram.n;
    let mut a = SymMatrix::zeros(n);
    // full symmetric copy so that row swaps are straightforward
    for i in 0..n {
        for j in 0..=i {
            let v = gram.at(i, j);
            *a.at_mut(i, j) = v;
            *a.at_mut(j, i) = v;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let scale = gram.max_diagonal().max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for k in 0..n {
        let (p, &best) = (k..n)
            .map(|i| (i, &a.data[i * n + i]))
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        if best <= rel_tol * scale {
            break;
        }
        if p != k {
            order.swap(p, k);
            for j in 0..n {
                a.data.swap(k * n + j, p * n + j);
            }
            for i in 0..n {
                a.data.swap(i * n + k, i * n + p);
            }
        }
        let d = a.data[k * n + k].sqrt();
        a.data[k * n + k] = d;
        for i in k + 1..n {
            a.data[i * n + k] /= d;
        }
        for i in k + 1..n {
            let lik = a.data[i * n + k];
            for j in k + 1..=i {
                let v = a.data[i * n + j] - lik * a.data[j * n + k];
                a.data[i * n + j] = v;
                a.data[j * n + i] = v;
            }
        }
        rank += 1;
    }
    let mut factor = SymMatrix::zeros(rank);
    for i in 0..rank {
        for j in 0..=i {
            *factor.at_mut(i, j) = a.data[i * n + j];
        }
    }
    PivotedCholesky {
        order,
        rank,
        factor,
    }
}

impl PivotedCholesky {
    /// Solves `G_II w = rhs` on the independent pivot set (ordered as
    /// `order[..rank]`).
    pub fn solve_leading(&self, rhs: &mut [f64]) {
        cholesky_solve(&self.factor, rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, seed: u64) -> SymMatrix {
        // deterministic pseudo-random B, A = B Bᵀ + n I
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        let b: Vec<f64> = (0..n * n).map(|_| next()).collect();
        let mut a = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += b[i * n + k] * b[j * n + k];
                }
                *a.at_mut(i, j) = s + if i == j { n as f64 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn blocked_cholesky_solves_across_block_boundaries() {
        for &n in &[1usize, 5, 64, 65, 150] {
            let a = spd(n, n as u64);
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let mut b = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    b[i] += a.at(i, j) * x_true[j];
                }
            }
            let mut l = a.clone();
            cholesky(&mut l).unwrap();
            cholesky_solve(&l, &mut b);
            for i in 0..n {
                assert!((b[i] - x_true[i]).abs() < 1e-9, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn symmetric_matvec_uses_lower_triangle() {
        let a = spd(7, 3);
        let mut lower = a.clone();
        for i in 0..7 {
            for j in i + 1..7 {
                *lower.at_mut(i, j) = f64::NAN;
            }
        }
        let x: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        let y = sym_matvec(&lower, &x);
        for i in 0..7 {
            let expect: f64 = (0..7).map(|j| a.at(i, j) * x[j]).sum();
            assert!((y[i] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_reports_indefinite_pivot() {
        let mut a = SymMatrix::zeros(2);
        *a.at_mut(0, 0) = 1.0;
        *a.at_mut(1, 0) = 2.0;
        *a.at_mut(1, 1) = 1.0;
        assert_eq!(cholesky(&mut a), Err(1));
    }

    #[test]
    fn pivoted_cholesky_detects_rank() {
        // rows (1,0), (1,0), (0,1): Gram has rank 2
        let rows = [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mut g = SymMatrix::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                *g.at_mut(i, j) = rows[i][0] * rows[j][0] + rows[i][1] * rows[j][1];
            }
        }
        let pc = pivoted_cholesky(&g, 1e-12);
        assert_eq!(pc.rank, 2);
    }
}
