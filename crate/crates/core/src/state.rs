//! Pure qubit states, marginals, spectra and Pauli expectation values.
//!
//! Qubit 0 is the most significant bit of an amplitude index, so the
//! bitstring `|0011⟩` is index 3 and reads left to right.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, combinations};
use crate::error::{Result, TeshError};

pub type C64 = Complex64;

/// Largest qubit count accepted by the dense constructors.
pub const MAX_QUBITS: usize = 20;

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGEN_CLAMP: f64 = 1e-10;

/// Normalized amplitude vector of an `n`-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized (within `1e-10`).
    pub fn new(n: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n)?;
        if amplitudes.len() != 1usize << n {
            return Err(TeshError::InvalidSize(format!(
                "{} amplitudes for {n} qubits (expected {})",
                amplitudes.len(),
                1usize << n
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(TeshError::Argument("non-finite amplitude".into()));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(TeshError::Argument(format!(
                "state is not normalized: squared norm {norm_sqr}"
            )));
        }
        Ok(Self { n, amplitudes })
    }

    /// Normalizes arbitrary (nonzero) amplitudes.
    pub fn from_unnormalized(n: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(TeshError::Argument("cannot normalize a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(n, amplitudes)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        if index >= 1usize << n {
            return Err(TeshError::Argument(format!("basis index {index} out of range")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(n, amps)
    }

    /// The product state `|0…0⟩`.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(TeshError::InvalidSize(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(TeshError::InvalidSize("density matrix must be square".into()));
        }
        check_hermitian(&entries)?;
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(TeshError::Numeric(format!("trace {trace} differs from 1")));
        }
        let rho = Self { entries };
        // positivity is checked through the spectrum
        spectrum(&rho)?;
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn check_hermitian(m: &DMatrix<C64>) -> Result<()> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..=i {
            let d = m[(i, j)] - m[(j, i)].conj();
            if d.norm() > HERMITIAN_TOL {
                return Err(TeshError::Numeric(format!(
                    "matrix is not Hermitian at ({i}, {j}): deviation {}",
                    d.norm()
                )));
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a density matrix in non-increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Validates a sorted probability vector.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(TeshError::Argument("empty spectrum".into()));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(TeshError::Argument("spectrum is not non-increasing".into()));
        }
        if values
            .iter()
            .any(|&v| !(-EIGEN_CLAMP..=1.0 + EIGEN_CLAMP).contains(&v))
        {
            return Err(TeshError::Argument("spectrum value outside [0, 1]".into()));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(TeshError::Argument(format!("spectrum sums to {sum}")));
        }
        Ok(Self { values })
    }

    /// Sorts into non-increasing order, then validates.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn purity(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Hermitian eigen-decomposition sorted by non-increasing eigenvalue.
pub(crate) fn sorted_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Clamps eigenvalues within the tolerance window into `[0, 1]`.
pub(crate) fn clamp_eigenvalues(values: &mut [f64]) -> Result<()> {
    for v in values.iter_mut() {
        if *v < -EIGEN_CLAMP || *v > 1.0 + EIGEN_CLAMP || !v.is_finite() {
            return Err(TeshError::Numeric(format!(
                "eigenvalue {v} outside [0, 1] beyond tolerance"
            )));
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(())
}

/// Sorted, clamped spectrum of a density matrix.
pub fn spectrum(rho: &DensityMatrix) -> Result<Spectrum> {
    spectrum_of_matrix(&rho.entries)
}

/// Spectrum of a raw Hermitian matrix; non-Hermitian input is an error.
pub fn spectrum_of_matrix(m: &DMatrix<C64>) -> Result<Spectrum> {
    if m.nrows() != m.ncols() {
        return Err(TeshError::InvalidSize("matrix must be square".into()));
    }
    check_hermitian(m)?;
    let (mut values, _) = sorted_eigen(m);
    clamp_eigenvalues(&mut values)?;
    Spectrum::new(values)
}

/// Index bookkeeping for the cut `subset | complement`.
///
/// `index[a * cols + c]` is the amplitude index whose subset bits read `a`
/// and whose complement bits read `c` (both most-significant first).
#[derive(Debug, Clone)]
pub(crate) struct Bipartition {
    pub rows: usize,
    pub cols: usize,
    pub index: Vec<usize>,
}

impl Bipartition {
    pub fn new(n: usize, subset: &[usize]) -> Self {
        let complement: Vec<usize> = (0..n).filter(|q| !subset.contains(q)).collect();
        let rows = 1usize << subset.len();
        let cols = 1usize << complement.len();
        let mut index = vec![0usize; rows * cols];
        for a in 0..rows {
            let mut base = 0usize;
            for (pos, &q) in subset.iter().enumerate() {
                if (a >> (subset.len() - 1 - pos)) & 1 == 1 {
                    base |= 1 << (n - 1 - q);
                }
            }
            for c in 0..cols {
                let mut idx = base;
                for (pos, &q) in complement.iter().enumerate() {
                    if (c >> (complement.len() - 1 - pos)) & 1 == 1 {
                        idx |= 1 << (n - 1 - q);
                    }
                }
                index[a * cols + c] = idx;
            }
        }
        Self { rows, cols, index }
    }

    /// Amplitudes reshaped to a `rows × cols` matrix.
    pub fn reshape(&self, amps: &[C64]) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |a, c| amps[self.index[a * self.cols + c]])
    }

    /// `Ψ Ψ†` for the reshaped amplitudes (unnormalized marginal).
    pub fn marginal(&self, amps: &[C64]) -> DMatrix<C64> {
        let psi = self.reshape(amps);
        &psi * psi.adjoint()
    }
}

fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(TeshError::Argument("empty subset".into()));
    }
    if subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TeshError::Argument("subset must be strictly increasing".into()));
    }
    if subset.iter().any(|&q| q >= n) {
        return Err(TeshError::Argument(format!("subset index out of range for {n} qubits")));
    }
    Ok(())
}

/// Reduced density matrix on `subset`, tracing out the complement.
pub fn partial_trace(psi: &StateVector, subset: &[usize]) -> Result<DensityMatrix> {
    check_subset(psi.n, subset)?;
    let cut = Bipartition::new(psi.n, subset);
    let mut rho = cut.marginal(&psi.amplitudes);
    rho /= C64::new(psi.norm_sqr(), 0.0);
    // exact Hermitian symmetry
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(rho)
}

/// Purity of the marginal on `subset`; computed on the smaller side.
pub fn marginal_purity(psi: &StateVector, subset: &[usize]) -> Result<f64> {
    check_subset(psi.n, subset)?;
    let side: Vec<usize> = if 2 * subset.len() > psi.n {
        (0..psi.n).filter(|q| !subset.contains(q)).collect()
    } else {
        subset.to_vec()
    };
    if side.is_empty() {
        return Ok(1.0);
    }
    let cut = Bipartition::new(psi.n, &side);
    let rho = cut.marginal(&psi.amplitudes);
    let norm = psi.norm_sqr();
    Ok(rho.iter().map(|z| z.norm_sqr()).sum::<f64>() / (norm * norm))
}

/// Mean purity over all size-`k` marginals.
pub fn average_marginal_purity(psi: &StateVector, k: usize) -> Result<f64> {
    if k == 0 || k > psi.n {
        return Err(TeshError::Argument(format!(
            "subset size {k} outside 1..={}",
            psi.n
        )));
    }
    let mut total = 0.0;
    for s in combinations(psi.n, k) {
        total += marginal_purity(psi, &s)?;
    }
    Ok(total / binomial(psi.n, k) as f64)
}

/// Random state from normalized independent complex Gaussians.
pub fn haar_random_state(n: usize, seed: u64) -> Result<StateVector> {
    check_qubits(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<C64> = (0..1usize << n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect();
    StateVector::from_unnormalized(n, amps)
}

/// Four-qubit superposition of products of Bell pairs with cube-root-of-unity
/// phases; every two-qubit marginal has spectrum `(1/2, 1/6, 1/6, 1/6)`.
pub fn phi4_state() -> StateVector {
    let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let w2 = w * w;
    let s = 1.0 / 6f64.sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); 16];
    amps[0b0011] = C64::new(s, 0.0);
    amps[0b1100] = C64::new(s, 0.0);
    amps[0b0101] = w * s;
    amps[0b1010] = w * s;
    amps[0b0110] = w2 * s;
    amps[0b1001] = w2 * s;
    StateVector::from_unnormalized(4, amps).expect("fixture is normalizable")
}

/// Simple undirected graph on `n` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl GraphSpec {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        check_qubits(n)?;
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(TeshError::Argument(format!("self-loop on vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(TeshError::Argument(format!(
                    "edge ({a}, {b}) outside 0..{n}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set })
    }

    /// Cycle `0-1-…-(n-1)-0`.
    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }
}

/// Graph state: `|+⟩^⊗n` followed by a controlled-Z on every edge.
pub fn graph_state(g: &GraphSpec) -> StateVector {
    let n = g.n;
    let amp = (1.0 / (1usize << n) as f64).sqrt();
    let masks: Vec<(usize, usize)> = g
        .edges()
        .map(|(a, b)| (1usize << (n - 1 - a), 1usize << (n - 1 - b)))
        .collect();
    let amps = (0..1usize << n)
        .map(|k| {
            let flips = masks
                .iter()
                .filter(|&&(ma, mb)| k & ma != 0 && k & mb != 0)
                .count();
            C64::new(if flips % 2 == 0 { amp } else { -amp }, 0.0)
        })
        .collect();
    StateVector::from_unnormalized(n, amps).expect("graph state is normalizable")
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of Pauli letters, qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() || letters.len() > 64 {
            return Err(TeshError::InvalidSize(format!(
                "Pauli string length {} outside 1..=64",
                letters.len()
            )));
        }
        Ok(Self { letters })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(vec![Pauli::I; n])
    }

    /// The `index`-th string in base-4 order `I < X < Y < Z`, qubit 0 most
    /// significant.
    pub fn from_index(n: usize, index: usize) -> Self {
        let letters = (0..n)
            .map(|q| Pauli::ALL[(index >> (2 * (n - 1 - q))) & 3])
            .collect();
        Self { letters }
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Bit masks `(x, z, #Y)` in the amplitude-index convention.
    pub(crate) fn masks(&self) -> (usize, usize, usize) {
        let n = self.letters.len();
        let mut x = 0;
        let mut z = 0;
        let mut ny = 0;
        for (q, &p) in self.letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = TeshError;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(TeshError::Format(format!("invalid Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }
}

/// `⟨ψ|P|ψ⟩` from bit masks, without validation.
pub(crate) fn expectation_from_masks(amps: &[C64], x: usize, z: usize, ny: usize) -> C64 {
    // P|k⟩ = i^{#Y} (−1)^{|k ∧ z|} |k ⊕ x⟩
    let mut acc = C64::new(0.0, 0.0);
    for (k, &a) in amps.iter().enumerate() {
        let term = amps[k ^ x].conj() * a;
        if (k & z).count_ones() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    match ny % 4 {
        0 => acc,
        1 => acc * C64::new(0.0, 1.0),
        2 => -acc,
        _ => acc * C64::new(0.0, -1.0),
    }
}

/// Real expectation value `⟨ψ|P|ψ⟩`.
pub fn pauli_expectation(psi: &StateVector, p: &PauliString) -> Result<f64> {
    if p.num_qubits() != psi.n {
        return Err(TeshError::Argument(format!(
            "Pauli string on {} qubits for a {}-qubit state",
            p.num_qubits(),
            psi.n
        )));
    }
    let (x, z, ny) = p.masks();
    let v = expectation_from_masks(&psi.amplitudes, x, z, ny);
    if v.im.abs() > 1e-9 {
        return Err(TeshError::Internal(format!(
            "Pauli expectation has imaginary part {}",
            v.im
        )));
    }
    Ok(v.re)
}
