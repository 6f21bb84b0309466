//! Truncated Fock spaces, sparse operators, and composite-space construction.
//!
//! The simulator works on the tensor-product space
//!
//! > qubit ⊗ mode 1 ⊗ mode 2
//!
//! with each harmonic mode truncated to `n_max` Fock states (hard cutoff: the
//! ladder operators are truncated first and every composite operator is built
//! from the truncated blocks). Basis ordering is row-major over `(s, n₁, n₂)`
//! with the qubit index slowest, i.e. `index = s·n_max² + n₁·n_max + n₂`, and
//! the qubit basis is `(|0⟩, |1⟩)` so that `σ_z = diag(+1, −1)`.
//!
//! Operators are stored sparsely (row-major CSR) and iterate their entries in
//! deterministic row-major order, which keeps every downstream computation
//! bit-reproducible run to run.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Per-mode Fock-space truncation. Must be at least 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockCutoff(usize);

impl FockCutoff {
    /// Validates and wraps a per-mode truncation `n_max ≥ 2`.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidCutoff(n_max));
        }
        // The composite dimension 2·n_max² must stay addressable.
        n_max
            .checked_mul(n_max)
            .and_then(|m| m.checked_mul(2))
            .ok_or(Error::DimensionOverflow(n_max))?;
        Ok(FockCutoff(n_max))
    }

    /// Number of Fock states kept per mode.
    pub fn n_max(self) -> usize {
        self.0
    }

    /// Dimension of one mode's truncated space (= `n_max`).
    pub fn mode_dim(self) -> usize {
        self.0
    }

    /// Dimension of the full qubit ⊗ mode ⊗ mode space, `2·n_max²`.
    pub fn composite_dim(self) -> usize {
        2 * self.0 * self.0
    }

    /// Flat composite index of the basis state `|s, n₁, n₂⟩`.
    pub fn composite_index(self, s: usize, n1: usize, n2: usize) -> Result<usize> {
        let n = self.0;
        if s > 1 || n1 >= n || n2 >= n {
            return Err(Error::IndexOutOfRange {
                context: "fock::composite_index",
                index: s * n * n + n1 * n + n2,
                dim: self.composite_dim(),
            });
        }
        Ok(s * n * n + n1 * n + n2)
    }
}

/// Sparse complex matrix in CSR form with deterministic row-major iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOp {
    /// Builds an operator from `(row, col, value)` triplets. Duplicate
    /// positions are summed, exact zeros are dropped, and storage is
    /// canonical row-major regardless of input order.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= dim || c >= dim {
                return Err(Error::IndexOutOfRange {
                    context: "fock::SparseOp::from_triplets",
                    index: r.max(c),
                    dim,
                });
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != ZERO);

        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseOp {
            dim,
            row_ptr,
            cols: merged.iter().map(|t| t.1).collect(),
            vals: merged.iter().map(|t| t.2).collect(),
        })
    }

    /// Identity operator on a `dim`-dimensional space.
    pub fn identity(dim: usize) -> Self {
        SparseOp {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: vec![ONE; dim],
        }
    }

    /// The zero operator.
    pub fn zero(dim: usize) -> Self {
        SparseOp {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Diagonal operator from the given entries.
    pub fn from_diagonal(diag: &[C64]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .collect();
        SparseOp::from_triplets(diag.len(), triplets).expect("indices in range by construction")
    }

    /// Matrix dimension (operators here are square).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[C64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    /// Row-major iteration over stored entries `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter()
                .zip(vals.iter())
                .map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Entry at `(r, c)`, zero if not stored.
    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    /// Dense matrix-vector product `y = A·x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut acc = ZERO;
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    /// Scaled copy `c·A`.
    pub fn scaled(&self, c: C64) -> SparseOp {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= c;
        }
        out
    }

    /// Linear combination `A + c·B`.
    pub fn add_scaled(&self, c: C64, other: &SparseOp) -> Result<SparseOp> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                context: "fock::SparseOp::add_scaled",
                left: self.dim,
                right: other.dim,
            });
        }
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        triplets.extend(self.entries());
        triplets.extend(other.entries().map(|(r, col, v)| (r, col, c * v)));
        SparseOp::from_triplets(self.dim, triplets)
    }

    /// Sum `A + B`.
    pub fn add(&self, other: &SparseOp) -> Result<SparseOp> {
        self.add_scaled(ONE, other)
    }

    /// Conjugate transpose `A†`.
    pub fn dagger(&self) -> SparseOp {
        let triplets = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        SparseOp::from_triplets(self.dim, triplets).expect("dims preserved")
    }

    /// Sparse matrix product `A·B`.
    pub fn matmul(&self, other: &SparseOp) -> Result<SparseOp> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                context: "fock::SparseOp::matmul",
                left: self.dim,
                right: other.dim,
            });
        }
        let mut scratch = vec![ZERO; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals.iter()) {
                let (bc, bv) = other.row(k);
                for (&c, &b) in bc.iter().zip(bv.iter()) {
                    if scratch[c] == ZERO {
                        touched.push(c);
                    }
                    scratch[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if scratch[c] != ZERO {
                    triplets.push((r, c, scratch[c]));
                }
                scratch[c] = ZERO;
            }
            touched.clear();
        }
        SparseOp::from_triplets(self.dim, triplets)
    }

    /// Kronecker (tensor) product `A ⊗ B`.
    pub fn kron(&self, other: &SparseOp) -> SparseOp {
        let n = other.dim;
        let dim = self.dim * n;
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (ra, ca, va) in self.entries() {
            for (rb, cb, vb) in other.entries() {
                triplets.push((ra * n + rb, ca * n + cb, va * vb));
            }
        }
        SparseOp::from_triplets(dim, triplets).expect("indices in range by construction")
    }

    /// Largest entrywise deviation `max |A_ij − B_ij|`.
    pub fn max_abs_diff(&self, other: &SparseOp) -> Result<f64> {
        let diff = self.add_scaled(-ONE, other)?;
        Ok(diff.max_abs())
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Deviation from Hermiticity, `max |A − A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.dagger()).expect("same dims")
    }

    /// True when every stored entry lies on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }

    /// Diagonal entries as a dense vector.
    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Gershgorin bounds `[min_i (Re A_ii − r_i), max_i (Re A_ii + r_i)]` with
    /// `r_i` the off-diagonal row sums. For Hermitian operators this encloses
    /// the spectrum; it is the a-priori scale used to pick propagation steps.
    pub fn gershgorin_interval(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut center = 0.0;
            let mut radius = 0.0;
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                if c == r {
                    center = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        if self.dim == 0 || !lo.is_finite() {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

/// Pure state on a truncated (mode or composite) space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps raw amplitudes.
    pub fn new(amps: Vec<C64>) -> Self {
        StateVector { amps }
    }

    /// Basis state `|index⟩` in a `dim`-dimensional space.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange {
                context: "fock::StateVector::basis",
                index,
                dim,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(StateVector { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// Euclidean norm ‖ψ‖.
    pub fn norm(&self) -> f64 {
        self.amps
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales to unit norm (no-op on the zero vector).
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "fock::StateVector::inner",
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Expectation value ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, op: &SparseOp) -> Result<C64> {
        if self.dim() != op.dim() {
            return Err(Error::DimensionMismatch {
                context: "fock::StateVector::expectation",
                left: self.dim(),
                right: op.dim(),
            });
        }
        let mut work = vec![ZERO; self.dim()];
        op.matvec(&self.amps, &mut work);
        Ok(self
            .amps
            .iter()
            .zip(work.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Truncated annihilation operator: `a[n−1, n] = √n` on the superdiagonal.
pub fn annihilation(cutoff: FockCutoff) -> SparseOp {
    let n_max = cutoff.n_max();
    let triplets = (1..n_max)
        .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
        .collect();
    SparseOp::from_triplets(n_max, triplets).expect("indices in range by construction")
}

/// Truncated creation operator `a† = (a)†`.
pub fn creation(cutoff: FockCutoff) -> SparseOp {
    annihilation(cutoff).dagger()
}

/// Number operator `N = diag(0, 1, …, n_max−1)`.
pub fn number(cutoff: FockCutoff) -> SparseOp {
    let diag: Vec<C64> = (0..cutoff.n_max())
        .map(|n| C64::new(n as f64, 0.0))
        .collect();
    SparseOp::from_diagonal(&diag)
}

/// Pauli σ_x in the `(|0⟩, |1⟩)` basis.
pub fn pauli_x() -> SparseOp {
    SparseOp::from_triplets(2, vec![(0, 1, ONE), (1, 0, ONE)]).expect("valid")
}

/// Pauli σ_y in the `(|0⟩, |1⟩)` basis.
pub fn pauli_y() -> SparseOp {
    SparseOp::from_triplets(2, vec![(0, 1, C64::new(0.0, -1.0)), (1, 0, C64::new(0.0, 1.0))])
        .expect("valid")
}

/// Pauli σ_z = diag(+1, −1): the electronic state `|1⟩` has eigenvalue −1.
pub fn pauli_z() -> SparseOp {
    SparseOp::from_diagonal(&[ONE, -ONE])
}

/// Composite operator `q ⊗ m₁ ⊗ m₂` with the fixed qubit ⊗ mode 1 ⊗ mode 2
/// ordering. `q` must be 2×2 and the mode blocks must share one dimension.
pub fn tensor_composite(q: &SparseOp, m1: &SparseOp, m2: &SparseOp) -> Result<SparseOp> {
    if q.dim() != 2 {
        return Err(Error::DimensionMismatch {
            context: "fock::tensor_composite qubit block",
            left: q.dim(),
            right: 2,
        });
    }
    if m1.dim() != m2.dim() {
        return Err(Error::DimensionMismatch {
            context: "fock::tensor_composite mode blocks",
            left: m1.dim(),
            right: m2.dim(),
        });
    }
    Ok(q.kron(m1).kron(m2))
}

/// Lifts a single-mode operator onto the composite space for `mode` ∈ {1, 2}.
pub fn lift_mode(cutoff: FockCutoff, mode: usize, op: &SparseOp) -> Result<SparseOp> {
    if op.dim() != cutoff.mode_dim() {
        return Err(Error::DimensionMismatch {
            context: "fock::lift_mode",
            left: op.dim(),
            right: cutoff.mode_dim(),
        });
    }
    let id_q = SparseOp::identity(2);
    let id_m = SparseOp::identity(cutoff.mode_dim());
    match mode {
        1 => tensor_composite(&id_q, op, &id_m),
        2 => tensor_composite(&id_q, &id_m, op),
        _ => Err(Error::InvalidParameter {
            context: "fock::lift_mode",
            message: format!("mode must be 1 or 2, got {mode}"),
        }),
    }
}

/// Lifts a qubit operator onto the composite space.
pub fn lift_qubit(cutoff: FockCutoff, op: &SparseOp) -> Result<SparseOp> {
    let id_m = SparseOp::identity(cutoff.mode_dim());
    tensor_composite(op, &id_m, &id_m)
}

/// Truncated coherent state `|α⟩ ∝ Σ_n α^n/√(n!) |n⟩` (real displacement),
/// renormalized after truncation. Returns the state together with the
/// pre-normalization norm deficit `1 − Σ|c_n|²` lost to the cutoff.
pub fn coherent_state_with_deficit(
    cutoff: FockCutoff,
    alpha: f64,
) -> Result<(StateVector, f64)> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite {
            context: "fock::coherent_state",
            name: "alpha",
            value: alpha,
        });
    }
    let n_max = cutoff.n_max();
    let mut amps = vec![ZERO; n_max];
    // c_0 = e^{−α²/2}, c_n = c_{n−1}·α/√n.
    let mut c = (-alpha * alpha / 2.0).exp();
    amps[0] = C64::new(c, 0.0);
    for n in 1..n_max {
        c *= alpha / (n as f64).sqrt();
        amps[n] = C64::new(c, 0.0);
    }
    let mut state = StateVector::new(amps);
    let norm = state.norm();
    let deficit = 1.0 - norm * norm;
    state.normalize();
    Ok((state, deficit))
}

/// Truncated coherent state; logs a warning when the cutoff discards more
/// than 1e−8 of the untruncated norm.
pub fn coherent_state(cutoff: FockCutoff, alpha: f64) -> Result<StateVector> {
    let (state, deficit) = coherent_state_with_deficit(cutoff, alpha)?;
    if deficit > 1e-8 {
        log::warn!(
            "coherent state |α = {alpha}⟩ loses {deficit:.3e} of its norm at cutoff {}",
            cutoff.n_max()
        );
    }
    Ok(state)
}
