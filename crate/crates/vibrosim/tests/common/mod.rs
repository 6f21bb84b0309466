//! Shared test oracles, independent of the library's numerics: a
//! self-contained cyclic-Jacobi eigensolver for complex Hermitian matrices
//! and dense spectral propagation built on it.

#![allow(dead_code)]

use num_complex::Complex64 as C64;

/// Eigendecomposition A = V diag(λ) V†, eigenvalues ascending.
pub struct Eigensystem {
    pub dim: usize,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Row-major dim×dim unitary; column k is the kth eigenvector.
    pub vectors: Vec<C64>,
}

impl Eigensystem {
    /// Component i of eigenvector k.
    pub fn vector(&self, k: usize, i: usize) -> C64 {
        self.vectors[i * self.dim + k]
    }
}

/// Cyclic Jacobi diagonalization of a row-major complex Hermitian matrix.
///
/// Each (p, q) plane is rotated by V = diag(1, e^{−iφ})·R(θ), where φ is
/// the phase of A[p][q] and θ the classic symmetric-Jacobi angle for the
/// phase-aligned 2×2 block; the off-diagonal weight decreases sweep over
/// sweep. Panics if the input is visibly non-Hermitian or the sweep limit
/// is hit (oracles must fail loudly, not approximately).
pub fn eigh(dim: usize, a_in: &[C64]) -> Eigensystem {
    assert_eq!(a_in.len(), dim * dim, "matrix shape");
    let mut scale: f64 = 1e-30;
    for i in 0..dim {
        for j in 0..dim {
            let dev = (a_in[i * dim + j] - a_in[j * dim + i].conj()).norm();
            assert!(dev < 1e-10, "oracle input must be Hermitian (dev {dev:.3e})");
            scale = scale.max(a_in[i * dim + j].norm());
        }
    }

    let mut a = a_in.to_vec();
    let mut v = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        v[i * dim + i] = C64::new(1.0, 0.0);
    }

    let mut converged = false;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off = off.max(a[p * dim + q].norm());
            }
        }
        if off <= 1e-14 * scale {
            converged = true;
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                let m = apq.norm();
                if m <= 1e-16 * scale {
                    continue;
                }
                let alpha = a[p * dim + p].re;
                let gamma = a[q * dim + q].re;
                // Aligning phase: diag(1, e^{−iφ}) makes the block real.
                let phase = (apq / m).conj();
                let zeta = (alpha - gamma) / (2.0 * m);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = s * phase; // s·e^{iφ}
                // Column update: A ← A·V, V ← V·V_rot.
                for i in 0..dim {
                    let aip = a[i * dim + p];
                    let aiq = a[i * dim + q];
                    a[i * dim + p] = c * aip + sp * aiq;
                    a[i * dim + q] = -s * aip + c * phase * aiq;
                    let vip = v[i * dim + p];
                    let viq = v[i * dim + q];
                    v[i * dim + p] = c * vip + sp * viq;
                    v[i * dim + q] = -s * vip + c * phase * viq;
                }
                // Row update: A ← V†·A.
                let spc = sp.conj(); // s·e^{−iφ}
                for j in 0..dim {
                    let apj = a[p * dim + j];
                    let aqj = a[q * dim + j];
                    a[p * dim + j] = c * apj + spc * aqj;
                    a[q * dim + j] = -s * apj + c * phase.conj() * aqj;
                }
            }
        }
    }
    assert!(converged, "jacobi oracle failed to converge in 60 sweeps");

    // Sort by ascending eigenvalue, permuting eigenvector columns along.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a[i * dim + i].re.total_cmp(&a[j * dim + j].re));
    let values: Vec<f64> = order.iter().map(|&k| a[k * dim + k].re).collect();
    let mut vectors = vec![C64::new(0.0, 0.0); dim * dim];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..dim {
            vectors[i * dim + new_k] = v[i * dim + old_k];
        }
    }
    Eigensystem { dim, values, vectors }
}

/// Largest residual ‖A v_k − λ_k v_k‖_∞ over all eigenpairs, for oracle
/// self-verification.
pub fn max_residual(dim: usize, a: &[C64], eig: &Eigensystem) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..dim {
        for i in 0..dim {
            let mut av = C64::new(0.0, 0.0);
            for j in 0..dim {
                av += a[i * dim + j] * eig.vector(k, j);
            }
            worst = worst.max((av - eig.values[k] * eig.vector(k, i)).norm());
        }
    }
    worst
}

/// Spectral propagation: ψ(t) = Σ_k e^{−iλ_k t} v_k ⟨v_k|ψ₀⟩ with λ in
/// rad/ps and t in fs.
pub fn propagate_dense(eig: &Eigensystem, psi0: &[C64], t_fs: f64) -> Vec<C64> {
    let dim = eig.dim;
    assert_eq!(psi0.len(), dim);
    let t_ps = t_fs * 1e-3;
    // Coefficients ⟨v_k|ψ₀⟩.
    let mut coeff = vec![C64::new(0.0, 0.0); dim];
    for k in 0..dim {
        for i in 0..dim {
            coeff[k] += eig.vector(k, i).conj() * psi0[i];
        }
    }
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    for k in 0..dim {
        let rot = (-C64::i() * eig.values[k] * t_ps).exp() * coeff[k];
        for i in 0..dim {
            psi[i] += rot * eig.vector(k, i);
        }
    }
    psi
}

/// Dense row-major dump of a sparse operator, for feeding the oracle.
pub fn dense_of(op: &vibrosim::fock::SparseOp) -> Vec<C64> {
    let dim = op.dim();
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for (row, col, val) in op.entries() {
        out[row * dim + col] += val;
    }
    out
}
