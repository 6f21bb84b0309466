//! Open-system density-matrix evolution under the Lindblad master equation.
//!
//! The generator is the standard GKSL form
//!
//! dρ/dt = −i[H, ρ] + Σⱼ γ₊,ⱼ 𝒟[aⱼ†]ρ + γ₋,ⱼ 𝒟[aⱼ]ρ,
//! 𝒟[A]ρ = A ρ A† − ½{A†A, ρ},
//!
//! with per-mode heating (A = a†) and cooling (A = a) channels acting on the
//! two vibrational modes of the composite qubit⊗mode₁⊗mode₂ space.  Rates are
//! angular, in ps⁻¹, like every other frequency in this crate.
//!
//! Integration is classical fixed-step Runge–Kutta (RK4) directly on the dense
//! density matrix.  The commutator and the anticommutator halves of every
//! channel are folded into a single sparse drift operator
//!
//! M = −iH − ½ Σₖ γₖ Aₖ†Aₖ,
//!
//! so that for Hermitian ρ the right-hand side is
//!
//! ℒ(ρ) = Mρ + (Mρ)† + Σₖ γₖ Aₖ ρ Aₖ†,
//!
//! which costs one sparse–dense product plus a cheap gather per jump channel.
//! Hermiticity of ρ is restored explicitly after every step, and trace /
//! diagonal-positivity guards abort the integration rather than let it return
//! unphysical output.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fock::{self, FockCutoff, SparseOp, StateVector};
use crate::lvc;
use crate::propagator::{check_hermitian, validate_grid, FS_TO_PS};
use crate::series::{self, TimeSeries};

/// Step-size margin: the RK4 step satisfies h·(spectral-extent estimate) ≤
/// this.  The estimate is a Gershgorin bound on the full generator — the
/// Hamiltonian spread plus four times the largest drift decay rate (two from
/// the drift, two from the jump channels; see `Integrator::build`) — which
/// overbounds the modulus of every Lindbladian eigenvalue.  The RK4 stability
/// boundary over left-half-plane angles comes closest to the origin at
/// ≈ 2.62 (θ ≈ 122°; 2.785 on the real axis, 2.83 on the imaginary), so 2.5
/// keeps h·|λ| strictly inside it at every angle.
const RK4_MARGIN: f64 = 2.5;

/// Integration aborts when |tr ρ − 1| exceeds this.
const TRACE_LIMIT: f64 = 1e-6;

/// Integration aborts when any diagonal element of ρ falls below this.
/// (Diagonal non-negativity is a necessary condition for positivity and is
/// cheap enough to test after every step.)
///
/// This is an *instability* tripwire, not an accuracy bound, and its level
/// reflects that: a step outside the RK4 stability region doubles a traceless
/// error mode every step or two and punches through −1e−3 within a handful of
/// steps (the trace guard cannot catch this early — the generator is
/// trace-preserving, so even a blow-up keeps tr ρ ≈ 1 until catastrophic
/// cancellation).  Legitimate marginal stepping at h·stiffness ≈ 2.5, by
/// contrast, produces bounded diagonal transients measured up to ~1e−4 on
/// long closed-limit runs, which must not abort the run.
const DIAG_FLOOR: f64 = -1e-3;

/// Densities up to this dimension use a dense eigensolver in
/// [`DensityMatrix::min_eigenvalue`]; larger ones use a Lanczos iteration.
const DENSE_EIG_MAX: usize = 256;

/// Dense Hermitian density matrix ρ on the composite space, stored row-major.
///
/// Valid densities have unit trace (within 1e−8), are Hermitian (within
/// 1e−10), and are positive semidefinite up to a small numerical slack
/// (min eigenvalue ≥ −1e−7).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    /// ρ = |ψ⟩⟨ψ|.  The trace equals ‖ψ‖², so pass a normalized state to
    /// obtain a unit-trace density.
    pub fn pure(psi: &StateVector) -> Self {
        let dim = psi.dim();
        let amps = psi.amplitudes();
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = amps[i] * amps[j].conj();
            }
        }
        DensityMatrix { dim, data }
    }

    /// ρ = 1/d · 𝟙, the infinite-temperature state.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        let p = 1.0 / dim as f64;
        for i in 0..dim {
            data[i * dim + i] = C64::new(p, 0.0);
        }
        DensityMatrix { dim, data }
    }

    /// Wraps a row-major matrix, validating shape, Hermiticity (≤ 1e−10) and
    /// unit trace (≤ 1e−8).  Positivity is not checked here; use
    /// [`DensityMatrix::min_eigenvalue`] for spot checks.
    pub fn from_matrix(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "lindblad: density matrix storage",
                left: data.len(),
                right: dim * dim,
            });
        }
        let rho = DensityMatrix { dim, data };
        let herm = rho.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::NotHermitian {
                context: "lindblad: density matrix",
                deviation: herm,
            });
        }
        let dev = (rho.trace() - 1.0).abs();
        if !dev.is_finite() || dev > 1e-8 {
            return Err(Error::NotNormalized {
                context: "lindblad: density matrix",
                deviation: dev,
            });
        }
        Ok(rho)
    }

    /// Hilbert-space dimension d (storage holds d² entries).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// tr ρ (real part; the imaginary part vanishes for Hermitian storage).
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    /// max |ρ − ρ†| over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let dev = (self.data[i * self.dim + j] - self.data[j * self.dim + i].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// ρ ← (ρ + ρ†)/2.
    pub fn re_hermitize(&mut self) {
        re_hermitize_in_place(&mut self.data, self.dim);
    }

    /// tr ρ² = Σ|ρᵢⱼ|² (valid for Hermitian ρ); 1 for pure states, 1/d for
    /// the maximally mixed state.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Real parts of the diagonal (the populations in the composite basis).
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).collect()
    }

    /// Smallest eigenvalue of ρ, for positivity spot checks.
    ///
    /// Dimensions up to 256 use a dense Hermitian eigensolver (exact to
    /// rounding); larger ones use a seeded Lanczos iteration with full
    /// reorthogonalization, stopped on a residual estimate of 1e−9.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim <= DENSE_EIG_MAX {
            self.min_eig_dense()
        } else {
            self.min_eig_lanczos()
        }
    }

    fn min_eig_dense(&self) -> f64 {
        let d = self.dim;
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| self.data[i * d + j]);
        m.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &v| acc.min(v))
    }

    fn min_eig_lanczos(&self) -> f64 {
        let dim = self.dim;
        let max_iter = 240.min(dim);
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
            .max(f64::MIN_POSITIVE);
        let mut rng = ChaCha8Rng::seed_from_u64(0x11b1_ad5e);
        let mut v: Vec<C64> = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im)
            })
            .collect();
        let n0 = vec_norm(&v);
        for a in &mut v {
            *a /= n0;
        }

        let mut basis: Vec<Vec<C64>> = vec![v];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![C64::new(0.0, 0.0); dim];
        loop {
            {
                let vk = basis.last().unwrap();
                self.matvec(vk, &mut w);
            }
            let k = alphas.len();
            let alpha: f64 = basis[k]
                .iter()
                .zip(w.iter())
                .map(|(a, b)| (a.conj() * b).re)
                .sum();
            alphas.push(alpha);
            // Full reorthogonalization keeps the basis numerically orthonormal.
            for b in &basis {
                let ip: C64 = b.iter().zip(w.iter()).map(|(x, y)| x.conj() * y).sum();
                for (wi, bi) in w.iter_mut().zip(b.iter()) {
                    *wi -= ip * bi;
                }
            }
            let beta = vec_norm(&w);
            let k = alphas.len();
            let breakdown = beta <= 1e-13 * scale;
            if breakdown || k == max_iter || k % 4 == 0 {
                let (theta, last) = tridiag_min_ritz(&alphas, &betas);
                let residual = beta * last;
                if breakdown || k == max_iter || residual <= 1e-9 {
                    return theta;
                }
            }
            betas.push(beta);
            let vnext: Vec<C64> = w.iter().map(|x| x / beta).collect();
            basis.push(vnext);
        }
    }

    /// y = ρ·x (dense row-major matvec).
    fn matvec(&self, x: &[C64], y: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..d {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
    }
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest Ritz value of the real symmetric tridiagonal (α, β) matrix and
/// the absolute last component of its eigenvector (for the residual bound).
fn tridiag_min_ritz(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = alphas[i];
        if i + 1 < k {
            m[(i, i + 1)] = betas[i];
            m[(i + 1, i)] = betas[i];
        }
    }
    let eig = m.symmetric_eigen();
    let mut best = f64::INFINITY;
    let mut idx = 0;
    for (i, &val) in eig.eigenvalues.iter().enumerate() {
        if val < best {
            best = val;
            idx = i;
        }
    }
    (best, eig.eigenvectors[(k - 1, idx)].abs())
}

fn re_hermitize_in_place(rho: &mut [C64], dim: usize) {
    for i in 0..dim {
        let di = i * dim + i;
        rho[di] = C64::new(rho[di].re, 0.0);
        for j in (i + 1)..dim {
            let avg = 0.5 * (rho[i * dim + j] + rho[j * dim + i].conj());
            rho[i * dim + j] = avg;
            rho[j * dim + i] = avg.conj();
        }
    }
}

/// Heating and cooling rates for one vibrational mode, in ps⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRates {
    gamma_plus: f64,
    gamma_minus: f64,
}

impl ModeRates {
    /// Validates that both rates are finite and non-negative.
    pub fn new(gamma_plus: f64, gamma_minus: f64) -> Result<Self> {
        if !gamma_plus.is_finite() || gamma_plus < 0.0 {
            return Err(Error::InvalidRate {
                name: "gamma_plus",
                value: gamma_plus,
            });
        }
        if !gamma_minus.is_finite() || gamma_minus < 0.0 {
            return Err(Error::InvalidRate {
                name: "gamma_minus",
                value: gamma_minus,
            });
        }
        Ok(ModeRates {
            gamma_plus,
            gamma_minus,
        })
    }

    /// No dissipation on this mode.
    pub const fn zero() -> Self {
        ModeRates {
            gamma_plus: 0.0,
            gamma_minus: 0.0,
        }
    }

    /// Equal heating and cooling (an infinite-temperature bath): γ₊ = γ₋ = γ.
    pub fn equal(gamma: f64) -> Result<Self> {
        ModeRates::new(gamma, gamma)
    }

    /// Heating rate γ₊ (ps⁻¹).
    pub fn gamma_plus(self) -> f64 {
        self.gamma_plus
    }

    /// Cooling rate γ₋ (ps⁻¹).
    pub fn gamma_minus(self) -> f64 {
        self.gamma_minus
    }

    /// True when both rates vanish.
    pub fn is_zero(self) -> bool {
        self.gamma_plus == 0.0 && self.gamma_minus == 0.0
    }
}

/// Per-mode dissipation rates for the whole model (index 0 ↔ mode 1, the
/// tuning mode; index 1 ↔ mode 2, the coupling mode).
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationRates {
    modes: Vec<ModeRates>,
}

impl DissipationRates {
    /// Explicit per-mode rates.
    pub fn per_mode(modes: Vec<ModeRates>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter {
                context: "lindblad: dissipation rates",
                message: "at least one mode is required".into(),
            });
        }
        Ok(DissipationRates { modes })
    }

    /// All rates zero (closed system).
    pub fn zero(n_modes: usize) -> Self {
        DissipationRates {
            modes: vec![ModeRates::zero(); n_modes.max(1)],
        }
    }

    /// The same infinite-temperature rate γ₊ = γ₋ = γ on every mode.
    pub fn equal(n_modes: usize, gamma: f64) -> Result<Self> {
        let one = ModeRates::equal(gamma)?;
        DissipationRates::per_mode(vec![one; n_modes.max(1)])
    }

    /// Per-mode rates, mode 1 first.
    pub fn modes(&self) -> &[ModeRates] {
        &self.modes
    }

    /// Number of modes covered.
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// True when every rate vanishes.
    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.is_zero())
    }

    /// Largest single rate, used in step-size selection.
    pub fn max_rate(&self) -> f64 {
        self.modes
            .iter()
            .fold(0.0f64, |m, r| m.max(r.gamma_plus).max(r.gamma_minus))
    }
}

/// Settings for the fixed-step open-system integrator.
///
/// The step is chosen automatically from the Hamiltonian spectral spread and
/// the dissipation rates; `max_step_fs` only caps it from above (useful for
/// convergence studies and very weakly coupled problems).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenSettings {
    max_step_fs: f64,
}

impl Default for OpenSettings {
    fn default() -> Self {
        OpenSettings { max_step_fs: 100.0 }
    }
}

impl OpenSettings {
    /// Caps the RK4 step at `max_step_fs` femtoseconds.
    pub fn new(max_step_fs: f64) -> Result<Self> {
        let s = OpenSettings { max_step_fs };
        s.validate()?;
        Ok(s)
    }

    /// Rejects non-finite or non-positive caps.
    pub fn validate(&self) -> Result<()> {
        if !self.max_step_fs.is_finite() {
            return Err(Error::NonFinite {
                context: "lindblad: settings",
                name: "max_step_fs",
                value: self.max_step_fs,
            });
        }
        if self.max_step_fs <= 0.0 {
            return Err(Error::InvalidParameter {
                context: "lindblad: settings",
                message: format!("max_step_fs must be positive, got {}", self.max_step_fs),
            });
        }
        Ok(())
    }

    /// The configured step cap in femtoseconds.
    pub fn max_step_fs(&self) -> f64 {
        self.max_step_fs
    }
}

/// One jump channel √γ·A with A a lifted ladder operator, stored as parallel
/// triplet arrays (A has at most one entry per row) plus the diagonal of A†A.
struct JumpChannel {
    rate: f64,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    atada: Vec<f64>,
}

impl JumpChannel {
    fn from_op(op: &SparseOp, rate: f64) -> Self {
        let mut rows = Vec::with_capacity(op.nnz());
        let mut cols = Vec::with_capacity(op.nnz());
        let mut vals = Vec::with_capacity(op.nnz());
        let mut atada = vec![0.0f64; op.dim()];
        for (r, c, v) in op.entries() {
            rows.push(r);
            cols.push(c);
            vals.push(v.re);
            atada[c] += v.norm_sqr();
        }
        JumpChannel {
            rate,
            rows,
            cols,
            vals,
            atada,
        }
    }
}

/// Channels for a single mode; validates the mode index even when both rates
/// vanish (and then builds nothing).
fn mode_channels(cutoff: FockCutoff, mode: usize, rates: ModeRates) -> Result<Vec<JumpChannel>> {
    let mut out = Vec::new();
    if rates.gamma_plus() > 0.0 {
        let a_dag = fock::lift_mode(cutoff, mode, &fock::creation(cutoff))?;
        out.push(JumpChannel::from_op(&a_dag, rates.gamma_plus()));
    }
    if rates.gamma_minus() > 0.0 {
        let a = fock::lift_mode(cutoff, mode, &fock::annihilation(cutoff))?;
        out.push(JumpChannel::from_op(&a, rates.gamma_minus()));
    }
    if out.is_empty() {
        // Still surface an invalid mode index.
        fock::lift_mode(cutoff, mode, &fock::number(cutoff))?;
    }
    Ok(out)
}

fn build_channels(cutoff: FockCutoff, rates: &DissipationRates) -> Result<Vec<JumpChannel>> {
    let mut out = Vec::new();
    for (idx, r) in rates.modes().iter().enumerate() {
        out.extend(mode_channels(cutoff, idx + 1, *r)?);
    }
    Ok(out)
}

/// out += γ · A ρ A† for one channel (the "sandwich" term).
///
/// A has at most one entry per row, so (AρA†)ᵣᵣ′ = γ vᵣ vᵣ′ ρ_{cᵣ cᵣ′} is a
/// direct gather over entry pairs.
fn add_sandwich(ch: &JumpChannel, rho: &[C64], dim: usize, out: &mut [C64]) {
    let n = ch.rows.len();
    for k in 0..n {
        let r = ch.rows[k];
        let c = ch.cols[k];
        let w = ch.rate * ch.vals[k];
        let rho_row = &rho[c * dim..(c + 1) * dim];
        let out_row = &mut out[r * dim..(r + 1) * dim];
        for k2 in 0..n {
            out_row[ch.rows[k2]] += (w * ch.vals[k2]) * rho_row[ch.cols[k2]];
        }
    }
}

/// out −= γ/2 · {A†A, ρ} for one channel; A†A is diagonal for lifted ladder
/// operators, so this is an elementwise scale.
fn add_anticommutator(ch: &JumpChannel, rho: &[C64], dim: usize, out: &mut [C64]) {
    for i in 0..dim {
        let gi = 0.5 * ch.rate * ch.atada[i];
        let rho_row = &rho[i * dim..(i + 1) * dim];
        let out_row = &mut out[i * dim..(i + 1) * dim];
        for j in 0..dim {
            out_row[j] -= (gi + 0.5 * ch.rate * ch.atada[j]) * rho_row[j];
        }
    }
}

/// The dissipator increment Σ_{A∈{a†,a}} γ_A (AρA† − ½{A†A, ρ}) for one mode,
/// as a dense row-major matrix.  The increment is trace-free and Hermitian
/// (for Hermitian ρ); it is *not* a density matrix.
pub fn dissipator_apply(
    rho: &DensityMatrix,
    cutoff: FockCutoff,
    mode: usize,
    rates: ModeRates,
) -> Result<Vec<C64>> {
    let dim = cutoff.composite_dim();
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: "lindblad: density matrix vs cutoff",
            left: rho.dim(),
            right: dim,
        });
    }
    let channels = mode_channels(cutoff, mode, rates)?;
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for ch in &channels {
        add_sandwich(ch, rho.data(), dim, &mut out);
        add_anticommutator(ch, rho.data(), dim, &mut out);
    }
    Ok(out)
}

/// Scratch storage for one RK4 step (six dim² buffers).
struct Buffers {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    stage: Vec<C64>,
    scratch: Vec<C64>,
}

impl Buffers {
    fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim * dim];
        Buffers {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z.clone(),
            scratch: z,
        }
    }
}

/// dst = base + s·k, elementwise.
fn axpy_from(dst: &mut [C64], base: &[C64], s: f64, k: &[C64]) {
    for ((d, b), x) in dst.iter_mut().zip(base.iter()).zip(k.iter()) {
        *d = b + s * x;
    }
}

/// Precompiled generator: drift M = −iH − ½Σγ A†A plus the jump channels.
struct Integrator {
    dim: usize,
    m_op: SparseOp,
    channels: Vec<JumpChannel>,
    /// Base RK4 step (ps) from the stiffness estimate and the settings cap.
    h_step_ps: f64,
}

impl Integrator {
    fn build(
        h: &SparseOp,
        rates: &DissipationRates,
        cutoff: FockCutoff,
        settings: &OpenSettings,
    ) -> Result<Integrator> {
        settings.validate()?;
        let dim = cutoff.composite_dim();
        if h.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "lindblad: hamiltonian vs cutoff",
                left: h.dim(),
                right: dim,
            });
        }
        if rates.n_modes() != 2 {
            return Err(Error::DimensionMismatch {
                context: "lindblad: dissipation rates (modes)",
                left: rates.n_modes(),
                right: 2,
            });
        }
        check_hermitian(h, "lindblad: hamiltonian")?;
        let channels = build_channels(cutoff, rates)?;

        let mut gdiag = vec![0.0f64; dim];
        for ch in &channels {
            for i in 0..dim {
                gdiag[i] += 0.5 * ch.rate * ch.atada[i];
            }
        }
        let neg_g: Vec<C64> = gdiag.iter().map(|&g| C64::new(-g, 0.0)).collect();
        let m_op = h
            .scaled(C64::new(0.0, -1.0))
            .add(&SparseOp::from_diagonal(&neg_g))?;

        let (lo, hi) = h.gershgorin_interval();
        let spread = hi - lo;
        let gmax = gdiag.iter().fold(0.0f64, |m, &g| m.max(g));
        // Gershgorin on the superoperator: row (i,j) has centre
        // −i(Eᵢ−Eⱼ) − (Gᵢᵢ+Gⱼⱼ) and its off-diagonal mass splits into the
        // Hamiltonian part (≤ spread, together with the centre's rotation)
        // and the jump part Σ γ·sᵢ·sⱼ with sᵢ = Σₖ|Aᵢₖ| and
        // Σ γ·sᵢ² = 2·Gᵢᵢ, so the jump radius is ≤ 2·gmax on top of the
        // drift decay ≤ 2·gmax.  (Drift alone, spread + 2·gmax, is not an
        // eigenvalue bound for the full generator: the birth–death
        // population sector reaches ≈ twice the largest total out-rate,
        // and stepping to the drift bound alone diverges ×2 per step on
        // strongly dissipative problems.)
        let stiffness = spread + 4.0 * gmax;
        let cap_ps = settings.max_step_fs * FS_TO_PS;
        let h_step_ps = if stiffness > 0.0 {
            (RK4_MARGIN / stiffness).min(cap_ps)
        } else {
            cap_ps
        };
        Ok(Integrator {
            dim,
            m_op,
            channels,
            h_step_ps,
        })
    }

    /// out = ℒ(ρ) = Mρ + (Mρ)† + Σγ AρA†, assuming ρ Hermitian.
    fn rhs(&self, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let dim = self.dim;
        scratch.fill(C64::new(0.0, 0.0));
        for i in 0..dim {
            let (cols, vals) = self.m_op.row(i);
            let out_row = &mut scratch[i * dim..(i + 1) * dim];
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                let src = &rho[c * dim..(c + 1) * dim];
                for j in 0..dim {
                    out_row[j] += v * src[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] = scratch[i * dim + j] + scratch[j * dim + i].conj();
            }
        }
        for ch in &self.channels {
            add_sandwich(ch, rho, dim, out);
        }
    }

    fn rk4_step(&self, rho: &mut [C64], h: f64, b: &mut Buffers) {
        self.rhs(rho, &mut b.k1, &mut b.scratch);
        axpy_from(&mut b.stage, rho, 0.5 * h, &b.k1);
        self.rhs(&b.stage, &mut b.k2, &mut b.scratch);
        axpy_from(&mut b.stage, rho, 0.5 * h, &b.k2);
        self.rhs(&b.stage, &mut b.k3, &mut b.scratch);
        axpy_from(&mut b.stage, rho, h, &b.k3);
        self.rhs(&b.stage, &mut b.k4, &mut b.scratch);
        let w = h / 6.0;
        for i in 0..rho.len() {
            rho[i] += w * (b.k1[i] + 2.0 * (b.k2[i] + b.k3[i]) + b.k4[i]);
        }
        re_hermitize_in_place(rho, self.dim);
    }
}

/// Post-step sanity guards: unit trace within 1e−6 and diagonal entries above
/// −1e−3.  Failures indicate the fixed step was too large for the problem.
fn step_guards(rho: &[C64], dim: usize, t_fs: f64) -> Result<()> {
    let mut tr = 0.0f64;
    let mut min_diag = f64::INFINITY;
    for i in 0..dim {
        let d = rho[i * dim + i].re;
        tr += d;
        min_diag = min_diag.min(d);
    }
    let drift = (tr - 1.0).abs();
    if !drift.is_finite() || drift > TRACE_LIMIT {
        return Err(Error::TraceDrift { t_fs, drift });
    }
    if min_diag < DIAG_FLOOR {
        return Err(Error::Negativity {
            t_fs,
            value: min_diag,
        });
    }
    Ok(())
}

fn real_diagonal(op: &SparseOp) -> Vec<C64> {
    op.diagonal()
}

/// Integrates dρ/dt = −i[H,ρ] + Σⱼ γ₊,ⱼ𝒟[aⱼ†]ρ + γ₋,ⱼ𝒟[aⱼ]ρ with fixed-step
/// RK4, sampling at `t_grid_fs` (femtoseconds, starting from ρ₀ at t = 0).
///
/// Records the diabatic population, ⟨N₁⟩, ⟨N₂⟩, ⟨H⟩ (rad/ps), tr ρ, and the
/// purity tr ρ² at every sample; returns the series and the final density.
/// ρ is re-Hermitized after every step; trace drift beyond 1e−6 or diagonal
/// negativity beyond −1e−3 aborts with an error.
pub fn evolve_open(
    h: &SparseOp,
    rates: &DissipationRates,
    rho0: &DensityMatrix,
    cutoff: FockCutoff,
    t_grid_fs: &[f64],
    settings: &OpenSettings,
) -> Result<(TimeSeries, DensityMatrix)> {
    let dim = cutoff.composite_dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: "lindblad: density matrix vs cutoff",
            left: rho0.dim(),
            right: dim,
        });
    }
    let herm = rho0.hermiticity_error();
    if herm > 1e-10 {
        return Err(Error::NotHermitian {
            context: "lindblad: initial density matrix",
            deviation: herm,
        });
    }
    let tr_dev = (rho0.trace() - 1.0).abs();
    if !tr_dev.is_finite() || tr_dev > 1e-8 {
        return Err(Error::NotNormalized {
            context: "lindblad: initial density matrix",
            deviation: tr_dev,
        });
    }
    validate_grid(t_grid_fs)?;
    let integ = Integrator::build(h, rates, cutoff, settings)?;

    let n1_diag = real_diagonal(&fock::lift_mode(cutoff, 1, &fock::number(cutoff))?);
    let n2_diag = real_diagonal(&fock::lift_mode(cutoff, 2, &fock::number(cutoff))?);
    let excited = lvc::excited_block(cutoff);

    let n_samples = t_grid_fs.len();
    let mut pops = Vec::with_capacity(n_samples);
    let mut n1s = Vec::with_capacity(n_samples);
    let mut n2s = Vec::with_capacity(n_samples);
    let mut energies = Vec::with_capacity(n_samples);
    let mut traces = Vec::with_capacity(n_samples);
    let mut purities = Vec::with_capacity(n_samples);

    let mut rho = rho0.data().to_vec();
    let mut bufs = Buffers::new(dim);
    let mut t_now_fs = 0.0f64;
    for &t_fs in t_grid_fs {
        let dt_ps = (t_fs - t_now_fs) * FS_TO_PS;
        if dt_ps > 0.0 {
            let n_sub = (dt_ps / integ.h_step_ps).ceil().max(1.0) as usize;
            let h_sub = dt_ps / n_sub as f64;
            for k in 0..n_sub {
                integ.rk4_step(&mut rho, h_sub, &mut bufs);
                let t_here_fs = t_now_fs + (k + 1) as f64 * h_sub / FS_TO_PS;
                step_guards(&rho, dim, t_here_fs)?;
            }
        }
        t_now_fs = t_fs;

        let mut tr = 0.0f64;
        let mut n1 = 0.0f64;
        let mut n2 = 0.0f64;
        for i in 0..dim {
            let d = rho[i * dim + i].re;
            tr += d;
            n1 += n1_diag[i].re * d;
            n2 += n2_diag[i].re * d;
        }
        let pop: f64 = excited.clone().map(|i| rho[i * dim + i].re).sum();
        let mut energy = 0.0f64;
        for i in 0..dim {
            let (cols, vals) = h.row(i);
            for (&c, &v) in cols.iter().zip(vals.iter()) {
                energy += (v * rho[c * dim + i]).re;
            }
        }
        let purity: f64 = rho.iter().map(|z| z.norm_sqr()).sum();

        pops.push(pop);
        n1s.push(n1);
        n2s.push(n2);
        energies.push(energy);
        traces.push(tr);
        purities.push(purity);
    }

    let mut out = TimeSeries::new(t_grid_fs.to_vec());
    out.push_column(series::COL_POPULATION, pops)?;
    out.push_column(series::COL_N1, n1s)?;
    out.push_column(series::COL_N2, n2s)?;
    out.push_column(series::COL_ENERGY, energies)?;
    out.push_column(series::COL_TRACE, traces)?;
    out.push_column(series::COL_PURITY, purities)?;
    Ok((out, DensityMatrix { dim, data: rho }))
}
