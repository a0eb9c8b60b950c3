//! Worked models: the von Neumann qubit measurement, the sharpness family,
//! the beamsplitter as a joint measurement of `x` and `p`, and resonance
//! fluorescence of a driven two-level atom.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::Serialize;

use crate::channels::{Instrument, IsometryChannel, Outcome, PointerObservable};
use crate::error::{Error, Result};
use crate::linalg::{self, expm, CMatrix, CVector};
use crate::operators::{hermitian_norm, BlochVector, HermitianOperator};
use crate::scalar::{re, Real, C};

fn diag2<T: Real>(a: T, b: T) -> CMatrix<T> {
    HermitianOperator::from_real_diagonal(&[a, b]).into_matrix()
}

fn pm_outcomes<T: Real>(plus: CMatrix<T>, minus: CMatrix<T>) -> Vec<Outcome<T>> {
    vec![
        Outcome {
            label: "+1".into(),
            value: T::one(),
            kraus: vec![plus],
        },
        Outcome {
            label: "-1".into(),
            value: -T::one(),
            kraus: vec![minus],
        },
    ]
}

/// Projective σz measurement with outcomes `±1` and branches `{P₊}`, `{P₋}`.
pub fn von_neumann_instrument<T: Real>() -> Instrument<T> {
    Instrument::new(2, pm_outcomes(diag2(T::one(), T::zero()), diag2(T::zero(), T::one())))
        .expect("projective instrument is unital")
}

/// Unsharp σz measurement `V₊ = diag(√(1−p), √p)`, `V₋ = diag(√p, √(1−p))`
/// with pointer values `±1`.
pub fn sharpness_instrument<T: Real>(p: T) -> Result<Instrument<T>> {
    SharpnessFamily::new(p).map(|f| f.instrument())
}

/// Closed-form figures of the sharpness family at parameter `p ∈ [0, ½)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharpnessFamily<T: Real> {
    p: T,
}

impl<T: Real> SharpnessFamily<T> {
    pub fn new(p: T) -> Result<Self> {
        if !(p >= T::zero() && p < T::lit(0.5)) {
            return Err(Error::OutOfRange(format!(
                "sharpness parameter {} outside [0, 1/2)",
                p.to_f64_lossy()
            )));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn instrument(&self) -> Instrument<T> {
        let a = (T::one() - self.p).sqrt();
        let b = self.p.sqrt();
        Instrument::new(2, pm_outcomes(diag2(a, b), diag2(b, a))).expect("sharpness instrument is unital")
    }

    /// Unbiased pointer `±1/(1 − 2p)`, for which `T(1 ⊗ B) = σz`.
    pub fn unbiased_pointer(&self) -> PointerObservable<T> {
        let s = T::one() / (T::one() - T::lit(2.0) * self.p);
        PointerObservable::new(vec![s, -s]).expect("finite values")
    }

    fn q(&self) -> T {
        (self.p * (T::one() - self.p)).sqrt()
    }

    /// `δ = p`.
    pub fn delta(&self) -> T {
        self.p
    }

    /// `Δ = ½ − √(p(1−p))`.
    pub fn disturbance(&self) -> T {
        T::lit(0.5) - self.q()
    }

    /// Residual coherence at `α = β = 1/√2`: `√(p(1−p))`.
    pub fn coherence(&self) -> T {
        self.q()
    }

    /// Off-diagonal factor of `R*`: `2√(p(1−p))`.
    pub fn damping(&self) -> T {
        T::lit(2.0) * self.q()
    }

    /// `Σ = 2√(p(1−p))/(1 − 2p)` for the unbiased pointer.
    pub fn sigma(&self) -> T {
        T::lit(2.0) * self.q() / (T::one() - T::lit(2.0) * self.p)
    }
}

// ---------------------------------------------------------------------------
// Beamsplitter

/// Truncated annihilation operator on `span{|0⟩, …, |N−1⟩}`.
pub fn annihilation<T: Real>(n: usize) -> CMatrix<T> {
    let mut a = linalg::zeros::<T>(n, n);
    for k in 1..n {
        a[(k - 1, k)] = re(T::lit(k as f64).sqrt());
    }
    a
}

/// `x = (a + a†)/√2`.
pub fn position<T: Real>(n: usize) -> CMatrix<T> {
    let a = annihilation::<T>(n);
    (&a + a.adjoint()).map(|z| z * T::lit(std::f64::consts::FRAC_1_SQRT_2))
}

/// `p = (a − a†)/(√2 i)`.
pub fn momentum<T: Real>(n: usize) -> CMatrix<T> {
    let a = annihilation::<T>(n);
    let k = C::new(T::zero(), -T::lit(std::f64::consts::FRAC_1_SQRT_2));
    (&a - a.adjoint()).map(|z| z * k)
}

/// Truncated coherent state `e^{−|α|²/2} Σ_{n<N} αⁿ/√n! |n⟩`.
pub fn coherent_state<T: Real>(alpha: C<T>, n: usize) -> CVector<T> {
    let mut v = CVector::zeros(n);
    let mut amp = C::new((-alpha.norm_sqr() * T::lit(0.5)).exp(), T::zero());
    for k in 0..n {
        v[k] = amp;
        amp = amp * alpha / re(T::lit((k + 1) as f64).sqrt());
    }
    v
}

/// Characteristic numbers of a [`BeamsplitterModel`] on its safe subspace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamsplitterReport {
    pub theta: f64,
    pub fock_dim: usize,
    pub safe_dim: usize,
    /// `‖T(B) − x‖` on the safe subspace.
    pub unbiased_x_error: f64,
    /// `‖T(B̃) − p‖` on the safe subspace.
    pub unbiased_p_error: f64,
    /// Largest `|(B,B)_jj − ½tan²θ|` on the safe subspace.
    pub form_b_diag_error: f64,
    /// Largest `|(B̃,B̃)_jj − ½cot²θ|` on the safe subspace.
    pub form_b_tilde_diag_error: f64,
    pub sigma_b: f64,
    pub sigma_b_tilde: f64,
    pub sigma_product: f64,
    /// `½‖[x, p]‖` on the safe subspace.
    pub half_commutator_norm: f64,
    pub unitarity_defect: f64,
}

/// Beamsplitter `U = exp(θ(a†⊗a − a⊗a†))` fed with vacuum in the second
/// port, on a Fock space truncated to `N` levels per mode.
///
/// The generator conserves total photon number, so `U` is block diagonal in
/// the sectors `j + k = n` and is exponentiated sector by sector. For
/// `n < N` the truncated sector block coincides with the untruncated one.
#[derive(Clone, Debug)]
pub struct BeamsplitterModel<T: Real> {
    theta: T,
    fock_dim: usize,
    safe_dim: usize,
    channel: IsometryChannel<T>,
    unitarity_defect: T,
}

impl<T: Real> BeamsplitterModel<T> {
    pub const MIN_FOCK_DIM: usize = 16;

    /// Model with the default safe subspace `N/2`.
    pub fn new(theta: T, fock_dim: usize) -> Result<Self> {
        Self::with_safe_dim(theta, fock_dim, fock_dim / 2)
    }

    pub fn with_safe_dim(theta: T, fock_dim: usize, safe_dim: usize) -> Result<Self> {
        if !(theta > T::zero() && theta < T::lit(std::f64::consts::FRAC_PI_2)) {
            return Err(Error::OutOfRange(format!(
                "theta {} outside (0, pi/2)",
                theta.to_f64_lossy()
            )));
        }
        if fock_dim < Self::MIN_FOCK_DIM {
            return Err(Error::OutOfRange(format!(
                "fock dimension {fock_dim} below {}",
                Self::MIN_FOCK_DIM
            )));
        }
        // Two levels of headroom: one for x or p acting on U|j,0⟩, one for
        // the edge level where the truncated ladder operators are wrong.
        if safe_dim == 0 || safe_dim + 2 > fock_dim {
            return Err(Error::OutOfRange(format!(
                "safe dimension {safe_dim} needs fock dimension at least {}",
                safe_dim + 2
            )));
        }
        let n = fock_dim;
        let mut v = linalg::zeros::<T>(n * n, n);
        let mut defect = T::zero();
        for sector in 0..(2 * n - 1) {
            let (states, u) = sector_unitary(theta, n, sector);
            let dev = linalg::max_abs(&(u.adjoint() * &u - linalg::identity::<T>(states.len())));
            defect = defect.max(dev);
            if sector < n {
                // |sector, 0⟩ is the state with first-mode occupation `sector`.
                let col = states.iter().position(|&(j, _)| j == sector).expect("state present");
                for (row, &(j, k)) in states.iter().enumerate() {
                    v[(j * n + k, sector)] = u[(row, col)];
                }
            }
        }
        Ok(Self {
            theta,
            fock_dim,
            safe_dim,
            channel: IsometryChannel::new(v)?,
            unitarity_defect: defect,
        })
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn safe_dim(&self) -> usize {
        self.safe_dim
    }

    /// `T(Y) = (1 ⊗ ⟨0|) U†YU (1 ⊗ |0⟩)`.
    pub fn channel(&self) -> &IsometryChannel<T> {
        &self.channel
    }

    /// Largest entrywise deviation of `U†U` from the identity over all
    /// photon-number sectors.
    pub fn unitarity_defect(&self) -> T {
        self.unitarity_defect
    }

    /// Applies `X ⊗ 1` (`first = true`) or `1 ⊗ X` to every column of `V`
    /// through the `N × N` reshape of each column.
    fn local_image(&self, x: &CMatrix<T>, first: bool) -> CMatrix<T> {
        let n = self.fock_dim;
        let v = self.channel.isometry();
        let mut out = linalg::zeros::<T>(n * n, n);
        for c in 0..n {
            let m = CMatrix::from_fn(n, n, |j, k| v[(j * n + k, c)]);
            let img = if first { x * m } else { m * x.transpose() };
            for j in 0..n {
                for k in 0..n {
                    out[(j * n + k, c)] = img[(j, k)];
                }
            }
        }
        out
    }

    /// `B V` with `B = x ⊗ 1 / cos θ`.
    pub fn pointer_image(&self) -> CMatrix<T> {
        let s = T::one() / self.theta.cos();
        self.local_image(&position::<T>(self.fock_dim), true).map(|z| z * s)
    }

    /// `B̃ V` with `B̃ = −1 ⊗ p / sin θ`.
    pub fn pointer_tilde_image(&self) -> CMatrix<T> {
        let s = -T::one() / self.theta.sin();
        self.local_image(&momentum::<T>(self.fock_dim), false).map(|z| z * s)
    }

    /// Dense `B = x ⊗ 1 / cos θ` on the truncated two-mode space.
    pub fn pointer_b(&self) -> CMatrix<T> {
        let s = T::one() / self.theta.cos();
        linalg::kron(&position::<T>(self.fock_dim), &linalg::identity(self.fock_dim)).map(|z| z * s)
    }

    /// Dense `B̃ = −1 ⊗ p / sin θ` on the truncated two-mode space.
    pub fn pointer_b_tilde(&self) -> CMatrix<T> {
        let s = -T::one() / self.theta.sin();
        linalg::kron(&linalg::identity(self.fock_dim), &momentum::<T>(self.fock_dim)).map(|z| z * s)
    }

    /// `(T(B), (B, B))` from the structured image.
    pub fn transfer_b(&self) -> Result<(CMatrix<T>, CMatrix<T>)> {
        let bv = self.pointer_image();
        let tb = self.channel.isometry().adjoint() * &bv;
        Ok((tb, self.channel.form_from_images(&bv, &bv)?))
    }

    /// `(T(B̃), (B̃, B̃))` from the structured image.
    pub fn transfer_b_tilde(&self) -> Result<(CMatrix<T>, CMatrix<T>)> {
        let bv = self.pointer_tilde_image();
        let tb = self.channel.isometry().adjoint() * &bv;
        Ok((tb, self.channel.form_from_images(&bv, &bv)?))
    }

    /// `U(|ψ⟩ ⊗ |0⟩)` for a single-mode input.
    pub fn output(&self, psi: &CVector<T>) -> CVector<T> {
        self.channel.isometry() * psi
    }

    /// `‖U(|α⟩⊗|0⟩) − |α cos θ⟩ ⊗ |−α sin θ⟩‖` on the truncated space.
    pub fn coherent_image_error(&self, alpha: C<T>) -> T {
        let n = self.fock_dim;
        let out = self.output(&coherent_state(alpha, n));
        let (s, c) = (self.theta.sin(), self.theta.cos());
        let a1 = coherent_state(alpha * re(c), n);
        let a2 = coherent_state(-alpha * re(s), n);
        let want = CVector::from_fn(n * n, |i, _| a1[i / n] * a2[i % n]);
        (out - want).norm()
    }

    pub fn report(&self) -> Result<BeamsplitterReport> {
        let k = self.safe_dim;
        let block = |m: &CMatrix<T>| m.view((0, 0), (k, k)).into_owned();
        let x = position::<T>(self.fock_dim);
        let p = momentum::<T>(self.fock_dim);
        let (tb, fb) = self.transfer_b()?;
        let (tbt, fbt) = self.transfer_b_tilde()?;
        let t2 = self.theta.tan() * self.theta.tan();
        let want_b = T::lit(0.5) * t2;
        let want_bt = T::lit(0.5) / t2;
        let diag_err = |f: &CMatrix<T>, w: T| (0..k).fold(T::zero(), |m, j| m.max((f[(j, j)] - re(w)).modulus_like()));
        let sigma = |f: &CMatrix<T>| hermitian_norm(&HermitianOperator::symmetrized(block(f)).into_matrix()).sqrt();
        let sb = sigma(&fb);
        let sbt = sigma(&fbt);
        let comm = block(&linalg::commutator(&x, &p)).map(|z| z * C::new(T::zero(), T::one()));
        let half_comm = T::lit(0.5) * hermitian_norm(&HermitianOperator::symmetrized(comm).into_matrix());
        let f = |v: T| v.to_f64_lossy();
        Ok(BeamsplitterReport {
            theta: f(self.theta),
            fock_dim: self.fock_dim,
            safe_dim: k,
            unbiased_x_error: f(crate::operators::spectral_norm(&block(&(tb - &x)))),
            unbiased_p_error: f(crate::operators::spectral_norm(&block(&(tbt - &p)))),
            form_b_diag_error: f(diag_err(&fb, want_b)),
            form_b_tilde_diag_error: f(diag_err(&fbt, want_bt)),
            sigma_b: f(sb),
            sigma_b_tilde: f(sbt),
            sigma_product: f(sb * sbt),
            half_commutator_norm: f(half_comm),
            unitarity_defect: f(self.unitarity_defect),
        })
    }
}

trait ModulusLike<T> {
    fn modulus_like(self) -> T;
}

impl<T: Real> ModulusLike<T> for C<T> {
    fn modulus_like(self) -> T {
        self.norm_sqr().sqrt()
    }
}

/// States `|j, n−j⟩` of photon-number sector `n` (both occupations below
/// `N`) and the exponential of the generator restricted to them.
fn sector_unitary<T: Real>(theta: T, n: usize, sector: usize) -> (Vec<(usize, usize)>, CMatrix<T>) {
    let lo = sector.saturating_sub(n - 1);
    let hi = sector.min(n - 1);
    let states: Vec<(usize, usize)> = (lo..=hi).map(|j| (j, sector - j)).collect();
    let m = states.len();
    // G = θ(a†⊗a − a⊗a†) maps |j,k⟩ to θ(√((j+1)k)|j+1,k−1⟩ − √(j(k+1))|j−1,k+1⟩).
    let mut g = DMatrix::<T>::zeros(m, m);
    for (col, &(j, k)) in states.iter().enumerate() {
        if k > 0 && j < hi {
            let row = col + 1;
            g[(row, col)] += theta * T::lit(((j + 1) * k) as f64).sqrt();
        }
        if j > lo {
            let row = col - 1;
            g[(row, col)] -= theta * T::lit((j * (k + 1)) as f64).sqrt();
        }
    }
    let u = expm(&g);
    (states, u.map(re))
}

// ---------------------------------------------------------------------------
// Resonance fluorescence

/// Resonantly driven, spontaneously decaying two-level atom in the Bloch
/// picture: `dv/dt = M v − c` with
/// `M = [[−½, 0, 0], [0, −½, Ω], [0, −Ω, −1]]` and `c = (0, 0, 1)`.
/// Time is measured in units of the inverse decay constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluorescenceModel<T: Real> {
    omega: T,
}

/// Tolerances of the adaptive integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RkConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub max_steps: usize,
}

impl Default for RkConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            h0: 1e-3,
            max_steps: 1_000_000,
        }
    }
}

impl<T: Real> FluorescenceModel<T> {
    pub fn new(omega: T) -> Result<Self> {
        if !(omega >= T::zero() && omega.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "Rabi frequency {} must be finite and non-negative",
                omega.to_f64_lossy()
            )));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn drive_matrix(&self) -> Matrix3<T> {
        let h = T::lit(0.5);
        let z = T::zero();
        Matrix3::new(-h, z, z, z, -h, self.omega, z, -self.omega, -T::one())
    }

    pub fn inhomogeneity(&self) -> Vector3<T> {
        Vector3::new(T::zero(), T::zero(), T::one())
    }

    /// Stationary Bloch vector `M⁻¹c`; `M` is invertible since
    /// `det M = −½(½ + Ω²)`.
    pub fn fixed_point(&self) -> Vector3<T> {
        let inv = self.drive_matrix().try_inverse().expect("drive matrix is invertible");
        inv * self.inhomogeneity()
    }

    fn propagator(&self, t: T) -> Matrix3<T> {
        let m = self.drive_matrix().map(|x| x * t);
        let e = expm(&DMatrix::from_iterator(3, 3, m.iter().copied()));
        Matrix3::from_iterator(e.iter().copied())
    }

    /// `e^{tM}v₀ + (e^{tM} − 1)M⁻¹(−c)`.
    pub fn exact(&self, v0: &BlochVector<T>, t: T) -> Result<BlochVector<T>> {
        if !(t >= T::zero()) {
            return Err(Error::OutOfRange(format!(
                "time {} must be non-negative",
                t.to_f64_lossy()
            )));
        }
        let e = self.propagator(t);
        let v = e * to_vec3(v0) + (e - Matrix3::identity()) * (-self.fixed_point());
        Ok(from_vec3(v))
    }

    /// Dormand–Prince 5(4) integration of the Bloch equations.
    pub fn integrate(&self, v0: &BlochVector<T>, t: T, cfg: &RkConfig) -> Result<BlochVector<T>> {
        let m = self.drive_matrix().map(|x| x.to_f64_lossy());
        let c = Vector3::new(0.0, 0.0, 1.0);
        let f = |v: &Vector3<f64>| m * v - c;
        let v = dormand_prince(f, to_vec3(v0).map(|x| x.to_f64_lossy()), t.to_f64_lossy(), cfg)?;
        Ok(from_vec3(v.map(T::lit)))
    }

    /// Strong-drive approximation: decay at rate ½ along x and a rotation at
    /// frequency Ω damped at rate ¾ in the y–z plane.
    pub fn rotating(&self, v0: &BlochVector<T>, t: T) -> BlochVector<T> {
        let ex = (-T::lit(0.5) * t).exp();
        let eyz = (-T::lit(0.75) * t).exp();
        let (s, c) = (self.omega * t).sin_cos();
        let z = T::zero();
        let r = Matrix3::new(ex, z, z, z, eyz * c, eyz * s, z, -eyz * s, eyz * c);
        from_vec3(r * to_vec3(v0))
    }
}

/// Interaction-picture contraction `diag(e^{−t/2}, e^{−3t/4}, e^{−3t/4})`.
pub fn interaction_contraction<T: Real>(t: T) -> Matrix3<T> {
    let a = (-T::lit(0.5) * t).exp();
    let b = (-T::lit(0.75) * t).exp();
    Matrix3::from_diagonal(&Vector3::new(a, b, b))
}

/// `½ max_{|v| ≤ 1} |Cv − v|` for a linear Bloch map `C`: the largest trace
/// distance between a state and its image.
pub fn contraction_disturbance<T: Real>(c: &Matrix3<T>) -> T {
    let d = c - Matrix3::identity();
    let sv = d.singular_values();
    sv.iter().fold(T::zero(), |m, &x| m.max(x)) * T::lit(0.5)
}

/// `Δ(t) = ½(1 − e^{−3t/4})`.
pub fn fluorescence_disturbance<T: Real>(t: T) -> T {
    T::lit(0.5) * (T::one() - (-T::lit(0.75) * t).exp())
}

/// Lower bound on δ implied by `Δ(t)`: `½ − ½√(1 − e^{−3t/2})`.
pub fn fluorescence_delta_bound<T: Real>(t: T) -> T {
    let half = T::lit(0.5);
    half - half * (T::one() - (-T::lit(1.5) * t).exp()).max(T::zero()).sqrt()
}

/// Smallest δ compatible with disturbance `Δ ∈ [0, ½]`:
/// `½ − √(¼ − (½ − Δ)²)`.
pub fn delta_from_disturbance<T: Real>(disturbance: T) -> T {
    let half = T::lit(0.5);
    let r = half - disturbance;
    half - (T::lit(0.25) - r * r).max(T::zero()).sqrt()
}

fn to_vec3<T: Real>(v: &BlochVector<T>) -> Vector3<T> {
    Vector3::new(v.x, v.y, v.z)
}

fn from_vec3<T: Real>(v: Vector3<T>) -> BlochVector<T> {
    BlochVector::new(v[0], v[1], v[2])
}

/// Adaptive Dormand–Prince 5(4) for `v' = f(v)` on `[0, t_end]`.
fn dormand_prince(
    f: impl Fn(&Vector3<f64>) -> Vector3<f64>,
    v0: Vector3<f64>,
    t_end: f64,
    cfg: &RkConfig,
) -> Result<Vector3<f64>> {
    if !(t_end >= 0.0) {
        return Err(Error::OutOfRange(format!("time {t_end} must be non-negative")));
    }
    const C2: f64 = 1.0 / 5.0;
    const C3: f64 = 3.0 / 10.0;
    const C4: f64 = 4.0 / 5.0;
    const C5: f64 = 8.0 / 9.0;
    let _ = (C2, C3, C4, C5); // autonomous system: stage times unused
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let mut t = 0.0;
    let mut v = v0;
    let mut h = cfg.h0.min(t_end.max(f64::MIN_POSITIVE));
    let mut k1 = f(&v);
    let mut steps = 0;
    while t < t_end {
        if steps >= cfg.max_steps {
            return Err(Error::OutOfRange(format!(
                "integrator exceeded {} steps",
                cfg.max_steps
            )));
        }
        steps += 1;
        h = h.min(t_end - t);
        let k2 = f(&(v + k1 * (h * A21)));
        let k3 = f(&(v + (k1 * A31 + k2 * A32) * h));
        let k4 = f(&(v + (k1 * A41 + k2 * A42 + k3 * A43) * h));
        let k5 = f(&(v + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h));
        let k6 = f(&(v + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h));
        let vn = v + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
        let k7 = f(&vn);
        let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        let mut ratio: f64 = 0.0;
        for i in 0..3 {
            let sc = cfg.atol + cfg.rtol * v[i].abs().max(vn[i].abs());
            ratio = ratio.max((err[i] / sc).abs());
        }
        if ratio <= 1.0 {
            t += h;
            v = vn;
            k1 = k7;
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::CpMap;
    use crate::linalg::max_abs;
    use crate::metrics::{delta_disturbance, delta_infidelity, DisturbanceConfig};
    use crate::operators::pauli_z;

    #[test]
    fn von_neumann_figures() {
        let vn = von_neumann_instrument::<f64>();
        assert_eq!(delta_infidelity(&vn, &pauli_z()).unwrap(), 0.0);
        let est = delta_disturbance(&vn.restriction(), &DisturbanceConfig::default()).unwrap();
        assert!((est.value - 0.5).abs() < 1e-12);
        assert_eq!(crate::metrics::sigma2_pointer(&vn, &vn.pointer()).unwrap(), 0.0);
    }

    #[test]
    fn sharpness_zero_is_von_neumann() {
        let a = sharpness_instrument::<f64>(0.0).unwrap();
        assert_eq!(a, von_neumann_instrument());
        assert!(sharpness_instrument::<f64>(0.5).is_err());
        let f = SharpnessFamily::new(0.25).unwrap();
        assert!((f.damping() - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            format!("{:.3}", SharpnessFamily::new(0.13).unwrap().coherence()),
            "0.336"
        );
    }

    #[test]
    fn sharpness_equality_in_unbiased_bound() {
        for p in [0.05, 0.2, 0.4] {
            let f = SharpnessFamily::<f64>::new(p).unwrap();
            let rhs = crate::bounds::heisenberg_unbiased_bound(f.disturbance(), 1.0);
            assert!((f.sigma() - rhs).abs() < 1e-12);
            let s2 = crate::metrics::sigma2_pointer(&f.instrument(), &f.unbiased_pointer()).unwrap();
            assert!((s2.sqrt() - f.sigma()).abs() < 1e-12);
        }
    }

    #[test]
    fn ladder_operators() {
        let n = 16;
        let x = position::<f64>(n);
        let p = momentum::<f64>(n);
        let comm = linalg::commutator(&x, &p);
        for j in 0..n - 1 {
            assert!((comm[(j, j)] - C::new(0.0, 1.0)).norm() < 1e-13);
        }
        assert!(coherent_state(C::new(0.7, -0.2), 40).norm() - 1.0 < 1e-14);
    }

    #[test]
    fn small_beamsplitter() {
        let m = BeamsplitterModel::<f64>::new(std::f64::consts::FRAC_PI_4, 16).unwrap();
        let r = m.report().unwrap();
        assert!(r.unitarity_defect < 1e-12);
        assert!(r.unbiased_x_error < 1e-10, "{r:?}");
        assert!(r.form_b_diag_error < 1e-10);
        assert!((r.sigma_product - 0.5).abs() < 1e-10);
        let e = m.coherent_image_error(C::new(0.8, 0.3));
        assert!(e < 1e-7, "{e}");
        assert!(BeamsplitterModel::<f64>::new(0.3, 8).is_err());
        assert!(BeamsplitterModel::<f64>::with_safe_dim(0.3, 16, 15).is_err());
    }

    #[test]
    fn structured_form_matches_dense_form() {
        let m = BeamsplitterModel::<f64>::new(0.6, 16).unwrap();
        let (tb, fb) = m.transfer_b().unwrap();
        let b = m.pointer_b();
        assert!(max_abs(&(m.channel().apply(&b).unwrap() - tb)) < 1e-12);
        let dense = m.channel().sesquilinear_form(&b, &b).unwrap();
        assert!(max_abs(&(dense - fb)) < 1e-11);
    }

    #[test]
    fn fluorescence_fixed_point_and_limits() {
        let m = FluorescenceModel::<f64>::new(2.0).unwrap();
        let fp = m.fixed_point();
        assert!((fp - Vector3::new(0.0, -4.0 / 9.0, -1.0 / 9.0)).norm() < 1e-15);
        let v0 = BlochVector::new(0.3, -0.2, 0.5);
        assert_eq!(m.exact(&v0, 0.0).unwrap(), v0);
        let late = m.exact(&v0, 80.0).unwrap();
        assert!((to_vec3(&late) - fp).norm() < 1e-12);

        let free = FluorescenceModel::<f64>::new(0.0).unwrap();
        let t = 1.7;
        let v = free.exact(&v0, t).unwrap();
        assert!((v.x - 0.3 * (-0.5 * t).exp()).abs() < 1e-14);
        assert!((v.z - (-1.0 + 1.5 * (-t).exp())).abs() < 1e-14);
        let rk = free.integrate(&v0, t, &RkConfig::default()).unwrap();
        assert!(v.distance(&rk) < 1e-10);
    }

    #[test]
    fn fluorescence_closed_forms() {
        assert_eq!(fluorescence_disturbance(0.0), 0.0);
        assert_eq!(fluorescence_delta_bound(0.0), 0.5);
        assert!((fluorescence_disturbance(1.0) - 0.5 * (1.0 - (-0.75f64).exp())).abs() < 1e-16);
        assert!((fluorescence_delta_bound(1.0f64) - 0.059_30).abs() < 1e-5);
        assert!(fluorescence_delta_bound(60.0) < 1e-19);
        for t in [0.0f64, 0.4, 2.5] {
            let c: f64 = contraction_disturbance(&interaction_contraction(t));
            assert!((c - fluorescence_disturbance(t)).abs() < 1e-14);
            let d: f64 = delta_from_disturbance(fluorescence_disturbance(t));
            assert!((d - fluorescence_delta_bound(t)).abs() < 1e-12);
        }
    }
}
