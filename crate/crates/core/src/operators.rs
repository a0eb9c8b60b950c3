//! Hermitian operators, states, projections and the qubit Bloch picture.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::scalar::{c, re, tol, Real, C};

/// Deviation from Hermiticity that construction silently repairs.
const HERMITIAN_TOL: f64 = 1e-10;

/// A Hermitian `d × d` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<T: Real> {
    mat: CMatrix<T>,
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// (columns).
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn vector(&self, k: usize) -> CVector<T> {
        self.vectors.column(k).into_owned()
    }

    /// Groups eigenvalue indices into classes of numerically equal values:
    /// `|λi − λj| < 1e-9 · max(1, ‖A‖)`.
    pub fn clusters(&self) -> Vec<(T, Vec<usize>)> {
        let norm = self
            .values
            .iter()
            .fold(T::one(), |m, &v| if v.abs() > m { v.abs() } else { m });
        let eps = tol::<T>(1e-9) * norm;
        let mut out: Vec<(T, Vec<usize>)> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            match out.last_mut() {
                Some((rep, idx)) if (v - *rep).abs() < eps => idx.push(i),
                _ => out.push((v, vec![i])),
            }
        }
        out
    }
}

impl<T: Real> HermitianOperator<T> {
    /// Validates Hermiticity; deviations below `1e-10` are symmetrized away.
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(Error::Empty { what: "operator" });
        }
        let dev = linalg::hermitian_deviation(&mat);
        if !(dev <= tol::<T>(HERMITIAN_TOL)) {
            return Err(Error::NotHermitian {
                deviation: dev.to_f64_lossy(),
            });
        }
        Ok(Self::symmetrized(mat))
    }

    /// `(M + M†)/2` without validation. Callers guarantee `mat` is square.
    pub fn symmetrized(mat: CMatrix<T>) -> Self {
        let half = T::lit(0.5);
        let adj = mat.adjoint();
        Self {
            mat: (mat + adj).map(|z| z * half),
        }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = linalg::zeros::<T>(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = re(x);
        }
        Self { mat: m }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mat: linalg::identity(d),
        }
    }

    pub fn zero(d: usize) -> Self {
        Self {
            mat: linalg::zeros(d, d),
        }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn ket_bra(psi: &CVector<T>) -> Self {
        Self::symmetrized(linalg::outer(psi, psi))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.mat
    }

    pub fn spectrum(&self) -> Spectrum<T> {
        let eig = self.mat.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_fn(self.dim(), self.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
        Spectrum { values, vectors }
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        if self.dim() == 2 {
            let (lo, hi) = qubit_eigenvalues(&self.mat);
            return vec![lo, hi];
        }
        let mut v: Vec<T> = self.mat.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        v
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        *self.eigenvalues().last().expect("nonempty")
    }

    pub fn trace(&self) -> T {
        self.mat.trace().re
    }

    /// `⟨ψ|A|ψ⟩` (real for Hermitian `A`).
    pub fn expectation(&self, psi: &CVector<T>) -> T {
        psi.dotc(&(&self.mat * psi)).re
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            mat: self.mat.map(|z| z * s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            mat: &self.mat - &other.mat,
        })
    }

    /// `i[A, B]`, which is Hermitian for Hermitian `A`, `B`.
    pub fn i_commutator(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        let comm = linalg::commutator(&self.mat, &other.mat);
        Ok(Self::symmetrized(comm.map(|z| z * c::<T>(0.0, 1.0))))
    }

    /// Compression `P A P` onto the first `k` basis vectors, as a `k × k`
    /// operator.
    pub fn leading_block(&self, k: usize) -> Self {
        Self {
            mat: self.mat.view((0, 0), (k, k)).into_owned(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

// Closed-form eigenvalues of a 2×2 Hermitian matrix; the qubit paths call
// this in hot loops.
fn qubit_eigenvalues<T: Real>(m: &CMatrix<T>) -> (T, T) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let half = T::lit(0.5);
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let r = (diff * diff + b.norm_sqr()).sqrt();
    (mean - r, mean + r)
}

/// Operator norm `max |λ|` of a Hermitian operator.
pub fn op_norm<T: Real>(a: &HermitianOperator<T>) -> T {
    hermitian_norm(a.matrix())
}

/// Operator norm of a matrix the caller knows to be Hermitian.
pub(crate) fn hermitian_norm<T: Real>(m: &CMatrix<T>) -> T {
    if m.nrows() == 2 {
        let (lo, hi) = qubit_eigenvalues(m);
        return lo.abs().max(hi.abs());
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Spectral norm (largest singular value) of an arbitrary square matrix.
pub fn spectral_norm<T: Real>(m: &CMatrix<T>) -> T {
    let gram = m.adjoint() * m;
    hermitian_norm(&gram).max(T::zero()).sqrt()
}

/// Orthogonal projection `P = P² = P†` together with its rank.
#[derive(Clone, Debug)]
pub struct Projection<T: Real> {
    op: HermitianOperator<T>,
    rank: usize,
}

impl<T: Real> Projection<T> {
    /// Validates `P² = P` within `1e-10` and an integral trace within `1e-8`.
    pub fn new(op: HermitianOperator<T>) -> Result<Self> {
        let m = op.matrix();
        let idem = hermitian_norm(&HermitianOperator::symmetrized(m * m - m).mat);
        if idem > tol::<T>(1e-10) {
            return Err(Error::NotProjection(format!("‖P² − P‖ = {:e}", idem.to_f64_lossy())));
        }
        let tr = op.trace().to_f64_lossy();
        let rank = tr.round();
        if (tr - rank).abs() > tol::<T>(1e-8).to_f64_lossy() {
            return Err(Error::NotProjection(format!("trace {tr} is not an integer")));
        }
        Ok(Self {
            op,
            rank: rank as usize,
        })
    }

    /// Projection onto the span of the given orthonormal columns.
    pub fn onto_columns(frame: &CMatrix<T>) -> Result<Self> {
        let p = frame * frame.adjoint();
        Self::new(HermitianOperator::symmetrized(p))
    }

    pub fn zero(d: usize) -> Self {
        Self {
            op: HermitianOperator::zero(d),
            rank: 0,
        }
    }

    pub fn op(&self) -> &HermitianOperator<T> {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        self.op.matrix()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn complement(&self) -> Self {
        let d = self.dim();
        Self {
            op: HermitianOperator::symmetrized(linalg::identity::<T>(d) - self.matrix()),
            rank: d - self.rank,
        }
    }
}

/// Spectral projection `1_S(A)` onto the eigenvectors of `A` whose eigenvalue
/// lies within `tol` of a member of `values`.
pub fn spectral_projection<T: Real>(a: &HermitianOperator<T>, values: &[T], tol: T) -> Projection<T> {
    spectral_projection_from(&a.spectrum(), values, tol)
}

/// [`spectral_projection`] from a precomputed spectrum.
pub fn spectral_projection_from<T: Real>(spec: &Spectrum<T>, values: &[T], tol: T) -> Projection<T> {
    let d = spec.vectors.nrows();
    let mut m = linalg::zeros::<T>(d, d);
    let mut rank = 0;
    for (k, &lam) in spec.values.iter().enumerate() {
        if values.iter().any(|&s| (lam - s).abs() <= tol) {
            let v = spec.vectors.column(k);
            m += v * v.adjoint();
            rank += 1;
        }
    }
    Projection {
        op: HermitianOperator::symmetrized(m),
        rank,
    }
}

/// Positive, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    op: HermitianOperator<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity, `λ_min ≥ −1e-10` and `tr = 1` within `1e-10`.
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        let op = HermitianOperator::new(mat)?;
        Self::from_operator(op)
    }

    pub fn from_operator(op: HermitianOperator<T>) -> Result<Self> {
        let tr = op.trace();
        if (tr - T::one()).abs() > tol::<T>(1e-10) {
            return Err(Error::NotDensityMatrix(format!("trace {} != 1", tr.to_f64_lossy())));
        }
        let lo = op.min_eigenvalue();
        if lo < -tol::<T>(1e-10) {
            return Err(Error::NotDensityMatrix(format!(
                "negative eigenvalue {:e}",
                lo.to_f64_lossy()
            )));
        }
        Ok(Self { op })
    }

    /// Pure state `|ψ⟩⟨ψ|` of the normalized `psi`.
    pub fn pure(psi: &CVector<T>) -> Result<Self> {
        let n = psi.norm();
        if n == T::zero() {
            return Err(Error::NotDensityMatrix("zero vector".into()));
        }
        let v = psi.map(|z| z / re(n));
        Ok(Self {
            op: HermitianOperator::ket_bra(&v),
        })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let w = T::one() / T::lit(d as f64);
        Self {
            op: HermitianOperator::identity(d).scale(w),
        }
    }

    /// Wraps an operator the caller has produced by a trace-preserving
    /// positive map.
    pub(crate) fn trusted(mat: CMatrix<T>) -> Self {
        Self {
            op: HermitianOperator::symmetrized(mat),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        self.op.matrix()
    }

    pub fn as_operator(&self) -> &HermitianOperator<T> {
        &self.op
    }

    /// `tr(ρX)` for an arbitrary matrix `X`.
    pub fn expect(&self, x: &CMatrix<T>) -> C<T> {
        (self.matrix() * x).trace()
    }

    /// `Var(X, ρ) = tr(ρX†X) − |tr(ρX)|²`.
    pub fn variance(&self, x: &CMatrix<T>) -> T {
        let second = self.expect(&(x.adjoint() * x)).re;
        let first = self.expect(x);
        second - first.norm_sqr()
    }

    /// `ρ ⊗ τ`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self::trusted(linalg::kron(self.matrix(), other.matrix()))
    }
}

/// Trace distance `½ tr|ρ − τ|`.
pub fn trace_distance<T: Real>(rho: &DensityMatrix<T>, tau: &DensityMatrix<T>) -> Result<T> {
    check_dim(rho.dim(), tau.dim())?;
    Ok(half_trace_norm(&(rho.matrix() - tau.matrix())))
}

/// `½ Σ|λ|` for a matrix the caller knows to be Hermitian.
pub(crate) fn half_trace_norm<T: Real>(m: &CMatrix<T>) -> T {
    let h = HermitianOperator::symmetrized(m.clone());
    let sum = h.eigenvalues().iter().fold(T::zero(), |acc, &x| acc + x.abs());
    sum * T::lit(0.5)
}

/// Qubit Bloch coordinates `ρ = ½(1 + xσx + yσy + zσz)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector<T: Real> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> BlochVector<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Self) -> T {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

pub fn bloch_to_state<T: Real>(v: &BlochVector<T>) -> Result<DensityMatrix<T>> {
    let n = v.norm();
    if n > T::one() + tol::<T>(1e-10) {
        return Err(Error::BlochOutOfBall(n.to_f64_lossy()));
    }
    let half = T::lit(0.5);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            re(half * (T::one() + v.z)),
            C::new(half * v.x, -half * v.y),
            C::new(half * v.x, half * v.y),
            re(half * (T::one() - v.z)),
        ],
    );
    Ok(DensityMatrix::trusted(m))
}

pub fn state_to_bloch<T: Real>(rho: &DensityMatrix<T>) -> Result<BlochVector<T>> {
    check_dim(2, rho.dim())?;
    let m = rho.matrix();
    let two = T::lit(2.0);
    Ok(BlochVector {
        x: two * m[(0, 1)].re,
        y: -two * m[(0, 1)].im,
        z: m[(0, 0)].re - m[(1, 1)].re,
    })
}

pub fn pauli_x<T: Real>() -> HermitianOperator<T> {
    HermitianOperator {
        mat: CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
    }
}

pub fn pauli_y<T: Real>() -> HermitianOperator<T> {
    HermitianOperator {
        mat: CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
    }
}

pub fn pauli_z<T: Real>() -> HermitianOperator<T> {
    HermitianOperator::from_real_diagonal(&[T::one(), -T::one()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn diag(v: &[f64]) -> HermitianOperator<f64> {
        HermitianOperator::from_real_diagonal(v)
    }

    #[test]
    fn spectral_projection_examples() {
        let sz = pauli_z::<f64>();
        let up = spectral_projection(&sz, &[1.0], 1e-9);
        assert_eq!(up.rank(), 1);
        assert!(max_abs(&(up.matrix() - diag(&[1.0, 0.0]).matrix())) < 1e-15);

        let full = spectral_projection(&sz, &[1.0, -1.0], 1e-9);
        assert!(max_abs(&(full.matrix() - linalg::identity::<f64>(2))) < 1e-15);

        let a = diag(&[0.3, 0.3, 0.9]);
        let p = spectral_projection(&a, &[0.3], 1e-9);
        assert_eq!(p.rank(), 2);
        assert!(max_abs(&(p.matrix() - diag(&[1.0, 1.0, 0.0]).matrix())) < 1e-14);

        let none = spectral_projection(&a, &[], 1e-9);
        assert_eq!(none.rank(), 0);
        assert_eq!(max_abs(none.matrix()), 0.0);
    }

    #[test]
    fn op_norm_examples() {
        assert_eq!(op_norm(&pauli_z::<f64>()), 1.0);
        assert_eq!(op_norm(&HermitianOperator::<f64>::zero(3)), 0.0);
        assert!((op_norm(&diag(&[0.2, -0.7])) - 0.7).abs() < 1e-15);
        assert!((op_norm(&diag(&[0.2, -0.7, 0.5])) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_examples() {
        let up = bloch_to_state(&BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        let down = bloch_to_state(&BlochVector::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(trace_distance(&up, &up).unwrap(), 0.0);
        assert!((trace_distance(&up, &down).unwrap() - 1.0f64).abs() < 1e-15);
        let mixed3 = DensityMatrix::<f64>::maximally_mixed(3);
        assert_eq!(
            trace_distance(&up, &mixed3),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        );
    }

    #[test]
    fn bloch_examples() {
        let up = bloch_to_state(&BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        assert!(max_abs(&(up.matrix() - diag(&[1.0, 0.0]).matrix())) < 1e-15);
        let mixed = bloch_to_state(&BlochVector::new(0.0, 0.0, 0.0)).unwrap();
        assert!(max_abs(&(mixed.matrix() - DensityMatrix::maximally_mixed(2).matrix())) < 1e-15);
        assert!(matches!(
            bloch_to_state(&BlochVector::new(0.8, 0.8, 0.0)),
            Err(Error::BlochOutOfBall(_))
        ));
        let m3 = DensityMatrix::<f64>::maximally_mixed(3);
        assert!(state_to_bloch(&m3).is_err());
    }

    #[test]
    fn construction_rejects_and_repairs() {
        let mut m = diag(&[1.0, 2.0]).into_matrix();
        m[(0, 1)] = C::new(1e-12, 0.0);
        let h = HermitianOperator::new(m.clone()).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)].conj());
        m[(0, 1)] = C::new(1e-3, 0.0);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            HermitianOperator::new(CMatrix::<f64>::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        assert!(DensityMatrix::new(diag(&[1.5, -0.5]).into_matrix()).is_err());
        assert!(DensityMatrix::new(diag(&[0.5, 0.6]).into_matrix()).is_err());
        assert!(Projection::new(diag(&[0.5, 1.0])).is_err());
        assert_eq!(Projection::new(diag(&[1.0, 0.0, 1.0])).unwrap().rank(), 2);
    }

    #[test]
    fn variance_of_eigenstate_vanishes() {
        let up = bloch_to_state(&BlochVector::new(0.0, 0.0, 1.0)).unwrap();
        assert!(up.variance(pauli_z::<f64>().matrix()).abs() < 1e-15);
        assert!((up.variance(pauli_x::<f64>().matrix()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let up = bloch_to_state(&BlochVector::<f32>::new(0.0, 0.6, 0.8)).unwrap();
        let v = state_to_bloch(&up).unwrap();
        assert!((v.y - 0.6).abs() < 1e-6);
        let p = spectral_projection(&pauli_x::<f32>(), &[1.0], 1e-4);
        assert_eq!(p.rank(), 1);
    }
}
