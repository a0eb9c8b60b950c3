//! Completely positive maps in the Heisenberg picture.
//!
//! Three concrete representations are provided:
//!
//! * [`Instrument`]: a map `B(H) ⊗ C(Ω) → B(H)` given by one Kraus list per
//!   outcome `ω`. Arguments are [`Element`]s, i.e. functions `ω ↦ X_ω`, so a
//!   mixed argument `X ⊗ f` never materializes as a `d·|Ω|` matrix.
//! * [`KrausMap`]: `X ↦ Σ K†XK` between full matrix algebras.
//! * [`IsometryChannel`]: `Y ↦ V†YV` for an isometry `V`.
//!
//! [`SuperoperatorMap`] wraps an arbitrary linear map on states; it exists so
//! that non-CP fixtures can be fed to [`choi_check`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::operators::{check_dim, hermitian_norm, DensityMatrix, HermitianOperator};
use crate::scalar::{re, tol, Real, C};

const UNITAL_TOL: f64 = 1e-10;

/// A unital CP map in the Heisenberg picture.
pub trait CpMap<T: Real> {
    /// Argument type (an element of the input algebra).
    type Input: Clone;

    /// Dimension of the Hilbert space the argument acts on.
    fn input_dim(&self) -> usize;
    /// Dimension of the Hilbert space the result acts on.
    fn output_dim(&self) -> usize;

    /// `T(X)`.
    fn apply(&self, x: &Self::Input) -> Result<CMatrix<T>>;

    /// `X†Y` in the input algebra.
    fn adjoint_mul(&self, x: &Self::Input, y: &Self::Input) -> Result<Self::Input>;

    /// `(X, Y) = T(X†Y) − T(X)†T(Y)`.
    fn sesquilinear_form(&self, x: &Self::Input, y: &Self::Input) -> Result<CMatrix<T>> {
        let txy = self.apply(&self.adjoint_mul(x, y)?)?;
        let tx = self.apply(x)?;
        let ty = self.apply(y)?;
        Ok(txy - tx.adjoint() * ty)
    }
}

/// Free-function form of [`CpMap::sesquilinear_form`].
pub fn sesquilinear_form<T: Real, M: CpMap<T>>(map: &M, x: &M::Input, y: &M::Input) -> Result<CMatrix<T>> {
    map.sesquilinear_form(x, y)
}

/// Schrödinger-picture action on matrices, used for the Choi certificate.
pub trait DualMap<T: Real> {
    /// Dimension of the states the dual accepts.
    fn dual_dim_in(&self) -> usize;
    /// Dimension of the matrices the dual returns.
    fn dual_dim_out(&self) -> usize;
    /// `T*(m)` for an arbitrary (not necessarily Hermitian) `m`.
    fn apply_dual(&self, m: &CMatrix<T>) -> Result<CMatrix<T>>;
}

/// An element `ω ↦ X_ω` of `B(H) ⊗ C(Ω)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Element<T: Real> {
    blocks: Vec<CMatrix<T>>,
}

impl<T: Real> Element<T> {
    pub fn from_blocks(blocks: Vec<CMatrix<T>>) -> Result<Self> {
        let first = blocks.first().ok_or(Error::Empty { what: "element" })?;
        let d = first.nrows();
        for b in &blocks {
            if b.nrows() != b.ncols() {
                return Err(Error::NotSquare {
                    rows: b.nrows(),
                    cols: b.ncols(),
                });
            }
            check_dim(d, b.nrows())?;
        }
        Ok(Self { blocks })
    }

    /// `X ⊗ f`.
    pub fn tensor(x: &CMatrix<T>, f: &[T]) -> Self {
        Self {
            blocks: f.iter().map(|&v| x.map(|z| z * v)).collect(),
        }
    }

    /// `X ⊗ 1` over `n` outcomes.
    pub fn system(x: &CMatrix<T>, n: usize) -> Self {
        Self {
            blocks: vec![x.clone(); n],
        }
    }

    /// `1 ⊗ f` on a `d`-dimensional system.
    pub fn pointer(f: &[T], d: usize) -> Self {
        Self::tensor(&linalg::identity(d), f)
    }

    pub fn blocks(&self) -> &[CMatrix<T>] {
        &self.blocks
    }

    pub fn n_outcomes(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    /// Blockwise product `X†Y`.
    pub fn adjoint_mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.n_outcomes(), other.n_outcomes())?;
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(x, y)| x.adjoint() * y)
                .collect(),
        })
    }

    /// Blockwise product `XY`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.n_outcomes(), other.n_outcomes())?;
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(x, y)| x * y).collect(),
        })
    }
}

/// One outcome of an instrument.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome<T: Real> {
    pub label: String,
    /// Pointer value `g(ω)`.
    pub value: T,
    pub kraus: Vec<CMatrix<T>>,
}

/// Real pointer function `g` on the outcome set; `B = 1 ⊗ g`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointerObservable<T: Real> {
    values: Vec<T>,
}

impl<T: Real> PointerObservable<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty { what: "pointer" });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutOfRange(format!("pointer value {}", v.to_f64_lossy())));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `h ∘ g`, e.g. `g²` for `B²`.
    pub fn map(&self, h: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&v| h(v)).collect(),
        }
    }

    /// `B = 1 ⊗ g` as an element on a `d`-dimensional system.
    pub fn element(&self, d: usize) -> Element<T> {
        Element::pointer(&self.values, d)
    }
}

/// Quantum instrument with a finite outcome set.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument<T: Real> {
    dim: usize,
    outcomes: Vec<Outcome<T>>,
}

/// Outcome probability and normalized posterior (absent for zero weight).
#[derive(Clone, Debug)]
pub struct BranchState<T: Real> {
    pub probability: T,
    pub posterior: Option<DensityMatrix<T>>,
}

impl<T: Real> Instrument<T> {
    /// Validates shapes, finiteness and `Σ K†K = 1` within `1e-10`.
    pub fn new(dim: usize, outcomes: Vec<Outcome<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty { what: "system" });
        }
        if outcomes.is_empty() {
            return Err(Error::Empty { what: "outcome list" });
        }
        for o in &outcomes {
            if o.kraus.is_empty() {
                return Err(Error::Empty { what: "Kraus list" });
            }
            if !o.value.is_finite() {
                return Err(Error::OutOfRange(format!("pointer value of {}", o.label)));
            }
            for k in &o.kraus {
                if k.nrows() != k.ncols() {
                    return Err(Error::NotSquare {
                        rows: k.nrows(),
                        cols: k.ncols(),
                    });
                }
                check_dim(dim, k.nrows())?;
            }
        }
        let inst = Self { dim, outcomes };
        let dev = inst.unitality_defect();
        if !(dev <= tol::<T>(UNITAL_TOL)) {
            return Err(Error::NotUnital(dev.to_f64_lossy()));
        }
        Ok(inst)
    }

    /// `‖Σ K†K − 1‖`.
    pub fn unitality_defect(&self) -> T {
        let total = self
            .povm_matrices()
            .into_iter()
            .fold(linalg::zeros::<T>(self.dim, self.dim), |a, m| a + m);
        hermitian_norm(&HermitianOperator::symmetrized(total - linalg::identity::<T>(self.dim)).into_matrix())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Outcome<T>] {
        &self.outcomes
    }

    pub fn pointer(&self) -> PointerObservable<T> {
        PointerObservable {
            values: self.outcomes.iter().map(|o| o.value).collect(),
        }
    }

    /// Same branches with new pointer values.
    pub fn with_pointer(&self, g: &PointerObservable<T>) -> Result<Self> {
        check_dim(self.n_outcomes(), g.values.len())?;
        let mut out = self.clone();
        for (o, &v) in out.outcomes.iter_mut().zip(&g.values) {
            o.value = v;
        }
        Ok(out)
    }

    fn povm_matrices(&self) -> Vec<CMatrix<T>> {
        self.outcomes
            .iter()
            .map(|o| {
                o.kraus
                    .iter()
                    .fold(linalg::zeros::<T>(self.dim, self.dim), |acc, k| acc + k.adjoint() * k)
            })
            .collect()
    }

    /// `μ(ω) = T(1 ⊗ δ_ω)`.
    pub fn povm(&self) -> Vec<HermitianOperator<T>> {
        self.povm_matrices()
            .into_iter()
            .map(HermitianOperator::symmetrized)
            .collect()
    }

    /// `T_ω(X) = Σ_k K†XK` for a single outcome.
    pub fn branch_apply(&self, omega: usize, x: &CMatrix<T>) -> CMatrix<T> {
        self.outcomes[omega]
            .kraus
            .iter()
            .fold(linalg::zeros::<T>(self.dim, self.dim), |acc, k| {
                acc + k.adjoint() * x * k
            })
    }

    /// Restriction `R(X) = T(X ⊗ 1)`.
    pub fn restriction(&self) -> KrausMap<T> {
        KrausMap {
            dim_in: self.dim,
            dim_out: self.dim,
            kraus: self.outcomes.iter().flat_map(|o| o.kraus.iter().cloned()).collect(),
        }
    }

    /// Outcome probabilities and posteriors for the input state.
    pub fn schrodinger_apply(&self, rho: &DensityMatrix<T>) -> Result<Vec<BranchState<T>>> {
        check_dim(self.dim, rho.dim())?;
        let eps = T::default_epsilon() * T::lit(16.0);
        Ok(self
            .outcomes
            .iter()
            .map(|o| {
                let m = o.kraus.iter().fold(linalg::zeros::<T>(self.dim, self.dim), |acc, k| {
                    acc + k * rho.matrix() * k.adjoint()
                });
                let w = m.trace().re;
                let posterior = (w > eps).then(|| DensityMatrix::trusted(m.map(|z| z / re(w))));
                BranchState {
                    probability: w.max(T::zero()),
                    posterior,
                }
            })
            .collect())
    }
}

impl<T: Real> CpMap<T> for Instrument<T> {
    type Input = Element<T>;

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Element<T>) -> Result<CMatrix<T>> {
        check_dim(self.n_outcomes(), x.n_outcomes())?;
        check_dim(self.dim, x.dim())?;
        Ok(x.blocks
            .iter()
            .enumerate()
            .fold(linalg::zeros::<T>(self.dim, self.dim), |acc, (w, b)| {
                acc + self.branch_apply(w, b)
            }))
    }

    fn adjoint_mul(&self, x: &Element<T>, y: &Element<T>) -> Result<Element<T>> {
        x.adjoint_mul(y)
    }
}

impl<T: Real> DualMap<T> for Instrument<T> {
    fn dual_dim_in(&self) -> usize {
        self.dim
    }

    fn dual_dim_out(&self) -> usize {
        self.dim * self.n_outcomes()
    }

    /// Block-diagonal `⊕_ω Σ_k K m K†`.
    fn apply_dual(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(self.dim, m.nrows())?;
        let d = self.dim;
        let mut out = linalg::zeros::<T>(d * self.n_outcomes(), d * self.n_outcomes());
        for (w, o) in self.outcomes.iter().enumerate() {
            let block = o
                .kraus
                .iter()
                .fold(linalg::zeros::<T>(d, d), |acc, k| acc + k * m * k.adjoint());
            out.view_mut((w * d, w * d), (d, d)).copy_from(&block);
        }
        Ok(out)
    }
}

/// `T(X) = Σ_k K_k† X K_k` with `K_k : ℂ^{dim_in} → ℂ^{dim_out}`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausMap<T: Real> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix<T>>,
}

impl<T: Real> KrausMap<T> {
    /// Validates shapes and unitality (`Σ K†K = 1`).
    pub fn new(kraus: Vec<CMatrix<T>>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty { what: "Kraus list" })?;
        let (dim_out, dim_in) = first.shape();
        let mut sum = linalg::zeros::<T>(dim_in, dim_in);
        for k in &kraus {
            check_dim(dim_out, k.nrows())?;
            check_dim(dim_in, k.ncols())?;
            sum += k.adjoint() * k;
        }
        let dev = hermitian_norm(&HermitianOperator::symmetrized(sum - linalg::identity::<T>(dim_in)).into_matrix());
        if !(dev <= tol::<T>(UNITAL_TOL)) {
            return Err(Error::NotUnital(dev.to_f64_lossy()));
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    /// Identity channel on `ℂ^d`.
    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![linalg::identity(d)],
        }
    }

    pub fn kraus(&self) -> &[CMatrix<T>] {
        &self.kraus
    }

    /// `R*(ρ) = Σ K ρ K†`.
    pub fn schrodinger(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        Ok(DensityMatrix::trusted(self.apply_dual(rho.matrix())?))
    }
}

impl<T: Real> CpMap<T> for KrausMap<T> {
    type Input = CMatrix<T>;

    fn input_dim(&self) -> usize {
        self.dim_out
    }

    fn output_dim(&self) -> usize {
        self.dim_in
    }

    fn apply(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(self.dim_out, x.nrows())?;
        check_dim(self.dim_out, x.ncols())?;
        Ok(self
            .kraus
            .iter()
            .fold(linalg::zeros::<T>(self.dim_in, self.dim_in), |acc, k| {
                acc + k.adjoint() * x * k
            }))
    }

    fn adjoint_mul(&self, x: &CMatrix<T>, y: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(x.ncols(), y.nrows())?;
        Ok(x.adjoint() * y)
    }
}

impl<T: Real> DualMap<T> for KrausMap<T> {
    fn dual_dim_in(&self) -> usize {
        self.dim_in
    }

    fn dual_dim_out(&self) -> usize {
        self.dim_out
    }

    fn apply_dual(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(self.dim_in, m.nrows())?;
        Ok(self
            .kraus
            .iter()
            .fold(linalg::zeros::<T>(self.dim_out, self.dim_out), |acc, k| {
                acc + k * m * k.adjoint()
            }))
    }
}

/// `T(Y) = V†YV` for an isometry `V : ℂ^{dim_in} → ℂ^{dim_out}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsometryChannel<T: Real> {
    v: CMatrix<T>,
}

impl<T: Real> IsometryChannel<T> {
    /// Validates `V†V = 1` within `1e-10`.
    pub fn new(v: CMatrix<T>) -> Result<Self> {
        if v.ncols() == 0 {
            return Err(Error::Empty { what: "isometry" });
        }
        let gram = v.adjoint() * &v;
        let dev = linalg::max_abs(&(gram - linalg::identity::<T>(v.ncols())));
        // Entrywise bound scaled to an operator-norm bound.
        let dev = dev * T::lit(v.ncols() as f64);
        if !(dev <= tol::<T>(UNITAL_TOL)) {
            return Err(Error::NotIsometry(dev.to_f64_lossy()));
        }
        Ok(Self { v })
    }

    pub fn dim_in(&self) -> usize {
        self.v.ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.v.nrows()
    }

    pub fn isometry(&self) -> &CMatrix<T> {
        &self.v
    }

    /// `(X, Y)` from the images `XV` and `YV`, which callers with structured
    /// `X`, `Y` can compute without forming `dim_out × dim_out` matrices.
    pub fn form_from_images(&self, xv: &CMatrix<T>, yv: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(self.dim_out(), xv.nrows())?;
        check_dim(self.dim_out(), yv.nrows())?;
        let tx = self.v.adjoint() * xv;
        let ty = self.v.adjoint() * yv;
        Ok(xv.adjoint() * yv - tx.adjoint() * ty)
    }
}

impl<T: Real> CpMap<T> for IsometryChannel<T> {
    type Input = CMatrix<T>;

    fn input_dim(&self) -> usize {
        self.dim_out()
    }

    fn output_dim(&self) -> usize {
        self.dim_in()
    }

    fn apply(&self, y: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(self.dim_out(), y.nrows())?;
        check_dim(self.dim_out(), y.ncols())?;
        Ok(self.v.adjoint() * y * &self.v)
    }

    fn adjoint_mul(&self, x: &CMatrix<T>, y: &CMatrix<T>) -> Result<CMatrix<T>> {
        Ok(x.adjoint() * y)
    }

    /// `(XV)†(YV) − T(X)†T(Y)`, avoiding the product `X†Y`.
    fn sesquilinear_form(&self, x: &CMatrix<T>, y: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(self.dim_out(), x.ncols())?;
        check_dim(self.dim_out(), y.ncols())?;
        self.form_from_images(&(x * &self.v), &(y * &self.v))
    }
}

impl<T: Real> DualMap<T> for IsometryChannel<T> {
    fn dual_dim_in(&self) -> usize {
        self.dim_in()
    }

    fn dual_dim_out(&self) -> usize {
        self.dim_out()
    }

    fn apply_dual(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(self.dim_in(), m.nrows())?;
        Ok(&self.v * m * self.v.adjoint())
    }
}

/// `V†YV`.
pub fn isometry_apply<T: Real>(ch: &IsometryChannel<T>, y: &HermitianOperator<T>) -> Result<HermitianOperator<T>> {
    Ok(HermitianOperator::symmetrized(ch.apply(y.matrix())?))
}

/// `Σ_ω f(ω) Σ_k K†XK`.
pub fn heisenberg_apply<T: Real>(
    inst: &Instrument<T>,
    x: &HermitianOperator<T>,
    f: &[T],
) -> Result<HermitianOperator<T>> {
    check_dim(inst.dim(), x.dim())?;
    let m = inst.apply(&Element::tensor(x.matrix(), f))?;
    Ok(HermitianOperator::symmetrized(m))
}

pub fn schrodinger_apply<T: Real>(inst: &Instrument<T>, rho: &DensityMatrix<T>) -> Result<Vec<BranchState<T>>> {
    inst.schrodinger_apply(rho)
}

pub fn restriction<T: Real>(inst: &Instrument<T>) -> KrausMap<T> {
    inst.restriction()
}

pub fn povm<T: Real>(inst: &Instrument<T>) -> Vec<HermitianOperator<T>> {
    inst.povm()
}

/// Which tensor factor to trace out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Partial trace of a state on `ℂ^{d1} ⊗ ℂ^{d2}` over the given factor.
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, d1: usize, d2: usize, which: Side) -> Result<DensityMatrix<T>> {
    if d1 * d2 != rho.dim() || d1 == 0 {
        return Err(Error::NotFactorizable { dim: rho.dim(), d1, d2 });
    }
    Ok(DensityMatrix::trusted(partial_trace_matrix(
        rho.matrix(),
        d1,
        d2,
        which,
    )))
}

pub(crate) fn partial_trace_matrix<T: Real>(m: &CMatrix<T>, d1: usize, d2: usize, which: Side) -> CMatrix<T> {
    match which {
        Side::Second => CMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).fold(C::new(T::zero(), T::zero()), |acc, k| acc + m[(i * d2 + k, j * d2 + k)])
        }),
        Side::First => CMatrix::from_fn(d2, d2, |i, j| {
            (0..d1).fold(C::new(T::zero(), T::zero()), |acc, k| acc + m[(k * d2 + i, k * d2 + j)])
        }),
    }
}

/// Outcome of [`choi_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChoiReport {
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Choi threshold: the map is accepted as CP iff `λ_min ≥ −1e-9`.
pub const CHOI_TOL: f64 = 1e-9;

/// Smallest eigenvalue of `(1 ⊗ T*)(|Φ⟩⟨Φ|) = (1/d) Σ E_ij ⊗ T*(E_ij)`.
pub fn choi_check<T: Real, M: DualMap<T> + ?Sized>(map: &M) -> Result<ChoiReport> {
    let d = map.dual_dim_in();
    let e = map.dual_dim_out();
    let mut choi = linalg::zeros::<T>(d * e, d * e);
    let w = T::one() / T::lit(d as f64);
    for i in 0..d {
        for j in 0..d {
            let mut eij = linalg::zeros::<T>(d, d);
            eij[(i, j)] = re(T::one());
            let img = map.apply_dual(&eij)?;
            check_dim(e, img.nrows())?;
            choi.view_mut((i * e, j * e), (e, e)).copy_from(&img.map(|z| z * w));
        }
    }
    let lo = HermitianOperator::new(choi)?.min_eigenvalue().to_f64_lossy();
    Ok(ChoiReport {
        min_eigenvalue: lo,
        pass: lo >= -CHOI_TOL,
    })
}

/// Arbitrary linear map on `d × d` matrices, `vec(T*(m)) = S vec(m)` with
/// row-major vectorization (`m_ij` at index `i·d + j`).
#[derive(Clone, Debug, PartialEq)]
pub struct SuperoperatorMap<T: Real> {
    dim: usize,
    s: CMatrix<T>,
}

impl<T: Real> SuperoperatorMap<T> {
    pub fn new(dim: usize, s: CMatrix<T>) -> Result<Self> {
        check_dim(dim * dim, s.nrows())?;
        check_dim(dim * dim, s.ncols())?;
        Ok(Self { dim, s })
    }

    /// The transpose map `m ↦ mᵀ`, positive but not completely positive.
    pub fn transpose(dim: usize) -> Self {
        let n = dim * dim;
        let mut s = linalg::zeros::<T>(n, n);
        for i in 0..dim {
            for j in 0..dim {
                s[(j * dim + i, i * dim + j)] = re(T::one());
            }
        }
        Self { dim, s }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.s
    }
}

impl<T: Real> DualMap<T> for SuperoperatorMap<T> {
    fn dual_dim_in(&self) -> usize {
        self.dim
    }

    fn dual_dim_out(&self) -> usize {
        self.dim
    }

    fn apply_dual(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        check_dim(self.dim, m.nrows())?;
        let d = self.dim;
        let v = crate::linalg::CVector::from_fn(d * d, |k, _| m[(k / d, k % d)]);
        let w = &self.s * v;
        Ok(CMatrix::from_fn(d, d, |i, j| w[i * d + j]))
    }
}

// ---------------------------------------------------------------------------
// JSON interchange

/// Complex matrix as rows of `[re, im]` pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeJson {
    pub label: String,
    pub value: f64,
    pub kraus: Vec<JsonMatrix>,
}

/// Serialized [`Instrument`]: `{dim, outcomes: [{label, value, kraus}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstrumentJson {
    pub dim: usize,
    pub outcomes: Vec<OutcomeJson>,
}

/// Serialized [`SuperoperatorMap`]: `{dim, superoperator}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperoperatorJson {
    pub dim: usize,
    pub superoperator: JsonMatrix,
}

pub fn matrix_to_json<T: Real>(m: &CMatrix<T>) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re.to_f64_lossy(), m[(i, j)].im.to_f64_lossy()])
                .collect()
        })
        .collect()
}

pub fn matrix_from_json<T: Real>(rows: &JsonMatrix) -> Result<CMatrix<T>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::Fixture("empty matrix".into()));
    }
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Fixture("ragged matrix rows".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Fixture("non-finite matrix entry".into()));
    }
    Ok(CMatrix::from_fn(r, c, |i, j| {
        C::new(T::lit(rows[i][j][0]), T::lit(rows[i][j][1]))
    }))
}

impl<T: Real> Instrument<T> {
    pub fn to_json(&self) -> InstrumentJson {
        InstrumentJson {
            dim: self.dim,
            outcomes: self
                .outcomes
                .iter()
                .map(|o| OutcomeJson {
                    label: o.label.clone(),
                    value: o.value.to_f64_lossy(),
                    kraus: o.kraus.iter().map(matrix_to_json).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &InstrumentJson) -> Result<Self> {
        let outcomes = j
            .outcomes
            .iter()
            .map(|o| {
                Ok(Outcome {
                    label: o.label.clone(),
                    value: T::lit(o.value),
                    kraus: o.kraus.iter().map(matrix_from_json).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(j.dim, outcomes)
    }
}

impl<T: Real> SuperoperatorMap<T> {
    pub fn to_json(&self) -> SuperoperatorJson {
        SuperoperatorJson {
            dim: self.dim,
            superoperator: matrix_to_json(&self.s),
        }
    }

    pub fn from_json(j: &SuperoperatorJson) -> Result<Self> {
        Self::new(j.dim, matrix_from_json(&j.superoperator)?)
    }
}

/// A fixture file: an instrument or a bare superoperator.
#[derive(Clone, Debug)]
pub enum Fixture<T: Real> {
    Instrument(Instrument<T>),
    Superoperator(SuperoperatorMap<T>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureJson {
    Instrument(InstrumentJson),
    Superoperator(SuperoperatorJson),
}

/// Parses a fixture from JSON text. Instruments are validated (unitality);
/// superoperators are accepted as given.
pub fn parse_fixture<T: Real>(text: &str) -> Result<Fixture<T>> {
    let raw: FixtureJson = serde_json::from_str(text).map_err(|e| Error::Fixture(e.to_string()))?;
    match raw {
        FixtureJson::Instrument(j) => Ok(Fixture::Instrument(Instrument::from_json(&j)?)),
        FixtureJson::Superoperator(j) => Ok(Fixture::Superoperator(SuperoperatorMap::from_json(&j)?)),
    }
}

impl<T: Real> DualMap<T> for Fixture<T> {
    fn dual_dim_in(&self) -> usize {
        match self {
            Fixture::Instrument(i) => i.dual_dim_in(),
            Fixture::Superoperator(s) => s.dual_dim_in(),
        }
    }

    fn dual_dim_out(&self) -> usize {
        match self {
            Fixture::Instrument(i) => i.dual_dim_out(),
            Fixture::Superoperator(s) => s.dual_dim_out(),
        }
    }

    fn apply_dual(&self, m: &CMatrix<T>) -> Result<CMatrix<T>> {
        match self {
            Fixture::Instrument(i) => i.apply_dual(m),
            Fixture::Superoperator(s) => s.apply_dual(m),
        }
    }
}
