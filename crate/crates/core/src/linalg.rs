//! Dense complex matrix helpers and the matrix exponential.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::scalar::{Real, C};

/// Dense complex matrix.
pub type CMatrix<T> = DMatrix<C<T>>;
/// Dense complex column vector.
pub type CVector<T> = DVector<C<T>>;

pub fn identity<T: Real>(d: usize) -> CMatrix<T> {
    CMatrix::identity(d, d)
}

pub fn zeros<T: Real>(r: usize, c: usize) -> CMatrix<T> {
    CMatrix::zeros(r, c)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermitian_deviation<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Largest entrywise modulus.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| {
        let a = z.modulus();
        if a > acc {
            a
        } else {
            acc
        }
    })
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

/// Kronecker product `a ⊗ b`, first factor outermost.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

pub fn basis_vector<T: Real>(d: usize, i: usize) -> CVector<T> {
    let mut v = CVector::zeros(d);
    v[i] = C::new(T::one(), T::zero());
    v
}

/// `|v⟩⟨w|`.
pub fn outer<T: Real>(v: &CVector<T>, w: &CVector<T>) -> CMatrix<T> {
    v * w.adjoint()
}

/// 1-norm (maximum absolute column sum).
fn norm1<N: ComplexField>(m: &DMatrix<N>) -> N::RealField
where
    N::RealField: Real,
{
    let mut best = <N::RealField as num_traits::Zero>::zero();
    for col in m.column_iter() {
        let s = col.iter().fold(<N::RealField as num_traits::Zero>::zero(), |acc, z| {
            acc + z.clone().modulus()
        });
        if s > best {
            best = s;
        }
    }
    best
}

// Padé coefficients b_0..b_m for degrees 3, 5, 7, 9 and 13, with the 1-norm
// thresholds below which each degree reaches double-precision accuracy.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

fn scaled<N: ComplexField>(m: &DMatrix<N>, s: f64) -> DMatrix<N> {
    m.map(|z| z * N::from_f64(s).expect("finite coefficient"))
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant (degree 3, 5, 7, 9 or 13 chosen from the 1-norm).
///
/// Works for real and complex element types alike.
///
/// # Panics
/// Panics if `a` is not square or the Padé denominator is singular, which
/// cannot happen for finite input inside the degree thresholds.
pub fn expm<N: ComplexField>(a: &DMatrix<N>) -> DMatrix<N>
where
    N::RealField: Real,
{
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return a.clone();
    }
    let eye = DMatrix::<N>::identity(n, n);
    let norm = norm1(a).to_f64_lossy();

    for &(deg, theta) in THETA.iter() {
        if norm <= theta {
            let coeffs: &[f64] = match deg {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(a, &eye, coeffs);
        }
    }

    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a_s = scaled(a, 0.5f64.powi(s));
    let mut r = pade13(&a_s, &eye);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn solve_pade<N: ComplexField>(u: DMatrix<N>, v: DMatrix<N>) -> DMatrix<N> {
    let num = &v + &u;
    let den = v - u;
    den.lu()
        .solve(&num)
        .expect("Padé denominator is nonsingular inside the degree thresholds")
}

fn pade_low<N: ComplexField>(a: &DMatrix<N>, eye: &DMatrix<N>, b: &[f64]) -> DMatrix<N> {
    let a2 = a * a;
    // Even powers A^0, A^2, A^4, ...
    let mut powers = vec![eye.clone(), a2.clone()];
    while powers.len() * 2 < b.len() {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u = DMatrix::<N>::zeros(a.nrows(), a.ncols());
    let mut v = DMatrix::<N>::zeros(a.nrows(), a.ncols());
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u += scaled(p, b[2 * k + 1]);
        }
        v += scaled(p, b[2 * k]);
    }
    let u = a * u;
    solve_pade(u, v)
}

fn pade13<N: ComplexField>(a: &DMatrix<N>, eye: &DMatrix<N>) -> DMatrix<N> {
    let b = &PADE13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let w1 = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let w2 = scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(eye, b[1]);
    let u = a * (&a6 * w1 + w2);
    let z1 = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let z2 = scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(eye, b[0]);
    let v = &a6 * z1 + z2;
    solve_pade(u, v)
}

/// Applies `f` to the Hermitian matrix `h` through its eigendecomposition.
pub(crate) fn hermitian_function<T: Real>(h: &CMatrix<T>, f: impl Fn(T) -> T) -> CMatrix<T> {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut out = zeros::<T>(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let w = f(lam);
        out += (v * v.adjoint()).map(|z| z * w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, Matrix3};

    #[test]
    fn expm_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(expm(&z), DMatrix::identity(4, 4));
    }

    #[test]
    fn expm_rotation_generator() {
        for &theta in &[1e-3, 0.3, 1.2, 4.0, 37.0] {
            let g = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
            let e = expm(&g);
            let (s, c) = f64::sin_cos(theta);
            let want = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            assert_abs_diff_eq!(e, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn expm_diagonal_and_nilpotent() {
        let d = Matrix3::new(-0.5, 0.0, 0.0, 0.0, -0.75, 0.0, 0.0, 0.0, 3.0);
        let e = expm(&DMatrix::from_iterator(3, 3, d.iter().cloned()));
        for (i, &x) in [-0.5f64, -0.75, 3.0].iter().enumerate() {
            assert!((e[(i, i)] - x.exp()).abs() <= 1e-12 * x.exp());
        }
        // exp of a strictly upper-triangular 3x3 matrix terminates at N^2/2.
        let n = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 5.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let want = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 5.0 + 3.0, 0.0, 1.0, 3.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(expm(&n), want, epsilon = 1e-12);
    }

    #[test]
    fn expm_matches_nalgebra_on_complex_input() {
        let m = CMatrix::<f64>::from_fn(5, 5, |i, j| {
            C::new(((i * 7 + j * 3) % 5) as f64 * 0.4 - 0.8, ((i + 2 * j) % 3) as f64 * 0.3)
        });
        for &s in &[0.01, 0.5, 2.0, 9.0] {
            let ms = m.map(|z| z * s);
            let ours = expm(&ms);
            let theirs = ms.exp();
            let scale = max_abs(&theirs).max(1.0);
            assert!(max_abs(&(ours - theirs)) <= 1e-11 * scale, "s = {s}");
        }
    }

    #[test]
    fn expm_anti_hermitian_is_unitary() {
        let h = CMatrix::<f64>::from_fn(6, 6, |i, j| {
            let x = ((i * 5 + j * 11) % 7) as f64 - 3.0;
            C::new(x, if i == j { 0.0 } else { 0.5 * (i as f64 - j as f64) })
        });
        let h = (&h + h.adjoint()).map(|z| z * 0.5);
        let u = expm(&h.map(|z| z * C::new(0.0, 1.0)));
        let err = max_abs(&(u.adjoint() * &u - identity::<f64>(6)));
        assert!(err < 1e-12, "unitarity error {err}");
    }

    #[test]
    fn kron_and_hermitian_function() {
        let a = identity::<f64>(2);
        let b = CMatrix::<f64>::from_row_slice(
            2,
            2,
            &[C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)],
        );
        let k = kron(&a, &b);
        assert_eq!(k.nrows(), 4);
        assert_eq!(k[(0, 1)], C::new(1.0, 0.0));
        assert_eq!(k[(2, 3)], C::new(1.0, 0.0));
        // sqrt of (σx)^2 = identity.
        let sq = hermitian_function(&(&b * &b), |x| x.max(0.0).sqrt());
        assert!(max_abs(&(sq - identity::<f64>(2))) < 1e-14);
    }
}
