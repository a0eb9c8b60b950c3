//! Seeded random instruments, states, observables and unitaries.
//!
//! All randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! with `seed_from_u64`. Samples are drawn in `f64` and converted to the
//! target scalar afterwards, so `f32` and `f64` instantiations see the same
//! stream. Per-trial seeds are derived from a master seed with
//! [`split_seed`].
//!
//! Draw order for [`random_instrument`]: for each outcome, for each Kraus
//! operator, the entries in column-major order, real part then imaginary
//! part; then one pointer value per outcome. A rejected draw (singular
//! normalization) is followed by a fresh draw from the same stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::{Instrument, Outcome};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::operators::{hermitian_norm, DensityMatrix, HermitianOperator};
use crate::scalar::{Real, C};

const MAX_ATTEMPTS: usize = 8;

/// Generator settings for one random instrument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub dim: usize,
    pub n_outcomes: usize,
    pub kraus_per_outcome: usize,
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `master ⊕ golden·(index + 1)`.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries (unit variance per
/// real component), column-major draw order.
pub fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix<T> {
    let mut m = linalg::zeros::<T>(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let a = gaussian(rng);
            let b = gaussian(rng);
            m[(i, j)] = C::new(T::lit(a), T::lit(b));
        }
    }
    m
}

/// Unitary from the QR decomposition of a complex Gaussian matrix, with the
/// phases of `R`'s diagonal absorbed into `Q`.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix<T> {
    let g = gaussian_matrix::<T, R>(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let z = r[(j, j)];
        let n = nalgebra::ComplexField::modulus(z);
        if n > T::zero() {
            let ph = z / C::new(n, T::zero());
            for i in 0..d {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// Normalized complex Gaussian vector.
pub fn random_unit_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVector<T> {
    loop {
        let v = CVector::from_fn(d, |_, _| {
            let a = gaussian(rng);
            let b = gaussian(rng);
            C::new(T::lit(a), T::lit(b))
        });
        let n = v.norm();
        if n > T::lit(1e-12) {
            return v.map(|z| z / C::new(n, T::zero()));
        }
    }
}

pub fn random_pure_state<T: Real>(seed: u64, dim: usize) -> DensityMatrix<T> {
    let v = random_unit_vector::<T, _>(&mut rng_from_seed(seed), dim);
    DensityMatrix::pure(&v).expect("unit vector")
}

/// `(G + G†)/2` rescaled to operator norm `norm_cap`.
pub fn random_hermitian_with<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize, norm_cap: T) -> HermitianOperator<T> {
    let g = gaussian_matrix::<T, R>(rng, dim, dim);
    let h = HermitianOperator::symmetrized(g);
    let n = hermitian_norm(h.matrix());
    if n > T::zero() {
        h.scale(norm_cap / n)
    } else {
        h
    }
}

pub fn random_hermitian<T: Real>(seed: u64, dim: usize, norm_cap: T) -> HermitianOperator<T> {
    random_hermitian_with(&mut rng_from_seed(seed), dim, norm_cap)
}

fn outcome_label(w: usize) -> String {
    format!("w{w}")
}

/// Random instrument: Gaussian Kraus operators `G_i`, right-normalized as
/// `K_i = G_i S^{-1/2}` with `S = Σ G_i†G_i`. Pointer values are standard
/// normal draws.
pub fn random_instrument<T: Real>(cfg: &GenConfig) -> Result<Instrument<T>> {
    random_instrument_with(&mut rng_from_seed(cfg.seed), cfg)
}

pub fn random_instrument_with<T: Real, R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Result<Instrument<T>> {
    if cfg.dim == 0 || cfg.n_outcomes == 0 || cfg.kraus_per_outcome == 0 {
        return Err(Error::Empty {
            what: "generator dimensions",
        });
    }
    let d = cfg.dim;
    for _ in 0..MAX_ATTEMPTS {
        let draws: Vec<Vec<CMatrix<T>>> = (0..cfg.n_outcomes)
            .map(|_| {
                (0..cfg.kraus_per_outcome)
                    .map(|_| gaussian_matrix::<T, R>(rng, d, d))
                    .collect()
            })
            .collect();
        let values: Vec<f64> = (0..cfg.n_outcomes).map(|_| gaussian(rng)).collect();
        let s = draws
            .iter()
            .flatten()
            .fold(linalg::zeros::<T>(d, d), |acc, g| acc + g.adjoint() * g);
        let s = HermitianOperator::symmetrized(s);
        let spec = s.spectrum();
        if spec.values[0] <= T::lit(1e-10) * spec.values[d - 1] {
            continue;
        }
        let inv_sqrt = linalg::hermitian_function(s.matrix(), |x| T::one() / x.sqrt());
        let outcomes = draws
            .into_iter()
            .zip(values)
            .enumerate()
            .map(|(w, (ks, v))| Outcome {
                label: outcome_label(w),
                value: T::lit(v),
                kraus: ks.into_iter().map(|g| g * &inv_sqrt).collect(),
            })
            .collect();
        return Instrument::new(d, outcomes);
    }
    Err(Error::SingularNormalization { attempts: MAX_ATTEMPTS })
}

/// Instrument that leaves every eigenstate of `A = W diag(a) W†` fixed,
/// together with that `A`.
///
/// Kraus operators are `W diag(c_ω) W†` with random amplitudes satisfying
/// `Σ_ω |c_ω,i|² = 1`. Eigenvalues `a` are standard normal draws. Each
/// outcome's pointer value is the eigenvalue `a_i` on which its weight
/// `|c_ω,i|²` is largest.
pub fn random_nondestructive_instrument<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_outcomes: usize,
) -> Result<(Instrument<T>, HermitianOperator<T>)> {
    if dim == 0 || n_outcomes == 0 {
        return Err(Error::Empty {
            what: "generator dimensions",
        });
    }
    let w = random_unitary::<T, R>(rng, dim);
    let a: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
    // amp[ω][i] complex amplitudes, normalized per eigenvector i.
    let mut amp: Vec<Vec<(f64, f64)>> = (0..n_outcomes)
        .map(|_| (0..dim).map(|_| (gaussian(rng), gaussian(rng))).collect())
        .collect();
    for i in 0..dim {
        let n: f64 = amp
            .iter()
            .map(|row| row[i].0 * row[i].0 + row[i].1 * row[i].1)
            .sum::<f64>()
            .sqrt();
        for row in amp.iter_mut() {
            row[i].0 /= n;
            row[i].1 /= n;
        }
    }
    let outcomes = amp
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let weights: Vec<f64> = row.iter().map(|(x, y)| x * x + y * y).collect();
            let best = (0..dim)
                .max_by(|&i, &j| weights[i].partial_cmp(&weights[j]).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(0);
            let mut dg = linalg::zeros::<T>(dim, dim);
            for (i, &(x, y)) in row.iter().enumerate() {
                dg[(i, i)] = C::new(T::lit(x), T::lit(y));
            }
            Outcome {
                label: outcome_label(k),
                value: T::lit(a[best]),
                kraus: vec![&w * dg * w.adjoint()],
            }
        })
        .collect();
    let da = HermitianOperator::from_real_diagonal(&a.iter().map(|&x| T::lit(x)).collect::<Vec<_>>());
    let a_op = HermitianOperator::symmetrized(&w * da.matrix() * w.adjoint());
    Ok((Instrument::new(dim, outcomes)?, a_op))
}

/// Perfect instrument `K_ω = U_ω Π_ω` with `Π_ω = |w_ω⟩⟨w_ω|` for a random
/// orthonormal basis `{w_ω}` and random unitaries `U_ω`. One outcome per
/// basis vector; pointer values are standard normal draws.
pub fn random_perfect_instrument<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Instrument<T>> {
    if dim == 0 {
        return Err(Error::Empty {
            what: "generator dimensions",
        });
    }
    let w = random_unitary::<T, R>(rng, dim);
    let outcomes = (0..dim)
        .map(|k| {
            let col = w.column(k).into_owned();
            let proj = linalg::outer(&col, &col);
            let u = random_unitary::<T, R>(rng, dim);
            let v = gaussian(rng);
            Outcome {
                label: outcome_label(k),
                value: T::lit(v),
                kraus: vec![u * proj],
            }
        })
        .collect();
    Instrument::new(dim, outcomes)
}
