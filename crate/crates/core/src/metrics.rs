//! Figures of merit of an information transfer: maximal added variance Σ²,
//! measurement infidelity δ, maximal disturbance Δ, residual coherence and
//! the distance of an observable to the center.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{CpMap, DualMap, Instrument, PointerObservable};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::operators::{check_dim, half_trace_norm, hermitian_norm, op_norm, HermitianOperator, Projection};
use crate::randgen::{random_unitary, rng_from_seed, split_seed};
use crate::scalar::{c, re, tol, Real, C};

/// Largest number of distinct spectral points δ enumerates subsets of.
pub const ENUMERATION_CAP: usize = 20;

/// `Σ² = ‖(B, B)‖`.
pub fn sigma2<T: Real, M: CpMap<T>>(map: &M, b: &M::Input) -> Result<T> {
    let form = map.sesquilinear_form(b, b)?;
    Ok(hermitian_norm(&HermitianOperator::symmetrized(form).into_matrix()))
}

/// `Σ²` for the classical pointer `B = 1 ⊗ g` of an instrument.
pub fn sigma2_pointer<T: Real>(inst: &Instrument<T>, g: &PointerObservable<T>) -> Result<T> {
    check_dim(inst.n_outcomes(), g.values().len())?;
    sigma2(inst, &g.element(inst.dim()))
}

/// `δ = max_S ‖1_S(A) − Σ_{g(ω) ∈ S} μ(ω)‖` over subsets `S` of the merged
/// set of eigenvalues of `A` and pointer values of `inst`.
///
/// Values closer than `1e-9 · max(1, ‖A‖, max|g|)` are merged. More than
/// [`ENUMERATION_CAP`] merged values is an error.
pub fn delta_infidelity<T: Real>(inst: &Instrument<T>, a: &HermitianOperator<T>) -> Result<T> {
    check_dim(inst.dim(), a.dim())?;
    let d = a.dim();
    let spec = a.spectrum();
    let g = inst.pointer();
    let scale = g.values().iter().fold(T::one().max(op_norm(a)), |m, v| m.max(v.abs()));
    let eps = tol::<T>(1e-9) * scale;

    // (value, Some(eigen-cluster) | None, Some(outcome) | None)
    let mut points: Vec<(T, Option<Vec<usize>>, Option<usize>)> = spec
        .clusters()
        .into_iter()
        .map(|(v, idx)| (v, Some(idx), None))
        .collect();
    points.extend(g.values().iter().enumerate().map(|(w, &v)| (v, None, Some(w))));
    points.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    let povm = inst.povm();
    let mut classes: Vec<(T, CMatrix<T>)> = Vec::new();
    for (v, cluster, outcome) in points {
        let contrib = match (cluster, outcome) {
            (Some(idx), _) => idx.iter().fold(linalg::zeros::<T>(d, d), |acc, &k| {
                let col = spec.vectors.column(k);
                acc + col * col.adjoint()
            }),
            (None, Some(w)) => -povm[w].matrix().clone(),
            (None, None) => unreachable!(),
        };
        match classes.last_mut() {
            Some((last, m)) if v - *last < eps => *m += contrib,
            _ => classes.push((v, contrib)),
        }
    }
    let m = classes.len();
    if m > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            distinct: m,
            cap: ENUMERATION_CAP,
        });
    }
    let diffs: Vec<CMatrix<T>> = classes.into_iter().map(|(_, m)| m).collect();
    Ok(max_subset_norm(&diffs))
}

// Σ_s D_s = 0, so S and its complement give the same norm: the last class is
// kept out of every subset and 2^(m−1) Gray-code steps cover all of them.
fn max_subset_norm<T: Real>(diffs: &[CMatrix<T>]) -> T {
    let m = diffs.len();
    if m <= 1 {
        return T::zero();
    }
    let d = diffs[0].nrows();
    let free = m - 1;
    let mut sum = linalg::zeros::<T>(d, d);
    let mut member = vec![false; free];
    let mut best = T::zero();
    const RESYNC: u64 = 4096;
    for step in 1u64..(1u64 << free) {
        let bit = step.trailing_zeros() as usize;
        member[bit] = !member[bit];
        if step % RESYNC == 0 {
            sum = member
                .iter()
                .zip(diffs)
                .filter(|(&on, _)| on)
                .fold(linalg::zeros::<T>(d, d), |acc, (_, x)| acc + x);
        } else if member[bit] {
            sum += &diffs[bit];
        } else {
            sum -= &diffs[bit];
        }
        let n = hermitian_norm(&sum);
        if n > best {
            best = n;
        }
    }
    best
}

/// `d(A, Z) = (λmax − λmin)/2`.
pub fn distance_to_center<T: Real>(a: &HermitianOperator<T>) -> T {
    let ev = a.eigenvalues();
    (ev[ev.len() - 1] - ev[0]) * T::lit(0.5)
}

// ---------------------------------------------------------------------------
// Maximal disturbance

/// Settings of the Δ optimizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisturbanceConfig {
    /// Random starts per projection rank on the generic path.
    pub restarts: usize,
    /// Declared optimizer tolerance; also the final pattern-search step.
    pub eps_opt: f64,
    pub seed: u64,
    /// Points of the Fibonacci sphere grid on the qubit path.
    pub grid_points: usize,
    /// Iteration budget per local search.
    pub max_evals: usize,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            eps_opt: 1e-6,
            seed: 0,
            grid_points: 16384,
            max_evals: 200_000,
        }
    }
}

/// Which optimizer produced a [`DisturbanceEstimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DisturbancePath {
    Qubit,
    Generic,
}

/// Lower bound on Δ attained by an explicit projection.
#[derive(Clone, Debug)]
pub struct DisturbanceEstimate<T: Real> {
    /// `‖R(P*) − P*‖`, recomputed from the witness.
    pub value: T,
    pub argmax: Projection<T>,
    pub restarts: usize,
    pub converged: bool,
    pub eps_opt: f64,
    pub path: DisturbancePath,
}

/// JSON form `{value, rank, restarts, converged, eps_opt}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisturbanceJson {
    pub value: f64,
    pub rank: usize,
    pub restarts: usize,
    pub converged: bool,
    pub eps_opt: f64,
}

impl<T: Real> DisturbanceEstimate<T> {
    pub fn to_json(&self) -> DisturbanceJson {
        DisturbanceJson {
            value: self.value.to_f64_lossy(),
            rank: self.argmax.rank(),
            restarts: self.restarts,
            converged: self.converged,
            eps_opt: self.eps_opt,
        }
    }

    /// True when the value comes from the multi-start search in dimension
    /// above two, where no exhaustive grid backs it.
    pub fn estimated(&self) -> bool {
        self.path == DisturbancePath::Generic && self.argmax.dim() > 2
    }
}

/// `‖R(P) − P‖`.
pub fn projection_disturbance<T: Real, M>(r: &M, p: &CMatrix<T>) -> Result<T>
where
    M: CpMap<T, Input = CMatrix<T>>,
{
    let rp = r.apply(p)?;
    Ok(hermitian_norm(&HermitianOperator::symmetrized(rp - p).into_matrix()))
}

fn check_square_map<T: Real, M: CpMap<T, Input = CMatrix<T>>>(r: &M) -> Result<usize> {
    check_dim(r.input_dim(), r.output_dim())?;
    Ok(r.input_dim())
}

/// `Δ = sup_P ‖R(P) − P‖`: the qubit grid path in dimension 2, the generic
/// manifold search otherwise.
pub fn delta_disturbance<T, M>(r: &M, cfg: &DisturbanceConfig) -> Result<DisturbanceEstimate<T>>
where
    T: Real,
    M: CpMap<T, Input = CMatrix<T>> + Sync,
{
    if check_square_map(r)? == 2 {
        delta_disturbance_qubit(r, cfg)
    } else {
        delta_disturbance_generic(r, cfg)
    }
}

fn bloch_projection<T: Real>(n: [f64; 3]) -> CMatrix<T> {
    let h = 0.5;
    CMatrix::from_row_slice(
        2,
        2,
        &[
            c(h * (1.0 + n[2]), 0.0),
            c(h * n[0], -h * n[1]),
            c(h * n[0], h * n[1]),
            c(h * (1.0 - n[2]), 0.0),
        ],
    )
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn tangent_frame(n: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if n[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let dot = helper[0] * n[0] + helper[1] * n[1] + helper[2] * n[2];
    let e1 = normalize3([helper[0] - dot * n[0], helper[1] - dot * n[1], helper[2] - dot * n[2]]);
    let e2 = [
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];
    (e1, e2)
}

/// Qubit path. With `P = ½(1 + n·σ)`, `R(P) − P` is affine in `n`, so the
/// four matrices `½(R(1) − 1)` and `½(R(σ_i) − σ_i)` are computed once and
/// the objective is a closed-form 2×2 norm. A Fibonacci grid seeds a
/// pattern search on the sphere from the best grid points.
pub fn delta_disturbance_qubit<T, M>(r: &M, cfg: &DisturbanceConfig) -> Result<DisturbanceEstimate<T>>
where
    T: Real,
    M: CpMap<T, Input = CMatrix<T>>,
{
    check_dim(2, check_square_map(r)?)?;
    let basis: [CMatrix<T>; 4] = [
        linalg::identity(2),
        crate::operators::pauli_x::<T>().into_matrix(),
        crate::operators::pauli_y::<T>().into_matrix(),
        crate::operators::pauli_z::<T>().into_matrix(),
    ];
    let mut g: Vec<[[C<f64>; 2]; 2]> = Vec::with_capacity(4);
    for b in &basis {
        let m = (r.apply(b)? - b).map(|z| z * T::lit(0.5));
        let cv = |i: usize, j: usize| C::new(m[(i, j)].re.to_f64_lossy(), m[(i, j)].im.to_f64_lossy());
        g.push([[cv(0, 0), cv(0, 1)], [cv(1, 0), cv(1, 1)]]);
    }
    let objective = |n: [f64; 3]| -> f64 {
        let mut acc = g[0];
        for k in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += g[k + 1][i][j] * n[k];
                }
            }
        }
        // Hermitian part, then the closed-form spectral radius.
        let a = acc[0][0].re;
        let d = acc[1][1].re;
        let b = (acc[0][1] + acc[1][0].conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let diff = 0.5 * (a - d);
        mean.abs() + (diff * diff + b.norm_sqr()).sqrt()
    };

    let npts = cfg.grid_points.max(16);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut scored: Vec<(f64, [f64; 3])> = (0..npts)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / npts as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let n = [rho * phi.cos(), rho * phi.sin(), z];
            (objective(n), n)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let spacing = (4.0 * std::f64::consts::PI / npts as f64).sqrt();
    let starts = scored.iter().take(8).map(|&(_, n)| n).collect::<Vec<_>>();
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0, 1.0]);
    let mut all_converged = true;
    for n0 in starts {
        let (v, n, conv) = sphere_pattern_search(&objective, n0, 2.0 * spacing, cfg.eps_opt, cfg.max_evals);
        all_converged &= conv;
        if v > best.0 {
            best = (v, n);
        }
    }
    let p = bloch_projection::<T>(best.1);
    let value = projection_disturbance(r, &p)?;
    Ok(DisturbanceEstimate {
        value,
        argmax: Projection::new(HermitianOperator::symmetrized(p))?,
        restarts: 8,
        converged: all_converged,
        eps_opt: cfg.eps_opt,
        path: DisturbancePath::Qubit,
    })
}

fn sphere_pattern_search(
    f: &impl Fn([f64; 3]) -> f64,
    n0: [f64; 3],
    step0: f64,
    step_min: f64,
    max_evals: usize,
) -> (f64, [f64; 3], bool) {
    let mut n = n0;
    let mut val = f(n);
    let mut h = step0;
    let mut evals = 0;
    while h >= step_min {
        if evals >= max_evals {
            return (val, n, false);
        }
        let (e1, e2) = tangent_frame(n);
        let mut improved = false;
        for e in [e1, e2] {
            for s in [1.0, -1.0] {
                let cand = normalize3([n[0] + s * h * e[0], n[1] + s * h * e[1], n[2] + s * h * e[2]]);
                let v = f(cand);
                evals += 1;
                if v > val {
                    val = v;
                    n = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (val, n, true)
}

/// Rotation mixing frame columns `j` and `l` by angle `t`.
#[derive(Clone, Copy)]
enum Givens {
    Real,
    Complex,
}

fn rotate<T: Real>(w: &mut CMatrix<T>, j: usize, l: usize, t: f64, kind: Givens) {
    let (s, co) = t.sin_cos();
    let (s, co) = (T::lit(s), T::lit(co));
    for i in 0..w.nrows() {
        let a = w[(i, j)];
        let b = w[(i, l)];
        match kind {
            Givens::Real => {
                w[(i, j)] = a * co - b * s;
                w[(i, l)] = a * s + b * co;
            }
            Givens::Complex => {
                let is = C::new(T::zero(), s);
                w[(i, j)] = a * co + b * is;
                w[(i, l)] = a * is + b * co;
            }
        }
    }
}

fn frame_projection<T: Real>(w: &CMatrix<T>, k: usize) -> CMatrix<T> {
    let f = w.columns(0, k);
    f * f.adjoint()
}

/// `(value, frame, rank, converged)` of one restart.
type RestartOutcome<T> = (T, CMatrix<T>, usize, bool);

/// Generic path: for each rank `k ≤ d/2` (rank `d − k` gives the same value
/// by unitality), multi-start pattern search over `P = W diag(1_k, 0) W†`
/// with `W` moved by real and complex Givens rotations between the first `k`
/// and the last `d − k` columns.
pub fn delta_disturbance_generic<T, M>(r: &M, cfg: &DisturbanceConfig) -> Result<DisturbanceEstimate<T>>
where
    T: Real,
    M: CpMap<T, Input = CMatrix<T>> + Sync,
{
    let d = check_square_map(r)?;
    if d < 2 {
        return Ok(DisturbanceEstimate {
            value: T::zero(),
            argmax: Projection::zero(d),
            restarts: 0,
            converged: true,
            eps_opt: cfg.eps_opt,
            path: DisturbancePath::Generic,
        });
    }
    let restarts = cfg.restarts.max(1);
    let jobs: Vec<(usize, usize)> = (1..=d / 2).flat_map(|k| (0..restarts).map(move |s| (k, s))).collect();
    let results: Vec<Result<RestartOutcome<T>>> = jobs
        .par_iter()
        .map(|&(k, s)| {
            let seed = split_seed(cfg.seed, (k * restarts + s) as u64);
            let mut rng = rng_from_seed(seed);
            let w0 = random_unitary::<T, _>(&mut rng, d);
            let (v, w, conv) = manifold_search(r, w0, k, cfg)?;
            Ok((v, w, k, conv))
        })
        .collect();
    let mut best: Option<(T, CMatrix<T>, usize)> = None;
    let mut converged = true;
    for res in results {
        let (v, w, k, conv) = res?;
        converged &= conv;
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, w, k));
        }
    }
    let (_, w, k) = best.expect("at least one job");
    let p = frame_projection(&w, k);
    let value = projection_disturbance(r, &p)?;
    Ok(DisturbanceEstimate {
        value,
        argmax: Projection::new(HermitianOperator::symmetrized(p))?,
        restarts,
        converged,
        eps_opt: cfg.eps_opt,
        path: DisturbancePath::Generic,
    })
}

fn manifold_search<T, M>(r: &M, mut w: CMatrix<T>, k: usize, cfg: &DisturbanceConfig) -> Result<(T, CMatrix<T>, bool)>
where
    T: Real,
    M: CpMap<T, Input = CMatrix<T>>,
{
    let d = w.nrows();
    let mut val = projection_disturbance(r, &frame_projection(&w, k))?;
    let mut h = std::f64::consts::FRAC_PI_4;
    let mut evals = 0usize;
    while h >= cfg.eps_opt {
        let mut improved = false;
        for j in 0..k {
            for l in k..d {
                for kind in [Givens::Real, Givens::Complex] {
                    for s in [1.0, -1.0] {
                        if evals >= cfg.max_evals {
                            return Ok((val, w, false));
                        }
                        let mut cand = w.clone();
                        rotate(&mut cand, j, l, s * h, kind);
                        let v = projection_disturbance(r, &frame_projection(&cand, k))?;
                        evals += 1;
                        if v > val {
                            val = v;
                            w = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok((val, w, true))
}

// ---------------------------------------------------------------------------
// Coherence

/// Two orthonormal eigenvectors of an observable with distinct eigenvalues,
/// and the amplitudes of their superposition.
#[derive(Clone, Debug)]
pub struct CoherencePair<T: Real> {
    pub psi_x: CVector<T>,
    pub psi_y: CVector<T>,
    pub x: T,
    pub y: T,
    pub alpha: C<T>,
    pub beta: C<T>,
}

impl<T: Real> CoherencePair<T> {
    /// Validates orthonormality (`1e-10`), the eigen-equations (`1e-8`),
    /// `|α|² + |β|² = 1` (`1e-10`) and `x ≠ y`.
    pub fn new(
        a: &HermitianOperator<T>,
        psi_x: CVector<T>,
        psi_y: CVector<T>,
        alpha: C<T>,
        beta: C<T>,
    ) -> Result<Self> {
        check_dim(a.dim(), psi_x.len())?;
        check_dim(a.dim(), psi_y.len())?;
        let t10 = tol::<T>(1e-10);
        for v in [&psi_x, &psi_y] {
            if (v.norm() - T::one()).abs() > t10 {
                return Err(Error::InvalidPair("vectors must be normalized".into()));
            }
        }
        let overlap = psi_x.dotc(&psi_y).norm_sqr().sqrt();
        if overlap > t10 {
            return Err(Error::NonOrthogonalPair(overlap.to_f64_lossy()));
        }
        let x = a.expectation(&psi_x);
        let y = a.expectation(&psi_y);
        let t8 = tol::<T>(1e-8);
        for (v, lam) in [(&psi_x, x), (&psi_y, y)] {
            let res = (a.matrix() * v - v.map(|z| z * lam)).norm();
            if res > t8 {
                return Err(Error::InvalidPair(format!(
                    "not an eigenvector (residual {:e})",
                    res.to_f64_lossy()
                )));
            }
        }
        let gap_tol = tol::<T>(1e-9) * T::one().max(op_norm(a));
        if (x - y).abs() <= gap_tol {
            return Err(Error::DegeneratePair((x - y).abs().to_f64_lossy()));
        }
        let w = alpha.norm_sqr() + beta.norm_sqr();
        if (w - T::one()).abs() > t10 {
            return Err(Error::InvalidPair(format!("|α|² + |β|² = {}", w.to_f64_lossy())));
        }
        Ok(Self {
            psi_x,
            psi_y,
            x,
            y,
            alpha,
            beta,
        })
    }

    /// Pair built from the eigenvectors with (ascending) indices `i`, `j`.
    pub fn from_eigenvectors(a: &HermitianOperator<T>, i: usize, j: usize, alpha: C<T>, beta: C<T>) -> Result<Self> {
        let spec = a.spectrum();
        if i >= a.dim() || j >= a.dim() || i == j {
            return Err(Error::InvalidPair(format!("eigenvector indices {i}, {j}")));
        }
        Self::new(a, spec.vector(i), spec.vector(j), alpha, beta)
    }

    pub fn gap(&self) -> T {
        (self.x - self.y).abs()
    }

    pub fn dim(&self) -> usize {
        self.psi_x.len()
    }

    /// `|αψx + βψy⟩⟨·| − (|α|²|ψx⟩⟨ψx| + |β|²|ψy⟩⟨ψy|)`.
    fn coherence_operator(&self) -> CMatrix<T> {
        let sup = self.psi_x.map(|z| z * self.alpha) + self.psi_y.map(|z| z * self.beta);
        let mix = linalg::outer(&self.psi_x, &self.psi_x).map(|z| z * re(self.alpha.norm_sqr()))
            + linalg::outer(&self.psi_y, &self.psi_y).map(|z| z * re(self.beta.norm_sqr()));
        linalg::outer(&sup, &sup) - mix
    }
}

/// `D(R*(|αψx + βψy⟩⟨·|), R*(|α|²|ψx⟩⟨ψx| + |β|²|ψy⟩⟨ψy|))`.
pub fn residual_coherence<T: Real, M: DualMap<T> + ?Sized>(r: &M, pair: &CoherencePair<T>) -> Result<T> {
    check_dim(r.dual_dim_in(), pair.dim())?;
    let out = r.apply_dual(&pair.coherence_operator())?;
    Ok(half_trace_norm(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{KrausMap, Outcome};
    use crate::operators::pauli_z;

    fn diag(v: &[f64]) -> CMatrix<f64> {
        HermitianOperator::from_real_diagonal(v).into_matrix()
    }

    fn sharp(p: f64) -> Instrument<f64> {
        let (a, b) = ((1.0 - p).sqrt(), p.sqrt());
        Instrument::new(
            2,
            vec![
                Outcome {
                    label: "+1".into(),
                    value: 1.0,
                    kraus: vec![diag(&[a, b])],
                },
                Outcome {
                    label: "-1".into(),
                    value: -1.0,
                    kraus: vec![diag(&[b, a])],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn delta_infidelity_examples() {
        let sz = pauli_z::<f64>();
        assert_eq!(delta_infidelity(&sharp(0.0), &sz).unwrap(), 0.0);
        for p in [0.05, 0.13, 0.3, 0.45] {
            assert!((delta_infidelity(&sharp(p), &sz).unwrap() - p).abs() < 1e-15);
        }
    }

    #[test]
    fn enumeration_cap() {
        let vals: Vec<f64> = (0..21).map(|i| i as f64).collect();
        let a = HermitianOperator::from_real_diagonal(&vals);
        let inst = Instrument::new(
            21,
            vec![Outcome {
                label: "x".into(),
                value: 0.0,
                kraus: vec![linalg::identity(21)],
            }],
        )
        .unwrap();
        assert!(matches!(
            delta_infidelity(&inst, &a),
            Err(Error::EnumerationCap { distinct: 21, cap: 20 })
        ));
    }

    #[test]
    fn disturbance_examples() {
        let cfg = DisturbanceConfig::default();
        let id = KrausMap::<f64>::identity(2);
        assert!(delta_disturbance(&id, &cfg).unwrap().value.abs() < 1e-15);
        let vn = sharp(0.0).restriction();
        assert!((delta_disturbance(&vn, &cfg).unwrap().value - 0.5).abs() < 1e-12);
        let est = delta_disturbance(&sharp(0.25).restriction(), &cfg).unwrap();
        assert!((est.value - (0.5 - 0.1875f64.sqrt())).abs() < 1e-9, "{}", est.value);
        assert!(est.converged);
        assert!(!est.estimated());
    }

    #[test]
    fn generic_path_matches_qubit_path() {
        let cfg = DisturbanceConfig {
            restarts: 4,
            ..Default::default()
        };
        let r = sharp(0.2).restriction();
        let q = delta_disturbance_qubit(&r, &cfg).unwrap().value;
        let g = delta_disturbance_generic(&r, &cfg).unwrap().value;
        assert!((q - g).abs() < 1e-4);
    }

    #[test]
    fn coherence_examples() {
        let h = C::new(0.5f64.sqrt(), 0.0);
        let sz = pauli_z::<f64>();
        let pair = CoherencePair::from_eigenvectors(&sz, 0, 1, h, h).unwrap();
        assert!(residual_coherence(&sharp(0.0).restriction(), &pair).unwrap() < 1e-15);
        assert!((residual_coherence(&KrausMap::identity(2), &pair).unwrap() - 0.5).abs() < 1e-15);
        let p = 0.3;
        let v = residual_coherence(&sharp(p).restriction(), &pair).unwrap();
        assert!((v - (p * (1.0 - p)).sqrt()).abs() < 1e-14);
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        let pair = CoherencePair::from_eigenvectors(&sz, 0, 1, one, zero).unwrap();
        assert_eq!(residual_coherence(&KrausMap::identity(2), &pair).unwrap(), 0.0);
        let one2 = HermitianOperator::<f64>::identity(2);
        assert!(matches!(
            CoherencePair::from_eigenvectors(&one2, 0, 1, h, h),
            Err(Error::DegeneratePair(_))
        ));
    }

    #[test]
    fn distance_to_center_examples() {
        assert_eq!(distance_to_center(&pauli_z::<f64>()), 1.0);
        assert_eq!(distance_to_center(&HermitianOperator::<f64>::identity(3)), 0.0);
        let a = HermitianOperator::from_real_diagonal(&[0.9, 0.3, 0.3]);
        assert!((distance_to_center(&a) - 0.3f64).abs() < 1e-15);
    }

    #[test]
    fn sigma2_examples() {
        let vn = sharp(0.0);
        assert_eq!(sigma2_pointer(&vn, &vn.pointer()).unwrap(), 0.0);
        let p = 0.2;
        let s = 1.0 / (1.0 - 2.0 * p);
        let g = PointerObservable::new(vec![s, -s]).unwrap();
        let v = sigma2_pointer(&sharp(p), &g).unwrap();
        // (B,B) = (s² − 1)·1.
        assert!((v - 4.0 * p * (1.0 - p) / (1.0 - 2.0 * p).powi(2)).abs() < 1e-13);
    }
}
