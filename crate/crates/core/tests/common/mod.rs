#![allow(dead_code)]

use qchan::channels::{Instrument, Outcome};
use qchan::linalg::{self, CMatrix};
use qchan::operators::HermitianOperator;
use qchan::randgen::{gaussian_matrix, random_instrument_with, random_unitary, rng_from_seed, split_seed, GenConfig};
use rand::Rng;

/// δ by brute force: every subset of the eigenvalue and pointer-value
/// classes (values within `1e-9` of a representative share a class), norm by
/// full eigendecomposition.
pub fn delta_oracle(inst: &Instrument<f64>, a: &HermitianOperator<f64>) -> f64 {
    let spec = a.spectrum();
    let g = inst.pointer();
    let povm = inst.povm();
    let d = a.dim();
    let all: Vec<f64> = spec.values.iter().copied().chain(g.values().iter().copied()).collect();
    let scale = all.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut reps: Vec<f64> = Vec::new();
    for &v in &all {
        if !reps.iter().any(|&r| (r - v).abs() <= 1e-9 * scale) {
            reps.push(v);
        }
    }
    let class = |v: f64| reps.iter().position(|&r| (r - v).abs() <= 1e-9 * scale).unwrap();
    let mut best = 0.0f64;
    for mask in 0u64..(1u64 << reps.len()) {
        let inside = |v: f64| mask >> class(v) & 1 == 1;
        let mut m: CMatrix<f64> = linalg::zeros(d, d);
        for (k, &lam) in spec.values.iter().enumerate() {
            if inside(lam) {
                let v = spec.vector(k);
                m += linalg::outer(&v, &v);
            }
        }
        for (w, &gv) in g.values().iter().enumerate() {
            if inside(gv) {
                m -= povm[w].matrix();
            }
        }
        let ev = HermitianOperator::symmetrized(m).eigenvalues();
        best = ev.iter().fold(best, |b, x| b.max(x.abs()));
    }
    best
}

/// Instance `i` of the oracle corpus. Odd instances draw the eigenvalues of
/// `A` from the pointer values so classes merge.
pub fn oracle_instance(master: u64, i: u64) -> (Instrument<f64>, HermitianOperator<f64>) {
    let mut rng = rng_from_seed(split_seed(master, i));
    let dim = rng.random_range(2..=3);
    let cfg = GenConfig {
        seed: 0,
        dim,
        n_outcomes: rng.random_range(2..=4),
        kraus_per_outcome: rng.random_range(1..=2),
    };
    let inst = random_instrument_with::<f64, _>(&mut rng, &cfg).unwrap();
    let eig: Vec<f64> = if i % 2 == 1 {
        let vals = inst.pointer().values().to_vec();
        (0..dim).map(|_| vals[rng.random_range(0..vals.len())]).collect()
    } else {
        gaussian_matrix::<f64, _>(&mut rng, dim, 1)
            .iter()
            .map(|z| z.re)
            .collect()
    };
    let w = random_unitary::<f64, _>(&mut rng, dim);
    let a = HermitianOperator::symmetrized(&w * HermitianOperator::from_real_diagonal(&eig).matrix() * w.adjoint());
    (inst, a)
}

/// Two-outcome instrument with a single Kraus operator per outcome.
pub fn instrument_from(kraus: [CMatrix<f64>; 2], values: [f64; 2]) -> Instrument<f64> {
    let d = kraus[0].nrows();
    let outcomes = kraus
        .into_iter()
        .zip(values)
        .enumerate()
        .map(|(i, (k, v))| Outcome {
            label: format!("w{i}"),
            value: v,
            kraus: vec![k],
        })
        .collect();
    Instrument::new(d, outcomes).unwrap()
}
