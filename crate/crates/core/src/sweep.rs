//! Falsification sweep: seeded random instruments run through all five
//! inequality checks, plus the Cauchy–Schwarz and perfect-transfer
//! diagnostics.
//!
//! Trial `t` draws everything from `ChaCha20(split_seed(master, t))`, so the
//! manifest does not depend on how rayon schedules trials.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    collapse_general_check, collapse_unbiased_check, heisenberg_general_check, heisenberg_unbiased_check,
    joint_measurement_check, nondestructive_defect, BoundId, BoundReport,
};
use crate::channels::{CpMap, Element, Instrument, Outcome, PointerObservable};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::metrics::{
    delta_disturbance, delta_infidelity, distance_to_center, residual_coherence, sigma2, sigma2_pointer, CoherencePair,
    DisturbanceConfig,
};
use crate::operators::{hermitian_norm, spectral_norm, HermitianOperator};
use crate::randgen::{
    gaussian_matrix, random_instrument_with, random_nondestructive_instrument, random_perfect_instrument,
    rng_from_seed, split_seed, GenConfig,
};
use crate::scalar::C;

/// Gaps below this skip the coherence check for lack of a well-separated pair.
const MIN_GAP: f64 = 1e-6;
/// Tolerance on the Cauchy–Schwarz matrix and the perfect-transfer chain.
pub const LEMMA_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub master_seed: u64,
    pub trials: usize,
    /// Hilbert-space dimensions, cycled over trials.
    pub dims: Vec<usize>,
    /// Largest outcome count; each trial draws from `2..=max_outcomes`.
    pub max_outcomes: usize,
    /// Largest Kraus count per outcome; each trial draws from `1..=max_kraus`.
    pub max_kraus: usize,
    #[serde(skip)]
    pub disturbance: DisturbanceConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            trials: 500,
            dims: vec![2],
            max_outcomes: 4,
            max_kraus: 2,
            disturbance: DisturbanceConfig::default(),
        }
    }
}

/// One bound report tagged with its trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub trial: usize,
    #[serde(flatten)]
    pub report: BoundReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialDiagnostics {
    pub trial: usize,
    pub seed: u64,
    pub dim: usize,
    pub outcomes: usize,
    pub kraus_per_outcome: usize,
    /// Smallest eigenvalue of `‖(Y,Y)‖(X,X) − (X,Y)(Y,X)`.
    pub lemma1_min_eigenvalue: f64,
    /// `‖(B,B)‖` on the perfect companion.
    pub perfect_form_norm: f64,
    /// Largest of `‖T(B²) − T(B)²‖`, `‖T(B³) − T(B)³‖`, `‖[T(X), T(B)]‖`.
    pub perfect_chain_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BoundSummary {
    pub checked: usize,
    pub pass: usize,
    pub fail: usize,
    pub out_of_hypothesis: usize,
    pub estimated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepDiagnostics {
    pub violations: usize,
    pub enumeration_cap_errors: usize,
    pub lemma1_min_eigenvalue: f64,
    pub lemma1_failures: usize,
    pub perfect_chain_max_residual: f64,
    pub perfect_chain_failures: usize,
    pub trials: Vec<TrialDiagnostics>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepManifest {
    pub master_seed: u64,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub results: Vec<SweepRecord>,
    pub summary: BTreeMap<String, BoundSummary>,
    pub diagnostics: SweepDiagnostics,
}

impl SweepManifest {
    /// Bound violations plus failed diagnostics.
    pub fn failures(&self) -> usize {
        self.diagnostics.violations + self.diagnostics.lemma1_failures + self.diagnostics.perfect_chain_failures
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// One row per bound report.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,id,lhs,rhs,slack,pass,estimated,out_of_hypothesis\n");
        for r in &self.results {
            let b = &r.report;
            let _ = writeln!(
                s,
                "{},{},{:.11e},{:.11e},{:.11e},{},{},{}",
                r.trial, b.id, b.lhs, b.rhs, b.slack, b.pass, b.estimated, b.out_of_hypothesis
            );
        }
        s
    }
}

struct TrialOutput {
    reports: Vec<BoundReport>,
    diag: TrialDiagnostics,
    cap_hit: bool,
}

/// Runs the sweep on the current rayon pool. Enumeration-cap failures are
/// counted per trial; any other error aborts.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepManifest> {
    if cfg.trials == 0 {
        return Err(Error::Empty { what: "trials" });
    }
    if cfg.dims.is_empty() || cfg.dims.iter().any(|&d| d < 2) {
        return Err(Error::OutOfRange("sweep dimensions must be at least 2".into()));
    }
    if cfg.max_outcomes < 2 || cfg.max_kraus == 0 {
        return Err(Error::OutOfRange(
            "sweep needs at least 2 outcomes and 1 Kraus operator".into(),
        ));
    }
    let outputs: Vec<TrialOutput> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;

    let mut summary: BTreeMap<String, BoundSummary> = BoundId::ALL
        .iter()
        .map(|id| (id.to_string(), BoundSummary::default()))
        .collect();
    let mut results = Vec::new();
    let mut diag = SweepDiagnostics {
        violations: 0,
        enumeration_cap_errors: 0,
        lemma1_min_eigenvalue: f64::INFINITY,
        lemma1_failures: 0,
        perfect_chain_max_residual: 0.0,
        perfect_chain_failures: 0,
        trials: Vec::with_capacity(cfg.trials),
    };
    for out in outputs {
        let t = out.diag.trial;
        if out.cap_hit {
            diag.enumeration_cap_errors += 1;
        } else {
            diag.lemma1_min_eigenvalue = diag.lemma1_min_eigenvalue.min(out.diag.lemma1_min_eigenvalue);
            if out.diag.lemma1_min_eigenvalue < -LEMMA_TOL {
                diag.lemma1_failures += 1;
            }
            diag.perfect_chain_max_residual = diag.perfect_chain_max_residual.max(out.diag.perfect_chain_residual);
            if out.diag.perfect_chain_residual > LEMMA_TOL {
                diag.perfect_chain_failures += 1;
            }
        }
        for r in out.reports {
            let s = summary.get_mut(r.id.as_str()).expect("known id");
            s.checked += 1;
            if r.pass {
                s.pass += 1;
            } else {
                s.fail += 1;
                diag.violations += 1;
            }
            s.out_of_hypothesis += usize::from(r.out_of_hypothesis);
            s.estimated += usize::from(r.estimated);
            results.push(SweepRecord { trial: t, report: r });
        }
        diag.trials.push(out.diag);
    }
    Ok(SweepManifest {
        master_seed: cfg.master_seed,
        trials: cfg.trials,
        dims: cfg.dims.clone(),
        results,
        summary,
        diagnostics: diag,
    })
}

fn gaussian_pointer<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PointerObservable<f64> {
    let v = gaussian_matrix::<f64, R>(rng, n, 1);
    PointerObservable::new(v.iter().map(|z| z.re * std::f64::consts::SQRT_2).collect()).expect("finite values")
}

fn random_element<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Element<f64> {
    Element::from_blocks((0..n).map(|_| gaussian_matrix::<f64, R>(rng, d, d)).collect()).expect("consistent blocks")
}

fn run_trial(cfg: &SweepConfig, t: usize) -> Result<TrialOutput> {
    let seed = split_seed(cfg.master_seed, t as u64);
    let mut rng = rng_from_seed(seed);
    let d = cfg.dims[t % cfg.dims.len()];
    let n = rng.random_range(2..=cfg.max_outcomes);
    let k = rng.random_range(1..=cfg.max_kraus);
    let gen = GenConfig {
        seed,
        dim: d,
        n_outcomes: n,
        kraus_per_outcome: k,
    };
    let inst = random_instrument_with::<f64, _>(&mut rng, &gen)?;
    let mut diag = TrialDiagnostics {
        trial: t,
        seed,
        dim: d,
        outcomes: n,
        kraus_per_outcome: k,
        lemma1_min_eigenvalue: 0.0,
        perfect_form_norm: 0.0,
        perfect_chain_residual: 0.0,
        error: None,
    };
    match checks(cfg, &inst, &mut rng, seed, &mut diag) {
        Ok(reports) => Ok(TrialOutput {
            reports,
            diag,
            cap_hit: false,
        }),
        Err(e @ Error::EnumerationCap { .. }) => {
            diag.error = Some(e.to_string());
            Ok(TrialOutput {
                reports: Vec::new(),
                diag,
                cap_hit: true,
            })
        }
        Err(e) => Err(e),
    }
}

fn checks<R: Rng + ?Sized>(
    cfg: &SweepConfig,
    inst: &Instrument<f64>,
    rng: &mut R,
    seed: u64,
    diag: &mut TrialDiagnostics,
) -> Result<Vec<BoundReport>> {
    let d = inst.dim();
    let n = inst.n_outcomes();
    let mut reports = Vec::with_capacity(5);

    // Commuting pointers 1 ⊗ g and 1 ⊗ g̃.
    let g = inst.pointer();
    let gt = gaussian_pointer(rng, n);
    let a = HermitianOperator::symmetrized(inst.apply(&g.element(d))?);
    let at = HermitianOperator::symmetrized(inst.apply(&gt.element(d))?);
    let sigma_b = sigma2_pointer(inst, &g)?.max(0.0).sqrt();
    let sigma_bt = sigma2_pointer(inst, &gt)?.max(0.0).sqrt();
    reports.push(joint_measurement_check(sigma_b, sigma_bt, &a, &at)?);

    let r = inst.restriction();
    let dcfg = DisturbanceConfig {
        seed: split_seed(seed, 1),
        ..cfg.disturbance
    };
    let big_delta = delta_disturbance(&r, &dcfg)?;
    reports.push(heisenberg_unbiased_check(sigma_b, &big_delta, distance_to_center(&a))?);

    // Lüders companion: same POVM, Kraus operators √μ(ω). T(1 ⊗ g) and
    // hence δ depend on the POVM alone.
    let luders = luders_companion(inst)?;
    let lr = luders.restriction();
    let luders_delta = delta_disturbance(
        &lr,
        &DisturbanceConfig {
            seed: split_seed(seed, 2),
            ..cfg.disturbance
        },
    )?;
    let snapped = snapped_observable(inst, &a);
    let delta_inf = delta_infidelity(inst, &snapped)?;
    let mut hp = heisenberg_general_check(delta_inf, luders_delta.value, luders_delta.eps_opt)?;
    hp.estimated = luders_delta.estimated();
    hp.note = Some(
        hp.note
            .map_or("Lüders companion".into(), |n| format!("Lüders companion; {n}")),
    );
    reports.push(hp);

    // Eigenpair of T(1 ⊗ g) in an equal-weight superposition.
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (alpha, beta) = (C::new(h, 0.0), C::from_polar(h, phase));
    let spec = a.spectrum();
    let gap = (spec.values[d - 1] - spec.values[0]).abs();
    if gap > MIN_GAP {
        let pair = CoherencePair::from_eigenvectors(&a, 0, d - 1, alpha, beta)?;
        let coh = residual_coherence(&r, &pair)?;
        reports.push(collapse_unbiased_check(coh, sigma_b, pair.gap())?);
    } else {
        let mut skipped = collapse_unbiased_check(0.0, sigma_b, 1.0)?;
        skipped.out_of_hypothesis = true;
        skipped.note = Some("eigenvalue gap below 1e-6".into());
        reports.push(skipped);
    }

    // Nondestructive companion.
    let (nd, a_nd) = random_nondestructive_instrument::<f64, R>(rng, d, n)?;
    let nd_r = nd.restriction();
    let pair = CoherencePair::from_eigenvectors(&a_nd, 0, d - 1, alpha, beta)?;
    let coh = residual_coherence(&nd_r, &pair)?;
    let delta_nd = delta_infidelity(&nd, &a_nd)?;
    reports.push(collapse_general_check(
        coh,
        delta_nd,
        nondestructive_defect(&nd_r, &pair)?,
    )?);

    diag.lemma1_min_eigenvalue = lemma1_min_eigenvalue(inst, rng)?;
    let (form, chain) = perfect_chain(rng, d)?;
    diag.perfect_form_norm = form;
    diag.perfect_chain_residual = chain;
    Ok(reports)
}

/// Instrument with the POVM of `inst` and Kraus operators `√μ(ω)`.
pub fn luders_companion(inst: &Instrument<f64>) -> Result<Instrument<f64>> {
    let outcomes = inst
        .outcomes()
        .iter()
        .zip(inst.povm())
        .map(|(o, mu)| Outcome {
            label: o.label.clone(),
            value: o.value,
            kraus: vec![linalg::hermitian_function(mu.matrix(), |x| x.max(0.0).sqrt())],
        })
        .collect();
    Instrument::new(inst.dim(), outcomes)
}

/// Observable diagonal in the eigenbasis of `a` whose eigenvalue on each
/// eigenvector is the pointer value of the most likely outcome there. If
/// that leaves a single value, the extreme pointer values are used instead.
pub fn snapped_observable(inst: &Instrument<f64>, a: &HermitianOperator<f64>) -> HermitianOperator<f64> {
    let spec = a.spectrum();
    let povm = inst.povm();
    let vals = inst.pointer().values().to_vec();
    let d = a.dim();
    let mut eig: Vec<f64> = (0..d)
        .map(|i| {
            let v = spec.vector(i);
            let best = (0..povm.len())
                .max_by(|&x, &y| povm[x].expectation(&v).total_cmp(&povm[y].expectation(&v)))
                .expect("at least one outcome");
            vals[best]
        })
        .collect();
    if eig.iter().all(|&v| (v - eig[0]).abs() < 1e-9) {
        eig[0] = vals.iter().copied().fold(f64::INFINITY, f64::min);
        eig[d - 1] = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let diag = HermitianOperator::from_real_diagonal(&eig);
    HermitianOperator::symmetrized(&spec.vectors * diag.matrix() * spec.vectors.adjoint())
}

/// Smallest eigenvalue of `‖(Y,Y)‖(X,X) − (X,Y)(Y,X)` for random `X`, `Y`.
pub fn lemma1_min_eigenvalue<R: Rng + ?Sized>(inst: &Instrument<f64>, rng: &mut R) -> Result<f64> {
    let (d, n) = (inst.dim(), inst.n_outcomes());
    let x = random_element(rng, d, n);
    let y = random_element(rng, d, n);
    let xx = inst.sesquilinear_form(&x, &x)?;
    let yy = inst.sesquilinear_form(&y, &y)?;
    let xy = inst.sesquilinear_form(&x, &y)?;
    let yx = inst.sesquilinear_form(&y, &x)?;
    let yy_norm = hermitian_norm(&HermitianOperator::symmetrized(yy).into_matrix());
    let m: CMatrix<f64> = xx.map(|z| z * yy_norm) - xy * yx;
    Ok(HermitianOperator::symmetrized(m).min_eigenvalue())
}

/// `(‖(B,B)‖, residual)` for a random perfect instrument and pointer `B`,
/// where the residual is the largest of `‖T(B²) − T(B)²‖`,
/// `‖T(B³) − T(B)³‖` and `‖[T(X), T(B)]‖` for a random `X` commuting with `B`.
pub fn perfect_chain<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<(f64, f64)> {
    let inst = random_perfect_instrument::<f64, R>(rng, d)?;
    let g = inst.pointer();
    let n = inst.n_outcomes();
    let tb = inst.apply(&g.element(d))?;
    let tb2 = inst.apply(&g.map(|v| v * v).element(d))?;
    let tb3 = inst.apply(&g.map(|v| v * v * v).element(d))?;
    let form = sigma2(&inst, &g.element(d))?;
    let x = random_element(rng, d, n);
    let tx = inst.apply(&x)?;
    let r2 = spectral_norm(&(tb2 - &tb * &tb));
    let r3 = spectral_norm(&(tb3 - &tb * &tb * &tb));
    let rc = spectral_norm(&linalg::commutator(&tx, &tb));
    Ok((form, r2.max(r3).max(rc)))
}
