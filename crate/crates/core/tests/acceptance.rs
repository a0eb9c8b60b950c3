//! One PASS/FAIL line per primary acceptance criterion. Exits nonzero if any
//! criterion fails.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::time::{Duration, Instant};

use qchan::bounds::collapse_general_bound;
use qchan::channels::DualMap;
use qchan::figures::{figure_csv, FigureId};
use qchan::linalg;
use qchan::metrics::{delta_disturbance, delta_infidelity, residual_coherence, CoherencePair, DisturbanceConfig};
use qchan::models::{
    contraction_disturbance, fluorescence_delta_bound, fluorescence_disturbance, interaction_contraction,
    BeamsplitterModel, FluorescenceModel, RkConfig, SharpnessFamily,
};
use qchan::operators::{pauli_z, BlochVector};
use qchan::sweep::{run_sweep, SweepConfig, LEMMA_TOL};
use qchan::C;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let pass = out.pass && took <= budget;
    println!(
        "{} {name}: {} [{:.2}s of {}s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn sharpness() -> Outcome {
    let ps = [0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45];
    let (mut d_small, mut d_big, mut d_coh, mut d_damp, mut d_cor) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let h = C::new(FRAC_1_SQRT_2, 0.0);
    for p in ps {
        let fam = SharpnessFamily::new(p).unwrap();
        let inst = fam.instrument();
        let r = inst.restriction();
        let delta = delta_infidelity(&inst, &pauli_z()).unwrap();
        let big = delta_disturbance(&r, &DisturbanceConfig::default()).unwrap().value;
        let pair = CoherencePair::from_eigenvectors(&pauli_z(), 0, 1, h, h).unwrap();
        let coh = residual_coherence(&r, &pair).unwrap();
        let off = r
            .apply_dual(&linalg::outer(&linalg::basis_vector(2, 0), &linalg::basis_vector(2, 1)))
            .unwrap();
        d_small = d_small.max((delta - p).abs());
        d_big = d_big.max((big - fam.disturbance()).abs());
        d_coh = d_coh.max((coh - fam.coherence()).abs());
        d_damp = d_damp.max((off[(0, 1)].norm() - fam.damping()).abs());
        let cor1 = (0.5 - delta).powi(2) + (0.5 - big).powi(2) - 0.25;
        let cor2 = coh - collapse_general_bound(delta).unwrap();
        d_cor = d_cor.max(cor1.abs()).max(cor2.abs());
    }
    Outcome {
        pass: d_small <= 1e-14 && d_big <= 1e-4 && d_coh <= 1e-9 && d_damp <= 1e-12 && d_cor <= 1e-6,
        detail: format!(
            "max |delta-p|={d_small:.1e} (1e-14), |Delta-closed|={d_big:.1e} (1e-4), |coherence-closed|={d_coh:.1e} (1e-9), |damping-closed|={d_damp:.1e} (1e-12), equality residual={d_cor:.1e} (1e-6)"
        ),
    }
}

fn squid() -> Outcome {
    let v: f64 = collapse_general_bound(0.13).unwrap();
    let s = format!("{v:.3}");
    Outcome {
        pass: s == "0.336",
        detail: format!("collapse bound at delta=0.13 is {v:.6} -> {s}"),
    }
}

fn beamsplitter() -> Outcome {
    let m = BeamsplitterModel::with_safe_dim(FRAC_PI_4, 40, 20).unwrap();
    let r = m.report().unwrap();
    let eq = r.sigma_product - r.half_commutator_norm;
    Outcome {
        pass: r.unbiased_x_error <= 1e-6
            && r.form_b_diag_error <= 1e-6
            && r.form_b_tilde_diag_error <= 1e-6
            && (-1e-5..=1e-5).contains(&eq),
        detail: format!(
            "|T(B)-x|={:.1e} (1e-6), (B,B) diag dev={:.1e}, (B~,B~) diag dev={:.1e} (1e-6), SigmaB*SigmaB~ - |[x,p]|/2={eq:.1e} (1e-5)",
            r.unbiased_x_error, r.form_b_diag_error, r.form_b_tilde_diag_error
        ),
    }
}

fn fluorescence() -> Outcome {
    let ts: Vec<f64> = (0..=500).map(|i| 5.0 * i as f64 / 500.0).collect();
    let contraction = ts
        .iter()
        .map(|&t| (contraction_disturbance(&interaction_contraction(t)) - fluorescence_disturbance(t)).abs())
        .fold(0.0f64, f64::max);

    let starts = [
        BlochVector::new(0.0, 0.0, 1.0),
        BlochVector::new(1.0, 0.0, 0.0),
        BlochVector::new(0.0, -0.6, 0.8),
        BlochVector::new(0.3, 0.4, -0.5),
    ];
    let mut rk: f64 = 0.0;
    for omega in [0.0, 0.7, 2.0, 10.0] {
        let m = FluorescenceModel::new(omega).unwrap();
        for v0 in &starts {
            for t in [0.3, 1.0, 2.5, 5.0] {
                let e = m.exact(v0, t).unwrap();
                let i = m.integrate(v0, t, &RkConfig::default()).unwrap();
                rk = rk.max(e.distance(&i));
            }
        }
    }

    let omega = 50.0;
    let m = FluorescenceModel::new(omega).unwrap();
    let mut track: f64 = 0.0;
    for v0 in &starts {
        for &t in &ts {
            track = track.max(m.exact(v0, t).unwrap().distance(&m.rotating(v0, t)));
        }
    }

    let csv = figure_csv(FigureId::Fluorescence, 256).unwrap();
    let grid = FigureId::Fluorescence.grid(256);
    let mut fig: f64 = 0.0;
    let mut abscissa: f64 = 0.0;
    let mut rows = 0;
    for (line, &t) in csv.lines().filter(|l| !l.starts_with('#')).skip(1).zip(&grid) {
        let cols: Vec<&str> = line.split(',').collect();
        let x: f64 = cols[0].parse().unwrap();
        let b: f64 = cols[1].parse().unwrap();
        fig = fig.max((b - fluorescence_delta_bound(t)).abs());
        abscissa = abscissa.max((x - t).abs() / t.max(1.0));
        rows += 1;
    }
    Outcome {
        pass: contraction <= 1e-10 && rk <= 1e-8 && track <= 5.0 / omega && fig <= 1e-12 && abscissa <= 5e-12 && rows == 256,
        detail: format!(
            "closed vs contraction={contraction:.1e} (1e-10), exact vs RK={rk:.1e} (1e-8), rotating tracking at Omega=50={track:.2e} ({:.2}), fig4 csv={fig:.1e} (1e-12) over {rows} rows",
            5.0 / omega
        ),
    }
}

fn sweep() -> Outcome {
    let cfg = SweepConfig {
        master_seed: 7,
        trials: 500,
        ..SweepConfig::default()
    };
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    let deterministic = a.to_json() == b.to_json();
    let dg = &a.diagnostics;
    let all_checked = a.summary.values().all(|s| s.checked == 500);
    Outcome {
        pass: deterministic
            && all_checked
            && dg.violations == 0
            && dg.enumeration_cap_errors == 0
            && dg.lemma1_min_eigenvalue >= -LEMMA_TOL
            && dg.perfect_chain_max_residual <= LEMMA_TOL,
        detail: format!(
            "500 trials x 5 bounds, violations={}, lemma1 min eig={:.1e} (-1e-8), perfect chain max={:.1e} (1e-8), deterministic={deterministic}",
            dg.violations, dg.lemma1_min_eigenvalue, dg.perfect_chain_max_residual
        ),
    }
}

fn oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let (inst, a) = common::oracle_instance(2024, i);
        let fast = delta_infidelity(&inst, &a).unwrap();
        worst = worst.max((fast - common::delta_oracle(&inst, &a)).abs());
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("200 instances, max |enumeration - brute force|={worst:.1e} (1e-12)"),
    }
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        criterion("sharpness family closed forms", s(30), sharpness),
        criterion("SQUID collapse number", s(1), squid),
        criterion("beamsplitter joint-measurement optimality", s(60), beamsplitter),
        criterion("resonance fluorescence", s(10), fluorescence),
        criterion("falsification sweep", s(300), sweep),
        criterion("delta oracle equivalence", s(30), oracle),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
