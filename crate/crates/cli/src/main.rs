use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use qchan::bounds::{collapse_general_bound, collapse_unbiased_bound, heisenberg_unbiased_bound};
use qchan::channels::{choi_check, parse_fixture, Fixture};
use qchan::figures::{figure_csv, FigureId, DEFAULT_POINTS};
use qchan::metrics::{
    delta_disturbance, delta_infidelity, residual_coherence, sigma2_pointer, CoherencePair, DisturbanceConfig,
};
use qchan::models::{
    fluorescence_delta_bound, fluorescence_disturbance, von_neumann_instrument, BeamsplitterModel, FluorescenceModel,
    SharpnessFamily,
};
use qchan::operators::{pauli_z, BlochVector};
use qchan::sweep::{run_sweep, SweepConfig};
use qchan::C;

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "qchan",
    version,
    about = "Information-disturbance bounds for quantum instruments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    VonNeumann,
    Sharpness,
    Beamsplitter,
    Fluorescence,
}

#[derive(Subcommand)]
enum Command {
    /// Run the falsification sweep over seeded random instruments.
    Verify {
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Largest number of outcomes per instrument.
        #[arg(long, default_value_t = 4)]
        outcomes: usize,
        /// Largest number of Kraus operators per outcome.
        #[arg(long, default_value_t = 2)]
        kraus: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restarts of the disturbance search above dimension two.
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Instrument or superoperator JSON validated before the sweep.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Write the CSV curve of one figure.
    Figure {
        /// Figure number, 2 to 6.
        id: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
    },
    /// Evaluate a worked model.
    Model {
        #[arg(value_enum)]
        name: ModelName,
        #[arg(long, default_value_t = 0.13)]
        p: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        theta: f64,
        #[arg(long, default_value_t = 40)]
        fock_dim: usize,
        #[arg(long)]
        safe_dim: Option<usize>,
        #[arg(long, default_value_t = 50.0)]
        omega: f64,
        #[arg(long, default_value_t = 5.0)]
        tmax: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the metric table as JSON.
        #[arg(long)]
        json: bool,
    },
}

/// Errors sorted by exit code.
enum Failure {
    Usage(String),
    Invalid(anyhow::Error),
    Io(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

fn invalid(e: qchan::Error) -> Failure {
    Failure::Invalid(e.into())
}

/// 12 significant digits.
fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // Exponent after rounding, so 0.0999...9 reports as 0.1 with the right width.
    let sci = format!("{x:.11e}");
    let mag: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..12).contains(&mag) {
        format!("{:.*}", (11 - mag).max(0) as usize, x)
    } else {
        sci
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table(rows: &BTreeMap<&'static str, f64>, json: bool) -> String {
    if json {
        return serde_json::to_string_pretty(rows).expect("finite table") + "\n";
    }
    let mut s = String::new();
    for (k, v) in rows {
        let _ = writeln!(s, "{k}={}", num(*v));
    }
    s
}

fn verify(cfg: SweepConfig, report: Option<PathBuf>, format: Format, fixture: Option<PathBuf>) -> Result<u8, Failure> {
    if cfg.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    if let Some(path) = fixture {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let fx: Fixture<f64> = parse_fixture(&text).map_err(invalid)?;
        let rep = choi_check(&fx).map_err(invalid)?;
        let kind = match fx {
            Fixture::Instrument(_) => "instrument",
            Fixture::Superoperator(_) => "superoperator",
        };
        println!(
            "fixture {}: {kind}, choi min eigenvalue {}",
            path.display(),
            num(rep.min_eigenvalue)
        );
        if !rep.pass {
            return Err(Failure::Invalid(anyhow::anyhow!(
                "choi_check failed: fixture is not completely positive (min eigenvalue {})",
                num(rep.min_eigenvalue)
            )));
        }
    }
    let m = run_sweep(&cfg).map_err(invalid)?;
    for (id, s) in &m.summary {
        println!(
            "{id}: {}/{} pass ({} out of hypothesis, {} estimated)",
            s.pass, s.checked, s.out_of_hypothesis, s.estimated
        );
    }
    let d = &m.diagnostics;
    println!(
        "lemma1: min eigenvalue {} ({} failures)",
        num(d.lemma1_min_eigenvalue),
        d.lemma1_failures
    );
    println!(
        "perfect chain: max residual {} ({} failures)",
        num(d.perfect_chain_max_residual),
        d.perfect_chain_failures
    );
    if d.enumeration_cap_errors > 0 {
        println!("enumeration cap exceeded on {} trials", d.enumeration_cap_errors);
    }
    if let Some(path) = report {
        let text = match format {
            Format::Json => m.to_json(),
            Format::Csv => m.to_csv(),
        };
        emit(Some(&path), &text)?;
    }
    println!("violations: {}", m.failures());
    Ok(if m.failures() == 0 { 0 } else { EXIT_VIOLATIONS })
}

fn figure(id: u32, out: Option<PathBuf>, points: usize) -> Result<u8, Failure> {
    let fig = FigureId::from_number(id).map_err(|e| Failure::Usage(e.to_string()))?;
    let csv = figure_csv(fig, points).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(out.as_deref(), &csv)?;
    Ok(0)
}

fn sharpness_rows(p: f64) -> qchan::Result<BTreeMap<&'static str, f64>> {
    let fam = SharpnessFamily::new(p)?;
    let inst = fam.instrument();
    let r = inst.restriction();
    let z = pauli_z();
    let delta = delta_infidelity(&inst, &z)?;
    let big = delta_disturbance(&r, &DisturbanceConfig::default())?.value;
    let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let coh = residual_coherence(&r, &CoherencePair::from_eigenvectors(&z, 0, 1, h, h)?)?;
    let sigma2 = sigma2_pointer(&inst, &fam.unbiased_pointer())?;
    let bound = collapse_general_bound(delta)?;
    Ok(BTreeMap::from([
        ("p", p),
        ("delta", delta),
        ("disturbance", big),
        ("sigma2", sigma2),
        ("coherence", coh),
        ("collapse_bound", bound),
        ("collapse_unbiased_bound", collapse_unbiased_bound(sigma2.sqrt(), 2.0)?),
        (
            "hp_unbiased_residual",
            sigma2.sqrt() - heisenberg_unbiased_bound(big, 1.0),
        ),
        (
            "hp_general_residual",
            (0.5 - delta).powi(2) + (0.5 - big).powi(2) - 0.25,
        ),
        ("collapse_residual", coh - bound),
    ]))
}

#[allow(clippy::too_many_arguments)]
fn model(
    name: ModelName,
    p: f64,
    theta: f64,
    fock_dim: usize,
    safe_dim: Option<usize>,
    omega: f64,
    tmax: f64,
    steps: usize,
    out: Option<PathBuf>,
    json: bool,
) -> Result<u8, Failure> {
    let text = match name {
        ModelName::VonNeumann => {
            let inst = von_neumann_instrument::<f64>();
            let rows = BTreeMap::from([
                ("delta", delta_infidelity(&inst, &pauli_z()).map_err(invalid)?),
                (
                    "disturbance",
                    delta_disturbance(&inst.restriction(), &DisturbanceConfig::default())
                        .map_err(invalid)?
                        .value,
                ),
                ("sigma2", sigma2_pointer(&inst, &inst.pointer()).map_err(invalid)?),
            ]);
            table(&rows, json)
        }
        ModelName::Sharpness => table(&sharpness_rows(p).map_err(invalid)?, json),
        ModelName::Beamsplitter => {
            let m = match safe_dim {
                Some(k) => BeamsplitterModel::with_safe_dim(theta, fock_dim, k),
                None => BeamsplitterModel::new(theta, fock_dim),
            }
            .map_err(invalid)?;
            let r = m.report().map_err(invalid)?;
            let rows = BTreeMap::from([
                ("theta", r.theta),
                ("fock_dim", r.fock_dim as f64),
                ("safe_dim", r.safe_dim as f64),
                ("unbiased_x_error", r.unbiased_x_error),
                ("unbiased_p_error", r.unbiased_p_error),
                ("form_b_diag_error", r.form_b_diag_error),
                ("form_b_tilde_diag_error", r.form_b_tilde_diag_error),
                ("sigma_b", r.sigma_b),
                ("sigma_b_tilde", r.sigma_b_tilde),
                ("sigma_product", r.sigma_product),
                ("half_commutator_norm", r.half_commutator_norm),
                ("jm_residual", r.sigma_product - r.half_commutator_norm),
                ("unitarity_defect", r.unitarity_defect),
            ]);
            table(&rows, json)
        }
        ModelName::Fluorescence => {
            let m = FluorescenceModel::new(omega).map_err(invalid)?;
            if !(tmax >= 0.0 && tmax.is_finite()) || steps == 0 {
                return Err(Failure::Invalid(anyhow::anyhow!(
                    "--tmax must be finite and non-negative, --steps positive"
                )));
            }
            let up = BlochVector::new(0.0, 0.0, 1.0);
            let mut s = String::from("t,disturbance,delta_bound,z_exact,z_rotating\n");
            for i in 0..=steps {
                let t = tmax * i as f64 / steps as f64;
                let e = m.exact(&up, t).map_err(invalid)?;
                let rot = m.rotating(&up, t);
                let _ = writeln!(
                    s,
                    "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                    t,
                    fluorescence_disturbance(t),
                    fluorescence_delta_bound(t),
                    e.z,
                    rot.z
                );
            }
            s
        }
    };
    emit(out.as_deref(), &text)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Verify {
            trials,
            dim,
            outcomes,
            kraus,
            seed,
            restarts,
            report,
            format,
            fixture,
        } => {
            if dim < 2 || outcomes < 2 || kraus == 0 || restarts == 0 {
                return Err(Failure::Usage(
                    "need --dim >= 2, --outcomes >= 2, --kraus >= 1, --restarts >= 1".into(),
                ));
            }
            let cfg = SweepConfig {
                master_seed: seed,
                trials,
                dims: vec![dim],
                max_outcomes: outcomes,
                max_kraus: kraus,
                disturbance: DisturbanceConfig {
                    restarts,
                    ..DisturbanceConfig::default()
                },
            };
            verify(cfg, report, format, fixture)
        }
        Command::Figure { id, out, points } => figure(id, out, points),
        Command::Model {
            name,
            p,
            theta,
            fock_dim,
            safe_dim,
            omega,
            tmax,
            steps,
            out,
            json,
        } => model(name, p, theta, fock_dim, safe_dim, omega, tmax, steps, out, json),
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QCHAN_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("QCHAN_THREADS={v:?} is not a thread count"))?;
        if n == 0 {
            bail!("QCHAN_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
