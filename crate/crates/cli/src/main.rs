use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fullnn::inflation::{certificate_to_witness, certify_full_nn_with_lps, CertificateFile, OrientationStatus, Verdict};
use fullnn::scan::{run_scan, ScanKind, ScanSpec};
use fullnn::scenario::Behavior;
use fullnn::witness::{self, WitnessExpr};
use fullnn::{quantum, strategies, Error};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "fullnn", version, about = "Full network nonlocality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a behavior and write it as JSON.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Output file.
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Evaluate a witness on a behavior.
    Witness {
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long, value_enum)]
        which: Which,
        /// Witness expression file, for `--which expr`.
        #[arg(long)]
        expr: Option<PathBuf>,
        /// Write a JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Margin a value must exceed its bound by to count as a violation.
        #[arg(long, env = "FULLNN_TOL", default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Run both inflation orientations on a bilocal behavior.
    Certify {
        #[arg(long)]
        behavior: PathBuf,
        /// Smallest accepted certificate value y·b(p).
        #[arg(long, env = "FULLNN_TOL", default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Write a JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write certificates to `<prefix>-<orientation>.json`.
        #[arg(long)]
        cert_prefix: Option<PathBuf>,
    },
    /// Scan over the measurement angle and write `theta,value` CSV.
    Scan {
        #[arg(long, value_enum)]
        what: What,
        #[arg(long, default_value_t = 0.0)]
        theta_min: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        theta_max: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        /// Bisection width; defaults to 1e-6 (sim-visibility) or 1e-12 (witness-threshold).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Turn a certificate file into a witness expression.
    Cert2witness {
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Joint-measurement correlations.
    Ejm {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        visibility: f64,
    },
    /// PR-box hybrid strategy in the bilocal network.
    PrBilocal,
    /// PR-box hybrid strategy in the n-star network.
    PrStar {
        #[arg(long)]
        n: usize,
    },
    /// Explicit model of the θ = 0 correlations.
    SimTheta0,
    /// Explicit model of the θ = π/2 correlations.
    SimThetaPi2,
    /// Partial Bell-state-measurement protocol with ternary Bob.
    BsmProtocol {
        #[arg(long)]
        visibility: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    S2,
    S3,
    S4,
    Ejm,
    Bsm,
    Expr,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    SimVisibility,
    WitnessThreshold,
}

enum Failure {
    Input(String),
    Ambiguous(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Ambiguous(_) | Error::NonMonotone(_) => Failure::Ambiguous(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_behavior(path: &Path) -> std::result::Result<Behavior, Failure> {
    Ok(Behavior::from_json(&read(path)?)?)
}

fn cmd_gen(kind: GenKind, out: Option<PathBuf>) -> CmdResult {
    let b = match kind {
        GenKind::Ejm { theta, visibility } => quantum::ejm_correlations(theta, visibility)?,
        GenKind::PrBilocal => strategies::bilocal_pr_strategy(),
        GenKind::PrStar { n } => strategies::star_single_pr_strategy(n)?,
        GenKind::SimTheta0 => strategies::simulate_theta0(),
        GenKind::SimThetaPi2 => strategies::simulate_theta_pi2(),
        GenKind::BsmProtocol { visibility } => quantum::bsm_protocol_behavior(visibility)?,
    };
    match out {
        Some(path) => {
            write(&path, &b.to_json())?;
            println!("wrote {}", path.display());
            println!("checksum {}", b.checksum());
        }
        None => {
            print!("{}", b.to_json());
            eprintln!("checksum {}", b.checksum());
        }
    }
    Ok(())
}

/// One evaluated quantity: value, bound, and whether the bound is exceeded.
fn entry(name: &str, value: f64, bound: f64, tol: f64) -> Value {
    json!({ "name": name, "value": value, "bound": bound, "margin": value - bound, "violated": value > bound + tol })
}

fn cmd_witness(behavior: &Path, which: Which, expr: Option<PathBuf>, report: Option<PathBuf>, tol: f64) -> CmdResult {
    let b = load_behavior(behavior)?;
    let (entries, verdict) = match which {
        Which::S2 => {
            let e = entry("S2", witness::s2(&b)?, 1.0, tol);
            let v = if e["violated"] == true { "bilocal inequality violated" } else { "no violation" };
            (vec![e], v)
        }
        Which::S3 | Which::S4 => {
            let (n, bound) = match which {
                Which::S3 => (3, witness::full_nn_bound_s3()),
                _ => (4, witness::full_nn_bound_s4()),
            };
            if witness::star_size(b.scenario())? != n {
                return Err(Failure::Input(format!("behavior is not a {n}-star")));
            }
            let e = entry(&format!("S{n}"), witness::sn(&b)?, bound, tol);
            let v = if e["violated"] == true { "full NN witnessed" } else { "not above the full-NN bound" };
            (vec![e], v)
        }
        Which::Ejm => {
            let e1 = entry("ejm-1", witness::ejm_witness_1().eval(&b)?, 1.0, tol);
            let e2 = entry("ejm-2", witness::ejm_witness_2().eval(&b)?, 1.0, tol);
            let v = if e1["violated"] == true && e2["violated"] == true { "full NN witnessed" } else { "full NN not witnessed" };
            (vec![e1, e2], v)
        }
        Which::Bsm => {
            let (rc, rn) = witness::bsm_witnesses(&b)?;
            let e1 = entry("R_C-NS", rc, 3.0, tol);
            let e2 = entry("R_NS-C", rn, 3.0, tol);
            let v = if e1["violated"] == true && e2["violated"] == true { "full NN witnessed" } else { "full NN not witnessed" };
            (vec![e1, e2], v)
        }
        Which::Expr => {
            let path = expr.ok_or_else(|| Failure::Input("--which expr needs --expr FILE".into()))?;
            let w = WitnessExpr::from_json(&read(&path)?)?;
            let value = w.eval(&b)?;
            let violated = match w.direction {
                witness::Direction::Le => value > w.bound + tol,
                witness::Direction::Ge => value < w.bound - tol,
            };
            let e = json!({ "name": "expr", "value": value, "bound": w.bound, "margin": value - w.bound, "violated": violated });
            (vec![e], if violated { "violated" } else { "no violation" })
        }
    };
    for e in &entries {
        println!(
            "{}: value {} bound {} margin {:e}{}",
            e["name"].as_str().unwrap_or(""),
            e["value"],
            e["bound"],
            e["margin"].as_f64().unwrap_or(f64::NAN),
            if e["violated"] == true { " (violated)" } else { "" }
        );
    }
    println!("verdict: {verdict}");
    if let Some(path) = report {
        let r = json!({
            "version": VERSION,
            "behavior": behavior.display().to_string(),
            "behavior_checksum": b.checksum(),
            "tol": tol,
            "results": entries,
            "verdict": verdict,
        });
        write(&path, &(serde_json::to_string_pretty(&r).expect("report serializes") + "\n"))?;
    }
    Ok(())
}

fn cmd_certify(behavior: &Path, tol: f64, report: Option<PathBuf>, cert_prefix: Option<PathBuf>) -> CmdResult {
    let b = load_behavior(behavior)?;
    let (rep, lps) = certify_full_nn_with_lps(&b, tol)?;
    let mut orientations = Vec::new();
    for (o, inf) in rep.orientations.iter().zip(&lps) {
        println!(
            "{}-classical: {:?}{} ({} iterations, {:.1} s)",
            o.side.name(),
            o.status,
            o.certificate_value.map(|v| format!(", y·b(p) = {v:e}")).unwrap_or_default(),
            o.iterations,
            o.seconds
        );
        let mut cert_path = None;
        if let (Some(prefix), Some(cert), OrientationStatus::Infeasible) = (&cert_prefix, &o.certificate, o.status) {
            let path = PathBuf::from(format!("{}-{}.json", prefix.display(), o.side.name()));
            write(&path, &CertificateFile::new(cert, inf, &b).to_json())?;
            println!("  certificate written to {}", path.display());
            cert_path = Some(path.display().to_string());
        }
        orientations.push(json!({
            "classical_side": o.side,
            "status": o.status,
            "certificate_value": o.certificate_value,
            "iterations": o.iterations,
            "residual": o.residual,
            "certificate_file": cert_path,
        }));
    }
    println!("verdict: {}", rep.verdict.describe());
    if let Some(path) = report {
        let r = json!({
            "version": VERSION,
            "behavior": behavior.display().to_string(),
            "behavior_checksum": b.checksum(),
            "tol": tol,
            "orientations": orientations,
            "verdict": rep.verdict.describe(),
        });
        write(&path, &(serde_json::to_string_pretty(&r).expect("report serializes") + "\n"))?;
    }
    if rep.verdict == Verdict::Ambiguous {
        return Err(Failure::Ambiguous("no orientation decided".into()));
    }
    Ok(())
}

fn cmd_scan(spec: ScanSpec, out: &Path, jobs: usize) -> CmdResult {
    let res = run_scan(&spec, jobs)?;
    write(out, &res.to_csv())?;
    let meta = PathBuf::from(format!("{}.meta.json", out.display()));
    write(&meta, &res.metadata_json())?;
    println!("wrote {} points to {}", res.rows.len(), out.display());
    if let Some((t, v)) = res.min_row() {
        println!("minimum {v} at theta {t}");
    }
    Ok(())
}

fn cmd_cert2witness(certificate: &Path, out: &Path) -> CmdResult {
    let file = CertificateFile::from_json(&read(certificate)?)?;
    let (cert, inf) = file.resolve()?;
    let w = certificate_to_witness(&cert, &inf)?;
    write(out, &w.to_json())?;
    println!("wrote witness with {} terms to {}", w.terms.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen { kind, out } => cmd_gen(kind, out),
        Command::Witness { behavior, which, expr, report, tol } => cmd_witness(&behavior, which, expr, report, tol),
        Command::Certify { behavior, tol, report, cert_prefix } => cmd_certify(&behavior, tol, report, cert_prefix),
        Command::Scan { what, theta_min, theta_max, steps, tol, out, jobs } => {
            let what = match what {
                What::SimVisibility => ScanKind::SimVisibility,
                What::WitnessThreshold => ScanKind::WitnessThreshold,
            };
            let tol = tol.unwrap_or(match what {
                ScanKind::SimVisibility => 1e-6,
                ScanKind::WitnessThreshold => 1e-12,
            });
            cmd_scan(ScanSpec { what, theta_min, theta_max, steps, tol }, &out, jobs)
        }
        Command::Cert2witness { certificate, out } => cmd_cert2witness(&certificate, &out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Ambiguous(msg)) => {
            eprintln!("ambiguous: {msg}");
            ExitCode::from(3)
        }
    }
}
