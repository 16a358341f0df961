//! Command-line driver: pointwise evaluation, seeded verification suites,
//! and decay scans along rapidity rays. Configuration comes from an
//! optional JSON file with flag overrides (flags win); all randomized
//! suites are seeded and reports embed the seed.
//!
//! Exit codes: 0 success, 1 usage or malformed configuration, 2 violated
//! precondition, 3 accuracy failure.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use relcm_core::asym;
use relcm_core::bounds;
use relcm_core::eigen::{EigenEvaluator, EvalSettings, GridSpec};
use relcm_core::error::Error;
use relcm_core::kernels::KernelContext;
use relcm_core::params::Params;
use relcm_core::residue;
use relcm_core::suites::{self, Suite, SuiteConfig};
use serde::Serialize;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

mod config;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "relcm", version, about = "hyperbolic relativistic Calogero-Moser joint eigenfunctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one eigenfunction value and print a JSON record.
    Eval(EvalArgs),
    /// Run a named verification suite and print its JSON report.
    Verify(VerifyArgs),
    /// Scan the factorized-asymptotics remainder along a rapidity ray.
    Scan(ScanArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON configuration file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    aplus: Option<f64>,
    #[arg(long)]
    aminus: Option<f64>,
    /// Coupling, real part.
    #[arg(long)]
    b: Option<f64>,
    /// Coupling, imaginary part.
    #[arg(long, default_value = None)]
    b_im: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for the quadrature engine (default 1, bit-stable).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    n: Option<usize>,
    /// Position entries (repeat the flag or comma-separate).
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    /// Optional imaginary parts of the positions.
    #[arg(long, value_delimiter = ',')]
    x_im: Vec<f64>,
    /// Rapidity entries.
    #[arg(long, value_delimiter = ',')]
    y: Vec<f64>,
    /// Which function: e, j, j-alt, e-as.
    #[arg(long)]
    function: Option<String>,
    /// Grid override: truncation radius.
    #[arg(long)]
    truncation: Option<f64>,
    /// Grid override: panel count.
    #[arg(long)]
    panels: Option<usize>,
    /// Grid override: Gauss-Legendre nodes per panel.
    #[arg(long)]
    nodes_per_panel: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// gamma, kernels, symmetry, lemma, asymptotics, bounds, or all.
    #[arg(long)]
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Full sample counts instead of the quick interactive budget.
    #[arg(long, default_value_t = false)]
    full: bool,
    /// Write the JSON report here as well as stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Auxiliary CSV: residue terms (lemma suite) or envelope samples
    /// (bounds suite).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    n: Option<usize>,
    /// Position entries; defaults to a centered configuration.
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    #[arg(long, default_value_t = 0.6)]
    t_min: f64,
    #[arg(long, default_value_t = 3.0)]
    t_max: f64,
    #[arg(long, default_value_t = 9)]
    t_steps: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalRecord {
    value_re: f64,
    value_im: f64,
    error_estimate: f64,
    evaluations: u64,
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Dimension(_) | Error::Parameter(_) | Error::UnknownClaim(_) => ExitCode::from(1),
        Error::Precondition(_) | Error::Singularity { .. } | Error::Contour(_)
        | Error::NonFinite(_) => ExitCode::from(2),
        Error::Accuracy { .. } | Error::DegenerateFit(_) => ExitCode::from(3),
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    exit_code_for(&err)
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn init_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Eval(args) => run_eval(args),
        Command::Verify(args) => run_verify(args),
        Command::Scan(args) => run_scan(args),
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, ExitCode> {
    let mut cfg = match &common.config {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| usage(format!("cannot open config {}: {e}", path.display())))?;
            serde_json::from_reader(file)
                .map_err(|e| usage(format!("malformed config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = common.aplus {
        cfg.params.a_plus = v;
    }
    if let Some(v) = common.aminus {
        cfg.params.a_minus = v;
    }
    if let Some(v) = common.b {
        cfg.coupling.b_re = v;
    }
    if let Some(v) = common.b_im {
        cfg.coupling.b_im = v;
    }
    if let Some(v) = common.tol {
        cfg.tolerance = v;
    }
    if let Some(v) = common.threads {
        cfg.threads = v;
    }
    Ok(cfg)
}

fn build_evaluator(cfg: &RunConfig, grid: Option<GridSpec>) -> Result<EigenEvaluator, Error> {
    let params = Params::new(cfg.params.a_plus, cfg.params.a_minus)?;
    let ctx = KernelContext::new(params, Complex64::new(cfg.coupling.b_re, cfg.coupling.b_im))?;
    Ok(EigenEvaluator::new(
        ctx,
        EvalSettings {
            tolerance: cfg.tolerance,
            grid,
            ..EvalSettings::default()
        },
    ))
}

fn run_eval(args: EvalArgs) -> ExitCode {
    let mut cfg = match load_config(&args.common) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if !args.x.is_empty() {
        cfg.x = args.x.clone();
        cfg.x_im = None;
    }
    if !args.x_im.is_empty() {
        cfg.x_im = Some(args.x_im.clone());
    }
    if !args.y.is_empty() {
        cfg.y = args.y.clone();
    }
    if let Some(f) = &args.function {
        cfg.function = f.clone();
    }
    init_threads(cfg.threads);

    if cfg.x.len() != cfg.n || cfg.y.len() != cfg.n {
        return usage(format!(
            "field x/y: need {} entries, got {} positions and {} rapidities",
            cfg.n,
            cfg.x.len(),
            cfg.y.len()
        ));
    }
    if let Some(im) = &cfg.x_im {
        if im.len() != cfg.n {
            return usage(format!("field x_im: need {} entries, got {}", cfg.n, im.len()));
        }
    }
    let x: Vec<Complex64> = cfg
        .x
        .iter()
        .enumerate()
        .map(|(i, &re)| Complex64::new(re, cfg.x_im.as_ref().map_or(0.0, |v| v[i])))
        .collect();

    let grid = cfg.quadrature.as_ref().map(|q| GridSpec {
        truncation: args.truncation.unwrap_or(q.truncation),
        panels: args.panels.unwrap_or(q.panels),
        nodes_per_panel: args.nodes_per_panel.unwrap_or(q.nodes_per_panel),
    });
    let grid = match (grid, args.truncation, args.panels, args.nodes_per_panel) {
        (Some(g), ..) => Some(g),
        (None, Some(t), Some(p), Some(k)) => Some(GridSpec {
            truncation: t,
            panels: p,
            nodes_per_panel: k,
        }),
        _ => None,
    };

    let ev = match build_evaluator(&cfg, grid) {
        Ok(ev) => ev,
        Err(e) => return fail(e),
    };
    let out = match cfg.function.as_str() {
        "e" => ev.e(&x, &cfg.y),
        "j" => ev.j(&x, &cfg.y),
        "j-alt" => ev.j_alt(&x, &cfg.y),
        "e-as" => {
            return match asym::e_as(ev.context(), &x, &cfg.y, asym::AsymptoticMode::UProduct) {
                Ok(v) => {
                    print_record(&EvalRecord {
                        value_re: v.re,
                        value_im: v.im,
                        error_estimate: 0.0,
                        evaluations: 0,
                    });
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            };
        }
        other => return usage(format!("field function: unknown '{other}'")),
    };
    match out {
        Ok(res) => {
            let record = EvalRecord {
                value_re: res.value_re,
                value_im: res.value_im,
                error_estimate: res.error_estimate,
                evaluations: res.evaluations,
            };
            print_record(&record);
            if res.error_estimate > cfg.tolerance.max(1e-13) * res.value().norm().max(1.0) * 10.0
            {
                eprintln!(
                    "accuracy warning: estimate {:.3e} above tolerance {:.1e}",
                    res.error_estimate, cfg.tolerance
                );
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn print_record(record: &EvalRecord) {
    println!("{}", serde_json::to_string_pretty(record).unwrap());
}

fn run_verify(args: VerifyArgs) -> ExitCode {
    let cfg = match load_config(&args.common) {
        Ok(c) => c,
        Err(code) => return code,
    };
    init_threads(cfg.threads);
    let suite = match Suite::from_str(&args.suite) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let params = match Params::new(cfg.params.a_plus, cfg.params.a_minus) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let mut sc = SuiteConfig::new(
        params,
        Complex64::new(cfg.coupling.b_re, cfg.coupling.b_im),
        args.seed.unwrap_or(cfg.seed),
    );
    sc.quick = !args.full;
    sc.tolerance = cfg.tolerance;

    let reports = match suites::run(&sc, suite) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let body = serde_json::to_string_pretty(&reports).unwrap();
    println!("{body}");
    if let Some(path) = &args.json {
        if let Err(e) = std::fs::write(path, format!("{body}\n")) {
            return usage(format!("cannot write {}: {e}", path.display()));
        }
    }
    if let Some(path) = &args.csv {
        if let Err(code) = write_aux_csv(&sc, suite, path) {
            return code;
        }
    }
    if reports.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

/// Residue-term CSV for the lemma suite, envelope-sample CSV for bounds.
fn write_aux_csv(sc: &SuiteConfig, suite: Suite, path: &PathBuf) -> Result<(), ExitCode> {
    let open = || File::create(path).map_err(|e| usage(format!("cannot write {}: {e}", path.display())));
    match suite {
        Suite::Lemma => {
            let ctx = KernelContext::new(sc.params, sc.b).map_err(fail)?;
            let ev = EigenEvaluator::new(
                ctx,
                EvalSettings {
                    tolerance: 1e-6,
                    ..EvalSettings::default()
                },
            );
            let a = sc.params.a();
            let x = [
                Complex64::new(0.31 * a, 0.0),
                Complex64::new(-0.24 * a, 0.0),
                Complex64::new(0.07 * a, 0.0),
            ];
            let y = asym::default_ray(3, a);
            let report =
                residue::lemma_rhs(&ev, &x, &y, 0.75 * sc.params.a_s()).map_err(fail)?;
            residue::write_term_csv(&report, open()?).map_err(fail)?;
            Ok(())
        }
        Suite::Bounds => {
            let ctx = KernelContext::new(sc.params, sc.b).map_err(fail)?;
            let ev = EigenEvaluator::new(
                ctx,
                EvalSettings {
                    tolerance: 1e-7,
                    ..EvalSettings::default()
                },
            );
            let (_, samples) = bounds::fit_envelope(&ev, bounds::ClaimId::CAsym).map_err(fail)?;
            bounds::write_samples_csv(&samples, open()?).map_err(fail)?;
            Ok(())
        }
        _ => Ok(()),
    }
}

fn run_scan(args: ScanArgs) -> ExitCode {
    let mut cfg = match load_config(&args.common) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if !args.x.is_empty() {
        cfg.x = args.x.clone();
    }
    init_threads(cfg.threads);
    if args.t_steps < 2 || !(args.t_max > args.t_min) || args.t_min <= 0.0 {
        return usage("scan range: need t_max > t_min > 0 and at least two steps");
    }
    let n = cfg.n;
    let x: Vec<Complex64> = if cfg.x.len() == n {
        cfg.x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    } else {
        // centered default positions
        (0..n)
            .map(|j| Complex64::new(0.4 * (n as f64 - 1.0 - 2.0 * j as f64) / 2.0, 0.0))
            .collect()
    };
    let ev = match build_evaluator(&cfg, None) {
        Ok(ev) => ev,
        Err(e) => return fail(e),
    };
    let ts: Vec<f64> = (0..args.t_steps)
        .map(|k| args.t_min + (args.t_max - args.t_min) * k as f64 / (args.t_steps - 1) as f64)
        .collect();
    let samples = match asym::scan_ray(&ev, &x, &ts) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };

    if let Some(path) = &args.csv {
        match File::create(path) {
            Ok(file) => {
                let mut w = csv::Writer::from_writer(file);
                let ok = w
                    .write_record(["t", "d_N", "abs_remainder", "abs_E_as"])
                    .and_then(|_| {
                        samples.iter().try_for_each(|s| {
                            w.write_record([
                                s.t.to_string(),
                                s.d.to_string(),
                                s.abs_remainder.to_string(),
                                s.abs_e_as.to_string(),
                            ])
                        })
                    });
                if let Err(e) = ok.and_then(|_| w.flush().map_err(Into::into)) {
                    return usage(format!("cannot write {}: {e}", path.display()));
                }
            }
            Err(e) => return usage(format!("cannot write {}: {e}", path.display())),
        }
    }

    let fit = match asym::fit_decay(&samples) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let summary = asym::summarize_fit(ev.context(), &fit);
    let mut body = serde_json::to_value(&fit).unwrap();
    body["summary"] = serde_json::to_value(&summary).unwrap();
    println!("{}", serde_json::to_string_pretty(&body).unwrap());
    if let Some(path) = &args.json {
        let mut f = match File::create(path) {
            Ok(f) => f,
            Err(e) => return usage(format!("cannot write {}: {e}", path.display())),
        };
        let _ = writeln!(f, "{}", serde_json::to_string_pretty(&body).unwrap());
    }
    if summary.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
