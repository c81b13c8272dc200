//! The `circgauss` command-line interface.
//!
//! Six subcommands cover the pipeline end to end:
//!
//! - `simulate` — sample paths from a model JSON file; CSV (long format
//!   `rep,index,re,im`) or JSON output.
//! - `check-embedding` — build the minimal embedding, report its spectrum summary and
//!   every applicable non-negativity certificate; optionally dump `(k, λ_k)`.
//! - `estimate` — Hurst estimation with CLT/bootstrap confidence intervals, from a
//!   simulate-CSV or by simulating a model inline.
//! - `verify` — run the dense-oracle cross-checks and report pass/fail.
//! - `bench-fft` — time FFTs at the selected smooth length against the next
//!   power of two.
//! - `eigplot` — dump the embedding spectrum as plot-ready CSV.
//!
//! Exit codes: `0` success, `2` usage, `3` model validation, `4` embedding or
//! integrity failure, `5` I/O. Every subcommand accepts `--seed` and echoes it in its
//! output metadata, and all randomness flows through seeded, stream-split generators,
//! so equal invocations produce identical bytes. `CIRCGAUSS_THREADS` caps the worker
//! pool (default: all cores).

use crate::covmodels::{self, CovarianceModel};
use crate::embedding::{self, CheckReport};
use crate::error::{Error, Result};
use crate::estimate::{self, CiMethod, DilationSet, FilterSpec};
use crate::fft;
use crate::oracle;
use crate::simulate::{self, NoiseKind, RecoveryPolicy, RngHandle, SimulationOutput};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "circgauss",
    version,
    about = "Exact simulation of complex stationary Gaussian sequences by circulant embedding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate sample paths of a covariance model.
    Simulate(SimulateArgs),
    /// Build the minimal circulant embedding and run the non-negativity certificates.
    CheckEmbedding(CheckEmbeddingArgs),
    /// Estimate the Hurst exponent of circular complex fBm, with a confidence interval.
    Estimate(EstimateArgs),
    /// Cross-check the fast paths against dense reference implementations.
    Verify(VerifyArgs),
    /// Time FFTs at the selected smooth length versus the next power of two.
    BenchFft(BenchFftArgs),
    /// Dump the embedding spectrum (k, λ_k) as CSV.
    Eigplot(EigplotArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    /// Conjugate-paired spectral weights (2m+2 normal draws; Toeplitz pseudo-covariance).
    Real,
    /// Independent circular weights (4m+2 draws; zero pseudo-covariance).
    Circular,
}

impl Algorithm {
    fn noise_kind(self) -> NoiseKind {
        match self {
            Algorithm::Real => NoiseKind::RealStandard,
            Algorithm::Circular => NoiseKind::CircularStandard,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Algorithm::Real => "real",
            Algorithm::Circular => "circular",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    /// Grow the embedding (doubling m̃) until the spectrum is non-negative.
    Grow,
    /// Truncate negative eigenvalues and rescale by the trace ratio.
    Approx,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Model JSON file: {"variant": "...", "params": {...}}.
    #[arg(long)]
    model: PathBuf,
    /// Number of consecutive samples per path.
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Algorithm::Circular)]
    algorithm: Algorithm,
    #[arg(long, value_enum, default_value_t = PolicyArg::Grow)]
    policy: PolicyArg,
    /// Retry budget for --policy grow.
    #[arg(long, default_value_t = 3)]
    max_doublings: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent replications (RNG streams 0..reps of the seed).
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(clap::Args)]
struct CheckEmbeddingArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Sample-path length the embedding must cover.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the full spectrum as (k, lambda) CSV to this file.
    #[arg(long)]
    eig_out: Option<PathBuf>,
    /// Report file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CiArg {
    Clt,
    Ppb,
    Spb,
}

impl CiArg {
    fn method(self) -> CiMethod {
        match self {
            CiArg::Clt => CiMethod::Clt,
            CiArg::Ppb => CiMethod::Ppb,
            CiArg::Spb => CiMethod::Spb,
        }
    }
}

#[derive(clap::Args)]
struct EstimateArgs {
    /// Input: a CSV file written by `simulate`, or a model JSON file (which is
    /// simulated inline; requires --n). The series is read as stationary increments
    /// and integrated (Z̃(0) = 0) before estimation.
    #[arg(long = "in")]
    input: PathBuf,
    /// Path length when --in is a model file.
    #[arg(long)]
    n: Option<usize>,
    /// Which replication of a multi-rep CSV to estimate from.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    /// Filter coefficients, comma-separated.
    #[arg(long, default_value = "1,-2,1")]
    filter: String,
    /// Dilation scales, comma-separated.
    #[arg(long, default_value = "1,2,3,4")]
    scales: String,
    #[arg(long, value_enum, default_value_t = CiArg::Clt)]
    ci: CiArg,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Bootstrap replications (ppb/spb).
    #[arg(long = "B", default_value_t = 2000)]
    bootstrap_reps: usize,
    /// Known marginal scale σ² of the fitted circular fGn (bootstrap resimulation).
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Known circularity-asymmetry parameter η.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo draws for the two-sample moment comparison.
    #[arg(long, default_value_t = 20_000)]
    reps: usize,
    /// Report file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchFftArgs {
    /// Sample-path length whose embedding length is benchmarked.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    /// Timed repetitions per length (after one warm-up).
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EigplotArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Sample-path length the embedding must cover.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `argv` and execute one subcommand. Never panics on bad input; the returned
/// code follows the documented exit-code contract.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    init_thread_pool();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::CheckEmbedding(args) => cmd_check_embedding(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::BenchFft(args) => cmd_bench_fft(args),
        Command::Eigplot(args) => cmd_eigplot(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidModel(_) | Error::Domain(_) | Error::Json(_) => 3,
        Error::Size(_) => 2,
        Error::EmbeddingFailure { .. } | Error::Integrity(_) | Error::Degenerate(_) => 4,
        Error::Io(_) | Error::Csv(_) => 5,
    }
}

fn init_thread_pool() {
    static INIT: OnceLock<()> = OnceLock::new();
    INIT.get_or_init(|| {
        if let Ok(v) = std::env::var("CIRCGAUSS_THREADS") {
            if let Ok(threads) = v.parse::<usize>() {
                if threads >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build_global();
                }
            }
        }
    });
}

fn load_model(path: &Path) -> Result<CovarianceModel> {
    let text = std::fs::read_to_string(path)?;
    let model: CovarianceModel = serde_json::from_str(&text)?;
    covmodels::ensure_valid(&model)?;
    Ok(model)
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
        }
    }
    Ok(())
}

fn fmt_f64(buf: &mut ryu::Buffer, v: f64) -> String {
    buf.format(v).to_string()
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let model = load_model(&args.model)?;
    let policy = match args.policy {
        PolicyArg::Grow => RecoveryPolicy::GrowRetry {
            max_doublings: args.max_doublings,
        },
        PolicyArg::Approx => RecoveryPolicy::Approximate,
    };
    let outputs = simulate::simulate_batch(
        &model,
        args.n,
        args.algorithm.noise_kind(),
        policy,
        args.seed,
        args.reps,
    )?;
    let bytes = match args.format {
        OutputFormat::Csv => render_paths_csv(args.seed, &outputs),
        OutputFormat::Json => {
            let first = &outputs[0];
            let paths: Vec<&Vec<Complex64>> = outputs.iter().map(|o| &o.z).collect();
            let doc = json!({
                "seed": args.seed,
                "n": args.n,
                "reps": args.reps,
                "algorithm": args.algorithm.name(),
                "policy": match args.policy { PolicyArg::Grow => "grow", PolicyArg::Approx => "approx" },
                "size": first.size,
                "m_tilde": first.size.m_tilde(),
                "exact": first.exact,
                "phi_scale": first.phi_scale,
                "paths": paths,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s.into_bytes()
        }
    };
    write_output(&args.out, &bytes)?;
    Ok(0)
}

fn render_paths_csv(seed: u64, outputs: &[SimulationOutput]) -> Vec<u8> {
    let mut text = String::new();
    let mut buf = ryu::Buffer::new();
    text.push_str(&format!("# seed={seed}\n"));
    text.push_str("rep,index,re,im\n");
    for (rep, out) in outputs.iter().enumerate() {
        for (index, z) in out.z.iter().enumerate() {
            text.push_str(&format!(
                "{rep},{index},{},{}\n",
                fmt_f64(&mut buf, z.re),
                fmt_f64(&mut buf, z.im)
            ));
        }
    }
    text.into_bytes()
}

fn cmd_check_embedding(args: CheckEmbeddingArgs) -> Result<i32> {
    let model = load_model(&args.model)?;
    let size = embedding::select_embedding_size(args.n)?;
    let emb = embedding::build(&model, &size)?;
    let slices = covmodels::slices(&model, size.m)?;

    let mut checkers: Vec<CheckReport> = Vec::new();
    checkers.push(embedding::check_craigmile(&model, &size)?);
    checkers.push(embedding::check_dietrich(&slices, &size, None)?);
    let eta = match &model {
        CovarianceModel::CircularFgn { eta, .. } => Some(*eta),
        CovarianceModel::ComplexFgn {
            sigma_r, sigma_i, eta, ..
        } => Some(2.0 * eta * sigma_r * sigma_i / (sigma_r * sigma_r + sigma_i * sigma_i)),
        _ => None,
    };
    if let Some(eta) = eta {
        checkers.push(embedding::check_dietrich(&slices, &size, Some(eta))?);
    }
    if let CovarianceModel::Modulated { phi, base } = &model {
        checkers.push(embedding::check_modulated(base, &size, *phi)?);
    }

    if let Some(eig_path) = &args.eig_out {
        let mut text = String::new();
        let mut buf = ryu::Buffer::new();
        text.push_str(&format!("# seed={}\n", args.seed));
        text.push_str("k,lambda\n");
        for (k, &l) in emb.eigenvalues.iter().enumerate() {
            text.push_str(&format!("{k},{}\n", fmt_f64(&mut buf, l)));
        }
        std::fs::write(eig_path, text)?;
    }

    let doc = json!({
        "seed": args.seed,
        "n": args.n,
        "m": size.m,
        "m_tilde": size.m_tilde(),
        "min_eig": emb.min_eig,
        "negative_count": emb.negative_count,
        "checkers": checkers,
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    write_output(&args.out, s.as_bytes())?;
    Ok(0)
}

fn parse_filter(text: &str) -> Result<FilterSpec> {
    let coeffs: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Size(format!("cannot parse filter coefficient {t:?}")))
        })
        .collect::<Result<_>>()?;
    estimate::validate_filter(&coeffs)
}

fn parse_scales(text: &str) -> Result<DilationSet> {
    let scales: Vec<usize> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Size(format!("cannot parse dilation scale {t:?}")))
        })
        .collect::<Result<_>>()?;
    DilationSet::new(scales)
}

/// Read one replication of a simulate-CSV back as a complex series.
fn read_series_csv(path: &Path, rep: u64) -> Result<Vec<Complex64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut rows: Vec<(u64, Complex64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Size(format!(
                "expected rep,index,re,im rows, got {} fields",
                record.len()
            )));
        }
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Size(format!("cannot parse CSV field {:?}", &record[i])))
        };
        let row_rep = record[0]
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::Size(format!("cannot parse rep index {:?}", &record[0])))?;
        if row_rep != rep {
            continue;
        }
        let index = record[1]
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::Size(format!("cannot parse sample index {:?}", &record[1])))?;
        rows.push((index, Complex64::new(parse(2)?, parse(3)?)));
    }
    if rows.is_empty() {
        return Err(Error::Size(format!(
            "replication {rep} is not present in {}",
            path.display()
        )));
    }
    rows.sort_by_key(|&(index, _)| index);
    Ok(rows.into_iter().map(|(_, z)| z).collect())
}

fn cmd_estimate(args: EstimateArgs) -> Result<i32> {
    let is_csv = args
        .input
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    let increments: Vec<Complex64> = if is_csv {
        read_series_csv(&args.input, args.rep)?
    } else {
        let model = load_model(&args.input)?;
        let n = args.n.ok_or_else(|| {
            Error::Size("--n is required when --in is a model file".into())
        })?;
        let mut rng = RngHandle::new(args.seed, 0);
        simulate::simulate(
            &model,
            n,
            NoiseKind::CircularStandard,
            RecoveryPolicy::default(),
            &mut rng,
        )?
        .z
    };
    // The estimator consumes the cumulative path; the series on disk is its increments.
    let mut path = Vec::with_capacity(increments.len() + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    path.push(acc);
    for dz in &increments {
        acc += dz;
        path.push(acc);
    }

    let filter = parse_filter(&args.filter)?;
    let scales = parse_scales(&args.scales)?;
    let est = estimate::estimate_hurst(&path, &filter, &scales)?;
    let mut rng = RngHandle::new(args.seed, u64::MAX); // separate stream from inline simulation
    let ci = estimate::confidence_interval_with(
        &path,
        &filter,
        &scales,
        args.ci.method(),
        args.level,
        args.bootstrap_reps,
        args.sigma2,
        args.eta,
        &mut rng,
    )?;
    // Report the sd consistent with the interval (known η), not the η = 0 plug-in.
    let sd = if ci.method == CiMethod::Clt {
        let z = (ci.upper - ci.lower) / 2.0;
        z / statrs::distribution::ContinuousCDF::inverse_cdf(
            &statrs::distribution::Normal::standard(),
            0.5 + args.level / 2.0,
        )
    } else {
        est.asymptotic_sd
    };
    let doc = json!({
        "seed": args.seed,
        "n": path.len(),
        "h_hat": est.h_hat,
        "sd": sd,
        "ci": {
            "method": ci.method,
            "level": ci.level,
            "lower": ci.lower,
            "upper": ci.upper,
            "bootstrap_reps": ci.bootstrap_reps,
        },
        "s2_per_scale": est.s2_per_scale,
        "scales": scales.scales(),
        "filter": filter.coeffs(),
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    write_output(&args.out, s.as_bytes())?;
    Ok(0)
}

struct VerifyCheck {
    name: &'static str,
    passed: bool,
    details: Vec<String>,
}

fn verify_zoo() -> Vec<(&'static str, CovarianceModel)> {
    use crate::covmodels::RealCovariance;
    vec![
        ("white-noise", CovarianceModel::WhiteNoise { sigma2: 1.0 }),
        (
            "complex-ar1",
            CovarianceModel::ComplexAr1 {
                a_re: 0.5,
                a_im: 0.3,
                sigma2: 1.0,
                circular: true,
            },
        ),
        (
            "circular-fgn",
            CovarianceModel::CircularFgn {
                h: 0.8,
                sigma2: 1.0,
                eta: 0.3,
            },
        ),
        (
            "modulated-exponential",
            CovarianceModel::Modulated {
                phi: 0.2,
                base: RealCovariance::Exponential {
                    alpha: 0.5,
                    sigma2: 1.5,
                },
            },
        ),
        (
            "modulated-farima",
            CovarianceModel::Modulated {
                phi: 0.125,
                base: RealCovariance::Farima {
                    d: 0.2,
                    sigma2_eps: 1.0,
                },
            },
        ),
    ]
}

fn check_dense_structure() -> VerifyCheck {
    let mut details = Vec::new();
    let mut passed = true;
    let id = oracle::dense_gamma(&CovarianceModel::WhiteNoise { sigma2: 1.0 }, 3);
    match id {
        Ok(g) => {
            for j in 0..3 {
                for k in 0..3 {
                    let expected = if j == k { 1.0 } else { 0.0 };
                    if (g.get(j, k) - expected).norm() != 0.0 {
                        passed = false;
                        details.push(format!("white-noise entry ({j},{k}) = {}", g.get(j, k)));
                    }
                }
            }
        }
        Err(e) => {
            passed = false;
            details.push(format!("white-noise dense build failed: {e}"));
        }
    }
    for (name, model) in verify_zoo() {
        match oracle::dense_gamma(&model, 16) {
            Ok(g) => {
                for j in 0..16 {
                    for k in 0..16 {
                        if (g.get(j, k) - g.get(k, j).conj()).norm() > 0.0 {
                            passed = false;
                            details.push(format!("{name}: not Hermitian at ({j},{k})"));
                        }
                        if j + 1 < 16 && k + 1 < 16 && g.get(j + 1, k + 1) != g.get(j, k) {
                            passed = false;
                            details.push(format!("{name}: not Toeplitz at ({j},{k})"));
                        }
                    }
                }
            }
            Err(e) => {
                passed = false;
                details.push(format!("{name}: dense build failed: {e}"));
            }
        }
    }
    details.push("identity, Hermitian, and Toeplitz structure verified".into());
    VerifyCheck {
        name: "dense-structure",
        passed,
        details,
    }
}

fn check_top_left_block() -> VerifyCheck {
    let mut details = Vec::new();
    let mut passed = true;
    let n = 16;
    for (name, model) in verify_zoo() {
        let outcome = (|| -> Result<f64> {
            let size = embedding::select_embedding_size(n)?;
            let emb = embedding::build(&model, &size)?;
            let g = oracle::dense_gamma(&model, n)?;
            let m_tilde = size.m_tilde();
            let mut worst = 0.0f64;
            for j in 0..n {
                for k in 0..n {
                    let c = emb.first_row[(k + m_tilde - j) % m_tilde];
                    worst = worst.max((c - g.get(j, k)).norm());
                }
            }
            Ok(worst)
        })();
        match outcome {
            Ok(worst) if worst <= 1e-14 => {
                details.push(format!("{name}: max |C_block − Γ| = {worst:.2e}"));
            }
            Ok(worst) => {
                passed = false;
                details.push(format!("{name}: top-left block deviates by {worst:.2e}"));
            }
            Err(e) => {
                passed = false;
                details.push(format!("{name}: {e}"));
            }
        }
    }
    VerifyCheck {
        name: "circulant-top-left-block",
        passed,
        details,
    }
}

fn check_eigenvalue_routes() -> VerifyCheck {
    let mut details = Vec::new();
    let mut passed = true;
    for (name, model) in verify_zoo() {
        let outcome = (|| -> Result<f64> {
            let size = embedding::EmbeddingSize::new(64, 160)?; // m̃ = 321 ≤ 405
            let emb = embedding::build(&model, &size)?;
            let slices = covmodels::slices(&model, size.m)?;
            let direct = embedding::eigenvalues_direct(&slices, &size)?;
            let kernel = embedding::eigenvalues_kernel_form(&slices, &size)?;
            let scale = emb
                .eigenvalues
                .iter()
                .fold(0.0f64, |a, &b| a.max(b.abs()))
                .max(1e-300);
            let mut worst = 0.0f64;
            for k in 0..size.m_tilde() {
                worst = worst.max((emb.eigenvalues[k] - direct[k]).abs() / scale);
                worst = worst.max((direct[k] - kernel[k]).abs() / scale);
            }
            Ok(worst)
        })();
        match outcome {
            Ok(worst) if worst <= 1e-6 => {
                details.push(format!("{name}: max relative spread {worst:.2e}"));
            }
            Ok(worst) => {
                passed = false;
                details.push(format!("{name}: route disagreement {worst:.2e} > 1e-6"));
            }
            Err(e) => {
                passed = false;
                details.push(format!("{name}: {e}"));
            }
        }
    }
    VerifyCheck {
        name: "eigenvalue-routes-agree",
        passed,
        details,
    }
}

fn check_fast_vs_dense_moments(seed: u64, reps: usize) -> VerifyCheck {
    let mut details = Vec::new();
    let mut passed = true;
    let n = 16;
    let model = CovarianceModel::ComplexAr1 {
        a_re: 0.5,
        a_im: 0.3,
        sigma2: 1.0,
        circular: true,
    };
    let outcome = (|| -> Result<(f64, f64)> {
        let fast = simulate::simulate_batch(
            &model,
            n,
            NoiseKind::CircularStandard,
            RecoveryPolicy::default(),
            seed,
            reps,
        )?;
        let fast_paths: Vec<Vec<Complex64>> = fast.into_iter().map(|o| o.z).collect();
        let g = oracle::dense_gamma(&model, n)?;
        let dense_paths: Vec<Vec<Complex64>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngHandle::new(seed ^ 0x9E37_79B9_7F4A_7C15, r as u64);
                oracle::cholesky_simulate(&g, true, &mut rng)
            })
            .collect::<Result<_>>()?;
        let mf = oracle::empirical_moments(&fast_paths)?;
        let md = oracle::empirical_moments(&dense_paths)?;
        let (cf, sf) = (mf.cov.unwrap(), mf.cov_se.unwrap());
        let (cd, sd) = (md.cov.unwrap(), md.cov_se.unwrap());
        let mut worst_sigma = 0.0f64;
        for idx in 0..n * n {
            let diff = (cf[idx] - cd[idx]).norm();
            let band = (sf[idx].powi(2) + sd[idx].powi(2)).sqrt().max(1e-300);
            worst_sigma = worst_sigma.max(diff / band);
        }
        // Both pseudo-covariances must vanish within MC noise.
        let pf = mf.pseudo_cov.unwrap();
        let mut worst_pseudo = 0.0f64;
        for idx in 0..n * n {
            worst_pseudo = worst_pseudo.max(pf[idx].norm() / sf[idx].max(1e-300));
        }
        Ok((worst_sigma, worst_pseudo))
    })();
    match outcome {
        Ok((worst_sigma, worst_pseudo)) => {
            details.push(format!(
                "max |cov_fast − cov_dense| = {worst_sigma:.2} combined SEs (limit 5)"
            ));
            details.push(format!(
                "max |pseudo_fast| = {worst_pseudo:.2} SEs (limit 5)"
            ));
            if worst_sigma > 5.0 || worst_pseudo > 5.0 {
                passed = false;
            }
        }
        Err(e) => {
            passed = false;
            details.push(format!("moment comparison failed: {e}"));
        }
    }
    VerifyCheck {
        name: "fast-vs-dense-moments",
        passed,
        details,
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let checks = vec![
        check_dense_structure(),
        check_top_left_block(),
        check_eigenvalue_routes(),
        check_fast_vs_dense_moments(args.seed, args.reps),
    ];
    let all_passed = checks.iter().all(|c| c.passed);
    let doc = json!({
        "seed": args.seed,
        "reps": args.reps,
        "all_passed": all_passed,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "passed": c.passed,
            "details": c.details,
        })).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    write_output(&args.out, s.as_bytes())?;
    Ok(if all_passed { 0 } else { 1 })
}

fn time_fft(len: usize, reps: usize, seed: u64) -> f64 {
    let mut rng = RngHandle::new(seed, len as u64);
    let base: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.standard_normal(), rng.standard_normal()))
        .collect();
    let mut buf = base.clone();
    fft::fft_forward(&mut buf); // warm-up: plan construction and caches
    let mut total = 0.0;
    for _ in 0..reps {
        buf.copy_from_slice(&base);
        let start = Instant::now();
        fft::fft_forward(&mut buf);
        total += start.elapsed().as_secs_f64();
    }
    total / reps as f64 * 1e3
}

fn cmd_bench_fft(args: BenchFftArgs) -> Result<i32> {
    let size = embedding::select_embedding_size(args.n)?;
    let smooth = size.m_tilde();
    let pow2 = (2 * args.n - 1).next_power_of_two();
    let smooth_ms = time_fft(smooth, args.reps.max(1), args.seed);
    let pow2_ms = time_fft(pow2, args.reps.max(1), args.seed);
    let doc = json!({
        "seed": args.seed,
        "n": args.n,
        "reps": args.reps,
        "results": [
            {"length": smooth, "kind": "smooth", "mean_ms": smooth_ms},
            {"length": pow2, "kind": "pow2", "mean_ms": pow2_ms},
        ],
        "ratio_smooth_over_pow2": smooth_ms / pow2_ms,
    });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    write_output(&args.out, s.as_bytes())?;
    Ok(0)
}

fn cmd_eigplot(args: EigplotArgs) -> Result<i32> {
    let model = load_model(&args.model)?;
    let size = embedding::select_embedding_size(args.n)?;
    let emb = embedding::build(&model, &size)?;
    let mut text = String::new();
    let mut buf = ryu::Buffer::new();
    text.push_str(&format!("# seed={}\n", args.seed));
    text.push_str("k,lambda\n");
    for (k, &l) in emb.eigenvalues.iter().enumerate() {
        text.push_str(&format!("{k},{}\n", fmt_f64(&mut buf, l)));
    }
    write_output(&args.out, text.as_bytes())?;
    Ok(0)
}
