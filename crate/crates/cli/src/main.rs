mod defaults;
mod selftest;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hillspec::diagnostics::{
    check_condition1, check_condition2, find_singularities, spectrality_diagnostic, two_term_coefficients,
    Condition1Params, Condition2Report, DiagnosticConfig, SingularityReport,
};
use hillspec::expansion::{reconstruct, ExpansionConfig, TestFunction};
use hillspec::ode::fundamental_at_one;
use hillspec::par::with_workers;
use hillspec::potential::PotentialFile;
use hillspec::spectrum::{bands_from_json, bands_to_csv, bands_to_json, track_bands, TrackingConfig};
use hillspec::{Complex64, FourierPotential};

/// Bad flags, unreadable files and malformed input: exit code 1.
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "hillspec", version, about = "Spectra, spectral singularities and spectral expansions of Hill operators")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "HILLSPEC_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate F(lambda) and F'(lambda).
    Discriminant(DiscriminantArgs),
    /// Track the band curves lambda_n(t), |n| <= nmax.
    Bands(BandsArgs),
    /// Locate spectral singularities.
    Singularities(SingularitiesArgs),
    /// Check the two-term condition (--mathieu) or the coefficient condition (--potential).
    Check(CheckArgs),
    /// Reconstruct a test function from the spectral expansion.
    Expand(ExpandArgs),
    /// Run the built-in invariant suite.
    Selftest,
}

#[derive(Args)]
struct Numeric {
    #[arg(long, default_value_t = defaults::NMAX)]
    nmax: usize,
    #[arg(long, default_value_t = defaults::TGRID)]
    tgrid: usize,
    /// Integrator tolerance.
    #[arg(long, default_value_t = defaults::TOL)]
    tol: f64,
}

impl Numeric {
    fn tracking(&self) -> Result<TrackingConfig> {
        if self.nmax < 1 {
            return Err(input_err("--nmax must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(input_err("--tol must be positive"));
        }
        let cfg = TrackingConfig { nmax: self.nmax, tgrid: self.tgrid, tol: self.tol, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct DiscriminantArgs {
    #[arg(long)]
    potential: PathBuf,
    /// `RE [IM]`.
    #[arg(long, num_args = 1..=2, required = true, allow_negative_numbers = true, value_names = ["RE", "IM"])]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = defaults::TOL)]
    tol: f64,
}

#[derive(Args)]
struct BandsArgs {
    #[arg(long)]
    potential: PathBuf,
    #[command(flatten)]
    num: Numeric,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SingularitiesArgs {
    #[arg(long)]
    potential: PathBuf,
    #[command(flatten)]
    num: Numeric,
    /// Band curves written by `bands`; tracked afresh when absent.
    #[arg(long)]
    bands: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the spectrality diagnostic here.
    #[arg(long)]
    spectrality: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Coefficients of a e^{2 pi i x} + b e^{-2 pi i x}.
    #[arg(long, num_args = 4, allow_negative_numbers = true, value_names = ["A_RE", "A_IM", "B_RE", "B_IM"], conflicts_with = "potential", required_unless_present = "potential")]
    mathieu: Option<Vec<f64>>,
    #[arg(long)]
    potential: Option<PathBuf>,
    #[arg(long = "Q", default_value_t = defaults::Q, value_parser = parse_q)]
    q: u64,
    /// Last n for the coefficient condition (default: the potential's order).
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, default_value_t = 0)]
    s: u32,
    #[arg(long, default_value_t = Condition1Params::default().c)]
    c: f64,
    #[arg(long, default_value_t = Condition1Params::default().eps)]
    eps: f64,
    #[arg(long, default_value_t = Condition1Params::default().ratio_cap)]
    ratio_cap: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    potential: PathBuf,
    /// Test function JSON.
    #[arg(long)]
    function: PathBuf,
    #[command(flatten)]
    num: Numeric,
    #[arg(long, default_value_t = defaults::NX)]
    nx: usize,
    #[arg(long = "eps-sing", default_value_t = defaults::EPS_SING)]
    eps_sing: f64,
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["A", "B"], default_values_t = defaults::INTERVAL)]
    interval: Vec<f64>,
    #[arg(long = "cross-tol", default_value_t = defaults::CROSS_TOL)]
    cross_tol: f64,
    /// Singularity report written by `singularities`; computed when absent.
    #[arg(long)]
    singularities: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn parse_q(s: &str) -> std::result::Result<u64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1.0 && v.fract() == 0.0 && v <= 1e12 {
        Ok(v as u64)
    } else {
        Err(format!("Q must be a positive integer, got {s}"))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_potential(path: &Path) -> Result<FourierPotential> {
    let text = read(path)?;
    PotentialFile::from_json(&text).with_context(|| format!("in {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            let nl = if text.ends_with('\n') { "" } else { "\n" };
            match write!(out, "{text}{nl}").and_then(|()| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{} {} {}i", z.re, if z.im < 0.0 { '-' } else { '+' }, z.im.abs())
}

fn discriminant(a: DiscriminantArgs) -> Result<u8> {
    let p = load_potential(&a.potential)?;
    if !(a.tol > 0.0) {
        return Err(input_err("--tol must be positive"));
    }
    let lambda = Complex64::new(a.lambda[0], a.lambda.get(1).copied().unwrap_or(0.0));
    let m = fundamental_at_one(&p, lambda, a.tol)?;
    println!("F = {}", fmt_c(m.f));
    println!("dF = {}", fmt_c(m.df));
    Ok(0)
}

fn bands(a: BandsArgs) -> Result<u8> {
    let p = load_potential(&a.potential)?;
    let cfg = a.num.tracking()?;
    let set = track_bands(&p, &cfg)?;
    for issue in &set.issues {
        eprintln!("warning: {issue}");
    }
    let text = match a.format {
        Format::Json => bands_to_json(&set.curves),
        Format::Csv => bands_to_csv(&set.curves),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn singularities(a: SingularitiesArgs) -> Result<u8> {
    let p = load_potential(&a.potential)?;
    let cfg = a.num.tracking()?;
    let curves = match &a.bands {
        Some(path) => bands_from_json(&read(path)?).with_context(|| format!("in {}", path.display()))?,
        None => {
            let set = track_bands(&p, &cfg)?;
            for issue in &set.issues {
                eprintln!("warning: {issue}");
            }
            set.curves
        }
    };
    let dcfg = DiagnosticConfig::default();
    let rep = find_singularities(&p, &curves, &cfg, &dcfg)?;
    eprintln!("{} candidates, {} singular, S = {:?}", rep.candidates.len(), rep.s, rep.s_bands);
    emit(a.out.as_deref(), &rep.to_json())?;
    if let Some(path) = &a.spectrality {
        let d = spectrality_diagnostic(&p, &curves, &rep, &cfg, &dcfg);
        emit(Some(path), &serde_json::to_string_pretty(&d)?)?;
    }
    Ok(0)
}

fn print_condition2(r: &Condition2Report) {
    println!("{}, min={:?}", r.primary.verdict.as_str(), r.primary.witness.min);
    println!(
        "2q form: {}, min={:?} (alpha = {}, |a| = |b|: {})",
        r.mathieu.verdict.as_str(),
        r.mathieu.witness.min,
        r.alpha,
        r.moduli_equal
    );
}

fn check(a: CheckArgs) -> Result<u8> {
    if let Some(v) = &a.mathieu {
        let rep = check_condition2(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), a.q)?;
        print_condition2(&rep);
        if let Some(out) = &a.out {
            emit(Some(out), &serde_json::to_string_pretty(&rep)?)?;
        }
        return Ok(0);
    }
    let path = a.potential.as_ref().ok_or_else(|| input_err("need --mathieu or --potential"))?;
    let p = load_potential(path)?;
    let params = Condition1Params { s: a.s, c: a.c, eps: a.eps, ratio_cap: a.ratio_cap };
    let last = a.nmax.unwrap_or(p.effective_order()).max(1) as i64;
    let rep = check_condition1(&p, &params, 1..=last)?;
    match rep.first_violation {
        None => println!("condition 1 holds for 1 <= n <= {last}"),
        Some(n) => {
            let row = rep.rows.iter().find(|r| r.n == n).expect("violating row");
            let mut why = Vec::new();
            if !row.comparable {
                why.push("ratio |q_n| / |q_-n| above the cap");
            }
            if !row.decay {
                why.push("coefficients below c n^(-s-1)");
            }
            if !(row.re_nonnegative || row.im_bounded_below) {
                why.push("sign condition on q_n q_-n");
            }
            println!("condition 1 fails at n = {n}: {}", why.join(", "));
        }
    }
    let c2 = match two_term_coefficients(&p) {
        Some((qa, qb)) => {
            let r = check_condition2(qa, qb, a.q)?;
            print_condition2(&r);
            Some(r)
        }
        None => None,
    };
    if let Some(out) = &a.out {
        let doc = serde_json::json!({ "condition1": rep, "condition2": c2 });
        emit(Some(out), &serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(0)
}

fn expand(a: ExpandArgs) -> Result<u8> {
    let p = load_potential(&a.potential)?;
    let f = TestFunction::from_json(&read(&a.function)?).with_context(|| format!("in {}", a.function.display()))?;
    let tracking = a.num.tracking()?;
    let report = match &a.singularities {
        Some(path) => serde_json::from_str::<SingularityReport>(&read(path)?)
            .map_err(|e| input_err(format!("in {}: {e}", path.display())))?,
        None => {
            let scfg = TrackingConfig { nmax: a.num.nmax.min(defaults::SING_NMAX), ..tracking };
            let set = track_bands(&p, &scfg)?;
            find_singularities(&p, &set.curves, &scfg, &DiagnosticConfig::default())?
        }
    };
    let cfg = ExpansionConfig {
        nmax: a.num.nmax,
        tgrid: a.num.tgrid,
        nx: a.nx,
        eps_sing: a.eps_sing,
        interval: (a.interval[0], a.interval[1]),
        cross_tol_rel: a.cross_tol,
        tracking,
        ..Default::default()
    }
    .with_report(&report);
    let rep = reconstruct(&p, &f, &cfg)?;
    eprintln!(
        "rel error {:e}, direct rel error {:e}, Bloch/direct {:e}, Parseval ratio {}",
        rep.rel_error, rep.direct_rel_error, rep.cross_discrepancy, rep.parseval_ratio
    );
    let text = match a.format {
        Format::Json => rep.to_json(),
        Format::Csv => rep.to_csv(),
    };
    emit(a.out.as_deref(), &text)?;
    if !rep.nonconvergence.is_empty() {
        let err = hillspec::Error::QuadratureNonconvergence { t: rep.nonconvergence[0] };
        eprintln!("error: {err} (all: {:?})", rep.nonconvergence);
        return Ok(2);
    }
    Ok(0)
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Discriminant(a) => discriminant(a),
        Command::Bands(a) => bands(a),
        Command::Singularities(a) => singularities(a),
        Command::Check(a) => check(a),
        Command::Expand(a) => expand(a),
        Command::Selftest => Ok(selftest::run()),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<InputError>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 1;
        }
        if let Some(h) = cause.downcast_ref::<hillspec::Error>() {
            return if h.is_input_error() { 1 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            return ExitCode::from(code);
        }
    };
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        eprintln!("error: --workers must be positive");
        return ExitCode::from(1);
    }
    match with_workers(workers, || run(cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
