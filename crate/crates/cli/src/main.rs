//! `o2`: command-line front end for `o2maps`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use o2maps::asymptotics::{classify_regime, l_eval, l_tilde_eval, slow_variation_ratios, DIAGNOSTIC_GRID};
use o2maps::oracle::{calibrate_tutte, direct_nu_many, tutte_residual, TutteCalibration, TutteResidual};
use o2maps::report::{fmt_f64, to_json};
use o2maps::series::{FCoefficients, GSequence, SeriesMode, TruncationConfig};
use o2maps::walk::{
    asc_ladder_series, band_checks, build_sampler, histogram_csv, simulate_ladders, BandCheck,
    LadderStatistics, WalkConfig,
};
use o2maps::weights::{
    builtin_example, synthesize, validate_nu, validation_window, BuiltinName, NuDistribution,
    ValidationReport, ValidationTolerances, WeightFamily, BUILTIN_WINDOW, DEFAULT_DEPTH,
};
use o2maps::Error;

#[derive(Parser)]
#[command(name = "o2", version, about = "Critical O(2) weight sequences and their peeling walks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Absolute tolerance for series evaluation and checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cap on the number of series terms.
    #[arg(long, global = true)]
    max_terms: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Digamma)]
    mode: Mode,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; for `walk` also the number of random streams.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Run the loop-equation check in `oracle` (calibrated first).
    #[arg(long, global = true)]
    enable_tutte: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Digamma,
    Direct,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    BuddSymmetric,
    FullyPacked,
}

impl From<Builtin> for BuiltinName {
    fn from(b: Builtin) -> Self {
        match b {
            Builtin::BuddSymmetric => BuiltinName::BuddSymmetric,
            Builtin::FullyPacked => BuiltinName::FullyPacked,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Ring weights `g1,g2,...`; decimals or fractions like `1/4`.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    /// File with one ring weight per line.
    #[arg(long)]
    g_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the weight family of a ring-weight sequence.
    Synth {
        #[command(flatten)]
        source: Source,
        /// Report nu(k) for |k| <= window.
        #[arg(long, default_value_t = 10)]
        window: i64,
    },
    /// Check the hypotheses on the step law.
    Validate {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: i64,
        #[arg(long)]
        window: Option<i64>,
    },
    /// Tabulate W, log W and L_q over a perimeter range.
    Table {
        #[command(flatten)]
        source: Source,
        /// Inclusive range `a..b`.
        #[arg(long, default_value = "0..20")]
        range: String,
    },
    /// Regime of the left tail and the slowly varying L.
    Asympt {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        /// Comma-separated x values.
        #[arg(long)]
        x_grid: Option<String>,
    },
    /// Monte Carlo ladder statistics of the step law.
    Walk {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 100_000)]
        n_walks: u64,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long, default_value_t = 10_000)]
        support_cut: i64,
        /// Compare ladder heights 1..=bands with their predicted law.
        #[arg(long, default_value_t = 8)]
        bands: i64,
    },
    /// Compare closed forms with direct sums.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 30)]
        k_max: i64,
        /// Terms of the direct series.
        #[arg(long, default_value_t = 1_000_000)]
        terms: usize,
        /// Largest perimeter of the loop-equation check.
        #[arg(long, default_value_t = 4)]
        tutte_ell: i64,
        #[arg(long, default_value_t = 20_000)]
        tutte_truncation: usize,
    },
    /// One of the closed-form families.
    Example {
        #[arg(value_enum)]
        name: Builtin,
        /// Emit a perimeter table `a..b` instead of the family.
        #[arg(long)]
        table: Option<String>,
        #[arg(long, default_value_t = 10)]
        window: i64,
    },
}

enum Failure {
    /// Bad flag value; exit 2.
    Usage(String),
    /// Computation rejected the input or a check failed; exit 1.
    Rejected(String),
}

impl Failure {
    fn flag(flag: &str, e: impl std::fmt::Display) -> Self {
        Failure::Usage(format!("{flag}: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            _ => Failure::Rejected(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Text to emit and whether the checks it reports passed.
struct Output {
    text: String,
    passed: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, passed: true }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = write_output(&cli.common, &out.text) {
                eprintln!("error: writing output: {e}");
                return ExitCode::from(2);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: check failed, see report");
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Rejected(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn write_output(common: &Common, text: &str) -> std::io::Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}

fn run(cli: &Cli) -> CliResult<Output> {
    let c = &cli.common;
    if c.workers == 0 {
        return Err(Failure::flag("--workers", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(c.workers)
        .build_global()
        .map_err(|e| Failure::flag("--workers", e))?;
    let cfg = truncation(c)?;
    match &cli.command {
        Command::Synth { source, window } => synth(c, &cfg, source, *window),
        Command::Validate { source, depth, window } => validate(c, &cfg, source, *depth, *window),
        Command::Table { source, range } => {
            let (_, family) = family_of(source, &cfg)?;
            table(c, &family, parse_range("--range", range)?)
        }
        Command::Asympt { source, lambda, x_grid } => asympt(c, &cfg, source, *lambda, x_grid.as_deref()),
        Command::Walk { source, n_walks, horizon, support_cut, bands } => {
            let wcfg = WalkConfig {
                master_seed: c.seed,
                n_walks: *n_walks,
                horizon: *horizon,
                support_cut: *support_cut,
                workers: c.workers,
            };
            walk(c, &cfg, source, &wcfg, *bands)
        }
        Command::Oracle { source, k_max, terms, tutte_ell, tutte_truncation } => {
            oracle(c, &cfg, source, *k_max, *terms, *tutte_ell, *tutte_truncation)
        }
        Command::Example { name, table: range, window } => {
            let (_, _, family) = builtin_example((*name).into());
            match range {
                Some(r) => table(c, &family, parse_range("--table", r)?),
                None => family_output(c, &family, *window),
            }
        }
    }
}

fn truncation(c: &Common) -> CliResult<TruncationConfig> {
    let mut cfg = TruncationConfig::default();
    if let Some(t) = c.tol {
        cfg.target_abs_tol = t;
    }
    if let Some(m) = c.max_terms {
        cfg.max_terms = m;
    }
    cfg.mode = match c.mode {
        Mode::Digamma => SeriesMode::ClosedFormDigamma,
        Mode::Direct => SeriesMode::DirectTruncated,
    };
    cfg.validate().map_err(|e| Failure::flag("--tol/--max-terms", e))?;
    Ok(cfg)
}

fn format_or(c: &Common, default: Format) -> Format {
    c.format.unwrap_or(default)
}

fn read_g(source: &Source) -> CliResult<Option<GSequence>> {
    if let Some(text) = &source.g {
        return GSequence::parse(text).map(Some).map_err(|e| Failure::flag("--g", e));
    }
    if let Some(path) = &source.g_file {
        let body = std::fs::read_to_string(path).map_err(|e| Failure::flag("--g-file", e))?;
        let joined: Vec<&str> = body.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        return GSequence::parse(&joined.join(","))
            .map(Some)
            .map_err(|e| Failure::flag("--g-file", e));
    }
    Ok(None)
}

/// Ring weights of the source; builtins give their closed-form `g`.
fn g_of(source: &Source) -> CliResult<GSequence> {
    match (read_g(source)?, source.builtin) {
        (Some(g), _) => Ok(g),
        (None, Some(b)) => Ok(builtin_example(b.into()).0),
        (None, None) => Err(Failure::Usage("one of --g, --g-file, --builtin is required".into())),
    }
}

fn family_of(source: &Source, cfg: &TruncationConfig) -> CliResult<(Option<GSequence>, WeightFamily)> {
    match (read_g(source)?, source.builtin) {
        (Some(g), _) => {
            let family = synthesize(&g, cfg)?;
            Ok((Some(g), family))
        }
        (None, Some(b)) => Ok((None, builtin_example(b.into()).2)),
        (None, None) => Err(Failure::Usage("one of --g, --g-file, --builtin is required".into())),
    }
}

fn parse_range(flag: &str, text: &str) -> CliResult<(i64, i64)> {
    let bad = || Failure::flag(flag, format!("expected a..b, got '{text}'"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: i64 = b.trim().parse().map_err(|_| bad())?;
    if a < 0 || b < a {
        return Err(Failure::flag(flag, format!("need 0 <= a <= b, got '{text}'")));
    }
    Ok((a, b))
}

fn synth(c: &Common, cfg: &TruncationConfig, source: &Source, window: i64) -> CliResult<Output> {
    let (_, family) = family_of(source, cfg)?;
    family_output(c, &family, window)
}

fn family_output(c: &Common, family: &WeightFamily, window: i64) -> CliResult<Output> {
    if window < 1 {
        return Err(Failure::flag("--window", "must be at least 1"));
    }
    let passed = family.validation().is_none_or(ValidationReport::passed);
    let text = match format_or(c, Format::Json) {
        Format::Json => to_json(&family.to_report(window)),
        Format::Csv => {
            let mut s = String::from("k,nu,log_q,log_q_tilde\n");
            for k in -window..=window {
                let nu = fmt_f64(family.nu().value(k));
                if k >= 1 {
                    let q = fmt_f64(family.q_log(k).log_abs);
                    let qt = fmt_f64(family.q_tilde_log(k).log_abs);
                    let _ = writeln!(s, "{k},{nu},{q},{qt}");
                } else {
                    let _ = writeln!(s, "{k},{nu},,");
                }
            }
            s
        }
    };
    Ok(Output { text, passed })
}

fn validate(
    c: &Common,
    cfg: &TruncationConfig,
    source: &Source,
    depth: i64,
    window: Option<i64>,
) -> CliResult<Output> {
    let (nu, default_window): (NuDistribution, i64) = match (read_g(source)?, source.builtin) {
        (Some(g), _) => {
            let family = synthesize(&g, cfg)?;
            (family.nu().clone(), validation_window(&g))
        }
        (None, Some(b)) => (builtin_example(b.into()).1, BUILTIN_WINDOW),
        (None, None) => return Err(Failure::Usage("one of --g, --g-file, --builtin is required".into())),
    };
    let tol = c.tol.map_or_else(ValidationTolerances::default, ValidationTolerances::uniform);
    let report = validate_nu(&nu, depth, window.unwrap_or(default_window).max(depth), &tol)
        .map_err(|e| Failure::flag("--depth/--window", e))?;
    let text = match format_or(c, Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("check,index,residual,tolerance\n");
            let t = &report.tolerances;
            let _ = writeln!(s, "mass,,{},{}", fmt_f64(report.mass_residual), fmt_f64(t.mass));
            for h in &report.harmonicity_residuals {
                let _ = writeln!(s, "harmonicity,{},{},{}", h.p, fmt_f64(h.residual), fmt_f64(t.harmonicity));
            }
            for p in &report.gasket_residuals {
                let _ = writeln!(s, "gasket,{},{},{}", p.k, fmt_f64(p.value), fmt_f64(t.gasket));
            }
            for p in &report.nonneg_violations {
                let _ = writeln!(s, "nonneg,{},{},{}", p.k, fmt_f64(p.value), fmt_f64(t.nonneg));
            }
            let _ = writeln!(s, "verdict,,{},", report.verdict.pass);
            s
        }
    };
    Ok(Output { text, passed: report.passed() })
}

#[derive(Serialize)]
struct TableRow {
    ell: i64,
    w: f64,
    log_w: f64,
    l_q: f64,
}

fn table(c: &Common, family: &WeightFamily, (a, b): (i64, i64)) -> CliResult<Output> {
    let rows = (a..=b)
        .map(|ell| {
            let w = family.partition_function(ell)?;
            Ok(TableRow {
                ell,
                w: w.value(),
                log_w: w.log_abs,
                l_q: family.l_q(ell),
            })
        })
        .collect::<o2maps::Result<Vec<_>>>()?;
    let text = match format_or(c, Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("ell,w,log_w,l_q\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{},{}", r.ell, fmt_f64(r.w), fmt_f64(r.log_w), fmt_f64(r.l_q));
            }
            s
        }
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct AsymptSample {
    x: f64,
    l: f64,
    l_tilde: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct AsymptOutput {
    lambda: f64,
    regime: o2maps::asymptotics::RegimeReport,
    samples: Vec<AsymptSample>,
}

fn asympt(
    c: &Common,
    cfg: &TruncationConfig,
    source: &Source,
    lambda: f64,
    x_grid: Option<&str>,
) -> CliResult<Output> {
    let g = g_of(source)?;
    let grid: Vec<f64> = match x_grid {
        Some(text) => text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::flag("--x-grid", e))?,
        None => DIAGNOSTIC_GRID.to_vec(),
    };
    let ratios = slow_variation_ratios(&g, lambda, &grid, cfg).map_err(|e| Failure::flag("--lambda/--x-grid", e))?;
    let regime = classify_regime(&g, cfg)?;
    let samples = grid
        .iter()
        .zip(ratios)
        .map(|(&x, ratio)| {
            Ok(AsymptSample {
                x,
                l: l_eval(&g, x, cfg)?,
                l_tilde: l_tilde_eval(&g, x, cfg)?,
                ratio,
            })
        })
        .collect::<o2maps::Result<Vec<_>>>()?;
    let text = match format_or(c, Format::Json) {
        Format::Json => to_json(&AsymptOutput { lambda, regime, samples }),
        Format::Csv => {
            let mut s = String::from("x,l,l_tilde,ratio\n");
            for r in &samples {
                let _ = writeln!(s, "{},{},{},{}", fmt_f64(r.x), fmt_f64(r.l), fmt_f64(r.l_tilde), fmt_f64(r.ratio));
            }
            s
        }
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct WalkOutput {
    config: WalkConfig,
    statistics: LadderStatistics,
    ascending_bands: Vec<BandCheck>,
    descending_bands: Vec<BandCheck>,
}

fn walk(c: &Common, cfg: &TruncationConfig, source: &Source, wcfg: &WalkConfig, bands: i64) -> CliResult<Output> {
    wcfg.validate().map_err(|e| Failure::flag("--n-walks/--horizon/--support-cut", e))?;
    if bands < 1 {
        return Err(Failure::flag("--bands", "must be at least 1"));
    }
    let (g, family) = family_of(source, cfg)?;
    let g = match g {
        Some(g) => g,
        None => g_of(source)?,
    };
    let sampler = build_sampler(family.nu(), wcfg)?;
    let stats = simulate_ladders(&sampler, wcfg)?;
    let law = asc_ladder_series(&g, bands as usize + 1)?;
    let text = match format_or(c, Format::Json) {
        Format::Json => {
            let asc = &stats.first_weak_ascending;
            let ascending_bands = (0..=bands)
                .map(|h| BandCheck::new(h, asc.count(h), stats.n_walks, law[h as usize]))
                .collect();
            to_json(&WalkOutput {
                config: *wcfg,
                descending_bands: band_checks(&stats, bands),
                ascending_bands,
                statistics: stats,
            })
        }
        Format::Csv => histogram_csv(&stats, Some(&law)),
    };
    Ok(Output::ok(text))
}

#[derive(Serialize)]
struct OracleRow {
    k: i64,
    closed_form: f64,
    direct: f64,
    difference: f64,
    tail_bound: f64,
    pass: bool,
}

#[derive(Serialize)]
struct TutteSection {
    enabled: bool,
    diagnostic: Option<String>,
    calibration: Option<TutteCalibration>,
    residuals: Vec<TutteResidual>,
}

#[derive(Serialize)]
struct OracleOutput {
    terms: usize,
    tolerance: f64,
    nu: Vec<OracleRow>,
    tutte: Option<TutteSection>,
}

fn oracle(
    c: &Common,
    cfg: &TruncationConfig,
    source: &Source,
    k_max: i64,
    terms: usize,
    tutte_ell: i64,
    tutte_truncation: usize,
) -> CliResult<Output> {
    if k_max < 0 {
        return Err(Failure::flag("--k-max", "must be non-negative"));
    }
    let g = g_of(source)?;
    let (_, family) = family_of(source, cfg)?;
    let ks: Vec<i64> = (-k_max..=k_max).collect();
    let direct = direct_nu_many(&g, &ks, terms).map_err(|e| Failure::flag("--terms", e))?;
    let fc = FCoefficients::new(&g);
    let tol = c.tol.unwrap_or(1e-9);
    let rows = direct
        .iter()
        .map(|d| {
            let closed = if source.builtin.is_some() && source.g.is_none() && source.g_file.is_none() {
                family.nu().value(d.k)
            } else {
                fc.nu_value(d.k, cfg)?.value
            };
            let difference = (closed - d.value).abs();
            Ok(OracleRow {
                k: d.k,
                closed_form: closed,
                direct: d.value,
                difference,
                tail_bound: d.tail_bound,
                pass: difference <= d.tail_bound + tol,
            })
        })
        .collect::<o2maps::Result<Vec<_>>>()?;
    let tutte = if c.enable_tutte {
        Some(match calibrate_tutte() {
            Ok(cal) => TutteSection {
                enabled: true,
                diagnostic: None,
                calibration: Some(cal),
                residuals: (1..=tutte_ell)
                    .map(|ell| tutte_residual(&family, ell, tutte_truncation, &cal))
                    .collect::<o2maps::Result<Vec<_>>>()
                    .map_err(|e| Failure::flag("--tutte-ell/--tutte-truncation", e))?,
            },
            Err(e) => TutteSection {
                enabled: false,
                diagnostic: Some(e.to_string()),
                calibration: None,
                residuals: Vec::new(),
            },
        })
    } else {
        None
    };
    let passed = rows.iter().all(|r| r.pass);
    let text = match format_or(c, Format::Json) {
        Format::Json => to_json(&OracleOutput { terms, tolerance: tol, nu: rows, tutte }),
        Format::Csv => {
            let mut s = String::from("check,index,value,reference,difference,bound,pass\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "nu,{},{},{},{},{},{}",
                    r.k,
                    fmt_f64(r.closed_form),
                    fmt_f64(r.direct),
                    fmt_f64(r.difference),
                    fmt_f64(r.tail_bound + tol),
                    r.pass
                );
            }
            if let Some(t) = &tutte {
                for r in &t.residuals {
                    let _ = writeln!(s, "tutte,{},{},,{},,", r.ell, fmt_f64(r.log_w), fmt_f64(r.residual));
                }
            }
            s
        }
    };
    Ok(Output { text, passed })
}
