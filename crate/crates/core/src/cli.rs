//! Command-line front end. Every command writes one table, as CSV (default)
//! or as a JSON array of row objects with the same keys.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure (convergence,
//! equivalence violation, LP breakdown). Errors go to standard error as
//! `ERROR <exit code>: <message>`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::exponents::{net_exponent, Ratios, Variant};
use crate::sparse_lab::{estimate_transition, monte_carlo_sweep, Amplitude, SweepConfig};
use crate::thresholds::{equivalence_at, threshold_curve, weak_threshold, NET_TOL, THRESHOLD_TOL};

/// Alphas accepted on the command line.
pub const ALPHA_RANGE: (f64, f64) = (0.02, 0.98);
pub const THREADS_ENV: &str = "POLYTHRESH_THREADS";

const THRESHOLD_COLUMNS: &str = "\
Columns:
  alpha     undersampling ratio m/n
  beta_w    weak threshold k/n solving the threshold equation
  residual  threshold equation left side minus 1";

const EXPONENT_COLUMNS: &str = "\
Columns:
  alpha, beta  ratios m/n and k/n
  psi_com      combinatorial exponent
  psi_int      internal-angle exponent (numeric saddle point)
  psi_ext      external-angle exponent (numeric minimization)
  psi_net      psi_com - psi_int - psi_ext
  s_root       internal-angle saddle point
  y_min        external-angle minimizer";

const VERIFY_COLUMNS: &str = "\
Columns:
  alpha       undersampling ratio m/n
  beta_w      weak threshold from the closed-form equation
  psi_net     numeric net exponent at (alpha, beta_w)
  s_root_gap  |numeric saddle point - sqrt(2) erfinv(t)|
  y_min_gap   |numeric external minimizer - erfinv(t)|
  int_gap     |closed-form - numeric internal exponent|
  ext_gap     |closed-form - numeric external exponent|
  pass        true when |psi_net| <= tol-net and every gap <= 1e-8";

const CURVE_COLUMNS: &str = "\
Columns:
  alpha     undersampling ratio m/n
  beta_w    weak threshold k/n (empty when the point failed)
  rho_w     beta_w / alpha
  residual  threshold equation left side minus 1
  status    ok, or the failure kind for this point";

const MC_COLUMNS: &str = "\
Columns:
  record       cell | beta_w | beta_hat_50
  alpha        undersampling ratio m/n
  beta         cell: realized k/n; beta_w: analytic threshold;
               beta_hat_50: interpolated 50% success crossing (empty if not bracketed)
  k            nonzeros per signal (cell rows)
  trials       trials in the cell
  successes    exact recoveries
  rate         successes / trials
  m            measurements per instance
  beta_frac    cell: requested multiple of beta_w; beta_hat_50: beta_hat_50 / beta_w
  lp_failures  trials whose LP stopped short of optimality (counted as failures)";

#[derive(Debug, Parser)]
#[command(
    name = "polythresh",
    version,
    about = "Weak recovery thresholds for l1 minimization",
    after_help = "Environment:\n  POLYTHRESH_THREADS  cap on worker threads"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write the table here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    General,
    Nonnegative,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::General => Variant::General,
            VariantArg::Nonnegative => Variant::Nonnegative,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Weak threshold beta_w(alpha) from the closed-form equation.
    #[command(after_help = THRESHOLD_COLUMNS)]
    Threshold {
        #[command(flatten)]
        alphas: AlphaArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::General)]
        variant: VariantArg,
        /// Bound on |lhs - 1|.
        #[arg(long, default_value_t = THRESHOLD_TOL)]
        tol: f64,
    },
    /// Numeric exponent breakdown at one (alpha, beta).
    #[command(after_help = EXPONENT_COLUMNS)]
    Exponents {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value_t = VariantArg::General)]
        variant: VariantArg,
    },
    /// Check that the numeric net exponent vanishes at the closed-form threshold.
    #[command(after_help = VERIFY_COLUMNS)]
    Verify {
        #[command(flatten)]
        alphas: AlphaArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::General)]
        variant: VariantArg,
        #[arg(long, default_value_t = NET_TOL)]
        tol_net: f64,
    },
    /// Threshold curve over an alpha grid; failed points are reported per row.
    #[command(after_help = CURVE_COLUMNS)]
    Curve {
        #[command(flatten)]
        alphas: AlphaArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::General)]
        variant: VariantArg,
    },
    /// Monte Carlo basis-pursuit recovery rates around the threshold.
    #[command(after_help = MC_COLUMNS)]
    Mc(McArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct AlphaArgs {
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Inclusive grid start:stop:step.
    #[arg(long)]
    alpha_grid: Option<String>,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    alphas: AlphaArgs,
    /// Sparsity levels as multiples of beta_w, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    beta_fracs: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::General)]
    variant: VariantArg,
    /// `gaussian` for |N(0,1)| magnitudes or a positive constant magnitude.
    #[arg(long, default_value = "gaussian")]
    amplitude: String,
    /// Relative sup-norm tolerance for counting a recovery as exact.
    #[arg(long, default_value_t = crate::sparse_lab::DEFAULT_SUCCESS_TOL)]
    success_tol: f64,
    /// Worker threads (capped by POLYTHRESH_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

/// Table value.
#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Num(x) => format_sig(*x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

struct Table {
    columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &'static [&'static str]) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.columns.join(",");
                s.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&line.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("serializable rows");
                s.push('\n');
                s
            }
        }
    }
}

/// Formats `x` with 12 significant digits in the style of C's `%.12g`.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses `start:stop:step`, inclusive of `stop` within half a step.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(Error::domain(format!(
            "grid `{text}` is not start:stop:step"
        )));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::domain(format!("bad number `{s}` in grid `{text}`")))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
        return Err(Error::domain(format!(
            "grid `{text}` needs a positive finite step"
        )));
    }
    if stop < start {
        return Err(Error::domain(format!("grid `{text}` has stop < start")));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize;
    if count > 1_000_000 {
        return Err(Error::domain(format!("grid `{text}` is too large")));
    }
    Ok((0..=count)
        .map(|i| {
            let x = start + i as f64 * step;
            // strip accumulated representation error
            (x * 1e12).round() / 1e12
        })
        .collect())
}

fn resolve_alphas(args: &AlphaArgs) -> Result<Vec<f64>> {
    let alphas = match (&args.alpha, &args.alpha_grid) {
        (Some(list), None) => list.clone(),
        (None, Some(grid)) => parse_grid(grid)?,
        _ => return Err(Error::domain("give exactly one of --alpha or --alpha-grid")),
    };
    for &a in &alphas {
        check_alpha(a)?;
    }
    Ok(alphas)
}

fn check_alpha(a: f64) -> Result<()> {
    let (lo, hi) = ALPHA_RANGE;
    if !(lo..=hi).contains(&a) {
        return Err(Error::domain(format!("alpha = {a} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_tol(name: &str, tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::domain(format!("{name} must be positive, got {tol}")));
    }
    Ok(())
}

fn parse_amplitude(s: &str) -> Result<Amplitude> {
    if s.eq_ignore_ascii_case("gaussian") {
        return Ok(Amplitude::Gaussian);
    }
    match s.parse::<f64>() {
        Ok(c) if c > 0.0 && c.is_finite() => Ok(Amplitude::Constant(c)),
        _ => Err(Error::domain(format!(
            "amplitude `{s}` is neither `gaussian` nor a positive number"
        ))),
    }
}

/// Worker count: the requested count (or all cores) capped by the
/// environment variable.
fn effective_threads(requested: Option<usize>) -> Result<Option<usize>> {
    let cap = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| {
                    Error::domain(format!("{THREADS_ENV} = `{v}` is not a positive integer"))
                })?,
        ),
        Err(_) => None,
    };
    if requested == Some(0) {
        return Err(Error::domain("--threads must be positive"));
    }
    Ok(match (requested, cap) {
        (Some(r), Some(c)) => Some(r.min(c)),
        (Some(r), None) => Some(r),
        (None, Some(c)) => {
            let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
            Some(cores.min(c))
        }
        (None, None) => None,
    })
}

/// Failure kind for a per-row status column.
fn failure_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Convergence { .. } => "convergence",
        Error::NoSignChange { .. } => "no_sign_change",
        Error::MultipleSignChanges { .. } => "multiple_sign_changes",
        Error::MultipleRoots { .. } => "multiple_roots",
        Error::Equivalence(_) => "equivalence",
        Error::NotBracketed { .. } => "not_bracketed",
        Error::Lp(_) => "lp",
    }
}

/// A table plus an optional failure to report after it has been written.
struct Outcome {
    table: Table,
    failure: Option<Error>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome {
            table,
            failure: None,
        }
    }
}

fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Threshold {
            alphas,
            variant,
            tol,
        } => {
            check_tol("tol", *tol)?;
            let mut t = Table::new(&["alpha", "beta_w", "residual"]);
            for a in resolve_alphas(alphas)? {
                let p = weak_threshold(a, (*variant).into(), *tol)?;
                t.push(vec![
                    Cell::Num(p.alpha),
                    Cell::Num(p.beta_w),
                    Cell::Num(p.residual),
                ]);
            }
            Ok(t.into())
        }
        Command::Exponents {
            alpha,
            beta,
            variant,
        } => {
            check_alpha(*alpha)?;
            let b = net_exponent(&Ratios::new(*alpha, *beta)?, (*variant).into())?;
            let mut t = Table::new(&[
                "alpha", "beta", "psi_com", "psi_int", "psi_ext", "psi_net", "s_root", "y_min",
            ]);
            t.push(
                [
                    b.alpha, b.beta, b.psi_com, b.psi_int, b.psi_ext, b.psi_net, b.s_root, b.y_min,
                ]
                .into_iter()
                .map(Cell::Num)
                .collect(),
            );
            Ok(t.into())
        }
        Command::Verify {
            alphas,
            variant,
            tol_net,
        } => {
            check_tol("tol-net", *tol_net)?;
            let v: Variant = (*variant).into();
            let mut t = Table::new(&[
                "alpha",
                "beta_w",
                "psi_net",
                "s_root_gap",
                "y_min_gap",
                "int_gap",
                "ext_gap",
                "pass",
            ]);
            let mut failed = Vec::new();
            for a in resolve_alphas(alphas)? {
                let rep = equivalence_at(weak_threshold(a, v, THRESHOLD_TOL)?)?;
                let pass = rep.passes(*tol_net);
                t.push(vec![
                    Cell::Num(a),
                    Cell::Num(rep.point.beta_w),
                    Cell::Num(rep.psi_net_at_threshold),
                    Cell::Num(rep.s_root_gap),
                    Cell::Num(rep.y_min_gap),
                    Cell::Num(rep.closed_vs_numeric_int),
                    Cell::Num(rep.closed_vs_numeric_ext),
                    Cell::Bool(pass),
                ]);
                if !pass {
                    failed.push(rep);
                }
            }
            let failure = failed
                .into_iter()
                .next()
                .map(|r| Error::Equivalence(Box::new(r)));
            Ok(Outcome { table: t, failure })
        }
        Command::Curve { alphas, variant } => {
            let alphas = resolve_alphas(alphas)?;
            let points = threshold_curve(&alphas, (*variant).into())?;
            let mut t = Table::new(&["alpha", "beta_w", "rho_w", "residual", "status"]);
            let mut failure = None;
            for (a, p) in alphas.iter().zip(points) {
                match p {
                    Ok(p) => t.push(vec![
                        Cell::Num(a.to_owned()),
                        Cell::Num(p.beta_w),
                        Cell::Num(p.beta_w / p.alpha),
                        Cell::Num(p.residual),
                        Cell::Text("ok".into()),
                    ]),
                    Err(e) => {
                        t.push(vec![
                            Cell::Num(a.to_owned()),
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Text(failure_kind(&e).into()),
                        ]);
                        failure.get_or_insert(e);
                    }
                }
            }
            Ok(Outcome { table: t, failure })
        }
        Command::Mc(args) => run_mc(args).map(Outcome::from),
    }
}

fn run_mc(args: &McArgs) -> Result<Table> {
    check_tol("success-tol", args.success_tol)?;
    let mut config = SweepConfig::new(
        args.n,
        resolve_alphas(&args.alphas)?,
        args.beta_fracs.clone(),
        args.trials,
        args.variant.into(),
        args.seed,
    );
    config.amplitude = parse_amplitude(&args.amplitude)?;
    config.tolerances.success_tol = args.success_tol;
    config.threads = effective_threads(args.threads)?;
    let sweep = monte_carlo_sweep(&config)?;

    let mut t = Table::new(&[
        "record",
        "alpha",
        "beta",
        "k",
        "trials",
        "successes",
        "rate",
        "m",
        "beta_frac",
        "lp_failures",
    ]);
    for c in &sweep.cells {
        t.push(vec![
            Cell::Text("cell".into()),
            Cell::Num(c.alpha),
            Cell::Num(c.beta),
            Cell::Int(c.k as u64),
            Cell::Int(c.trials as u64),
            Cell::Int(c.successes as u64),
            Cell::Num(c.rate()),
            Cell::Int(c.m as u64),
            Cell::Num(c.beta_frac),
            Cell::Int(c.lp_failures as u64),
        ]);
    }
    let blank = |n: usize| std::iter::repeat_n(Cell::Empty, n);
    for &(alpha, beta_w) in &sweep.analytic_beta_w {
        let mut row = vec![
            Cell::Text("beta_w".into()),
            Cell::Num(alpha),
            Cell::Num(beta_w),
        ];
        row.extend(blank(7));
        t.push(row);
        let (hat, frac) = match estimate_transition(&sweep, alpha) {
            Ok(b) => (Cell::Num(b), Cell::Num(b / beta_w)),
            Err(Error::NotBracketed { .. }) | Err(Error::Domain(_)) => (Cell::Empty, Cell::Empty),
            Err(e) => return Err(e),
        };
        let mut row = vec![Cell::Text("beta_hat_50".into()), Cell::Num(alpha), hat];
        row.extend(blank(5));
        row.push(frac);
        row.push(Cell::Empty);
        t.push(row);
    }
    Ok(t)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_domain() {
        1
    } else {
        2
    }
}

fn report(err: &mut dyn Write, code: i32, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(err, "ERROR {code}: {msg}");
    code
}

/// Runs the CLI with explicit output streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => report(err, 1, e.render().to_string().trim_end()),
            };
        }
    };

    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => return report(err, exit_code(&e), &e),
    };
    let text = outcome.table.render(cli.format);
    let written = match &cli.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            w.write_all(text.as_bytes())?;
            w.flush()
        }),
        None => out.write_all(text.as_bytes()).and_then(|_| out.flush()),
    };
    if let Err(e) = written {
        return report(err, 1, format!("cannot write output: {e}"));
    }
    match outcome.failure {
        Some(e) => report(err, exit_code(&e), &e),
        None => 0,
    }
}

/// Runs the CLI against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    run_with(argv, &mut out, &mut err)
}
