//! `cyclecap`: exact and asymptotic statistics of permutations with
//! bounded cycle lengths, as JSON or CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyclecap::exact::{big_ln, count_exact_with, exact_cycle_count_distribution_with};
use cyclecap::sample::run_clt_experiment_with;
use cyclecap::{
    expand_m, expand_v, ks_exact_vs_normal, moments, regime_check, saddle_point_count_approx,
    solve_saddle, Constraint, CycleError, Limits,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cyclecap",
    version,
    about = "Permutations whose cycles are all at most alpha long"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact |S_{n,alpha}|.
    Count(Options),
    /// Exact distribution of the number of cycles.
    Dist(Options),
    /// Saddle point x(w) and its derivatives.
    Saddle(Options),
    /// Predicted mean m and variance v of the number of cycles.
    Moments(Options),
    /// Asymptotic expansions of m and v.
    Expand(Options),
    /// Standardized cycle counts of seeded uniform draws.
    Sample(Options),
    /// Kolmogorov-Smirnov distance of the standardized count to the normal law.
    VerifyClt(Options),
    /// Growth-condition report.
    CheckGrowth(Options),
    /// Saddle-point log-count against the exact log-count.
    CheckApprox(Options),
}

#[derive(Args)]
struct Options {
    #[arg(long)]
    n: usize,
    /// An integer, or `n^a` for ceil(n^a) with 0 < a < 1.
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_order: Option<usize>,
    /// Use the exact distribution instead of sampling (verify-clt).
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum Failure {
    Cycle(CycleError),
    Io(String),
}

impl From<CycleError> for Failure {
    fn from(e: CycleError) -> Self {
        Failure::Cycle(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn parse_alpha(n: usize, raw: &str) -> cyclecap::Result<Constraint> {
    let raw = raw.trim();
    if let Some(exp) = raw.strip_prefix("n^") {
        let a: f64 = exp
            .parse()
            .map_err(|_| CycleError::Domain(format!("cannot parse exponent in alpha = {raw:?}")))?;
        return Constraint::with_exponent(n, a);
    }
    let alpha: usize = raw.parse().map_err(|_| {
        CycleError::Domain(format!("alpha = {raw:?} is neither an integer nor n^a"))
    })?;
    Constraint::new(n, alpha)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("output types serialize");
    s.push('\n');
    s
}

/// One header row and one data row.
fn csv_row(header: &[&str], values: &[String]) -> String {
    format!("{}\n{}\n", header.join(","), values.join(","))
}

#[derive(Serialize)]
struct CountOut {
    n: usize,
    alpha: usize,
    count: String,
}

fn cmd_count(c: &Constraint, limits: &Limits, format: Format) -> CliResult<String> {
    let count = count_exact_with(c, limits)?.to_str_radix(10);
    Ok(match format {
        Format::Json => json(&CountOut {
            n: c.n(),
            alpha: c.alpha(),
            count,
        }),
        Format::Csv => csv_row(
            &["n", "alpha", "count"],
            &[c.n().to_string(), c.alpha().to_string(), count],
        ),
    })
}

fn cmd_dist(c: &Constraint, limits: &Limits, format: Format) -> CliResult<String> {
    let d = exact_cycle_count_distribution_with(c, limits)?;
    Ok(match format {
        Format::Json => json(&d),
        Format::Csv => {
            let mut out = String::from("cycles,probability\n");
            for (k, p) in d.iter() {
                writeln!(out, "{k},{p}").unwrap();
            }
            out
        }
    })
}

fn cmd_saddle(c: &Constraint, w: f64, format: Format) -> CliResult<String> {
    let s = solve_saddle::<f64>(c, w)?;
    Ok(match format {
        Format::Json => json(&s),
        Format::Csv => csv_row(
            &[
                "n",
                "alpha",
                "w",
                "x",
                "log_x",
                "x_prime",
                "x_double_prime",
                "x_double_prime_numeric",
                "residual",
            ],
            &[
                c.n().to_string(),
                c.alpha().to_string(),
                s.w.to_string(),
                s.x.to_string(),
                s.log_x.to_string(),
                s.x_prime.to_string(),
                s.x_double_prime.to_string(),
                s.x_double_prime_numeric.to_string(),
                s.residual.to_string(),
            ],
        ),
    })
}

fn cmd_moments(c: &Constraint, format: Format) -> CliResult<String> {
    let p = moments::<f64>(c)?;
    Ok(match format {
        Format::Json => json(&p),
        Format::Csv => csv_row(&["m", "v"], &[p.m.to_string(), p.v.to_string()]),
    })
}

fn cmd_expand(c: &Constraint, max_order: Option<usize>, format: Format) -> CliResult<String> {
    let m = expand_m::<f64>(c, max_order)?;
    let v = expand_v::<f64>(c, max_order)?;
    Ok(match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                n: usize,
                alpha: usize,
                m: &'a cyclecap::ExpansionF64,
                v: &'a cyclecap::ExpansionF64,
            }
            json(&Out {
                n: c.n(),
                alpha: c.alpha(),
                m: &m,
                v: &v,
            })
        }
        Format::Csv => {
            let mut out = String::from("series,k,term\n");
            for (name, e) in [("m", &m), ("v", &v)] {
                for (i, t) in e.terms.iter().enumerate() {
                    writeln!(out, "{name},{},{t}", e.first_index + i).unwrap();
                }
            }
            out
        }
    })
}

fn cmd_sample(c: &Constraint, o: &Options, limits: &Limits) -> CliResult<String> {
    let pair = moments::<f64>(c)?;
    let table = cyclecap::exact::count_constrained_with(c, limits)?;
    let run = run_clt_experiment_with(&table, pair, o.replicates, o.seed)?;
    Ok(match o.format {
        Format::Json => json(&run.summary()?),
        Format::Csv => run.to_csv(),
    })
}

#[derive(Serialize)]
struct CltOut {
    n: usize,
    alpha: usize,
    mode: &'static str,
    m: f64,
    v: f64,
    ks_distance: f64,
    location_of_max: f64,
    sample_size: cyclecap::stats::SampleSize,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn cmd_verify_clt(c: &Constraint, o: &Options, limits: &Limits) -> CliResult<String> {
    let pair = moments::<f64>(c)?;
    let (mode, ks, seed) = if o.exact {
        let d = exact_cycle_count_distribution_with(c, limits)?;
        ("exact", ks_exact_vs_normal(&d, pair.m, pair.v)?, None)
    } else {
        let table = cyclecap::exact::count_constrained_with(c, limits)?;
        let run = run_clt_experiment_with(&table, pair, o.replicates, o.seed)?;
        ("sampled", run.summary()?.ks, Some(o.seed))
    };
    let out = CltOut {
        n: c.n(),
        alpha: c.alpha(),
        mode,
        m: pair.m,
        v: pair.v,
        ks_distance: ks.distance,
        location_of_max: ks.location_of_max,
        sample_size: ks.sample_size,
        seed,
    };
    Ok(match o.format {
        Format::Json => json(&out),
        Format::Csv => csv_row(
            &[
                "n",
                "alpha",
                "mode",
                "m",
                "v",
                "ks_distance",
                "location_of_max",
            ],
            &[
                out.n.to_string(),
                out.alpha.to_string(),
                mode.to_string(),
                out.m.to_string(),
                out.v.to_string(),
                out.ks_distance.to_string(),
                out.location_of_max.to_string(),
            ],
        ),
    })
}

fn cmd_check_growth(c: &Constraint, format: Format) -> CliResult<String> {
    let r = regime_check(c)?;
    Ok(match format {
        Format::Json => json(&r),
        Format::Csv => csv_row(
            &[
                "n",
                "alpha",
                "lhs",
                "bound",
                "alpha_at_least_four",
                "growth_below_bound",
                "hypothesis_satisfied",
            ],
            &[
                r.n.to_string(),
                r.alpha.to_string(),
                r.lhs.to_string(),
                r.bound.to_string(),
                r.alpha_at_least_four.to_string(),
                r.growth_below_bound.to_string(),
                r.hypothesis_satisfied.to_string(),
            ],
        ),
    })
}

#[derive(Serialize)]
struct ApproxOut {
    n: usize,
    alpha: usize,
    log_count_exact: f64,
    log_count_approx: f64,
    relative_error: f64,
}

fn cmd_check_approx(c: &Constraint, limits: &Limits, format: Format) -> CliResult<String> {
    let approx: f64 = saddle_point_count_approx(c)?;
    let exact = big_ln(&count_exact_with(c, limits)?);
    let out = ApproxOut {
        n: c.n(),
        alpha: c.alpha(),
        log_count_exact: exact,
        log_count_approx: approx,
        relative_error: (approx - exact).abs() / exact.abs(),
    };
    Ok(match format {
        Format::Json => json(&out),
        Format::Csv => csv_row(
            &[
                "n",
                "alpha",
                "log_count_exact",
                "log_count_approx",
                "relative_error",
            ],
            &[
                out.n.to_string(),
                out.alpha.to_string(),
                exact.to_string(),
                approx.to_string(),
                out.relative_error.to_string(),
            ],
        ),
    })
}

fn dispatch(command: &Command) -> CliResult<(String, Option<PathBuf>)> {
    let o = match command {
        Command::Count(o)
        | Command::Dist(o)
        | Command::Saddle(o)
        | Command::Moments(o)
        | Command::Expand(o)
        | Command::Sample(o)
        | Command::VerifyClt(o)
        | Command::CheckGrowth(o)
        | Command::CheckApprox(o) => o,
    };
    let c = parse_alpha(o.n, &o.alpha)?;
    let limits = Limits::from_env()?;
    let body = match command {
        Command::Count(_) => cmd_count(&c, &limits, o.format)?,
        Command::Dist(_) => cmd_dist(&c, &limits, o.format)?,
        Command::Saddle(_) => cmd_saddle(&c, o.w, o.format)?,
        Command::Moments(_) => cmd_moments(&c, o.format)?,
        Command::Expand(_) => cmd_expand(&c, o.max_order, o.format)?,
        Command::Sample(_) => cmd_sample(&c, o, &limits)?,
        Command::VerifyClt(_) => cmd_verify_clt(&c, o, &limits)?,
        Command::CheckGrowth(_) => cmd_check_growth(&c, o.format)?,
        Command::CheckApprox(_) => cmd_check_approx(&c, &limits, o.format)?,
    };
    Ok((body, o.out.clone()))
}

#[derive(Serialize)]
struct ErrorOut<'a> {
    error: &'a str,
    message: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = dispatch(&cli.command).and_then(|(body, out)| match out {
        Some(path) => {
            fs::write(&path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Cycle(e)) => {
            eprint!(
                "{}",
                json(&ErrorOut {
                    error: e.kind(),
                    message: e.to_string()
                })
            );
            // resource caps and numerical breakdowns are not the caller's input errors
            let code = match e {
                CycleError::Resource { .. }
                | CycleError::NoConvergence { .. }
                | CycleError::DerivativeMismatch { .. } => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
        Err(Failure::Io(message)) => {
            eprint!(
                "{}",
                json(&ErrorOut {
                    error: "io",
                    message
                })
            );
            ExitCode::from(1)
        }
    }
}
