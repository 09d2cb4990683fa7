//! `disktri`: side-length statistics of random triangles in a disk.
//!
//! Exit codes: 0 success, 1 computation or verification failure, 2 usage
//! error.

mod output;

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use disktri::charfun::{self, CharFunArgs, CharFunRoute};
use disktri::densities::{pair_density, side_density};
use disktri::domain::{classify_region, Radius, RegionTag};
use disktri::error::Error;
use disktri::moments::{self, reference, MomentReport};
use disktri::montecarlo::estimate_moments;
use disktri::verify::{self, Level};

use output::{open_output, Cell, Format, Table};

#[derive(Parser)]
#[command(name = "disktri", version, about = "Side lengths of uniform random triangles in a disk")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Disk radius.
    #[arg(long, global = true, default_value_t = 1.0)]
    radius: f64,
    /// Tolerance used to flag records; each command has its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic moments of the side lengths.
    Moments,
    /// Univariate or bivariate side density at a point or on a grid.
    Density(DensityArgs),
    /// Characteristic function of a^2, or of (a^2, b^2) when --s is given.
    Charfun(CharfunArgs),
    /// Monte Carlo estimates with standard errors.
    Mc(McArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Uni,
    Biv,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    y: Option<f64>,
    /// Write an N-point (uni) or N x N (biv) grid over [0, 2R] as CSV.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum RouteArg {
    Closed,
    Density,
    DoubleIntegral,
    All,
}

#[derive(Args)]
struct CharfunArgs {
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    #[arg(long, value_enum, default_value_t = RouteArg::Closed)]
    route: RouteArg,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    chunks: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
    level: LevelArg,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Range(_) | Error::Domain(_) | Error::Argument(_) => Failure::Usage(e.to_string()),
            other => Failure::Compute(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(format!("write failed: {e}"))
    }
}

/// A finished command: its table and whether every record was in
/// tolerance.
struct Outcome {
    table: Table,
    ok: bool,
    /// Forced CSV regardless of `--format`.
    csv_only: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let g = &cli.global;
    let radius = Radius::new(g.radius).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(t) = g.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let outcome = match &cli.command {
        Command::Moments => cmd_moments(radius, g.tol.unwrap_or(1e-7))?,
        Command::Density(a) => cmd_density(radius, a)?,
        Command::Charfun(a) => cmd_charfun(radius, a, g.tol.unwrap_or(1e-8))?,
        Command::Mc(a) => cmd_mc(radius, a)?,
        Command::Verify(a) => cmd_verify(a)?,
    };
    let format = if outcome.csv_only { Format::Csv } else { g.format };
    let mut out = open_output(g.output.as_deref())?;
    outcome.table.write(format, &mut out)?;
    out.flush()?;
    Ok(outcome.ok)
}

fn cmd_moments(r: Radius, tol: f64) -> Result<Outcome, Failure> {
    let mut table = Table::new(&[
        ("quantity", "quantity"),
        ("value", "value"),
        ("route", "route"),
        ("err_estimate", "err_estimate"),
        ("reference_value", "reference"),
        ("abs_deviation", "deviation"),
    ]);
    let reports = moments::all_reports(r).map_err(|e| Failure::Compute(format!("moments: {e}")))?;
    let mut ok = true;
    for rep in &reports {
        ok &= rep.within(tol * reference_scale(rep));
        table.push(vec![
            rep.quantity.as_str().into(),
            rep.value.into(),
            rep.route.as_str().into(),
            rep.err_estimate.into(),
            rep.reference_value.into(),
            rep.deviation().into(),
        ]);
    }
    Ok(Outcome {
        table,
        ok,
        csv_only: false,
    })
}

/// Tolerances are relative to the size of the reference value once it
/// exceeds one.
fn reference_scale(rep: &MomentReport) -> f64 {
    rep.reference_value.map_or(1.0, |v| v.abs().max(1.0))
}

fn linspace(n: usize, hi: f64) -> Vec<f64> {
    (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
}

fn cmd_density(r: Radius, a: &DensityArgs) -> Result<Outcome, Failure> {
    let two_r = 2.0 * r.get();
    if let Some(n) = a.grid {
        if n < 2 {
            return Err(Failure::Usage(format!("--grid needs at least 2 points, got {n}")));
        }
        let xs = linspace(n, two_r);
        let table = match a.kind {
            Kind::Uni => {
                let mut t = Table::plain(&["x", "f"]);
                for &x in &xs {
                    t.push(vec![x.into(), side_density(x, r).into()]);
                }
                t
            }
            Kind::Biv => {
                let mut t = Table::plain(&["x", "y", "f"]);
                for &x in &xs {
                    for &y in &xs {
                        t.push(vec![x.into(), y.into(), pair_density(x, y, r)?.into()]);
                    }
                }
                t
            }
        };
        return Ok(Outcome {
            table,
            ok: true,
            csv_only: true,
        });
    }
    let x = a.x.ok_or_else(|| Failure::Usage("density needs --x or --grid".into()))?;
    let (table, ok) = match a.kind {
        Kind::Uni => {
            let mut t = Table::plain(&["kind", "x", "f", "warning"]);
            let outside = !(0.0..=two_r).contains(&x);
            t.push(vec!["uni".into(), x.into(), side_density(x, r).into(), warning(outside)]);
            (t, true)
        }
        Kind::Biv => {
            let y = a.y.ok_or_else(|| Failure::Usage("--kind biv needs --y or --grid".into()))?;
            let mut t = Table::plain(&["kind", "x", "y", "f", "warning"]);
            let outside = classify_region(x, y, r) == RegionTag::OutOfSupport;
            t.push(vec!["biv".into(), x.into(), y.into(), pair_density(x, y, r)?.into(), warning(outside)]);
            (t, true)
        }
    };
    Ok(Outcome {
        table,
        ok,
        csv_only: false,
    })
}

fn warning(outside: bool) -> Cell {
    if outside {
        "outside support".into()
    } else {
        Cell::Null
    }
}

fn cmd_charfun(r: Radius, a: &CharfunArgs, tol: f64) -> Result<Outcome, Failure> {
    // E exp(i t a^2) at radius R is the unit-radius function at t R^2
    let r2 = r.get() * r.get();
    let mut table = Table::plain(&["t", "s", "route", "re", "im", "err_estimate", "max_pairwise_deviation"]);
    if let Some(s) = a.s {
        let args = CharFunArgs::new(s * r2, a.t * r2)?;
        let v = charfun::charfun_pair(args, &charfun::pair_spec())?;
        table.push(vec![
            a.t.into(),
            s.into(),
            "triple_integral".into(),
            v.value.re.into(),
            v.value.im.into(),
            v.err_estimate.into(),
            Cell::Null,
        ]);
        return Ok(Outcome {
            table,
            ok: true,
            csv_only: false,
        });
    }
    let routes: Vec<CharFunRoute> = match a.route {
        RouteArg::Closed => vec![CharFunRoute::Closed],
        RouteArg::Density => vec![CharFunRoute::Density],
        RouteArg::DoubleIntegral => vec![CharFunRoute::DoubleIntegral],
        RouteArg::All => CharFunRoute::ALL.to_vec(),
    };
    let mut values = Vec::new();
    for route in routes {
        let v = charfun::charfun_a2(a.t * r2, route)?;
        values.push(v.value);
        table.push(vec![
            a.t.into(),
            Cell::Null,
            route.as_str().into(),
            v.value.re.into(),
            v.value.im.into(),
            v.err_estimate.into(),
            Cell::Null,
        ]);
    }
    let mut ok = true;
    if a.route == RouteArg::All {
        let dev = charfun::max_pairwise_deviation(&values);
        ok = dev <= tol;
        table.push(vec![
            a.t.into(),
            Cell::Null,
            "all".into(),
            Cell::Null,
            Cell::Null,
            Cell::Null,
            dev.into(),
        ]);
    }
    Ok(Outcome {
        table,
        ok,
        csv_only: false,
    })
}

fn cmd_mc(r: Radius, a: &McArgs) -> Result<Outcome, Failure> {
    if a.samples < 2 {
        return Err(Failure::Usage(format!("--samples must be at least 2, got {}", a.samples)));
    }
    if a.chunks == 0 {
        return Err(Failure::Usage("--chunks must be at least 1".into()));
    }
    let est = estimate_moments(a.samples, a.seed, a.chunks, r)?;
    let rr = r.get();
    let ea = 128.0 / (45.0 * PI);
    let targets = [
        ea * rr,
        rr * rr,
        reference::E_AB * rr * rr,
        3.0 * ea * rr,
        reference::VAR_PERIMETER * rr * rr,
        reference::E_A2B2 * rr.powi(4),
        reference::CORR_AB,
    ];
    let mut table = Table::plain(&["quantity", "value", "std_error", "reference", "z", "samples", "seed", "chunks"]);
    for ((name, e), target) in est.entries().into_iter().zip(targets) {
        table.push(vec![
            name.into(),
            e.value.into(),
            e.std_error.into(),
            target.into(),
            e.z_score(target).into(),
            est.n.into(),
            est.seed.into(),
            (est.chunks as u64).into(),
        ]);
    }
    Ok(Outcome {
        table,
        ok: true,
        csv_only: false,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let level = match a.level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let mut table = Table::plain(&["id", "name", "passed", "label", "deviation", "tolerance", "error"]);
    let mut failed = Vec::new();
    for c in verify::criteria() {
        let out = c.run(level);
        eprintln!("{}", out.summary_line());
        if !out.passed {
            failed.push(format!("{} {}", out.id, out.name));
        }
        let worst = out.worst();
        table.push(vec![
            u64::from(out.id).into(),
            out.name.into(),
            out.passed.into(),
            worst.map_or(Cell::Null, |m| m.label.as_str().into()),
            worst.map(|m| m.deviation).into(),
            worst.map(|m| m.tolerance).into(),
            out.error.clone().map_or(Cell::Null, Cell::from),
        ]);
    }
    if failed.is_empty() {
        eprintln!("verify: all {} checks passed", table.len());
    } else {
        eprintln!("verify: failed checks: {}", failed.join("; "));
    }
    Ok(Outcome {
        table,
        ok: failed.is_empty(),
        csv_only: false,
    })
}
