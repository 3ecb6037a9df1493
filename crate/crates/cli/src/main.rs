//! `quadcvx`: convexity analysis of quadratic map images from the command line.

mod commands;
mod report;
mod scenarios;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use commands::{exit, Outcome, ZMaxArgs};
use quadcvx::linalg::ToleranceConfig;
use report::AnalysisReport;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "quadcvx", version, about = "Convexity analysis of images of real and complex quadratic maps")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Relative eigenvalue threshold for rank decisions.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Feasibility tolerance of the SDP solver.
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    /// Random seed for sampling commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a map file: dimensions, Hermiticity, triviality of b, definiteness.
    Validate { map: PathBuf },
    /// Search for an infeasibility certificate of a point.
    /// Exit 0: no certificate, 3: certified infeasible, 2: indeterminate.
    Feasible {
        map: PathBuf,
        /// Point to test, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<String>,
        /// Test N random image points instead; none may be certified.
        #[arg(long, value_name = "N")]
        self_check: Option<usize>,
    },
    /// Farthest point of the convex hull from y along d (exit 4 if unbounded).
    Boundary(RayArgs),
    /// Supporting hyperplane at the boundary point from y along d (exit 4 if unbounded).
    Support(RayArgs),
    /// Stochastic search for a nonconvexity certificate.
    Certify {
        map: PathBuf,
        /// Number of sampled directions.
        #[arg(long, default_value_t = 100)]
        iters: usize,
    },
    /// Maximal convex cut level z_max (exit 5 if b is trivial).
    Zmax {
        map: PathBuf,
        /// Definite direction c+, comma separated; searched for when omitted.
        #[arg(long, allow_hyphen_values = true)]
        cplus: Option<String>,
        /// Number of sampled SDP directions.
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        /// Initial incumbent, reported for comparison.
        #[arg(long, allow_hyphen_values = true)]
        zguess: Option<f64>,
    },
    /// Boundary of a two-dimensional slice of the convex hull, as CSV.
    SweepSection {
        map: PathBuf,
        /// Fixed coordinate K=VALUE with 1-based K; repeat for each fixed coordinate.
        #[arg(long = "fix", value_name = "K=VALUE", allow_hyphen_values = true)]
        fix: Vec<String>,
        /// Number of equally spaced rays.
        #[arg(long, default_value_t = 360)]
        rays: usize,
        /// Write the CSV here instead of standard output.
        #[arg(long, value_name = "PATH")]
        csv_out: Option<PathBuf>,
    },
    /// Run a bundled example against its expected results (exit 6 on mismatch).
    RunExample { id: u8 },
}

#[derive(Args, Debug)]
struct RayArgs {
    map: PathBuf,
    /// Base point, comma separated; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Direction, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    d: String,
}

fn tolerances(g: &GlobalOpts) -> Result<ToleranceConfig> {
    let mut tol = ToleranceConfig::default();
    if let Some(r) = g.tol_rank {
        if !(r > 0.0 && r < 1.0) {
            bail!("--tol-rank must lie in (0, 1)");
        }
        tol.rank = r;
    }
    if let Some(f) = g.tol_feas {
        if !(f > 0.0 && f < 1.0) {
            bail!("--tol-feas must lie in (0, 1)");
        }
        tol.feas = f;
    }
    Ok(tol)
}

/// Parses a ray's base point and direction, rejecting a zero direction.
fn ray(args: &RayArgs, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let y = match &args.y {
        Some(s) => commands::parse_vector(s)?,
        None => vec![0.0; m],
    };
    let d = commands::parse_vector(&args.d)?;
    if d.iter().all(|v| *v == 0.0) {
        bail!("direction d must be nonzero");
    }
    Ok((y, d))
}

/// Runs the command; the optional string is CSV for standard output.
fn dispatch(cli: &Cli, tol: &ToleranceConfig) -> Result<(Outcome, Option<String>)> {
    let seed = cli.global.seed;
    let out = match &cli.command {
        Command::Validate { map } => {
            let (map, file) = commands::load_map(map, tol)?;
            commands::validate(&map, &file, tol)?
        }
        Command::Feasible { map, y0, self_check } => {
            let (map, _) = commands::load_map(map, tol)?;
            match (y0, self_check) {
                (_, Some(n)) => commands::self_check(&map, *n, seed.unwrap_or(0), tol)?,
                (Some(y), None) => commands::feasible(&map, &commands::parse_vector(y)?, tol)?,
                (None, None) => bail!("pass --y0 or --self-check"),
            }
        }
        Command::Boundary(args) => {
            let (map, _) = commands::load_map(&args.map, tol)?;
            let (y, d) = ray(args, map.m())?;
            commands::boundary(&map, &y, &d, tol)?
        }
        Command::Support(args) => {
            let (map, _) = commands::load_map(&args.map, tol)?;
            let (y, d) = ray(args, map.m())?;
            commands::support(&map, &y, &d, tol)?
        }
        Command::Certify { map, iters } => {
            let (map, _) = commands::load_map(map, tol)?;
            commands::certify(&map, seed.unwrap_or(0), *iters, tol)?
        }
        Command::Zmax { map, cplus, restarts, zguess } => {
            let (map, _) = commands::load_map(map, tol)?;
            let args = ZMaxArgs {
                c_plus: cplus.as_deref().map(commands::parse_vector).transpose()?,
                seed: seed.unwrap_or(0),
                restarts: *restarts,
                z_guess: *zguess,
            };
            commands::zmax(&map, &args, tol)?
        }
        Command::SweepSection { map, fix, rays, csv_out } => {
            let (map, _) = commands::load_map(map, tol)?;
            let fixed: Vec<(usize, f64)> = fix.iter().map(|s| commands::parse_fix(s)).collect::<Result<_>>()?;
            let (out, csv) = commands::sweep(&map, &fixed, *rays, tol)?;
            match csv_out {
                Some(path) => {
                    std::fs::write(path, csv)?;
                    return Ok((out, None));
                }
                None => return Ok((out, Some(csv))),
            }
        }
        Command::RunExample { id } => scenarios::run_example(*id, seed, tol)?,
    };
    Ok((out, None))
}

fn run(cli: Cli, start: Instant) -> Result<i32> {
    let tol = tolerances(&cli.global)?;
    let (out, csv) = dispatch(&cli, &tol)?;
    let report = AnalysisReport {
        command: std::env::args().skip(1).collect(),
        map_fingerprint: out.fingerprint,
        seed: out.seed,
        tolerances: tol,
        status: out.status,
        exit_code: out.code,
        result: out.result,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let json = report.to_json();
    if let Some(path) = &cli.global.json_out {
        std::fs::write(path, format!("{json}\n"))?;
    }
    let text = match csv {
        Some(csv) => csv,
        None => format!("{json}\n"),
    };
    let mut stdout = std::io::stdout().lock();
    // A closed reader (for example `| head`) is not an error of the analysis.
    if let Err(err) = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        if err.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(err.into());
        }
    }
    Ok(out.code)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { exit::INPUT } else { exit::OK };
            let _ = err.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli, start) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit::INPUT as u8)
        }
    }
}
