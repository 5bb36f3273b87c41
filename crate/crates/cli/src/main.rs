mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use serde_json::json;

use wiretap_core::mimo::DEFAULT_BINS;
use wiretap_core::oracles::{self, OracleConfig};
use wiretap_core::plc::plc_secrecy_capacity_with;
use wiretap_core::{
    circular_capacity, convergence_study, io, positivity, scalar, MimoOptions, MimoWiretapChannel, Result,
};

use output::{print_json, write_csv, write_manifest, RunManifest};

/// Exit code for command-line usage errors.
const USAGE_EXIT: u8 = 64;
/// Exit code when selftest ran but some check failed.
const SELFTEST_FAILED: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "wiretap", version, about = "Secrecy capacity of Gaussian wiretap channels with memory")]
struct Cli {
    /// Worker threads; 1 evaluates bins serially and reproducibly.
    #[arg(long, global = true, env = "WIRETAP_THREADS", default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Closed-form waterfilling for a 1x1x1 channel.
    Scalar(ScalarArgs),
    /// Block-circular MIMO capacity.
    Mimo(MimoArgs),
    /// Capacities along increasing block sizes.
    Converge(ConvergeArgs),
    /// Strict-positivity test on a frequency grid.
    Positivity(PositivityArgs),
    /// Capacity of a periodically time-varying scalar channel.
    Plc(PlcArgs),
    /// Runs the oracle battery.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct ScalarArgs {
    #[arg(long)]
    channel: PathBuf,
    /// Overrides the power in the file.
    #[arg(long)]
    power: Option<f64>,
    #[arg(long, default_value_t = scalar::DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = scalar::DEFAULT_TOL)]
    tol: f64,
    /// CSV with columns omega, alpha_r, alpha_e, c_x.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SolverArgs {
    #[arg(long)]
    power: Option<f64>,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args, Debug)]
struct MimoArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV with columns k, rate_bits, trace.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    bins_list: Vec<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV with columns n, capacity_bits.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PositivityArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = positivity::DEFAULT_GRID)]
    grid: usize,
    /// CSV with columns omega, ratio.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlcArgs {
    #[arg(long)]
    plc: PathBuf,
    /// Number of circular blocks of the block channel.
    #[arg(long, default_value_t = 64)]
    bins: usize,
    /// Multiplies the smallest admissible block size.
    #[arg(long, default_value_t = 1)]
    block_multiplier: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV with columns k, rate_bits, trace.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo samples per estimate.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Serialize)]
struct ScalarRow {
    omega: f64,
    alpha_r: f64,
    alpha_e: f64,
    c_x: f64,
}

#[derive(Serialize)]
struct BinRow {
    k: usize,
    rate_bits: f64,
    trace: f64,
}

#[derive(Serialize)]
struct ConvergeRow {
    n: usize,
    capacity_bits: f64,
}

#[derive(Serialize)]
struct RatioRow {
    omega: f64,
    ratio: f64,
}

fn load_channel(path: &Path, power: Option<f64>) -> Result<MimoWiretapChannel> {
    let ch = io::read_channel(path)?;
    match power {
        Some(p) => ch.with_power(p),
        None => Ok(ch),
    }
}

fn mimo_options(solver: &SolverArgs, threads: usize) -> MimoOptions {
    MimoOptions {
        restarts: solver.restarts,
        seed: solver.seed,
        tol: solver.tol,
        parallel: threads > 1,
        ..Default::default()
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Runs one verb; `Ok(false)` means it finished but a check failed.
fn run(cli: &Cli) -> Result<bool> {
    let start = Instant::now();
    let (manifest, out) = match &cli.verb {
        Verb::Scalar(a) => {
            let ch = load_channel(&a.channel, a.power)?;
            let grid = scalar::snr_densities(&ch, a.grid)?;
            let sol = scalar::waterfill(&grid, ch.power(), a.tol)?;
            let (snr_r, snr_e) = grid.mean_snr(ch.power());
            info!("scalar: capacity {:.6} bits on {} grid points", sol.capacity, a.grid);
            if let Some(out) = &a.out {
                write_csv(
                    out,
                    (0..grid.len()).map(|k| ScalarRow {
                        omega: grid.omegas[k],
                        alpha_r: grid.alpha_r[k],
                        alpha_e: grid.alpha_e[k],
                        c_x: sol.spectrum[k],
                    }),
                )?;
            }
            print_json(&json!({
                "capacity_bits": sol.capacity,
                "mu": sol.mu,
                "power_used": sol.power_used,
                "snr_r_db": db(snr_r),
                "snr_e_db": db(snr_e),
            }));
            let params = json!({"power": ch.power(), "grid": a.grid, "tol": a.tol});
            (RunManifest::new("scalar", Some(&a.channel), params, None), a.out.clone())
        }
        Verb::Mimo(a) => {
            let ch = load_channel(&a.channel, a.solver.power)?;
            let opts = mimo_options(&a.solver, cli.threads);
            let result = circular_capacity(&ch, a.bins, &opts)?;
            info!(
                "mimo: n = {}, {} inner solves, restart spread {:.2e}",
                a.bins, result.diagnostics.inner_solves, result.diagnostics.max_restart_spread
            );
            if let Some(out) = &a.out {
                write_csv(out, bin_rows(&result))?;
            }
            print_json(&json!({
                "capacity_bits": result.capacity,
                "dual_bound_bits": result.dual_bound,
                "n": a.bins,
                "seed": a.solver.seed,
            }));
            let params = json!({"bins": a.bins, "power": ch.power(), "solver": a.solver, "threads": cli.threads});
            (
                RunManifest::new("mimo", Some(&a.channel), params, Some(a.solver.seed)),
                a.out.clone(),
            )
        }
        Verb::Converge(a) => {
            let ch = load_channel(&a.channel, a.solver.power)?;
            let opts = mimo_options(&a.solver, cli.threads);
            let rows = convergence_study(&ch, &a.bins_list, ch.power(), &opts)?;
            for r in &rows {
                info!("converge: n = {} capacity {:.6}", r.n, r.capacity);
            }
            if let Some(out) = &a.out {
                write_csv(
                    out,
                    rows.iter().map(|r| ConvergeRow {
                        n: r.n,
                        capacity_bits: r.capacity,
                    }),
                )?;
            }
            print_json(&json!({
                "rows": rows.iter().map(|r| json!({
                    "n": r.n,
                    "capacity_bits": r.capacity,
                    "dual_bound_bits": r.dual_bound,
                    "difference_bits": r.difference,
                })).collect::<Vec<_>>(),
                "seed": a.solver.seed,
            }));
            let params = json!({"bins_list": a.bins_list, "power": ch.power(), "solver": a.solver, "threads": cli.threads});
            (
                RunManifest::new("converge", Some(&a.channel), params, Some(a.solver.seed)),
                a.out.clone(),
            )
        }
        Verb::Positivity(a) => {
            let ch = load_channel(&a.channel, None)?;
            let report = positivity::positivity_check(&ch, a.grid, None)?;
            info!("positivity: crossings {:?}", report.crossings());
            if let Some(out) = &a.out {
                write_csv(
                    out,
                    report.grid.iter().zip(&report.ratio).map(|(&omega, &ratio)| RatioRow { omega, ratio }),
                )?;
            }
            print_json(&json!({
                "positive": report.verdict,
                "measure_rad": report.positive_measure,
            }));
            let params = json!({"grid": a.grid});
            (RunManifest::new("positivity", Some(&a.channel), params, None), a.out.clone())
        }
        Verb::Plc(a) => {
            let mut plc = io::read_plc(&a.plc)?;
            if let Some(p) = a.solver.power {
                plc.power = p;
                plc.validate()?;
            }
            let opts = mimo_options(&a.solver, cli.threads);
            let result = plc_secrecy_capacity_with(&plc, a.bins, a.block_multiplier, &opts)?;
            info!("plc: block size {}, {} blocks", result.n_tilde, a.bins);
            if let Some(out) = &a.out {
                write_csv(out, bin_rows(&result.block))?;
            }
            let per_use = |v: f64| v / result.n_tilde as f64;
            print_json(&json!({
                "capacity_bits": result.capacity,
                "dual_bound_bits": result.block.dual_bound.map(per_use),
                "n": a.bins,
                "n_tilde": result.n_tilde,
                "seed": a.solver.seed,
            }));
            let params = json!({
                "bins": a.bins,
                "block_multiplier": a.block_multiplier,
                "power": plc.power,
                "solver": a.solver,
                "threads": cli.threads,
            });
            (RunManifest::new("plc", Some(&a.plc), params, Some(a.solver.seed)), a.out.clone())
        }
        Verb::Selftest(a) => {
            let cfg = OracleConfig {
                seed: a.seed,
                samples: a.samples,
                ..Default::default()
            };
            let lines = oracles::selftest(&cfg)?;
            for l in &lines {
                println!("[{}] {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            let failed = lines.iter().filter(|l| !l.passed).count();
            info!("selftest: {} of {} checks passed", lines.len() - failed, lines.len());
            return Ok(failed == 0);
        }
    };
    if let Some(out) = out {
        let mut manifest = manifest;
        manifest.wall_clock_s = start.elapsed().as_secs_f64();
        write_manifest(&out, &manifest)?;
    }
    Ok(true)
}

fn bin_rows(result: &wiretap_core::CapacityResult) -> Vec<BinRow> {
    result
        .per_bin_rates
        .iter()
        .zip(&result.allocation.mats)
        .enumerate()
        .map(|(k, (&rate_bits, q))| BinRow {
            k,
            rate_bits,
            trace: q.trace(),
        })
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE_EXIT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(USAGE_EXIT);
    }
    if cli.threads > 1 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: could not start thread pool: {e}");
            return ExitCode::from(USAGE_EXIT);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(SELFTEST_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
