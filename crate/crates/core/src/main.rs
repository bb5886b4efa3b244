use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use dilute_stokes::audit::{
    a0_discrepancy, b2_profile, check_b1, default_eta_grid, default_test_family,
    pair_correlation_estimate, A0Report, AuditReport, MIN_PAIR_SAMPLES,
};
use dilute_stokes::config::{
    partition_good_bad, radius_for, select_eta, BallConfiguration, DensityField, Domain,
    TraceFreeSymMat, DEFAULT_THETA,
};
use dilute_stokes::experiment::{
    all_succeeded, probe_region, run_sweep, sample_centers, summarize, write_report, CellStatus,
    Plan, ReportFormat,
};
use dilute_stokes::fields::{FlowField, VectorField};
use dilute_stokes::process::{ClusterParams, ProcessKind};
use dilute_stokes::solver::{
    effective_viscosity_estimate, solve_einstein, suspension_velocity, EinsteinModel, Forcing,
    Grid, NormSampler, ReflectionOptions, StokesConvolver,
};
use dilute_stokes::Vec3;

const THREADS_ENV: &str = "DILUTE_STOKES_THREADS";

#[derive(Parser)]
#[command(
    name = "dilute-stokes",
    version,
    about = "Dilute rigid-ball suspensions in Stokes flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a ball configuration.
    Gen(GenArgs),
    /// Audit separation, clustering, limit density and pair correlation.
    Check(CheckArgs),
    /// Solve for the suspension velocity and compare with the effective models.
    Solve(SolveArgs),
    /// Estimate the effective viscosity of a configuration.
    Visc(ViscArgs),
    /// Run an ensemble sweep from a TOML or JSON plan.
    Sweep(SweepArgs),
}

#[derive(Parser)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Volume fraction; sets the radius.
    #[arg(long, conflicts_with = "radius")]
    lambda: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value = "hardcore_poisson")]
    process: ProcessKind,
    /// Hard-core distance in units of the radius.
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.5)]
    pair_fraction: f64,
    #[arg(long, default_value_t = 1e-3)]
    pair_gap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Parser)]
struct CheckArgs {
    /// Configuration JSON files; the first is audited, all are pooled for the pair correlation.
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    #[arg(long)]
    density: Option<PathBuf>,
    /// Separation constant for the B1 check.
    #[arg(long, default_value_t = 3.0)]
    m: f64,
    #[arg(long, default_value_t = 16)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ForcingKind {
    Bump,
    Gaussian,
    Shear,
    Point,
}

impl ForcingKind {
    fn build(self) -> Forcing {
        match self {
            Self::Bump => Forcing::default_bump(),
            Self::Gaussian => Forcing::GaussianBump {
                center: [0.5; 3],
                width: 0.1,
                axis: [0.0, 0.0, 1.0],
            },
            Self::Shear => Forcing::Shear {
                amplitude: 1.0,
                domain: Domain::unit_cube(),
            },
            Self::Point => Forcing::PointSmoothed {
                center: [0.5; 3],
                epsilon: 0.1,
                force: [1.0, 0.0, 0.0],
            },
        }
    }
}

#[derive(Parser)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    density: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bump")]
    forcing: ForcingKind,
    /// Volume fraction of the effective model; defaults to that of the configuration.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, conflicts_with = "theta")]
    eta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 32)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per axis of the probe cube written to the CSV.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 32)]
    strata: usize,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Parser)]
struct ViscArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_sweeps: usize,
    /// Recorded in the output only.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Parser)]
struct SweepArgs {
    plan: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn read_config(path: &Path) -> Result<BallConfiguration> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    BallConfiguration::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_density(path: Option<&Path>, domain: &Domain, grid: usize) -> Result<DensityField> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(DensityField::from_json_str(&text)?)
        }
        None => {
            Ok(DensityField::uniform(domain, grid)
                .context("uniform density needs a cubic domain")?)
        }
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let radius = match (args.lambda, args.radius) {
        (Some(l), None) => radius_for(args.n, l)?,
        (None, Some(r)) => r,
        _ => bail!("exactly one of --lambda and --radius is required"),
    };
    let cluster = Some(ClusterParams {
        pair_fraction: args.pair_fraction,
        pair_gap: args.pair_gap,
    });
    let centers = sample_centers(
        args.process,
        args.n,
        args.separation * radius,
        cluster,
        args.seed,
    )?;
    let config = BallConfiguration::in_unit_cube(centers, radius)?;
    emit(&config.to_json_string()?, args.output.as_deref())
}

fn check(args: CheckArgs) -> Result<()> {
    let configs = args
        .configs
        .iter()
        .map(|p| read_config(p))
        .collect::<Result<Vec<_>>>()?;
    let config = &configs[0];
    let rho = read_density(args.density.as_deref(), config.domain(), args.grid)?;
    let tests = default_test_family(config.domain(), args.seed);
    let pair_correlation = if configs.len() >= MIN_PAIR_SAMPLES {
        let samples: Vec<Vec<Vec3>> = configs.iter().map(|c| c.centers().to_vec()).collect();
        let scale = (config.len() as f64).powf(-1.0 / 3.0);
        let edges: Vec<f64> = (0..=20).map(|k| 0.2 * scale * k as f64).collect();
        pair_correlation_estimate(&samples, config.domain(), &edges)?.bins()
    } else {
        eprintln!(
            "pair correlation skipped: {} of {MIN_PAIR_SAMPLES} samples",
            configs.len()
        );
        Vec::new()
    };
    let report = AuditReport {
        n: config.len(),
        radius: config.radius(),
        lambda: config.volume_fraction(),
        b1: check_b1(config, args.m)?,
        b2_profile: b2_profile(config, &default_eta_grid())?.rows,
        a0: A0Report {
            discrepancy: a0_discrepancy(config, &rho, &tests)?,
            tests: tests.len(),
        },
        pair_correlation,
    };
    emit(
        &serde_json::to_string_pretty(&report)?,
        args.output.as_deref(),
    )
}

fn solve(args: SolveArgs) -> Result<()> {
    let config = read_config(&args.config)?;
    let forcing = args.forcing.build();
    let rho = read_density(args.density.as_deref(), &Domain::unit_cube(), args.grid)?;
    let grid = match args.density {
        Some(_) => Grid::of_density(&rho)?,
        None => Grid::cube(&Domain::unit_cube(), args.grid)?,
    };
    let lambda = args.lambda.unwrap_or_else(|| config.volume_fraction());
    let eta = match args.eta {
        Some(e) => e,
        None => select_eta(lambda, args.theta.unwrap_or(DEFAULT_THETA))?,
    };
    let partition = partition_good_bad(&config, eta)?;
    let conv = StokesConvolver::new(grid);
    let f = |x: &Vec3| forcing.eval(x);
    let u0 = solve_einstein(
        &f,
        &EinsteinModel::new(args.mu, 0.0, rho.clone())?,
        &conv,
        args.tol,
        1,
    )?;
    let einstein = solve_einstein(
        &f,
        &EinsteinModel::new(args.mu, lambda, rho)?,
        &conv,
        args.tol,
        50,
    )?;
    let u0 = FlowField::single("u0", u0.field);
    let u_e = FlowField::single("u_einstein", einstein.field.clone());
    let opts = ReflectionOptions {
        tol: args.tol,
        ..Default::default()
    };
    let (u_n, state) = suspension_velocity(&config, &u0, args.mu, &opts)?;

    let k = probe_region();
    let sampler = NormSampler::new(&k, None, args.strata, args.seed)?;
    let [err_einstein, err_naive, norm_u0] = sampler.paired_norms(2.0, |x| {
        let un = u_n.velocity(x);
        [
            (un - u_e.velocity(x)).norm(),
            (un - u0.velocity(x)).norm(),
            u0.velocity(x).norm(),
        ]
    })?;

    let m = args.samples.max(1);
    let mut csv = csv::Writer::from_path(&args.csv)
        .with_context(|| format!("writing {}", args.csv.display()))?;
    csv.write_record(["x", "y", "z", "ux", "uy", "uz"])?;
    for c in 0..m {
        for b in 0..m {
            for a in 0..m {
                let x = k.from_unit([
                    (a as f64 + 0.5) / m as f64,
                    (b as f64 + 0.5) / m as f64,
                    (c as f64 + 0.5) / m as f64,
                ]);
                let u = u_n.velocity(&x);
                csv.write_record(
                    [x[0], x[1], x[2], u[0], u[1], u[2]].map(|v| format!("{v:.16e}")),
                )?;
            }
        }
    }
    csv.flush()?;

    let summary = json!({
        "n": config.len(),
        "radius": config.radius(),
        "lambda": lambda,
        "eta": eta,
        "good": partition.good.len(),
        "bad": partition.bad.len(),
        "sweeps": state.sweeps,
        "residuals": state.residuals,
        "einstein_iterations": einstein.iterations,
        "einstein_increments": einstein.increments,
        "err_einstein": err_einstein,
        "err_naive": err_naive,
        "norm_u0": norm_u0,
    });
    emit(
        &serde_json::to_string_pretty(&summary)?,
        args.summary.as_deref(),
    )
}

fn visc(args: ViscArgs) -> Result<()> {
    let config = read_config(&args.config)?;
    let opts = ReflectionOptions {
        tol: args.tol,
        max_sweeps: args.max_sweeps,
        ..Default::default()
    };
    let est =
        effective_viscosity_estimate(&config, args.mu, &TraceFreeSymMat::unit_shear(), &opts)?;
    let out = json!({
        "mu_eff_over_mu": est.mu_eff_over_mu,
        "lambda": est.lambda,
        "n": config.len(),
        "seed": args.seed,
        "sweeps": est.sweeps,
    });
    emit(&serde_json::to_string_pretty(&out)?, args.output.as_deref())
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let plan = Plan::from_path(&args.plan)?;
    let records = run_sweep(&plan)?;
    write_report(&records, args.format, &args.output)?;
    for s in summarize(&records) {
        eprintln!(
            "lambda={:.4e} n={} seeds={} mu_eff/mu={:?} err_einstein={:?} err_naive={:?}",
            s.lambda, s.n, s.seeds, s.mu_eff_over_mu, s.err_einstein, s.err_naive
        );
    }
    for r in records.iter().filter(|r| r.status != CellStatus::Ok) {
        eprintln!(
            "{} lambda={} n={} seed={}: {}",
            r.status, r.lambda, r.n, r.seed, r.message
        );
    }
    Ok(all_succeeded(&records))
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let threads: usize =
            value.parse().ok().filter(|t| *t > 0).with_context(|| {
                format!("{THREADS_ENV} must be a positive integer, got '{value}'")
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn run() -> Result<bool> {
    configure_threads()?;
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Check(a) => check(a).map(|_| true),
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Visc(a) => visc(a).map(|_| true),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
