//! Ensemble sweeps over volume fraction, ball count and seed, with rate fits and
//! CSV/JSON reports.

mod rate;
mod report;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{
    a0_discrepancy, b2_profile, b2_profile_points, default_eta_grid, default_test_family,
};
use crate::config::{
    radius_for, select_eta, BallConfiguration, DensityField, Domain, TraceFreeSymMat, DEFAULT_THETA,
};
use crate::error::{invalid, Error, Result};
use crate::fields::{FlowField, VectorField};
use crate::process::{subsample, ClusterParams, ProcessKind, ProcessSpec};
use crate::solver::{
    effective_viscosity_estimate, solve_einstein, suspension_velocity, EinsteinModel, Forcing,
    Grid, NormSampler, ReflectionOptions, StokesConvolver, SweepScheme,
};
use crate::Vec3;

pub use rate::{fit_rate, RateFit};
pub use report::{
    format_float, from_csv_str, from_json_str, read_report, to_csv_string, to_json_string,
    write_report, ReportFormat, COLUMNS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Skipped because no admissible configuration exists for the cell.
    Infeasible,
    Failed,
}

impl std::fmt::Display for CellStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ok => "ok",
            Self::Infeasible => "infeasible",
            Self::Failed => "failed",
        })
    }
}

impl std::str::FromStr for CellStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(Self::Ok),
            "infeasible" => Ok(Self::Infeasible),
            "failed" => Ok(Self::Failed),
            other => invalid(format!("unknown cell status '{other}'")),
        }
    }
}

/// One cell × seed of a sweep. Metrics that were not computed are `NaN`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub n: usize,
    pub lambda: f64,
    pub radius: f64,
    pub eta: f64,
    pub theta: f64,
    pub seed: u64,
    pub process: ProcessKind,
    pub mu_eff_over_mu: f64,
    /// `‖u_n − u_E‖_{L²(K)}`.
    pub err_einstein: f64,
    /// `‖u_n − u₀‖_{L²(K)}`.
    pub err_naive: f64,
    pub a0: f64,
    pub b2_max_ratio: f64,
    pub sweeps: usize,
    /// Seconds; zero unless the plan records timing.
    pub wall_time: f64,
    pub status: CellStatus,
    pub message: String,
}

/// A `(λ, n)` pair, optionally with its own hard-core separation in units of `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub lambda: f64,
    pub n: usize,
    #[serde(default)]
    pub separation: Option<f64>,
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}
fn default_separation() -> f64 {
    3.0
}
fn default_mu() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_sweeps() -> usize {
    100
}
fn default_grid() -> usize {
    32
}
fn default_strata() -> usize {
    32
}
fn default_true() -> bool {
    true
}
fn default_process() -> ProcessKind {
    ProcessKind::HardcorePoisson
}

/// Sweep description read from TOML or JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    /// Cartesian product `lambdas × ns`, used when `cells` is empty.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub cells: Vec<Cell>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_process")]
    pub process: ProcessKind,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Hard-core distance in units of the radius.
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub cluster: Option<ClusterParams>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default)]
    pub scheme: SweepScheme,
    #[serde(default)]
    pub forcing: Option<Forcing>,
    /// Cells per axis of the convolution grid on the unit cube.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Strata per axis for the norms on the probe cube.
    #[serde(default = "default_strata")]
    pub strata: usize,
    #[serde(default = "default_true")]
    pub viscosity: bool,
    #[serde(default = "default_true")]
    pub model_comparison: bool,
    #[serde(default)]
    pub record_timing: bool,
}

impl Plan {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidArgument(format!("plan: {e}")))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("plan: {e}")))
    }

    /// JSON for `.json` files, TOML otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn expanded_cells(&self) -> Vec<Cell> {
        if !self.cells.is_empty() {
            return self.cells.clone();
        }
        let mut out = Vec::new();
        for &lambda in &self.lambdas {
            for &n in &self.ns {
                out.push(Cell {
                    lambda,
                    n,
                    separation: None,
                });
            }
        }
        out
    }

    pub fn forcing(&self) -> Forcing {
        self.forcing.clone().unwrap_or_else(Forcing::default_bump)
    }

    fn reflection_options(&self) -> ReflectionOptions {
        ReflectionOptions {
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            scheme: self.scheme,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.expanded_cells().is_empty() || self.seeds.is_empty() {
            return invalid("plan has no cells or no seeds");
        }
        if !(self.mu > 0.0 && self.tol > 0.0) || self.grid < 3 || self.strata == 0 {
            return invalid("plan needs mu > 0, tol > 0, grid >= 3 and strata >= 1");
        }
        select_eta(0.5, self.theta).map(|_| ())?;
        self.forcing().validate()
    }
}

/// Probe cube `K`: side 1/2, centred in the unit cube.
pub fn probe_region() -> Domain {
    Domain::centered_cube([0.5; 3], 0.5)
}

const SURPLUS: f64 = 1.15;
const ATTEMPTS: u64 = 8;

/// Parent intensity on the lower branch of `δ e^{−δ v} = target`.
fn matern_parent_intensity(target: f64, v: f64) -> Option<f64> {
    if v == 0.0 {
        return Some(target);
    }
    let peak = 1.0 / v;
    if target > peak * (-1.0f64).exp() {
        return None;
    }
    let (mut lo, mut hi) = (0.0, peak);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (-mid * v).exp() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// Exactly `n` centres in the unit cube from the plan's process.
///
/// Hard-core Poisson samples are Matérn-I survivors with hard core
/// `separation · r`, thinned at random to `n`. The parent intensity aims at
/// 15% surplus survivors and falls back to the survivor-maximising intensity
/// when that target is out of reach but the mean yield still covers `n`.
/// Clustered samples keep all twins.
pub fn sample_centers(
    kind: ProcessKind,
    n: usize,
    hardcore: f64,
    cluster: Option<ClusterParams>,
    seed: u64,
) -> Result<Vec<Vec3>> {
    if n == 0 {
        return invalid("at least one ball required");
    }
    let window = Domain::unit_cube();
    match kind {
        ProcessKind::HardcorePoisson => {
            let v = 4.0 * PI / 3.0 * hardcore.powi(3);
            let target = SURPLUS * n as f64;
            let peak_yield = if v > 0.0 {
                1.0 / (v * std::f64::consts::E)
            } else {
                f64::INFINITY
            };
            let parent = matern_parent_intensity(target, v)
                .or_else(|| (peak_yield >= n as f64).then(|| 1.0 / v))
                .ok_or_else(|| {
                Error::Infeasible(format!(
                    "hard core {hardcore:.4e} admits at most {:.1} points per unit volume, {n} requested",
                    1.0 / (v * std::f64::consts::E)
                ))
            })?;
            for attempt in 0..ATTEMPTS {
                let spec = ProcessSpec::hardcore_poisson(
                    parent,
                    hardcore,
                    window,
                    seed.wrapping_mul(ATTEMPTS) + attempt,
                );
                let points = spec.sample()?;
                if points.len() >= n {
                    return subsample(&points, n, seed);
                }
            }
            Err(Error::Infeasible(format!(
                "fewer than {n} survivors in {ATTEMPTS} attempts"
            )))
        }
        ProcessKind::Lattice => ProcessSpec::lattice(n as f64, window).sample(),
        ProcessKind::Clustered => {
            let c = cluster.ok_or_else(|| {
                Error::InvalidArgument("clustered process needs cluster parameters".into())
            })?;
            ProcessSpec::clustered(n as f64, window, c.pair_fraction, c.pair_gap, seed).sample()
        }
    }
}

/// Balls of radius `r(n, λ)` at centres drawn by [`sample_centers`].
pub fn dilute_configuration(
    kind: ProcessKind,
    n: usize,
    lambda: f64,
    separation: f64,
    cluster: Option<ClusterParams>,
    seed: u64,
) -> Result<BallConfiguration> {
    let r = radius_for(n, lambda)?;
    let centers = sample_centers(kind, n, separation * r, cluster, seed)?;
    BallConfiguration::in_unit_cube(centers, r)
}

/// Background and effective-model fields shared by all seeds of a volume fraction.
struct Backgrounds {
    u0: FlowField,
    einstein: BTreeMap<u64, std::result::Result<FlowField, String>>,
}

fn backgrounds(plan: &Plan, cells: &[Cell]) -> Result<Backgrounds> {
    let domain = Domain::unit_cube();
    let conv = StokesConvolver::new(Grid::cube(&domain, plan.grid)?);
    let rho = DensityField::uniform(&domain, plan.grid)?;
    let forcing = plan.forcing();
    let f = |x: &Vec3| forcing.eval(x);
    let tol = plan.tol.max(1e-12);
    let u0 = solve_einstein(
        &f,
        &EinsteinModel::new(plan.mu, 0.0, rho.clone())?,
        &conv,
        tol,
        1,
    )?;
    let u0 = FlowField::single("u0", u0.field);
    let mut einstein = BTreeMap::new();
    for cell in cells {
        einstein.entry(cell.lambda.to_bits()).or_insert_with(|| {
            let model =
                EinsteinModel::new(plan.mu, cell.lambda, rho.clone()).map_err(|e| e.to_string())?;
            solve_einstein(&f, &model, &conv, tol, 50)
                .map(|s| FlowField::single("u_einstein", s.field))
                .map_err(|e| e.to_string())
        });
    }
    Ok(Backgrounds { u0, einstein })
}

fn is_infeasible(e: &Error) -> bool {
    matches!(
        e,
        Error::Infeasible(_) | Error::Jamming { .. } | Error::InvalidConfiguration(_)
    )
}

fn blank_record(plan: &Plan, cell: &Cell, seed: u64) -> SweepRecord {
    SweepRecord {
        n: cell.n,
        lambda: cell.lambda,
        radius: f64::NAN,
        eta: f64::NAN,
        theta: plan.theta,
        seed,
        process: plan.process,
        mu_eff_over_mu: f64::NAN,
        err_einstein: f64::NAN,
        err_naive: f64::NAN,
        a0: f64::NAN,
        b2_max_ratio: f64::NAN,
        sweeps: 0,
        wall_time: 0.0,
        status: CellStatus::Ok,
        message: String::new(),
    }
}

fn run_cell(
    plan: &Plan,
    cell: &Cell,
    seed: u64,
    bg: Option<&Backgrounds>,
    rho: &DensityField,
) -> SweepRecord {
    let start = Instant::now();
    let mut rec = blank_record(plan, cell, seed);
    if let Err(e) = fill_record(plan, cell, seed, bg, rho, &mut rec) {
        rec.status = if is_infeasible(&e) {
            CellStatus::Infeasible
        } else {
            CellStatus::Failed
        };
        rec.message = e.to_string();
    }
    if plan.record_timing {
        rec.wall_time = start.elapsed().as_secs_f64();
    }
    rec
}

fn fill_record(
    plan: &Plan,
    cell: &Cell,
    seed: u64,
    bg: Option<&Backgrounds>,
    rho: &DensityField,
    rec: &mut SweepRecord,
) -> Result<()> {
    let tests = default_test_family(&Domain::unit_cube(), seed);
    if cell.lambda == 0.0 {
        let centers = sample_centers(plan.process, cell.n, 0.0, plan.cluster, seed)?;
        let config = BallConfiguration::in_unit_cube(centers.clone(), f64::MIN_POSITIVE)?;
        rec.radius = 0.0;
        rec.eta = 0.0;
        rec.a0 = a0_discrepancy(&config, rho, &tests)?;
        rec.b2_max_ratio = b2_profile_points(&centers, &default_eta_grid())?.max_ratio();
        rec.mu_eff_over_mu = 1.0;
        if bg.is_some() {
            rec.err_einstein = 0.0;
            rec.err_naive = 0.0;
        }
        return Ok(());
    }
    rec.eta = select_eta(cell.lambda, plan.theta)?;
    let separation = cell.separation.unwrap_or(plan.separation);
    let config = dilute_configuration(
        plan.process,
        cell.n,
        cell.lambda,
        separation,
        plan.cluster,
        seed,
    )?;
    rec.n = config.len();
    rec.radius = config.radius();
    rec.lambda = config.volume_fraction();
    rec.a0 = a0_discrepancy(&config, rho, &tests)?;
    rec.b2_max_ratio = b2_profile(&config, &default_eta_grid())?.max_ratio();
    let opts = plan.reflection_options();
    if plan.viscosity {
        let est =
            effective_viscosity_estimate(&config, plan.mu, &TraceFreeSymMat::unit_shear(), &opts)?;
        rec.mu_eff_over_mu = est.mu_eff_over_mu;
        rec.sweeps = est.sweeps;
    }
    if let Some(bg) = bg {
        let u_e = match bg.einstein.get(&cell.lambda.to_bits()) {
            Some(Ok(f)) => f,
            Some(Err(msg)) => {
                return Err(Error::InvalidArgument(format!("effective model: {msg}")))
            }
            None => return invalid("missing effective model field"),
        };
        let (u_n, state) = suspension_velocity(&config, &bg.u0, plan.mu, &opts)?;
        if !plan.viscosity {
            rec.sweeps = state.sweeps;
        }
        let sampler = NormSampler::new(&probe_region(), None, plan.strata, seed)?;
        let [e_einstein, e_naive] = sampler.paired_norms(2.0, |x| {
            let un = u_n.velocity(x);
            [
                (un - u_e.velocity(x)).norm(),
                (un - bg.u0.velocity(x)).norm(),
            ]
        })?;
        rec.err_einstein = e_einstein;
        rec.err_naive = e_naive;
    }
    Ok(())
}

/// Runs every cell × seed. Records come back sorted by `(λ, n, seed)`.
pub fn run_sweep(plan: &Plan) -> Result<Vec<SweepRecord>> {
    plan.validate()?;
    let cells = plan.expanded_cells();
    let feasible: Vec<Cell> = cells.iter().filter(|c| c.lambda > 0.0).copied().collect();
    let bg = if plan.model_comparison {
        Some(backgrounds(plan, &feasible)?)
    } else {
        None
    };
    let rho = DensityField::uniform(&Domain::unit_cube(), plan.grid)?;
    let tasks: Vec<(Cell, u64)> = cells
        .iter()
        .flat_map(|c| plan.seeds.iter().map(move |s| (*c, *s)))
        .collect();
    let mut records: Vec<SweepRecord> = tasks
        .par_iter()
        .map(|(cell, seed)| run_cell(plan, cell, *seed, bg.as_ref(), &rho))
        .collect();
    records.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.n.cmp(&b.n))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(records)
}

/// True when every record succeeded or was skipped as infeasible.
pub fn all_succeeded(records: &[SweepRecord]) -> bool {
    records.iter().all(|r| r.status != CellStatus::Failed)
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

/// Per-cell medians over successful seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub lambda: f64,
    pub n: usize,
    pub seeds: usize,
    pub mu_eff_over_mu: Option<f64>,
    pub err_einstein: Option<f64>,
    pub err_naive: Option<f64>,
}

/// Groups successful records by the requested `(λ, n)` cell and takes medians.
pub fn summarize(records: &[SweepRecord]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(u64, usize), Vec<&SweepRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == CellStatus::Ok) {
        groups.entry((r.lambda.to_bits(), r.n)).or_default().push(r);
    }
    let mut out: Vec<CellSummary> = groups
        .into_values()
        .map(|g| {
            let med = |f: fn(&SweepRecord) -> f64| {
                median(&mut g.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            CellSummary {
                lambda: g[0].lambda,
                n: g[0].n,
                seeds: g.len(),
                mu_eff_over_mu: med(|r| r.mu_eff_over_mu),
                err_einstein: med(|r| r.err_einstein),
                err_naive: med(|r| r.err_naive),
            }
        })
        .collect();
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.n.cmp(&b.n)));
    out
}
