use crate::config::{
    partition_good_bad, BallConfiguration, DensityField, GoodBadPartition, TraceFreeSymMat,
};
use crate::error::{invalid, Result};
use crate::fields::{FlowField, StressletSum, VectorField};
use crate::kernels::SmoothField;
use crate::solver::convolution::{DirectSources, StokesConvolver};
use crate::solver::grid::GridField;
use crate::solver::reflections::{reflections_solve, ReflectionOptions, StressletState};
use crate::Vec3;

/// `𝒰 ⋆ div(5λρ Dφ)` on the convolver's grid.
///
/// `ρ` is sampled at the grid nodes; the viscosity cancels from the equation and
/// is only checked.
pub fn phi_r3(
    phi: &dyn SmoothField,
    rho: &DensityField,
    lambda: f64,
    mu: f64,
    conv: &StokesConvolver,
) -> Result<GridField> {
    if !(mu > 0.0) || !(lambda >= 0.0) {
        return invalid("viscosity must be positive and volume fraction non-negative");
    }
    let grid = conv.grid().clone();
    let nodes = grid.nodes();
    let stress: Vec<[f64; 6]> = nodes
        .iter()
        .map(|x| {
            let w = 5.0 * lambda * rho.value_at(x);
            if w == 0.0 {
                return [0.0; 6];
            }
            TraceFreeSymMat::project(&phi.gradient(x))
                .scale(w)
                .entries()
        })
        .collect();
    if stress.iter().all(|t| t.iter().all(|v| *v == 0.0)) {
        return Ok(GridField::zero(grid));
    }
    let values = conv.divergence_apply(&stress)?;
    let sources = DirectSources {
        nodes,
        weight: grid.cell_volume(),
        singular_radius: grid.equivalent_radius(),
        force: None,
        stress: Some(stress),
    };
    Ok(GridField::new(grid, values)?.with_sources(sources))
}

/// Rescaled responses `r V[Dφ(x_i)]((x − x_i)/r)` of the good balls.
pub fn good_stresslets(
    config: &BallConfiguration,
    partition: &GoodBadPartition,
    phi: &dyn SmoothField,
    mu: f64,
) -> StressletSum {
    let strains: Vec<TraceFreeSymMat> = partition
        .good
        .iter()
        .map(|&i| TraceFreeSymMat::project(&phi.gradient(&config.centers()[i])))
        .collect();
    StressletSum::for_indices(config, &partition.good, &strains, mu)
}

/// `φ_app = φ_ℝ³ + Σ_{i good} r V[Dφ(x_i)]((x − x_i)/r)`.
pub fn assemble_phi_app(
    config: &BallConfiguration,
    partition: &GoodBadPartition,
    phi: &dyn SmoothField,
    phi_r3: &GridField,
    mu: f64,
) -> FlowField {
    FlowField::single("phi_r3", phi_r3.clone()).plus(&FlowField::single(
        "good_stresslets",
        good_stresslets(config, partition, phi, mu),
    ))
}

/// Particle-resolved approximation of the test-field problem.
#[derive(Clone, Debug)]
pub struct PhiN {
    pub field: FlowField,
    pub app: FlowField,
    pub partition: GoodBadPartition,
    pub correction: StressletState,
}

/// `φ_n = φ_app + w`, where `w` is the reflections field whose ball strains
/// restore `D φ_n(x_i) = Dφ(x_i)`.
#[allow(clippy::too_many_arguments)]
pub fn solve_phi_n(
    config: &BallConfiguration,
    eta: f64,
    phi: &dyn SmoothField,
    rho: &DensityField,
    lambda: f64,
    mu: f64,
    opts: &ReflectionOptions,
    conv: &StokesConvolver,
) -> Result<PhiN> {
    let partition = partition_good_bad(config, eta)?;
    let r3 = phi_r3(phi, rho, lambda, mu, conv)?;
    let app = assemble_phi_app(config, &partition, phi, &r3, mu);
    let data: Vec<TraceFreeSymMat> = config
        .centers()
        .iter()
        .map(|x| TraceFreeSymMat::project(&(phi.gradient(x) - app.gradient(x))))
        .collect();
    let correction = reflections_solve(config, &data, mu, opts)?;
    let w = StressletSum::new(
        config.centers().to_vec(),
        &correction.strains,
        config.radius(),
        mu,
    );
    let field = app.clone().plus(&FlowField::single("reflections", w));
    Ok(PhiN {
        field,
        app,
        partition,
        correction,
    })
}

/// `u_n = u₀ − Σ_j r V[S_j]((x − x_j)/r)` with strains solving the rigid-ball
/// problem for the data `D u₀(x_i)`.
pub fn suspension_velocity(
    config: &BallConfiguration,
    background: &FlowField,
    mu: f64,
    opts: &ReflectionOptions,
) -> Result<(FlowField, StressletState)> {
    let data: Vec<TraceFreeSymMat> = config
        .centers()
        .iter()
        .map(|x| TraceFreeSymMat::project(&background.gradient(x)))
        .collect();
    let state = reflections_solve(config, &data, mu, opts)?;
    let disturbance = StressletSum::new(
        config.centers().to_vec(),
        &state.strains,
        config.radius(),
        mu,
    );
    Ok((
        background
            .clone()
            .minus(&FlowField::single("disturbance", disturbance)),
        state,
    ))
}

/// `∫ f · u` by midpoint quadrature on the convolver's grid.
pub fn work_functional(
    forcing: &dyn Fn(&Vec3) -> Vec3,
    field: &dyn VectorField,
    conv: &StokesConvolver,
) -> f64 {
    let grid = conv.grid();
    grid.nodes()
        .iter()
        .map(|x| forcing(x).dot(&field.velocity(x)))
        .sum::<f64>()
        * grid.cell_volume()
}
