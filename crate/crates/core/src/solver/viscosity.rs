use serde::{Deserialize, Serialize};

use crate::config::{BallConfiguration, TraceFreeSymMat};
use crate::error::{invalid, Result};
use crate::solver::reflections::{reflections_solve, ReflectionOptions, StressletState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViscosityEstimate {
    pub mu_eff_over_mu: f64,
    pub lambda: f64,
    pub sweeps: usize,
    pub state: StressletState,
}

/// Volume-averaged stress closure
/// `μ_eff/μ = 1 + Σ_i 5 |B_i| (S_i : E) / (2 |𝒪| (E : E))`
/// for the strains of the rigid-ball problem with constant ambient strain `E`.
pub fn effective_viscosity_estimate(
    config: &BallConfiguration,
    mu: f64,
    e: &TraceFreeSymMat,
    opts: &ReflectionOptions,
) -> Result<ViscosityEstimate> {
    let ee = e.contract(e);
    if !(ee > 0.0) {
        return invalid("ambient strain must be nonzero");
    }
    let state = reflections_solve(config, &vec![*e; config.len()], mu, opts)?;
    let moment: f64 = state.strains.iter().map(|s| s.contract(e)).sum();
    let ratio = 1.0 + 5.0 * config.ball_volume() * moment / (2.0 * config.domain().volume() * ee);
    Ok(ViscosityEstimate {
        mu_eff_over_mu: ratio,
        lambda: config.volume_fraction(),
        sweeps: state.sweeps,
        state,
    })
}
