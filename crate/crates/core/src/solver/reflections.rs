use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BallConfiguration, TraceFreeSymMat};
use crate::error::{invalid, Error, Result};
use crate::kernels::gradient_exterior;
use crate::quadrature::SphereRule;
use crate::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScheme {
    /// Every ball is updated from the previous sweep.
    #[default]
    Jacobi,
    /// Updates are used as soon as they are available.
    GaussSeidel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub scheme: SweepScheme,
}

impl Default for ReflectionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 100,
            scheme: SweepScheme::Jacobi,
        }
    }
}

/// Converged per-ball strains of the rigid-ball problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressletState {
    pub strains: Vec<TraceFreeSymMat>,
    /// `5 μ |B_i| S_i`.
    pub strengths: Vec<TraceFreeSymMat>,
    pub sweeps: usize,
    pub residuals: Vec<f64>,
}

/// Strain seen at ball `i` from the rescaled responses of all other balls.
pub fn interaction_strain(config: &BallConfiguration, strains: &[Mat3], i: usize) -> Mat3 {
    let inv = 1.0 / config.radius();
    let xi = config.centers()[i];
    let mut g = Mat3::zeros();
    for (j, (xj, s)) in config.centers().iter().zip(strains).enumerate() {
        if j != i {
            g += gradient_exterior(s, &((xi - xj) * inv));
        }
    }
    0.5 * (g + g.transpose())
}

/// Solves `S_i + Σ_{j≠i} D(r V[S_j]((· − x_j)/r))(x_i) = data_i` by sweeps starting
/// from `S = data`.
///
/// The residual of a sweep is the largest Frobenius norm of a per-ball update.
/// Once past the first sweep, a residual that fails to decrease ends the iteration
/// with [`Error::NotConverged`].
pub fn reflections_solve(
    config: &BallConfiguration,
    data: &[TraceFreeSymMat],
    mu: f64,
    opts: &ReflectionOptions,
) -> Result<StressletState> {
    if data.len() != config.len() {
        return invalid(format!(
            "expected {} strains, got {}",
            config.len(),
            data.len()
        ));
    }
    if !(opts.tol > 0.0) || opts.max_sweeps == 0 {
        return invalid("tolerance and sweep budget must be positive");
    }
    if !(mu > 0.0) {
        return invalid("viscosity must be positive");
    }
    if config.len() > 1 && !(config.min_gap() > 2.0 * config.radius()) {
        return invalid(format!(
            "centres must be farther apart than 2r (min gap {:e}, r {:e})",
            config.min_gap(),
            config.radius()
        ));
    }
    let targets: Vec<Mat3> = data.iter().map(|d| d.to_matrix()).collect();
    let mut strains = targets.clone();
    let mut residuals = Vec::new();
    for sweep in 1..=opts.max_sweeps {
        let residual = match opts.scheme {
            SweepScheme::Jacobi => {
                let next: Vec<Mat3> = (0..strains.len())
                    .into_par_iter()
                    .map(|i| targets[i] - interaction_strain(config, &strains, i))
                    .collect();
                let r = next
                    .iter()
                    .zip(&strains)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                strains = next;
                r
            }
            SweepScheme::GaussSeidel => {
                let mut r: f64 = 0.0;
                for i in 0..strains.len() {
                    let next = targets[i] - interaction_strain(config, &strains, i);
                    r = r.max((next - strains[i]).norm());
                    strains[i] = next;
                }
                r
            }
        };
        residuals.push(residual);
        if residual <= opts.tol {
            return Ok(finish(config, strains, mu, sweep, residuals));
        }
        if sweep > 1 && residual >= residuals[sweep - 2] {
            return Err(Error::NotConverged {
                sweeps: sweep,
                history: residuals,
            });
        }
    }
    Err(Error::NotConverged {
        sweeps: opts.max_sweeps,
        history: residuals,
    })
}

fn finish(
    config: &BallConfiguration,
    strains: Vec<Mat3>,
    mu: f64,
    sweeps: usize,
    residuals: Vec<f64>,
) -> StressletState {
    let strains: Vec<TraceFreeSymMat> = strains.iter().map(TraceFreeSymMat::project).collect();
    let factor = 5.0 * mu * config.ball_volume();
    let strengths = strains.iter().map(|s| s.scale(factor)).collect();
    StressletState {
        strains,
        strengths,
        sweeps,
        residuals,
    }
}

/// `∫_{ℝ³∖∪B_i} 2μ|Du|²` for `u = Σ_j r V[S_j]((x − x_j)/r)`, through the surface
/// identity `−Σ_i ∮_{∂B_i} u · σ(u) ν`.
pub fn exterior_energy(
    config: &BallConfiguration,
    strains: &[TraceFreeSymMat],
    mu: f64,
    order: usize,
) -> Result<f64> {
    if strains.len() != config.len() {
        return invalid("one strain per ball required");
    }
    let rule = SphereRule::new(order);
    let r = config.radius();
    let inv = 1.0 / r;
    let mats: Vec<Mat3> = strains.iter().map(|s| s.to_matrix()).collect();
    let per_ball: Vec<f64> = config
        .centers()
        .par_iter()
        .map(|c| {
            rule.integrate(c, r, |x, nu| {
                let mut u = Vec3::zeros();
                let mut sigma = Mat3::zeros();
                for (xj, s) in config.centers().iter().zip(&mats) {
                    let y = (x - xj) * inv;
                    let r2 = y.norm_squared().max(1.0);
                    let sy = s * y;
                    let q = y.dot(&sy);
                    let r5 = r2 * r2 * r2.sqrt();
                    let r7 = r5 * r2;
                    u += (y * (2.5 * q / r5) + sy / r5 - y * (2.5 * q / r7)) * r;
                    let g = gradient_exterior(s, &y);
                    sigma += (g + g.transpose()) * mu - Mat3::identity() * (5.0 * mu * q / r5);
                }
                -u.dot(&(sigma * nu))
            })
        })
        .collect();
    Ok(per_ball.iter().sum())
}

/// Energy of an isolated ball with strain `S`: `4π μ r³ |S|²`.
pub fn isolated_energy(radius: f64, s: &TraceFreeSymMat, mu: f64) -> f64 {
    4.0 * PI * mu * radius.powi(3) * s.contract(s)
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::config::Domain;
    use proptest::prelude::*;

    fn strain() -> impl Strategy<Value = TraceFreeSymMat> {
        prop::array::uniform5(-1.0f64..1.0)
            .prop_map(|e| TraceFreeSymMat::new(e[0], e[1], e[2], e[3], e[4]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn solution_follows_relabelling_and_translation(
            pts in prop::collection::vec(prop::array::uniform3(0.3f64..0.7), 2..6),
            data in prop::collection::vec(strain(), 6),
            shift in prop::array::uniform3(-0.2f64..0.2),
        ) {
            let r = 0.02;
            let centers: Vec<Vec3> = pts.iter().map(|p| Vec3::from(*p)).collect();
            let separated = centers
                .iter()
                .enumerate()
                .all(|(i, a)| centers[..i].iter().all(|b| (a - b).norm() >= 3.0 * r));
            prop_assume!(separated);
            let config = BallConfiguration::new(centers.clone(), r, Domain::unit_cube()).unwrap();
            let data = &data[..centers.len()];
            let opts = ReflectionOptions { tol: 1e-13, ..Default::default() };
            let base = reflections_solve(&config, data, 1.0, &opts).unwrap();

            let moved: Vec<Vec3> = centers.iter().rev().map(|c| c + Vec3::from(shift)).collect();
            let moved = BallConfiguration::new(moved, r, Domain::unit_cube()).unwrap();
            let flipped: Vec<TraceFreeSymMat> = data.iter().rev().copied().collect();
            let other = reflections_solve(&moved, &flipped, 1.0, &opts).unwrap();
            for (a, b) in base.strains.iter().zip(other.strains.iter().rev()) {
                prop_assert!((a.to_matrix() - b.to_matrix()).norm() < 1e-10);
            }
        }
    }
}
