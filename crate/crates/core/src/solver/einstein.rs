use crate::config::DensityField;
use crate::error::{invalid, Error, Result};
use crate::solver::convolution::{DirectSources, StokesConvolver};
use crate::solver::grid::{grid_l2, nodal_gradients, GridField};
use crate::{Mat3, Vec3};

/// Effective fluid with viscosity `μ_E = μ (1 + 5/2 λ ρ)`.
#[derive(Clone, Debug)]
pub struct EinsteinModel {
    pub mu: f64,
    pub lambda: f64,
    pub rho: DensityField,
}

impl EinsteinModel {
    pub fn new(mu: f64, lambda: f64, rho: DensityField) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return invalid("viscosity must be positive");
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return invalid("volume fraction must be non-negative");
        }
        Ok(Self { mu, lambda, rho })
    }

    pub fn viscosity_at(&self, x: &Vec3) -> f64 {
        self.mu * (1.0 + 2.5 * self.lambda * self.rho.value_at(x))
    }
}

#[derive(Clone, Debug)]
pub struct EinsteinSolution {
    pub field: GridField,
    pub iterations: usize,
    /// Relative grid-L² increments `‖u^{k+1} − u^k‖ / ‖u^{k+1}‖`.
    pub increments: Vec<f64>,
}

impl EinsteinSolution {
    /// Largest ratio of successive increments.
    pub fn contraction(&self) -> Option<f64> {
        self.increments
            .windows(2)
            .map(|w| w[1] / w[0])
            .reduce(f64::max)
    }
}

/// Iterates `u^{k+1} = (1/μ) 𝒰 ⋆ f + 𝒰 ⋆ div(5λρ D u^k)` from `u⁰ = (1/μ) 𝒰 ⋆ f`
/// on the convolver's grid until the relative increment drops to `tol`.
///
/// An increment ratio `≥ 1` aborts with [`Error::Diverged`].
pub fn solve_einstein(
    forcing: &(dyn Fn(&Vec3) -> Vec3 + Sync),
    model: &EinsteinModel,
    conv: &StokesConvolver,
    tol: f64,
    max_iterations: usize,
) -> Result<EinsteinSolution> {
    if !(tol > 0.0) || max_iterations == 0 {
        return invalid("tolerance and iteration budget must be positive");
    }
    let grid = conv.grid().clone();
    let nodes = grid.nodes();
    let inv_mu = 1.0 / model.mu;
    let f: Vec<Vec3> = nodes.iter().map(|x| forcing(x) * inv_mu).collect();
    let u0 = conv.oseen_apply(&f)?;
    let weights: Vec<f64> = nodes
        .iter()
        .map(|x| 5.0 * model.lambda * model.rho.value_at(x))
        .collect();
    let sources = DirectSources {
        nodes: nodes.clone(),
        weight: grid.cell_volume(),
        singular_radius: grid.equivalent_radius(),
        force: Some(f),
        stress: None,
    };
    if weights.iter().all(|w| *w == 0.0) {
        let field = GridField::new(grid, u0)?.with_sources(sources);
        return Ok(EinsteinSolution {
            field,
            iterations: 1,
            increments: Vec::new(),
        });
    }

    let mut u = u0.clone();
    let mut increments: Vec<f64> = Vec::new();
    for iteration in 2..=max_iterations + 1 {
        let grads = nodal_gradients(&grid, &u);
        let stress: Vec<[f64; 6]> = grads
            .iter()
            .zip(&weights)
            .map(|(g, w)| trace_free_slots(g, *w))
            .collect();
        let correction = conv.divergence_apply(&stress)?;
        let next: Vec<Vec3> = u0.iter().zip(&correction).map(|(a, b)| a + b).collect();
        let diff: Vec<Vec3> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let size = grid_l2(&grid, &next);
        let inc = if size == 0.0 {
            0.0
        } else {
            grid_l2(&grid, &diff) / size
        };
        u = next;
        if let Some(prev) = increments.last() {
            if *prev > 0.0 && inc / prev >= 1.0 {
                return Err(Error::Diverged { ratio: inc / prev });
            }
        }
        increments.push(inc);
        if inc <= tol {
            let field = GridField::new(grid, u)?.with_sources(DirectSources {
                stress: Some(stress),
                ..sources
            });
            return Ok(EinsteinSolution {
                field,
                iterations: iteration,
                increments,
            });
        }
    }
    Err(Error::NotConverged {
        sweeps: max_iterations,
        history: increments,
    })
}

fn trace_free_slots(g: &Mat3, w: f64) -> [f64; 6] {
    let tr3 = g.trace() / 3.0;
    [
        w * (g[(0, 0)] - tr3),
        w * (g[(1, 1)] - tr3),
        w * (g[(2, 2)] - tr3),
        w * 0.5 * (g[(0, 1)] + g[(1, 0)]),
        w * 0.5 * (g[(0, 2)] + g[(2, 0)]),
        w * 0.5 * (g[(1, 2)] + g[(2, 1)]),
    ]
}
