//! Browser bindings for three small computations of the `dilute-stokes` crate.
//!
//! All functions take and return plain numbers or `Float64Array`s so that the
//! page needs no glue beyond the generated `wasm-bindgen` module.

use dilute_stokes::audit::{b2_profile_points, log_grid};
use dilute_stokes::config::{radius_for, BallConfiguration, TraceFreeSymMat};
use dilute_stokes::experiment::sample_centers;
use dilute_stokes::kernels::stresslet_velocity;
use dilute_stokes::process::ProcessKind;
use dilute_stokes::solver::{effective_viscosity_estimate, ReflectionOptions};
use dilute_stokes::Vec3;
use wasm_bindgen::prelude::*;

fn js_error(e: dilute_stokes::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Flow `E x − V[E](x)` past a rigid unit ball held in the planar strain
/// with entries `xx`, `yy`, `xy`, sampled on a `res × res` grid of the
/// `z = 0` plane over `[-half, half]²`.
///
/// Returns `res²` triples `(u_x, u_y, |u|)` in row-major order, with zeros
/// inside the ball.
#[wasm_bindgen]
pub fn strain_flow_slice(res: usize, half: f64, xx: f64, yy: f64, xy: f64) -> Vec<f64> {
    let e = TraceFreeSymMat::new(xx, yy, xy, 0.0, 0.0);
    let m = e.to_matrix();
    let mut out = Vec::with_capacity(3 * res * res);
    let step = if res > 1 {
        2.0 * half / (res - 1) as f64
    } else {
        0.0
    };
    for row in 0..res {
        for col in 0..res {
            let x = Vec3::new(-half + col as f64 * step, half - row as f64 * step, 0.0);
            let u = if x.norm_squared() <= 1.0 {
                Vec3::zeros()
            } else {
                m * x - stresslet_velocity(&e, &x)
            };
            out.extend_from_slice(&[u[0], u[1], u.norm()]);
        }
    }
    out
}

/// Hard-core sample of `n` centres in the unit cube at volume fraction
/// `lambda`, with pairwise distances at least `separation · r`.
///
/// Returns the flat coordinates `x0, y0, z0, x1, ...`.
#[wasm_bindgen]
pub fn hardcore_sample(
    n: usize,
    lambda: f64,
    separation: f64,
    seed: u64,
) -> Result<Vec<f64>, JsValue> {
    let r = radius_for(n, lambda).map_err(js_error)?;
    let centers = sample_centers(ProcessKind::HardcorePoisson, n, separation * r, None, seed)
        .map_err(js_error)?;
    Ok(centers.iter().flat_map(|c| [c[0], c[1], c[2]]).collect())
}

/// Near-pair profile of flat coordinates on `count` log-spaced values of
/// `η ∈ [lo, hi]`. Returns `(η, ratio)` pairs.
#[wasm_bindgen]
pub fn near_pair_profile(
    coords: &[f64],
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<Vec<f64>, JsValue> {
    let points: Vec<Vec3> = coords
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect();
    let profile = b2_profile_points(&points, &log_grid(lo, hi, count)).map_err(js_error)?;
    Ok(profile.rows.iter().flat_map(|r| [r.eta, r.ratio]).collect())
}

/// Effective viscosity ratio `μ_eff/μ` of `n` hard-core balls in simple shear,
/// one entry per volume fraction in `lambdas`. Cells whose sampling or
/// solve fails yield `NaN`.
#[wasm_bindgen]
pub fn viscosity_curve(n: usize, lambdas: &[f64], separation: f64, seed: u64) -> Vec<f64> {
    let shear = TraceFreeSymMat::unit_shear();
    lambdas
        .iter()
        .map(|&lambda| {
            let r = radius_for(n, lambda)?;
            let centers =
                sample_centers(ProcessKind::HardcorePoisson, n, separation * r, None, seed)?;
            let config = BallConfiguration::in_unit_cube(centers, r)?;
            effective_viscosity_estimate(&config, 1.0, &shear, &ReflectionOptions::default())
                .map(|est| est.mu_eff_over_mu)
        })
        .map(|v| v.unwrap_or(f64::NAN))
        .collect()
}
