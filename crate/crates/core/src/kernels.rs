//! Closed-form singular solutions of the Stokes equations.
//!
//! * [`oseen_tensor`]: the free-space fundamental solution `𝒰` (unit viscosity).
//! * [`stresslet_velocity`] / [`stresslet_pressure`]: the exterior field `V[S]`,
//!   `P[S]` of the unit ball on which the velocity equals `S x`. Inside the ball
//!   `V[S](x) = S x`.
//! * gradients, stresses and surface moments of that field.
//!
//! Gradient matrices use the convention `G[(i, j)] = ∂_j V_i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::TraceFreeSymMat;
use crate::error::{Error, Result};
use crate::quadrature::{shell_points, GaussLegendre, SphereRule};
use crate::{Mat3, Vec3};

fn arr(x: &Vec3) -> [f64; 3] {
    [x[0], x[1], x[2]]
}

/// `𝒰(x) = (I/|x| + x⊗x/|x|³) / 8π`.
pub fn oseen_tensor(x: &Vec3) -> Result<Mat3> {
    let r2 = x.norm_squared();
    if r2 == 0.0 {
        return Err(Error::SingularPoint(arr(x)));
    }
    let r = r2.sqrt();
    Ok((Mat3::identity() / r + x * x.transpose() / (r2 * r)) / (8.0 * PI))
}

/// Exterior formula for `V[S]`, valid for any symmetric `s` and any `x ≠ 0`.
#[inline]
pub fn velocity_exterior(s: &Mat3, x: &Vec3) -> Vec3 {
    let r2 = x.norm_squared();
    let inv2 = 1.0 / r2;
    let inv5 = inv2 * inv2 / r2.sqrt();
    let sx = s * x;
    let q = x.dot(&sx);
    // (5/2) q x (|x|^-5 - |x|^-7) + S x |x|^-5, written to keep the cancellation at |x| = 1
    sx * inv5 + x * (2.5 * q * inv5 * (1.0 - inv2))
}

/// `G[(i, j)] = ∂_j V_i` from the exterior formula.
#[inline]
pub fn gradient_exterior(s: &Mat3, x: &Vec3) -> Mat3 {
    let (v, w) = gradient_split_unit(s, x);
    v + w
}

/// Far-field part `D((5/2) S:(x⊗x) x/|x|⁵)` and the `|x|⁻⁵` remainder, unit ball.
fn gradient_split_unit(s: &Mat3, x: &Vec3) -> (Mat3, Mat3) {
    let r2 = x.norm_squared();
    let inv2 = 1.0 / r2;
    let inv5 = inv2 * inv2 / r2.sqrt();
    let inv7 = inv5 * inv2;
    let sx = s * x;
    let q = x.dot(&sx);
    let xx = x * x.transpose();
    // ∂_j [(5/2) q x_i |x|^-5] = (5/2)(2 x_i (Sx)_j + q δ_ij)|x|^-5 - (25/2) q x_i x_j |x|^-7
    let far =
        (x * sx.transpose() * 5.0 + Mat3::identity() * (2.5 * q)) * inv5 - xx * (12.5 * q * inv7);
    // ∂_j [S x |x|^-5 - (5/2) q x |x|^-7]
    let near = s * inv5
        - sx * x.transpose() * (5.0 * inv7)
        - (x * sx.transpose() * 5.0 + Mat3::identity() * (2.5 * q)) * inv7
        + xx * (17.5 * q * inv7 * inv2);
    (far, near)
}

/// `V[S](x)`; equals `S x` inside the closed unit ball.
pub fn stresslet_velocity(s: &TraceFreeSymMat, x: &Vec3) -> Vec3 {
    let m = s.to_matrix();
    if x.norm_squared() <= 1.0 {
        m * x
    } else {
        velocity_exterior(&m, x)
    }
}

/// `∇V[S](x)`; equals `S` strictly inside the unit ball.
pub fn stresslet_velocity_gradient(s: &TraceFreeSymMat, x: &Vec3) -> Mat3 {
    let m = s.to_matrix();
    if x.norm_squared() < 1.0 {
        m
    } else {
        gradient_exterior(&m, x)
    }
}

/// `P[S](x) = 5 S:(x⊗x)/|x|⁵`.
pub fn stresslet_pressure(s: &TraceFreeSymMat, x: &Vec3) -> Result<f64> {
    let r2 = x.norm_squared();
    if r2 == 0.0 {
        return Err(Error::SingularPoint(arr(x)));
    }
    Ok(pressure_unchecked(&s.to_matrix(), x))
}

#[inline]
fn pressure_unchecked(s: &Mat3, x: &Vec3) -> f64 {
    let r2 = x.norm_squared();
    5.0 * x.dot(&(s * x)) / (r2 * r2 * r2.sqrt())
}

/// Newtonian stress `2μ D(V) − P I` of the exterior field, `|x| ≥ 1`.
pub fn stresslet_stress(s: &TraceFreeSymMat, x: &Vec3, mu: f64) -> Result<Mat3> {
    if x.norm_squared() < 1.0 {
        return Err(Error::InteriorPoint(arr(x)));
    }
    Ok(stress_unchecked(&s.to_matrix(), x, mu))
}

#[inline]
fn stress_unchecked(s: &Mat3, x: &Vec3, mu: f64) -> Mat3 {
    let g = gradient_exterior(s, x);
    (g + g.transpose()) * mu - Mat3::identity() * (mu * pressure_unchecked(s, x))
}

/// Gradient of the rescaled field `r V[S](x / r)` split into the `|x|⁻³` part
/// (scaling `r³`) and the `|x|⁻⁵` remainder (scaling `r⁵`).
pub fn stresslet_gradient_split(
    s: &TraceFreeSymMat,
    x: &Vec3,
    radius: f64,
) -> Result<(Mat3, Mat3)> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if x.norm() <= radius {
        return Err(Error::InteriorPoint(arr(x)));
    }
    Ok(gradient_split_unit(&s.to_matrix(), &(x / radius)))
}

/// Velocity, pressure and gradient of `V[S]` at one exterior point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub velocity: [f64; 3],
    pub pressure: f64,
    pub velocity_gradient: [[f64; 3]; 3],
}

pub fn stresslet_sample(s: &TraceFreeSymMat, x: &Vec3) -> Result<KernelSample> {
    if x.norm_squared() < 1.0 {
        return Err(Error::InteriorPoint(arr(x)));
    }
    let m = s.to_matrix();
    let v = velocity_exterior(&m, x);
    let g = gradient_exterior(&m, x);
    Ok(KernelSample {
        velocity: arr(&v),
        pressure: pressure_unchecked(&m, x),
        velocity_gradient: [0, 1, 2].map(|i| [g[(i, 0)], g[(i, 1)], g[(i, 2)]]),
    })
}

/// Net force and torque exerted through the sphere `|x| = radius ≥ 1`.
pub fn surface_force_torque(
    s: &TraceFreeSymMat,
    mu: f64,
    radius: f64,
    rule: &SphereRule,
) -> (Vec3, Vec3) {
    let m = s.to_matrix();
    let force = rule.integrate(&Vec3::zeros(), radius, |x, nu| {
        stress_unchecked(&m, x, mu) * nu
    });
    let torque = rule.integrate(&Vec3::zeros(), radius, |x, nu| {
        x.cross(&(stress_unchecked(&m, x, mu) * nu))
    });
    (force, torque)
}

/// Symmetric first moment of the traction that a rigid ball of radius `r`
/// exerts when held in the ambient strain `E`: the field around it is
/// `E x − r V[E](x/r)` and the moment equals `5 μ (4π/3) r³ E`.
pub fn isolated_stresslet_strength(radius: f64, e: &TraceFreeSymMat, mu: f64) -> TraceFreeSymMat {
    isolated_stresslet_strength_with(radius, e, mu, &SphereRule::new(SphereRule::DEFAULT_ORDER))
}

pub fn isolated_stresslet_strength_with(
    radius: f64,
    e: &TraceFreeSymMat,
    mu: f64,
    rule: &SphereRule,
) -> TraceFreeSymMat {
    let em = e.to_matrix();
    let ambient = em * (2.0 * mu);
    let moment: Mat3 = rule.integrate(&Vec3::zeros(), radius, |x, nu| {
        // stress of the rescaled field at x equals the unit-ball stress at x / r
        let disturbance = stress_unchecked(&em, &(x / radius), mu);
        (ambient - disturbance) * nu * x.transpose()
    });
    TraceFreeSymMat::project(&moment)
}

/// Smooth, compactly supported vector field with an analytic gradient.
pub trait SmoothField: Sync {
    fn velocity(&self, x: &Vec3) -> Vec3;
    fn gradient(&self, x: &Vec3) -> Mat3;
    /// Ball `(center, radius)` containing the support, if compact.
    fn support(&self) -> Option<(Vec3, f64)>;
}

/// Divergence-free bump `ψ = ∇ × (b A)` with `b(y) = (1 − |y|²/R²)^k` on `|y| < R`
/// and a linear vector potential `A(y) = a + L y`, `y = x − center`.
#[derive(Clone, Debug)]
pub struct SolenoidalBump {
    pub center: Vec3,
    pub radius: f64,
    pub a: Vec3,
    pub l: Mat3,
    pub power: i32,
}

impl SolenoidalBump {
    pub fn new(center: Vec3, radius: f64, a: Vec3, l: Mat3) -> Self {
        Self {
            center,
            radius,
            a,
            l,
            power: 6,
        }
    }

    /// `(b, ∇b, ∇²b)` at offset `y`.
    fn bump(&self, y: &Vec3) -> Option<(f64, Vec3, Mat3)> {
        let r2 = self.radius * self.radius;
        let s = y.norm_squared() / r2;
        if s >= 1.0 {
            return None;
        }
        let k = self.power as f64;
        let t = 1.0 - s;
        let b = t.powi(self.power);
        let d1 = -2.0 * k / r2 * t.powi(self.power - 1);
        let d2 = 4.0 * k * (k - 1.0) / (r2 * r2) * t.powi(self.power - 2);
        Some((b, y * d1, Mat3::identity() * d1 + y * y.transpose() * d2))
    }

    fn curl_of_potential(&self) -> Vec3 {
        // (∇ × A)_i = ε_ijk L_kj
        let l = &self.l;
        Vec3::new(
            l[(2, 1)] - l[(1, 2)],
            l[(0, 2)] - l[(2, 0)],
            l[(1, 0)] - l[(0, 1)],
        )
    }
}

impl SmoothField for SolenoidalBump {
    fn velocity(&self, x: &Vec3) -> Vec3 {
        let y = x - self.center;
        match self.bump(&y) {
            None => Vec3::zeros(),
            Some((b, db, _)) => {
                let pot = self.a + self.l * y;
                db.cross(&pot) + self.curl_of_potential() * b
            }
        }
    }

    fn gradient(&self, x: &Vec3) -> Mat3 {
        let y = x - self.center;
        let Some((_, db, hb)) = self.bump(&y) else {
            return Mat3::zeros();
        };
        let pot = self.a + self.l * y;
        let w = self.curl_of_potential();
        let mut g = w * db.transpose();
        // ∂_l ψ_i = ε_ijk (∂_l∂_j b A_k + ∂_j b L_kl) + ∂_l b w_i
        const PERM: [(usize, usize, usize, f64); 6] = [
            (0, 1, 2, 1.0),
            (1, 2, 0, 1.0),
            (2, 0, 1, 1.0),
            (0, 2, 1, -1.0),
            (2, 1, 0, -1.0),
            (1, 0, 2, -1.0),
        ];
        for &(i, j, k, sign) in &PERM {
            for l in 0..3 {
                g[(i, l)] += sign * (hb[(l, j)] * pot[k] + db[j] * self.l[(k, l)]);
            }
        }
        g
    }

    fn support(&self) -> Option<(Vec3, f64)> {
        Some((self.center, self.radius))
    }
}

/// Residual of the distributional identity `−div σ(V[S], P[S]) = −div(5μ S 1_{B(0,1)})`
/// tested against `ψ`:
///
/// `| ∫_{|x|>1} σ : ∇ψ + ∫_{|x|<1} 2μ S : ∇ψ − ∫_{|x|<1} 5μ S : ∇ψ |`
///
/// (inside the ball `V = S x`, `P = 0`, so `σ = 2μ S`). Product Gauss rules of the
/// given order in radius, polar angle and azimuth (twice the order).
pub fn distributional_identity_residual(
    s: &TraceFreeSymMat,
    mu: f64,
    test: &dyn SmoothField,
    order: usize,
) -> Result<f64> {
    let (center, support) = test
        .support()
        .ok_or_else(|| Error::InvalidArgument("test field must have compact support".into()))?;
    let radial = GaussLegendre::new(order);
    let sphere = SphereRule::new(order);
    let m = s.to_matrix();

    let (interior, exterior) = if center.norm() >= 1.0 + support {
        (
            Vec::new(),
            shell_points(&center, 0.0, support, &radial, &sphere),
        )
    } else {
        let outer = center.norm() + support;
        let interior = shell_points(&Vec3::zeros(), 0.0, 1.0, &radial, &sphere);
        let exterior = if outer > 1.0 {
            shell_points(&Vec3::zeros(), 1.0, outer, &radial, &sphere)
        } else {
            Vec::new()
        };
        (interior, exterior)
    };

    let mut max_div = 0.0f64;
    let mut max_grad = 0.0f64;
    let mut check = |g: &Mat3| {
        max_div = max_div.max(g.trace().abs());
        max_grad = max_grad.max(g.norm());
    };
    let mut total = 0.0;
    for (x, w) in &exterior {
        let g = test.gradient(x);
        check(&g);
        if x.norm_squared() > 1.0 {
            total += w * stress_unchecked(&m, x, mu).component_mul(&g).sum();
        }
    }
    for (x, w) in &interior {
        let g = test.gradient(x);
        check(&g);
        total += w * (m * (2.0 * mu - 5.0 * mu)).component_mul(&g).sum();
    }
    if max_div > 1e-9 * max_grad.max(1e-300) {
        return Err(Error::NotDivergenceFree(max_div));
    }
    Ok(total.abs())
}

/// `‖∇ψ‖_∞` sampled on the same nodes the residual uses (for normalisation).
pub fn sup_gradient_norm(test: &dyn SmoothField, order: usize) -> f64 {
    let Some((center, support)) = test.support() else {
        return 0.0;
    };
    let radial = GaussLegendre::new(order);
    let sphere = SphereRule::new(order);
    shell_points(&center, 0.0, support, &radial, &sphere)
        .iter()
        .map(|(x, _)| test.gradient(x).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag() -> TraceFreeSymMat {
        TraceFreeSymMat::new(2.0, -1.0, 0.0, 0.0, 0.0)
    }

    #[test]
    fn oseen_examples() {
        let u = oseen_tensor(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((u[(0, 0)] - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((u[(1, 1)] - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!(u[(0, 1)].abs() < 1e-18);
        assert!(oseen_tensor(&Vec3::zeros()).is_err());
    }

    #[test]
    fn stresslet_velocity_examples() {
        let shear = TraceFreeSymMat::unit_shear();
        let v = stresslet_velocity(&shear, &Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(v, Vec3::zeros());
        assert_eq!(
            stresslet_velocity(&TraceFreeSymMat::ZERO, &Vec3::new(3.0, 1.0, 2.0)),
            Vec3::zeros()
        );
        // term by term: (1.25, 0, 0) + (0.125, 0, 0) - (0.3125, 0, 0)
        let v = stresslet_velocity(&diag(), &Vec3::new(2.0, 0.0, 0.0));
        assert!((v - Vec3::new(1.0625, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pressure_examples() {
        assert!(
            (stresslet_pressure(&diag(), &Vec3::new(1.0, 0.0, 0.0)).unwrap() - 10.0).abs() < 1e-14
        );
        assert!(stresslet_pressure(&diag(), &Vec3::zeros()).is_err());
        let rule = SphereRule::new(16);
        let mean: f64 = rule.integrate(&Vec3::zeros(), 1.0, |x, _| {
            pressure_unchecked(&diag().to_matrix(), x)
        });
        assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn traction_on_unit_sphere_is_minus_three_mu_s_nu() {
        let s = TraceFreeSymMat::new(0.3, -0.7, 0.2, -0.4, 0.9);
        let x = Vec3::new(0.48, -0.6, 0.64);
        let t = stresslet_stress(&s, &x, 2.0).unwrap() * x;
        assert!((t + s.to_matrix() * x * 6.0).norm() < 1e-13);
        assert!(stresslet_stress(&s, &(x * 0.5), 1.0).is_err());
    }

    #[test]
    fn stress_trace_is_minus_three_pressure() {
        let s = TraceFreeSymMat::new(0.3, -0.7, 0.2, -0.4, 0.9);
        let x = Vec3::new(1.3, -0.2, 2.1);
        let sigma = stresslet_stress(&s, &x, 1.0).unwrap();
        let p = stresslet_pressure(&s, &x).unwrap();
        assert!((sigma.trace() + 3.0 * p).abs() < 1e-13);
    }

    #[test]
    fn isolated_strength_prefactor() {
        let e = TraceFreeSymMat::new(0.3, -0.7, 0.2, -0.4, 0.9);
        let st = isolated_stresslet_strength(1.0, &e, 1.0);
        assert!((st.sub(&e.scale(20.0 * PI / 3.0))).norm() < 1e-11 * e.norm());
        let st2 = isolated_stresslet_strength(2.0, &e, 1.0);
        assert!((st2.sub(&st.scale(8.0))).norm() < 1e-10);
        assert_eq!(
            isolated_stresslet_strength(1.0, &TraceFreeSymMat::ZERO, 1.0).norm(),
            0.0
        );
    }

    #[test]
    fn split_matches_finite_differences() {
        let s = TraceFreeSymMat::new(0.3, -0.7, 0.2, -0.4, 0.9);
        let radius = 0.1;
        let x = Vec3::new(0.2, -0.15, 0.18);
        let (v, w) = stresslet_gradient_split(&s, &x, radius).unwrap();
        let field = |p: &Vec3| velocity_exterior(&s.to_matrix(), &(p / radius)) * radius;
        let h = 1e-5 * radius;
        let mut fd = Mat3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            let col = (field(&(x + e)) - field(&(x - e))) / (2.0 * h);
            fd.set_column(j, &col);
        }
        assert!((v + w - fd).norm() < 1e-8 * fd.norm());
        let (v2, _) = stresslet_gradient_split(&s, &x, 2.0 * radius).unwrap();
        assert!((v2 - v * 8.0).norm() < 1e-12 * v2.norm());
        assert!(stresslet_gradient_split(&s, &(x * 0.1), radius).is_err());
    }

    #[test]
    fn bump_is_solenoidal_and_gradient_is_exact() {
        let bump = SolenoidalBump::new(
            Vec3::new(0.2, 0.1, -0.3),
            1.4,
            Vec3::new(0.3, -0.5, 0.8),
            Mat3::new(0.1, 0.4, -0.2, 0.7, -0.3, 0.5, 0.2, 0.6, 0.9),
        );
        let x = Vec3::new(0.5, -0.2, 0.1);
        let g = bump.gradient(&x);
        assert!(g.trace().abs() < 1e-13);
        let h = 1e-6;
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            let col = (bump.velocity(&(x + e)) - bump.velocity(&(x - e))) / (2.0 * h);
            assert!((g.column(j) - col).norm() < 1e-7);
        }
    }

    #[test]
    fn identity_residual_trivial_cases() {
        let bump = SolenoidalBump::new(
            Vec3::new(3.0, 0.0, 0.0),
            0.8,
            Vec3::new(0.0, 0.0, 1.0),
            Mat3::zeros(),
        );
        let r = distributional_identity_residual(&diag(), 1.0, &bump, 24).unwrap();
        let scale = diag().norm() * sup_gradient_norm(&bump, 24);
        assert!(r < 1e-8 * scale, "{r}");
        let near = SolenoidalBump::new(
            Vec3::zeros(),
            2.0,
            Vec3::new(1.0, 0.0, 0.0),
            Mat3::identity(),
        );
        assert_eq!(
            distributional_identity_residual(&TraceFreeSymMat::ZERO, 1.0, &near, 8).unwrap(),
            0.0
        );
    }

    struct Gradient;
    impl SmoothField for Gradient {
        fn velocity(&self, x: &Vec3) -> Vec3 {
            *x
        }
        fn gradient(&self, _: &Vec3) -> Mat3 {
            Mat3::identity()
        }
        fn support(&self) -> Option<(Vec3, f64)> {
            Some((Vec3::zeros(), 2.0))
        }
    }

    #[test]
    fn identity_rejects_compressible_test_fields() {
        assert!(matches!(
            distributional_identity_residual(&diag(), 1.0, &Gradient, 8),
            Err(Error::NotDivergenceFree(_))
        ));
    }

    fn strain() -> impl Strategy<Value = TraceFreeSymMat> {
        prop::array::uniform5(-1.0f64..1.0)
            .prop_map(|e| TraceFreeSymMat::new(e[0], e[1], e[2], e[3], e[4]))
    }

    fn exterior_point() -> impl Strategy<Value = Vec3> {
        (prop::array::uniform3(-1.0f64..1.0), 1.01f64..20.0).prop_filter_map(
            "nonzero direction",
            |(d, r)| {
                let v = Vec3::from(d);
                (v.norm() > 1e-3).then(|| v.normalize() * r)
            },
        )
    }

    proptest! {
        #[test]
        fn velocity_is_linear_in_strain(a in strain(), b in strain(), x in exterior_point(), p in -3.0f64..3.0, q in -3.0f64..3.0) {
            let lhs = stresslet_velocity(&a.scale(p).add(&b.scale(q)), &x);
            let rhs = stresslet_velocity(&a, &x) * p + stresslet_velocity(&b, &x) * q;
            prop_assert!((lhs - rhs).norm() <= 1e-14 * (1.0 + rhs.norm()));
        }

        #[test]
        fn gradient_is_trace_free(s in strain(), x in exterior_point()) {
            let g = stresslet_velocity_gradient(&s, &x);
            prop_assert!(g.trace().abs() <= 1e-10 * g.norm().max(1e-300));
        }

        #[test]
        fn oseen_symmetry_and_homogeneity(d in prop::array::uniform3(-2.0f64..2.0)) {
            let x = Vec3::from(d);
            prop_assume!(x.norm() > 1e-3);
            let u = oseen_tensor(&x).unwrap();
            prop_assert!((u - u.transpose()).norm() == 0.0);
            prop_assert!((oseen_tensor(&(x * 2.0)).unwrap() * 2.0 - u).norm() <= 1e-14 * u.norm());
            prop_assert!((oseen_tensor(&(-x)).unwrap() - u).norm() == 0.0);
        }

        #[test]
        fn pressure_homogeneity(s in strain(), x in exterior_point()) {
            let p = stresslet_pressure(&s, &x).unwrap();
            let p2 = stresslet_pressure(&s, &(x * 2.0)).unwrap();
            prop_assert!((p2 * 8.0 - p).abs() <= 1e-13 * (1.0 + p.abs()));
        }

        #[test]
        fn far_part_dominates_remainder(s in strain(), dist in 2.0f64..100.0, d in prop::array::uniform3(-1.0f64..1.0)) {
            let dir = Vec3::from(d);
            prop_assume!(dir.norm() > 1e-3);
            let radius = 0.01;
            let x = dir.normalize() * dist * radius;
            let (_, w) = stresslet_gradient_split(&s, &x, radius).unwrap();
            // ‖W‖ |x|⁵ / r⁵ stays bounded by a fixed multiple of ‖S‖
            prop_assert!(w.norm() * dist.powi(5) <= 60.0 * s.norm() + 1e-12);
        }
    }
}
