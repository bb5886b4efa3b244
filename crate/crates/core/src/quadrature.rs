//! Gauss–Legendre rules, product rules on spheres and balls, and stratified
//! Monte-Carlo sampling of boxes.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Domain;
use crate::Vec3;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ`, uniform in `φ`.
///
/// With `order` polar nodes and `2 * order` azimuthal nodes the rule is exact for
/// spherical polynomials of degree `2 * order - 1`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub const DEFAULT_ORDER: usize = 24;

    pub fn new(order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let nphi = 2 * order;
        let dphi = 2.0 * PI / nphi as f64;
        let mut directions = Vec::with_capacity(order * nphi);
        let mut weights = Vec::with_capacity(order * nphi);
        for (ct, w) in gl.nodes.iter().zip(&gl.weights) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for k in 0..nphi {
                let phi = (k as f64 + 0.5) * dphi;
                directions.push(Vec3::new(st * phi.cos(), st * phi.sin(), *ct));
                weights.push(w * dphi);
            }
        }
        Self {
            directions,
            weights,
        }
    }

    /// `∮_{|x - center| = radius} f ds`.
    pub fn integrate<T>(&self, center: &Vec3, radius: f64, f: impl Fn(&Vec3, &Vec3) -> T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        let area = radius * radius;
        self.directions
            .iter()
            .zip(&self.weights)
            .fold(T::default(), |acc, (nu, w)| {
                acc + f(&(center + nu * radius), nu) * (w * area)
            })
    }
}

/// Product rule on a spherical shell `a ≤ |x − c| ≤ b`: Gauss–Legendre in the radius,
/// [`SphereRule`] in angle. Returns `(point, weight)` pairs.
pub fn shell_points(
    center: &Vec3,
    a: f64,
    b: f64,
    radial: &GaussLegendre,
    sphere: &SphereRule,
) -> Vec<(Vec3, f64)> {
    let mut out = Vec::with_capacity(radial.nodes.len() * sphere.weights.len());
    for (r, wr) in radial.on_interval(a, b) {
        for (nu, wa) in sphere.directions.iter().zip(&sphere.weights) {
            out.push((center + nu * r, wr * wa * r * r));
        }
    }
    out
}

/// One uniformly jittered sample in each of `strata³` sub-boxes of `region`.
pub fn stratified_points(region: &Domain, strata: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv = 1.0 / strata as f64;
    let mut out = Vec::with_capacity(strata.pow(3));
    for k in 0..strata {
        for j in 0..strata {
            for i in 0..strata {
                let u = [
                    (i as f64 + rng.random::<f64>()) * inv,
                    (j as f64 + rng.random::<f64>()) * inv,
                    (k as f64 + rng.random::<f64>()) * inv,
                ];
                out.push(region.from_unit(u));
            }
        }
    }
    out
}
