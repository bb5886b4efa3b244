//! Finite-sample audits of the separation (B1), clustering (B2) and
//! limit-density (A0) assumptions, the ball-averaged strain lemma and the
//! two-point correlation criterion.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BallConfiguration, DensityField, Domain};
use crate::error::{invalid, Result};
use crate::kernels::SmoothField;
use crate::neighbors::{for_each_pair_within, nearest_neighbor_distances};
use crate::{Mat3, Vec3};

fn inf_as_null<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn null_as_inf<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct B1Report {
    pub pass: bool,
    #[serde(serialize_with = "inf_as_null", deserialize_with = "null_as_inf")]
    pub min_gap: f64,
    pub m: f64,
}

/// Passes iff every pair of centres is at least `M r_n` apart.
pub fn check_b1(config: &BallConfiguration, m: f64) -> Result<B1Report> {
    if !(m > 2.0) {
        return invalid(format!("separation constant M must exceed 2, got {m}"));
    }
    let min_gap = config.min_gap();
    Ok(B1Report {
        pass: min_gap >= m * config.radius(),
        min_gap,
        m,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct B2Row {
    pub eta: f64,
    pub count: usize,
    pub ratio: f64,
}

/// `#{i : ∃ j ≠ i, |x_i − x_j| ≤ η n^{-1/3}}` and its ratio to `η³ n` on an η grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct B2Profile {
    pub n: usize,
    pub rows: Vec<B2Row>,
}

impl B2Profile {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    /// Largest ratio over rows with `lo ≤ η ≤ hi`.
    pub fn max_ratio_between(&self, lo: f64, hi: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.eta >= lo * (1.0 - 1e-12) && r.eta <= hi * (1.0 + 1e-12))
            .map(|r| r.ratio)
            .fold(0.0, f64::max)
    }
}

/// 25 log-spaced values in `[0.05, 4]`.
pub fn default_eta_grid() -> Vec<f64> {
    log_grid(0.05, 4.0, 25)
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn b2_profile(config: &BallConfiguration, etas: &[f64]) -> Result<B2Profile> {
    b2_profile_points(config.centers(), etas)
}

pub fn b2_profile_points(points: &[Vec3], etas: &[f64]) -> Result<B2Profile> {
    if etas.iter().any(|e| !(*e > 0.0)) {
        return invalid("eta values must be positive");
    }
    if etas.windows(2).any(|w| w[1] < w[0]) {
        return invalid("eta values must be sorted");
    }
    let n = points.len();
    let scale = (n as f64).powf(-1.0 / 3.0);
    let mut nearest = nearest_neighbor_distances(points);
    nearest.sort_by(f64::total_cmp);
    let rows = etas
        .iter()
        .map(|&eta| {
            let threshold = eta * scale;
            let count = nearest.partition_point(|d| *d <= threshold);
            B2Row {
                eta,
                count,
                ratio: count as f64 / (eta.powi(3) * n as f64),
            }
        })
        .collect();
    Ok(B2Profile { n, rows })
}

/// Scalar test function for the weak-convergence audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// `∏_a cos(2π k_a (x_a − min_a) / L_a)` over a box.
    Trig {
        freq: [u32; 3],
        domain: Domain,
    },
    /// `(1 − |x − c|²/R²)⁴` on `|x − c| < R`.
    Bump {
        center: [f64; 3],
        radius: f64,
    },
    /// `inner + value`.
    Shifted {
        inner: Box<TestFunction>,
        value: f64,
    },
}

impl TestFunction {
    pub fn value(&self, x: &Vec3) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Trig { freq, domain } => {
                let l = domain.lengths();
                (0..3)
                    .map(|a| (2.0 * PI * freq[a] as f64 * (x[a] - domain.min[a]) / l[a]).cos())
                    .product()
            }
            Self::Bump { center, radius } => {
                let s = (x - Vec3::from(*center)).norm_squared() / (radius * radius);
                if s < 1.0 {
                    (1.0 - s).powi(4)
                } else {
                    0.0
                }
            }
            Self::Shifted { inner, value } => inner.value(x) + value,
        }
    }

    pub fn laplacian(&self, x: &Vec3) -> f64 {
        match self {
            Self::Constant { .. } => 0.0,
            Self::Trig { freq, domain } => {
                let l = domain.lengths();
                let k2: f64 = (0..3)
                    .map(|a| (2.0 * PI * freq[a] as f64 / l[a]).powi(2))
                    .sum();
                -k2 * self.value(x)
            }
            Self::Bump { center, radius } => {
                let r2 = radius * radius;
                let y2 = (x - Vec3::from(*center)).norm_squared();
                let s = y2 / r2;
                if s >= 1.0 {
                    return 0.0;
                }
                // Δ (1 − s)⁴ with s = |y|²/R²: −24(1 − s)³/R² + 48(1 − s)² |y|²/R⁴
                -24.0 * (1.0 - s).powi(3) / r2 + 48.0 * (1.0 - s).powi(2) * y2 / (r2 * r2)
            }
            Self::Shifted { inner, .. } => inner.laplacian(x),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Self::Constant { value } => value.abs(),
            Self::Trig { .. } | Self::Bump { .. } => 1.0,
            Self::Shifted { inner, value } => inner.sup_norm() + value.abs(),
        }
    }
}

/// Tensor-product trigonometric polynomials of degree ≤ 3 on `domain` plus ten
/// seeded bumps inside it.
pub fn default_test_family(domain: &Domain, seed: u64) -> Vec<TestFunction> {
    let mut out = Vec::new();
    for kz in 0..=3 {
        for ky in 0..=3 {
            for kx in 0..=3 {
                out.push(TestFunction::Trig {
                    freq: [kx, ky, kz],
                    domain: *domain,
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = domain.lengths();
    let lmin = l[0].min(l[1]).min(l[2]);
    for _ in 0..10 {
        let radius = lmin * rng.random_range(0.15..0.35);
        let u: [f64; 3] = [0, 1, 2].map(|a| {
            let margin = radius / l[a];
            rng.random_range(margin..(1.0 - margin))
        });
        let c = domain.from_unit(u);
        out.push(TestFunction::Bump {
            center: [c[0], c[1], c[2]],
            radius,
        });
    }
    out
}

/// `(1/n) Σ g(x_i) − ∫ g ρ`.
pub fn empirical_minus_limit(
    config: &BallConfiguration,
    rho: &DensityField,
    g: &TestFunction,
) -> f64 {
    let n = config.len() as f64;
    let empirical: f64 = config.centers().iter().map(|x| g.value(x)).sum::<f64>() / n;
    empirical - rho.integrate(|x| g.value(x))
}

/// `max_g |(1/n) Σ g(x_i) − ∫ g ρ| / ‖g‖_∞`.
pub fn a0_discrepancy(
    config: &BallConfiguration,
    rho: &DensityField,
    tests: &[TestFunction],
) -> Result<f64> {
    if tests.is_empty() {
        return invalid("a0 discrepancy needs at least one test function");
    }
    Ok(tests
        .iter()
        .map(|g| empirical_minus_limit(config, rho, g).abs() / g.sup_norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max))
}

fn sym(m: &Mat3) -> Mat3 {
    (m + m.transpose()) * 0.5
}

/// `‖Σ_i Dφ(x_i) ∫_{B_i} g − λ ∫ ρ Dφ g‖_F`, ball integrals by
/// `|B| (g(x_i) + r²/10 Δg(x_i))`.
pub fn weak_star_lemma_residual(
    config: &BallConfiguration,
    rho: &DensityField,
    phi: &dyn SmoothField,
    g: &TestFunction,
) -> f64 {
    let r = config.radius();
    let vol = config.ball_volume();
    let discrete: Mat3 = config
        .centers()
        .iter()
        .map(|x| sym(&phi.gradient(x)) * (vol * (g.value(x) + r * r / 10.0 * g.laplacian(x))))
        .sum();
    let lambda = config.volume_fraction();
    let mut continuum = Mat3::zeros();
    for (x, v) in rho.cells() {
        if v != 0.0 {
            continuum += sym(&phi.gradient(&x)) * (v * g.value(&x));
        }
    }
    continuum *= lambda * rho.cell_volume();
    (discrete - continuum).norm()
}

/// Translation-corrected pair-correlation estimate on a box window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub edges: Vec<f64>,
    /// `ρ₂` per bin (zero for empty bins).
    pub rho2: Vec<f64>,
    /// Ordered pair counts per bin.
    pub counts: Vec<u64>,
    /// Bins without a single pair.
    pub empty: Vec<bool>,
    /// Mean intensity of the samples.
    pub intensity: f64,
    /// `ρ₂ / δ²`, with `δ²` estimated by the mean of `N(N − 1)/|W|²`.
    pub ratio: Vec<f64>,
    pub samples: usize,
}

pub const MIN_PAIR_SAMPLES: usize = 20;

pub fn pair_correlation_estimate(
    samples: &[Vec<Vec3>],
    window: &Domain,
    edges: &[f64],
) -> Result<PairCorrelation> {
    if samples.len() < MIN_PAIR_SAMPLES {
        return invalid(format!(
            "pair correlation needs at least {MIN_PAIR_SAMPLES} samples, got {}",
            samples.len()
        ));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) || edges[0] < 0.0 {
        return invalid("bin edges must be nonnegative and strictly increasing");
    }
    let nbins = edges.len() - 1;
    let rmax = edges[nbins];
    let l = window.lengths();
    let vol = window.volume();
    let mut weighted = vec![0.0; nbins];
    let mut counts = vec![0u64; nbins];
    let mut lambda2 = 0.0;
    let mut total_points = 0usize;
    for pts in samples {
        let n = pts.len();
        total_points += n;
        lambda2 += n as f64 * (n as f64 - 1.0) / (vol * vol);
        for_each_pair_within(pts, rmax, |i, j, d| {
            if d < edges[0] {
                return;
            }
            let bin = edges.partition_point(|e| *e <= d) - 1;
            if bin >= nbins {
                return;
            }
            let y = pts[i] - pts[j];
            let overlap: f64 = (0..3).map(|a| (l[a] - y[a].abs()).max(0.0)).product();
            if overlap > 0.0 {
                // ordered pairs (i, j) and (j, i)
                weighted[bin] += 2.0 / overlap;
                counts[bin] += 2;
            }
        });
    }
    let k = samples.len() as f64;
    lambda2 /= k;
    let intensity = total_points as f64 / (k * vol);
    let mut rho2 = Vec::with_capacity(nbins);
    let mut ratio = Vec::with_capacity(nbins);
    for b in 0..nbins {
        let shell = 4.0 * PI / 3.0 * (edges[b + 1].powi(3) - edges[b].powi(3));
        let est = weighted[b] / (k * shell);
        rho2.push(est);
        ratio.push(if lambda2 > 0.0 { est / lambda2 } else { 0.0 });
    }
    Ok(PairCorrelation {
        edges: edges.to_vec(),
        rho2,
        empty: counts.iter().map(|c| *c == 0).collect(),
        counts,
        intensity,
        ratio,
        samples: samples.len(),
    })
}

/// JSON report emitted by the `check` subcommand.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub n: usize,
    pub radius: f64,
    pub lambda: f64,
    pub b1: B1Report,
    pub b2_profile: Vec<B2Row>,
    pub a0: A0Report,
    pub pair_correlation: Vec<PairBin>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct A0Report {
    pub discrepancy: f64,
    pub tests: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub rho2: f64,
    pub ratio: f64,
    pub count: u64,
    pub empty: bool,
}

impl PairCorrelation {
    pub fn bins(&self) -> Vec<PairBin> {
        (0..self.rho2.len())
            .map(|b| PairBin {
                r_lo: self.edges[b],
                r_hi: self.edges[b + 1],
                rho2: self.rho2[b],
                ratio: self.ratio[b],
                count: self.counts[b],
                empty: self.empty[b],
            })
            .collect()
    }
}
