//! Evaluable flow fields and their linear combinations.

use std::sync::Arc;

use crate::config::{BallConfiguration, TraceFreeSymMat};
use crate::kernels::{gradient_exterior, velocity_exterior, SmoothField};
use crate::{Mat3, Vec3};

/// Velocity (and gradient, optionally pressure) at arbitrary points.
pub trait VectorField: Send + Sync {
    fn velocity(&self, x: &Vec3) -> Vec3;
    /// `G[(i, j)] = ∂_j u_i`.
    fn gradient(&self, x: &Vec3) -> Mat3;
    fn pressure(&self, _x: &Vec3) -> Option<f64> {
        None
    }
}

/// Sum of rescaled ball responses `Σ_j r V[S_j]((x − x_j)/r)`.
#[derive(Clone, Debug)]
pub struct StressletSum {
    centers: Vec<Vec3>,
    strains: Vec<Mat3>,
    radius: f64,
    mu: f64,
}

impl StressletSum {
    pub fn new(centers: Vec<Vec3>, strains: &[TraceFreeSymMat], radius: f64, mu: f64) -> Self {
        assert_eq!(centers.len(), strains.len(), "one strain per ball");
        Self {
            centers,
            strains: strains.iter().map(|s| s.to_matrix()).collect(),
            radius,
            mu,
        }
    }

    /// Responses of the selected balls of `config`.
    pub fn for_indices(
        config: &BallConfiguration,
        indices: &[usize],
        strains: &[TraceFreeSymMat],
        mu: f64,
    ) -> Self {
        let centers = indices.iter().map(|&i| config.centers()[i]).collect();
        Self::new(centers, strains, config.radius(), mu)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Velocity summed in the given order of ball indices.
    pub fn velocity_in_order(&self, x: &Vec3, order: &[usize]) -> Vec3 {
        let inv = 1.0 / self.radius;
        order
            .iter()
            .fold(Vec3::zeros(), |acc, &j| acc + self.one_velocity(j, x, inv))
    }

    #[inline]
    fn one_velocity(&self, j: usize, x: &Vec3, inv: f64) -> Vec3 {
        let y = (x - self.centers[j]) * inv;
        let s = &self.strains[j];
        if y.norm_squared() <= 1.0 {
            s * y * self.radius
        } else {
            velocity_exterior(s, &y) * self.radius
        }
    }
}

impl VectorField for StressletSum {
    fn velocity(&self, x: &Vec3) -> Vec3 {
        let inv = 1.0 / self.radius;
        (0..self.centers.len()).fold(Vec3::zeros(), |acc, j| acc + self.one_velocity(j, x, inv))
    }

    fn gradient(&self, x: &Vec3) -> Mat3 {
        let inv = 1.0 / self.radius;
        let mut g = Mat3::zeros();
        for (c, s) in self.centers.iter().zip(&self.strains) {
            let y = (x - c) * inv;
            if y.norm_squared() < 1.0 {
                g += s;
            } else {
                g += gradient_exterior(s, &y);
            }
        }
        g
    }

    fn pressure(&self, x: &Vec3) -> Option<f64> {
        let inv = 1.0 / self.radius;
        let mut p = 0.0;
        for (c, s) in self.centers.iter().zip(&self.strains) {
            let y = (x - c) * inv;
            let r2 = y.norm_squared();
            if r2 > 1.0 {
                p += 5.0 * self.mu * y.dot(&(s * y)) / (r2 * r2 * r2.sqrt());
            }
        }
        Some(p)
    }
}

/// `u(x) = A x` for a constant matrix `A`.
#[derive(Clone, Copy, Debug)]
pub struct LinearField(pub Mat3);

impl VectorField for LinearField {
    fn velocity(&self, x: &Vec3) -> Vec3 {
        self.0 * x
    }
    fn gradient(&self, _x: &Vec3) -> Mat3 {
        self.0
    }
    fn pressure(&self, _x: &Vec3) -> Option<f64> {
        Some(0.0)
    }
}

/// Adapter for analytic test fields.
pub struct Analytic<F>(pub F);

impl<F: SmoothField + Send> VectorField for Analytic<F> {
    fn velocity(&self, x: &Vec3) -> Vec3 {
        self.0.velocity(x)
    }
    fn gradient(&self, x: &Vec3) -> Mat3 {
        self.0.gradient(x)
    }
}

/// Tagged linear combination of field parts.
#[derive(Clone, Default)]
pub struct FlowField {
    terms: Vec<(String, f64, Arc<dyn VectorField>)>,
}

impl std::fmt::Debug for FlowField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(tag, c, _)| format!("{c:+}·{tag}"))
            .collect();
        write!(f, "FlowField[{}]", parts.join(" "))
    }
}

impl FlowField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(tag: impl Into<String>, part: impl VectorField + 'static) -> Self {
        Self {
            terms: vec![(tag.into(), 1.0, Arc::new(part))],
        }
    }

    pub fn from_arc(tag: impl Into<String>, part: Arc<dyn VectorField>) -> Self {
        Self {
            terms: vec![(tag.into(), 1.0, part)],
        }
    }

    pub fn plus(mut self, other: &FlowField) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn minus(mut self, other: &FlowField) -> Self {
        self.terms.extend(
            other
                .terms
                .iter()
                .map(|(t, c, p)| (t.clone(), -c, p.clone())),
        );
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= s);
        self
    }

    pub fn tags(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.0.as_str()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl VectorField for FlowField {
    fn velocity(&self, x: &Vec3) -> Vec3 {
        self.terms
            .iter()
            .fold(Vec3::zeros(), |acc, (_, c, p)| acc + p.velocity(x) * *c)
    }

    fn gradient(&self, x: &Vec3) -> Mat3 {
        self.terms
            .iter()
            .fold(Mat3::zeros(), |acc, (_, c, p)| acc + p.gradient(x) * *c)
    }

    fn pressure(&self, x: &Vec3) -> Option<f64> {
        let mut total = 0.0;
        for (_, c, p) in &self.terms {
            total += c * p.pressure(x)?;
        }
        Some(total)
    }
}
