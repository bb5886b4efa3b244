use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::Domain;
use crate::error::{invalid, Result};
use crate::Vec3;

/// Named analytic body-force families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    /// `f = ∇g × a` with `g = exp(−|x − c|²/(2w²))`; divergence free.
    GaussianBump {
        center: [f64; 3],
        width: f64,
        axis: [f64; 3],
    },
    /// `f = ∇b × a` with the compact bump `b = (1 − |x − c|²/R²)⁴`; divergence free.
    CurlBump {
        center: [f64; 3],
        radius: f64,
        axis: [f64; 3],
    },
    /// `f = a sin(2π (z − z₀)/L) e_x` inside `domain`, zero outside.
    Shear { amplitude: f64, domain: Domain },
    /// Point force `F` smeared by a normalised `(1 − s²)⁴` mollifier of radius `ε`.
    PointSmoothed {
        center: [f64; 3],
        epsilon: f64,
        force: [f64; 3],
    },
}

impl Forcing {
    /// Default bump centred in the unit cube.
    pub fn default_bump() -> Self {
        Self::CurlBump {
            center: [0.5; 3],
            radius: 0.35,
            axis: [0.0, 0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::GaussianBump { width, .. } => *width > 0.0,
            Self::CurlBump { radius, .. } => *radius > 0.0,
            Self::Shear { amplitude, .. } => amplitude.is_finite(),
            Self::PointSmoothed { epsilon, .. } => *epsilon > 0.0,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("invalid forcing parameters: {self:?}"))
        }
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        match self {
            Self::GaussianBump {
                center,
                width,
                axis,
            } => {
                let d = x - Vec3::from(*center);
                let g = (-d.norm_squared() / (2.0 * width * width)).exp();
                (d * (-g / (width * width))).cross(&Vec3::from(*axis))
            }
            Self::CurlBump {
                center,
                radius,
                axis,
            } => {
                let d = x - Vec3::from(*center);
                let s2 = d.norm_squared() / (radius * radius);
                if s2 >= 1.0 {
                    return Vec3::zeros();
                }
                let grad = d * (-8.0 * (1.0 - s2).powi(3) / (radius * radius));
                grad.cross(&Vec3::from(*axis))
            }
            Self::Shear { amplitude, domain } => {
                if !domain.contains(x) {
                    return Vec3::zeros();
                }
                let l = domain.lengths()[2];
                Vec3::new(
                    amplitude * (2.0 * PI * (x[2] - domain.min[2]) / l).sin(),
                    0.0,
                    0.0,
                )
            }
            Self::PointSmoothed {
                center,
                epsilon,
                force,
            } => {
                let s2 = (x - Vec3::from(*center)).norm_squared() / (epsilon * epsilon);
                if s2 >= 1.0 {
                    return Vec3::zeros();
                }
                let norm = 10395.0 / (1536.0 * PI * epsilon.powi(3));
                Vec3::from(*force) * (norm * (1.0 - s2).powi(4))
            }
        }
    }
}
