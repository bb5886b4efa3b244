use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BallConfiguration, Domain};
use crate::error::{invalid, Result};
use crate::fields::VectorField;
use crate::quadrature::stratified_points;
use crate::Vec3;

pub const DEFAULT_STRATA: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Value,
    Gradient,
}

/// Fixed stratified sample of a box with points inside excluded balls removed.
///
/// Reusing one sampler for several fields gives paired estimates.
#[derive(Clone, Debug)]
pub struct NormSampler {
    points: Vec<Vec3>,
    cell_volume: f64,
}

impl NormSampler {
    pub fn new(
        region: &Domain,
        exclude: Option<&BallConfiguration>,
        strata: usize,
        seed: u64,
    ) -> Result<Self> {
        if strata == 0 {
            return invalid("at least one stratum per axis required");
        }
        let all = stratified_points(region, strata, seed);
        let total = all.len();
        let points: Vec<Vec3> = match exclude {
            Some(config) => {
                let index = BallIndex::new(config, region);
                all.into_iter().filter(|x| !index.covers(x)).collect()
            }
            None => all,
        };
        if points.is_empty() {
            return invalid("every sample point lies inside an excluded ball");
        }
        Ok(Self {
            points,
            cell_volume: region.volume() / total as f64,
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// `(∫ |v|^p)^{1/p}` over the region minus excluded balls.
    pub fn norm(&self, field: &dyn VectorField, p: f64, kind: NormKind) -> Result<f64> {
        self.norm_of(p, |x| match kind {
            NormKind::Value => field.velocity(x).norm(),
            NormKind::Gradient => field.gradient(x).norm(),
        })
    }

    /// Several norms from one pass over the shared sample points.
    pub fn paired_norms<const K: usize>(
        &self,
        p: f64,
        magnitudes: impl Fn(&Vec3) -> [f64; K] + Sync,
    ) -> Result<[f64; K]> {
        if !(p >= 1.0) {
            return invalid(format!("norm exponent must be at least 1, got {p}"));
        }
        let terms: Vec<[f64; K]> = self
            .points
            .par_iter()
            .map(|x| magnitudes(x).map(|m| m.powf(p)))
            .collect();
        let mut out = [0.0; K];
        for t in &terms {
            for (o, v) in out.iter_mut().zip(t) {
                *o += v;
            }
        }
        Ok(out.map(|s| (s * self.cell_volume).powf(1.0 / p)))
    }

    /// Norm of an arbitrary pointwise magnitude.
    pub fn norm_of(&self, p: f64, magnitude: impl Fn(&Vec3) -> f64 + Sync) -> Result<f64> {
        if !(p >= 1.0) {
            return invalid(format!("norm exponent must be at least 1, got {p}"));
        }
        let terms: Vec<f64> = self
            .points
            .par_iter()
            .map(|x| magnitude(x).powf(p))
            .collect();
        Ok((terms.iter().sum::<f64>() * self.cell_volume).powf(1.0 / p))
    }
}

/// `L^p` norm over `region`, excluding the balls of `exclude`, on `64³` strata.
pub fn field_norm(
    field: &dyn VectorField,
    region: &Domain,
    exclude: Option<&BallConfiguration>,
    p: f64,
    kind: NormKind,
) -> Result<f64> {
    NormSampler::new(region, exclude, DEFAULT_STRATA, 0)?.norm(field, p, kind)
}

/// Bucket grid of ball centres for membership queries.
struct BallIndex<'a> {
    config: &'a BallConfiguration,
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl<'a> BallIndex<'a> {
    fn new(config: &'a BallConfiguration, region: &Domain) -> Self {
        let r = config.radius();
        let padded = region.padded(r);
        let l = padded.lengths();
        let cell = (2.0 * r).max(l.iter().cloned().fold(0.0, f64::max) / 128.0);
        let dims = l.map(|v| ((v / cell).ceil() as usize).max(1));
        let origin = Vec3::from(padded.min);
        let mut buckets = vec![Vec::new(); dims.iter().product()];
        for (i, c) in config.centers().iter().enumerate() {
            if let Some(b) = Self::bucket(origin, cell, dims, c) {
                buckets[b].push(i);
            }
        }
        Self {
            config,
            origin,
            cell,
            dims,
            buckets,
        }
    }

    fn coords(origin: Vec3, cell: f64, dims: [usize; 3], x: &Vec3) -> Option<[usize; 3]> {
        let mut out = [0; 3];
        for a in 0..3 {
            let s = ((x[a] - origin[a]) / cell).floor();
            if s < 0.0 || s >= dims[a] as f64 {
                return None;
            }
            out[a] = s as usize;
        }
        Some(out)
    }

    fn bucket(origin: Vec3, cell: f64, dims: [usize; 3], x: &Vec3) -> Option<usize> {
        Self::coords(origin, cell, dims, x).map(|c| c[0] + dims[0] * (c[1] + dims[1] * c[2]))
    }

    fn covers(&self, x: &Vec3) -> bool {
        let Some(c) = Self::coords(self.origin, self.cell, self.dims, x) else {
            return false;
        };
        let r2 = self.config.radius().powi(2);
        for dk in -1i64..=1 {
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let n = [c[0] as i64 + di, c[1] as i64 + dj, c[2] as i64 + dk];
                    if (0..3).any(|a| n[a] < 0 || n[a] >= self.dims[a] as i64) {
                        continue;
                    }
                    let b = n[0] as usize
                        + self.dims[0] * (n[1] as usize + self.dims[1] * n[2] as usize);
                    if self.buckets[b]
                        .iter()
                        .any(|&i| (x - self.config.centers()[i]).norm_squared() < r2)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }
}
