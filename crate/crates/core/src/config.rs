//! Suspension state: ball configurations, limit densities, strain values and
//! the good/bad index partition.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::neighbors::nearest_neighbor_distances;
use crate::{Mat3, Vec3};

/// Axis-aligned box. The default is the unit cube, a set of measure one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for Domain {
    fn default() -> Self {
        Self::unit_cube()
    }
}

impl Domain {
    pub fn unit_cube() -> Self {
        Self {
            min: [0.0; 3],
            max: [1.0; 3],
        }
    }

    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if !(min[a].is_finite() && max[a].is_finite() && max[a] > min[a]) {
                return invalid(format!("empty or non-finite box along axis {a}"));
            }
        }
        Ok(Self { min, max })
    }

    /// Cube of side `side` centred at `center`.
    pub fn centered_cube(center: [f64; 3], side: f64) -> Self {
        let h = 0.5 * side;
        Self {
            min: [center[0] - h, center[1] - h, center[2] - h],
            max: [center[0] + h, center[1] + h, center[2] + h],
        }
    }

    pub fn lengths(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn volume(&self) -> f64 {
        let l = self.lengths();
        l[0] * l[1] * l[2]
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        )
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Box grown by `pad` on every side.
    pub fn padded(&self, pad: f64) -> Self {
        Self {
            min: [self.min[0] - pad, self.min[1] - pad, self.min[2] - pad],
            max: [self.max[0] + pad, self.max[1] + pad, self.max[2] + pad],
        }
    }

    pub fn translated(&self, v: &Vec3) -> Self {
        Self {
            min: [self.min[0] + v[0], self.min[1] + v[1], self.min[2] + v[2]],
            max: [self.max[0] + v[0], self.max[1] + v[1], self.max[2] + v[2]],
        }
    }

    /// Map a point of the unit cube onto this box.
    pub fn from_unit(&self, u: [f64; 3]) -> Vec3 {
        let l = self.lengths();
        Vec3::new(
            self.min[0] + u[0] * l[0],
            self.min[1] + u[1] * l[1],
            self.min[2] + u[2] * l[2],
        )
    }
}

/// Volume fraction `(4π/3) n r³` of `n` balls of radius `r`.
pub fn volume_fraction(n: usize, radius: f64) -> Result<f64> {
    if n == 0 {
        return invalid("volume fraction needs at least one ball");
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return invalid(format!("radius must be positive, got {radius}"));
    }
    Ok(4.0 * PI / 3.0 * n as f64 * radius.powi(3))
}

/// Inverse of [`volume_fraction`]: the radius giving volume fraction `lambda` with `n` balls.
pub fn radius_for(n: usize, lambda: f64) -> Result<f64> {
    if n == 0 {
        return invalid("radius needs at least one ball");
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("volume fraction must be positive, got {lambda}"));
    }
    Ok((3.0 * lambda / (4.0 * PI * n as f64)).cbrt())
}

/// `η = λ^θ`, the threshold used to split good from bad indices.
pub fn select_eta(lambda: f64, theta: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return invalid(format!("lambda must lie in (0, 1), got {lambda}"));
    }
    if !(theta > 0.0 && theta < 1.0 / 3.0) {
        return invalid(format!("theta must lie in (0, 1/3), got {theta}"));
    }
    Ok(lambda.powf(theta))
}

pub const DEFAULT_THETA: f64 = 0.15;

/// Symmetric trace-free 3x3 matrix, stored as `[xx, yy, zz, xy, xz, yz]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceFreeSymMat([f64; 6]);

impl TraceFreeSymMat {
    pub const ZERO: Self = Self([0.0; 6]);

    /// Builds from five independent entries; `zz = -xx - yy`.
    pub fn new(xx: f64, yy: f64, xy: f64, xz: f64, yz: f64) -> Self {
        Self([xx, yy, -xx - yy, xy, xz, yz])
    }

    /// Accepts six entries if they are finite and trace free to `1e-12` relative.
    pub fn from_entries(e: [f64; 6]) -> Result<Self> {
        if e.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite strain entry");
        }
        let m = Self(e);
        let tr = e[0] + e[1] + e[2];
        if tr.abs() > 1e-12 * m.norm().max(f64::MIN_POSITIVE) {
            return invalid(format!("strain not trace free (trace {tr:e})"));
        }
        Ok(m)
    }

    /// Symmetric, trace-free projection of an arbitrary matrix.
    pub fn project(m: &Mat3) -> Self {
        let tr3 = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)]) / 3.0;
        Self([
            m[(0, 0)] - tr3,
            m[(1, 1)] - tr3,
            m[(2, 2)] - tr3,
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
        ])
    }

    pub fn entries(&self) -> [f64; 6] {
        self.0
    }

    pub fn to_matrix(&self) -> Mat3 {
        let [xx, yy, zz, xy, xz, yz] = self.0;
        Mat3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Frobenius inner product `S : T`.
    pub fn contract(&self, other: &Self) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.contract(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|v| v * s))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.0;
        for (o, b) in out.iter_mut().zip(other.0) {
            *o += b;
        }
        Self(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `Q S Qᵀ` for an orthogonal `Q`.
    pub fn conjugate(&self, q: &Mat3) -> Self {
        Self::project(&(q * self.to_matrix() * q.transpose()))
    }

    /// Pure shear `S_xy = S_yx = 1`.
    pub fn unit_shear() -> Self {
        Self::new(0.0, 0.0, 1.0, 0.0, 0.0)
    }
}

/// Translation and rotation velocity of one ball.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub translation: [f64; 3],
    pub rotation: [f64; 3],
}

impl RigidMotion {
    pub fn new(translation: [f64; 3], rotation: [f64; 3]) -> Result<Self> {
        if translation
            .iter()
            .chain(rotation.iter())
            .any(|v| !v.is_finite())
        {
            return invalid("non-finite rigid motion");
        }
        Ok(Self {
            translation,
            rotation,
        })
    }

    /// `u + ω × (x − center)`.
    pub fn velocity(&self, center: &Vec3, x: &Vec3) -> Vec3 {
        Vec3::from(self.translation) + Vec3::from(self.rotation).cross(&(x - center))
    }
}

/// Centres and common radius of `n` closed, disjoint balls inside a domain box.
#[derive(Clone, Debug, PartialEq)]
pub struct BallConfiguration {
    centers: Vec<Vec3>,
    radius: f64,
    domain: Domain,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationJson {
    centers: Vec<[f64; 3]>,
    radius: f64,
    #[serde(default)]
    domain: Domain,
}

impl BallConfiguration {
    pub fn new(centers: Vec<Vec3>, radius: f64, domain: Domain) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidConfiguration("no balls".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfiguration(format!(
                "radius must be positive, got {radius}"
            )));
        }
        for (i, c) in centers.iter().enumerate() {
            if !c.iter().all(|v| v.is_finite()) || !domain.contains(c) {
                return Err(Error::InvalidConfiguration(format!(
                    "center {i} = {:?} outside the domain box",
                    [c[0], c[1], c[2]]
                )));
            }
        }
        let config = Self {
            centers,
            radius,
            domain,
        };
        let gap = config.min_gap();
        if gap < 2.0 * radius {
            return Err(Error::InvalidConfiguration(format!(
                "balls overlap: minimal center distance {gap:e} < 2r = {:e}",
                2.0 * radius
            )));
        }
        Ok(config)
    }

    /// Convenience constructor on the unit cube.
    pub fn in_unit_cube(centers: Vec<Vec3>, radius: f64) -> Result<Self> {
        Self::new(centers, radius, Domain::unit_cube())
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn volume_fraction(&self) -> f64 {
        4.0 * PI / 3.0 * self.centers.len() as f64 * self.radius.powi(3)
    }

    pub fn ball_volume(&self) -> f64 {
        4.0 * PI / 3.0 * self.radius.powi(3)
    }

    /// Distance from each centre to its nearest neighbour (`+∞` for a single ball).
    pub fn nearest_neighbor_distances(&self) -> Vec<f64> {
        nearest_neighbor_distances(&self.centers)
    }

    /// Minimal pairwise centre distance, `+∞` when `n < 2`.
    pub fn min_gap(&self) -> f64 {
        self.nearest_neighbor_distances()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Same balls with a different radius (validated).
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.centers.clone(), radius, self.domain)
    }

    /// Every centre and the domain shifted by `v`.
    pub fn translated(&self, v: &Vec3) -> Self {
        Self {
            centers: self.centers.iter().map(|c| c + v).collect(),
            radius: self.radius,
            domain: self.domain.translated(v),
        }
    }

    /// Index of the ball containing `x`, if any.
    pub fn ball_containing(&self, x: &Vec3) -> Option<usize> {
        let r2 = self.radius * self.radius;
        self.centers
            .iter()
            .position(|c| (x - c).norm_squared() < r2)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: ConfigurationJson = serde_json::from_str(s)?;
        Self::new(
            raw.centers.into_iter().map(Vec3::from).collect(),
            raw.radius,
            raw.domain,
        )
    }

    pub fn to_json_string(&self) -> Result<String> {
        let raw = ConfigurationJson {
            centers: self.centers.iter().map(|c| [c[0], c[1], c[2]]).collect(),
            radius: self.radius,
            domain: self.domain,
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}

/// Piecewise-constant density on an axis-aligned grid of cubic cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: f64,
    /// Row-major cell values, x fastest.
    pub values: Vec<f64>,
}

impl DensityField {
    pub const NORMALIZATION_TOL: f64 = 1e-3;

    pub fn new(dims: [usize; 3], origin: [f64; 3], spacing: f64, values: Vec<f64>) -> Result<Self> {
        let field = Self {
            dims,
            origin,
            spacing,
            values,
        };
        field.validate()?;
        Ok(field)
    }

    fn validate(&self) -> Result<()> {
        let count = self.dims.iter().product::<usize>();
        if count == 0 || self.values.len() != count {
            return Err(Error::InvalidDensity(format!(
                "expected {count} values for dims {:?}, got {}",
                self.dims,
                self.values.len()
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidDensity("spacing must be positive".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "negative or non-finite value {v}"
            )));
        }
        let total = self.integral();
        if (total - 1.0).abs() > Self::NORMALIZATION_TOL {
            return Err(Error::InvalidDensity(format!(
                "density integrates to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// `ρ ≡ 1/|box|` on an `n³` grid covering `domain` (must be a cube).
    pub fn uniform(domain: &Domain, n: usize) -> Result<Self> {
        Self::from_fn(domain, n, |_| 1.0)
    }

    /// Samples `f` at cell centres and rescales so that the grid integral is one.
    pub fn from_fn(domain: &Domain, n: usize, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let l = domain.lengths();
        if n == 0 || (l[0] - l[1]).abs() > 1e-12 * l[0] || (l[0] - l[2]).abs() > 1e-12 * l[0] {
            return invalid("density grid needs a cubic domain and n > 0");
        }
        let h = l[0] / n as f64;
        let mut values = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let x = Vec3::new(
                        domain.min[0] + (i as f64 + 0.5) * h,
                        domain.min[1] + (j as f64 + 0.5) * h,
                        domain.min[2] + (k as f64 + 0.5) * h,
                    );
                    values.push(f(&x).max(0.0));
                }
            }
        }
        let total: f64 = values.iter().sum::<f64>() * h.powi(3);
        if total <= 0.0 {
            return invalid("density vanishes identically");
        }
        values.iter_mut().for_each(|v| *v /= total);
        Self::new([n, n, n], domain.min, h, values)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.spacing;
        Vec3::new(
            self.origin[0] + (i as f64 + 0.5) * h,
            self.origin[1] + (j as f64 + 0.5) * h,
            self.origin[2] + (k as f64 + 0.5) * h,
        )
    }

    /// Iterator over `(cell centre, value)`.
    pub fn cells(&self) -> impl Iterator<Item = (Vec3, f64)> + '_ {
        let [nx, ny, _] = self.dims;
        self.values.iter().enumerate().map(move |(idx, v)| {
            let i = idx % nx;
            let j = (idx / nx) % ny;
            let k = idx / (nx * ny);
            (self.cell_center(i, j, k), *v)
        })
    }

    /// Piecewise-constant value; zero outside the grid.
    pub fn value_at(&self, x: &Vec3) -> f64 {
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let s = (x[a] - self.origin[a]) / self.spacing;
            if !(s >= 0.0) || s >= self.dims[a] as f64 {
                return 0.0;
            }
            ijk[a] = s as usize;
        }
        self.values[self.index(ijk[0], ijk[1], ijk[2])]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Grid quadrature of `ρ g`.
    pub fn integrate(&self, g: impl Fn(&Vec3) -> f64) -> f64 {
        self.cells()
            .map(|(x, v)| if v == 0.0 { 0.0 } else { v * g(&x) })
            .sum::<f64>()
            * self.cell_volume()
    }

    pub fn bounds(&self) -> Domain {
        let h = self.spacing;
        Domain {
            min: self.origin,
            max: [
                self.origin[0] + self.dims[0] as f64 * h,
                self.origin[1] + self.dims[1] as f64 * h,
                self.origin[2] + self.dims[2] as f64 * h,
            ],
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let field: Self = serde_json::from_str(s)?;
        field.validate()?;
        Ok(field)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Split of the indices into balls far from all others (good) and the rest (bad).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodBadPartition {
    pub eta: f64,
    pub good: Vec<usize>,
    pub bad: Vec<usize>,
}

impl GoodBadPartition {
    pub fn is_good(&self, i: usize) -> bool {
        self.good.binary_search(&i).is_ok()
    }
}

/// Index `i` is good iff every other centre is at least `η n^{-1/3}` away.
pub fn partition_good_bad(config: &BallConfiguration, eta: f64) -> Result<GoodBadPartition> {
    if !(eta > 0.0 && eta.is_finite()) {
        return invalid(format!("eta must be positive, got {eta}"));
    }
    let threshold = eta * (config.len() as f64).powf(-1.0 / 3.0);
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for (i, d) in config.nearest_neighbor_distances().into_iter().enumerate() {
        if d >= threshold {
            good.push(i);
        } else {
            bad.push(i);
        }
    }
    Ok(GoodBadPartition { eta, good, bad })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(points: &[[f64; 3]], r: f64) -> BallConfiguration {
        let domain = Domain::new([-1.0; 3], [11.0; 3]).unwrap();
        BallConfiguration::new(points.iter().map(|p| Vec3::from(*p)).collect(), r, domain).unwrap()
    }

    #[test]
    fn volume_fraction_examples() {
        assert!((volume_fraction(1, 1.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-15);
        let v = volume_fraction(1000, 0.0134).unwrap();
        assert!((v - 0.010_078_9).abs() < 1e-6, "{v}");
        let r = radius_for(1000, 0.01).unwrap();
        assert!((r - 0.013_365).abs() < 1e-6);
        assert!((volume_fraction(1000, r).unwrap() - 0.01).abs() < 1e-12);
        assert!(volume_fraction(0, 1.0).is_err());
        assert!(volume_fraction(3, -1.0).is_err());
        assert!(volume_fraction(3, 0.0).is_err());
    }

    #[test]
    fn eta_selection() {
        assert!((select_eta(0.01, 0.15).unwrap() - 0.501_187).abs() < 1e-6);
        let direct = (std::f64::consts::LN_10 * 0.04f64.log10() / 6.0).exp();
        assert!((select_eta(0.04, 1.0 / 6.0).unwrap() - direct).abs() < 1e-14);
        assert!((select_eta(0.04, 1.0 / 6.0).unwrap() - 0.584_80).abs() < 1e-5);
        assert!((select_eta(0.3, 1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert!(select_eta(0.01, 0.34).is_err());
        assert!(select_eta(0.01, 0.0).is_err());
        assert!(select_eta(1.5, 0.1).is_err());
    }

    #[test]
    fn partition_examples() {
        let two = cfg(&[[0.0; 3], [10.0, 0.0, 0.0]], 0.001);
        let p = partition_good_bad(&two, 1.0).unwrap();
        assert_eq!(p.good, vec![0, 1]);
        assert!(p.bad.is_empty());

        let three = cfg(&[[0.0; 3], [0.01, 0.0, 0.0], [10.0, 0.0, 0.0]], 0.001);
        let p = partition_good_bad(&three, 1.0).unwrap();
        assert_eq!(p.bad, vec![0, 1]);
        assert_eq!(p.good, vec![2]);

        // below min-gap / n^{-1/3} everything is good
        let eta = 0.9 * 0.01 * 3f64.cbrt();
        assert_eq!(partition_good_bad(&three, eta).unwrap().good.len(), 3);
        assert!(partition_good_bad(&three, 0.0).is_err());
    }

    #[test]
    fn configuration_rejects_overlap_and_escape() {
        let d = Domain::unit_cube();
        let overlap = vec![Vec3::new(0.5, 0.5, 0.5), Vec3::new(0.51, 0.5, 0.5)];
        assert!(BallConfiguration::new(overlap, 0.01, d).is_err());
        let outside = vec![Vec3::new(1.5, 0.5, 0.5)];
        assert!(BallConfiguration::new(outside, 0.01, d).is_err());
        assert!(BallConfiguration::new(vec![Vec3::new(0.5, 0.5, 0.5)], 0.0, d).is_err());
    }

    #[test]
    fn configuration_json_roundtrip() {
        let c = cfg(&[[0.0; 3], [1.0, 2.0, 3.0]], 0.1);
        let back = BallConfiguration::from_json_str(&c.to_json_string().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn density_normalization() {
        let d = DensityField::uniform(&Domain::unit_cube(), 8).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-12);
        assert_eq!(d.value_at(&Vec3::new(2.0, 0.5, 0.5)), 0.0);
        assert!((d.value_at(&Vec3::new(0.3, 0.5, 0.5)) - 1.0).abs() < 1e-12);
        let bad = DensityField {
            dims: [2, 1, 1],
            origin: [0.0; 3],
            spacing: 1.0,
            values: vec![0.5, 0.6],
        };
        assert!(DensityField::from_json_str(&serde_json::to_string(&bad).unwrap()).is_err());
        let neg = DensityField::new([2, 1, 1], [0.0; 3], 1.0, vec![1.5, -0.5]);
        assert!(neg.is_err());
    }

    #[test]
    fn trace_free_projection() {
        let m = Mat3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0);
        let s = TraceFreeSymMat::project(&m);
        assert!(s.trace().abs() <= 1e-12 * s.norm());
        let sm = s.to_matrix();
        assert_eq!(sm, sm.transpose());
        assert!(TraceFreeSymMat::from_entries([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!((s.contract(&s) - sm.component_mul(&sm).sum()).abs() < 1e-12);
    }
}
