//! Centre ensembles: hard-core (Matérn type I) thinned Poisson, cubic lattices and
//! an adversarial clustered generator.
//!
//! Every sample draws from its own ChaCha8 stream keyed by the process's 64-bit seed,
//! so identical specs produce bit-identical point lists.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::Domain;
use crate::error::{invalid, Error, Result};
use crate::neighbors::nearest_neighbor_distances;
use crate::Vec3;

/// Packing proxy `δ (4π/3) (R/2)³` above which hard-core sampling is refused.
pub const JAMMING_LIMIT: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    HardcorePoisson,
    Lattice,
    Clustered,
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardcore_poisson" | "hardcore" | "poisson" => Ok(Self::HardcorePoisson),
            "lattice" => Ok(Self::Lattice),
            "clustered" => Ok(Self::Clustered),
            other => invalid(format!("unknown process kind '{other}'")),
        }
    }
}

impl std::fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::HardcorePoisson => "hardcore_poisson",
            Self::Lattice => "lattice",
            Self::Clustered => "clustered",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Fraction of lattice points that receive a twin.
    pub pair_fraction: f64,
    /// Distance between a point and its twin.
    pub pair_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    /// Points per unit volume (parent intensity for the hard-core kind).
    pub intensity: f64,
    /// Hard-core distance `R`.
    #[serde(default)]
    pub hardcore: f64,
    #[serde(default)]
    pub window: Domain,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cluster: Option<ClusterParams>,
}

impl ProcessSpec {
    pub fn hardcore_poisson(intensity: f64, hardcore: f64, window: Domain, seed: u64) -> Self {
        Self {
            kind: ProcessKind::HardcorePoisson,
            intensity,
            hardcore,
            window,
            seed,
            cluster: None,
        }
    }

    pub fn lattice(intensity: f64, window: Domain) -> Self {
        Self {
            kind: ProcessKind::Lattice,
            intensity,
            hardcore: 0.0,
            window,
            seed: 0,
            cluster: None,
        }
    }

    pub fn clustered(
        intensity: f64,
        window: Domain,
        pair_fraction: f64,
        pair_gap: f64,
        seed: u64,
    ) -> Self {
        Self {
            kind: ProcessKind::Clustered,
            intensity,
            hardcore: 0.0,
            window,
            seed,
            cluster: Some(ClusterParams {
                pair_fraction,
                pair_gap,
            }),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// `δ (4π/3) (R/2)³`.
    pub fn packing_proxy(&self) -> f64 {
        self.intensity * 4.0 * PI / 3.0 * (0.5 * self.hardcore).powi(3)
    }

    fn validate(&self) -> Result<()> {
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return invalid(format!(
                "intensity must be positive, got {}",
                self.intensity
            ));
        }
        if !(self.hardcore >= 0.0 && self.hardcore.is_finite()) {
            return invalid(format!(
                "hard-core distance must be nonnegative, got {}",
                self.hardcore
            ));
        }
        Domain::new(self.window.min, self.window.max)?;
        Ok(())
    }

    /// Dispatches on [`ProcessKind`].
    pub fn sample(&self) -> Result<Vec<Vec3>> {
        match self.kind {
            ProcessKind::HardcorePoisson => sample_hardcore_poisson(self),
            ProcessKind::Lattice => sample_lattice(self),
            ProcessKind::Clustered => sample_clustered(self),
        }
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

const STREAM_PARENTS: u64 = 1;
const STREAM_TWINS: u64 = 2;

/// Poisson parents on the window padded by `R`, Matérn-I thinning (every point with a
/// parent neighbour closer than `R` is deleted), survivors inside the window.
pub fn sample_hardcore_poisson(spec: &ProcessSpec) -> Result<Vec<Vec3>> {
    if spec.kind != ProcessKind::HardcorePoisson {
        return invalid("spec is not a hard-core Poisson process");
    }
    spec.validate()?;
    let proxy = spec.packing_proxy();
    if proxy >= JAMMING_LIMIT {
        return Err(Error::Jamming { proxy });
    }
    let padded = spec.window.padded(spec.hardcore);
    let mut rng = spec.rng(STREAM_PARENTS);
    let mean = spec.intensity * padded.volume();
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidArgument(format!("poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let parents: Vec<Vec3> = (0..count)
        .map(|_| padded.from_unit([rng.random(), rng.random(), rng.random()]))
        .collect();
    if spec.hardcore == 0.0 {
        return Ok(parents
            .into_iter()
            .filter(|p| spec.window.contains(p))
            .collect());
    }
    let nearest = nearest_neighbor_distances(&parents);
    Ok(parents
        .into_iter()
        .zip(nearest)
        .filter(|(p, d)| *d >= spec.hardcore && spec.window.contains(p))
        .map(|(p, _)| p)
        .collect())
}

/// Cell-centred cubic lattice with `⌈δ |window|⌉` points. When the count is not a
/// perfect cube the first points of the next larger cube are kept in x-fastest order.
pub fn sample_lattice(spec: &ProcessSpec) -> Result<Vec<Vec3>> {
    if spec.kind == ProcessKind::HardcorePoisson {
        return invalid("spec is a hard-core Poisson process");
    }
    spec.validate()?;
    let count = (spec.intensity * spec.window.volume() - 1e-9)
        .ceil()
        .max(1.0) as usize;
    let mut side = (count as f64).cbrt().round() as usize;
    while side.pow(3) < count {
        side += 1;
    }
    let inv = 1.0 / side as f64;
    let mut out = Vec::with_capacity(count);
    'fill: for k in 0..side {
        for j in 0..side {
            for i in 0..side {
                if out.len() == count {
                    break 'fill;
                }
                out.push(spec.window.from_unit([
                    (i as f64 + 0.5) * inv,
                    (j as f64 + 0.5) * inv,
                    (k as f64 + 0.5) * inv,
                ]));
            }
        }
    }
    Ok(out)
}

/// Lattice base where a fraction `q` of points (chosen by a seeded shuffle) gets a
/// twin at distance `g` in a random direction. The base keeps `⌈δ |window|⌉` points,
/// so the output holds `n (1 + q)` points; twins falling outside the window are
/// mirrored to the opposite direction.
pub fn sample_clustered(spec: &ProcessSpec) -> Result<Vec<Vec3>> {
    if spec.kind != ProcessKind::Clustered {
        return invalid("spec is not a clustered process");
    }
    let params = spec
        .cluster
        .ok_or_else(|| Error::InvalidArgument("clustered process needs cluster params".into()))?;
    if !(params.pair_fraction >= 0.0 && params.pair_fraction <= 1.0) {
        return invalid(format!(
            "pair fraction must lie in [0, 1], got {}",
            params.pair_fraction
        ));
    }
    if !(params.pair_gap > 0.0 && params.pair_gap.is_finite()) {
        return invalid(format!(
            "pair gap must be positive, got {}",
            params.pair_gap
        ));
    }
    let mut points = sample_lattice(spec)?;
    let n = points.len();
    let twins = (params.pair_fraction * n as f64).round() as usize;
    if twins == 0 {
        return Ok(points);
    }
    let mut rng = spec.rng(STREAM_TWINS);
    let mut order: Vec<usize> = (0..n).collect();
    // partial Fisher–Yates: the first `twins` entries are a uniform sample
    for i in 0..twins {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut chosen = order[..twins].to_vec();
    chosen.sort_unstable();
    for i in chosen {
        let dir = random_direction(&mut rng);
        let base = points[i];
        let mut twin = base + dir * params.pair_gap;
        if !spec.window.contains(&twin) {
            twin = base - dir * params.pair_gap;
        }
        points.push(twin);
    }
    Ok(points)
}

fn random_direction(rng: &mut impl Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Independent random thinning to exactly `count` points (order preserved).
/// Keeps stationarity and the hard core of the input.
pub fn subsample(points: &[Vec3], count: usize, seed: u64) -> Result<Vec<Vec3>> {
    if count > points.len() {
        return invalid(format!("cannot keep {count} of {} points", points.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut keep = order[..count].to_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| points[i]).collect())
}

/// Expected Matérn-I survivor intensity `δ exp(−δ (4π/3) R³)`.
pub fn matern_survivor_intensity(parent_intensity: f64, hardcore: f64) -> f64 {
    parent_intensity * (-parent_intensity * 4.0 * PI / 3.0 * hardcore.powi(3)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbors::nearest_brute_force;

    #[test]
    fn lattice_examples() {
        let pts = sample_lattice(&ProcessSpec::lattice(8.0, Domain::unit_cube())).unwrap();
        assert_eq!(pts.len(), 8);
        assert!(pts
            .iter()
            .any(|p| (p - Vec3::new(0.25, 0.25, 0.25)).norm() < 1e-15));
        let gap = nearest_brute_force(&pts)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!((gap - 0.5).abs() < 1e-15);
        let big = sample_lattice(&ProcessSpec::lattice(1000.0, Domain::unit_cube())).unwrap();
        let gap = nearest_brute_force(&big)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!((gap * 1000f64.cbrt() - 1.0).abs() < 1e-12);
        let odd = sample_lattice(&ProcessSpec::lattice(10.0, Domain::unit_cube())).unwrap();
        assert_eq!(odd.len(), 10);
    }

    #[test]
    fn hardcore_respects_distance_and_is_reproducible() {
        for seed in 0..5 {
            let spec = ProcessSpec::hardcore_poisson(400.0, 0.08, Domain::unit_cube(), seed);
            let a = sample_hardcore_poisson(&spec).unwrap();
            let b = sample_hardcore_poisson(&spec).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|p| spec.window.contains(p)));
            let gap = nearest_brute_force(&a)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            assert!(gap >= 0.08);
        }
    }

    #[test]
    fn hardcore_rejects_jammed_specs() {
        let spec = ProcessSpec::hardcore_poisson(1000.0, 0.2, Domain::unit_cube(), 1);
        assert!(matches!(
            sample_hardcore_poisson(&spec),
            Err(Error::Jamming { .. })
        ));
    }

    #[test]
    fn clustered_examples() {
        let lattice = sample_lattice(&ProcessSpec::lattice(27.0, Domain::unit_cube())).unwrap();
        let q0 = sample_clustered(&ProcessSpec::clustered(
            27.0,
            Domain::unit_cube(),
            0.0,
            1e-3,
            4,
        ))
        .unwrap();
        assert_eq!(lattice, q0);
        let spec = ProcessSpec::clustered(1000.0, Domain::unit_cube(), 0.5, 1e-4, 9);
        let pts = sample_clustered(&spec).unwrap();
        assert_eq!(pts.len(), 1500);
        let gap = nearest_brute_force(&pts)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!((gap - 1e-4).abs() < 1e-15);
        assert!(sample_clustered(&ProcessSpec::clustered(
            8.0,
            Domain::unit_cube(),
            0.5,
            0.0,
            1
        ))
        .is_err());
    }

    #[test]
    fn subsample_keeps_exact_count() {
        let spec = ProcessSpec::hardcore_poisson(300.0, 0.05, Domain::unit_cube(), 2);
        let pts = sample_hardcore_poisson(&spec).unwrap();
        let kept = subsample(&pts, 100, 5).unwrap();
        assert_eq!(kept.len(), 100);
        assert!(kept.iter().all(|p| pts.contains(p)));
        assert!(subsample(&pts, pts.len() + 1, 5).is_err());
    }
}
