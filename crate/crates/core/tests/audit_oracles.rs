use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use dilute_stokes::audit::{
    a0_discrepancy, b2_profile_points, pair_correlation_estimate, TestFunction,
};
use dilute_stokes::config::{BallConfiguration, DensityField, Domain};
use dilute_stokes::experiment::{fit_rate, median};
use dilute_stokes::process::{ProcessKind, ProcessSpec};
use dilute_stokes::Vec3;

fn brute_force_matern(intensity: f64, hardcore: f64, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pad = hardcore;
    let side = 1.0 + 2.0 * pad;
    let count = Poisson::new(intensity * side.powi(3))
        .unwrap()
        .sample(&mut rng) as usize;
    let parents: Vec<Vec3> = (0..count)
        .map(|_| Vec3::from_fn(|_, _| rng.random::<f64>() * side - pad))
        .collect();
    parents
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            (0..3).all(|a| (0.0..1.0).contains(&p[a]))
                && parents
                    .iter()
                    .enumerate()
                    .all(|(j, q)| j == *i || (*p - q).norm() >= hardcore)
        })
        .count()
}

#[test]
fn matern_survivors_match_brute_force_thinning() {
    let (intensity, hardcore) = (100.0, 0.1);
    let seeds = 500u64;
    let library: usize = (0..seeds)
        .map(|s| {
            ProcessSpec::hardcore_poisson(intensity, hardcore, Domain::unit_cube(), s)
                .sample()
                .unwrap()
                .len()
        })
        .sum();
    let oracle: usize = (0..seeds)
        .map(|s| brute_force_matern(intensity, hardcore, 10_000 + s))
        .sum();
    let (a, b) = (library as f64, oracle as f64);
    assert!((a - b).abs() < 0.02 * b, "library {a} oracle {b}");
}

#[test]
fn clustered_twins_are_counted_exactly() {
    let (q, g, n) = (0.5, 1e-4, 1000);
    let points = ProcessSpec::clustered(n as f64, Domain::unit_cube(), q, g, 4)
        .sample()
        .unwrap();
    let total = points.len();
    let threshold = 0.01 * (total as f64).powf(-1.0 / 3.0);
    let brute = (0..total)
        .filter(|&i| (0..total).any(|j| j != i && (points[i] - points[j]).norm() <= threshold))
        .count();
    let profile = b2_profile_points(&points, &[0.01]).unwrap();
    assert_eq!(brute, 1000);
    assert_eq!(profile.rows[0].count, brute);
}

#[test]
fn limit_discrepancy_shrinks_with_sample_size() {
    let domain = Domain::unit_cube();
    let rho = DensityField::uniform(&domain, 16).unwrap();
    let tests = vec![
        TestFunction::Trig {
            freq: [1, 0, 0],
            domain,
        },
        TestFunction::Trig {
            freq: [1, 2, 1],
            domain,
        },
    ];
    let mut medians = Vec::new();
    for n in [250usize, 500, 1000, 2000, 4000] {
        let mut values: Vec<f64> = (0..20)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 * n as u64 + seed);
                let centers: Vec<Vec3> = (0..n)
                    .map(|_| Vec3::from_fn(|_, _| rng.random::<f64>()))
                    .collect();
                let config = BallConfiguration::new(centers, 1e-9, domain).unwrap();
                a0_discrepancy(&config, &rho, &tests).unwrap()
            })
            .collect();
        medians.push(median(&mut values).unwrap());
    }
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

fn pair_samples(intensity: f64, hardcore: f64, count: u64) -> Vec<Vec<Vec3>> {
    (0..count)
        .map(|s| {
            ProcessSpec::hardcore_poisson(intensity, hardcore, Domain::unit_cube(), s)
                .sample()
                .unwrap()
        })
        .collect()
}

#[test]
fn poisson_pair_correlation_is_flat() {
    let samples = pair_samples(200.0, 0.0, 200);
    let edges: Vec<f64> = (1..=10).map(|k| 0.03 * k as f64).collect();
    let pc = pair_correlation_estimate(&samples, &Domain::unit_cube(), &edges).unwrap();
    for r in &pc.ratio {
        assert!((0.9..=1.1).contains(r), "{:?}", pc.ratio);
    }
}

#[test]
fn thinned_pair_correlation_is_bounded_by_the_matern_formula() {
    let (intensity, hardcore) = (200.0, 0.05);
    let samples = pair_samples(intensity, hardcore, 200);
    let edges: Vec<f64> = (0..=12).map(|k| 0.01 * k as f64).collect();
    let pc = pair_correlation_estimate(&samples, &Domain::unit_cube(), &edges).unwrap();
    // Matérn-I pair correlation peaks at contact with exp(δ |B_R ∩ B_R(R e)|).
    let lens = 5.0 * std::f64::consts::PI / 12.0 * hardcore.powi(3);
    let bound = (intensity * lens).exp();
    let max = pc.ratio.iter().cloned().fold(0.0, f64::max);
    assert!(max <= 1.1 * bound, "max ratio {max}, bound {bound}");
    let below: Vec<f64> = pc
        .edges
        .windows(2)
        .zip(&pc.ratio)
        .filter(|(e, _)| e[1] <= hardcore)
        .map(|(_, r)| *r)
        .collect();
    assert!(below.iter().all(|r| *r == 0.0), "{below:?}");
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = points
        .iter()
        .map(|(x, y)| (x.ln() - mx) * (y.ln() - my))
        .sum();
    let den: f64 = points.iter().map(|(x, _)| (x.ln() - mx).powi(2)).sum();
    num / den
}

#[test]
fn rate_fit_recovers_synthetic_slope() {
    let lambdas: Vec<f64> = (0..8).map(|k| 0.005 * 1.5f64.powi(k)).collect();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<(f64, f64)> = lambdas
            .iter()
            .map(|&l| (l, l.powf(1.3) * (1.0 + 0.05 * rng.random_range(-1.0..1.0))))
            .collect();
        let fit = fit_rate(&points).unwrap();
        assert!(
            (1.2..=1.4).contains(&fit.slope),
            "seed {seed}: {}",
            fit.slope
        );
        assert!((fit.slope - least_squares_slope(&points)).abs() < 1e-12);
    }
}

#[test]
fn process_kind_round_trips_through_text() {
    for kind in [
        ProcessKind::HardcorePoisson,
        ProcessKind::Lattice,
        ProcessKind::Clustered,
    ] {
        assert_eq!(kind.to_string().parse::<ProcessKind>().unwrap(), kind);
    }
}
