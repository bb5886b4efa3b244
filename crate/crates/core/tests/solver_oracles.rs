use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dilute_stokes::config::{radius_for, BallConfiguration, DensityField, Domain, TraceFreeSymMat};
use dilute_stokes::experiment::{dilute_configuration, probe_region};
use dilute_stokes::fields::{StressletSum, VectorField};
use dilute_stokes::kernels::SolenoidalBump;
use dilute_stokes::process::ProcessKind;
use dilute_stokes::quadrature::GaussLegendre;
use dilute_stokes::solver::{
    effective_viscosity_estimate, exterior_energy, reflections_solve, solve_einstein, solve_phi_n,
    work_functional, EinsteinModel, Forcing, Grid, NormKind, NormSampler, ReflectionOptions,
    StokesConvolver,
};
use dilute_stokes::{Mat3, Vec3};

fn random_strain(rng: &mut ChaCha8Rng) -> TraceFreeSymMat {
    let e: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    TraceFreeSymMat::new(e[0], e[1], e[2], e[3], e[4])
}

fn unit_stresslet(s: &Mat3, y: &Vec3) -> Vec3 {
    let r = y.norm();
    let q = y.dot(&(s * y));
    y * (2.5 * q / r.powi(5)) + s * y / r.powi(5) - y * (2.5 * q / r.powi(7))
}

fn superposition(centers: &[Vec3], strains: &[Mat3], radius: f64, x: &Vec3) -> Vec3 {
    centers
        .iter()
        .zip(strains)
        .map(|(c, s)| unit_stresslet(s, &((x - c) / radius)) * radius)
        .sum()
}

fn fd_strain(f: impl Fn(&Vec3) -> Vec3, x: &Vec3, h: f64) -> Mat3 {
    let mut g = Mat3::zeros();
    for j in 0..3 {
        let e = Vec3::ith(j, h);
        let d = (-f(&(x + 2.0 * e)) + f(&(x + e)) * 8.0 - f(&(x - e)) * 8.0 + f(&(x - 2.0 * e)))
            / (12.0 * h);
        g.set_column(j, &d);
    }
    (g + g.transpose()) * 0.5
}

/// Dirichlet energy of the exterior of two balls, split along the bisecting plane.
/// Each half is integrated in coordinates centred on its ball with the radial
/// variable `s = 1/ρ`, so the unbounded part needs no truncation.
fn two_ball_energy_by_volume(centers: [Vec3; 2], strains: [Mat3; 2], radius: f64, mu: f64) -> f64 {
    let d = (centers[1] - centers[0]).norm();
    let gl = GaussLegendre::new(48);
    let nphi = 96;
    let mut total = 0.0;
    for b in 0..2 {
        let axis = (centers[1 - b] - centers[b]) / d;
        let helper = if axis.x.abs() < 0.9 {
            Vec3::x()
        } else {
            Vec3::y()
        };
        let e1 = axis.cross(&helper).normalize();
        let e2 = axis.cross(&e1);
        for (lo, hi) in [(-1.0, 0.0), (0.0, 1.0)] {
            for (c, wc) in gl.on_interval(lo, hi) {
                let s_min = if c > 0.0 { 2.0 * c / d } else { 0.0 };
                let sin = (1.0 - c * c).sqrt();
                for k in 0..nphi {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / nphi as f64;
                    let dir = axis * c + (e1 * phi.cos() + e2 * phi.sin()) * sin;
                    for (s, ws) in gl.on_interval(s_min, 1.0 / radius) {
                        let x = centers[b] + dir / s;
                        let f = |y: &Vec3| superposition(&centers, &strains, radius, y);
                        let du = fd_strain(f, &x, 1e-5 * radius);
                        let density = 2.0 * mu * du.norm_squared();
                        total += wc * ws * (2.0 * std::f64::consts::PI / nphi as f64) * density
                            / s.powi(4);
                    }
                }
            }
        }
    }
    total
}

#[test]
fn exterior_energy_agrees_with_volume_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let radius = 0.05;
    let centers = [Vec3::new(0.42, 0.5, 0.5), Vec3::new(0.58, 0.53, 0.49)];
    let config = BallConfiguration::in_unit_cube(centers.to_vec(), radius).unwrap();
    let strains = [random_strain(&mut rng), random_strain(&mut rng)];
    let mu = 1.3;
    let surface = exterior_energy(&config, &strains, mu, 24).unwrap();
    let volume = two_ball_energy_by_volume(centers, strains.map(|s| s.to_matrix()), radius, mu);
    assert!(
        (surface - volume).abs() < 1e-6 * volume,
        "surface {surface} volume {volume}"
    );
}

fn dense_pair_solution(config: &BallConfiguration, data: [Mat3; 2]) -> [Mat3; 2] {
    const SLOTS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let basis = |k: usize| {
        let (a, b) = SLOTS[k];
        let mut m = Mat3::zeros();
        m[(a, b)] = 1.0;
        m[(b, a)] = 1.0;
        m
    };
    let c = config.centers();
    let mut a = nalgebra::DMatrix::<f64>::identity(12, 12);
    for (i, j) in [(0, 1), (1, 0)] {
        let y = (c[i] - c[j]) / config.radius();
        for k in 0..6 {
            let g = fd_strain(|z| unit_stresslet(&basis(k), z), &y, 1e-4);
            for (row, (p, q)) in SLOTS.iter().enumerate() {
                a[(6 * i + row, 6 * j + k)] += g[(*p, *q)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(
        12,
        data.iter()
            .flat_map(|m| SLOTS.iter().map(move |(p, q)| m[(*p, *q)])),
    );
    let x = a.lu().solve(&rhs).unwrap();
    [0, 1].map(|i| {
        let mut m = Mat3::zeros();
        for (k, (p, q)) in SLOTS.iter().enumerate() {
            m[(*p, *q)] = x[6 * i + k];
            m[(*q, *p)] = x[6 * i + k];
        }
        m
    })
}

#[test]
fn two_balls_at_gap_twenty_radii_match_dense_solve() {
    let r = 0.01;
    let config = BallConfiguration::in_unit_cube(
        vec![
            Vec3::new(0.4, 0.5, 0.5),
            Vec3::new(0.4 + 20.0 * r, 0.5, 0.5),
        ],
        r,
    )
    .unwrap();
    let e = TraceFreeSymMat::unit_shear();
    let opts = ReflectionOptions {
        tol: 1e-15,
        ..Default::default()
    };
    let state = reflections_solve(&config, &[e; 2], 1.0, &opts).unwrap();
    let dense = dense_pair_solution(&config, [e.to_matrix(); 2]);
    let scale = (r / (20.0 * r)).powi(3);
    for (strain, exact) in state.strains.iter().zip(&dense) {
        let s = strain.to_matrix();
        assert!((s - exact).norm() < 1e-8);
        let deviation = (s - e.to_matrix()).norm();
        assert!(
            deviation > 0.1 * scale && deviation < 10.0 * scale,
            "{deviation}"
        );
    }
    let est = effective_viscosity_estimate(&config, 1.0, &e, &opts).unwrap();
    let moment: f64 = dense
        .iter()
        .map(|s| s.component_mul(&e.to_matrix()).sum())
        .sum();
    let closure = 1.0 + 5.0 * config.ball_volume() * moment / (2.0 * e.contract(&e));
    assert!((est.mu_eff_over_mu - closure).abs() < 1e-8);
}

#[test]
fn stresslet_sum_is_independent_of_summation_order() {
    let config =
        dilute_configuration(ProcessKind::HardcorePoisson, 200, 0.01, 3.0, None, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let strains: Vec<TraceFreeSymMat> =
        (0..config.len()).map(|_| random_strain(&mut rng)).collect();
    let sum = StressletSum::new(config.centers().to_vec(), &strains, config.radius(), 1.0);
    let mut order: Vec<usize> = (0..config.len()).collect();
    for _ in 0..10 {
        let x = Vec3::new(rng.random(), rng.random(), rng.random());
        order.shuffle(&mut rng);
        let a = sum.velocity(&x);
        let b = sum.velocity_in_order(&x, &order);
        assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300), "{a} vs {b}");
    }
}

fn probe_points() -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..10)
        .map(|_| Vec3::from_fn(|_, _| rng.random_range(0.3..0.7)))
        .collect()
}

fn smooth_forcing() -> Forcing {
    Forcing::GaussianBump {
        center: [0.5; 3],
        width: 0.15,
        axis: [0.3, -0.4, 1.0],
    }
}

fn stokes_velocity(grid: usize) -> impl VectorField {
    let domain = Domain::unit_cube();
    let conv = StokesConvolver::new(Grid::cube(&domain, grid).unwrap());
    let rho = DensityField::uniform(&domain, grid).unwrap();
    let forcing = smooth_forcing();
    let f = |x: &Vec3| forcing.eval(x);
    solve_einstein(
        &f,
        &EinsteinModel::new(1.0, 0.0, rho).unwrap(),
        &conv,
        1e-10,
        1,
    )
    .unwrap()
    .field
}

#[test]
fn convolution_converges_at_second_order() {
    let fields: Vec<_> = [16, 32, 64].into_iter().map(stokes_velocity).collect();
    let probes = probe_points();
    let diff = |a: &dyn VectorField, b: &dyn VectorField| {
        probes
            .iter()
            .map(|x| (a.velocity(x) - b.velocity(x)).norm())
            .fold(0.0, f64::max)
    };
    let coarse = diff(&fields[0], &fields[1]);
    let fine = diff(&fields[1], &fields[2]);
    let order = (coarse / fine).log2();
    assert!(
        order >= 1.8,
        "observed order {order} ({coarse:e}, {fine:e})"
    );
}

#[test]
fn effective_model_is_resolution_stable() {
    let forcing = smooth_forcing();
    let f = |x: &Vec3| forcing.eval(x);
    let domain = Domain::unit_cube();
    let solve = |grid: usize| {
        let conv = StokesConvolver::new(Grid::cube(&domain, grid).unwrap());
        let rho = DensityField::from_fn(&domain, grid, |x| {
            1.0 + 0.5 * (2.0 * std::f64::consts::PI * x.x).cos()
        })
        .unwrap();
        solve_einstein(
            &f,
            &EinsteinModel::new(1.0, 0.02, rho).unwrap(),
            &conv,
            1e-8,
            10,
        )
        .unwrap()
    };
    let (coarse, fine) = (solve(32), solve(64));
    assert!(coarse.iterations <= 10 && fine.iterations <= 10);
    let probes = probe_points();
    let diff = probes
        .iter()
        .map(|x| (coarse.field.velocity(x) - fine.field.velocity(x)).norm())
        .fold(0.0, f64::max);
    let size = probes
        .iter()
        .map(|x| fine.field.velocity(x).norm())
        .fold(0.0, f64::max);
    assert!(diff < 0.02 * size, "{diff} vs {size}");
}

#[test]
fn probe_norm_is_stratum_converged() {
    let forcing = Forcing::PointSmoothed {
        center: [0.5; 3],
        epsilon: 0.1,
        force: [1.0, 0.0, 0.0],
    };
    let f = |x: &Vec3| forcing.eval(x);
    let domain = Domain::unit_cube();
    let conv = StokesConvolver::new(Grid::cube(&domain, 32).unwrap());
    let rho = DensityField::uniform(&domain, 32).unwrap();
    let u0 = solve_einstein(
        &f,
        &EinsteinModel::new(1.0, 0.0, rho).unwrap(),
        &conv,
        1e-10,
        1,
    )
    .unwrap()
    .field;
    let norm = |strata| {
        NormSampler::new(&probe_region(), None, strata, 0)
            .unwrap()
            .norm(&u0, 2.0, NormKind::Value)
            .unwrap()
    };
    let (a, b) = (norm(64), norm(128));
    assert!((a - b).abs() < 0.01 * b, "{a} vs {b}");
}

#[test]
fn work_functional_shrinks_with_volume_fraction() {
    let domain = Domain::unit_cube();
    let conv = StokesConvolver::new(Grid::cube(&domain, 16).unwrap());
    let rho = DensityField::uniform(&domain, 16).unwrap();
    let phi = SolenoidalBump::new(
        Vec3::new(0.5, 0.5, 0.5),
        0.4,
        Vec3::new(0.2, -0.1, 0.3),
        Mat3::new(0.5, 0.1, 0.0, -0.2, 0.3, 0.4, 0.1, 0.0, -0.6),
    );
    let forcing = Forcing::default_bump();
    let f = |x: &Vec3| forcing.eval(x);
    let n = 300;
    let base = dilute_configuration(ProcessKind::HardcorePoisson, n, 0.02, 2.4, None, 2).unwrap();
    let mut previous = f64::INFINITY;
    for lambda in [0.02, 0.01, 0.005] {
        let config = base.with_radius(radius_for(n, lambda).unwrap()).unwrap();
        let sol = solve_phi_n(
            &config,
            0.5,
            &phi,
            &rho,
            lambda,
            1.0,
            &ReflectionOptions::default(),
            &conv,
        )
        .unwrap();
        let w = work_functional(&f, &sol.field, &conv).abs();
        assert!(w < previous, "lambda {lambda}: {w} >= {previous}");
        previous = w;
    }
}
