mod common;

use std::f64::consts::PI;

use aerocouple::aero::{rigid_modes, structural_nodes};
use aerocouple::model_io::{parse_structural_model, AirfoilSettings, DampingSpec, StructuralModel};
use aerocouple::structural::{
    build_damping, physical_motion, solve_steady, GeneralizedAlpha, IntegratorParams, ModalState, PseudoParams,
};
use common::{data, random_model};
use nalgebra::{DMatrix, DVector, Vector3};

fn sdof(omega: f64, xi: f64, rho_inf: f64, dt: f64) -> GeneralizedAlpha {
    GeneralizedAlpha::new(
        DMatrix::identity(1, 1),
        DMatrix::from_element(1, 1, 2.0 * xi * omega),
        DMatrix::from_element(1, 1, omega * omega),
        IntegratorParams::from_rho_inf(rho_inf).unwrap(),
        dt,
    )
    .unwrap()
}

#[test]
fn undamped_oscillator_keeps_its_amplitude() {
    let omega = 2.0 * PI;
    let integ = sdof(omega, 0.0, 1.0, 1e-3);
    let zero = DVector::zeros(1);
    let mut s = integ.initial_state(0.0, DVector::from_element(1, 1.0), zero.clone(), zero.clone()).unwrap();
    for _ in 0..10_000 {
        s = integ.step(&s, &zero).unwrap();
    }
    let amplitude = s.q[0].hypot(s.qd[0] / omega);
    assert!((amplitude - 1.0).abs() < 1e-4, "{amplitude}");
}

#[test]
fn forced_response_matches_the_frequency_response() {
    let (omega, xi) = (2.0 * PI * 1.3, 0.05);
    let forcing = 2.0 * PI;
    let dt = 1e-3;
    let integ = sdof(omega, xi, 0.9, dt);
    let force = |t: f64| DVector::from_element(1, (forcing * t).sin());
    let mut s = integ.initial_state(0.0, DVector::zeros(1), DVector::zeros(1), force(0.0)).unwrap();
    let mut peak: f64 = 0.0;
    // xi·omega ≈ 0.41 1/s: after 60 s the free transient is below 1e-10
    for n in 1..=70_000 {
        let t = n as f64 * dt;
        s = integ.step(&s, &force(t)).unwrap();
        if t > 60.0 {
            peak = peak.max(s.q[0].abs());
        }
    }
    let r = forcing / omega;
    let frf = 1.0 / (omega * omega * ((1.0 - r * r).powi(2) + (2.0 * xi * r).powi(2)).sqrt());
    assert!((peak / frf - 1.0).abs() < 5e-3, "{peak} vs {frf}");
}

/// Spectral radius of the map `(q, q̇, q̈) → (q, q̇, q̈)` of one free step.
fn spectral_radius(integ: &GeneralizedAlpha, n: usize) -> f64 {
    let mut a = DMatrix::zeros(3 * n, 3 * n);
    for j in 0..3 * n {
        let mut e = ModalState::zeros(n);
        match j / n {
            0 => e.q[j % n] = 1.0,
            1 => e.qd[j % n] = 1.0,
            _ => e.qdd[j % n] = 1.0,
        }
        let next = integ.step(&e, &DVector::zeros(n)).unwrap();
        for i in 0..n {
            a[(i, j)] = next.q[i];
            a[(n + i, j)] = next.qd[i];
            a[(2 * n + i, j)] = next.qdd[i];
        }
    }
    a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

#[test]
fn dissipative_integrator_never_grows_the_amplitude() {
    let omega = 2.0 * PI;
    for omega_dt in [1e-3, 0.01, 0.1, 0.5, 1.0, 3.0, 30.0] {
        for xi in [0.0, 0.02, 0.3, 1.0] {
            let radius = spectral_radius(&sdof(omega, xi, 0.5, omega_dt / omega), 1);
            assert!(radius <= 1.0 + 1e-12, "omega dt {omega_dt}, xi {xi}: {radius}");
        }
    }
    let high = spectral_radius(&sdof(omega, 0.0, 0.5, 1e6 / omega), 1);
    assert!((high - 0.5).abs() < 1e-3, "{high}");

    for seed in 0..4 {
        let model = random_model(4, seed);
        let integ = GeneralizedAlpha::new(
            model.mass.clone(),
            build_damping(&model).unwrap(),
            model.stiffness.clone(),
            IntegratorParams::from_rho_inf(0.5).unwrap(),
            5e-2,
        )
        .unwrap();
        assert!(spectral_radius(&integ, 4) <= 1.0 + 1e-12);
    }
}

#[test]
fn balance_holds_after_every_step() {
    let model = random_model(4, 5);
    let c = build_damping(&model).unwrap();
    let integ = GeneralizedAlpha::new(
        model.mass.clone(),
        c,
        model.stiffness.clone(),
        IntegratorParams::from_rho_inf(0.7).unwrap(),
        1e-3,
    )
    .unwrap();
    let n = model.n_modes();
    let f = DVector::from_fn(n, |i, _| i as f64 - 1.5);
    let mut s = integ.initial_state(0.0, DVector::zeros(n), DVector::zeros(n), f.clone()).unwrap();
    for _ in 0..100 {
        let next = integ.step(&s, &f).unwrap();
        assert!(integ.balance_residual(&s, &next).amax() < 1e-10);
        s = next;
    }
}

#[test]
fn steady_solve_matches_direct_factorization() {
    let model = random_model(5, 9);
    let f = DVector::from_fn(5, |i, _| (i as f64).sin() * 30.0);
    let direct = model.stiffness.clone().lu().solve(&f).unwrap();
    let s = solve_steady(&model, &f, None, PseudoParams::default()).unwrap();
    assert!((&s.q - &direct).norm() < 1e-10 * direct.norm());
}

#[test]
fn diagonal_models_assemble_squared_frequencies() {
    let text = std::fs::read_to_string(data("naca_flutter.bdf")).unwrap();
    let model = parse_structural_model(&text).unwrap();
    assert_eq!(model.n_modes(), 2);
    let single = "GRID,1,0,0,0\nGRID,2,1,0,0\nGRID,3,0,1,0\nMODE,1,3.0\n1,0,0,1\n2,0,0,1\n3,0,0,1\nMODE,2,7.5\n1,0,0,0\n2,0,0,1\n3,0,0,-1\n";
    let m = parse_structural_model(single).unwrap();
    assert!(m.diagonal);
    assert_eq!(m.stiffness, DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 56.25])));
    assert_eq!(m.mass, DMatrix::identity(2, 2));
}

#[test]
fn pitch_mode_moves_nodes_as_a_rigid_rotation() {
    let settings = AirfoilSettings::default();
    let nodes = structural_nodes(&settings);
    let modes = rigid_modes(&nodes, settings.x_f);
    let model = StructuralModel::general(
        nodes.clone(),
        modes,
        DMatrix::identity(2, 2),
        DMatrix::identity(2, 2),
        DampingSpec::Ratios(vec![0.0, 0.0]),
    )
    .unwrap();
    let theta = 0.02;
    let mut state = ModalState::zeros(2);
    state.q[1] = theta;
    let motion = physical_motion(&model, &state);
    let axis = Vector3::new(settings.x_f, 0.0, 0.0);
    for (node, u) in nodes.iter().zip(&motion.displacement.values) {
        let expected = Vector3::new(0.0, theta, 0.0).cross(&(node.position - axis));
        assert!((u - expected).norm() < 1e-15);
    }
    // nose-up: the leading edge rises
    let lead = nodes.iter().position(|n| n.position.x < settings.x_f).unwrap();
    assert!(motion.displacement.values[lead].z > 0.0);
}
