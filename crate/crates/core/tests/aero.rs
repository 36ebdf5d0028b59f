mod common;

use std::f64::consts::PI;

use aerocouple::aero::{
    flutter_eigen_oracle, flutter_speed, rational_c, theodorsen_c, theodorsen_cl, AeroSolver, InterfaceMotion,
    QuasiSteadyAero, SectionAero, TypicalSection, UnsteadyAero,
};
use aerocouple::coupling::{build_solvers, run};
use aerocouple::model_io::{AirfoilSettings, MotionSignal};
use aerocouple::postproc::transfer_function;
use aerocouple::structural::build_damping;
use common::load;
use nalgebra::Vector3;
use num_complex::Complex64;

fn settings(alpha_deg: f64) -> AirfoilSettings {
    AirfoilSettings {
        u_inf: 30.0,
        alpha: alpha_deg.to_radians(),
        ..AirfoilSettings::default()
    }
}

fn pitched(aero: &dyn AeroSolver, x_f: f64, theta: f64, time: f64) -> InterfaceMotion {
    let mut m = InterfaceMotion::rest(aero.positions().len(), time);
    for (u, x) in m.displacement.iter_mut().zip(aero.positions()) {
        // small rotation about y through the axis, nose up
        *u = Vector3::new(theta * x.z, 0.0, -theta * (x.x - x_f));
    }
    m
}

#[test]
fn advance_is_repeatable_from_checkpoint() {
    let s = settings(2.0);
    let mut aero = UnsteadyAero::new(&s).unwrap();
    let motion = pitched(&aero, s.x_f, 0.01, 1e-3);
    aero.apply_motion(&motion).unwrap();
    aero.advance(1e-3).unwrap();
    let first = aero.forces().to_vec();
    aero.restore();
    aero.apply_motion(&motion).unwrap();
    aero.advance(1e-3).unwrap();
    assert_eq!(first, aero.forces());
}

#[test]
fn impulsive_start_follows_wagner() {
    let s = settings(3.0);
    let mut aero = UnsteadyAero::new(&s).unwrap();
    let steady = aero.section_loads().unwrap().0;
    aero.impulsive_start();
    let start = aero.section_loads().unwrap().0 / steady;
    assert!((start - 0.5).abs() < 1e-12, "phi(0+) = {start}");

    let b = aero.section().b;
    let dt = 0.01 * b / s.u_inf;
    let n = positions_len(&aero);
    let mut ratio = 0.0;
    for step in 1..=20_000 {
        aero.apply_motion(&InterfaceMotion::rest(n, step as f64 * dt)).unwrap();
        aero.advance(dt).unwrap();
        aero.checkpoint();
        ratio = aero.section_loads().unwrap().0 / steady;
        let travelled = step as f64 * dt * s.u_inf / b;
        let w = s.wagner;
        let phi = 1.0 - w.a1 * (-w.b1 * travelled).exp() - w.a2 * (-w.b2 * travelled).exp();
        assert!((ratio - phi).abs() < 1e-9, "s = {travelled}: {ratio} vs {phi}");
    }
    assert!((ratio - 1.0).abs() < 0.01, "phi(200) = {ratio}");
}

fn positions_len(aero: &dyn AeroSolver) -> usize {
    aero.positions().len()
}

#[test]
fn unsteady_settles_to_quasi_steady() {
    let (mut cfg, model) = load("naca_forced.cfg", "naca_static.bdf");
    cfg.imposed = vec![
        (0, MotionSignal::Constant(0.0)),
        (
            1,
            MotionSignal::Ramp {
                hold: 2f64.to_radians(),
                duration: 0.5,
            },
        ),
    ];
    cfg.n_steps = 10_000;
    let mut solvers = build_solvers(&cfg, &model).unwrap();
    let result = run(&cfg, &mut solvers).unwrap();
    let lift = result.section_loads.last().unwrap()[1];

    let mut quasi = QuasiSteadyAero::new(&cfg.airfoil).unwrap();
    let motion = pitched(&quasi, cfg.airfoil.x_f, 2f64.to_radians(), 0.0);
    quasi.apply_motion(&motion).unwrap();
    quasi.solve_steady().unwrap();
    let reference = quasi.section_loads().unwrap().0;
    assert!((lift / reference - 1.0).abs() < 5e-3, "{lift} vs {reference}");
}

#[test]
fn added_mass_opposes_plunge_acceleration() {
    let section = SectionAero::from_settings(&settings(0.0));
    let (lift, _) = section.added_mass_loads(1.0, 0.0, 0.0);
    assert!(lift < 0.0);
    let expected = -PI * section.rho * section.b * section.b * section.span;
    assert!((lift - expected).abs() < 1e-12 * expected.abs());
}

#[test]
fn forced_pitch_matches_theodorsen_across_frequencies() {
    let (base, model) = load("naca_forced.cfg", "naca_static.bdf");
    let section = SectionAero::from_settings(&base.airfoil);
    let wagner = base.airfoil.wagner;
    for k in [0.05, 0.1, 0.2, 0.5] {
        let frequency = k * section.u / (2.0 * PI * section.b);
        let mut cfg = base.clone();
        cfg.imposed[1].1 = MotionSignal::Sine {
            amplitude: 1f64.to_radians(),
            frequency,
            bias: 0.0,
            phase: 0.0,
        };
        // whole samples per period keep the analysis window free of leakage
        let per_period = (1.0 / (frequency * base.dt)).round();
        cfg.dt = 1.0 / (frequency * per_period);
        // the slow lag decays like exp(−b₁Ut/b): settle 12 s, analyse 8 periods
        let settle = (12.0 / cfg.dt).ceil() as usize;
        cfg.n_steps = settle + 8 * per_period as usize;
        let cut = settle as f64 / (cfg.n_steps + 1) as f64;
        let mut solvers = build_solvers(&cfg, &model).unwrap();
        let result = run(&cfg, &mut solvers).unwrap();
        let norm = section.dynamic_pressure() * section.area();
        let times: Vec<f64> = result.section_loads.iter().map(|r| r[0]).collect();
        let cl: Vec<f64> = result.section_loads.iter().map(|r| r[1] / norm).collect();
        let tf = transfer_function(&times, &result.q_series(1), &cl, frequency, cut).unwrap();
        let measured = Complex64::from_polar(tf.magnitude, tf.phase_deg.to_radians());
        let zero = Complex64::new(0.0, 0.0);
        let rational = theodorsen_cl(&section, k, zero, |k| Ok(rational_c(k, &wagner))).unwrap();
        let exact = theodorsen_cl(&section, k, zero, theodorsen_c).unwrap();
        let err = (measured - rational).norm() / rational.norm();
        assert!(err < 1e-6, "k = {k}: {err:e}");
        assert!((measured.norm() / exact.norm() - 1.0).abs() < 0.03, "k = {k}");
        assert!((measured.arg() - exact.arg()).to_degrees().abs() < 3.0, "k = {k}");
    }
}

#[test]
fn stable_below_flutter() {
    let (cfg, model) = load("naca_flutter.cfg", "naca_flutter.bdf");
    let damping = build_damping(&model).unwrap();
    let section = TypicalSection::from_model(&model, &damping, SectionAero::from_settings(&cfg.airfoil)).unwrap();
    let u_f = flutter_speed(&section, &cfg.airfoil.wagner, 250.0, 250).unwrap();
    let sweep = flutter_eigen_oracle(&section, &cfg.airfoil.wagner, &[0.25 * u_f, 0.5 * u_f, 0.75 * u_f]).unwrap();
    for point in &sweep {
        assert!(point.modes.iter().all(|m| m.damping_ratio > 0.0), "U = {}", point.speed);
    }
    let above = flutter_eigen_oracle(&section, &cfg.airfoil.wagner, &[1.01 * u_f]).unwrap();
    assert!(above[0].max_growth() > 0.0);
}
