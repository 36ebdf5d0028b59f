mod common;

use aerocouple::coupling::{build_solvers, run, run_steady_coupled, RunResult};
use aerocouple::model_io::{
    format_history, CouplingConfig, MotionSignal, SimulationMode, StructuralModel, TransferMode,
};
use common::{load, monolithic_steady, random_model, synthetic_config};

fn solve(cfg: &CouplingConfig, model: &StructuralModel) -> RunResult {
    let mut solvers = build_solvers(cfg, model).unwrap();
    run(cfg, &mut solvers).unwrap()
}

#[test]
fn tighter_tolerance_approaches_the_monolithic_solution() {
    let model = random_model(5, 3);
    let mut cfg = synthetic_config(SimulationMode::SteadyCoupled, TransferMode::Conservative);
    let oracle = monolithic_steady(&model, &cfg);
    let mut last = f64::INFINITY;
    for tol in [1e-3, 1e-6, 1e-9, 1e-12] {
        cfg.fsi_tolerance = tol;
        let q = solve(&cfg, &model).final_q().unwrap().clone();
        let err = (&q - &oracle).norm();
        assert!(err <= last, "tolerance {tol}: {err} > {last}");
        last = err;
    }
    assert!(last / oracle.norm() < 1e-10);
}

#[test]
fn identical_inputs_give_identical_histories() {
    for (c, m) in [("naca_static.cfg", "naca_static.bdf"), ("naca_flutter.cfg", "naca_flutter.bdf")] {
        let (mut cfg, model) = load(c, m);
        cfg.n_steps = cfg.n_steps.min(300);
        let a = solve(&cfg, &model);
        let b = solve(&cfg, &model);
        assert_eq!(format_history(2, &a.history).unwrap(), format_history(2, &b.history).unwrap());
        let residuals = |r: &RunResult| r.iterations.iter().map(|i| (i.residual_rms, i.omega)).collect::<Vec<_>>();
        assert_eq!(residuals(&a), residuals(&b));
    }
}

#[test]
fn rigid_structure_sees_the_undeformed_loads() {
    let (cfg, mut model) = load("naca_static.cfg", "naca_static.bdf");
    model.stiffness *= 1e12;
    model.frequencies.iter_mut().for_each(|w| *w *= 1e6);
    let coupled = solve(&cfg, &model);

    let mut imposed = cfg.clone();
    imposed.mode = SimulationMode::SteadyImposed;
    imposed.imposed = vec![(0, MotionSignal::Constant(0.0)), (1, MotionSignal::Constant(0.0))];
    let reference = solve(&imposed, &model);
    let (f, g) = (&coupled.history[0].forces, &reference.history[0].forces);
    for (a, b) in f.iter().zip(g) {
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
    }
}

fn steady_lift(cfg: &CouplingConfig, model: &StructuralModel, h: f64, theta: f64) -> f64 {
    let mut imposed = cfg.clone();
    imposed.mode = SimulationMode::SteadyImposed;
    imposed.imposed = vec![(0, MotionSignal::Constant(h)), (1, MotionSignal::Constant(theta))];
    solve(&imposed, model).section_loads[0][1]
}

#[test]
fn imposed_pitch_acts_as_incidence_and_plunge_does_not() {
    let (mut cfg, model) = load("naca_static.cfg", "naca_static.bdf");
    let incidence = cfg.airfoil.alpha;
    let at_incidence = steady_lift(&cfg, &model, 0.0, 0.0);
    let plunged = steady_lift(&cfg, &model, 0.1, 0.0);
    assert!((plunged - at_incidence).abs() <= 1e-10 * at_incidence.abs());
    cfg.airfoil.alpha = 0.0;
    let pitched = steady_lift(&cfg, &model, 0.0, incidence);
    assert!((pitched - at_incidence).abs() <= 1e-10 * at_incidence.abs(), "{pitched} vs {at_incidence}");
}

#[test]
fn no_flow_means_no_deformation() {
    let (mut cfg, model) = load("naca_static.cfg", "naca_static.bdf");
    cfg.airfoil.rho = 0.0;
    let result = solve(&cfg, &model);
    assert!(result.final_q().unwrap().iter().all(|q| *q == 0.0));
}

#[test]
fn consistent_and_conservative_transfer_agree_on_the_static_case() {
    let (mut cfg, model) = load("naca_static.cfg", "naca_static.bdf");
    let conservative = solve(&cfg, &model).final_q().unwrap()[0];
    cfg.transfer_mode = TransferMode::Consistent;
    let consistent = solve(&cfg, &model).final_q().unwrap()[0];
    assert!((consistent / conservative - 1.0).abs() < 0.02, "{consistent} vs {conservative}");
}

#[test]
fn static_case_converges_with_aitken_only() {
    let (mut cfg, model) = load("naca_static.cfg", "naca_static.bdf");
    cfg.aitken_omega0 = 1.0;
    let mut solvers = build_solvers(&cfg, &model).unwrap();
    let result = run_steady_coupled(&cfg, &mut solvers).unwrap();
    let h = result.final_q().unwrap()[0];
    assert!((h - 0.289).abs() < 3e-3);
    // every logged residual but the last sits above the tolerance
    let n = result.iterations.len();
    assert!(result.iterations[..n - 1].iter().all(|r| r.residual_rms >= cfg.fsi_tolerance));
    assert!(result.iterations[n - 1].residual_rms < cfg.fsi_tolerance);
}

#[test]
fn non_convergence_reports_the_trajectory() {
    let (mut cfg, model) = load("naca_static.cfg", "naca_static.bdf");
    cfg.max_fsi_iters = 1;
    let mut solvers = build_solvers(&cfg, &model).unwrap();
    match run(&cfg, &mut solvers) {
        Err(aerocouple::Error::NonConvergence { trajectory, iterations, .. }) => {
            assert_eq!(iterations, 1);
            assert_eq!(trajectory.len(), 1);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}
