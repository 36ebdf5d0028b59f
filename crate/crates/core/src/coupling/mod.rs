//! Coupling drivers for the four simulation modes.

mod algebra;

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};

pub use algebra::{
    aitken_relax, physical_increment, predict_displacements, residual_rms, AitkenStep, OMEGA_MIN,
};

use crate::aero::{AeroSolver, InterfaceMotion, QuasiSteadyAero, SyntheticPressureAero, UnsteadyAero};
use crate::error::{Error, Result};
use crate::model_io::{
    AeroModelKind, CouplingConfig, FsiIterationRecord, HistoryRecord, SimulationMode, StructuralModel,
};
use crate::structural::{IntegratorParams, ModalSolver, ModalState, PseudoParams};
use crate::transfer::{grid_velocities, InterfaceTransfer};

/// Structural solver, fluid solver and the interface maps between them.
pub struct Solvers {
    pub structure: ModalSolver,
    pub aero: Box<dyn AeroSolver>,
    pub transfer: InterfaceTransfer,
}

impl std::fmt::Debug for Solvers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solvers")
            .field("structure", &self.structure)
            .field("aero", &self.aero.name())
            .field("transfer", &self.transfer)
            .finish()
    }
}

/// Builds the fluid solver named by the configuration.
pub fn build_aero(config: &CouplingConfig) -> Result<Box<dyn AeroSolver>> {
    Ok(match config.aero_model {
        AeroModelKind::QuasiSteady => Box::new(QuasiSteadyAero::new(&config.airfoil)?),
        AeroModelKind::Unsteady => Box::new(UnsteadyAero::new(&config.airfoil)?),
        AeroModelKind::SyntheticPressure => Box::new(SyntheticPressureAero::from_settings(&config.pressure)?),
    })
}

/// Builds both solvers and the interface maps from a validated
/// configuration and structural model.
pub fn build_solvers(config: &CouplingConfig, model: &StructuralModel) -> Result<Solvers> {
    config.validate()?;
    model.validate()?;
    check_imposed(config, model.n_modes())?;
    let aero = build_aero(config)?;
    let dt = config.mode.is_unsteady().then_some(config.dt);
    let structure = ModalSolver::new(
        model.clone(),
        config.damping_override,
        IntegratorParams::from_rho_inf(config.rho_inf)?,
        dt,
        PseudoParams {
            max_steps: config.pseudo_max_steps,
            ..PseudoParams::default()
        },
    )?;
    let transfer = InterfaceTransfer::build(
        &model.positions(),
        aero.positions(),
        aero.areas(),
        config.rbf_support_radius,
        config.transfer_mode,
    )?;
    Ok(Solvers {
        structure,
        aero,
        transfer,
    })
}

fn check_imposed(config: &CouplingConfig, n: usize) -> Result<()> {
    for (k, _) in config.imposed.iter() {
        if *k >= n {
            return Err(Error::Config {
                line: None,
                message: format!("IMPOSED_{} refers to a coordinate beyond the model's {n} modes", k + 1),
            });
        }
    }
    for (k, _) in config.initial_q.iter().chain(config.initial_qd.iter()) {
        if *k >= n {
            return Err(Error::Config {
                line: None,
                message: format!("initial condition for coordinate {} beyond the model's {n} modes", k + 1),
            });
        }
    }
    if config.mode.is_imposed() && config.imposed.is_empty() {
        return Err(Error::Config {
            line: None,
            message: format!("{} needs at least one IMPOSED_k signal", config.mode.keyword()),
        });
    }
    Ok(())
}

/// Everything a driver produces.
#[derive(Debug, Clone, Default)]
pub struct RunResult {
    pub history: Vec<HistoryRecord>,
    pub iterations: Vec<FsiIterationRecord>,
    /// `(time, lift, moment)` reported by section models.
    pub section_loads: Vec<[f64; 3]>,
    /// Final fluid point forces.
    pub fluid_forces: Vec<Vector3<f64>>,
    /// Final structural nodal forces.
    pub structural_forces: Vec<Vector3<f64>>,
    pub final_state: Option<ModalState>,
    pub n_modes: usize,
}

impl RunResult {
    pub fn final_q(&self) -> Option<&DVector<f64>> {
        self.final_state.as_ref().map(|s| &s.q)
    }

    /// Column of a generalized coordinate over the history.
    pub fn q_series(&self, mode: usize) -> Vec<f64> {
        self.history.iter().map(|r| r.q[mode]).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.time).collect()
    }
}

fn record(state: &ModalState) -> HistoryRecord {
    HistoryRecord {
        time: state.t,
        q: state.q.iter().copied().collect(),
        qd: state.qd.iter().copied().collect(),
        forces: state.force.iter().copied().collect(),
    }
}

fn stacked_to_nodes(v: &DVector<f64>) -> Vec<Vector3<f64>> {
    (0..v.len() / 3).map(|i| Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2])).collect()
}

/// Interface kinematics and loads expressed through the modal basis.
struct Interface<'a> {
    solvers: &'a mut Solvers,
    translation: DMatrix<f64>,
    undeformed: Vec<Vector3<f64>>,
}

struct Loads {
    generalized: DVector<f64>,
    fluid: Vec<Vector3<f64>>,
    structural: Vec<Vector3<f64>>,
}

impl<'a> Interface<'a> {
    fn new(solvers: &'a mut Solvers) -> Self {
        let translation = solvers.structure.model().translation_modes();
        let undeformed = solvers.aero.positions().to_vec();
        Interface {
            solvers,
            translation,
            undeformed,
        }
    }

    fn to_fluid(&self, q: &DVector<f64>) -> Result<Vec<Vector3<f64>>> {
        let nodal = stacked_to_nodes(&(&self.translation * q));
        self.solvers.transfer.kinematics_to_fluid(&nodal)
    }

    fn deformed(&self, displacement: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        self.undeformed.iter().zip(displacement).map(|(x, u)| x + u).collect()
    }

    /// Fluid motion for modal kinematics at `time`. `previous` holds the
    /// fluid positions of the last accepted level.
    fn motion(
        &self,
        time: f64,
        q: &DVector<f64>,
        qd: &DVector<f64>,
        qdd: &DVector<f64>,
        previous: Option<(&[Vector3<f64>], f64, bool)>,
    ) -> Result<InterfaceMotion> {
        let displacement = self.to_fluid(q)?;
        let velocity = self.to_fluid(qd)?;
        let acceleration = self.to_fluid(qdd)?;
        let grid_velocity = match previous {
            Some((prev, dt, first_with_deformation)) => {
                grid_velocities(prev, &self.deformed(&displacement), dt, first_with_deformation)?
            }
            None => vec![Vector3::zeros(); displacement.len()],
        };
        Ok(InterfaceMotion {
            time,
            displacement,
            velocity,
            acceleration,
            grid_velocity,
        })
    }

    fn loads(&self) -> Result<Loads> {
        let fluid = self.solvers.aero.forces().to_vec();
        let structural = self.solvers.transfer.loads_to_structure(&fluid)?;
        let stacked = DVector::from_iterator(3 * structural.len(), structural.iter().flat_map(|v| [v.x, v.y, v.z]));
        let generalized = self.translation.transpose() * stacked;
        if generalized.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("generalized aerodynamic force".into()));
        }
        Ok(Loads {
            generalized,
            fluid,
            structural,
        })
    }

    fn residual_vector(&self, r: &DVector<f64>) -> DVector<f64> {
        &self.translation * r
    }
}

fn initial_coordinates(config: &CouplingConfig, n: usize) -> (DVector<f64>, DVector<f64>) {
    let mut q = DVector::zeros(n);
    let mut qd = DVector::zeros(n);
    for (k, v) in &config.initial_q {
        q[*k] = *v;
    }
    for (k, v) in &config.initial_qd {
        qd[*k] = *v;
    }
    (q, qd)
}

fn imposed_state(config: &CouplingConfig, n: usize, t: f64) -> Result<ModalState> {
    let [q, qd, qdd] = config.imposed_motion(n, t)?;
    Ok(ModalState {
        t,
        q: DVector::from_vec(q),
        qd: DVector::from_vec(qd),
        qdd: DVector::from_vec(qdd),
        force: DVector::zeros(n),
    })
}

fn push_section_loads(result: &mut RunResult, aero: &dyn AeroSolver, t: f64) {
    if let Some((l, m)) = aero.section_loads() {
        result.section_loads.push([t, l, m]);
    }
}

/// Transfers the imposed displacements once and converges the fluid.
pub fn run_steady_imposed(config: &CouplingConfig, solvers: &mut Solvers) -> Result<RunResult> {
    let n = solvers.structure.model().n_modes();
    let mut state = imposed_state(config, n, 0.0)?;
    state.qd.fill(0.0);
    state.qdd.fill(0.0);
    let iface = Interface::new(solvers);
    let motion = iface.motion(0.0, &state.q, &state.qd, &state.qdd, None)?;
    iface.solvers.aero.initialize(&motion)?;
    iface.solvers.aero.solve_steady()?;
    let loads = iface.loads()?;
    state.force = loads.generalized;
    let mut result = RunResult {
        n_modes: n,
        ..RunResult::default()
    };
    push_section_loads(&mut result, iface.solvers.aero.as_ref(), 0.0);
    result.history.push(record(&state));
    result.fluid_forces = loads.fluid;
    result.structural_forces = loads.structural;
    result.final_state = Some(state);
    Ok(result)
}

/// Fixed point of fluid steady solve, load transfer and structural steady
/// solve, accelerated by Aitken relaxation.
pub fn run_steady_coupled(config: &CouplingConfig, solvers: &mut Solvers) -> Result<RunResult> {
    let n = solvers.structure.model().n_modes();
    let (mut q, _) = initial_coordinates(config, n);
    let zeros = DVector::zeros(n);
    let iface = Interface::new(solvers);
    let initial = iface.motion(0.0, &q, &zeros, &zeros, None)?;
    iface.solvers.aero.initialize(&initial)?;

    let mut result = RunResult {
        n_modes: n,
        ..RunResult::default()
    };
    let mut omega = config.aitken_omega0;
    let mut previous_residual: Option<DVector<f64>> = None;
    let mut trajectory = Vec::new();
    for iteration in 1..=config.max_fsi_iters {
        let clock = Instant::now();
        let motion = iface.motion(0.0, &q, &zeros, &zeros, None)?;
        iface.solvers.aero.apply_motion(&motion)?;
        iface.solvers.aero.solve_steady()?;
        let loads = iface.loads()?;
        let solved = iface.solvers.structure.solve_steady(&loads.generalized, Some(&q))?;
        let r = &solved.q - &q;
        let rms = algebra::rms_of_nodes(&iface.residual_vector(&r));
        trajectory.push(rms);
        let converged = rms < config.fsi_tolerance;
        let mut increment = None;
        if !converged {
            let physical = iface.residual_vector(&r);
            match &previous_residual {
                None => omega = config.aitken_omega0.min(config.aitken_omega_max),
                Some(prev) => omega = aitken_relax(omega, prev, &physical, config.aitken_omega_max)?.omega,
            }
            previous_residual = Some(physical);
            increment = Some(&r * omega);
        }
        result.iterations.push(FsiIterationRecord {
            step: 0,
            iteration,
            residual_rms: rms,
            omega,
            seconds: clock.elapsed().as_secs_f64(),
        });
        if converged {
            let state = ModalState {
                t: 0.0,
                q: solved.q,
                qd: zeros.clone(),
                qdd: zeros.clone(),
                force: loads.generalized,
            };
            iface.solvers.aero.checkpoint();
            push_section_loads(&mut result, iface.solvers.aero.as_ref(), 0.0);
            result.history.push(record(&state));
            result.fluid_forces = loads.fluid;
            result.structural_forces = loads.structural;
            result.final_state = Some(state);
            return Ok(result);
        }
        q += increment.expect("set when not converged");
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("steady coupled iterate".into()));
        }
    }
    Err(Error::NonConvergence {
        what: "steady FSI loop".into(),
        iterations: config.max_fsi_iters,
        residual: *trajectory.last().unwrap_or(&f64::INFINITY),
        trajectory,
    })
}

/// Prescribed structural motion driving the fluid; no structural
/// integration.
pub fn run_unsteady_imposed(config: &CouplingConfig, solvers: &mut Solvers) -> Result<RunResult> {
    let n = solvers.structure.model().n_modes();
    let dt = config.dt;
    let iface = Interface::new(solvers);
    let mut state = imposed_state(config, n, 0.0)?;
    let initial_deformation = state.q.iter().any(|x| *x != 0.0);
    let motion = iface.motion(0.0, &state.q, &state.qd, &state.qdd, None)?;
    iface.solvers.aero.initialize(&motion)?;
    let loads = iface.loads()?;
    state.force = loads.generalized.clone();

    let mut result = RunResult {
        n_modes: n,
        ..RunResult::default()
    };
    push_section_loads(&mut result, iface.solvers.aero.as_ref(), 0.0);
    result.history.push(record(&state));
    let mut positions = iface.undeformed.clone();
    let mut last_loads = loads;
    for step in 1..=config.n_steps {
        let t = step as f64 * dt;
        let mut next = imposed_state(config, n, t)?;
        let motion = iface.motion(
            t,
            &next.q,
            &next.qd,
            &next.qdd,
            Some((&positions, dt, step == 1 && initial_deformation)),
        )?;
        iface.solvers.aero.apply_motion(&motion)?;
        iface.solvers.aero.advance(dt)?;
        iface.solvers.aero.checkpoint();
        let loads = iface.loads()?;
        next.force = loads.generalized.clone();
        positions = iface.deformed(&motion.displacement);
        push_section_loads(&mut result, iface.solvers.aero.as_ref(), t);
        result.history.push(record(&next));
        state = next;
        last_loads = loads;
    }
    result.fluid_forces = last_loads.fluid;
    result.structural_forces = last_loads.structural;
    result.final_state = Some(state);
    Ok(result)
}

/// Initial state with accelerations consistent with the fluid loads they
/// induce (added-mass terms make this a small fixed point).
fn consistent_start(
    iface: &mut Interface<'_>,
    q: DVector<f64>,
    qd: DVector<f64>,
) -> Result<(ModalState, Loads)> {
    let n = q.len();
    let mut qdd = DVector::zeros(n);
    let mut last = None;
    for _ in 0..50 {
        let motion = iface.motion(0.0, &q, &qd, &qdd, None)?;
        iface.solvers.aero.initialize(&motion)?;
        let loads = iface.loads()?;
        let state = iface
            .solvers
            .structure
            .integrator()?
            .initial_state(0.0, q.clone(), qd.clone(), loads.generalized.clone())?;
        let change = (&state.qdd - &qdd).amax();
        let scale = state.qdd.amax();
        qdd = state.qdd.clone();
        last = Some((state, loads));
        if change <= 1e-14 * scale || change == 0.0 {
            break;
        }
    }
    Ok(last.expect("at least one pass"))
}

/// Partitioned time marching: predict, transfer, advance the fluid from its
/// checkpoint, transfer loads, step the structure, check the residual and
/// relax until converged.
pub fn run_unsteady_coupled(config: &CouplingConfig, solvers: &mut Solvers) -> Result<RunResult> {
    let n = solvers.structure.model().n_modes();
    let dt = config.dt;
    let order = config.predictor.order();
    let (q0, qd0) = initial_coordinates(config, n);
    let initial_deformation = q0.iter().any(|x| *x != 0.0);
    let mut iface = Interface::new(solvers);
    let (start, loads) = consistent_start(&mut iface, q0, qd0)?;

    let mut result = RunResult {
        n_modes: n,
        ..RunResult::default()
    };
    push_section_loads(&mut result, iface.solvers.aero.as_ref(), 0.0);
    result.history.push(record(&start));
    let mut accepted = vec![start];
    let mut positions = iface.undeformed.clone();
    let mut last_loads = loads;
    let mut omega_last = config.aitken_omega0;

    for step in 1..=config.n_steps {
        let current = accepted.last().expect("non-empty").clone();
        let t = current.t + dt;
        let integrator = iface.solvers.structure.integrator()?.clone();
        let mut q_iter = predict_displacements(&accepted, dt, order)?;
        let mut omega = omega_last.min(config.aitken_omega0);
        let mut previous_residual: Option<DVector<f64>> = None;
        let mut trajectory = Vec::new();
        let first_rule = step == 1 && initial_deformation;
        let mut outcome = None;

        for iteration in 1..=config.max_fsi_iters {
            let clock = Instant::now();
            let (qd_iter, qdd_iter) = integrator.kinematics_for(&current, &q_iter);
            iface.solvers.aero.restore();
            let motion = iface.motion(t, &q_iter, &qd_iter, &qdd_iter, Some((&positions, dt, first_rule)))?;
            iface.solvers.aero.apply_motion(&motion)?;
            iface.solvers.aero.advance(dt)?;
            let loads = iface.loads()?;
            let next = integrator.step(&current, &loads.generalized)?;
            let r = &next.q - &q_iter;
            let physical = iface.residual_vector(&r);
            let rms = algebra::rms_of_nodes(&physical);
            trajectory.push(rms);
            let converged = rms < config.fsi_tolerance;
            if !converged {
                match &previous_residual {
                    None => omega = omega.min(config.aitken_omega_max),
                    Some(prev) => omega = aitken_relax(omega, prev, &physical, config.aitken_omega_max)?.omega,
                }
            }
            result.iterations.push(FsiIterationRecord {
                step,
                iteration,
                residual_rms: rms,
                omega,
                seconds: clock.elapsed().as_secs_f64(),
            });
            if converged {
                outcome = Some((next, loads, motion));
                break;
            }
            q_iter += &r * omega;
            if q_iter.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("structural iterate at step {step}")));
            }
            previous_residual = Some(physical);
        }

        let (next, loads, motion) = outcome.ok_or_else(|| Error::NonConvergence {
            what: format!("FSI inner loop at step {step} (t = {t})"),
            iterations: config.max_fsi_iters,
            residual: *trajectory.last().unwrap_or(&f64::INFINITY),
            trajectory: trajectory.clone(),
        })?;
        iface.solvers.aero.checkpoint();
        omega_last = omega;
        positions = iface.deformed(&motion.displacement);
        push_section_loads(&mut result, iface.solvers.aero.as_ref(), t);
        result.history.push(record(&next));
        last_loads = loads;
        accepted.push(next);
        if accepted.len() > 2 {
            accepted.remove(0);
        }
    }
    result.fluid_forces = last_loads.fluid;
    result.structural_forces = last_loads.structural;
    result.final_state = accepted.pop();
    Ok(result)
}

/// Dispatches on the configured simulation mode.
pub fn run(config: &CouplingConfig, solvers: &mut Solvers) -> Result<RunResult> {
    match config.mode {
        SimulationMode::SteadyImposed => run_steady_imposed(config, solvers),
        SimulationMode::SteadyCoupled => run_steady_coupled(config, solvers),
        SimulationMode::UnsteadyImposed => run_unsteady_imposed(config, solvers),
        SimulationMode::UnsteadyCoupled => run_unsteady_coupled(config, solvers),
    }
}
