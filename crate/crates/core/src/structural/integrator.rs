use nalgebra::{DMatrix, DVector, LU, Dyn};

use super::ModalState;
use crate::error::{Error, Result};

/// Generalized-α parameters derived from the spectral radius at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorParams {
    pub rho_inf: f64,
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl IntegratorParams {
    pub fn from_rho_inf(rho_inf: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_inf) {
            return Err(Error::InvalidInput(format!("spectral radius must lie in [0, 1] (got {rho_inf})")));
        }
        let alpha_m = (2.0 * rho_inf - 1.0) / (rho_inf + 1.0);
        let alpha_f = rho_inf / (rho_inf + 1.0);
        let gamma = 0.5 - alpha_m + alpha_f;
        let beta = 0.25 * (1.0 - alpha_m + alpha_f).powi(2);
        Ok(IntegratorParams {
            rho_inf,
            alpha_m,
            alpha_f,
            beta,
            gamma,
        })
    }

    /// Plain Newmark (`αm = αf = 0`) with the given `β`, `γ`.
    pub fn newmark(beta: f64, gamma: f64) -> Self {
        IntegratorParams {
            rho_inf: f64::NAN,
            alpha_m: 0.0,
            alpha_f: 0.0,
            beta,
            gamma,
        }
    }
}

impl Default for IntegratorParams {
    fn default() -> Self {
        IntegratorParams::from_rho_inf(1.0).expect("valid spectral radius")
    }
}

/// One-step generalized-α integrator for `M q̈ + C q̇ + K q = F̃`.
///
/// `step` never mutates the integrator, so calling it twice from the same
/// stored state with the same force gives bit-identical results.
#[derive(Debug, Clone)]
pub struct GeneralizedAlpha {
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    params: IntegratorParams,
    dt: f64,
    effective: LU<f64, Dyn, Dyn>,
}

impl GeneralizedAlpha {
    pub fn new(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        params: IntegratorParams,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive (got {dt})")));
        }
        let p = &params;
        let s = &mass * (1.0 - p.alpha_m) + &damping * ((1.0 - p.alpha_f) * p.gamma * dt)
            + &stiffness * ((1.0 - p.alpha_f) * p.beta * dt * dt);
        let effective = s.lu();
        if !effective.is_invertible() || effective.u().diagonal().iter().any(|d| d.abs() < 1e-300) {
            return Err(Error::Singular("generalized-alpha effective matrix".into()));
        }
        Ok(GeneralizedAlpha {
            mass,
            damping,
            stiffness,
            params,
            dt,
            effective,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &IntegratorParams {
        &self.params
    }

    /// Consistent initial acceleration `M⁻¹(F̃ − C q̇ − K q)`.
    pub fn initial_state(&self, t: f64, q: DVector<f64>, qd: DVector<f64>, force: DVector<f64>) -> Result<ModalState> {
        let rhs = &force - &self.damping * &qd - &self.stiffness * &q;
        let qdd = self
            .mass
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("generalized mass".into()))?;
        Ok(ModalState {
            t,
            q,
            qd,
            qdd,
            force,
        })
    }

    /// Advances `state` by one step with the generalized force at the end of
    /// the step.
    pub fn step(&self, state: &ModalState, force: &DVector<f64>) -> Result<ModalState> {
        let n = state.q.len();
        if force.len() != n {
            return Err(Error::SizeMismatch {
                what: "generalized force",
                expected: n,
                actual: force.len(),
            });
        }
        let p = &self.params;
        let h = self.dt;
        let q_pred = &state.q + &state.qd * h + &state.qdd * ((0.5 - p.beta) * h * h);
        let v_pred = &state.qd + &state.qdd * ((1.0 - p.gamma) * h);

        let f_mid = force * (1.0 - p.alpha_f) + &state.force * p.alpha_f;
        let q_known = &q_pred * (1.0 - p.alpha_f) + &state.q * p.alpha_f;
        let v_known = &v_pred * (1.0 - p.alpha_f) + &state.qd * p.alpha_f;
        let rhs = f_mid - &self.mass * (&state.qdd * p.alpha_m) - &self.damping * v_known - &self.stiffness * q_known;
        let qdd = self
            .effective
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("generalized-alpha effective matrix".into()))?;
        let q = q_pred + &qdd * (p.beta * h * h);
        let qd = v_pred + &qdd * (p.gamma * h);
        let next = ModalState {
            t: state.t + h,
            q,
            qd,
            qdd,
            force: force.clone(),
        };
        if !next.is_finite() {
            return Err(Error::NonFinite("structural state".into()));
        }
        Ok(next)
    }

    /// Velocity and acceleration consistent with the integrator when the
    /// displacement at the end of the step is prescribed (used for predicted
    /// and relaxed iterates of the coupling loop).
    pub fn kinematics_for(&self, state: &ModalState, q_next: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let p = &self.params;
        let h = self.dt;
        let q_pred = &state.q + &state.qd * h + &state.qdd * ((0.5 - p.beta) * h * h);
        let qdd = (q_next - q_pred) / (p.beta * h * h);
        let qd = &state.qd + &state.qdd * ((1.0 - p.gamma) * h) + &qdd * (p.gamma * h);
        (qd, qdd)
    }

    /// Residual of the generalized-α balance between `prev` and `next`.
    pub fn balance_residual(&self, prev: &ModalState, next: &ModalState) -> DVector<f64> {
        let p = &self.params;
        let a = &next.qdd * (1.0 - p.alpha_m) + &prev.qdd * p.alpha_m;
        let v = &next.qd * (1.0 - p.alpha_f) + &prev.qd * p.alpha_f;
        let q = &next.q * (1.0 - p.alpha_f) + &prev.q * p.alpha_f;
        let f = &next.force * (1.0 - p.alpha_f) + &prev.force * p.alpha_f;
        &self.mass * a + &self.damping * v + &self.stiffness * q - f
    }
}
