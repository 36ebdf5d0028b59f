//! Predictor, Aitken relaxation and the convergence measure of the inner
//! FSI loop.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model_io::StructuralModel;
use crate::structural::ModalState;

/// Extrapolates the displacement of the next step from accepted states
/// (oldest first). Order 0 holds `q_n`; order 1 uses
/// `q_n + dt (1.5 q̇_n − 0.5 q̇_{n−1})`, falling back to `q̇_{n−1} = q̇_n`.
pub fn predict_displacements(history: &[ModalState], dt: f64, order: usize) -> Result<DVector<f64>> {
    let last = history
        .last()
        .ok_or_else(|| Error::InvalidInput("prediction needs at least one accepted state".into()))?;
    match order {
        0 => Ok(last.q.clone()),
        1 => {
            let prev_qd = if history.len() >= 2 {
                &history[history.len() - 2].qd
            } else {
                &last.qd
            };
            Ok(&last.q + (&last.qd * 1.5 - prev_qd * 0.5) * dt)
        }
        _ => Err(Error::InvalidInput(format!("predictor order must be 0 or 1 (got {order})"))),
    }
}

/// Result of one Aitken update.
#[derive(Debug, Clone, PartialEq)]
pub struct AitkenStep {
    pub omega: f64,
    /// Increment `ω_{k+1} r_{k+1}` to add to the current iterate.
    pub update: DVector<f64>,
    /// Set when `r_{k+1} − r_k` vanished and the previous factor was kept.
    pub stalled: bool,
}

/// `ω_{k+1} = −ω_k ⟨r_k, r_{k+1} − r_k⟩ / ‖r_{k+1} − r_k‖²`, clamped to
/// `(0, ω_max]`.
pub fn aitken_relax(omega: f64, r_k: &DVector<f64>, r_next: &DVector<f64>, omega_max: f64) -> Result<AitkenStep> {
    if r_k.len() != r_next.len() {
        return Err(Error::SizeMismatch {
            what: "Aitken residuals",
            expected: r_k.len(),
            actual: r_next.len(),
        });
    }
    if r_next.iter().all(|x| *x == 0.0) {
        return Ok(AitkenStep {
            omega,
            update: r_next.clone(),
            stalled: false,
        });
    }
    let diff = r_next - r_k;
    let denom = diff.norm_squared();
    if denom == 0.0 {
        log::warn!("Aitken residual difference vanished; keeping omega = {omega}");
        return Ok(AitkenStep {
            omega,
            update: r_next * omega,
            stalled: true,
        });
    }
    let raw = -omega * r_k.dot(&diff) / denom;
    let omega_new = clamp_omega(raw, omega_max);
    Ok(AitkenStep {
        omega: omega_new,
        update: r_next * omega_new,
        stalled: false,
    })
}

/// Floor applied when the raw factor is not positive.
pub const OMEGA_MIN: f64 = 1e-3;

fn clamp_omega(omega: f64, omega_max: f64) -> f64 {
    if omega.is_nan() {
        omega_max
    } else {
        omega.clamp(OMEGA_MIN.min(omega_max), omega_max)
    }
}

/// Physical translation increment `U_t Δq` as one vector per node.
pub fn physical_increment(model: &StructuralModel, dq: &DVector<f64>) -> DVector<f64> {
    model.translation_modes() * dq
}

/// RMS over nodes of the magnitude of the translational increment
/// `U (q_new − q_prev)`, in metres.
pub fn residual_rms(model: &StructuralModel, q_new: &DVector<f64>, q_prev: &DVector<f64>) -> Result<f64> {
    if q_new.len() != q_prev.len() || q_new.len() != model.n_modes() {
        return Err(Error::SizeMismatch {
            what: "modal residual",
            expected: model.n_modes(),
            actual: q_new.len().min(q_prev.len()),
        });
    }
    let du = physical_increment(model, &(q_new - q_prev));
    Ok(rms_of_nodes(&du))
}

pub(crate) fn rms_of_nodes(stacked: &DVector<f64>) -> f64 {
    let nodes = stacked.len() / 3;
    if nodes == 0 {
        return 0.0;
    }
    (stacked.norm_squared() / nodes as f64).sqrt()
}
