//! p-method stability of the typical section with two-lag aerodynamics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::TypicalSection;
use crate::error::{Error, Result};
use crate::model_io::WagnerCoefficients;

/// One oscillatory eigenpair of the aeroelastic system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionMode {
    pub frequency_hz: f64,
    /// Positive when the mode decays.
    pub damping_ratio: f64,
    /// Real part of the eigenvalue (1/s).
    pub growth_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlutterPoint {
    pub speed: f64,
    pub eigenvalues: Vec<Complex64>,
    /// Oscillatory modes, ascending frequency.
    pub modes: Vec<SectionMode>,
}

impl FlutterPoint {
    /// Largest growth rate among oscillatory modes.
    pub fn max_growth(&self) -> f64 {
        self.modes.iter().map(|m| m.growth_rate).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Damping ratio of the least-damped oscillatory mode.
    pub fn min_damping(&self) -> f64 {
        self.modes.iter().map(|m| m.damping_ratio).fold(f64::INFINITY, f64::min)
    }
}

/// First-order system matrix for state `[h, θ, ḣ, θ̇, z₁, z₂]` at speed `u`.
pub fn system_matrix(section: &TypicalSection, wagner: &WagnerCoefficients, u: f64) -> Result<DMatrix<f64>> {
    let aero = &section.aero;
    let (b, a) = (aero.b, aero.a());
    let m_tot = section.mass_matrix() + section.added_mass();
    let m_inv = m_tot
        .try_inverse()
        .ok_or_else(|| Error::Singular("section inertia including added mass".into()))?;

    let f = PI * aero.rho * b * b * aero.span;
    let arm = aero.circulatory_arm();
    let q = 2.0 * PI * aero.rho * u * u * b * aero.span;
    let q_over_u = 2.0 * PI * aero.rho * u * b * aero.span;
    let lag = 1.0 - wagner.a1 - wagner.a2;
    let tail = b * (0.5 - a);

    // generalized load = E · [h, θ, ḣ, θ̇, z₁, z₂]
    let mut e = DMatrix::zeros(2, 6);
    let circ = [
        0.0,
        q * lag,
        -q_over_u * lag,
        q_over_u * lag * tail,
        q * wagner.a1 * wagner.b1,
        q * wagner.a2 * wagner.b2,
    ];
    for c in 0..6 {
        e[(0, c)] = circ[c];
        e[(1, c)] = arm * circ[c];
    }
    e[(0, 3)] += f * u;
    e[(1, 3)] -= f * u * tail;
    let k = section.stiffness_matrix();
    let cs = section.damping_matrix();
    for r in 0..2 {
        for c in 0..2 {
            e[(r, c)] -= k[(r, c)];
            e[(r, c + 2)] -= cs[(r, c)];
        }
    }
    let acc = m_inv * e;

    let mut sys = DMatrix::zeros(6, 6);
    sys[(0, 2)] = 1.0;
    sys[(1, 3)] = 1.0;
    for r in 0..2 {
        for c in 0..6 {
            sys[(2 + r, c)] = acc[(r, c)];
        }
    }
    let rate = u / b;
    for (i, bi) in [wagner.b1, wagner.b2].into_iter().enumerate() {
        let row = 4 + i;
        sys[(row, 1)] = rate;
        sys[(row, 2)] = -1.0 / b;
        sys[(row, 3)] = tail / b;
        sys[(row, row)] = -rate * bi;
    }
    Ok(sys)
}

fn point(section: &TypicalSection, wagner: &WagnerCoefficients, u: f64) -> Result<FlutterPoint> {
    let sys = system_matrix(section, wagner, u)?;
    let eigenvalues: Vec<Complex64> = sys.complex_eigenvalues().iter().copied().collect();
    if eigenvalues.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
        return Err(Error::Eigen(format!("non-finite eigenvalue at U = {u}")));
    }
    let mut modes: Vec<SectionMode> = eigenvalues
        .iter()
        .filter(|l| l.im > 1e-9 * l.norm().max(1.0))
        .map(|l| SectionMode {
            frequency_hz: l.im / (2.0 * PI),
            damping_ratio: -l.re / l.norm(),
            growth_rate: l.re,
        })
        .collect();
    modes.sort_by(|x, y| x.frequency_hz.total_cmp(&y.frequency_hz));
    Ok(FlutterPoint {
        speed: u,
        eigenvalues,
        modes,
    })
}

/// Eigen-analysis of the coupled section at each speed of an ascending
/// sweep.
pub fn flutter_eigen_oracle(
    section: &TypicalSection,
    wagner: &WagnerCoefficients,
    speeds: &[f64],
) -> Result<Vec<FlutterPoint>> {
    if speeds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("speed sweep must be strictly ascending".into()));
    }
    if speeds.iter().any(|u| !(*u >= 0.0)) {
        return Err(Error::InvalidInput("speeds must be non-negative".into()));
    }
    speeds.iter().map(|&u| point(section, wagner, u)).collect()
}

/// Flutter speed: first zero crossing of the largest oscillatory growth rate
/// on a uniform sweep of `n` points up to `u_max`, refined by bisection.
pub fn flutter_speed(section: &TypicalSection, wagner: &WagnerCoefficients, u_max: f64, n: usize) -> Result<f64> {
    let speeds: Vec<f64> = (1..=n).map(|i| u_max * i as f64 / n as f64).collect();
    let sweep = flutter_eigen_oracle(section, wagner, &speeds)?;
    let growth: Vec<f64> = sweep.iter().map(FlutterPoint::max_growth).collect();
    let k = growth
        .windows(2)
        .position(|g| g[0] < 0.0 && g[1] >= 0.0)
        .ok_or_else(|| Error::NoFlutterCrossing(format!("no growth-rate sign change up to U = {u_max}")))?;
    let (mut lo, mut hi) = (speeds[k], speeds[k + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if point(section, wagner, mid)?.max_growth() < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
