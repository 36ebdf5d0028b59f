use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{solution_csv, AeroSolver, AirfoilInterface, InterfaceMotion, SectionAero, SectionKinematics};
use crate::error::{Error, Result};
use crate::model_io::{AirfoilSettings, WagnerCoefficients};

const QUADRATURE_POINTS: usize = 8;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (0.5 * (1.0 - x), 0.5 * w)
        })
        .collect()
}

/// Quintic Hermite interpolant through `(value, rate, acceleration)` at both
/// ends of an interval of length `h`. Returns value and rate at fraction `s`.
pub fn quintic_hermite(start: [f64; 3], end: [f64; 3], h: f64, s: f64) -> (f64, f64) {
    let (s2, s3) = (s * s, s * s * s);
    let (s4, s5) = (s3 * s, s3 * s2);
    let b = [
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
        0.5 * (s3 - 2.0 * s4 + s5),
        -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
        10.0 * s3 - 15.0 * s4 + 6.0 * s5,
    ];
    let d = [
        -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
        1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
        0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4),
        0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4),
        -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
        30.0 * s2 - 60.0 * s3 + 30.0 * s4,
    ];
    let coef = [start[0], h * start[1], h * h * start[2], h * h * end[2], h * end[1], end[0]];
    let value = (0..6).map(|i| coef[i] * b[i]).sum();
    let rate = (0..6).map(|i| coef[i] * d[i]).sum::<f64>() / h;
    (value, rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LagState {
    kin: SectionKinematics,
    z: [f64; 2],
    loads: (f64, f64),
}

/// Time-domain thin airfoil with two aerodynamic lag states.
///
/// Circulatory lift `2πρU²b·span·[(1 − A₁ − A₂) w + A₁b₁z₁ + A₂b₂z₂]` with
/// `ż_i = (U/b)(w − b_i z_i)`, plus the non-circulatory terms. The lag
/// equations are integrated exactly in the exponential and by Gauss–Legendre
/// quadrature in the forcing, with the downwash reconstructed inside the step
/// from quintic Hermite interpolation of the section motion.
#[derive(Debug, Clone)]
pub struct UnsteadyAero {
    iface: AirfoilInterface,
    section: SectionAero,
    wagner: WagnerCoefficients,
    quadrature: Vec<(f64, f64)>,
    committed: LagState,
    current: LagState,
    applied: SectionKinematics,
    displacement: Vec<Vector3<f64>>,
    committed_displacement: Vec<Vector3<f64>>,
    forces: Vec<Vector3<f64>>,
}

impl UnsteadyAero {
    pub fn new(settings: &AirfoilSettings) -> Result<Self> {
        let w = settings.wagner;
        if !(w.b1 > 0.0 && w.b2 > 0.0) || !(w.a1 + w.a2 < 1.0) {
            return Err(Error::InvalidInput("lag coefficients need b1, b2 > 0 and A1 + A2 < 1".into()));
        }
        if !(settings.u_inf > 0.0) {
            return Err(Error::InvalidInput("unsteady aerodynamics needs a positive free-stream speed".into()));
        }
        let iface = AirfoilInterface::new(settings)?;
        let n = iface.positions.len();
        let mut s = UnsteadyAero {
            iface,
            section: SectionAero::from_settings(settings),
            wagner: w,
            quadrature: gauss_legendre(QUADRATURE_POINTS),
            committed: LagState {
                kin: SectionKinematics::default(),
                z: [0.0; 2],
                loads: (0.0, 0.0),
            },
            current: LagState {
                kin: SectionKinematics::default(),
                z: [0.0; 2],
                loads: (0.0, 0.0),
            },
            applied: SectionKinematics::default(),
            displacement: vec![Vector3::zeros(); n],
            committed_displacement: vec![Vector3::zeros(); n],
            forces: vec![Vector3::zeros(); n],
        };
        s.settle(SectionKinematics::default());
        s.checkpoint();
        Ok(s)
    }

    pub fn section(&self) -> &SectionAero {
        &self.section
    }

    pub fn lag_states(&self) -> [f64; 2] {
        self.current.z
    }

    /// Clears the lag states, as for a flow started impulsively at the
    /// current checkpoint.
    pub fn impulsive_start(&mut self) {
        self.committed.z = [0.0; 2];
        self.current.z = [0.0; 2];
        self.committed.loads = self.loads(&self.committed.kin, [0.0; 2]);
        self.current.loads = self.committed.loads;
        self.forces = self.iface.distribute(self.current.loads.0, self.current.loads.1);
    }

    fn downwash(&self, k: &SectionKinematics) -> f64 {
        self.section.downwash(k.theta[0], k.theta[1], k.h[1])
    }

    fn loads(&self, k: &SectionKinematics, z: [f64; 2]) -> (f64, f64) {
        let w = self.downwash(k);
        let c = &self.wagner;
        let effective = (1.0 - c.a1 - c.a2) * w + c.a1 * c.b1 * z[0] + c.a2 * c.b2 * z[1];
        let l_c = self.section.lift_slope_force() * effective;
        let (l_nc, m_nc) = self.section.added_mass_loads(k.h[2], k.theta[1], k.theta[2]);
        (l_c + l_nc, m_nc + self.section.circulatory_arm() * l_c)
    }

    /// Lag states in equilibrium with the motion `k`.
    fn settle(&mut self, k: SectionKinematics) {
        let w = self.downwash(&k);
        let z = [w / self.wagner.b1, w / self.wagner.b2];
        let loads = self.loads(&k, z);
        self.current = LagState { kin: k, z, loads };
        self.applied = k;
        self.forces = self.iface.distribute(loads.0, loads.1);
    }

    fn integrate(&self, from: &SectionKinematics, to: &SectionKinematics, z0: [f64; 2], dt: f64) -> [f64; 2] {
        let rate = self.section.u / self.section.b;
        let samples: Vec<(f64, f64)> = self
            .quadrature
            .iter()
            .map(|&(s, w)| {
                let (theta, theta_dot) = quintic_hermite(from.theta, to.theta, dt, s);
                let (_, h_dot) = quintic_hermite(from.h, to.h, dt, s);
                (s, w * self.section.downwash(theta, theta_dot, h_dot))
            })
            .collect();
        let mut z = [0.0; 2];
        for (i, b) in [self.wagner.b1, self.wagner.b2].into_iter().enumerate() {
            let lambda = rate * b;
            let forcing: f64 = samples.iter().map(|(s, ww)| ww * (-lambda * dt * (1.0 - s)).exp()).sum();
            z[i] = (-lambda * dt).exp() * z0[i] + rate * dt * forcing;
        }
        z
    }
}

impl AeroSolver for UnsteadyAero {
    fn name(&self) -> &'static str {
        "unsteady"
    }

    fn ids(&self) -> &[i64] {
        &self.iface.ids
    }

    fn positions(&self) -> &[Vector3<f64>] {
        &self.iface.positions
    }

    fn areas(&self) -> Option<&[f64]> {
        Some(&self.iface.areas)
    }

    fn initialize(&mut self, motion: &InterfaceMotion) -> Result<()> {
        let k = self.iface.kinematics(motion)?;
        self.displacement = motion.displacement.clone();
        self.settle(k);
        self.checkpoint();
        Ok(())
    }

    fn apply_motion(&mut self, motion: &InterfaceMotion) -> Result<()> {
        self.applied = self.iface.kinematics(motion)?;
        self.displacement = motion.displacement.clone();
        Ok(())
    }

    fn advance(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive (got {dt})")));
        }
        let start = self.committed;
        let z = self.integrate(&start.kin, &self.applied, start.z, dt);
        let loads = self.loads(&self.applied, z);
        if !(loads.0.is_finite() && loads.1.is_finite()) {
            return Err(Error::NonFinite("unsteady aerodynamic loads".into()));
        }
        self.current = LagState {
            kin: self.applied,
            z,
            loads,
        };
        self.forces = self.iface.distribute(loads.0, loads.1);
        Ok(())
    }

    fn solve_steady(&mut self) -> Result<()> {
        let mut k = self.applied;
        k.h[1] = 0.0;
        k.h[2] = 0.0;
        k.theta[1] = 0.0;
        k.theta[2] = 0.0;
        self.settle(k);
        Ok(())
    }

    fn forces(&self) -> &[Vector3<f64>] {
        &self.forces
    }

    fn checkpoint(&mut self) {
        self.committed = self.current;
        self.committed_displacement = self.displacement.clone();
    }

    fn restore(&mut self) {
        self.current = self.committed;
        self.applied = self.committed.kin;
        self.displacement = self.committed_displacement.clone();
        self.forces = self.iface.distribute(self.current.loads.0, self.current.loads.1);
    }

    fn write_solution(&self) -> String {
        solution_csv(&self.iface.ids, &self.iface.positions, &self.displacement, &self.forces)
    }

    fn section_loads(&self) -> Option<(f64, f64)> {
        Some(self.current.loads)
    }
}
