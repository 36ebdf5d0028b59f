//! Fluid side of the coupling: the solver contract and the built-in
//! analytical aerodynamic models.

mod flutter;
mod quasisteady;
mod section;
mod synthetic;
mod theodorsen;
mod unsteady;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};

pub use flutter::{flutter_eigen_oracle, flutter_speed, system_matrix, FlutterPoint, SectionMode};
pub use quasisteady::QuasiSteadyAero;
pub use section::{naca_contour, naca_half_thickness, rigid_modes, structural_nodes, TypicalSection};
pub use synthetic::{box_surface, read_surface, PressureLaw, SurfacePoint, SyntheticPressureAero};
pub use theodorsen::{bessel_01, rational_c, theodorsen_c, theodorsen_cl, SectionAero};
pub use unsteady::{quintic_hermite, UnsteadyAero};

use crate::error::{Error, Result};

/// Interface motion handed to the fluid side at the end of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceMotion {
    pub time: f64,
    pub displacement: Vec<Vector3<f64>>,
    pub velocity: Vec<Vector3<f64>>,
    pub acceleration: Vec<Vector3<f64>>,
    /// Finite-difference mesh velocities.
    pub grid_velocity: Vec<Vector3<f64>>,
}

impl InterfaceMotion {
    pub fn rest(n: usize, time: f64) -> Self {
        InterfaceMotion {
            time,
            displacement: vec![Vector3::zeros(); n],
            velocity: vec![Vector3::zeros(); n],
            acceleration: vec![Vector3::zeros(); n],
            grid_velocity: vec![Vector3::zeros(); n],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        for (what, field) in [
            ("interface displacements", &self.displacement),
            ("interface velocities", &self.velocity),
            ("interface accelerations", &self.acceleration),
            ("grid velocities", &self.grid_velocity),
        ] {
            if field.len() != n {
                return Err(Error::SizeMismatch {
                    what,
                    expected: n,
                    actual: field.len(),
                });
            }
            if field.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
                return Err(Error::NonFinite(what.into()));
            }
        }
        Ok(())
    }
}

/// Contract every fluid solver exposes to the coupling driver.
///
/// `advance` always starts from the last checkpoint, so two calls with the
/// same applied motion give identical forces.
pub trait AeroSolver: Send {
    fn name(&self) -> &'static str;
    fn ids(&self) -> &[i64];
    /// Undeformed interface positions.
    fn positions(&self) -> &[Vector3<f64>];
    /// Single-process solvers own every node.
    fn is_halo(&self, _index: usize) -> bool {
        false
    }
    /// Tributary areas of the interface points, when the solver has them.
    fn areas(&self) -> Option<&[f64]>;
    /// Sets the state at the start time and checkpoints it.
    fn initialize(&mut self, motion: &InterfaceMotion) -> Result<()>;
    fn apply_motion(&mut self, motion: &InterfaceMotion) -> Result<()>;
    /// Advances from the checkpoint to the time of the applied motion.
    fn advance(&mut self, dt: f64) -> Result<()>;
    /// Converges a steady solution for the applied motion.
    fn solve_steady(&mut self) -> Result<()>;
    fn forces(&self) -> &[Vector3<f64>];
    /// Accepts the current state as the start of the next step.
    fn checkpoint(&mut self);
    /// Discards everything since the last checkpoint.
    fn restore(&mut self);
    /// Per-point CSV snapshot of positions, displacements and forces.
    fn write_solution(&self) -> String;
    /// Resultant lift and moment about the rotation axis, for section models.
    fn section_loads(&self) -> Option<(f64, f64)> {
        None
    }
    fn finalize(&mut self) {}
}

fn solution_csv(ids: &[i64], x: &[Vector3<f64>], u: &[Vector3<f64>], f: &[Vector3<f64>]) -> String {
    let mut out = String::from("id,x,y,z,ux,uy,uz,fx,fy,fz\n");
    for i in 0..ids.len() {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            ids[i], x[i].x, x[i].y, x[i].z, u[i].x, u[i].y, u[i].z, f[i].x, f[i].y, f[i].z
        );
    }
    out
}

/// Rigid section kinematics: plunge (up) and pitch (nose-up) with their
/// first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SectionKinematics {
    pub h: [f64; 3],
    pub theta: [f64; 3],
}

/// Airfoil interface shared by the section models: contour, rigid-motion
/// fit and load distribution.
#[derive(Debug, Clone)]
pub(crate) struct AirfoilInterface {
    ids: Vec<i64>,
    positions: Vec<Vector3<f64>>,
    areas: Vec<f64>,
    /// Least-squares map from stacked `(x, z)` point values to `(t_x, h, θ)`.
    fit: DMatrix<f64>,
    /// Lift and moment shape functions.
    basis: [Vec<f64>; 2],
}

impl AirfoilInterface {
    pub(crate) fn new(settings: &crate::model_io::AirfoilSettings) -> Result<Self> {
        let (positions, areas) = naca_contour(settings)?;
        let n = positions.len();
        let x_f = settings.x_f;
        let mut a = DMatrix::zeros(2 * n, 3);
        for (i, p) in positions.iter().enumerate() {
            a[(2 * i, 0)] = 1.0;
            a[(2 * i, 2)] = p.z;
            a[(2 * i + 1, 1)] = 1.0;
            a[(2 * i + 1, 2)] = -(p.x - x_f);
        }
        let normal = a.transpose() * &a;
        let inv = normal
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("airfoil contour cannot resolve rigid motion".into()))?;
        let fit = inv * a.transpose();

        // F_z,i = a_i (c₁ + c₂ (x_i − x_f))
        let dx: Vec<f64> = positions.iter().map(|p| p.x - x_f).collect();
        let s0: f64 = areas.iter().sum();
        let s1: f64 = areas.iter().zip(&dx).map(|(a, d)| a * d).sum();
        let s2: f64 = areas.iter().zip(&dx).map(|(a, d)| a * d * d).sum();
        // rows: lift = Σ F_z, moment = −Σ dx F_z
        let sys = Matrix2::new(s0, s1, -s1, -s2);
        let inv = sys
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("airfoil contour cannot carry a moment".into()))?;
        let lift_coef = inv * Vector2::new(1.0, 0.0);
        let moment_coef = inv * Vector2::new(0.0, 1.0);
        let shape = |c: Vector2<f64>| -> Vec<f64> { areas.iter().zip(&dx).map(|(a, d)| a * (c[0] + c[1] * d)).collect() };
        let basis = [shape(lift_coef), shape(moment_coef)];
        Ok(AirfoilInterface {
            ids: (1..=n as i64).collect(),
            positions,
            areas,
            fit,
            basis,
        })
    }

    fn rigid(&self, values: &[Vector3<f64>]) -> (f64, f64) {
        let stacked = DVector::from_iterator(2 * values.len(), values.iter().flat_map(|v| [v.x, v.z]));
        let r = &self.fit * stacked;
        (r[1], r[2])
    }

    pub(crate) fn kinematics(&self, motion: &InterfaceMotion) -> Result<SectionKinematics> {
        motion.check(self.positions.len())?;
        let (h0, t0) = self.rigid(&motion.displacement);
        let (h1, t1) = self.rigid(&motion.velocity);
        let (h2, t2) = self.rigid(&motion.acceleration);
        Ok(SectionKinematics {
            h: [h0, h1, h2],
            theta: [t0, t1, t2],
        })
    }

    /// Point forces with resultant `lift` (along +z) and nose-up `moment`
    /// about the rotation axis, computed on the undeformed contour.
    pub(crate) fn distribute(&self, lift: f64, moment: f64) -> Vec<Vector3<f64>> {
        self.basis[0]
            .iter()
            .zip(&self.basis[1])
            .map(|(l, m)| Vector3::new(0.0, 0.0, lift * l + moment * m))
            .collect()
    }

}
