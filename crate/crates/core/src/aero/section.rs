//! Pitch-plunge typical section: structural parameters, airfoil geometry
//! and the two-mode structural model that drives the built-in aerodynamics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Vector3};

use super::theodorsen::SectionAero;
use crate::error::{Error, Result};
use crate::model_io::{AirfoilSettings, DampingSpec, Node, StructuralModel, DOFS_PER_NODE};

/// Dimensional pitch-plunge parameters. Plunge `h` is positive up, pitch
/// nose-up; `s_m` is positive when the centre of gravity lies aft of the
/// rotation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalSection {
    pub m: f64,
    pub s_m: f64,
    pub i_f: f64,
    pub k_h: f64,
    pub k_alpha: f64,
    pub c_h: f64,
    pub c_alpha: f64,
    pub aero: SectionAero,
}

impl TypicalSection {
    /// Builds the section from the usual nondimensional groups
    /// `χ = S_m/(m b)`, `r_α² = I_f/(m b²)`, `ω̄ = ω_h/ω_α`, `μ = m/(πρb²)`.
    pub fn from_nondimensional(
        chi: f64,
        r_alpha: f64,
        omega_alpha: f64,
        omega_bar: f64,
        mu: f64,
        aero: SectionAero,
    ) -> Result<Self> {
        let b = aero.b;
        let m = mu * PI * aero.rho * b * b * aero.span;
        let i_f = r_alpha * r_alpha * m * b * b;
        let omega_h = omega_bar * omega_alpha;
        let s = TypicalSection {
            m,
            s_m: chi * m * b,
            i_f,
            k_h: m * omega_h * omega_h,
            k_alpha: i_f * omega_alpha * omega_alpha,
            c_h: 0.0,
            c_alpha: 0.0,
            aero,
        };
        s.validate()?;
        Ok(s)
    }

    /// Reads mass, stiffness and damping from a two-mode (plunge, pitch)
    /// model.
    pub fn from_model(model: &StructuralModel, damping: &DMatrix<f64>, aero: SectionAero) -> Result<Self> {
        if model.n_modes() != 2 {
            return Err(Error::InvalidModel(format!(
                "typical section needs exactly 2 generalized coordinates, model has {}",
                model.n_modes()
            )));
        }
        let s = TypicalSection {
            m: model.mass[(0, 0)],
            s_m: -model.mass[(0, 1)],
            i_f: model.mass[(1, 1)],
            k_h: model.stiffness[(0, 0)],
            k_alpha: model.stiffness[(1, 1)],
            c_h: damping[(0, 0)],
            c_alpha: damping[(1, 1)],
            aero,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0) || !(self.i_f > 0.0) {
            return Err(Error::InvalidModel("section mass and inertia must be positive".into()));
        }
        if !(self.m * self.i_f - self.s_m * self.s_m > 0.0) {
            return Err(Error::InvalidModel("section inertia matrix is not positive definite".into()));
        }
        if !(self.aero.b > 0.0) {
            return Err(Error::InvalidModel("semichord must be positive".into()));
        }
        Ok(())
    }

    pub fn mass_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.m, -self.s_m, -self.s_m, self.i_f])
    }

    pub fn stiffness_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.k_h, 0.0, 0.0, self.k_alpha])
    }

    pub fn damping_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.c_h, 0.0, 0.0, self.c_alpha])
    }

    /// Non-circulatory (added) mass matrix.
    pub fn added_mass(&self) -> DMatrix<f64> {
        let a = self.aero.a();
        let b = self.aero.b;
        let f = PI * self.aero.rho * b * b * self.aero.span;
        DMatrix::from_row_slice(2, 2, &[f, f * b * a, f * b * a, f * b * b * (0.125 + a * a)])
    }

    pub fn omega_h(&self) -> f64 {
        (self.k_h / self.m).sqrt()
    }

    pub fn omega_alpha(&self) -> f64 {
        (self.k_alpha / self.i_f).sqrt()
    }

    pub fn mass_ratio(&self) -> f64 {
        self.m / (PI * self.aero.rho * self.aero.b * self.aero.b * self.aero.span)
    }

    /// `U / (b ω_α √μ)`.
    pub fn flutter_index(&self, u: f64) -> f64 {
        u / (self.aero.b * self.omega_alpha() * self.mass_ratio().sqrt())
    }

    /// Two-mode structural model on the section's structural nodes.
    pub fn structural_model(&self, settings: &AirfoilSettings) -> Result<StructuralModel> {
        let nodes = structural_nodes(settings);
        let modes = rigid_modes(&nodes, settings.x_f);
        StructuralModel::general(
            nodes,
            modes,
            self.mass_matrix(),
            self.stiffness_matrix(),
            DampingSpec::Matrix(self.damping_matrix()),
        )
    }
}

impl SectionAero {
    pub fn from_settings(s: &AirfoilSettings) -> Self {
        SectionAero {
            rho: s.rho,
            u: s.u_inf,
            b: 0.5 * s.chord,
            x_f: s.x_f,
            span: s.span,
            alpha: s.alpha,
        }
    }
}

/// NACA 00xx half thickness with a closed trailing edge.
pub fn naca_half_thickness(x: f64, chord: f64, thickness: f64) -> f64 {
    let t = (x / chord).clamp(0.0, 1.0);
    5.0 * thickness
        * chord
        * (0.2969 * t.sqrt() - 0.1260 * t - 0.3516 * t * t + 0.2843 * t.powi(3) - 0.1036 * t.powi(4))
}

/// Closed contour in the `x–z` plane (`y = 0`), cosine-clustered, starting
/// at the trailing edge and running over the upper surface. Returns points
/// and tributary areas (half the adjacent panel lengths times the span).
pub fn naca_contour(settings: &AirfoilSettings) -> Result<(Vec<Vector3<f64>>, Vec<f64>)> {
    let n = settings.n_contour;
    if n < 8 {
        return Err(Error::InvalidInput(format!("contour needs at least 8 points (got {n})")));
    }
    let c = settings.chord;
    let points: Vec<_> = (0..n)
        .map(|i| {
            let beta = 2.0 * PI * i as f64 / n as f64;
            let x = 0.5 * c * (1.0 + beta.cos());
            let z = naca_half_thickness(x, c, settings.thickness);
            let z = if beta <= PI { z } else { -z };
            Vector3::new(x, 0.0, z)
        })
        .collect();
    let areas = (0..n)
        .map(|i| {
            let prev = points[(i + n - 1) % n];
            let next = points[(i + 1) % n];
            0.5 * ((points[i] - prev).norm() + (next - points[i]).norm()) * settings.span
        })
        .collect();
    Ok((points, areas))
}

/// Structural node cloud of the section: the rotation axis (node 1) plus
/// points on both surfaces at every tenth of the chord from 5% to 95%.
pub fn structural_nodes(settings: &AirfoilSettings) -> Vec<Node> {
    let c = settings.chord;
    let mut nodes = vec![Node {
        id: 1,
        position: Vector3::new(settings.x_f, 0.0, 0.0),
    }];
    let mut id = 100;
    for sign in [1.0, -1.0] {
        for k in 0..10 {
            let x = c * (0.05 + 0.1 * k as f64);
            let z = sign * naca_half_thickness(x, c, settings.thickness);
            id += 1;
            nodes.push(Node {
                id,
                position: Vector3::new(x, 0.0, z),
            });
        }
    }
    nodes
}

/// Rigid plunge (unit `t3`) and nose-up pitch (unit `r2`, i.e. translations
/// `(dz, 0, −dx)` about the axis) mode shapes.
pub fn rigid_modes(nodes: &[Node], x_f: f64) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(nodes.len() * DOFS_PER_NODE, 2);
    for (i, node) in nodes.iter().enumerate() {
        let r = i * DOFS_PER_NODE;
        let dx = node.position.x - x_f;
        let dz = node.position.z;
        u[(r + 2, 0)] = 1.0;
        u[(r, 1)] = dz;
        u[(r + 2, 1)] = -dx;
        u[(r + 4, 1)] = 1.0;
    }
    u
}
