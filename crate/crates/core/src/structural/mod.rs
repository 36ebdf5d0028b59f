//! Native modal structural solver.

mod integrator;

use nalgebra::{DMatrix, DVector, Vector3};

pub use integrator::{GeneralizedAlpha, IntegratorParams};

use crate::error::{Error, Result};
use crate::model_io::{DampingSpec, StructuralModel, DOFS_PER_NODE};
use crate::transfer::{FieldKind, InterfaceField};

/// Generalized coordinates at one time level. `force` is the generalized
/// force the level was computed with; the generalized-α balance needs it
/// for the next step.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub t: f64,
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
    pub force: DVector<f64>,
}

impl ModalState {
    pub fn zeros(n: usize) -> Self {
        ModalState {
            t: 0.0,
            q: DVector::zeros(n),
            qd: DVector::zeros(n),
            qdd: DVector::zeros(n),
            force: DVector::zeros(n),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.q, &self.qd, &self.qdd, &self.force]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
            && self.t.is_finite()
    }
}

/// Generalized damping matrix of a model.
///
/// Decoupled models get `diag(2ξᵢωᵢ)`. Coupled models go through the
/// generalized eigenproblem `K v = d² M v`: with mass-normalised
/// eigenvectors `V`, `C̃ = diag(2ξᵢdᵢ M̃ᵢᵢ)` and `C = V⁻ᵀ C̃ V⁻¹`. Ratios are
/// matched to eigenmodes in ascending frequency order.
pub fn build_damping(model: &StructuralModel) -> Result<DMatrix<f64>> {
    match &model.damping {
        DampingSpec::Matrix(c) => Ok(c.clone()),
        DampingSpec::Ratios(xi) if model.diagonal => {
            let n = model.n_modes();
            Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 * xi[i] * model.frequencies[i] } else { 0.0 }))
        }
        DampingSpec::Ratios(xi) => modal_damping(&model.mass, &model.stiffness, xi),
    }
}

/// Mass-normalised solution of `K v = d² M v`, eigenvalues ascending.
pub fn generalized_eigen(mass: &DMatrix<f64>, stiffness: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = mass.nrows();
    let chol = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Eigen("generalized mass is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigen("generalized mass factor is singular".into()))?;
    let mut a = &l_inv * stiffness * l_inv.transpose();
    a = (&a + a.transpose()) * 0.5;
    let eig = a.symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalues".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let w = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let v = l_inv.transpose() * w;
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok((values, v))
}

/// Generalized coordinate each eigenvector belongs to, so that the i-th
/// damping ratio follows coordinate i rather than the eigenvalue order.
/// Pairs are taken greedily by mass participation `|vᵢ (M v)ᵢ|`.
fn coordinate_owners(mass: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<usize> {
    let n = v.ncols();
    let mv = mass * v;
    let mut pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|c| (0..n).map(move |i| (c, i)))
        .map(|(c, i)| (c, i, (v[(i, c)] * mv[(i, c)]).abs()))
        .collect();
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut owner = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (c, i, _) in pairs {
        if owner[c] == usize::MAX && !taken[i] {
            owner[c] = i;
            taken[i] = true;
        }
    }
    owner
}

fn modal_damping(mass: &DMatrix<f64>, stiffness: &DMatrix<f64>, xi: &[f64]) -> Result<DMatrix<f64>> {
    let n = mass.nrows();
    let (lambda, v) = generalized_eigen(mass, stiffness)?;
    let mt = v.transpose() * mass * &v;
    let owner = coordinate_owners(mass, &v);
    let c_modal = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * xi[owner[i]] * lambda[i].max(0.0).sqrt() * mt[(i, i)]
        } else {
            0.0
        }
    });
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigen("eigenvector matrix is singular".into()))?;
    let c = v_inv.transpose() * c_modal * v_inv;
    Ok((&c + c.transpose()) * 0.5)
}

/// `F̃ = Uᵀ F` with nodal forces (and optional moments) stacked per node.
/// Nodes absent from the fields contribute nothing.
pub fn generalized_force(
    model: &StructuralModel,
    forces: &InterfaceField,
    moments: Option<&InterfaceField>,
) -> Result<DVector<f64>> {
    let mut stacked = DVector::zeros(model.modes.nrows());
    let mut scatter = |field: &InterfaceField, offset: usize| -> Result<()> {
        for (id, v) in field.ids.iter().zip(&field.values) {
            let i = model
                .node_index(*id)
                .ok_or_else(|| Error::InvalidInput(format!("load on node {id}, which is not in the structural model")))?;
            for k in 0..3 {
                stacked[i * DOFS_PER_NODE + offset + k] += v[k];
            }
        }
        Ok(())
    };
    scatter(forces, 0)?;
    if let Some(m) = moments {
        scatter(m, 3)?;
    }
    Ok(model.modes.transpose() * stacked)
}

/// Physical nodal kinematics recovered from a modal state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalMotion {
    pub displacement: InterfaceField,
    pub velocity: InterfaceField,
    pub acceleration: InterfaceField,
    /// Nodal rotations. Not interpolated: rigid links already turn master
    /// rotations into slave translations inside the mode shapes.
    pub rotation: InterfaceField,
}

fn nodal_field(model: &StructuralModel, stacked: &DVector<f64>, offset: usize, kind: FieldKind) -> InterfaceField {
    InterfaceField {
        ids: model.nodes.iter().map(|n| n.id).collect(),
        positions: model.positions(),
        values: (0..model.n_nodes())
            .map(|i| {
                let b = i * DOFS_PER_NODE + offset;
                Vector3::new(stacked[b], stacked[b + 1], stacked[b + 2])
            })
            .collect(),
        kind,
    }
}

/// `u = U q`, `u̇ = U q̇`, `ü = U q̈` per stacked DOF.
pub fn physical_motion(model: &StructuralModel, state: &ModalState) -> NodalMotion {
    let u = &model.modes * &state.q;
    let v = &model.modes * &state.qd;
    let a = &model.modes * &state.qdd;
    NodalMotion {
        displacement: nodal_field(model, &u, 0, FieldKind::Displacement),
        velocity: nodal_field(model, &v, 0, FieldKind::Velocity),
        acceleration: nodal_field(model, &a, 0, FieldKind::Acceleration),
        rotation: nodal_field(model, &u, 3, FieldKind::Rotation),
    }
}

/// Controls for [`solve_steady`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoParams {
    pub max_steps: usize,
    /// Convergence threshold on `‖Δq‖∞ / ‖q‖∞`.
    pub tolerance: f64,
}

impl Default for PseudoParams {
    fn default() -> Self {
        PseudoParams {
            max_steps: 10_000,
            tolerance: 1e-12,
        }
    }
}

/// Steady response `K q = F̃`, reached by pseudo-time marching with
/// critical modal damping and a strongly dissipative integrator
/// (`ρ∞ = 0`), pseudo step `10 / min ωᵢ`.
///
/// Inertia and damping only shape the transient; the converged state has
/// `q̇ = q̈ = 0`. `start` warm-starts the march.
pub fn solve_steady(
    model: &StructuralModel,
    force: &DVector<f64>,
    start: Option<&DVector<f64>>,
    pseudo: PseudoParams,
) -> Result<ModalState> {
    let n = model.n_modes();
    if force.len() != n {
        return Err(Error::SizeMismatch {
            what: "generalized force",
            expected: n,
            actual: force.len(),
        });
    }
    let k_lu = model.stiffness.clone().lu();
    if !k_lu.is_invertible() {
        return Err(Error::Singular("generalized stiffness (steady solve)".into()));
    }
    let (lambda, _) = generalized_eigen(&model.mass, &model.stiffness)?;
    let omega_min = lambda[0].max(0.0).sqrt();
    if !(omega_min > 0.0) {
        return Err(Error::Singular("generalized stiffness has a zero-frequency mode".into()));
    }
    let critical = modal_damping(&model.mass, &model.stiffness, &vec![1.0; n])?;
    let dt = 10.0 / omega_min;
    let integ = GeneralizedAlpha::new(
        model.mass.clone(),
        critical,
        model.stiffness.clone(),
        IntegratorParams::from_rho_inf(0.0)?,
        dt,
    )?;

    let q0 = start.cloned().unwrap_or_else(|| DVector::zeros(n));
    let mut state = integ.initial_state(0.0, q0, DVector::zeros(n), force.clone())?;
    let mut last_change = f64::INFINITY;
    for _ in 0..pseudo.max_steps {
        let next = integ.step(&state, force)?;
        let change = (&next.q - &state.q).amax();
        let scale = next.q.amax();
        state = next;
        last_change = change;
        if change == 0.0 || change <= pseudo.tolerance * scale {
            return Ok(ModalState {
                t: 0.0,
                q: state.q,
                qd: DVector::zeros(n),
                qdd: DVector::zeros(n),
                force: force.clone(),
            });
        }
    }
    Err(Error::NonConvergence {
        what: "steady structural solve".into(),
        iterations: pseudo.max_steps,
        residual: last_change,
        trajectory: Vec::new(),
    })
}

/// Native structural solver: the model plus its damping and integrator,
/// exposing node queries, load application and repeatable steps.
#[derive(Debug, Clone)]
pub struct ModalSolver {
    model: StructuralModel,
    damping: DMatrix<f64>,
    integrator: Option<GeneralizedAlpha>,
    pseudo: PseudoParams,
}

impl ModalSolver {
    pub fn new(
        model: StructuralModel,
        damping_override: Option<f64>,
        params: IntegratorParams,
        dt: Option<f64>,
        pseudo: PseudoParams,
    ) -> Result<Self> {
        let mut model = model;
        if let Some(xi) = damping_override {
            model.damping = DampingSpec::Ratios(vec![xi; model.n_modes()]);
        }
        let damping = build_damping(&model)?;
        let integrator = match dt {
            Some(dt) => Some(GeneralizedAlpha::new(
                model.mass.clone(),
                damping.clone(),
                model.stiffness.clone(),
                params,
                dt,
            )?),
            None => None,
        };
        Ok(ModalSolver {
            model,
            damping,
            integrator,
            pseudo,
        })
    }

    pub fn model(&self) -> &StructuralModel {
        &self.model
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn integrator(&self) -> Result<&GeneralizedAlpha> {
        self.integrator
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("structural solver was built without a time step".into()))
    }

    pub fn node_ids(&self) -> Vec<i64> {
        self.model.nodes.iter().map(|n| n.id).collect()
    }

    pub fn node_positions(&self) -> Vec<Vector3<f64>> {
        self.model.positions()
    }

    /// Single-process solver: no node is ever a halo node.
    pub fn is_halo(&self, _index: usize) -> bool {
        false
    }

    pub fn generalized_force(&self, forces: &InterfaceField, moments: Option<&InterfaceField>) -> Result<DVector<f64>> {
        generalized_force(&self.model, forces, moments)
    }

    pub fn step(&self, checkpoint: &ModalState, force: &DVector<f64>) -> Result<ModalState> {
        self.integrator()?.step(checkpoint, force)
    }

    pub fn solve_steady(&self, force: &DVector<f64>, start: Option<&DVector<f64>>) -> Result<ModalState> {
        solve_steady(&self.model, force, start, self.pseudo)
    }

    pub fn motion(&self, state: &ModalState) -> NodalMotion {
        physical_motion(&self.model, state)
    }

    /// Writes nodal displacements of `state` as `id,x,y,z,ux,uy,uz`.
    pub fn write_solution(&self, state: &ModalState) -> String {
        self.motion(state).displacement.to_csv()
    }
}
