//! Field transfer between the structural node cloud and the fluid interface.

mod rbf;

use std::fmt::Write as _;

use nalgebra::Vector3;

pub use rbf::{cp_c2, default_support_radius, Dimension, RbfMap};

use crate::error::{Error, Result};
use crate::model_io::TransferMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Displacement,
    Velocity,
    Acceleration,
    Force,
    Moment,
    Rotation,
}

/// Ordered point cloud carrying one 3-vector per point.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceField {
    pub ids: Vec<i64>,
    pub positions: Vec<Vector3<f64>>,
    pub values: Vec<Vector3<f64>>,
    pub kind: FieldKind,
}

impl InterfaceField {
    pub fn new(ids: Vec<i64>, positions: Vec<Vector3<f64>>, values: Vec<Vector3<f64>>, kind: FieldKind) -> Result<Self> {
        if ids.len() != positions.len() || values.len() != positions.len() {
            return Err(Error::SizeMismatch {
                what: "interface field values",
                expected: positions.len(),
                actual: values.len().min(ids.len()),
            });
        }
        if values.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite(format!("{kind:?} field")));
        }
        Ok(InterfaceField {
            ids,
            positions,
            values,
            kind,
        })
    }

    pub fn zeros(ids: Vec<i64>, positions: Vec<Vector3<f64>>, kind: FieldKind) -> Self {
        let values = vec![Vector3::zeros(); positions.len()];
        InterfaceField {
            ids,
            positions,
            values,
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Componentwise sum of the values.
    pub fn sum(&self) -> Vector3<f64> {
        self.values.iter().fold(Vector3::zeros(), |a, v| a + v)
    }

    /// `Σ (x − about) × v`.
    pub fn moment_about(&self, about: &Vector3<f64>) -> Vector3<f64> {
        self.positions
            .iter()
            .zip(&self.values)
            .fold(Vector3::zeros(), |a, (x, v)| a + (x - about).cross(v))
    }

    /// Debug dump as `id,x,y,z,vx,vy,vz`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,x,y,z,vx,vy,vz\n");
        for ((id, x), v) in self.ids.iter().zip(&self.positions).zip(&self.values) {
            let _ = writeln!(out, "{id},{:?},{:?},{:?},{:?},{:?},{:?}", x.x, x.y, x.z, v.x, v.y, v.z);
        }
        out
    }
}

/// Finite-difference grid velocities `(x_new − x_old)/dt`.
///
/// With `initial_deformation_start` set (first step of a run that starts
/// from a deformed shape) the field is exactly zero.
pub fn grid_velocities(
    previous: &[Vector3<f64>],
    current: &[Vector3<f64>],
    dt: f64,
    initial_deformation_start: bool,
) -> Result<Vec<Vector3<f64>>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive (got {dt})")));
    }
    if previous.len() != current.len() {
        return Err(Error::SizeMismatch {
            what: "grid positions",
            expected: previous.len(),
            actual: current.len(),
        });
    }
    if initial_deformation_start {
        return Ok(vec![Vector3::zeros(); current.len()]);
    }
    Ok(previous.iter().zip(current).map(|(a, b)| (b - a) / dt).collect())
}

/// Companion data for consistent load transfer.
#[derive(Debug, Clone)]
struct ConsistentLoads {
    fluid_to_structure: RbfMap,
    fluid_weights: Vec<f64>,
    structural_weights: Vec<f64>,
}

/// Both directions of the interface transfer for one structural/fluid pair.
///
/// Kinematics always use the structure-to-fluid map `H`. Loads use either
/// `Hᵀ` (conservative) or a fluid-to-structure interpolation of the load
/// density `F/a`, scaled by the structural weights `Hᵀa` (consistent).
#[derive(Debug, Clone)]
pub struct InterfaceTransfer {
    structure_to_fluid: RbfMap,
    consistent: Option<ConsistentLoads>,
    mode: TransferMode,
}

impl InterfaceTransfer {
    /// `fluid_weights` are the tributary areas of the fluid points (unit
    /// weights when the fluid side reports none).
    pub fn build(
        structural: &[Vector3<f64>],
        fluid: &[Vector3<f64>],
        fluid_weights: Option<&[f64]>,
        radius: Option<f64>,
        mode: TransferMode,
    ) -> Result<Self> {
        let structure_to_fluid = RbfMap::build(structural, fluid, radius)?;
        let consistent = match mode {
            TransferMode::Conservative => None,
            TransferMode::Consistent => {
                let weights = match fluid_weights {
                    Some(w) if w.len() == fluid.len() => w.to_vec(),
                    Some(w) => {
                        return Err(Error::SizeMismatch {
                            what: "fluid tributary areas",
                            expected: fluid.len(),
                            actual: w.len(),
                        })
                    }
                    None => vec![1.0; fluid.len()],
                };
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::InvalidInput("fluid tributary areas must be positive".into()));
                }
                let fluid_to_structure = RbfMap::build(fluid, structural, None)?;
                let distributed = structure_to_fluid
                    .apply_transpose(&weights.iter().map(|w| Vector3::new(*w, 0.0, 0.0)).collect::<Vec<_>>())?;
                Some(ConsistentLoads {
                    fluid_to_structure,
                    fluid_weights: weights,
                    structural_weights: distributed.iter().map(|v| v.x).collect(),
                })
            }
        };
        Ok(InterfaceTransfer {
            structure_to_fluid,
            consistent,
            mode,
        })
    }

    pub fn mode(&self) -> TransferMode {
        self.mode
    }

    pub fn displacement_map(&self) -> &RbfMap {
        &self.structure_to_fluid
    }

    /// Structural nodal vectors (displacement, velocity, acceleration) to
    /// fluid points.
    pub fn kinematics_to_fluid(&self, values: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
        self.structure_to_fluid.apply(values)
    }

    /// Fluid point loads to structural nodal loads.
    pub fn loads_to_structure(&self, forces: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
        match self.mode {
            TransferMode::Conservative => self.structure_to_fluid.apply_transpose(forces),
            TransferMode::Consistent => {
                let c = self
                    .consistent
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("consistent transfer requires the fluid-to-structure map".into()))?;
                if forces.len() != c.fluid_weights.len() {
                    return Err(Error::SizeMismatch {
                        what: "fluid loads",
                        expected: c.fluid_weights.len(),
                        actual: forces.len(),
                    });
                }
                let density: Vec<_> = forces.iter().zip(&c.fluid_weights).map(|(f, a)| f / *a).collect();
                let at_nodes = c.fluid_to_structure.apply(&density)?;
                Ok(at_nodes.iter().zip(&c.structural_weights).map(|(d, w)| d * *w).collect())
            }
        }
    }
}
