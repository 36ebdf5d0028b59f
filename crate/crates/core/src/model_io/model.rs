use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};

/// Stacked degrees of freedom per structural node: t1, t2, t3, r1, r2, r3.
pub const DOFS_PER_NODE: usize = 6;

const SYMMETRY_TOL: f64 = 1e-8;
const DIAGONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: i64,
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DampingSpec {
    /// Fraction of critical damping per generalized coordinate.
    Ratios(Vec<f64>),
    /// Full generalized damping matrix, used verbatim.
    Matrix(DMatrix<f64>),
}

/// Modal description of a structure: node cloud, mode-shape matrix and
/// generalized mass, stiffness and damping.
///
/// Rows of `modes` are stacked per node in declaration order as
/// `(t1, t2, t3, r1, r2, r3)`; columns are generalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralModel {
    pub nodes: Vec<Node>,
    pub modes: DMatrix<f64>,
    pub frequencies: Vec<f64>,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub damping: DampingSpec,
    pub diagonal: bool,
}

impl StructuralModel {
    /// Decoupled unit-mass model: `M = I`, `K = diag(ω²)`.
    pub fn diagonal(
        nodes: Vec<Node>,
        modes: DMatrix<f64>,
        frequencies: Vec<f64>,
        damping_ratios: Vec<f64>,
    ) -> Result<Self> {
        let n = frequencies.len();
        let stiffness = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            frequencies.iter().map(|w| w * w),
        ));
        let model = StructuralModel {
            nodes,
            modes,
            frequencies,
            mass: DMatrix::identity(n, n),
            stiffness,
            damping: DampingSpec::Ratios(damping_ratios),
            diagonal: true,
        };
        model.validate()?;
        Ok(model)
    }

    /// Coupled model with explicit generalized matrices.
    pub fn general(
        nodes: Vec<Node>,
        modes: DMatrix<f64>,
        mass: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        damping: DampingSpec,
    ) -> Result<Self> {
        let n = modes.ncols();
        let frequencies = (0..n)
            .map(|i| (stiffness[(i, i)] / mass[(i, i)]).max(0.0).sqrt())
            .collect();
        let model = StructuralModel {
            nodes,
            modes,
            frequencies,
            mass,
            stiffness,
            damping,
            diagonal: false,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn n_modes(&self) -> usize {
        self.modes.ncols()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, id: i64) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    /// Rows of `modes` holding the translational components only
    /// (`3·nodes × n`).
    pub fn translation_modes(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        DMatrix::from_fn(3 * self.n_nodes(), n, |r, c| {
            let node = r / 3;
            self.modes[(node * DOFS_PER_NODE + r % 3, c)]
        })
    }

    /// Checks every structural invariant. Called by all constructors and by
    /// the parser before a model is handed out.
    pub fn validate(&self) -> Result<()> {
        let n = self.modes.ncols();
        if n == 0 {
            return Err(Error::InvalidModel("model has no generalized coordinates".into()));
        }
        if self.nodes.is_empty() {
            return Err(Error::InvalidModel("model has no nodes".into()));
        }
        for (i, a) in self.nodes.iter().enumerate() {
            if self.nodes[..i].iter().any(|b| b.id == a.id) {
                return Err(Error::InvalidModel(format!("duplicate node id {}", a.id)));
            }
        }
        if self.modes.nrows() != DOFS_PER_NODE * self.nodes.len() {
            return Err(Error::SizeMismatch {
                what: "mode matrix rows",
                expected: DOFS_PER_NODE * self.nodes.len(),
                actual: self.modes.nrows(),
            });
        }
        if self.frequencies.len() != n {
            return Err(Error::SizeMismatch {
                what: "modal frequencies",
                expected: n,
                actual: self.frequencies.len(),
            });
        }
        for (name, m) in [("mass", &self.mass), ("stiffness", &self.stiffness)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::SizeMismatch {
                    what: if name == "mass" { "generalized mass" } else { "generalized stiffness" },
                    expected: n,
                    actual: m.nrows(),
                });
            }
            check_symmetric(name, m)?;
        }
        if self.modes.iter().chain(self.mass.iter()).chain(self.stiffness.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("structural model".into()));
        }
        if self.mass.clone().cholesky().is_none() {
            return Err(Error::InvalidModel("generalized mass is not positive definite".into()));
        }
        let k_eig = self.stiffness.clone().symmetric_eigenvalues();
        let k_scale = self.stiffness.amax().max(f64::MIN_POSITIVE);
        if k_eig.iter().any(|&l| l < -SYMMETRY_TOL * k_scale) {
            return Err(Error::InvalidModel(
                "generalized stiffness is not positive semidefinite".into(),
            ));
        }
        match &self.damping {
            DampingSpec::Ratios(r) => {
                if r.len() != n {
                    return Err(Error::SizeMismatch {
                        what: "damping ratios",
                        expected: n,
                        actual: r.len(),
                    });
                }
                if r.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidModel("damping ratios must be finite and non-negative".into()));
                }
            }
            DampingSpec::Matrix(c) => {
                if c.nrows() != n || c.ncols() != n {
                    return Err(Error::SizeMismatch {
                        what: "generalized damping",
                        expected: n,
                        actual: c.nrows(),
                    });
                }
                check_symmetric("damping", c)?;
            }
        }
        if self.diagonal {
            let eye = DMatrix::<f64>::identity(n, n);
            if (&self.mass - eye).amax() > DIAGONAL_TOL {
                return Err(Error::InvalidModel("diagonal model must have identity mass".into()));
            }
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { self.frequencies[i].powi(2) } else { 0.0 };
                    let tol = DIAGONAL_TOL * expect.abs().max(1.0);
                    if (self.stiffness[(i, j)] - expect).abs() > tol {
                        return Err(Error::InvalidModel(
                            "diagonal model stiffness must equal diag(ω²)".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::InvalidModel(format!("generalized {name} matrix is not symmetric")));
    }
    Ok(())
}
