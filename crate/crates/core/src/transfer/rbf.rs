//! Radial-basis-function interpolation with a linear polynomial term.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};

/// Compactly supported C2 Wendland kernel, `(1 − ξ)⁴(4ξ + 1)` on `[0, 1]`.
pub fn cp_c2(xi: f64) -> f64 {
    if xi >= 1.0 {
        0.0
    } else {
        let a = 1.0 - xi;
        a * a * a * a * (4.0 * xi + 1.0)
    }
}

// Relative thresholds on singular values of the centred point cloud.
const FLATNESS_TOL: f64 = 1e-9;

/// Affine frame the polynomial term lives in.
#[derive(Debug, Clone, PartialEq)]
pub enum Dimension {
    /// All source and target points lie in one plane spanned by `axes`.
    Planar {
        origin: Vector3<f64>,
        axes: [Vector3<f64>; 2],
    },
    Spatial {
        origin: Vector3<f64>,
    },
}

impl Dimension {
    fn poly_len(&self) -> usize {
        match self {
            Dimension::Planar { .. } => 3,
            Dimension::Spatial { .. } => 4,
        }
    }

    fn poly_row(&self, x: &Vector3<f64>, scale: f64) -> Vec<f64> {
        match self {
            Dimension::Planar { origin, axes } => {
                let d = (x - origin) / scale;
                vec![1.0, axes[0].dot(&d), axes[1].dot(&d)]
            }
            Dimension::Spatial { origin } => {
                let d = (x - origin) / scale;
                vec![1.0, d.x, d.y, d.z]
            }
        }
    }
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().fold(Vector3::zeros(), |a, p| a + p) / points.len() as f64
}

/// Radius of the sphere centred at the centroid that encloses all points.
fn enclosing_radius(points: &[Vector3<f64>]) -> f64 {
    let c = centroid(points);
    points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
}

/// Default support radius: twice the diameter of the source cloud's
/// enclosing sphere.
pub fn default_support_radius(source: &[Vector3<f64>]) -> f64 {
    4.0 * enclosing_radius(source)
}

fn classify(source: &[Vector3<f64>], target: &[Vector3<f64>]) -> Result<Dimension> {
    let origin = centroid(source);
    let centred = DMatrix::from_fn(source.len(), 3, |r, c| source[r][c] - origin[c]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Eigen("SVD of source cloud failed".into()))?;
    // nalgebra does not sort singular values; order them explicitly.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = |k: usize| order.get(k).map_or(0.0, |&i| svd.singular_values[i]);
    let axis = |k: usize| -> Vector3<f64> {
        let i = order[k];
        Vector3::new(v_t[(i, 0)], v_t[(i, 1)], v_t[(i, 2)])
    };
    let largest = s(0);
    if largest == 0.0 || s(1) <= FLATNESS_TOL * largest {
        return Err(Error::Degenerate(
            "structural points are all collinear (or coincident); the linear polynomial term is undetermined".into(),
        ));
    }
    if s(2) > FLATNESS_TOL * largest {
        return Ok(Dimension::Spatial { origin });
    }
    let normal = axis(0).cross(&axis(1)).normalize();
    let extent = enclosing_radius(source).max(enclosing_radius(target));
    let off_plane = target.iter().map(|p| normal.dot(&(p - origin)).abs()).fold(0.0, f64::max);
    if off_plane > FLATNESS_TOL * extent.max(f64::MIN_POSITIVE) * 1e3 {
        return Err(Error::Degenerate(
            "structural points all lie in one plane but the target cloud is three-dimensional".into(),
        ));
    }
    Ok(Dimension::Planar {
        origin,
        axes: [axis(0), axis(1)],
    })
}

/// Interpolation operator from a source (structural) cloud to a target
/// (fluid) cloud.
///
fn kernel_matrix(points: &[Vector3<f64>], radius: f64) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), points.len(), |i, j| cp_c2((points[i] - points[j]).norm() / radius))
}

/// The saddle-point system `[[Φ, P], [Pᵀ, 0]]` is factored through a
/// Cholesky factorization of the kernel block followed by a Cholesky
/// factorization of the Schur complement `PᵀΦ⁻¹P`; the resulting dense
/// operator `H` maps source values to target values.
#[derive(Debug, Clone)]
pub struct RbfMap {
    source: Vec<Vector3<f64>>,
    target: Vec<Vector3<f64>>,
    radius: f64,
    dimension: Dimension,
    operator: DMatrix<f64>,
    condition: f64,
}

impl RbfMap {
    pub fn build(source: &[Vector3<f64>], target: &[Vector3<f64>], radius: Option<f64>) -> Result<Self> {
        let radius = radius.unwrap_or_else(|| default_support_radius(source));
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("support radius must be positive (got {radius})")));
        }
        if source.iter().chain(target).any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("interpolation point cloud".into()));
        }
        let dimension = classify(source, target)?;
        let np = dimension.poly_len();
        let ns = source.len();
        if ns < np {
            return Err(Error::Degenerate(format!("{ns} source points cannot support a {np}-term polynomial")));
        }

        let min_spacing = (0..ns)
            .flat_map(|i| (i + 1..ns).map(move |j| (i, j)))
            .map(|(i, j)| (source[i] - source[j]).norm())
            .fold(f64::INFINITY, f64::min);
        if min_spacing == 0.0 {
            return Err(Error::Singular("coincident source points".into()));
        }
        if radius < min_spacing {
            log::warn!(
                "support radius {radius:.3e} is below the minimum source spacing {min_spacing:.3e}: the interpolant is disconnected"
            );
        }

        let scale = enclosing_radius(source).max(f64::MIN_POSITIVE);
        let phi = kernel_matrix(source, radius);
        let p = DMatrix::from_fn(ns, np, |i, k| dimension.poly_row(&source[i], scale)[k]);
        let nt = target.len();
        let phi_t = DMatrix::from_fn(nt, ns, |i, j| cp_c2((target[i] - source[j]).norm() / radius));
        let p_t = DMatrix::from_fn(nt, np, |i, k| dimension.poly_row(&target[i], scale)[k]);

        let chol = phi
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("kernel matrix is not positive definite".into()))?;
        let diag = chol.l_dirty().diagonal();
        let pivot_ratio = diag.max() / diag.min();
        let condition = if ns <= 1000 {
            let ev = phi.symmetric_eigenvalues();
            ev.max() / ev.min()
        } else {
            pivot_ratio * pivot_ratio
        };
        if !(condition.is_finite()) || condition > 1e15 {
            return Err(Error::Singular(format!("kernel matrix condition estimate {condition:.3e}")));
        }
        log::debug!("RBF map {ns} -> {nt} points, radius {radius:.4e}, kernel condition ~{condition:.3e}");

        // W = Φ⁻¹P, S = PᵀW, B = S⁻¹Wᵀ (so that β = B f).
        let w = chol.solve(&p);
        let schur = p.transpose() * &w;
        let schur_chol = schur
            .cholesky()
            .ok_or_else(|| Error::Singular("polynomial block is rank deficient".into()))?;
        let b = schur_chol.solve(&w.transpose());
        // E = Φ_t Φ⁻¹ ; H = E − (E P − P_t) B.
        let e = chol.solve(&phi_t.transpose()).transpose();
        let operator = &e - (&e * &p - &p_t) * &b;

        Ok(RbfMap {
            source: source.to_vec(),
            target: target.to_vec(),
            radius,
            dimension,
            operator,
            condition,
        })
    }

    pub fn source(&self) -> &[Vector3<f64>] {
        &self.source
    }

    pub fn target(&self) -> &[Vector3<f64>] {
        &self.target
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dimension(&self) -> &Dimension {
        &self.dimension
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Dense `target × source` interpolation matrix.
    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator
    }

    /// Interpolates source values onto the target points.
    pub fn apply(&self, values: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
        if values.len() != self.source.len() {
            return Err(Error::SizeMismatch {
                what: "source values",
                expected: self.source.len(),
                actual: values.len(),
            });
        }
        Ok(self
            .operator
            .row_iter()
            .map(|row| row.iter().zip(values).fold(Vector3::zeros(), |acc, (h, v)| acc + v * *h))
            .collect())
    }

    /// Applies `Hᵀ`: distributes target-side loads onto the source points.
    pub fn apply_transpose(&self, values: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
        if values.len() != self.target.len() {
            return Err(Error::SizeMismatch {
                what: "target values",
                expected: self.target.len(),
                actual: values.len(),
            });
        }
        let mut out = vec![Vector3::zeros(); self.source.len()];
        for (row, v) in self.operator.row_iter().zip(values) {
            for (o, h) in out.iter_mut().zip(row.iter()) {
                *o += v * *h;
            }
        }
        Ok(out)
    }
}
