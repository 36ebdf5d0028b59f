use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use super::{solution_csv, AeroSolver, InterfaceMotion};
use crate::error::{Error, Result};
use crate::model_io::{parse_real, PressureSettings, SurfaceSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub id: i64,
    pub position: Vector3<f64>,
    /// Outward unit normal.
    pub normal: Vector3<f64>,
    pub area: f64,
}

/// Face-centre points of an axis-aligned box with `cells × cells` patches
/// per face.
pub fn box_surface(min: Vector3<f64>, max: Vector3<f64>, cells: usize) -> Result<Vec<SurfacePoint>> {
    let size = max - min;
    if cells == 0 || size.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidInput("box surface needs positive extents and at least one cell".into()));
    }
    let mut points = Vec::with_capacity(6 * cells * cells);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for (side, value) in [(-1.0, min[axis]), (1.0, max[axis])] {
            let mut normal = Vector3::zeros();
            normal[axis] = side;
            let area = size[u] * size[v] / (cells * cells) as f64;
            for i in 0..cells {
                for j in 0..cells {
                    let mut p = Vector3::zeros();
                    p[axis] = value;
                    p[u] = min[u] + size[u] * (i as f64 + 0.5) / cells as f64;
                    p[v] = min[v] + size[v] * (j as f64 + 0.5) / cells as f64;
                    points.push(SurfacePoint {
                        id: points.len() as i64 + 1,
                        position: p,
                        normal,
                        area,
                    });
                }
            }
        }
    }
    Ok(points)
}

/// Reads `id,x,y,z,nx,ny,nz,area` rows (header optional, `#` comments).
pub fn read_surface(path: &Path) -> Result<Vec<SurfacePoint>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_surface(&text)
}

fn parse_surface(text: &str) -> Result<Vec<SurfacePoint>> {
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() || body.starts_with("id") {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(Error::parse(
                line_no,
                1,
                format!("surface row needs id,x,y,z,nx,ny,nz,area (found {} fields)", fields.len()),
            ));
        }
        let id = fields[0]
            .parse::<i64>()
            .map_err(|_| Error::parse(line_no, 1, format!("bad point id '{}'", fields[0])))?;
        let mut v = [0.0; 7];
        for k in 0..7 {
            v[k] = parse_real(fields[k + 1])
                .ok_or_else(|| Error::parse(line_no, k + 2, format!("bad number '{}'", fields[k + 1])))?;
        }
        let normal = Vector3::new(v[3], v[4], v[5]);
        let len = normal.norm();
        if !(len > 0.0) {
            return Err(Error::parse(line_no, 5, "missing normal"));
        }
        if !(v[6] > 0.0) {
            return Err(Error::parse(line_no, 8, "missing or non-positive area"));
        }
        points.push(SurfacePoint {
            id,
            position: Vector3::new(v[0], v[1], v[2]),
            normal: normal / len,
            area: v[6],
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("surface file has no points".into()));
    }
    Ok(points)
}

/// `p(x, t, u) = (base + gradient·x)(1 + ramp·t) + stiffness·(u·n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw {
    pub base: f64,
    pub gradient: Vector3<f64>,
    pub stiffness: f64,
    pub ramp: f64,
}

impl PressureLaw {
    pub fn pressure(&self, x: &Vector3<f64>, t: f64, u: &Vector3<f64>, n: &Vector3<f64>) -> f64 {
        (self.base + self.gradient.dot(x)) * (1.0 + self.ramp * t) + self.stiffness * u.dot(n)
    }
}

/// Analytic pressure field on a closed surface; point forces `−p A n̂`.
#[derive(Debug, Clone)]
pub struct SyntheticPressureAero {
    ids: Vec<i64>,
    positions: Vec<Vector3<f64>>,
    normals: Vec<Vector3<f64>>,
    areas: Vec<f64>,
    law: PressureLaw,
    time: f64,
    committed_time: f64,
    displacement: Vec<Vector3<f64>>,
    committed_displacement: Vec<Vector3<f64>>,
    forces: Vec<Vector3<f64>>,
    committed_forces: Vec<Vector3<f64>>,
}

impl SyntheticPressureAero {
    pub fn new(points: Vec<SurfacePoint>, law: PressureLaw) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("synthetic surface has no points".into()));
        }
        if points.iter().any(|p| !(p.area > 0.0) || !((p.normal.norm() - 1.0).abs() < 1e-9)) {
            return Err(Error::InvalidInput("synthetic surface needs unit normals and positive areas".into()));
        }
        let n = points.len();
        let mut s = SyntheticPressureAero {
            ids: points.iter().map(|p| p.id).collect(),
            positions: points.iter().map(|p| p.position).collect(),
            normals: points.iter().map(|p| p.normal).collect(),
            areas: points.iter().map(|p| p.area).collect(),
            law,
            time: 0.0,
            committed_time: 0.0,
            displacement: vec![Vector3::zeros(); n],
            committed_displacement: vec![Vector3::zeros(); n],
            forces: vec![Vector3::zeros(); n],
            committed_forces: vec![Vector3::zeros(); n],
        };
        s.evaluate();
        s.checkpoint();
        Ok(s)
    }

    pub fn from_settings(settings: &PressureSettings) -> Result<Self> {
        let points = match &settings.surface {
            SurfaceSpec::Box { min, max, cells } => box_surface(*min, *max, *cells)?,
            SurfaceSpec::File(path) => read_surface(path)?,
        };
        SyntheticPressureAero::new(
            points,
            PressureLaw {
                base: settings.base,
                gradient: settings.gradient,
                stiffness: settings.stiffness,
                ramp: settings.ramp,
            },
        )
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn law(&self) -> &PressureLaw {
        &self.law
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    fn evaluate(&mut self) {
        self.forces = (0..self.positions.len())
            .map(|i| {
                let n = &self.normals[i];
                let p = self.law.pressure(&self.positions[i], self.time, &self.displacement[i], n);
                -p * self.areas[i] * n
            })
            .collect();
    }
}

impl AeroSolver for SyntheticPressureAero {
    fn name(&self) -> &'static str {
        "synthetic-pressure"
    }

    fn ids(&self) -> &[i64] {
        &self.ids
    }

    fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    fn areas(&self) -> Option<&[f64]> {
        Some(&self.areas)
    }

    fn initialize(&mut self, motion: &InterfaceMotion) -> Result<()> {
        self.apply_motion(motion)?;
        self.time = motion.time;
        self.evaluate();
        self.checkpoint();
        Ok(())
    }

    fn apply_motion(&mut self, motion: &InterfaceMotion) -> Result<()> {
        motion.check(self.positions.len())?;
        self.displacement = motion.displacement.clone();
        Ok(())
    }

    fn advance(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive (got {dt})")));
        }
        self.time = self.committed_time + dt;
        self.evaluate();
        Ok(())
    }

    fn solve_steady(&mut self) -> Result<()> {
        self.evaluate();
        Ok(())
    }

    fn forces(&self) -> &[Vector3<f64>] {
        &self.forces
    }

    fn checkpoint(&mut self) {
        self.committed_time = self.time;
        self.committed_displacement = self.displacement.clone();
        self.committed_forces = self.forces.clone();
    }

    fn restore(&mut self) {
        self.time = self.committed_time;
        self.displacement = self.committed_displacement.clone();
        self.forces = self.committed_forces.clone();
    }

    fn write_solution(&self) -> String {
        solution_csv(&self.ids, &self.positions, &self.displacement, &self.forces)
    }
}
