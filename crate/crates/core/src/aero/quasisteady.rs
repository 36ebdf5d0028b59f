use nalgebra::Vector3;

use super::{solution_csv, AeroSolver, AirfoilInterface, InterfaceMotion, SectionAero, SectionKinematics};
use crate::error::Result;
use crate::model_io::AirfoilSettings;

/// Quasi-steady thin airfoil: `L = q S 2π w` with the three-quarter-chord
/// downwash `w`, acting at the quarter chord.
#[derive(Debug, Clone)]
pub struct QuasiSteadyAero {
    iface: AirfoilInterface,
    section: SectionAero,
    kin: SectionKinematics,
    displacement: Vec<Vector3<f64>>,
    forces: Vec<Vector3<f64>>,
    loads: (f64, f64),
    committed: (SectionKinematics, Vec<Vector3<f64>>, Vec<Vector3<f64>>, (f64, f64)),
}

impl QuasiSteadyAero {
    pub fn new(settings: &AirfoilSettings) -> Result<Self> {
        let iface = AirfoilInterface::new(settings)?;
        let n = iface.positions.len();
        let mut s = QuasiSteadyAero {
            iface,
            section: SectionAero::from_settings(settings),
            kin: SectionKinematics::default(),
            displacement: vec![Vector3::zeros(); n],
            forces: vec![Vector3::zeros(); n],
            loads: (0.0, 0.0),
            committed: (SectionKinematics::default(), vec![Vector3::zeros(); n], vec![Vector3::zeros(); n], (0.0, 0.0)),
        };
        s.evaluate(false);
        s.checkpoint();
        Ok(s)
    }

    pub fn section(&self) -> &SectionAero {
        &self.section
    }

    fn evaluate(&mut self, steady: bool) {
        let k = self.kin;
        let (hd, td) = if steady { (0.0, 0.0) } else { (k.h[1], k.theta[1]) };
        let w = self.section.downwash(k.theta[0], td, hd);
        let lift = self.section.lift_slope_force() * w;
        let moment = self.section.circulatory_arm() * lift;
        self.loads = (lift, moment);
        self.forces = self.iface.distribute(lift, moment);
    }
}

impl AeroSolver for QuasiSteadyAero {
    fn name(&self) -> &'static str {
        "quasi-steady"
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
        self.apply_motion(motion)?;
        self.evaluate(false);
        self.checkpoint();
        Ok(())
    }

    fn apply_motion(&mut self, motion: &InterfaceMotion) -> Result<()> {
        self.kin = self.iface.kinematics(motion)?;
        self.displacement = motion.displacement.clone();
        Ok(())
    }

    fn advance(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(crate::error::Error::InvalidInput(format!("time step must be positive (got {dt})")));
        }
        self.evaluate(false);
        Ok(())
    }

    fn solve_steady(&mut self) -> Result<()> {
        self.evaluate(true);
        Ok(())
    }

    fn forces(&self) -> &[Vector3<f64>] {
        &self.forces
    }

    fn checkpoint(&mut self) {
        self.committed = (self.kin, self.displacement.clone(), self.forces.clone(), self.loads);
    }

    fn restore(&mut self) {
        self.kin = self.committed.0;
        self.displacement = self.committed.1.clone();
        self.forces = self.committed.2.clone();
        self.loads = self.committed.3;
    }

    fn write_solution(&self) -> String {
        solution_csv(&self.iface.ids, &self.iface.positions, &self.displacement, &self.forces)
    }

    fn section_loads(&self) -> Option<(f64, f64)> {
        Some(self.loads)
    }
}
