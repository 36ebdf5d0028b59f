//! `KEY = value` coupling configuration.

use std::f64::consts::PI;
use std::path::PathBuf;

use nalgebra::Vector3;

use super::bdf::parse_real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationMode {
    SteadyImposed,
    SteadyCoupled,
    UnsteadyImposed,
    UnsteadyCoupled,
}

impl SimulationMode {
    pub fn is_unsteady(self) -> bool {
        matches!(self, SimulationMode::UnsteadyImposed | SimulationMode::UnsteadyCoupled)
    }

    pub fn is_imposed(self) -> bool {
        matches!(self, SimulationMode::SteadyImposed | SimulationMode::UnsteadyImposed)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            SimulationMode::SteadyImposed => "STEADY_IMPOSED",
            SimulationMode::SteadyCoupled => "STEADY_COUPLED",
            SimulationMode::UnsteadyImposed => "UNSTEADY_IMPOSED",
            SimulationMode::UnsteadyCoupled => "UNSTEADY_COUPLED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    None,
    Linear,
}

impl Predictor {
    pub fn order(self) -> usize {
        match self {
            Predictor::None => 0,
            Predictor::Linear => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferMode {
    Consistent,
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeroModelKind {
    QuasiSteady,
    Unsteady,
    SyntheticPressure,
}

/// Two-lag exponential approximation of the Wagner function,
/// `φ(s) = 1 − A₁e^{−b₁s} − A₂e^{−b₂s}` with `s` in semichords travelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WagnerCoefficients {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl Default for WagnerCoefficients {
    fn default() -> Self {
        WagnerCoefficients {
            a1: 0.165,
            b1: 0.0455,
            a2: 0.335,
            b2: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AirfoilSettings {
    pub rho: f64,
    pub u_inf: f64,
    /// Geometric angle of attack (rad).
    pub alpha: f64,
    pub chord: f64,
    /// Rotation-axis position measured from the leading edge, positive aft (m).
    pub x_f: f64,
    pub span: f64,
    pub n_contour: usize,
    pub thickness: f64,
    pub wagner: WagnerCoefficients,
}

impl Default for AirfoilSettings {
    fn default() -> Self {
        AirfoilSettings {
            rho: 1.225,
            u_inf: 1.0,
            alpha: 0.0,
            chord: 1.0,
            x_f: 0.25,
            span: 1.0,
            n_contour: 200,
            thickness: 0.12,
            wagner: WagnerCoefficients::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSpec {
    /// Axis-aligned box `[min, max]` with `n × n` cells per face.
    Box {
        min: Vector3<f64>,
        max: Vector3<f64>,
        cells: usize,
    },
    /// CSV with `id,x,y,z,nx,ny,nz,area` rows.
    File(PathBuf),
}

/// `p(x, t, u) = (base + gradient·x)(1 + ramp·t) + stiffness·(u·n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureSettings {
    pub base: f64,
    pub gradient: Vector3<f64>,
    pub stiffness: f64,
    pub ramp: f64,
    pub surface: SurfaceSpec,
}

impl Default for PressureSettings {
    fn default() -> Self {
        PressureSettings {
            base: 0.0,
            gradient: Vector3::zeros(),
            stiffness: 0.0,
            ramp: 0.0,
            surface: SurfaceSpec::Box {
                min: Vector3::new(-0.5, -0.5, -0.5),
                max: Vector3::new(0.5, 0.5, 0.5),
                cells: 8,
            },
        }
    }
}

/// Prescribed time signal of one generalized coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionSignal {
    Constant(f64),
    /// `bias + amplitude·sin(2π f t + phase)`.
    Sine {
        amplitude: f64,
        frequency: f64,
        bias: f64,
        phase: f64,
    },
    /// `hold·(1 − cos(π t / duration))/2` up to `duration`, then `hold`.
    Ramp { hold: f64, duration: f64 },
    /// Piecewise-linear samples `(t, value)`, strictly increasing in `t`.
    Table(Vec<(f64, f64)>),
}

impl MotionSignal {
    /// Value, first and second time derivative at `t`.
    pub fn evaluate(&self, t: f64) -> Result<[f64; 3]> {
        Ok(match *self {
            MotionSignal::Constant(v) => [v, 0.0, 0.0],
            MotionSignal::Sine {
                amplitude,
                frequency,
                bias,
                phase,
            } => {
                let w = 2.0 * PI * frequency;
                let arg = w * t + phase;
                [
                    bias + amplitude * arg.sin(),
                    amplitude * w * arg.cos(),
                    -amplitude * w * w * arg.sin(),
                ]
            }
            MotionSignal::Ramp { hold, duration } => {
                if t >= duration {
                    [hold, 0.0, 0.0]
                } else if t <= 0.0 {
                    [0.0, 0.0, 0.0]
                } else {
                    let w = PI / duration;
                    [
                        0.5 * hold * (1.0 - (w * t).cos()),
                        0.5 * hold * w * (w * t).sin(),
                        0.5 * hold * w * w * (w * t).cos(),
                    ]
                }
            }
            MotionSignal::Table(ref samples) => {
                let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
                if t < first - 1e-12 || t > last + 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "tabulated signal undefined at t = {t} (table covers [{first}, {last}])"
                    )));
                }
                let k = samples.partition_point(|s| s.0 <= t).clamp(1, samples.len() - 1);
                let (t0, v0) = samples[k - 1];
                let (t1, v1) = samples[k];
                let slope = (v1 - v0) / (t1 - t0);
                [v0 + slope * (t - t0), slope, 0.0]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    pub mode: SimulationMode,
    pub dt: f64,
    pub n_steps: usize,
    pub fsi_tolerance: f64,
    pub max_fsi_iters: usize,
    pub aitken_omega0: f64,
    pub aitken_omega_max: f64,
    pub predictor: Predictor,
    pub rbf_support_radius: Option<f64>,
    pub transfer_mode: TransferMode,
    /// Uniform modal damping ratio replacing the model's damping.
    pub damping_override: Option<f64>,
    /// Spectral radius at infinity of the structural integrator.
    pub rho_inf: f64,
    pub pseudo_max_steps: usize,
    pub aero_model: AeroModelKind,
    pub airfoil: AirfoilSettings,
    pub pressure: PressureSettings,
    /// Prescribed signals keyed by 0-based generalized coordinate.
    pub imposed: Vec<(usize, MotionSignal)>,
    pub initial_q: Vec<(usize, f64)>,
    pub initial_qd: Vec<(usize, f64)>,
    /// Fraction of samples discarded as transient by the signal analysis.
    pub transient_cut: f64,
    pub warnings: Vec<String>,
}

impl CouplingConfig {
    pub fn new(mode: SimulationMode) -> Self {
        CouplingConfig {
            mode,
            dt: 0.0,
            n_steps: 1,
            fsi_tolerance: 1e-6,
            max_fsi_iters: 50,
            aitken_omega0: 0.5,
            aitken_omega_max: 1.0,
            predictor: Predictor::Linear,
            rbf_support_radius: None,
            transfer_mode: TransferMode::Consistent,
            damping_override: None,
            rho_inf: 1.0,
            pseudo_max_steps: 10_000,
            aero_model: AeroModelKind::QuasiSteady,
            airfoil: AirfoilSettings::default(),
            pressure: PressureSettings::default(),
            imposed: Vec::new(),
            initial_q: Vec::new(),
            initial_qd: Vec::new(),
            transient_cut: 0.2,
            warnings: Vec::new(),
        }
    }

    /// Applies one `KEY = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_at(None, key, value)
    }

    fn set_at(&mut self, line: Option<usize>, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_uppercase();
        let value = value.trim();
        let bad = |what: &str| Error::config(line, format!("{key}: cannot parse '{value}' as {what}"));
        let real = || parse_real(value).ok_or_else(|| bad("a real number"));
        let count = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let reals = |n: usize| -> Result<Vec<f64>> {
            let v = value
                .split(',')
                .map(parse_real)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| bad("a list of real numbers"))?;
            if v.len() != n {
                return Err(Error::config(line, format!("{key}: expected {n} comma-separated values, found {}", v.len())));
            }
            Ok(v)
        };
        let upper = value.to_ascii_uppercase();

        match key.as_str() {
            "MODE" => {
                self.mode = match upper.as_str() {
                    "STEADY_IMPOSED" => SimulationMode::SteadyImposed,
                    "STEADY_COUPLED" => SimulationMode::SteadyCoupled,
                    "UNSTEADY_IMPOSED" => SimulationMode::UnsteadyImposed,
                    "UNSTEADY_COUPLED" => SimulationMode::UnsteadyCoupled,
                    _ => return Err(bad("a simulation mode")),
                }
            }
            "DT" => self.dt = real()?,
            "N_STEPS" => self.n_steps = count()?,
            "FSI_TOLERANCE" => self.fsi_tolerance = real()?,
            "MAX_FSI_ITERS" => self.max_fsi_iters = count()?,
            "AITKEN_OMEGA0" => self.aitken_omega0 = real()?,
            "AITKEN_OMEGA_MAX" => self.aitken_omega_max = real()?,
            "PREDICTOR" => {
                self.predictor = match upper.as_str() {
                    "NONE" | "0" => Predictor::None,
                    "LINEAR" | "1" => Predictor::Linear,
                    _ => return Err(bad("NONE or LINEAR")),
                }
            }
            "RBF_SUPPORT_RADIUS" => self.rbf_support_radius = Some(real()?),
            "TRANSFER_MODE" => {
                self.transfer_mode = match upper.as_str() {
                    "CONSISTENT" => TransferMode::Consistent,
                    "CONSERVATIVE" => TransferMode::Conservative,
                    _ => return Err(bad("CONSISTENT or CONSERVATIVE")),
                }
            }
            "STRUCTURAL_DAMPING" => self.damping_override = Some(real()?),
            "RHO_INF" => self.rho_inf = real()?,
            "PSEUDO_MAX_STEPS" => self.pseudo_max_steps = count()?,
            "TRANSIENT_CUT" => self.transient_cut = real()?,
            "AERO_MODEL" => {
                self.aero_model = match upper.as_str() {
                    "QUASI_STEADY" => AeroModelKind::QuasiSteady,
                    "UNSTEADY" => AeroModelKind::Unsteady,
                    "SYNTHETIC_PRESSURE" => AeroModelKind::SyntheticPressure,
                    _ => return Err(bad("QUASI_STEADY, UNSTEADY or SYNTHETIC_PRESSURE")),
                }
            }
            "RHO" => self.airfoil.rho = real()?,
            "UINF" => self.airfoil.u_inf = real()?,
            "AOA_DEG" => self.airfoil.alpha = real()?.to_radians(),
            "CHORD" => self.airfoil.chord = real()?,
            "X_F" => self.airfoil.x_f = real()?,
            "SPAN" => self.airfoil.span = real()?,
            "N_CONTOUR" => self.airfoil.n_contour = count()?,
            "THICKNESS" => self.airfoil.thickness = real()?,
            "WAGNER" => {
                let v = reals(4)?;
                self.airfoil.wagner = WagnerCoefficients {
                    a1: v[0],
                    b1: v[1],
                    a2: v[2],
                    b2: v[3],
                };
            }
            "PRESSURE_BASE" => self.pressure.base = real()?,
            "PRESSURE_GRADIENT" => self.pressure.gradient = Vector3::from_vec(reals(3)?),
            "PRESSURE_STIFFNESS" => self.pressure.stiffness = real()?,
            "PRESSURE_RAMP" => self.pressure.ramp = real()?,
            "SURFACE_BOX" => {
                let v = reals(7)?;
                if v[6] < 1.0 || v[6].fract() != 0.0 {
                    return Err(bad("a box with a positive integer cell count"));
                }
                self.pressure.surface = SurfaceSpec::Box {
                    min: Vector3::new(v[0], v[1], v[2]),
                    max: Vector3::new(v[3], v[4], v[5]),
                    cells: v[6] as usize,
                };
            }
            "SURFACE_FILE" => self.pressure.surface = SurfaceSpec::File(PathBuf::from(value)),
            _ => {
                if let Some(index) = indexed_key(&key, "IMPOSED_") {
                    let signal = parse_signal(value).ok_or_else(|| bad("a motion signal"))?;
                    self.imposed.retain(|(i, _)| *i != index);
                    self.imposed.push((index, signal));
                    self.imposed.sort_by_key(|(i, _)| *i);
                } else if let Some(index) = indexed_key(&key, "INITIAL_QD_") {
                    let v = real()?;
                    self.initial_qd.retain(|(i, _)| *i != index);
                    self.initial_qd.push((index, v));
                } else if let Some(index) = indexed_key(&key, "INITIAL_Q_") {
                    let v = real()?;
                    self.initial_q.retain(|(i, _)| *i != index);
                    self.initial_q.push((index, v));
                } else {
                    return Err(Error::config(line, format!("unknown key '{key}'")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(None, m));
        if self.mode.is_unsteady() {
            if !(self.dt > 0.0) {
                return fail(format!("DT must be positive for {} (got {})", self.mode.keyword(), self.dt));
            }
            if self.n_steps == 0 {
                return fail("N_STEPS must be at least 1".into());
            }
        }
        if !(self.fsi_tolerance > 0.0) {
            return fail(format!("FSI_TOLERANCE must be positive (got {})", self.fsi_tolerance));
        }
        if self.max_fsi_iters == 0 {
            return fail("MAX_FSI_ITERS must be at least 1".into());
        }
        if !(self.aitken_omega0 > 0.0 && self.aitken_omega0 <= self.aitken_omega_max && self.aitken_omega_max <= 1.0) {
            return fail(format!(
                "Aitken factors must satisfy 0 < AITKEN_OMEGA0 <= AITKEN_OMEGA_MAX <= 1 (got {}, {})",
                self.aitken_omega0, self.aitken_omega_max
            ));
        }
        if !(0.0..=1.0).contains(&self.rho_inf) {
            return fail(format!("RHO_INF must lie in [0, 1] (got {})", self.rho_inf));
        }
        if let Some(r) = self.rbf_support_radius {
            if !(r > 0.0) {
                return fail(format!("RBF_SUPPORT_RADIUS must be positive (got {r})"));
            }
        }
        if let Some(xi) = self.damping_override {
            if !(xi >= 0.0) {
                return fail(format!("STRUCTURAL_DAMPING must be non-negative (got {xi})"));
            }
        }
        if !(0.0..1.0).contains(&self.transient_cut) {
            return fail(format!("TRANSIENT_CUT must lie in [0, 1) (got {})", self.transient_cut));
        }
        if self.mode.is_imposed() && self.imposed.is_empty() {
            return fail(format!("{} requires at least one IMPOSED_<k> signal", self.mode.keyword()));
        }
        for (_, s) in &self.imposed {
            if let MotionSignal::Table(t) = s {
                if t.len() < 2 || t.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return fail("tabulated signal needs at least two strictly increasing times".into());
                }
            }
            if let MotionSignal::Ramp { duration, .. } = s {
                if !(*duration > 0.0) {
                    return fail("ramp duration must be positive".into());
                }
            }
        }
        if matches!(self.aero_model, AeroModelKind::QuasiSteady | AeroModelKind::Unsteady) {
            let a = &self.airfoil;
            if !(a.u_inf > 0.0) {
                return fail(format!("UINF must be positive (got {})", a.u_inf));
            }
            if !(a.rho >= 0.0) {
                return fail(format!("RHO must be non-negative (got {})", a.rho));
            }
            if !(a.chord > 0.0 && a.span > 0.0) {
                return fail("CHORD and SPAN must be positive".into());
            }
            if a.n_contour < 8 {
                return fail("N_CONTOUR must be at least 8".into());
            }
            if !(a.thickness > 0.0) {
                return fail("THICKNESS must be positive".into());
            }
            let w = &a.wagner;
            if !(w.b1 > 0.0 && w.b2 > 0.0 && w.a1 + w.a2 < 1.0) {
                return fail("WAGNER coefficients need b1, b2 > 0 and A1 + A2 < 1".into());
            }
        }
        Ok(())
    }

    /// Imposed value, rate and acceleration of every generalized coordinate.
    pub fn imposed_motion(&self, n: usize, t: f64) -> Result<[Vec<f64>; 3]> {
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (i, signal) in &self.imposed {
            if *i >= n {
                return Err(Error::config(None, format!("IMPOSED_{} exceeds the {n} model modes", i + 1)));
            }
            let v = signal.evaluate(t)?;
            for k in 0..3 {
                out[k][*i] = v[k];
            }
        }
        Ok(out)
    }
}

fn indexed_key(key: &str, prefix: &str) -> Option<usize> {
    let rest = key.strip_prefix(prefix)?;
    let k: usize = rest.parse().ok()?;
    (k >= 1).then(|| k - 1)
}

fn parse_signal(value: &str) -> Option<MotionSignal> {
    let mut parts = value.split(',').map(str::trim);
    let kind = parts.next()?.to_ascii_uppercase();
    let rest: Vec<&str> = parts.collect();
    let nums = || rest.iter().map(|s| parse_real(s)).collect::<Option<Vec<f64>>>();
    match kind.as_str() {
        "CONST" => match nums()?.as_slice() {
            [v] => Some(MotionSignal::Constant(*v)),
            _ => None,
        },
        "SINE" => match nums()?.as_slice() {
            [a, f, b] => Some(MotionSignal::Sine {
                amplitude: *a,
                frequency: *f,
                bias: *b,
                phase: 0.0,
            }),
            [a, f, b, p] => Some(MotionSignal::Sine {
                amplitude: *a,
                frequency: *f,
                bias: *b,
                phase: p.to_radians(),
            }),
            _ => None,
        },
        "RAMP" => match nums()?.as_slice() {
            [h, d] => Some(MotionSignal::Ramp { hold: *h, duration: *d }),
            _ => None,
        },
        "TABLE" => {
            let samples = rest
                .iter()
                .map(|pair| {
                    let (t, v) = pair.split_once(':')?;
                    Some((parse_real(t)?, parse_real(v)?))
                })
                .collect::<Option<Vec<_>>>()?;
            (!samples.is_empty()).then_some(MotionSignal::Table(samples))
        }
        _ => None,
    }
}

/// Parses a configuration file. Omitted keys take their defaults; `MODE` is
/// mandatory.
pub fn parse_config(text: &str) -> Result<CouplingConfig> {
    let mut config = CouplingConfig::new(SimulationMode::SteadyCoupled);
    let mut mode_seen = false;
    let mut dt_line = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::config(Some(line_no), format!("expected 'KEY = value', found '{content}'")));
        };
        let key_upper = key.trim().to_ascii_uppercase();
        if key_upper.is_empty() {
            return Err(Error::config(Some(line_no), "missing key before '='"));
        }
        config.set_at(Some(line_no), &key_upper, value)?;
        match key_upper.as_str() {
            "MODE" => mode_seen = true,
            "DT" => dt_line = Some(line_no),
            _ => {}
        }
    }
    if !mode_seen {
        return Err(Error::config(None, "MODE missing"));
    }
    if let (Some(line), false) = (dt_line, config.mode.is_unsteady()) {
        let msg = format!("line {line}: DT is ignored for {}", config.mode.keyword());
        log::warn!("{msg}");
        config.warnings.push(msg);
    }
    config.validate()?;
    Ok(config)
}
