//! Theodorsen lift-deficiency function and harmonic thin-airfoil loads.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model_io::WagnerCoefficients;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 8.0;

fn series_j(x: f64) -> (f64, f64) {
    let y = 0.5 * x;
    let y2 = y * y;
    let (mut j0, mut j1) = (0.0, 0.0);
    let mut t0 = 1.0; // (-1)^k y^{2k} / (k!)^2
    let mut t1 = y; // (-1)^k y^{2k+1} / (k! (k+1)!)
    for k in 0..200 {
        j0 += t0;
        j1 += t1;
        let kf = k as f64;
        t0 *= -y2 / ((kf + 1.0) * (kf + 1.0));
        t1 *= -y2 / ((kf + 1.0) * (kf + 2.0));
        if t0.abs() < 1e-18 * j0.abs().max(1e-300) && t1.abs() < 1e-18 * j1.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    (j0, j1)
}

fn series_y(x: f64, j0: f64, j1: f64) -> (f64, f64) {
    let y = 0.5 * x;
    let y2 = y * y;
    let log_term = y.ln() + EULER_GAMMA;

    let mut s0 = 0.0;
    let mut t0 = 1.0;
    let mut harmonic = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        t0 *= -y2 / (kf * kf);
        harmonic += 1.0 / kf;
        let term = -t0 * harmonic;
        s0 += term;
        if term.abs() < 1e-18 * s0.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    let y0 = 2.0 / PI * (log_term * j0 + s0);

    // psi(k+1) + psi(k+2) = -2γ + H_k + H_{k+1}
    let mut s1 = 0.0;
    let mut t1 = y;
    let mut hk = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        let hk1 = hk + 1.0 / (kf + 1.0);
        let term = t1 * (-2.0 * EULER_GAMMA + hk + hk1);
        s1 += term;
        t1 *= -y2 / ((kf + 1.0) * (kf + 2.0));
        hk = hk1;
        if term.abs() < 1e-18 * s1.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    let y1 = -2.0 / (PI * x) + 2.0 / PI * y.ln() * j1 - s1 / PI;
    (y0, y1)
}

fn asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (0.0, 0.0);
    let mut term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if term.abs() > last {
            break;
        }
        last = term.abs();
        if k % 2 == 0 {
            p += if (k / 2) % 2 == 0 { term } else { -term };
        } else {
            q += if (k / 2) % 2 == 0 { term } else { -term };
        }
        let odd = (2 * k + 1) as f64;
        term *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * x);
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    let amp = (2.0 / (PI * x)).sqrt();
    (amp * (p * chi.cos() - q * chi.sin()), amp * (p * chi.sin() + q * chi.cos()))
}

/// `(J₀, J₁, Y₀, Y₁)` at `x > 0`.
pub fn bessel_01(x: f64) -> (f64, f64, f64, f64) {
    if x <= SERIES_LIMIT {
        let (j0, j1) = series_j(x);
        let (y0, y1) = series_y(x, j0, j1);
        (j0, j1, y0, y1)
    } else {
        let (j0, y0) = asymptotic(0.0, x);
        let (j1, y1) = asymptotic(1.0, x);
        (j0, j1, y0, y1)
    }
}

/// `C(k) = H₁⁽²⁾(k) / (H₁⁽²⁾(k) + i H₀⁽²⁾(k))`, with `C(0) = 1`.
pub fn theodorsen_c(k: f64) -> Result<Complex64> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidInput(format!("reduced frequency must be finite and non-negative (got {k})")));
    }
    if k == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let (j0, j1, y0, y1) = bessel_01(k);
    let h0 = Complex64::new(j0, -y0);
    let h1 = Complex64::new(j1, -y1);
    Ok(h1 / (h1 + Complex64::i() * h0))
}

/// Two-lag rational approximation `1 − Σ Aᵢ ik / (ik + bᵢ)`.
pub fn rational_c(k: f64, w: &WagnerCoefficients) -> Complex64 {
    let ik = Complex64::new(0.0, k);
    Complex64::new(1.0, 0.0) - w.a1 * ik / (ik + w.b1) - w.a2 * ik / (ik + w.b2)
}

/// Rigid thin airfoil in incompressible flow: semichord `b`, rotation axis
/// `x_f` aft of the leading edge, `z` up, pitch nose-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionAero {
    pub rho: f64,
    pub u: f64,
    pub b: f64,
    pub x_f: f64,
    pub span: f64,
    /// Geometric angle of attack (rad).
    pub alpha: f64,
}

impl SectionAero {
    /// Axis position from mid-chord in semichords.
    pub fn a(&self) -> f64 {
        (self.x_f - self.b) / self.b
    }

    pub fn dynamic_pressure(&self) -> f64 {
        0.5 * self.rho * self.u * self.u
    }

    pub fn area(&self) -> f64 {
        2.0 * self.b * self.span
    }

    /// Three-quarter-chord downwash angle.
    pub fn downwash(&self, theta: f64, theta_dot: f64, h_dot: f64) -> f64 {
        self.alpha + theta - h_dot / self.u + self.b * (0.5 - self.a()) * theta_dot / self.u
    }

    /// Non-circulatory lift and moment about `x_f`.
    pub fn added_mass_loads(&self, h_dot2: f64, theta_dot: f64, theta_dot2: f64) -> (f64, f64) {
        let a = self.a();
        let b = self.b;
        let f = PI * self.rho * b * b * self.span;
        let lift = f * (-h_dot2 + self.u * theta_dot - b * a * theta_dot2);
        let moment = f * (-b * a * h_dot2 - self.u * b * (0.5 - a) * theta_dot - b * b * (0.125 + a * a) * theta_dot2);
        (lift, moment)
    }

    /// Circulatory lift per unit effective angle, `2πρU²b·span`.
    pub fn lift_slope_force(&self) -> f64 {
        2.0 * PI * self.rho * self.u * self.u * self.b * self.span
    }

    /// Arm of the circulatory lift about `x_f` (positive nose-up).
    pub fn circulatory_arm(&self) -> f64 {
        self.b * (self.a() + 0.5)
    }

    /// Complex lift and moment amplitudes for harmonic motion at circular
    /// frequency `omega`, given pitch and plunge amplitudes and the value of
    /// the lift-deficiency function at the corresponding reduced frequency.
    /// The geometric angle of attack does not enter.
    pub fn harmonic_loads(&self, omega: f64, pitch: Complex64, plunge: Complex64, c: Complex64) -> (Complex64, Complex64) {
        let iw = Complex64::new(0.0, omega);
        let (th_d, th_dd) = (iw * pitch, iw * iw * pitch);
        let (h_d, h_dd) = (iw * plunge, iw * iw * plunge);
        let a = self.a();
        let b = self.b;
        let f = PI * self.rho * b * b * self.span;
        let l_nc = f * (-h_dd + self.u * th_d - b * a * th_dd);
        let m_nc = f * (-b * a * h_dd - self.u * b * (0.5 - a) * th_d - b * b * (0.125 + a * a) * th_dd);
        let w = pitch - h_d / self.u + b * (0.5 - a) * th_d / self.u;
        let l_c = self.lift_slope_force() * c * w;
        (l_nc + l_c, m_nc + self.circulatory_arm() * l_c)
    }

    pub fn reduced_frequency(&self, omega: f64) -> f64 {
        omega * self.b / self.u
    }
}

/// Lift-coefficient amplitude per unit pitch amplitude for harmonic pitch
/// about `x_f` (plus an optional plunge amplitude per unit pitch) at reduced
/// frequency `k`, using `c_fn` for the lift-deficiency function.
pub fn theodorsen_cl(
    section: &SectionAero,
    k: f64,
    plunge_per_pitch: Complex64,
    c_fn: impl Fn(f64) -> Result<Complex64>,
) -> Result<Complex64> {
    if !(section.u > 0.0) {
        return Err(Error::InvalidInput(format!("free-stream speed must be positive (got {})", section.u)));
    }
    let omega = k * section.u / section.b;
    let (lift, _) = section.harmonic_loads(omega, Complex64::new(1.0, 0.0), plunge_per_pitch, c_fn(k)?);
    Ok(lift / (section.dynamic_pressure() * section.area()))
}
