//! Signal analysis of simulation histories: single-frequency transfer
//! functions, matrix-pencil modal identification and flutter-boundary
//! interpolation.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Ratio of output to input Fourier coefficients at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferFunction {
    pub magnitude: f64,
    /// Degrees in (−180, 180].
    pub phase_deg: f64,
    /// Set when the input coefficient is below 1e-3 of the input RMS.
    pub ill_conditioned: bool,
    /// Whole periods used.
    pub periods: usize,
}

fn sample_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Analysis("need at least two samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Analysis("sample times must increase".into()));
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::Analysis(format!(
                "history is not uniformly sampled (step {} is {} against a mean of {dt})",
                k + 1,
                w[1] - w[0]
            )));
        }
    }
    Ok(dt)
}

fn check_lengths(times: &[f64], values: &[f64], what: &'static str) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::SizeMismatch {
            what,
            expected: times.len(),
            actual: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.into()));
    }
    Ok(())
}

/// Wraps an angle in degrees into (−180, 180].
pub fn wrap_degrees(phase: f64) -> f64 {
    let mut p = phase % 360.0;
    if p <= -180.0 {
        p += 360.0;
    } else if p > 180.0 {
        p -= 360.0;
    }
    p
}

/// Single-frequency transfer function from `input` to `output` at
/// `frequency` Hz. The first `transient_cut` fraction of samples is
/// discarded and the largest whole number of periods at the end of the
/// record is analysed.
pub fn transfer_function(
    times: &[f64],
    input: &[f64],
    output: &[f64],
    frequency: f64,
    transient_cut: f64,
) -> Result<TransferFunction> {
    check_lengths(times, input, "transfer-function input")?;
    check_lengths(times, output, "transfer-function output")?;
    if !(0.0..1.0).contains(&transient_cut) {
        return Err(Error::Analysis(format!("transient cut must lie in [0, 1) (got {transient_cut})")));
    }
    let dt = sample_step(times)?;
    if !(frequency > 0.0) {
        return Err(Error::Analysis(format!("excitation frequency must be positive (got {frequency})")));
    }
    let nyquist = 0.5 / dt;
    if frequency >= nyquist {
        return Err(Error::Analysis(format!(
            "frequency {frequency} Hz is at or above the Nyquist limit {nyquist} Hz"
        )));
    }
    let start = (transient_cut * times.len() as f64).ceil() as usize;
    let available = times.len() - start;
    let per_period = 1.0 / (frequency * dt);
    let periods = (available as f64 / per_period + 1e-9).floor() as usize;
    if periods < 5 {
        return Err(Error::Analysis(format!(
            "only {periods} whole periods after the transient cut; at least 5 are needed"
        )));
    }
    let window = (periods as f64 * per_period).round() as usize;
    let first = times.len() - window;

    let w = 2.0 * PI * frequency;
    let coefficient = |x: &[f64]| -> Complex64 {
        (first..times.len())
            .map(|k| Complex64::from_polar(x[k], -w * (times[k] - times[first])))
            .sum::<Complex64>()
            * (2.0 / window as f64)
    };
    let cx = coefficient(input);
    let cy = coefficient(output);
    let rms = ((first..times.len()).map(|k| input[k] * input[k]).sum::<f64>() / window as f64).sqrt();
    let ill_conditioned = cx.norm() < 1e-3 * rms || cx.norm() == 0.0;
    let ratio = cy / cx;
    Ok(TransferFunction {
        magnitude: ratio.norm(),
        phase_deg: wrap_degrees(ratio.arg().to_degrees()),
        ill_conditioned,
        periods,
    })
}

/// One damped mode extracted from a free response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifiedMode {
    pub frequency_hz: f64,
    /// Positive when the mode decays.
    pub damping_ratio: f64,
    /// Amplitude of the real oscillation at the first sample.
    pub amplitude: f64,
}

const MAX_PENCIL_SAMPLES: usize = 512;
const RANK_TOLERANCE: f64 = 1e-8;

/// Matrix-pencil estimate of the `n_expected` dominant oscillatory modes
/// of a free response, sorted by ascending frequency.
///
/// Records longer than 512 samples are decimated. A constant signal
/// returns an empty list.
pub fn modal_identification(times: &[f64], values: &[f64], n_expected: usize) -> Result<Vec<IdentifiedMode>> {
    check_lengths(times, values, "free-response history")?;
    let dt_raw = sample_step(times)?;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spread = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if n_expected == 0 || spread <= 1e-12 * peak || peak == 0.0 {
        return Ok(Vec::new());
    }
    let stride = values.len().div_ceil(MAX_PENCIL_SAMPLES);
    // normalised so that every tolerance below is relative to the signal
    let y: Vec<f64> = values.iter().step_by(stride).map(|v| v / peak).collect();
    let dt = dt_raw * stride as f64;
    let n = y.len();
    let order_min = 2 * n_expected;
    if n < 3 * order_min + 3 {
        return Err(Error::Analysis(format!("{n} samples cannot resolve {n_expected} modes")));
    }

    let l = n / 3;
    let rows = n - l;
    let hankel = DMatrix::from_fn(rows, l + 1, |i, j| y[i + j]);
    let svd = hankel.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Analysis("SVD of the data matrix failed".into()))?;
    let mut sv: Vec<(usize, f64)> = svd.singular_values.iter().copied().enumerate().collect();
    sv.sort_by(|a, b| b.1.total_cmp(&a.1));
    let rank = sv.iter().filter(|(_, s)| *s > RANK_TOLERANCE * sv[0].1).count();
    if rank < order_min {
        return Err(Error::Analysis(format!(
            "rank deficient record: {rank} significant singular values cannot carry {n_expected} oscillatory modes"
        )));
    }
    let order = rank.min(order_min + 4);

    // V' holds the dominant right singular vectors as columns.
    let v = DMatrix::from_fn(l + 1, order, |i, c| v_t[(sv[c].0, i)]);
    let v1 = v.rows(0, l).into_owned();
    let v2 = v.rows(1, l).into_owned();
    // Least squares by QR: nalgebra's pseudo-inverse goes through an SVD
    // that now and then returns the small factors with ~1e-6 accuracy.
    let qr = v1.qr();
    let a = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * v2))
        .ok_or_else(|| Error::Analysis("pencil matrix is rank deficient".into()))?;
    let poles: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    if poles.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("non-finite pencil eigenvalue".into()));
    }

    // residues by least squares on the Vandermonde system
    let vand = DMatrix::from_fn(n, order, |k, i| poles[i].powu(k as u32));
    let rhs = DVector::from_iterator(n, y.iter().map(|v| Complex64::new(*v, 0.0)));
    // SVD solve: its cutoff tames near-duplicate spurious poles
    let residues = vand
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Analysis(format!("residue fit: {e}")))?;

    let mut modes: Vec<IdentifiedMode> = poles
        .iter()
        .zip(residues.iter())
        .filter(|(z, _)| z.im > 1e-9 && z.norm() > 0.0)
        .map(|(z, r)| {
            let s = z.ln() / dt;
            IdentifiedMode {
                frequency_hz: s.im / (2.0 * PI),
                damping_ratio: -s.re / s.norm(),
                amplitude: 2.0 * r.norm() * peak,
            }
        })
        .collect();
    if modes.len() < n_expected {
        return Err(Error::Analysis(format!(
            "rank deficient record: found {} oscillatory modes, {n_expected} requested",
            modes.len()
        )));
    }
    modes.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    modes.truncate(n_expected);
    modes.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));

    let slowest = modes[0].frequency_hz;
    let cycles = slowest * (times[times.len() - 1] - times[0]);
    if cycles < 10.0 {
        log::warn!("record spans {cycles:.1} cycles of the slowest mode; at least 10 are recommended");
    }
    Ok(modes)
}

/// Least-damped of up to `n_expected` identified modes. When the record
/// carries fewer modes (a growing mode swamps the rest past the stability
/// limit) the request is narrowed until the pencil resolves it.
pub fn least_damped_mode(times: &[f64], values: &[f64], n_expected: usize) -> Result<IdentifiedMode> {
    let mut last = None;
    for n in (1..=n_expected).rev() {
        match modal_identification(times, values, n) {
            Ok(modes) => {
                return modes
                    .into_iter()
                    .min_by(|a, b| a.damping_ratio.total_cmp(&b.damping_ratio))
                    .ok_or_else(|| Error::Analysis("constant signal carries no mode".into()));
            }
            Err(e @ Error::Analysis(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Analysis("no modes requested".into())))
}

/// Interpolated stability limit of a speed sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlutterCrossing {
    pub speed: f64,
    /// Sweep speeds bracketing the crossing.
    pub lower: f64,
    pub upper: f64,
}

/// First speed at which the damping of the least-damped mode crosses zero
/// from positive to non-positive, by linear interpolation.
pub fn flutter_boundary(speeds: &[f64], damping: &[f64]) -> Result<FlutterCrossing> {
    if speeds.len() != damping.len() {
        return Err(Error::SizeMismatch {
            what: "sweep damping values",
            expected: speeds.len(),
            actual: damping.len(),
        });
    }
    if speeds.len() < 2 {
        return Err(Error::Analysis("a flutter sweep needs at least two speeds".into()));
    }
    if speeds.windows(2).any(|w| !(w[1] > w[0])) || damping.iter().any(|d| !d.is_finite()) {
        return Err(Error::Analysis("sweep speeds must ascend and damping values must be finite".into()));
    }
    for i in 0..speeds.len() - 1 {
        let (d0, d1) = (damping[i], damping[i + 1]);
        if d0 > 0.0 && d1 <= 0.0 {
            let (u0, u1) = (speeds[i], speeds[i + 1]);
            return Ok(FlutterCrossing {
                speed: u0 + (u1 - u0) * d0 / (d0 - d1),
                lower: u0,
                upper: u1,
            });
        }
    }
    let (first, last) = (damping[0], damping[damping.len() - 1]);
    let trend = if last < first { "decreasing" } else { "non-decreasing" };
    let state = if damping.iter().all(|d| *d > 0.0) {
        "stable in range"
    } else {
        "unstable from the lowest speed"
    };
    Err(Error::NoFlutterCrossing(format!(
        "{state} [{}, {}]; damping {trend} from {first:.4e} to {last:.4e}",
        speeds[0],
        speeds[speeds.len() - 1]
    )))
}

/// CSV of an identified-mode list.
pub fn modes_csv(modes: &[IdentifiedMode]) -> String {
    let mut out = String::from("frequency_hz,damping_ratio,amplitude\n");
    for m in modes {
        let _ = writeln!(out, "{:?},{:?},{:?}", m.frequency_hz, m.damping_ratio, m.amplitude);
    }
    out
}

/// Whitespace-separated sweep table readable by gnuplot.
pub fn sweep_table(speeds: &[f64], damping: &[f64], frequencies: &[Vec<f64>]) -> String {
    let mut out = String::from("# speed damping frequencies_hz...\n");
    for (i, (u, d)) in speeds.iter().zip(damping).enumerate() {
        let _ = write!(out, "{u:?} {d:?}");
        for f in frequencies.get(i).map(Vec::as_slice).unwrap_or(&[]) {
            let _ = write!(out, " {f:?}");
        }
        out.push('\n');
    }
    out
}
