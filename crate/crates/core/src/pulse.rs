//! Probing pulse, its spectrum and autocorrelation.
//!
//! Transforms follow `f̂(k) = ∫ e^{ikt} f(t) dt`; with zero damping the
//! time reversal of a signal is simply `g(−t)` and its transform `conj(ĝ)`.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative level below which a pulse counts as zero.
pub const SUPPORT_EPS: f64 = 1e-10;
/// Relative spectral level defining the effective band.
pub const BAND_EPS: f64 = 1e-6;

/// A real, effectively compactly supported time signal.
pub trait Waveform: Sync {
    fn eval(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    /// Interval outside which `|χ| < SUPPORT_EPS · max|χ|`.
    fn support(&self) -> (f64, f64);
}

/// `χ(t) = sin(ω t) exp(−a (t − t_c)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianSine {
    pub carrier: f64,
    pub decay: f64,
    pub center: f64,
}

impl Default for GaussianSine {
    fn default() -> Self {
        Self {
            carrier: 4.0,
            decay: 1.6,
            center: 3.0,
        }
    }
}

impl GaussianSine {
    pub fn validate(&self) -> Result<()> {
        if self.carrier > 0.0 && self.decay > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "pulse carrier and decay must be positive: {self:?}"
            )))
        }
    }

    fn envelope(&self, t: f64) -> f64 {
        (-self.decay * (t - self.center).powi(2)).exp()
    }
}

impl Waveform for GaussianSine {
    fn eval(&self, t: f64) -> f64 {
        (self.carrier * t).sin() * self.envelope(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        let w = self.carrier;
        let e = self.envelope(t);
        e * (w * (w * t).cos() - 2.0 * self.decay * (t - self.center) * (w * t).sin())
    }

    fn support(&self) -> (f64, f64) {
        // Envelope below 0.1·SUPPORT_EPS keeps |χ| below SUPPORT_EPS·peak (peak ≳ 0.1).
        let half = ((10.0 / SUPPORT_EPS).ln() / self.decay).sqrt();
        (self.center - half, self.center + half)
    }
}

/// Sampled values of `χ̂(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub k: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Grid interval where `|χ̂| ≥ BAND_EPS · peak`.
    pub band: (f64, f64),
    pub peak: f64,
    pub peak_k: f64,
}

const PANEL_ORDER: usize = 16;
const PANEL_WIDTH: f64 = 0.5;

/// `χ̂(k)` by Gauss–Legendre panels over the support, halving panels until two
/// successive values agree to `1e-10` relative to `∫|χ|`.
pub fn transform_at<W: Waveform + ?Sized>(pulse: &W, k: f64) -> Result<Complex64> {
    let (lo, hi) = pulse.support();
    let gl = GaussLegendre::new(PANEL_ORDER);
    let mut panels = ((hi - lo) / PANEL_WIDTH).ceil() as usize;
    let integrate = |panels: usize| -> (Complex64, f64) {
        gl.composite(lo, hi, panels)
            .into_iter()
            .fold((Complex64::new(0.0, 0.0), 0.0), |(acc, l1), (t, w)| {
                let v = pulse.eval(t);
                (acc + Complex64::from_polar(w * v, k * t), l1 + w * v.abs())
            })
    };
    let (mut prev, l1) = integrate(panels);
    for _ in 0..12 {
        panels *= 2;
        let (next, _) = integrate(panels);
        if (next - prev).norm() <= 1e-10 * l1.max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence(format!(
        "pulse transform at k = {k}"
    )))
}

pub fn spectrum<W: Waveform + ?Sized>(pulse: &W, k_grid: &[f64]) -> Result<Spectrum> {
    let k_lo = k_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let k_hi = k_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if k_grid.is_empty() || k_lo > 0.0 || k_hi < 12.0 {
        return Err(Error::InvalidParameter(
            "spectrum grid must cover at least [0, 12]".into(),
        ));
    }
    let values = k_grid
        .iter()
        .map(|&k| transform_at(pulse, k))
        .collect::<Result<Vec<_>>>()?;
    let (peak_index, peak) = values
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.norm()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let in_band: Vec<f64> = k_grid
        .iter()
        .zip(&values)
        .filter(|(_, v)| v.norm() >= BAND_EPS * peak)
        .map(|(&k, _)| k)
        .collect();
    let band = (
        in_band.iter().cloned().fold(f64::INFINITY, f64::min),
        in_band.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(Spectrum {
        k: k_grid.to_vec(),
        values,
        band,
        peak,
        peak_k: k_grid[peak_index],
    })
}

/// Upper edge of the band: the largest `k` with `|χ̂(k)| ≥ eps · peak`,
/// located on a `0.01` scan of `[0, k_limit]` and refined by bisection.
pub fn band_upper_edge<W: Waveform + ?Sized>(pulse: &W, eps: f64, k_limit: f64) -> Result<f64> {
    let step = 0.01;
    let n = (k_limit / step).ceil() as usize;
    let mags = (0..=n)
        .map(|i| transform_at(pulse, i as f64 * step).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?;
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::EmptyBand);
    }
    let threshold = eps * peak;
    let last = mags
        .iter()
        .rposition(|&m| m >= threshold)
        .ok_or(Error::EmptyBand)?;
    if last == n {
        return Ok(k_limit);
    }
    let (mut a, mut b) = (last as f64 * step, (last + 1) as f64 * step);
    for _ in 0..50 {
        let mid = 0.5 * (a + b);
        if transform_at(pulse, mid)?.norm() >= threshold {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// `χ̃(t) = ∫ χ(τ) χ(τ − t) dτ`, tabulated with its derivative on a uniform
/// lag grid and evaluated between samples by cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autocorrelation {
    pub step: f64,
    /// Zero outside `[−half_width, half_width]`.
    pub half_width: f64,
    /// Samples at `t = i·step`, `i ≥ 0`; negative lags by evenness.
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Uniform lag grid `[−half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagGrid {
    pub step: f64,
    pub half_width: f64,
}

impl LagGrid {
    /// Fine default grid covering the autocorrelation support of `pulse`.
    pub fn for_pulse<W: Waveform + ?Sized>(pulse: &W) -> Self {
        let (lo, hi) = pulse.support();
        Self {
            step: 1.0 / 256.0,
            half_width: hi - lo,
        }
    }
}

pub fn autocorrelate<W: Waveform + ?Sized>(pulse: &W, lags: LagGrid) -> Result<Autocorrelation> {
    let (lo, hi) = pulse.support();
    let need = hi - lo;
    if lags.half_width + 1e-12 < need {
        return Err(Error::LagGridTooShort {
            have: lags.half_width,
            need,
        });
    }
    if lags.step <= 0.0 {
        return Err(Error::InvalidParameter("lag step must be positive".into()));
    }
    let gl = GaussLegendre::new(PANEL_ORDER);
    let count = (lags.half_width / lags.step).ceil() as usize + 1;
    let mut values = Vec::with_capacity(count);
    let mut slopes = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 * lags.step;
        // Overlap of supp χ(τ) and supp χ(τ − t).
        let (a, b) = (lo.max(lo + t), hi.min(hi + t));
        if b <= a {
            values.push(0.0);
            slopes.push(0.0);
            continue;
        }
        let panels = ((b - a) / PANEL_WIDTH).ceil().max(1.0) as usize;
        let nodes = gl.composite(a, b, panels);
        let v: f64 = nodes.iter().map(|&(s, w)| w * pulse.eval(s) * pulse.eval(s - t)).sum();
        let d: f64 = nodes
            .iter()
            .map(|&(s, w)| -w * pulse.eval(s) * pulse.derivative(s - t))
            .sum();
        values.push(v);
        slopes.push(d);
    }
    // Evenness: χ̃'(0) = 0.
    slopes[0] = 0.0;
    Ok(Autocorrelation {
        step: lags.step,
        half_width: lags.half_width,
        values,
        slopes,
    })
}

impl Autocorrelation {
    pub fn eval(&self, t: f64) -> f64 {
        let s = t.abs();
        if s > self.half_width {
            return 0.0;
        }
        let x = s / self.step;
        let i = (x.floor() as usize).min(self.values.len().saturating_sub(2));
        let u = x - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * d1
    }

    /// `χ̃(0) = ‖χ‖²`.
    pub fn energy(&self) -> f64 {
        self.values[0]
    }

    /// Effective support `[−T0, T0]`: beyond `T0` all tabulated values are
    /// below `SUPPORT_EPS · χ̃(0)`.
    pub fn support_half_width(&self) -> f64 {
        let floor = SUPPORT_EPS * self.values[0];
        let last = self
            .values
            .iter()
            .rposition(|v| v.abs() >= floor)
            .unwrap_or(0);
        ((last + 1) as f64 * self.step).min(self.half_width)
    }
}

/// Time reversal at zero damping: `ğ(t) = g(−t)` on a symmetric sample grid.
pub fn time_reverse(samples: &[f64]) -> Vec<f64> {
    samples.iter().rev().copied().collect()
}
