//! Time-domain fields from frequency-domain solves.
//!
//! A field `u(t) = (1/π) Re ∫_0^∞ e^{−ikt} W(k) û(k) dk` is evaluated with a
//! quadrature in `k`, where `W = χ̂` for χ-pulsed data and `W = |χ̂|²` for
//! χ̃-pulsed data.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Point};
use crate::helmholtz::{assemble_bie, green};
use crate::pulse::{band_upper_edge, transform_at, Waveform, BAND_EPS};
use crate::quadrature::GaussLegendre;
use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Sampling of passive records and of the operator lag grid.
///
/// Records are sampled at `nΔt`, `n = 0..=2·record_half`; operator lags at
/// `2n′Δt`, `n′ = −lag_half..=lag_half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub record_half: usize,
    pub lag_half: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            dt: 0.1,
            record_half: 200,
            lag_half: 200,
        }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.record_half == 0 || self.lag_half == 0 {
            return Err(Error::InvalidParameter(format!("degenerate time grid {self:?}")));
        }
        if self.lag_half > self.record_half {
            return Err(Error::GridMismatch(format!(
                "lag half-width {} exceeds record half-width {}",
                self.lag_half, self.record_half
            )));
        }
        Ok(())
    }

    /// `T = 2NΔt`.
    pub fn record_length(&self) -> f64 {
        2.0 * self.record_half as f64 * self.dt
    }

    pub fn record_times(&self) -> Vec<f64> {
        (0..=2 * self.record_half).map(|n| n as f64 * self.dt).collect()
    }

    pub fn lag_times(&self) -> Vec<f64> {
        let n = self.lag_half as i64;
        (-n..=n).map(|q| 2.0 * q as f64 * self.dt).collect()
    }
}

/// Quadrature in `k` for the synthesis integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum FrequencyRule {
    /// Composite Gauss–Legendre panels. Panel width is chosen so that
    /// `width · horizon ≤ phase`; the first panel uses `k = w s³` to absorb
    /// the logarithmic behaviour of 2D fields at `k = 0`.
    Panels { order: usize, phase: f64 },
    /// `k_j = jΔk`, `Δk = 2π/pad`, `j ≥ 1`.
    Uniform { pad: f64 },
}

impl Default for FrequencyRule {
    fn default() -> Self {
        FrequencyRule::Panels { order: 24, phase: 30.0 }
    }
}

#[derive(Debug, Clone)]
pub struct FrequencyPlan {
    pub rule: FrequencyRule,
    pub k: Vec<f64>,
    pub weights: Vec<f64>,
    pub chi_hat: Vec<Complex64>,
    pub k_max: f64,
}

impl FrequencyPlan {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// Frequencies and weights resolving fields up to `|t − r| ≤ horizon`.
pub fn plan_frequencies<W: Waveform + ?Sized>(
    pulse: &W,
    rule: FrequencyRule,
    horizon: f64,
) -> Result<FrequencyPlan> {
    let k_max = band_upper_edge(pulse, BAND_EPS, 200.0)?;
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    match rule {
        FrequencyRule::Panels { order, phase } => {
            if order < 2 || !(phase > 0.0) || !(horizon > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "panel rule needs order ≥ 2 and positive phase/horizon, got {order}, {phase}, {horizon}"
                )));
            }
            let gl = GaussLegendre::new(order);
            let width = (phase / horizon).min(1.0);
            let first = 0.25 * width;
            for (s, w) in gl.on(0.0, 1.0) {
                nodes.push((first * s.powi(3), 3.0 * first * s * s * w));
            }
            let panels = ((k_max - first) / width).ceil().max(1.0) as usize;
            nodes.extend(gl.composite(first, k_max, panels));
        }
        FrequencyRule::Uniform { pad } => {
            if !(pad > 0.0) {
                return Err(Error::InvalidParameter(format!("padding length must be positive, got {pad}")));
            }
            let dk = 2.0 * PI / pad;
            let count = (k_max / dk).floor() as usize;
            nodes.extend((1..=count).map(|j| (j as f64 * dk, dk)));
        }
    }
    let chi_hat: Vec<Complex64> = nodes
        .iter()
        .map(|&(k, _)| transform_at(pulse, k))
        .collect::<Result<_>>()?;
    let peak = chi_hat.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..nodes.len())
        .filter(|&i| chi_hat[i].norm() >= BAND_EPS * peak)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyBand);
    }
    Ok(FrequencyPlan {
        rule,
        k: keep.iter().map(|&i| nodes[i].0).collect(),
        weights: keep.iter().map(|&i| nodes[i].1).collect(),
        chi_hat: keep.iter().map(|&i| chi_hat[i]).collect(),
        k_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldPart {
    Total,
    Scattered,
    /// Free-space Green function only; the obstacles are ignored.
    Incident,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// `χ̂(k)`: fields excited by χ.
    Chi,
    /// `|χ̂(k)|²`: fields excited by the autocorrelation χ̃.
    ChiTilde,
}

/// Frequency responses indexed `(frequency, receiver, source)`.
#[derive(Debug, Clone)]
pub struct ResponseSet {
    pub k: Vec<f64>,
    pub part: FieldPart,
    pub values: Array3<Complex64>,
}

pub struct SweepRequest<'a> {
    pub receivers: &'a [Point],
    pub sources: &'a [Point],
    pub part: FieldPart,
}

/// Solve the scattering problem at every planned frequency and evaluate the
/// requested receiver/source blocks. One factorization per frequency serves
/// all requests.
pub fn sweep(
    obstacles: &[BoundaryCurve],
    plan: &FrequencyPlan,
    nodes: usize,
    requests: &[SweepRequest<'_>],
) -> Result<Vec<ResponseSet>> {
    let needs_solver = !obstacles.is_empty() && requests.iter().any(|r| r.part != FieldPart::Incident);
    let per_frequency: Vec<Vec<Array2<Complex64>>> = plan
        .k
        .par_iter()
        .map(|&k| {
            let bie = if !needs_solver {
                None
            } else {
                Some(assemble_bie(obstacles, k, nodes)?)
            };
            if let Some(b) = &bie {
                log::trace!("k = {k:.5}: pivot condition {:.3e}", b.pivot_condition);
            }
            requests
                .iter()
                .map(|req| {
                    let mut block = match (&bie, req.part) {
                        (Some(b), FieldPart::Total | FieldPart::Scattered) => {
                            b.scattered_responses(req.sources, req.receivers)?
                        }
                        _ => Array2::zeros((req.receivers.len(), req.sources.len())),
                    };
                    if req.part != FieldPart::Scattered {
                        for (r, x) in req.receivers.iter().enumerate() {
                            for (s, y) in req.sources.iter().enumerate() {
                                block[(r, s)] += green(k, x, y)?;
                            }
                        }
                    }
                    Ok(block)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(requests
        .iter()
        .enumerate()
        .map(|(q, req)| {
            let mut values =
                Array3::<Complex64>::zeros((plan.len(), req.receivers.len(), req.sources.len()));
            for (f, blocks) in per_frequency.iter().enumerate() {
                values.index_axis_mut(Axis(0), f).assign(&blocks[q]);
            }
            ResponseSet {
                k: plan.k.clone(),
                part: req.part,
                values,
            }
        })
        .collect())
}

/// Free-space Green function responses `G_k(x_r, y_s)`.
pub fn incident_responses(plan: &FrequencyPlan, receivers: &[Point], sources: &[Point]) -> Result<ResponseSet> {
    let mut out = sweep(
        &[],
        plan,
        4,
        &[SweepRequest {
            receivers,
            sources,
            part: FieldPart::Incident,
        }],
    )?;
    Ok(out.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub delta: f64,
    pub seed: u64,
}

/// Real time samples indexed `(time, receiver, source)`.
#[derive(Debug, Clone)]
pub struct PulsedFieldSet {
    pub times: Vec<f64>,
    pub weighting: Weighting,
    pub part: FieldPart,
    pub noise: Option<NoiseRecord>,
    pub values: Array3<f64>,
}

impl PulsedFieldSet {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Synthesize time samples at `times` from frequency responses.
pub fn synthesize_field(
    responses: &ResponseSet,
    plan: &FrequencyPlan,
    times: &[f64],
    weighting: Weighting,
) -> Result<PulsedFieldSet> {
    if responses.k.len() != plan.k.len() {
        return Err(Error::MissingFrequency(
            plan.k.get(responses.k.len()).copied().unwrap_or(f64::NAN),
        ));
    }
    for (a, b) in responses.k.iter().zip(&plan.k) {
        if a != b {
            return Err(Error::MissingFrequency(*b));
        }
    }
    let nf = plan.len();
    let (_, nr, ns) = responses.values.dim();
    // e^{−ikt} W(k) w / π split into real and imaginary parts.
    let mut er = Array2::<f64>::zeros((times.len(), nf));
    let mut ei = Array2::<f64>::zeros((times.len(), nf));
    for (j, (&k, &w)) in plan.k.iter().zip(&plan.weights).enumerate() {
        let c = plan.chi_hat[j];
        let wk = match weighting {
            Weighting::Chi => c,
            Weighting::ChiTilde => Complex64::new(c.norm_sqr(), 0.0),
        } * (w / PI);
        for (n, &t) in times.iter().enumerate() {
            let e = wk * Complex64::from_polar(1.0, -k * t);
            er[(n, j)] = e.re;
            ei[(n, j)] = e.im;
        }
    }
    let flat = responses
        .values
        .view()
        .into_shape_with_order((nf, nr * ns))
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let re = flat.mapv(|c| c.re);
    let im = flat.mapv(|c| c.im);
    let out = er.dot(&re) - ei.dot(&im);
    let values = out
        .into_shape_with_order((times.len(), nr, ns))
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok(PulsedFieldSet {
        times: times.to_vec(),
        weighting,
        part: responses.part,
        noise: None,
        values,
    })
}

/// `Φ_χ̃(t, x_r; y_s)` on the given lags.
pub fn incident_correlation(
    plan: &FrequencyPlan,
    receivers: &[Point],
    sources: &[Point],
    lags: &[f64],
) -> Result<PulsedFieldSet> {
    let responses = incident_responses(plan, receivers, sources)?;
    synthesize_field(&responses, plan, lags, Weighting::ChiTilde)
}

/// `u_δ = u + δ(2μ − 1)|u|` with an independent `μ ~ U[0,1]` per sample,
/// drawn in row-major order from a ChaCha8 stream keyed by `seed`.
pub fn add_noise(fields: &PulsedFieldSet, delta: f64, seed: u64) -> Result<PulsedFieldSet> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise level must be non-negative, got {delta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut out = fields.clone();
    for v in out.values.iter_mut() {
        let mu: f64 = rng.gen();
        *v += delta * (2.0 * mu - 1.0) * v.abs();
    }
    out.noise = Some(NoiseRecord { delta, seed });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::GaussianSine;

    /// `(1/2π) ∫_0^∞ f(t − r cosh v) dv`: a pulse convolved with the causal
    /// 2D Green function, by direct quadrature in the time domain.
    fn time_domain_oracle(f: impl Fn(f64) -> f64, support: (f64, f64), t: f64, r: f64) -> f64 {
        let (lo, hi) = support;
        if t - r < lo {
            return 0.0;
        }
        let v_max = ((t - lo) / r).acosh();
        let v_min = if t - r > hi { ((t - hi) / r).acosh() } else { 0.0 };
        GaussLegendre::new(30).integrate(v_min, v_max, 40, |v| f(t - r * v.cosh())) / (2.0 * PI)
    }

    fn chi_tilde(t: f64) -> f64 {
        let (a, w, c) = (1.6_f64, 4.0_f64, 3.0_f64);
        0.5 * (PI / (2.0 * a)).sqrt()
            * (-a * t * t / 2.0).exp()
            * ((w * t).cos() - (2.0 * w * c).cos() * (-w * w / (2.0 * a)).exp())
    }

    fn free_space_field(rule: FrequencyRule, r: f64, times: &[f64], weighting: Weighting) -> Vec<f64> {
        let pulse = GaussianSine::default();
        let horizon = times.iter().fold(0.0_f64, |m, t| m.max(t.abs())) + r;
        let plan = plan_frequencies(&pulse, rule, horizon).unwrap();
        let x = [Point::new(r, 0.0)];
        let y = [Point::new(0.0, 0.0)];
        let resp = incident_responses(&plan, &x, &y).unwrap();
        let f = synthesize_field(&resp, &plan, times, weighting).unwrap();
        f.values.iter().copied().collect()
    }

    #[test]
    fn time_grid_layout() {
        let g = TimeGrid::default();
        assert_eq!(g.record_times().len(), 401);
        assert!((g.record_length() - 40.0).abs() < 1e-12);
        let lags = g.lag_times();
        assert_eq!(lags.len(), 401);
        assert_eq!(lags[0], -lags[400]);
        assert!(TimeGrid { lag_half: 300, ..g }.validate().is_err());
    }

    #[test]
    fn uniform_rule_spacing() {
        let plan = plan_frequencies(&GaussianSine::default(), FrequencyRule::Uniform { pad: 80.0 }, 60.0).unwrap();
        let dk = 2.0 * PI / 80.0;
        assert!((plan.k[0] - dk).abs() < 1e-15);
        assert!((plan.k[1] - plan.k[0] - dk).abs() < 1e-12);
        assert!(plan.k.iter().all(|&k| k > 0.0 && k <= plan.k_max));
    }

    #[test]
    fn chi_pulsed_free_field_matches_time_domain_oracle() {
        let pulse = GaussianSine::default();
        let r = 3.0;
        let times: Vec<f64> = (0..=200).map(|n| 0.1 * n as f64).collect();
        let got = free_space_field(FrequencyRule::default(), r, &times, Weighting::Chi);
        let exact: Vec<f64> = times
            .iter()
            .map(|&t| time_domain_oracle(|s| pulse.eval(s), pulse.support(), t, r))
            .collect();
        let peak = exact.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = got.iter().zip(&exact).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-6 * peak, "{err:e} vs peak {peak:e}");
        // The echo peaks near r + 3.
        let arg = (0..exact.len())
            .max_by(|&a, &b| got[a].abs().partial_cmp(&got[b].abs()).unwrap())
            .unwrap();
        assert!((times[arg] - (r + 3.0)).abs() < 1.0);
    }

    #[test]
    fn chi_tilde_pulsed_free_field_matches_oracle_at_negative_and_positive_times() {
        let r = 2.0;
        let times: Vec<f64> = (-100..=100).map(|n| 0.2 * n as f64).collect();
        let got = free_space_field(FrequencyRule::default(), r, &times, Weighting::ChiTilde);
        let exact: Vec<f64> = times
            .iter()
            .map(|&t| time_domain_oracle(chi_tilde, (-8.0, 8.0), t, r))
            .collect();
        let peak = exact.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let err = got.iter().zip(&exact).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-4 * peak, "{err:e} vs peak {peak:e}");
    }

    #[test]
    fn causal_before_arrival() {
        let r = 10.0;
        let times: Vec<f64> = (0..=300).map(|n| 0.1 * n as f64).collect();
        let u = free_space_field(FrequencyRule::default(), r, &times, Weighting::Chi);
        let peak = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let onset = r + GaussianSine::default().support().0;
        for (t, v) in times.iter().zip(&u) {
            if *t < onset {
                assert!(v.abs() < 1e-3 * peak, "t={t}: {v}");
            }
        }
    }

    #[test]
    fn refining_the_frequency_rule_changes_little() {
        let r = 4.0;
        let times: Vec<f64> = (0..=400).map(|n| 0.1 * n as f64).collect();
        let a = free_space_field(FrequencyRule::Panels { order: 24, phase: 30.0 }, r, &times, Weighting::Chi);
        let b = free_space_field(FrequencyRule::Panels { order: 24, phase: 15.0 }, r, &times, Weighting::Chi);
        let peak = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let diff = a.iter().zip(&b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-6 * peak, "{diff:e}");
    }

    #[test]
    fn parseval_energy_balance() {
        let r = 2.0;
        let dt = 0.05;
        let times: Vec<f64> = (0..=3000).map(|n| dt * n as f64).collect();
        let pulse = GaussianSine::default();
        let plan = plan_frequencies(&pulse, FrequencyRule::default(), 150.0 + r).unwrap();
        let resp = incident_responses(&plan, &[Point::new(r, 0.0)], &[Point::new(0.0, 0.0)]).unwrap();
        let u = synthesize_field(&resp, &plan, &times, Weighting::Chi).unwrap();
        let time_energy: f64 = u.values.iter().map(|v| v * v * dt).sum();
        let freq_energy: f64 = (0..plan.len())
            .map(|j| plan.weights[j] * (plan.chi_hat[j] * resp.values[(j, 0, 0)]).norm_sqr() / PI)
            .sum();
        assert!((time_energy - freq_energy).abs() < 1e-3 * freq_energy);
    }

    #[test]
    fn noise_model_is_exact() {
        let times = vec![0.0, 1.0, 2.0];
        let mut values = Array3::<f64>::zeros((3, 2, 2));
        values[(1, 0, 1)] = 2.0;
        values[(2, 1, 0)] = -0.5;
        values[(0, 1, 1)] = 1e-3;
        let u = PulsedFieldSet {
            times,
            weighting: Weighting::Chi,
            part: FieldPart::Total,
            noise: None,
            values,
        };
        let same = add_noise(&u, 0.0, 3).unwrap();
        assert_eq!(same.values, u.values);
        let noisy = add_noise(&u, 0.05, 3).unwrap();
        for (a, b) in noisy.values.iter().zip(u.values.iter()) {
            assert!((a - b).abs() <= 0.05 * b.abs());
            if *b == 0.0 {
                assert_eq!(*a, 0.0);
            }
        }
        assert_eq!(add_noise(&u, 0.05, 3).unwrap().values, noisy.values);
        assert_ne!(add_noise(&u, 0.05, 4).unwrap().values, noisy.values);
        assert!(add_noise(&u, -0.1, 3).is_err());
    }

    #[test]
    fn incident_correlation_symmetry_and_decay() {
        let pulse = GaussianSine::default();
        let plan = plan_frequencies(&pulse, FrequencyRule::default(), 30.0).unwrap();
        let lags: Vec<f64> = (-50..=50).map(|n| 0.2 * n as f64).collect();
        let p = [Point::new(0.0, 0.0)];
        let q = [Point::new(1.0, 0.0), Point::new(2.0, 0.0), Point::new(4.0, 0.0)];
        let pq = incident_correlation(&plan, &p, &q, &lags).unwrap();
        let qp = incident_correlation(&plan, &q, &p, &lags).unwrap();
        for n in 0..lags.len() {
            for s in 0..3 {
                assert!((pq.values[(n, 0, s)] - qp.values[(n, s, 0)]).abs() < 1e-12);
            }
        }
        let amp: Vec<f64> = (0..3)
            .map(|s| (0..lags.len()).fold(0.0_f64, |m, n| m.max(pq.values[(n, 0, s)].abs())))
            .collect();
        assert!(amp[0] > amp[1] && amp[1] > amp[2], "{amp:?}");
    }

    proptest::proptest! {
        #[test]
        fn noise_is_bounded_and_relative(delta in 0.0f64..0.5, seed in proptest::num::u64::ANY) {
            let values = ndarray::Array3::from_shape_fn((7, 3, 2), |(n, j, m)| {
                if n == 3 { 0.0 } else { ((n * 5 + j * 3 + m) as f64).sin() }
            });
            let clean = PulsedFieldSet {
                times: (0..7).map(|n| n as f64).collect(),
                weighting: Weighting::Chi,
                part: FieldPart::Total,
                noise: None,
                values,
            };
            let noisy = add_noise(&clean, delta, seed).unwrap();
            for (u, v) in clean.values.iter().zip(noisy.values.iter()) {
                proptest::prop_assert!((v - u).abs() <= delta * u.abs() * (1.0 + 4.0 * f64::EPSILON));
                if *u == 0.0 {
                    proptest::prop_assert_eq!(*v, 0.0);
                }
            }
        }
    }
}
