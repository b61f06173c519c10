//! Passive kernel from cross-correlations of total-field records.
//!
//! `φ(2n′Δt, x_j, y_m; z_l) = Σ_n u(nΔt, y_m; z_l) u((2n′+n)Δt, x_j; z_l) Δt`
//! over the samples where both factors lie inside the record.

use crate::error::{Error, Result};
use crate::synthesis::{PulsedFieldSet, TimeGrid};
use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMethod {
    Direct,
    #[default]
    Fft,
}

/// Cross-correlations on lags `2n′Δt`, `n′ = −max_lag..=max_lag`, indexed
/// `(n′ + max_lag, j, m)`, summed over `sources` records.
#[derive(Debug, Clone)]
pub struct CrossCorrelation {
    pub dt: f64,
    pub max_lag: usize,
    pub sources: usize,
    pub values: Array3<f64>,
}

impl CrossCorrelation {
    /// `φ` at lag index `n′`; zero outside the computed range.
    pub fn at(&self, lag: i64, j: usize, m: usize) -> f64 {
        let i = lag + self.max_lag as i64;
        if i < 0 || i > 2 * self.max_lag as i64 {
            0.0
        } else {
            self.values[(i as usize, j, m)]
        }
    }
}

/// Correlate one source's records: `ux` is `(time, J)`, `uy` is `(time, M)`.
pub fn cross_correlate(
    ux: ArrayView2<'_, f64>,
    uy: ArrayView2<'_, f64>,
    dt: f64,
    max_lag: usize,
    method: CorrelationMethod,
) -> Result<CrossCorrelation> {
    let ux3 = ux.insert_axis(Axis(2));
    let uy3 = uy.insert_axis(Axis(2));
    correlate_summed(ux3.view(), uy3.view(), dt, max_lag, method)
}

/// `Σ_l φ(·, x_j, y_m; z_l)` from passive records at the two rings.
pub fn correlate_sources(
    passive_x: &PulsedFieldSet,
    passive_y: &PulsedFieldSet,
    grid: &TimeGrid,
    method: CorrelationMethod,
) -> Result<CrossCorrelation> {
    let expected = 2 * grid.record_half + 1;
    for f in [passive_x, passive_y] {
        if f.times.len() != expected {
            return Err(Error::GridMismatch(format!(
                "record has {} samples, time grid expects {expected}",
                f.times.len()
            )));
        }
        if (f.times[1] - f.times[0] - grid.dt).abs() > 1e-12 * grid.dt {
            return Err(Error::GridMismatch("record step differs from Δt".into()));
        }
    }
    if passive_x.values.dim().2 != passive_y.values.dim().2 {
        return Err(Error::ShapeMismatch(format!(
            "source counts differ: {} vs {}",
            passive_x.values.dim().2,
            passive_y.values.dim().2
        )));
    }
    correlate_summed(
        passive_x.values.view(),
        passive_y.values.view(),
        grid.dt,
        grid.lag_half + 1,
        method,
    )
}

fn correlate_summed(
    ux: ndarray::ArrayView3<'_, f64>,
    uy: ndarray::ArrayView3<'_, f64>,
    dt: f64,
    max_lag: usize,
    method: CorrelationMethod,
) -> Result<CrossCorrelation> {
    let (nt, nj, nl) = ux.dim();
    let (nty, nm, nly) = uy.dim();
    if nt != nty {
        return Err(Error::GridMismatch(format!("record lengths differ: {nt} vs {nty}")));
    }
    if nl != nly {
        return Err(Error::ShapeMismatch(format!("source counts differ: {nl} vs {nly}")));
    }
    let lags = 2 * max_lag + 1;
    let rows: Vec<Array2<f64>> = match method {
        CorrelationMethod::Direct => (0..nj)
            .into_par_iter()
            .map(|j| {
                let mut out = Array2::<f64>::zeros((lags, nm));
                for m in 0..nm {
                    for l in 0..nl {
                        let a = ux.slice(s![.., j, l]);
                        let b = uy.slice(s![.., m, l]);
                        for q in 0..lags {
                            let shift = 2 * (q as i64 - max_lag as i64);
                            let n1 = 0.max(-shift);
                            let n2 = (nt as i64 - 1).min(nt as i64 - 1 - shift);
                            let mut acc = 0.0;
                            for n in n1..=n2 {
                                acc += b[n as usize] * a[(n + shift) as usize];
                            }
                            out[(q, m)] += acc * dt;
                        }
                    }
                }
                out
            })
            .collect(),
        CorrelationMethod::Fft => {
            let size = (2 * nt).next_power_of_two();
            let mut planner = FftPlanner::<f64>::new();
            let fwd = planner.plan_fft_forward(size);
            let inv = planner.plan_fft_inverse(size);
            let spectra = |u: ndarray::ArrayView3<'_, f64>, count: usize| -> Vec<Vec<Vec<Complex64>>> {
                (0..count)
                    .into_par_iter()
                    .map(|p| {
                        (0..nl)
                            .map(|l| {
                                let mut buf = vec![Complex64::new(0.0, 0.0); size];
                                for (n, v) in u.slice(s![.., p, l]).iter().enumerate() {
                                    buf[n].re = *v;
                                }
                                fwd.process(&mut buf);
                                buf
                            })
                            .collect()
                    })
                    .collect()
            };
            let sx = spectra(ux, nj);
            let sy = spectra(uy, nm);
            (0..nj)
                .into_par_iter()
                .map(|j| {
                    let mut out = Array2::<f64>::zeros((lags, nm));
                    let mut buf = vec![Complex64::new(0.0, 0.0); size];
                    for m in 0..nm {
                        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                        for l in 0..nl {
                            for ((acc, a), b) in buf.iter_mut().zip(&sx[j][l]).zip(&sy[m][l]) {
                                *acc += b.conj() * a;
                            }
                        }
                        inv.process(&mut buf);
                        let scale = dt / size as f64;
                        for q in 0..lags {
                            let shift = 2 * (q as i64 - max_lag as i64);
                            if shift.unsigned_abs() as usize >= nt {
                                continue;
                            }
                            let idx = shift.rem_euclid(size as i64) as usize;
                            out[(q, m)] = buf[idx].re * scale;
                        }
                    }
                    out
                })
                .collect()
        }
    };
    let mut values = Array3::<f64>::zeros((lags, nj, nm));
    for (j, row) in rows.into_iter().enumerate() {
        values.slice_mut(s![.., j, ..]).assign(&row);
    }
    Ok(CrossCorrelation {
        dt,
        max_lag,
        sources: nl,
        values,
    })
}

/// Factor applied to the difference of correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// Central difference `(φ(t+2Δt) − φ(t−2Δt)) / (4Δt)` of the continuous
    /// correlation, giving an extra factor `1/Δt` on the printed sum.
    #[default]
    DerivativeConsistent,
    /// The difference sum exactly as printed, without the `1/Δt` factor.
    Literal,
}

impl ScalingMode {
    pub fn factor(self, dt: f64) -> f64 {
        match self {
            ScalingMode::DerivativeConsistent => 1.0 / dt,
            ScalingMode::Literal => 1.0,
        }
    }
}

/// `c(2n′Δt, x_j; y_m)` indexed `(n′ + lag_half, j, m)`.
#[derive(Debug, Clone)]
pub struct CorrelationKernel {
    pub dt: f64,
    pub lag_half: usize,
    pub mode: ScalingMode,
    pub values: Array3<f64>,
}

/// `c = −(πR/L)·scale·Σ_l [φ(2(n′+1)Δt) − φ(2(n′−1)Δt)] − Φ_χ̃(t) + Φ_χ̃(−t)`.
///
/// `incident` holds `Φ_χ̃(2n′Δt, x_j; y_m)` for `n′ = −N..=N`.
pub fn assemble_kernel(
    correlation: &CrossCorrelation,
    incident: &PulsedFieldSet,
    radius: f64,
    source_count: usize,
    mode: ScalingMode,
) -> Result<CorrelationKernel> {
    if correlation.sources != source_count {
        return Err(Error::MissingSource(correlation.sources.min(source_count)));
    }
    let (lags, nj, nm) = incident.values.dim();
    if lags % 2 == 0 {
        return Err(Error::GridMismatch("incident lag grid must be symmetric".into()));
    }
    let half = lags / 2;
    if correlation.max_lag < half + 1 {
        return Err(Error::LagGridTooShort {
            have: correlation.max_lag as f64,
            need: (half + 1) as f64,
        });
    }
    let (_, cj, cm) = correlation.values.dim();
    if (cj, cm) != (nj, nm) {
        return Err(Error::ShapeMismatch(format!(
            "correlation pairs {cj}×{cm} vs incident pairs {nj}×{nm}"
        )));
    }
    let factor = -PI * radius / source_count as f64 * mode.factor(correlation.dt);
    let mut values = Array3::<f64>::zeros((lags, nj, nm));
    for q in 0..lags {
        let lag = q as i64 - half as i64;
        for j in 0..nj {
            for m in 0..nm {
                let diff = correlation.at(lag + 1, j, m) - correlation.at(lag - 1, j, m);
                values[(q, j, m)] = factor * diff - incident.values[(q, j, m)]
                    + incident.values[(lags - 1 - q, j, m)];
            }
        }
    }
    Ok(CorrelationKernel {
        dt: correlation.dt,
        lag_half: half,
        mode,
        values,
    })
}

/// `u(t) − u(−t)` on a symmetric lag grid.
pub fn antisymmetrize(values: &Array3<f64>) -> Array3<f64> {
    let mut flipped = values.clone();
    flipped.invert_axis(Axis(0));
    values - &flipped
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{FieldPart, Weighting};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: (usize, usize, usize), seed: u64) -> Array3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array3::from_shape_fn(shape, |_| rng.gen_range(-1.0..1.0))
    }

    fn field(values: Array3<f64>, dt: f64) -> PulsedFieldSet {
        PulsedFieldSet {
            times: (0..values.dim().0).map(|n| n as f64 * dt).collect(),
            weighting: Weighting::Chi,
            part: FieldPart::Total,
            noise: None,
            values,
        }
    }

    #[test]
    fn zero_fields_give_zero_correlation() {
        let z = Array2::<f64>::zeros((9, 2));
        let c = cross_correlate(z.view(), z.view(), 0.1, 4, CorrelationMethod::Fft).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_lag_autocorrelation_is_energy() {
        let u = random((21, 1, 1), 3).index_axis_move(Axis(2), 0);
        let c = cross_correlate(u.view(), u.view(), 0.1, 3, CorrelationMethod::Direct).unwrap();
        let energy: f64 = u.iter().map(|v| v * v * 0.1).sum();
        assert!((c.at(0, 0, 0) - energy).abs() < 1e-14);
        assert!(c.at(0, 0, 0) >= 0.0);
    }

    #[test]
    fn hand_enumerated_small_case() {
        // N = 2: five samples, n′ = 1 uses n = 0, 1, 2.
        let ux = Array2::from_shape_vec((5, 1), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let uy = Array2::from_shape_vec((5, 1), vec![0.5, -1.0, 2.0, 0.0, 7.0]).unwrap();
        let dt = 0.1;
        let expected = (0.5 * 3.0 + -1.0 * 4.0 + 2.0 * 5.0) * dt;
        for method in [CorrelationMethod::Direct, CorrelationMethod::Fft] {
            let c = cross_correlate(ux.view(), uy.view(), dt, 3, method).unwrap();
            assert!((c.at(1, 0, 0) - expected).abs() < 1e-14);
            // n′ = −1 uses n = 2, 3, 4 against x at n − 2.
            let back = (2.0 * 1.0 + 0.0 * 2.0 + 7.0 * 3.0) * dt;
            assert!((c.at(-1, 0, 0) - back).abs() < 1e-14);
            // Beyond the record length the sum is empty.
            assert!(c.at(3, 0, 0).abs() < 1e-15);
            assert!(c.at(-3, 0, 0).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = Array2::<f64>::zeros((9, 1));
        let b = Array2::<f64>::zeros((11, 1));
        assert!(matches!(
            cross_correlate(a.view(), b.view(), 0.1, 2, CorrelationMethod::Fft),
            Err(Error::GridMismatch(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fft_matches_direct(nt in 3usize..60, nj in 1usize..4, nm in 1usize..4, nl in 1usize..4, seed in 0u64..1000) {
            let ux = random((nt, nj, nl), seed);
            let uy = random((nt, nm, nl), seed + 1);
            let max_lag = nt / 2 + 1;
            let a = correlate_summed(ux.view(), uy.view(), 0.1, max_lag, CorrelationMethod::Direct).unwrap();
            let b = correlate_summed(ux.view(), uy.view(), 0.1, max_lag, CorrelationMethod::Fft).unwrap();
            let scale = a.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
            for (x, y) in a.values.iter().zip(b.values.iter()) {
                prop_assert!((x - y).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn correlation_is_bilinear(alpha in -3.0f64..3.0, seed in 0u64..1000) {
            let ux = random((31, 2, 3), seed);
            let uy = random((31, 2, 3), seed + 7);
            let base = correlate_summed(ux.view(), uy.view(), 0.1, 8, CorrelationMethod::Direct).unwrap();
            let scaled = correlate_summed((&ux * alpha).view(), (&uy * alpha).view(), 0.1, 8, CorrelationMethod::Direct).unwrap();
            for (x, y) in base.values.iter().zip(scaled.values.iter()) {
                prop_assert!((alpha * alpha * x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn kernel_from_incident_terms_only() {
        let grid = TimeGrid { dt: 0.1, record_half: 6, lag_half: 4 };
        let zeros = field(Array3::zeros((13, 2, 5)), grid.dt);
        let corr = correlate_sources(&zeros, &zeros, &grid, CorrelationMethod::Fft).unwrap();
        let incident = field(random((9, 2, 2), 11), grid.dt);
        let c = assemble_kernel(&corr, &incident, 20.0, 5, ScalingMode::default()).unwrap();
        for q in 0..9 {
            for j in 0..2 {
                for m in 0..2 {
                    let want = -incident.values[(q, j, m)] + incident.values[(8 - q, j, m)];
                    assert_eq!(c.values[(q, j, m)], want);
                }
            }
        }
        assert!(c.values.index_axis(Axis(0), 4).iter().all(|&v| v == 0.0));
        assert!(matches!(
            assemble_kernel(&corr, &incident, 20.0, 6, ScalingMode::default()),
            Err(Error::MissingSource(_))
        ));
    }

    #[test]
    fn scaling_modes_differ_by_one_over_dt_and_records_scale_quadratically() {
        let grid = TimeGrid { dt: 0.1, record_half: 10, lag_half: 6 };
        let ux = field(random((21, 2, 3), 1), grid.dt);
        let uy = field(random((21, 2, 3), 2), grid.dt);
        let zero_inc = field(Array3::zeros((13, 2, 2)), grid.dt);
        let corr = correlate_sources(&ux, &uy, &grid, CorrelationMethod::Fft).unwrap();
        let lit = assemble_kernel(&corr, &zero_inc, 20.0, 3, ScalingMode::Literal).unwrap();
        let der = assemble_kernel(&corr, &zero_inc, 20.0, 3, ScalingMode::DerivativeConsistent).unwrap();
        for (a, b) in lit.values.iter().zip(der.values.iter()) {
            assert!((a / grid.dt - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        let ux2 = field(&ux.values * 2.0, grid.dt);
        let uy2 = field(&uy.values * 2.0, grid.dt);
        let corr2 = correlate_sources(&ux2, &uy2, &grid, CorrelationMethod::Fft).unwrap();
        let der2 = assemble_kernel(&corr2, &zero_inc, 20.0, 3, ScalingMode::DerivativeConsistent).unwrap();
        for (a, b) in der.values.iter().zip(der2.values.iter()) {
            assert!((4.0 * a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn antisymmetrize_flips_lags() {
        let v = random((5, 1, 1), 4);
        let a = antisymmetrize(&v);
        assert_eq!(a[(2, 0, 0)], 0.0);
        assert_eq!(a[(0, 0, 0)], v[(0, 0, 0)] - v[(4, 0, 0)]);
    }
}
