//! Truncated-SVD solution of the sampling equation and indicator maps.

use crate::error::{Error, Result};
use crate::geometry::{Point, SamplingGrid, Scene};
use crate::operators::{test_function, Amplitude, ImagingOperator, OperatorKind};
use crate::pulse::Autocorrelation;
use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Leading singular triples with `σ_p / σ_1 ≥ ratio`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub kind: OperatorKind,
    pub ratio: f64,
    /// Every singular value of the operator, nonincreasing.
    pub spectrum: Vec<f64>,
    /// Retained left factors, `rows × P`.
    pub u: Array2<f64>,
    /// Retained right factors, `cols × P`.
    pub v: Array2<f64>,
}

impl TruncatedSvd {
    pub fn retained(&self) -> usize {
        self.u.ncols()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.spectrum[..self.retained()]
    }
}

pub fn truncated_svd(op: &ImagingOperator, ratio: f64) -> Result<TruncatedSvd> {
    truncated_svd_matrix(&op.matrix, ratio, op.kind)
}

pub fn truncated_svd_matrix(a: &Array2<f64>, ratio: f64, kind: OperatorKind) -> Result<TruncatedSvd> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!("truncation ratio must lie in (0, 1], got {ratio}")));
    }
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::ShapeMismatch("empty operator".into()));
    }
    let m = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let svd = m.thin_svd().map_err(|e| Error::Svd(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let spectrum: Vec<f64> = (0..rows.min(cols)).map(|i| s[i]).collect();
    let top = spectrum[0];
    if !(top > 0.0) {
        return Err(Error::ZeroOperator);
    }
    let keep = spectrum.iter().take_while(|&&x| x / top >= ratio).count();
    let (uf, vf) = (svd.U(), svd.V());
    Ok(TruncatedSvd {
        kind,
        ratio,
        spectrum,
        u: Array2::from_shape_fn((rows, keep), |(i, p)| uf[(i, p)]),
        v: Array2::from_shape_fn((cols, keep), |(i, p)| vf[(i, p)]),
    })
}

#[derive(Debug, Clone)]
pub struct SampleSolution {
    pub g: Array1<f64>,
    pub norm: f64,
    /// `1/‖g‖`, or `+∞` when the test function is orthogonal to the retained range.
    pub indicator: f64,
}

/// `g = V_P S_P^{-1} U_P^T φ`.
pub fn solve_sample(svd: &TruncatedSvd, phi: &[f64]) -> Result<SampleSolution> {
    if phi.len() != svd.u.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "test function has {} entries, operator has {} rows",
            phi.len(),
            svd.u.nrows()
        )));
    }
    let coef = coefficients(svd, &Array1::from(phi.to_vec()));
    let g = svd.v.dot(&coef);
    let norm = coef.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(SampleSolution {
        g,
        norm,
        indicator: if norm > 0.0 { 1.0 / norm } else { f64::INFINITY },
    })
}

fn coefficients(svd: &TruncatedSvd, phi: &Array1<f64>) -> Array1<f64> {
    let mut c = svd.u.t().dot(phi);
    for (p, v) in c.iter_mut().enumerate() {
        *v /= svd.spectrum[p];
    }
    c
}

/// Settings shared by every sampling point.
#[derive(Debug, Clone, Copy)]
pub struct ProbeSettings {
    pub tau: f64,
    pub dt: f64,
    pub half: usize,
    pub amplitude: Amplitude,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndicatorMap {
    pub grid: SamplingGrid,
    pub kind: OperatorKind,
    /// Row-major over the grid; masked points are zero.
    pub values: Vec<f64>,
    pub max: f64,
    /// Points whose test function had no component in the retained range.
    pub degenerate: Vec<usize>,
}

impl IndicatorMap {
    pub fn normalized(&self) -> Vec<f64> {
        if self.max > 0.0 && self.max.is_finite() {
            self.values.iter().map(|v| v / self.max).collect()
        } else {
            self.values.clone()
        }
    }

    pub fn argmax(&self) -> Option<Point> {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.mask[*i])
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.grid.point(i))
    }
}

pub fn indicator_map(
    svd: &TruncatedSvd,
    grid: &SamplingGrid,
    autocorr: &Autocorrelation,
    receivers: &[Point],
    settings: ProbeSettings,
) -> Result<IndicatorMap> {
    const CHUNK: usize = 256;
    let active = grid.active_indices();
    let rows = svd.u.nrows();
    let norms: Vec<Vec<f64>> = active
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut phi = Array2::<f64>::zeros((rows, chunk.len()));
            for (c, &i) in chunk.iter().enumerate() {
                let tf = test_function(
                    &grid.point(i),
                    settings.tau,
                    autocorr,
                    receivers,
                    settings.dt,
                    settings.half,
                    settings.amplitude,
                )?;
                let flat = tf.flatten();
                if flat.len() != rows {
                    return Err(Error::ShapeMismatch(format!(
                        "test function has {} entries, operator has {rows} rows",
                        flat.len()
                    )));
                }
                phi.column_mut(c).assign(&Array1::from(flat));
            }
            let mut coef = svd.u.t().dot(&phi);
            for (p, mut row) in coef.axis_iter_mut(Axis(0)).enumerate() {
                row /= svd.spectrum[p];
            }
            Ok(coef
                .axis_iter(Axis(1))
                .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; grid.len()];
    let mut degenerate = Vec::new();
    for (&i, norm) in active.iter().zip(norms.into_iter().flatten()) {
        if norm > 0.0 {
            values[i] = 1.0 / norm;
        } else {
            values[i] = f64::INFINITY;
            degenerate.push(i);
        }
    }
    let max = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    if !degenerate.is_empty() {
        log::warn!("{} sampling points orthogonal to the retained range", degenerate.len());
    }
    Ok(IndicatorMap {
        grid: grid.clone(),
        kind: svd.kind,
        values,
        max,
        degenerate,
    })
}

/// Summary statistics of a map against the true obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapMetrics {
    pub argmax: [f64; 2],
    pub argmax_inside: bool,
    pub mean_inside: f64,
    pub mean_outside: f64,
    /// `mean_inside / mean_outside` of the normalized map.
    pub contrast: f64,
}

/// Points farther than this from every obstacle count as "outside".
pub const OUTSIDE_MARGIN: f64 = 0.5;

pub fn map_metrics(map: &IndicatorMap, scene: &Scene) -> MapMetrics {
    let norm = map.normalized();
    let (mut si, mut ni, mut so, mut no) = (0.0, 0usize, 0.0, 0usize);
    for i in map.grid.active_indices() {
        let p = map.grid.point(i);
        if scene.inside_obstacle(&p) {
            si += norm[i];
            ni += 1;
        } else if scene.obstacle_distance(&p) > OUTSIDE_MARGIN {
            so += norm[i];
            no += 1;
        }
    }
    let mean_inside = if ni > 0 { si / ni as f64 } else { 0.0 };
    let mean_outside = if no > 0 { so / no as f64 } else { 0.0 };
    let arg = map.argmax().unwrap_or(map.grid.center);
    MapMetrics {
        argmax: [arg.x, arg.y],
        argmax_inside: scene.inside_obstacle(&arg),
        mean_inside,
        mean_outside,
        contrast: if mean_outside > 0.0 { mean_inside / mean_outside } else { f64::INFINITY },
    }
}

/// 4-connected components of `{normalized ≥ level}` over unmasked points.
pub fn level_set_components(map: &IndicatorMap, level: f64) -> Vec<Vec<usize>> {
    let norm = map.normalized();
    let (nx, ny) = (map.grid.nx, map.grid.ny);
    let on = |i: usize| map.grid.mask[i] && norm[i] >= level;
    let mut seen = vec![false; norm.len()];
    let mut components = Vec::new();
    for start in 0..norm.len() {
        if seen[start] || !on(start) {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            let (r, c) = (i / nx, i % nx);
            let mut push = |j: usize| {
                if !seen[j] && on(j) {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if c > 0 {
                push(i - 1);
            }
            if c + 1 < nx {
                push(i + 1);
            }
            if r > 0 {
                push(i - nx);
            }
            if r + 1 < ny {
                push(i + nx);
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// Pearson correlation of two maps over unmasked points.
pub fn pearson(a: &IndicatorMap, b: &IndicatorMap) -> Result<f64> {
    if a.grid.len() != b.grid.len() {
        return Err(Error::ShapeMismatch("maps on different grids".into()));
    }
    let idx = a.grid.active_indices();
    let n = idx.len() as f64;
    let ma = idx.iter().map(|&i| a.values[i]).sum::<f64>() / n;
    let mb = idx.iter().map(|&i| b.values[i]).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &i in &idx {
        let (x, y) = (a.values[i] - ma, b.values[i] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    Ok(sab / (saa * sbb).sqrt())
}
