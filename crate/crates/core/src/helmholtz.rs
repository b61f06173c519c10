//! Exterior sound-soft scattering of a point source at one real wavenumber.
//!
//! The scattered field is the combined-field potential
//! `u = (D − iηS)ψ` with `η = max(k, 1)`, discretized by the Nyström method with
//! logarithmic splitting of the kernels (trigonometric product quadrature),
//! which converges spectrally on smooth closed curves.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Point};
use crate::special::{bessel01, bessel_j_seq, bessel_y_seq, EULER_GAMMA};
use nalgebra::{DMatrix, Dyn, LU};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Outgoing fundamental solution `G_k(x, y) = (i/4) H0^(1)(k|x − y|)`.
pub fn green(k: f64, x: &Point, y: &Point) -> Result<Complex64> {
    if k <= 0.0 {
        return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {k}")));
    }
    let r = (x - y).norm();
    if r <= 1e-14 * (1.0 + x.norm()) {
        return Err(Error::CoincidentPoints(r));
    }
    Ok(green_at_distance(k, r))
}

#[inline]
pub fn green_at_distance(k: f64, r: f64) -> Complex64 {
    let b = bessel01(k * r);
    Complex64::new(-0.25 * b.y0, 0.25 * b.j0)
}

/// Boundary-integral formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// `(½I + K − iηS)ψ = −u_inc`, uniquely solvable for every real `k`.
    CombinedField,
    /// `Sψ = −u_inc`; singular at interior Dirichlet eigenvalues. Kept for comparison.
    SingleLayer,
}

#[derive(Debug, Clone)]
struct CurveNodes {
    points: Vec<Point>,
    d1: Vec<Point>,
    d2: Vec<Point>,
    speed: Vec<f64>,
}

impl CurveNodes {
    fn sample(curve: &BoundaryCurve, n: usize, offset: f64) -> Self {
        let ts: Vec<f64> = (0..n).map(|j| offset + TAU * j as f64 / n as f64).collect();
        let d1: Vec<Point> = ts.iter().map(|&t| curve.derivative(t)).collect();
        Self {
            points: ts.iter().map(|&t| curve.point(t)).collect(),
            speed: d1.iter().map(|d| d.norm()).collect(),
            d2: ts.iter().map(|&t| curve.second_derivative(t)).collect(),
            d1,
        }
    }
}

/// Geometry shared by a panelization and the solves built from it.
#[derive(Debug)]
struct BieGeometry {
    curves: Vec<BoundaryCurve>,
    nodes: Vec<CurveNodes>,
    n: usize,
    k: f64,
    eta: f64,
    formulation: Formulation,
    /// `R_d` for node-index difference `d` (mod n).
    log_weights: Vec<f64>,
    /// `ln(4 sin²(π d / n))`, `d ≠ 0`.
    log_kernel: Vec<f64>,
}

/// Weights of `∫_0^{2π} ln(4 sin²((t − τ)/2)) f(τ) dτ ≈ Σ_j R_j(t) f(τ_j)` for
/// `m` equispaced nodes with `τ_j − t = 2πj/m`.
fn log_quadrature_weights(m: usize) -> Vec<f64> {
    let half = m / 2;
    let hf = half as f64;
    (0..m)
        .map(|d| {
            let s = PI * d as f64 / hf;
            let sum: f64 = (1..half).map(|q| (q as f64 * s).cos() / q as f64).sum();
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / hf * sum - PI / (hf * hf) * sign
        })
        .collect()
}

/// Split kernel pieces `(K1, K2)` with `K = K1 ln(4 sin²((t−τ)/2)) + K2`,
/// where the equation reads `ψ − ∫ K ψ = g`.
struct KernelParts {
    k1: Complex64,
    k2: Complex64,
}

impl BieGeometry {
    /// Kernel at target `(x, dx, ddx, speed_t)` and source node data, on the same curve.
    #[allow(clippy::too_many_arguments)]
    fn same_curve_kernel(
        &self,
        x: &Point,
        dx: &Point,
        ddx: &Point,
        y: &Point,
        dy: &Point,
        speed_y: f64,
        log_kernel: Option<f64>,
    ) -> KernelParts {
        let (k, eta) = (self.k, self.eta);
        let (layer_d, layer_s) = match self.formulation {
            Formulation::CombinedField => (1.0, Complex64::new(0.0, eta)),
            // Sψ = −u: −∫(−M)ψ... scaled so the identity term drops.
            Formulation::SingleLayer => (0.0, Complex64::new(1.0, 0.0)),
        };
        match log_kernel {
            None => {
                let speed = dx.norm();
                let l2 = (dx.x * ddx.y - dx.y * ddx.x) / (TAU * speed * speed);
                let m1 = -speed / TAU;
                let m2 = (0.5 * I - EULER_GAMMA / PI - (k * speed / 2.0).ln() / PI) * speed;
                KernelParts {
                    k1: layer_s * m1,
                    k2: layer_d * l2 + layer_s * m2,
                }
            }
            Some(lg) => {
                let d = y - x;
                let r = d.norm();
                let nrm = dy.y * d.x - dy.x * d.y;
                let b = bessel01(k * r);
                let h0 = Complex64::new(b.j0, b.y0);
                let h1 = Complex64::new(b.j1, b.y1);
                let l = 0.5 * I * k * nrm * h1 / r;
                let l1 = -k / TAU * nrm * b.j1 / r;
                let m = 0.5 * I * h0 * speed_y;
                let m1 = -b.j0 * speed_y / TAU;
                let k1 = layer_d * l1 + layer_s * m1;
                let full = layer_d * l + layer_s * m;
                KernelParts { k1, k2: full - k1 * lg }
            }
        }
    }

    /// Smooth kernel `L + iηM` between distinct curves.
    fn cross_kernel(&self, x: &Point, y: &Point, dy: &Point, speed_y: f64) -> Complex64 {
        let d = y - x;
        let r = d.norm();
        let nrm = dy.y * d.x - dy.x * d.y;
        let b = bessel01(self.k * r);
        let h0 = Complex64::new(b.j0, b.y0);
        let h1 = Complex64::new(b.j1, b.y1);
        let m = 0.5 * I * h0 * speed_y;
        match self.formulation {
            Formulation::CombinedField => 0.5 * I * self.k * nrm * h1 / r + I * self.eta * m,
            Formulation::SingleLayer => m,
        }
    }

    fn total_nodes(&self) -> usize {
        self.nodes.len() * self.n
    }

    /// Representation kernel at exterior `x` for node `j` of curve `c`,
    /// including the trapezoid weight.
    fn potential_row(&self, x: &Point, out: &mut [Complex64]) -> Result<()> {
        let w = TAU / self.n as f64;
        for (c, nodes) in self.nodes.iter().enumerate() {
            for j in 0..self.n {
                let d = nodes.points[j] - x;
                let r = d.norm();
                if r < 1e-12 {
                    return Err(Error::CoincidentPoints(r));
                }
                let b = bessel01(self.k * r);
                let h0 = Complex64::new(b.j0, b.y0);
                let h1 = Complex64::new(b.j1, b.y1);
                let dy = nodes.d1[j];
                let nrm = dy.y * d.x - dy.x * d.y;
                let single = 0.25 * I * h0 * nodes.speed[j];
                let value = match self.formulation {
                    Formulation::CombinedField => {
                        -0.25 * I * self.k * h1 * nrm / r - I * self.eta * single
                    }
                    Formulation::SingleLayer => single,
                };
                out[c * self.n + j] = w * value;
            }
        }
        Ok(())
    }

    fn check_exterior(&self, p: &Point) -> Result<()> {
        if self.curves.iter().any(|c| c.contains(p)) {
            return Err(Error::PointInsideObstacle { x: p.x, y: p.y });
        }
        Ok(())
    }
}

/// Factorized Nyström system for one wavenumber.
pub struct BiePanelization {
    geometry: Arc<BieGeometry>,
    matrix: DMatrix<Complex64>,
    lu: Option<LU<Complex64, Dyn, Dyn>>,
    /// `max |u_ii| / min |u_ii|` of the LU factor.
    pub pivot_condition: f64,
}

impl std::fmt::Debug for BiePanelization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BiePanelization")
            .field("k", &self.geometry.k)
            .field("n", &self.geometry.n)
            .field("curves", &self.geometry.curves.len())
            .field("pivot_condition", &self.pivot_condition)
            .finish()
    }
}

pub fn assemble_bie(curves: &[BoundaryCurve], k: f64, n: usize) -> Result<BiePanelization> {
    assemble_bie_with(curves, k, n, Formulation::CombinedField)
}

pub fn assemble_bie_with(
    curves: &[BoundaryCurve],
    k: f64,
    n: usize,
    formulation: Formulation,
) -> Result<BiePanelization> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "node count per curve must be even and at least 4, got {n}"
        )));
    }
    if k <= 0.0 {
        return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {k}")));
    }
    let nodes: Vec<CurveNodes> = curves.iter().map(|c| CurveNodes::sample(c, n, 0.0)).collect();
    let log_kernel = (0..n)
        .map(|d| {
            if d == 0 {
                0.0
            } else {
                (4.0 * (PI * d as f64 / n as f64).sin().powi(2)).ln()
            }
        })
        .collect();
    let geometry = BieGeometry {
        curves: curves.to_vec(),
        nodes,
        n,
        k,
        eta: k.max(1.0),
        formulation,
        log_weights: log_quadrature_weights(n),
        log_kernel,
    };
    let size = geometry.total_nodes();
    let w = TAU / n as f64;
    let identity = match formulation {
        Formulation::CombinedField => 1.0,
        Formulation::SingleLayer => 0.0,
    };
    let mut matrix = DMatrix::<Complex64>::zeros(size, size);
    for (a, na) in geometry.nodes.iter().enumerate() {
        for (b, nb) in geometry.nodes.iter().enumerate() {
            for i in 0..n {
                let row = a * n + i;
                for j in 0..n {
                    let col = b * n + j;
                    let value = if a == b {
                        let d = (i + n - j) % n;
                        let parts = geometry.same_curve_kernel(
                            &na.points[i],
                            &na.d1[i],
                            &na.d2[i],
                            &na.points[j],
                            &na.d1[j],
                            na.speed[j],
                            (d != 0).then(|| geometry.log_kernel[d]),
                        );
                        let delta = if i == j { identity } else { 0.0 };
                        delta - geometry.log_weights[d] * parts.k1 - w * parts.k2
                    } else {
                        -w * geometry.cross_kernel(&na.points[i], &nb.points[j], &nb.d1[j], nb.speed[j])
                    };
                    matrix[(row, col)] = value.into();
                }
            }
        }
    }
    let (lu, pivot_condition) = if size == 0 {
        (None, 1.0)
    } else {
        let lu = matrix.clone().lu();
        let u = lu.u();
        let pivots: Vec<f64> = (0..size).map(|i| u[(i, i)].norm()).collect();
        let hi = pivots.iter().cloned().fold(0.0, f64::max);
        let lo = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !cond.is_finite() || cond > 1e14 {
            return Err(Error::SingularSystem { k, condition: cond });
        }
        (Some(lu), cond)
    };
    Ok(BiePanelization {
        geometry: Arc::new(geometry),
        matrix,
        lu,
        pivot_condition,
    })
}

impl BiePanelization {
    pub fn k(&self) -> f64 {
        self.geometry.k
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Exact 1-norm condition number via the explicit inverse. Diagnostic only.
    pub fn condition_number(&self) -> f64 {
        let Some(lu) = &self.lu else { return 1.0 };
        let Some(inv) = lu.try_inverse() else {
            return f64::INFINITY;
        };
        let norm1 = |m: &DMatrix<Complex64>| {
            m.column_iter()
                .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        norm1(&self.matrix) * norm1(&inv)
    }

    fn solve_densities(&self, sources: &[Point]) -> Result<DMatrix<Complex64>> {
        let g = &self.geometry;
        let size = g.total_nodes();
        for y in sources {
            g.check_exterior(y)?;
        }
        let mut rhs = DMatrix::<Complex64>::zeros(size, sources.len());
        for (s, y) in sources.iter().enumerate() {
            for (c, nodes) in g.nodes.iter().enumerate() {
                for j in 0..g.n {
                    rhs[(c * g.n + j, s)] = -2.0 * green(g.k, &nodes.points[j], y)?;
                }
            }
        }
        match &self.lu {
            None => Ok(rhs),
            Some(lu) => lu.solve(&rhs).ok_or(Error::SingularSystem {
                k: g.k,
                condition: self.pivot_condition,
            }),
        }
    }

    pub fn solve_point_source(&self, y: &Point) -> Result<FrequencySolve> {
        let density = self.solve_densities(std::slice::from_ref(y))?;
        Ok(FrequencySolve {
            source: *y,
            density: density.column(0).iter().copied().collect(),
            geometry: Arc::clone(&self.geometry),
        })
    }

    /// Scattered field `û_scat(k, x_r; y_s)` for all receiver/source pairs,
    /// indexed `[receiver, source]`.
    pub fn scattered_responses(&self, sources: &[Point], receivers: &[Point]) -> Result<Array2<Complex64>> {
        let g = &self.geometry;
        let size = g.total_nodes();
        let mut out = Array2::<Complex64>::zeros((receivers.len(), sources.len()));
        if size == 0 {
            return Ok(out);
        }
        for x in receivers {
            g.check_exterior(x)?;
        }
        let density = self.solve_densities(sources)?;
        let mut row = vec![Complex64::new(0.0, 0.0); size];
        for (r, x) in receivers.iter().enumerate() {
            g.potential_row(x, &mut row)?;
            for s in 0..sources.len() {
                let col = density.column(s);
                out[(r, s)] = row.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }
}

/// Density for one point source, with evaluators of the resulting fields.
#[derive(Debug, Clone)]
pub struct FrequencySolve {
    pub source: Point,
    density: Vec<Complex64>,
    geometry: Arc<BieGeometry>,
}

impl FrequencySolve {
    pub fn k(&self) -> f64 {
        self.geometry.k
    }

    pub fn density(&self) -> &[Complex64] {
        &self.density
    }

    pub fn scattered(&self, x: &Point) -> Result<Complex64> {
        let g = &self.geometry;
        if g.nodes.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        g.check_exterior(x)?;
        let mut row = vec![Complex64::new(0.0, 0.0); g.total_nodes()];
        g.potential_row(x, &mut row)?;
        Ok(row.iter().zip(&self.density).map(|(a, b)| a * b).sum())
    }

    pub fn total(&self, x: &Point) -> Result<Complex64> {
        Ok(self.scattered(x)? + green(self.k(), x, &self.source)?)
    }

    /// Trace of the scattered field at `x(t)` on curve `curve`, from the
    /// trigonometric interpolant of the density and a product quadrature on
    /// `refine × n` nodes aligned with `t`; independent of the collocation nodes.
    pub fn boundary_trace(&self, curve: usize, t: f64, refine: usize) -> Result<Complex64> {
        let g = &self.geometry;
        if g.formulation != Formulation::CombinedField {
            return Err(Error::InvalidParameter(
                "boundary trace is only implemented for the combined-field formulation".into(),
            ));
        }
        let c = g.curves.get(curve).ok_or_else(|| {
            Error::InvalidParameter(format!("curve index {curve} out of range"))
        })?;
        let n = g.n;
        let m = refine.max(1) * n;
        let fine = CurveNodes::sample(c, m, t);
        let weights = log_quadrature_weights(m);
        let local = &self.density[curve * n..(curve + 1) * n];
        let psi_fine: Vec<Complex64> = (0..m)
            .map(|j| trig_interpolate(local, t + TAU * j as f64 / m as f64))
            .collect();
        let (x, dx, ddx) = (fine.points[0], fine.d1[0], fine.d2[0]);
        let mut integral = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let lg = (j != 0).then(|| (4.0 * (PI * j as f64 / m as f64).sin().powi(2)).ln());
            let parts =
                g.same_curve_kernel(&x, &dx, &ddx, &fine.points[j], &fine.d1[j], fine.speed[j], lg);
            integral += (weights[j] * parts.k1 + TAU / m as f64 * parts.k2) * psi_fine[j];
        }
        for (b, nb) in g.nodes.iter().enumerate() {
            if b == curve {
                continue;
            }
            for j in 0..n {
                integral += TAU / n as f64
                    * g.cross_kernel(&x, &nb.points[j], &nb.d1[j], nb.speed[j])
                    * self.density[b * n + j];
            }
        }
        Ok(0.5 * (psi_fine[0] - integral))
    }
}

/// Trigonometric interpolant of equispaced samples (even count) at `t`.
fn trig_interpolate(samples: &[Complex64], t: f64) -> Complex64 {
    let n = samples.len();
    let half = n / 2;
    samples
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let s = t - TAU * j as f64 / n as f64;
            let mut kernel = 1.0 + (half as f64 * s).cos();
            for q in 1..half {
                kernel += 2.0 * (q as f64 * s).cos();
            }
            v * (kernel / n as f64)
        })
        .sum()
}

/// Separation-of-variables scattered field of a sound-soft disk:
/// `−(i/4) Σ_n J_n(ka)/H_n(ka) · H_n(k r_x) H_n(k r_y) e^{in(φ_x − φ_y)}`.
pub fn disk_oracle(center: &Point, radius: f64, k: f64, x: &Point, y: &Point) -> Result<Complex64> {
    const MAX_TERMS: usize = 200;
    let (dx, dy) = (x - center, y - center);
    let (rx, ry) = (dx.norm(), dy.norm());
    if rx < radius * (1.0 - 1e-12) {
        return Err(Error::PointInsideObstacle { x: x.x, y: x.y });
    }
    if ry < radius * (1.0 - 1e-12) {
        return Err(Error::PointInsideObstacle { x: y.x, y: y.y });
    }
    let dphi = dx.y.atan2(dx.x) - dy.y.atan2(dy.x);
    let nmax = ((k * rx.max(ry)).ceil() as usize + 60).min(MAX_TERMS);
    let ja = bessel_j_seq(nmax, k * radius);
    let ya = bessel_y_seq(nmax, k * radius);
    let (jx, yx) = (bessel_j_seq(nmax, k * rx), bessel_y_seq(nmax, k * rx));
    let (jy, yy) = (bessel_j_seq(nmax, k * ry), bessel_y_seq(nmax, k * ry));
    let floor = (k * rx.max(ry)).ceil() as usize;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut small = 0;
    for n in 0..=nmax {
        let ha = Complex64::new(ja[n], ya[n]);
        let hx = Complex64::new(jx[n], yx[n]);
        let hy = Complex64::new(jy[n], yy[n]);
        let mult = if n == 0 { 1.0 } else { 2.0 };
        let term = mult * (ja[n] / ha) * hx * hy * (n as f64 * dphi).cos();
        if !term.re.is_finite() || !term.im.is_finite() {
            break;
        }
        sum += term;
        if term.norm() < 1e-14 * sum.norm() {
            small += 1;
            if small >= 3 && n > floor {
                return Ok(-0.25 * I * sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::SeriesNonConvergence(nmax + 1))
}
