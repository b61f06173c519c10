//! Numerical checks of the Helmholtz–Kirchhoff identities behind passive imaging.
//!
//! With `σ = 0` the frequency-domain identity reads
//! `2i Im G_k(p, q) ≈ 2ik ∮_{|z|=R} G_k(p, z) conj(G_k(q, z)) ds(z)`,
//! and the same holds for total fields in the presence of an obstacle.

use crate::config::RunConfig;
use crate::correlation::antisymmetrize;
use crate::error::{Error, Result};
use crate::experiment::{correlation_kernel, Dataset};
use crate::geometry::{BoundaryCurve, Point};
use crate::helmholtz::{assemble_bie, green, BiePanelization};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const ERROR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    HkFree,
    HkTotal,
    HkScattered,
    HkTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: Identity,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    /// `‖LHS − RHS‖ / max(‖LHS‖, 1e−14)`.
    pub relative_error: f64,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

impl IdentityReport {
    fn new(identity: Identity, params: serde_json::Value, lhs: f64, rhs: f64, abs_error: f64) -> Self {
        Self {
            identity,
            params,
            lhs,
            rhs,
            abs_error,
            relative_error: abs_error / lhs.max(ERROR_FLOOR),
            threshold: None,
            pass: None,
        }
    }

    pub fn judge(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self.pass = Some(self.relative_error < threshold);
        self
    }
}

fn circle(radius: f64, count: usize) -> Vec<Point> {
    (0..count)
        .map(|l| {
            let t = TAU * l as f64 / count as f64;
            Point::new(radius * t.cos(), radius * t.sin())
        })
        .collect()
}

/// `2i Im G_k(p, q)` with the `p = q` limit `i/2`.
fn imaginary_green(k: f64, p: &Point, q: &Point) -> Result<Complex64> {
    if (p - q).norm() < 1e-12 {
        return Ok(Complex64::new(0.0, 0.5));
    }
    let g = green(k, p, q)?;
    Ok(g - g.conj())
}

pub fn check_hk_free(k: f64, p: &Point, q: &Point, radius: f64, count: usize) -> Result<IdentityReport> {
    let lhs = imaginary_green(k, p, q)?;
    let w = TAU * radius / count as f64;
    let mut integral = Complex64::new(0.0, 0.0);
    for z in circle(radius, count) {
        integral += green(k, p, &z)? * green(k, q, &z)?.conj();
    }
    let rhs = Complex64::new(0.0, 2.0 * k) * integral * w;
    Ok(IdentityReport::new(
        Identity::HkFree,
        serde_json::json!({"k": k, "p": [p.x, p.y], "q": [q.x, q.y], "R": radius, "L": count}),
        lhs.norm(),
        rhs.norm(),
        (lhs - rhs).norm(),
    ))
}

/// Total-field identity and its scattered-field difference form.
pub fn check_hk_total(
    k: f64,
    p: &Point,
    q: &Point,
    obstacles: &[BoundaryCurve],
    radius: f64,
    count: usize,
    nodes: usize,
) -> Result<Vec<IdentityReport>> {
    let bie = assemble_bie(obstacles, k, nodes)?;
    hk_total_with(&bie, k, p, q, obstacles.len(), radius, count)
}

fn hk_total_with(
    bie: &BiePanelization,
    k: f64,
    p: &Point,
    q: &Point,
    obstacles: usize,
    radius: f64,
    count: usize,
) -> Result<Vec<IdentityReport>> {
    let zs = circle(radius, count);
    let mut points = zs.clone();
    points.push(*q);
    // Scattered fields at p and q from every z (and from q for the left side).
    let scat = bie.scattered_responses(&points, &[*p, *q])?;
    let w = TAU * radius / count as f64;
    let mut total_int = Complex64::new(0.0, 0.0);
    let mut free_int = Complex64::new(0.0, 0.0);
    for (l, z) in zs.iter().enumerate() {
        let (gp, gq) = (green(k, p, z)?, green(k, q, z)?);
        let up = gp + scat[(0, l)];
        let uq = gq + scat[(1, l)];
        total_int += up * uq.conj();
        free_int += gp * gq.conj();
    }
    let factor = Complex64::new(0.0, 2.0 * k) * w;
    let u_pq = green(k, p, q)? + scat[(0, count)];
    let s_pq = scat[(0, count)];
    let lhs_total = u_pq - u_pq.conj();
    let rhs_total = factor * total_int;
    let lhs_scat = s_pq - s_pq.conj();
    let rhs_scat = factor * (total_int - free_int);
    let params = serde_json::json!({"k": k, "p": [p.x, p.y], "q": [q.x, q.y], "R": radius, "L": count, "obstacles": obstacles});
    Ok(vec![
        IdentityReport::new(
            Identity::HkTotal,
            params.clone(),
            lhs_total.norm(),
            rhs_total.norm(),
            (lhs_total - rhs_total).norm(),
        ),
        IdentityReport::new(
            Identity::HkScattered,
            params,
            lhs_scat.norm(),
            rhs_scat.norm(),
            (lhs_scat - rhs_scat).norm(),
        ),
    ])
}

/// Passive kernel `c` against `u^scat_χ̃(t) − u^scat_χ̃(−t)` over all lags and
/// pairs, relative L². In free space the right side vanishes; the report's
/// `params.kernel_to_incident` then carries `‖c‖_∞ / ‖Φ_χ̃‖_∞`.
pub fn check_hk_time(cfg: &RunConfig, data: &Dataset) -> Result<IdentityReport> {
    let kernel = correlation_kernel(cfg, data, 0.0)?;
    let anti = antisymmetrize(&data.active.values);
    if anti.dim() != kernel.values.dim() {
        return Err(Error::GridMismatch(format!(
            "kernel {:?} vs active {:?}",
            kernel.values.dim(),
            anti.dim()
        )));
    }
    let l2 = |it: &mut dyn Iterator<Item = f64>| it.map(|v| v * v).sum::<f64>().sqrt();
    let diff = l2(&mut kernel.values.iter().zip(anti.iter()).map(|(a, b)| a - b));
    let rhs = l2(&mut kernel.values.iter().copied());
    let lhs = l2(&mut anti.iter().copied());
    let cmax = kernel.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let phimax = data.incident.max_abs();
    Ok(IdentityReport::new(
        Identity::HkTime,
        serde_json::json!({
            "R": data.sources.radius,
            "L": data.sources.len(),
            "beta": data.sources.beta,
            "seed": data.sources.seed,
            "obstacles": data.scene.obstacles.len(),
            "kernel_max": cmax,
            "incident_max": phimax,
            "kernel_to_incident": cmax / phimax.max(ERROR_FLOOR),
        }),
        lhs,
        rhs,
        diff,
    ))
}

/// Regression thresholds checked into the repository.
#[derive(Debug, Clone, Deserialize)]
pub struct Baselines {
    pub hk_free: f64,
    pub hk_total: f64,
    pub hk_time: f64,
    pub free_kernel_ratio: f64,
    pub c_vs_i_frobenius: f64,
    pub regression_margin: f64,
}

impl Baselines {
    pub fn bundled() -> Self {
        serde_json::from_str(include_str!("../data/baselines.json")).expect("bundled baselines parse")
    }
}

/// Parameters of the `validate` suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub wavenumbers: Vec<f64>,
    pub separations: Vec<f64>,
    /// Radii for the decay check of the free-space identity.
    pub radii: Vec<f64>,
    pub decay_wavenumber: f64,
    pub quadrature: usize,
    /// Also simulate the configured scene and check the time-domain identity.
    pub time_domain: bool,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            wavenumbers: vec![2.0, 4.0, 6.0, 8.0],
            separations: vec![1.0, 2.0],
            radii: vec![10.0, 20.0, 40.0, 80.0],
            decay_wavenumber: 4.0,
            quadrature: 512,
            time_domain: true,
        }
    }
}

/// Run the identity suite. Reports come back in a fixed order: free-space at
/// the configured source radius, the decay sequence, total/scattered at the
/// scene, then the time-domain check.
pub fn run_suite(cfg: &RunConfig, vcfg: &ValidationConfig, baselines: &Baselines) -> Result<Vec<IdentityReport>> {
    let scene = cfg.scene()?;
    let c = scene.ring_center;
    let radius = cfg.sources.radius;
    let mut out = Vec::new();
    for &k in &vcfg.wavenumbers {
        for &d in &vcfg.separations {
            let p = c - Point::new(d / 2.0, 0.0);
            let q = c + Point::new(d / 2.0, 0.0);
            out.push(check_hk_free(k, &p, &q, radius, vcfg.quadrature)?.judge(baselines.hk_free));
        }
    }
    let p = c - Point::new(0.5, 0.0);
    let q = c + Point::new(0.5, 0.0);
    let mut previous = f64::INFINITY;
    for &r in &vcfg.radii {
        let mut rep = check_hk_free(vcfg.decay_wavenumber, &p, &q, r, vcfg.quadrature)?;
        rep.threshold = Some(previous);
        rep.pass = Some(rep.relative_error < previous);
        previous = rep.relative_error;
        out.push(rep);
    }
    if !scene.obstacles.is_empty() {
        let (p, q) = (scene.receivers[0], scene.sources[0]);
        for &k in &vcfg.wavenumbers {
            let reps = check_hk_total(k, &p, &q, &scene.obstacles, radius, vcfg.quadrature, cfg.solver.nodes)?;
            for rep in reps {
                let t = match rep.identity {
                    Identity::HkTotal => baselines.hk_total,
                    _ => f64::INFINITY,
                };
                out.push(if t.is_finite() { rep.judge(t) } else { rep });
            }
        }
    }
    if vcfg.time_domain {
        let data = crate::experiment::simulate(cfg)?;
        let rep = check_hk_time(cfg, &data)?;
        let rep = if scene.obstacles.is_empty() {
            let ratio = rep.params["kernel_to_incident"].as_f64().unwrap_or(f64::INFINITY);
            let mut r = rep;
            r.threshold = Some(baselines.free_kernel_ratio);
            r.pass = Some(ratio < baselines.free_kernel_ratio);
            r
        } else {
            rep.judge(baselines.hk_time)
        };
        out.push(rep);
    }
    Ok(out)
}
