//! Obstacle boundaries, measurement and source arrays, sampling grids.

use crate::error::{Error, Result};
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub type Point = Vector2<f64>;

/// Vertices used for point-location and distance queries.
const POLYGON_VERTICES: usize = 2048;

/// A closed, counterclockwise-oriented, smooth boundary `θ ↦ x(θ)`, `θ ∈ [0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum BoundaryCurve {
    /// `(cx + ax cos θ, cy + ay sin θ)`.
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    /// `(cx + a cos θ + b cos 2θ, cy + c sin θ)`.
    Kite {
        center: [f64; 2],
        a: f64,
        b: f64,
        c: f64,
    },
    Disk { center: [f64; 2], radius: f64 },
}

/// Builds one of the shipped shapes.
///
/// `ellipse` and `kite` accept an empty parameter list (the reference shapes
/// centered at `(1, 1)`), or a center, or a center plus shape coefficients.
/// `disk` requires `[cx, cy, r]`.
pub fn make_shape(name: &str, params: &[f64]) -> Result<BoundaryCurve> {
    let center = |p: &[f64]| -> [f64; 2] {
        if p.len() >= 2 {
            [p[0], p[1]]
        } else {
            [1.0, 1.0]
        }
    };
    let curve = match name {
        "ellipse" => {
            let semi_axes = match params.len() {
                0 | 2 => [0.25, 0.5],
                4 => [params[2], params[3]],
                n => {
                    return Err(Error::InvalidParameter(format!(
                        "ellipse takes 0, 2 or 4 parameters, got {n}"
                    )))
                }
            };
            BoundaryCurve::Ellipse {
                center: center(params),
                semi_axes,
            }
        }
        "kite" => {
            let (a, b, c) = match params.len() {
                0 | 2 => (0.25, 0.25, 0.5),
                5 => (params[2], params[3], params[4]),
                n => {
                    return Err(Error::InvalidParameter(format!(
                        "kite takes 0, 2 or 5 parameters, got {n}"
                    )))
                }
            };
            BoundaryCurve::Kite {
                center: center(params),
                a,
                b,
                c,
            }
        }
        "disk" => {
            if params.len() != 3 {
                return Err(Error::InvalidParameter(
                    "disk takes [cx, cy, radius]".to_string(),
                ));
            }
            BoundaryCurve::Disk {
                center: [params[0], params[1]],
                radius: params[2],
            }
        }
        other => return Err(Error::UnknownShape(other.to_string())),
    };
    curve.validate()?;
    Ok(curve)
}

impl BoundaryCurve {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BoundaryCurve::Ellipse { semi_axes, .. } => semi_axes[0] > 0.0 && semi_axes[1] > 0.0,
            // |x'| > 0 needs c > 0 and a kite that does not fold over itself.
            BoundaryCurve::Kite { a, b, c, .. } => a > 0.0 && c > 0.0 && b >= 0.0,
            BoundaryCurve::Disk { radius, .. } => radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "non-positive size in {self:?}"
            )))
        }
    }

    pub fn center(&self) -> Point {
        let c = match *self {
            BoundaryCurve::Ellipse { center, .. }
            | BoundaryCurve::Kite { center, .. }
            | BoundaryCurve::Disk { center, .. } => center,
        };
        Point::new(c[0], c[1])
    }

    pub fn point(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        match *self {
            BoundaryCurve::Ellipse { center, semi_axes } => {
                Point::new(center[0] + semi_axes[0] * c, center[1] + semi_axes[1] * s)
            }
            BoundaryCurve::Kite { center, a, b, c: cy } => Point::new(
                center[0] + a * c + b * (2.0 * t).cos(),
                center[1] + cy * s,
            ),
            BoundaryCurve::Disk { center, radius } => {
                Point::new(center[0] + radius * c, center[1] + radius * s)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        match *self {
            BoundaryCurve::Ellipse { semi_axes, .. } => {
                Point::new(-semi_axes[0] * s, semi_axes[1] * c)
            }
            BoundaryCurve::Kite { a, b, c: cy, .. } => {
                Point::new(-a * s - 2.0 * b * (2.0 * t).sin(), cy * c)
            }
            BoundaryCurve::Disk { radius, .. } => Point::new(-radius * s, radius * c),
        }
    }

    pub fn second_derivative(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        match *self {
            BoundaryCurve::Ellipse { semi_axes, .. } => {
                Point::new(-semi_axes[0] * c, -semi_axes[1] * s)
            }
            BoundaryCurve::Kite { a, b, c: cy, .. } => {
                Point::new(-a * c - 4.0 * b * (2.0 * t).cos(), -cy * s)
            }
            BoundaryCurve::Disk { radius, .. } => Point::new(-radius * c, -radius * s),
        }
    }

    /// Always true: every shipped shape is a closed curve.
    pub fn is_closed(&self) -> bool {
        true
    }

    pub fn polygon(&self, n: usize) -> Vec<Point> {
        (0..n).map(|i| self.point(TAU * i as f64 / n as f64)).collect()
    }

    /// Point-in-curve test on a fine polygonal approximation.
    pub fn contains(&self, p: &Point) -> bool {
        polygon_contains(&self.polygon(POLYGON_VERTICES), p)
    }

    /// Distance from `p` to the curve (polygonal approximation).
    pub fn distance(&self, p: &Point) -> f64 {
        polygon_distance(&self.polygon(POLYGON_VERTICES), p)
    }
}

fn polygon_contains(poly: &[Point], p: &Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_distance(poly: &[Point], p: &Point) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let ab = b - a;
            let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            (a + ab * s - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Obstacles plus the measurement and sampling geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub obstacles: Vec<BoundaryCurve>,
    pub ring_center: [f64; 2],
    /// One or more concentric measurement circles.
    pub ring_radii: Vec<f64>,
    /// Equiangular points per measurement circle, split alternately into
    /// receivers and source-test points.
    pub points_per_ring: usize,
    /// Open angular interval (about `ring_center`) of retained points.
    pub aperture: Option<[f64; 2]>,
    pub sampling_center: [f64; 2],
    pub sampling_radius: f64,
    pub sampling_spacing: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            obstacles: vec![BoundaryCurve::Ellipse {
                center: [1.0, 1.0],
                semi_axes: [0.25, 0.5],
            }],
            ring_center: [1.0, 1.0],
            ring_radii: vec![2.5],
            points_per_ring: 30,
            aperture: None,
            sampling_center: [1.0, 1.0],
            sampling_radius: 2.2,
            sampling_spacing: 0.04,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub obstacles: Vec<BoundaryCurve>,
    pub ring_center: Point,
    pub ring_radii: Vec<f64>,
    pub points_per_ring: usize,
    /// `x_j`.
    pub receivers: Vec<Point>,
    /// `y_m`.
    pub sources: Vec<Point>,
    pub sampling_center: Point,
    pub sampling_radius: f64,
    pub sampling_spacing: f64,
    pub aperture: Option<[f64; 2]>,
}

/// Angle of the `i`-th (zero-based) of `count` equiangular points, starting at `−π`.
pub fn measurement_angle(i: usize, count: usize) -> f64 {
    -PI + TAU * i as f64 / count as f64
}

pub fn build_scene(cfg: &SceneConfig) -> Result<Scene> {
    if cfg.ring_radii.is_empty() || cfg.ring_radii.iter().any(|&r| r <= 0.0) {
        return Err(Error::InvalidParameter(
            "measurement radii must be positive and non-empty".into(),
        ));
    }
    if cfg.points_per_ring < 2 || cfg.points_per_ring % 2 != 0 {
        return Err(Error::InvalidParameter(
            "points per ring must be even and at least 2".into(),
        ));
    }
    if cfg.sampling_radius <= 0.0 || cfg.sampling_spacing <= 0.0 {
        return Err(Error::InvalidParameter(
            "sampling radius and spacing must be positive".into(),
        ));
    }
    if let Some([a, b]) = cfg.aperture {
        if !(a < b && a >= -PI && b <= PI) {
            return Err(Error::InvalidParameter(format!(
                "aperture ({a}, {b}) must be an increasing interval inside [-π, π]"
            )));
        }
    }
    for obstacle in &cfg.obstacles {
        obstacle.validate()?;
    }

    let center = Point::new(cfg.ring_center[0], cfg.ring_center[1]);
    for (index, obstacle) in cfg.obstacles.iter().enumerate() {
        let dists: Vec<f64> = obstacle
            .polygon(POLYGON_VERTICES)
            .iter()
            .map(|v| (v - center).norm())
            .collect();
        let lo = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = dists.iter().cloned().fold(0.0, f64::max);
        if cfg.ring_radii.iter().any(|&r| lo <= r && r <= hi) {
            return Err(Error::ObstacleIntersectsMeasurement { index });
        }
    }

    let count = cfg.points_per_ring;
    let keep = |angle: f64| match cfg.aperture {
        None => true,
        Some([a, b]) => angle > a + 1e-9 && angle < b - 1e-9,
    };
    let mut receivers = Vec::new();
    let mut sources = Vec::new();
    for &radius in &cfg.ring_radii {
        for i in 0..count {
            let angle = measurement_angle(i, count);
            if !keep(angle) {
                continue;
            }
            let p = center + radius * Point::new(angle.cos(), angle.sin());
            // 1-based a_{2j} are receivers and a_{2m-1} source-test points.
            if i % 2 == 1 {
                receivers.push(p);
            } else {
                sources.push(p);
            }
        }
    }
    for p in receivers.iter().chain(&sources) {
        if cfg.obstacles.iter().any(|o| o.contains(p)) {
            return Err(Error::PointInsideObstacle { x: p.x, y: p.y });
        }
    }
    if receivers.is_empty() || sources.is_empty() {
        return Err(Error::InvalidParameter(
            "aperture leaves no receivers or no source-test points".into(),
        ));
    }

    Ok(Scene {
        obstacles: cfg.obstacles.clone(),
        ring_center: center,
        ring_radii: cfg.ring_radii.clone(),
        points_per_ring: cfg.points_per_ring,
        receivers,
        sources,
        sampling_center: Point::new(cfg.sampling_center[0], cfg.sampling_center[1]),
        sampling_radius: cfg.sampling_radius,
        sampling_spacing: cfg.sampling_spacing,
        aperture: cfg.aperture,
    })
}

impl Scene {
    /// Number of receivers `J`.
    pub fn j(&self) -> usize {
        self.receivers.len()
    }

    /// Number of source-test points `M`.
    pub fn m(&self) -> usize {
        self.sources.len()
    }

    /// Receivers followed by source-test points.
    pub fn ring_points(&self) -> Vec<Point> {
        self.receivers.iter().chain(&self.sources).copied().collect()
    }

    pub fn inside_obstacle(&self, p: &Point) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Distance to the nearest obstacle boundary (infinite in free space).
    pub fn obstacle_distance(&self, p: &Point) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Arclength weight `Δy` between neighbouring source-test points
    /// (mean over the rings).
    pub fn source_spacing(&self) -> f64 {
        let mean_radius = self.ring_radii.iter().sum::<f64>() / self.ring_radii.len() as f64;
        TAU * mean_radius / (self.points_per_ring / 2) as f64
    }

    pub fn sampling_grid(&self) -> SamplingGrid {
        SamplingGrid::new(self.sampling_center, self.sampling_radius, self.sampling_spacing)
    }

    /// Checks that all obstacles and ring points lie strictly inside the source circle.
    pub fn check_source_radius(&self, radius: f64) -> Result<()> {
        let far = self
            .obstacles
            .iter()
            .flat_map(|o| o.polygon(256))
            .chain(self.ring_points())
            .map(|p| p.norm())
            .fold(0.0, f64::max);
        if far >= radius {
            return Err(Error::InvalidParameter(format!(
                "source radius {radius} does not enclose the scene (extent {far:.3})"
            )));
        }
        Ok(())
    }
}

/// Regular lattice over the sampling disk's bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub center: Point,
    pub radius: f64,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    /// Row-major (`iy * nx + ix`); true for points strictly inside the disk.
    pub mask: Vec<bool>,
}

impl SamplingGrid {
    pub fn new(center: Point, radius: f64, spacing: f64) -> Self {
        let n = (2.0 * radius / spacing + 1e-9).floor() as usize + 1;
        let span = (n - 1) as f64 * spacing;
        let origin = center - Point::new(span / 2.0, span / 2.0);
        let mut mask = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                let p = origin + Point::new(ix as f64 * spacing, iy as f64 * spacing);
                mask.push((p - center).norm() < radius);
            }
        }
        Self {
            center,
            radius,
            spacing,
            nx: n,
            ny: n,
            origin,
            mask,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, index: usize) -> Point {
        let (iy, ix) = (index / self.nx, index % self.nx);
        self.origin + Point::new(ix as f64 * self.spacing, iy as f64 * self.spacing)
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i]).collect()
    }
}

/// Point sources `z_l = R e^{iθ_l}`, `θ_l = (2π/L)(l − 1 + β_l)`, `β_l ~ U[0, β]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSourceSet {
    pub radius: f64,
    pub beta: f64,
    pub seed: u64,
    pub angles: Vec<f64>,
    pub points: Vec<Point>,
}

impl RandomSourceSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn draw_sources(count: usize, radius: f64, beta: f64, seed: u64) -> Result<RandomSourceSet> {
    if count == 0 {
        return Err(Error::InvalidParameter("source count must be at least 1".into()));
    }
    if radius <= 0.0 {
        return Err(Error::InvalidParameter("source radius must be positive".into()));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "random level must lie in [0, 1], got {beta}"
        )));
    }
    // The same uniforms are scaled by β, so runs that differ only in β share jitter directions.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles: Vec<f64> = (0..count)
        .map(|l| {
            let jitter = beta * rng.gen::<f64>();
            TAU / count as f64 * (l as f64 + jitter)
        })
        .collect();
    let points = angles
        .iter()
        .map(|&t| Point::new(radius * t.cos(), radius * t.sin()))
        .collect();
    Ok(RandomSourceSet {
        radius,
        beta,
        seed,
        angles,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn shipped_shapes_at_reference_angles() {
        let e = make_shape("ellipse", &[]).unwrap();
        assert!((e.point(0.0) - Point::new(1.25, 1.0)).norm() < 1e-15);
        let k = make_shape("kite", &[]).unwrap();
        assert!((k.point(0.0) - Point::new(1.5, 1.0)).norm() < 1e-15);
        let d = make_shape("disk", &[0.25, 1.75, 1.0 / 3.0]).unwrap();
        assert!((d.point(FRAC_PI_2) - Point::new(0.25, 1.75 + 1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(make_shape("star", &[]), Err(Error::UnknownShape(_))));
        assert!(matches!(
            make_shape("disk", &[0.0, 0.0, -1.0]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(make_shape("disk", &[0.0, 0.0]).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for curve in [
            make_shape("ellipse", &[]).unwrap(),
            make_shape("kite", &[]).unwrap(),
            make_shape("disk", &[1.75, 0.25, 0.2]).unwrap(),
        ] {
            for i in 0..17 {
                let t = 0.37 * i as f64;
                let fd1 = (curve.point(t + h) - curve.point(t - h)) / (2.0 * h);
                let fd2 = (curve.derivative(t + h) - curve.derivative(t - h)) / (2.0 * h);
                assert!((fd1 - curve.derivative(t)).norm() < 1e-9);
                assert!((fd2 - curve.second_derivative(t)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn shipped_curves_are_regular() {
        for curve in [
            make_shape("ellipse", &[]).unwrap(),
            make_shape("kite", &[]).unwrap(),
            make_shape("disk", &[0.25, 1.75, 1.0 / 3.0]).unwrap(),
        ] {
            let min_speed = (0..4096)
                .map(|i| curve.derivative(TAU * i as f64 / 4096.0).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(min_speed > 0.1, "{curve:?}: {min_speed}");
            assert!((curve.point(0.3) - curve.point(0.3 + TAU)).norm() < 1e-14);
        }
    }

    #[test]
    fn full_aperture_interleaves_thirty_points() {
        let scene = build_scene(&SceneConfig::default()).unwrap();
        assert_eq!(scene.j(), 15);
        assert_eq!(scene.m(), 15);
        let mut angles: Vec<f64> = scene
            .ring_points()
            .iter()
            .map(|p| (p.y - 1.0).atan2(p.x - 1.0))
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, a) in angles.iter().enumerate() {
            let expected = measurement_angle(i, 30);
            let diff = (a - expected).rem_euclid(TAU);
            assert!(diff < 1e-12 || TAU - diff < 1e-12, "{i}: {a} vs {expected}");
        }
        for x in &scene.receivers {
            assert!(scene.sources.iter().all(|y| (x - y).norm() > 0.1));
        }
        // a_1 = angle −π is a source-test point, a_2 the first receiver.
        assert!((scene.sources[0] - Point::new(-1.5, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn limited_aperture_keeps_points_inside_the_sector() {
        let cfg = SceneConfig {
            aperture: Some([-PI / 3.0, PI / 3.0]),
            ..SceneConfig::default()
        };
        let scene = build_scene(&cfg).unwrap();
        let inside = (0..30)
            .filter(|&i| {
                let a = measurement_angle(i, 30);
                a > -PI / 3.0 + 1e-9 && a < PI / 3.0 - 1e-9
            })
            .count();
        assert_eq!(scene.j() + scene.m(), inside);
        assert_eq!(inside, 9);
    }

    #[test]
    fn free_space_scene_is_valid() {
        let cfg = SceneConfig {
            obstacles: vec![],
            ..SceneConfig::default()
        };
        let scene = build_scene(&cfg).unwrap();
        assert_eq!(scene.j(), 15);
        assert!(scene.obstacle_distance(&Point::new(1.0, 1.0)).is_infinite());
    }

    #[test]
    fn obstacle_crossing_the_ring_is_rejected() {
        let cfg = SceneConfig {
            obstacles: vec![make_shape("disk", &[3.5, 1.0, 0.5]).unwrap()],
            ..SceneConfig::default()
        };
        assert!(matches!(
            build_scene(&cfg),
            Err(Error::ObstacleIntersectsMeasurement { index: 0 })
        ));
    }

    #[test]
    fn sampling_grid_mask_is_strictly_inside() {
        let grid = SamplingGrid::new(Point::new(1.0, 1.0), 2.2, 0.04);
        assert_eq!(grid.nx, 111);
        for i in grid.active_indices() {
            assert!((grid.point(i) - grid.center).norm() < 2.2);
        }
        assert!(!grid.mask[0]);
    }

    #[test]
    fn uniform_sources_without_jitter() {
        let s = draw_sources(4, 20.0, 0.0, 7).unwrap();
        for (l, a) in s.angles.iter().enumerate() {
            assert!((a - FRAC_PI_2 * l as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn jittered_sources_stay_in_their_slots() {
        let s = draw_sources(80, 20.0, 0.1, 11).unwrap();
        assert_eq!(s.len(), 80);
        for (l, a) in s.angles.iter().enumerate() {
            let lo = TAU * l as f64 / 80.0;
            let hi = TAU * (l as f64 + 0.1) / 80.0;
            assert!(*a >= lo && *a <= hi);
        }
        let max_dev = s
            .points
            .iter()
            .map(|p| (p.norm() - 20.0).abs())
            .fold(0.0, f64::max);
        assert!(max_dev < 1e-12 * 20.0);
        assert_eq!(s, draw_sources(80, 20.0, 0.1, 11).unwrap());
        assert!(draw_sources(0, 20.0, 0.1, 1).is_err());
        assert!(draw_sources(3, 20.0, 1.5, 1).is_err());
    }

    #[test]
    fn containment_and_distance() {
        let e = make_shape("ellipse", &[]).unwrap();
        assert!(e.contains(&Point::new(1.0, 1.0)));
        assert!(!e.contains(&Point::new(1.3, 1.0)));
        assert!((e.distance(&Point::new(2.0, 1.0)) - 0.75).abs() < 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn sources_stay_in_their_sectors(count in 1usize..200, beta in 0.0f64..=1.0, seed in proptest::num::u64::ANY) {
            let set = draw_sources(count, 20.0, beta, seed).unwrap();
            let width = TAU / count as f64;
            for (l, (&a, p)) in set.angles.iter().zip(&set.points).enumerate() {
                let lo = width * l as f64;
                proptest::prop_assert!(a >= lo - 1e-12 && a <= lo + beta * width + 1e-12);
                proptest::prop_assert!((p.norm() - 20.0).abs() < 1e-12);
            }
        }
    }
}
