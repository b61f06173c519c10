//! Discrete imaging operators and monopole test functions.
//!
//! Rows are indexed `(k + N)·J + j` (time `2kΔt` at receiver `x_j`), columns
//! `(h + N)·M + m` (time `2hΔt` at source point `y_m`), `k, h = −N..=N`.

use crate::correlation::CorrelationKernel;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::pulse::Autocorrelation;
use crate::synthesis::PulsedFieldSet;
use ndarray::{Array2, Array3, ArrayView3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    /// Passive correlation operator.
    C,
    /// Antisymmetrized active operator, `u(t) − u(−t)`.
    I,
    /// Active near-field operator.
    N,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorKind::C => "C",
            OperatorKind::I => "I",
            OperatorKind::N => "N",
        };
        f.write_str(s)
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "c" => Ok(OperatorKind::C),
            "I" | "i" => Ok(OperatorKind::I),
            "N" | "n" => Ok(OperatorKind::N),
            other => Err(Error::InvalidParameter(format!("unknown operator kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImagingOperator {
    pub kind: OperatorKind,
    pub dt: f64,
    pub dy: f64,
    pub half: usize,
    pub receivers: usize,
    pub sources: usize,
    pub matrix: Array2<f64>,
}

impl ImagingOperator {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Kernel data an operator is built from.
pub enum KernelInput<'a> {
    Passive(&'a CorrelationKernel),
    /// χ̃-pulsed scattered field on the lags `2n″Δt`.
    Active(&'a PulsedFieldSet),
}

pub fn assemble_operator(input: KernelInput<'_>, kind: OperatorKind, dy: f64) -> Result<ImagingOperator> {
    match (input, kind) {
        (KernelInput::Passive(c), OperatorKind::C) => {
            assemble_from_kernel(c.values.view(), c.lag_half, c.dt, kind, dy)
        }
        (KernelInput::Active(u), OperatorKind::N | OperatorKind::I) => {
            let (lags, _, _) = u.values.dim();
            if lags % 2 == 0 || lags < 3 {
                return Err(Error::GridMismatch("active lag grid must be symmetric".into()));
            }
            let dt = 0.5 * (u.times[1] - u.times[0]);
            let half = lags / 2;
            if kind == OperatorKind::I {
                let mut near = assemble_from_kernel(u.values.view(), half, dt, kind, dy)?;
                let flipped = assemble_from_kernel(flip_lags(&u.values).view(), half, dt, kind, dy)?;
                near.matrix -= &flipped.matrix;
                Ok(near)
            } else {
                assemble_from_kernel(u.values.view(), half, dt, kind, dy)
            }
        }
        (KernelInput::Passive(_), k) => Err(Error::MissingInput(format!(
            "operator {k} needs active scattered data"
        ))),
        (KernelInput::Active(_), _) => Err(Error::MissingInput("operator C needs passive data".into())),
    }
}

/// `entry[(k,j),(h,m)] = 2 K(2(k−h)Δt, x_j; y_m) Δt Δy`, zero when `|k − h|`
/// exceeds the kernel's lag range. `kernel` is indexed `(n′ + half, j, m)` and
/// the operator uses the same half-width.
pub fn assemble_from_kernel(
    kernel: ArrayView3<'_, f64>,
    half: usize,
    dt: f64,
    kind: OperatorKind,
    dy: f64,
) -> Result<ImagingOperator> {
    if !(dy > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("Δt and Δy must be positive, got {dt}, {dy}")));
    }
    let (lags, nj, nm) = kernel.dim();
    if lags != 2 * half + 1 {
        return Err(Error::LagGridTooShort {
            have: lags as f64,
            need: (2 * half + 1) as f64,
        });
    }
    let times = 2 * half + 1;
    let (rows, cols) = (times * nj, times * nm);
    let weight = 2.0 * dt * dy;
    let mut data = vec![0.0; rows * cols];
    data.par_chunks_mut(cols).enumerate().for_each(|(row, out)| {
        let (k, j) = (row / nj, row % nj);
        for h in 0..times {
            let lag = k as i64 - h as i64;
            if lag.unsigned_abs() as usize > half {
                continue;
            }
            let q = (lag + half as i64) as usize;
            for m in 0..nm {
                out[h * nm + m] = weight * kernel[(q, j, m)];
            }
        }
    });
    let matrix = Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok(ImagingOperator {
        kind,
        dt,
        dy,
        half,
        receivers: nj,
        sources: nm,
        matrix,
    })
}

/// Amplitude factor of the monopole test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Amplitude {
    /// `1/(4π|x − z|)`.
    #[default]
    Spherical,
    /// `1/√(8π|x − z|)`, the far-field amplitude of the 2D Green function.
    Cylindrical,
}

impl Amplitude {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            Amplitude::Spherical => 1.0 / (4.0 * PI * r),
            Amplitude::Cylindrical => 1.0 / (8.0 * PI * r).sqrt(),
        }
    }
}

/// `φ(2kΔt, x_j) = χ̃(2kΔt − τ − |x_j − z|) · a(|x_j − z|)`, indexed `(k + N, j)`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub z: Point,
    pub tau: f64,
    pub values: Array2<f64>,
}

impl TestFunction {
    /// Row-major `(k + N)·J + j`, matching operator rows.
    pub fn flatten(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }
}

pub fn test_function(
    z: &Point,
    tau: f64,
    autocorr: &Autocorrelation,
    receivers: &[Point],
    dt: f64,
    half: usize,
    amplitude: Amplitude,
) -> Result<TestFunction> {
    let dist: Vec<f64> = receivers
        .iter()
        .map(|x| {
            let r = (x - z).norm();
            if r < 1e-12 {
                Err(Error::CoincidentPoints(r))
            } else {
                Ok(r)
            }
        })
        .collect::<Result<_>>()?;
    let times = 2 * half + 1;
    let values = Array2::from_shape_fn((times, receivers.len()), |(q, j)| {
        let t = 2.0 * (q as f64 - half as f64) * dt;
        autocorr.eval(t - tau - dist[j]) * amplitude.eval(dist[j])
    });
    Ok(TestFunction { z: *z, tau, values })
}

/// Reverse the lag axis of a kernel, `K(t) → K(−t)`.
pub fn flip_lags(kernel: &Array3<f64>) -> Array3<f64> {
    let mut out = kernel.clone();
    out.invert_axis(ndarray::Axis(0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{autocorrelate, GaussianSine, LagGrid};
    use crate::synthesis::{FieldPart, Weighting};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_kernel(half: usize, nj: usize, nm: usize, seed: u64) -> Array3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array3::from_shape_fn((2 * half + 1, nj, nm), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn hand_assembled_three_by_three() {
        let (a, b, d) = (1.5, -2.0, 0.25);
        let kernel = Array3::from_shape_vec((3, 1, 1), vec![a, b, d]).unwrap();
        let (dt, dy) = (0.1, 0.7);
        let op = assemble_from_kernel(kernel.view(), 1, dt, OperatorKind::C, dy).unwrap();
        let w = 2.0 * dt * dy;
        let expected = [[b, a, 0.0], [d, b, a], [0.0, d, b]];
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(op.matrix[(r, c)], w * expected[r][c]);
            }
        }
    }

    #[test]
    fn block_toeplitz_structure() {
        let (half, nj, nm) = (4, 3, 2);
        let op = assemble_from_kernel(random_kernel(half, nj, nm, 1).view(), half, 0.1, OperatorKind::N, 1.0).unwrap();
        let times = 2 * half + 1;
        for k in 0..times - 1 {
            for h in 0..times - 1 {
                for j in 0..nj {
                    for m in 0..nm {
                        assert_eq!(
                            op.matrix[(k * nj + j, h * nm + m)],
                            op.matrix[((k + 1) * nj + j, (h + 1) * nm + m)]
                        );
                    }
                }
            }
        }
        assert_eq!(op.matrix.dim(), (times * nj, times * nm));
    }

    #[test]
    fn assembly_is_linear_and_zero_kernel_gives_zero() {
        let (half, nj, nm) = (3, 2, 2);
        let k1 = random_kernel(half, nj, nm, 2);
        let k2 = random_kernel(half, nj, nm, 3);
        let alpha = 1.75;
        let combined = &k1 * alpha + &k2;
        let a = assemble_from_kernel(combined.view(), half, 0.1, OperatorKind::N, 0.5).unwrap();
        let b1 = assemble_from_kernel(k1.view(), half, 0.1, OperatorKind::N, 0.5).unwrap();
        let b2 = assemble_from_kernel(k2.view(), half, 0.1, OperatorKind::N, 0.5).unwrap();
        let diff = &a.matrix - &(&b1.matrix * alpha + &b2.matrix);
        assert!(diff.iter().all(|v| v.abs() < 1e-15));
        let zero = Array3::zeros((2 * half + 1, nj, nm));
        let z = assemble_from_kernel(zero.view(), half, 0.1, OperatorKind::N, 0.5).unwrap();
        assert!(z.matrix.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn imaginary_operator_is_near_field_minus_flip() {
        let half = 3;
        let values = random_kernel(half, 2, 3, 4);
        let active = PulsedFieldSet {
            times: (0..2 * half + 1).map(|q| 0.2 * (q as f64 - half as f64)).collect(),
            weighting: Weighting::ChiTilde,
            part: FieldPart::Scattered,
            noise: None,
            values: values.clone(),
        };
        let n = assemble_operator(KernelInput::Active(&active), OperatorKind::N, 0.3).unwrap();
        let i = assemble_operator(KernelInput::Active(&active), OperatorKind::I, 0.3).unwrap();
        let flipped = assemble_from_kernel(flip_lags(&values).view(), half, n.dt, OperatorKind::N, 0.3).unwrap();
        assert!((n.dt - 0.1).abs() < 1e-15);
        assert_eq!(i.matrix, &n.matrix - &flipped.matrix);
        let anti = crate::correlation::antisymmetrize(&values);
        let direct = assemble_from_kernel(anti.view(), half, n.dt, OperatorKind::I, 0.3).unwrap();
        assert!((&direct.matrix - &i.matrix).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn wrong_input_kind_is_rejected() {
        let active = PulsedFieldSet {
            times: vec![-0.2, 0.0, 0.2],
            weighting: Weighting::ChiTilde,
            part: FieldPart::Scattered,
            noise: None,
            values: Array3::zeros((3, 1, 1)),
        };
        assert!(matches!(
            assemble_operator(KernelInput::Active(&active), OperatorKind::C, 1.0),
            Err(Error::MissingInput(_))
        ));
    }

    #[test]
    fn test_function_support_peak_and_amplitude() {
        let p = GaussianSine::default();
        let ac = autocorrelate(&p, LagGrid::for_pulse(&p)).unwrap();
        let receivers = [Point::new(3.5, 1.0), Point::new(1.0, -1.5)];
        let z = Point::new(1.2, 0.9);
        let (dt, half) = (0.1, 100);
        let tf = test_function(&z, 0.0, &ac, &receivers, dt, half, Amplitude::Spherical).unwrap();
        let t0 = ac.half_width;
        for (j, x) in receivers.iter().enumerate() {
            let r = (x - z).norm();
            let mut best = (0, 0.0_f64);
            for q in 0..2 * half + 1 {
                let t = 2.0 * (q as f64 - half as f64) * dt;
                let v = tf.values[(q, j)];
                if (t - r).abs() > t0 {
                    assert_eq!(v, 0.0);
                }
                if v.abs() > best.1 {
                    best = (q, v.abs());
                }
            }
            let k_star = (r / (2.0 * dt)).round() as usize + half;
            assert_eq!(best.0, k_star);
        }
        // Amplitude ratio at the same argument of χ̃.
        let tf2 = test_function(&z, 0.0, &ac, &receivers, dt, half, Amplitude::Spherical).unwrap();
        let r0 = (receivers[0] - z).norm();
        let r1 = (receivers[1] - z).norm();
        let a0 = tf2.values[(half, 0)] / ac.eval(-r0);
        let a1 = tf2.values[(half, 1)] / ac.eval(-r1);
        assert!((a0 / a1 - r1 / r0).abs() < 1e-12);
        assert!(test_function(&receivers[0], 0.0, &ac, &receivers, dt, half, Amplitude::Spherical).is_err());
        assert_eq!(tf.flatten().len(), (2 * half + 1) * 2);
    }

    proptest::proptest! {
        #[test]
        fn operator_is_block_toeplitz(half in 1usize..6, nj in 1usize..4, nm in 1usize..4, seed in 0u64..1000) {
            let kernel = random_kernel(half, nj, nm, seed);
            let op = assemble_from_kernel(kernel.view(), half, 0.1, OperatorKind::N, 0.3).unwrap();
            let times = 2 * half + 1;
            for k in 0..times - 1 {
                for h in 0..times - 1 {
                    for j in 0..nj {
                        for m in 0..nm {
                            let a = op.matrix[(k * nj + j, h * nm + m)];
                            let b = op.matrix[((k + 1) * nj + j, (h + 1) * nm + m)];
                            proptest::prop_assert_eq!(a, b);
                        }
                    }
                }
            }
        }

        #[test]
        fn flip_is_an_involution(half in 0usize..8, seed in 0u64..1000) {
            let kernel = random_kernel(half, 2, 3, seed);
            proptest::prop_assert_eq!(flip_lags(&flip_lags(&kernel)), kernel);
        }
    }
}
