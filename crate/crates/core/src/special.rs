//! Integer-order Bessel and Hankel functions of real positive argument.
//!
//! Below [`ASYMPTOTIC_THRESHOLD`] the first-kind functions come from Miller's
//! backward recurrence normalized by `J0 + 2 Σ J_2k = 1`, and `Y0`, `Y1` from
//! their Neumann series in `J_2k`. Above the threshold the Hankel asymptotic
//! expansion is used; its smallest term there is below `1e-20`.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Arguments at or above this value use the asymptotic expansion.
pub const ASYMPTOTIC_THRESHOLD: f64 = 25.0;

/// `J0, J1, Y0, Y1` evaluated at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bessel01 {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bessel01 {
    /// `H0^(1)` and `H1^(1)`.
    #[inline]
    pub fn hankel(&self) -> (Complex64, Complex64) {
        (Complex64::new(self.j0, self.y0), Complex64::new(self.j1, self.y1))
    }
}

/// Evaluates `J0, J1, Y0, Y1` at `x > 0`.
pub fn bessel01(x: f64) -> Bessel01 {
    debug_assert!(x > 0.0, "bessel01 requires a positive argument, got {x}");
    if x >= ASYMPTOTIC_THRESHOLD {
        let h0 = hankel_asymptotic(0, x);
        let h1 = hankel_asymptotic(1, x);
        return Bessel01 {
            j0: h0.re,
            j1: h1.re,
            y0: h0.im,
            y1: h1.im,
        };
    }
    let j = miller_sequence(1, x);
    neumann_y01(&j, x)
}

/// `H0^(1)(x)` and `H1^(1)(x)`.
#[inline]
pub fn hankel01(x: f64) -> (Complex64, Complex64) {
    bessel01(x).hankel()
}

/// `J_0(x) ..= J_nmax(x)`.
pub fn bessel_j_seq(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "bessel_j_seq requires a non-negative argument");
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return out;
    }
    if x >= ASYMPTOTIC_THRESHOLD && (nmax as f64) < x {
        // Upward recurrence is stable while n < x; switch to Miller beyond.
        let h0 = hankel_asymptotic(0, x);
        let h1 = hankel_asymptotic(1, x);
        let mut out = Vec::with_capacity(nmax + 1);
        out.push(h0.re);
        if nmax >= 1 {
            out.push(h1.re);
        }
        for n in 1..nmax {
            let next = 2.0 * n as f64 / x * out[n] - out[n - 1];
            out.push(next);
        }
        return out;
    }
    let mut j = miller_sequence(nmax, x);
    j.truncate(nmax + 1);
    j
}

/// `Y_0(x) ..= Y_nmax(x)` by forward recurrence, which is stable for `Y`.
pub fn bessel_y_seq(nmax: usize, x: f64) -> Vec<f64> {
    let b = bessel01(x);
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(b.y0);
    if nmax >= 1 {
        out.push(b.y1);
    }
    for n in 1..nmax {
        let next = 2.0 * n as f64 / x * out[n] - out[n - 1];
        out.push(next);
    }
    out
}

/// `H_0^(1)(x) ..= H_nmax^(1)(x)`.
pub fn hankel1_seq(nmax: usize, x: f64) -> Vec<Complex64> {
    let j = bessel_j_seq(nmax, x);
    let y = bessel_y_seq(nmax, x);
    j.into_iter()
        .zip(y)
        .map(|(re, im)| Complex64::new(re, im))
        .collect()
}

/// Normalized backward recurrence. Returns at least `J_0..=J_{nmax}` and the
/// tail up to the start index, which the Neumann series needs.
fn miller_sequence(nmax: usize, x: f64) -> Vec<f64> {
    let top = (nmax as f64).max(x);
    let mut start = (1.1 * top + 35.0).ceil() as usize;
    start += start % 2;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300_f64.sqrt();
    for n in (1..=start).rev() {
        j[n - 1] = 2.0 * n as f64 / x * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e250 {
            for v in j[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * j[k];
        k += 2;
    }
    for v in j.iter_mut() {
        *v /= norm;
    }
    j
}

fn neumann_y01(j: &[f64], x: f64) -> Bessel01 {
    let log_term = (x / 2.0).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * log_term * j[0] - 2.0 * FRAC_2_PI * s0;
    let y1 = -FRAC_2_PI / x * j[0] + FRAC_2_PI * log_term * j[1] + FRAC_2_PI * s1;
    Bessel01 {
        j0: j[0],
        j1: j[1],
        y0,
        y1,
    }
}

/// Hankel's expansion `H_n(x) ~ sqrt(2/πx) e^{iω} Σ i^m a_m(n) / x^m`,
/// `ω = x − nπ/2 − π/4`, truncated at the smallest term.
fn hankel_asymptotic(n: u32, x: f64) -> Complex64 {
    let mu = 4.0 * (n as f64).powi(2);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut prev = f64::INFINITY;
    for m in 1..60 {
        let odd = (2 * m - 1) as f64;
        term *= Complex64::new(0.0, (mu - odd * odd) / (m as f64 * 8.0 * x));
        let mag = term.norm();
        if mag > prev {
            break;
        }
        sum += term;
        prev = mag;
        if mag < 1e-17 * sum.norm() {
            break;
        }
    }
    let omega = x - n as f64 * PI / 2.0 - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * Complex64::from_polar(1.0, omega) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ascending power series, accurate to rounding for small arguments.
    fn j0_series(x: f64) -> f64 {
        let q = -x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= q / (k as f64 * k as f64);
            sum += term;
        }
        sum
    }

    fn y0_series(x: f64) -> f64 {
        // Y0 = (2/π)[(ln(x/2)+γ) J0 + Σ (−1)^{k+1} H_k (x²/4)^k / (k!)²]
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut s = 0.0;
        for k in 1..80 {
            term *= q / (k as f64 * k as f64);
            harmonic += 1.0 / k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            s += sign * harmonic * term;
        }
        FRAC_2_PI * (((x / 2.0).ln() + EULER_GAMMA) * j0_series(x) + s)
    }

    #[test]
    fn matches_power_series_at_small_argument() {
        for &x in &[0.01, 0.1, 0.5, 1.0, 2.0, 3.7, 5.0] {
            let b = bessel01(x);
            assert!((b.j0 - j0_series(x)).abs() < 1e-14, "J0({x})");
            assert!((b.y0 - y0_series(x)).abs() < 1e-13 * (1.0 + y0_series(x).abs()), "Y0({x})");
        }
    }

    #[test]
    fn green_value_at_unit_argument() {
        // Frozen from the series oracle above: J0(1), Y0(1).
        let j0 = j0_series(1.0);
        let y0 = y0_series(1.0);
        assert!((j0 - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((y0 - 0.088_256_964_215_676_96).abs() < 1e-15);
        let b = bessel01(1.0);
        assert!((b.j0 - j0).abs() < 1e-15);
        assert!((b.y0 - y0).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_libm_over_the_working_range() {
        let mut x = 0.05;
        while x < 400.0 {
            let b = bessel01(x);
            let scale = 1.0_f64.min((2.0 / (PI * x)).sqrt()).max(1e-3);
            assert!((b.j0 - libm::j0(x)).abs() < 2e-14 * scale.max(1.0), "J0({x})");
            assert!((b.j1 - libm::j1(x)).abs() < 2e-14 * scale.max(1.0), "J1({x})");
            assert!((b.y0 - libm::y0(x)).abs() < 5e-14 * (1.0 + b.y0.abs()), "Y0({x})");
            assert!((b.y1 - libm::y1(x)).abs() < 5e-14 * (1.0 + b.y1.abs()), "Y1({x})");
            x *= 1.07;
        }
    }

    #[test]
    fn continuity_across_the_asymptotic_switch() {
        let lo = bessel01(ASYMPTOTIC_THRESHOLD * (1.0 - 1e-15));
        let hi = bessel01(ASYMPTOTIC_THRESHOLD);
        assert!((lo.j0 - hi.j0).abs() < 1e-14, "{:e}", lo.j0 - hi.j0);
        assert!((lo.y1 - hi.y1).abs() < 1e-14);
    }

    #[test]
    fn wronskian_holds() {
        for &x in &[0.3, 2.0, 9.0, 17.5, 24.9, 31.0, 120.0] {
            let b = bessel01(x);
            let w = b.j1 * b.y0 - b.j0 * b.y1;
            assert!((w - 2.0 / (PI * x)).abs() < 1e-14 * (1.0 + 2.0 / (PI * x)), "x={x}");
        }
    }

    #[test]
    fn integer_order_sequences_match_libm() {
        for &x in &[0.7, 4.0, 13.0, 30.0, 45.0] {
            let j = bessel_j_seq(60, x);
            let y = bessel_y_seq(20, x);
            for n in 0..=60 {
                let reference = libm::jn(n as i32, x);
                assert!(
                    (j[n] - reference).abs() < 1e-13 * (1.0 + reference.abs()) || (j[n] / reference - 1.0).abs() < 1e-10,
                    "J_{n}({x}) = {} vs {}",
                    j[n],
                    reference
                );
            }
            for n in 0..=20 {
                let reference = libm::yn(n as i32, x);
                assert!((y[n] / reference - 1.0).abs() < 1e-11 || (y[n] - reference).abs() < 1e-13, "Y_{n}({x})");
            }
        }
    }
}
