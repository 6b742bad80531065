//! The Mittag-Leffler function `E_α(x) = Σ xⁿ/Γ(1+nα)` and its first two
//! derivatives, for `0 < α ≤ 1` and real `x`.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quad;

/// Above `x^{1/α} = SWITCH` the series is replaced by `(1/α) exp(x^{1/α})`;
/// the neglected terms are of relative size `e^{-SWITCH}`.
pub const SWITCH: f64 = 50.0;
const MAX_LOG: f64 = 709.0;
const MAX_TERMS: usize = 200_000;

fn check(alpha: f64, x: f64, order: u8) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("must lie in (0,1], got {alpha}")));
    }
    if order > 2 {
        return Err(invalid("order", format!("must be 0, 1 or 2, got {order}")));
    }
    if x.is_nan() {
        return Err(invalid("x", "is NaN"));
    }
    Ok(())
}

/// `d^order/dx^order E_α(x)`. Fails with [`Error::Overflow`] when the value
/// exceeds the double range; [`ln_mittag_leffler`] still works there.
pub fn mittag_leffler(alpha: f64, x: f64, order: u8) -> Result<f64> {
    let ln = ln_mittag_leffler(alpha, x, order)?;
    if ln > MAX_LOG {
        return Err(Error::Overflow {
            op: "mittag_leffler",
            log_value: ln,
        });
    }
    Ok(ln.exp())
}

/// Logarithm of `d^order/dx^order E_α(x)` (all three are positive on the real line).
pub fn ln_mittag_leffler(alpha: f64, x: f64, order: u8) -> Result<f64> {
    check(alpha, x, order)?;
    if alpha == 1.0 {
        return Ok(x);
    }
    if x == 0.0 && order == 0 {
        return Ok(0.0);
    }
    if x >= 0.0 {
        let z = x.powf(1.0 / alpha);
        if z >= SWITCH {
            return Ok(ln_asymptotic(alpha, x, order));
        }
        return Ok(ln_series_positive(alpha, x, order));
    }
    if x >= -1.0 {
        return Ok(series_signed(alpha, x, order).ln());
    }
    Ok(integral_negative(alpha, -x, order).ln())
}

fn ln_falling(n: usize, d: u8) -> f64 {
    (0..d as usize).map(|j| ((n - j) as f64).ln()).sum()
}

fn ln_series_positive(alpha: f64, x: f64, order: u8) -> f64 {
    let d = order as usize;
    if x == 0.0 {
        return ln_falling(d, order) - ln_gamma(1.0 + d as f64 * alpha);
    }
    let lx = x.ln();
    let mut terms = Vec::new();
    let mut max = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for n in d..d + MAX_TERMS {
        let t = ln_falling(n, order) + (n - d) as f64 * lx - ln_gamma(1.0 + n as f64 * alpha);
        max = max.max(t);
        terms.push(t);
        if t < prev && t < max - 45.0 {
            break;
        }
        prev = t;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn series_signed(alpha: f64, x: f64, order: u8) -> f64 {
    let d = order as usize;
    let mut sum = 0.0;
    for n in d..d + MAX_TERMS {
        let mag = ln_falling(n, order) + if n > d { (n - d) as f64 * x.abs().ln() } else { 0.0 }
            - ln_gamma(1.0 + n as f64 * alpha);
        let sign = if x < 0.0 && (n - d) % 2 == 1 { -1.0 } else { 1.0 };
        let t = sign * mag.exp();
        sum += t;
        if n > d + 4 && t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn ln_asymptotic(alpha: f64, x: f64, order: u8) -> f64 {
    let a = 1.0 / alpha;
    let z = x.powf(a);
    match order {
        0 => -alpha.ln() + z,
        1 => 2.0 * a.ln() + (a - 1.0) * x.ln() + z,
        _ => {
            let inner = a * (a - 1.0) * x.powf(a - 2.0) + a * a * x.powf(2.0 * a - 2.0);
            a.ln() + inner.ln() + z
        }
    }
}

/// `E_α(-y) = ∫_0^∞ e^{-r t} K_α(r) dr` with `t = y^{1/α}` and the spectral
/// density `K_α(r) = sin(απ) r^{α-1} / (π (r^{2α} + 2 r^α cos(απ) + 1))`,
/// written in the variable `s = r^α`.
fn integral_negative(alpha: f64, y: f64, order: u8) -> f64 {
    let a = 1.0 / alpha;
    let t = y.powf(a);
    let (sin, cos) = (alpha * PI).sin_cos();
    let g = |k: i32| {
        quad::integrate_to_infinity(
            |s: f64| {
                let r = s.powf(a);
                r.powi(k) * (-r * t).exp() * sin / (alpha * PI * (s * s + 2.0 * s * cos + 1.0))
            },
            0.0,
            1e-13,
        )
        .value
    };
    let dt = a * y.powf(a - 1.0);
    match order {
        0 => g(0),
        1 => g(1) * dt,
        _ => {
            let d2t = a * (a - 1.0) * y.powf(a - 2.0);
            g(2) * dt * dt - g(1) * d2t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    /// `E_{1/2}(x) = e^{x²} erfc(-x)` and its derivatives.
    fn half(x: f64) -> [f64; 3] {
        let e = (x * x).exp() * erfc(-x);
        let e1 = 2.0 * x * e + 2.0 / PI.sqrt();
        let e2 = 2.0 * e + 2.0 * x * e1;
        [e, e1, e2]
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn special_values() {
        for alpha in [0.2, 0.5, 0.9, 1.0] {
            assert_eq!(mittag_leffler(alpha, 0.0, 0).unwrap(), 1.0);
        }
        for i in 0..=100 {
            let x = -5.0 + 0.1 * i as f64;
            for order in 0..3 {
                assert!(rel(mittag_leffler(1.0, x, order).unwrap(), x.exp()) < 1e-12);
            }
        }
        let v = mittag_leffler(0.5, 1.0, 0).unwrap();
        assert!((v - 1f64.exp() * erfc(-1.0)).abs() < 1e-8);
        assert!((v - 5.00898).abs() < 1e-5);
    }

    #[test]
    fn half_closed_forms_on_both_sides() {
        for x in [-1.0, -0.3, 0.0, 0.4, 1.0, 2.5, 5.0, 6.9] {
            let exact = half(x);
            for order in 0..3u8 {
                let v = mittag_leffler(0.5, x, order).unwrap();
                assert!(rel(v, exact[order as usize]) < 1e-9, "x = {x}, order {order}: {v} vs {}", exact[order as usize]);
            }
        }
    }

    #[test]
    fn half_far_negative() {
        // 30-digit evaluations of e^{x²} erfc(-x) and its derivatives; the
        // double-precision erfc is not accurate enough this far out
        let table = [
            (-6.0, [0.092776567800538354, 0.015060353489052321, 0.0048288937324488541]),
            (-3.0, [0.17900115118138995, 0.054372260007172871, 0.031768742319742673]),
            (-1.5, [0.3215854164543175, 0.16362291773256007, 0.1523020797109548]),
        ];
        for (x, exact) in table {
            for order in 0..3u8 {
                let v = mittag_leffler(0.5, x, order).unwrap();
                assert!(rel(v, exact[order as usize]) < 1e-10, "x = {x}, order {order}: {v}");
            }
        }
    }

    #[test]
    fn branches_agree_at_the_switch() {
        for alpha in [0.3, 0.5, 0.8] {
            let x = SWITCH.powf(alpha);
            for order in 0..3 {
                let s = ln_series_positive(alpha, x, order);
                let a = ln_asymptotic(alpha, x, order);
                assert!((s - a).abs() < 1e-8, "{alpha} {order}: {s} {a}");
            }
        }
    }

    #[test]
    fn negative_branches_agree_at_minus_one() {
        for alpha in [0.3, 0.5, 0.8] {
            for order in 0..3 {
                let s = series_signed(alpha, -1.0, order);
                let i = integral_negative(alpha, 1.0, order);
                assert!(rel(s, i) < 1e-9, "{alpha} {order}: {s} {i}");
            }
        }
    }

    #[test]
    fn overflow_has_log_fallback() {
        let x = 30.0;
        assert!(matches!(mittag_leffler(0.5, x, 0), Err(Error::Overflow { .. })));
        let ln = ln_mittag_leffler(0.5, x, 0).unwrap();
        assert!((ln - (900.0 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for alpha in [0.3, 0.7] {
            for x in [-3.0, -0.5, 0.7, 2.0] {
                let h = 1e-5;
                let f = |x| mittag_leffler(alpha, x, 0).unwrap();
                let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
                assert!(rel(mittag_leffler(alpha, x, 1).unwrap(), d1) < 1e-6, "{alpha} {x}");
                let g = |x| mittag_leffler(alpha, x, 1).unwrap();
                let d2 = (g(x + h) - g(x - h)) / (2.0 * h);
                assert!(rel(mittag_leffler(alpha, x, 2).unwrap(), d2) < 1e-6, "{alpha} {x}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(mittag_leffler(0.0, 1.0, 0).is_err());
        assert!(mittag_leffler(1.5, 1.0, 0).is_err());
        assert!(mittag_leffler(0.5, 1.0, 3).is_err());
    }
}
