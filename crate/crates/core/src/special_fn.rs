//! Incomplete gamma tail, exponential integral and the Gamma function.
//!
//! Everything here is computed from series and continued fractions so the
//! values do not depend on a platform special-function library.

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const MAX_ITER: usize = 2000;
const FPMIN: f64 = 1e-300;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line (poles at non-positive integers give ±inf).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = (std::f64::consts::PI * x).sin();
        if s == 0.0 {
            return f64::INFINITY;
        }
        return std::f64::consts::PI / (s * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Upper incomplete gamma function Γ(α; x) = ∫_x^∞ t^{α-1} e^{-t} dt.
///
/// Defined for every real `alpha` and `x > 0`.
pub fn inc_gamma_tail(alpha: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("x", format!("incomplete gamma needs x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if alpha == 0.0 {
        return Ok(e1(x));
    }
    if alpha > 0.0 {
        if x < alpha + 1.0 {
            return Ok(gamma(alpha) - lower_series(alpha, x));
        }
        return Ok(upper_continued_fraction(alpha, x));
    }
    if x >= 1.0 {
        return Ok(upper_continued_fraction(alpha, x));
    }
    // Step down from an order in [0, 1) with Γ(β-1;x) = (Γ(β;x) - x^{β-1}e^{-x})/(β-1).
    let steps = (-alpha).ceil();
    let mut beta = alpha + steps;
    let mut value = if beta == 0.0 {
        e1(x)
    } else {
        gamma(beta) - lower_series(beta, x)
    };
    for _ in 0..steps as usize {
        value = (value - (-x + (beta - 1.0) * x.ln()).exp()) / (beta - 1.0);
        beta -= 1.0;
    }
    Ok(value)
}

/// γ(α, x) = x^α e^{-x} Σ x^n / (α(α+1)...(α+n)), for α > 0.
fn lower_series(alpha: f64, x: f64) -> f64 {
    let mut ap = alpha;
    let mut term = 1.0 / alpha;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    sum * (-x + alpha * x.ln()).exp()
}

/// Legendre continued fraction for Γ(α; x), modified Lentz evaluation.
fn upper_continued_fraction(alpha: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - alpha;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - alpha);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    (-x + alpha * x.ln()).exp() * h
}

/// E1(x) = Γ(0; x) for x > 0.
fn e1(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..MAX_ITER {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < f64::EPSILON * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        upper_continued_fraction(0.0, x)
    }
}

/// Exponential integral Ei(x) on the negative half-line.
///
/// Small |x| uses Ramanujan's series; larger |x| the Stieltjes fraction
/// `e^{-w} / (w + 1/(1 + 1/(w + 2/(1 + 2/(w + ...)))))`.
pub fn ei(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::invalid("x", format!("Ei is provided for x < 0, got {x}")));
    }
    let w = -x;
    if w.is_infinite() {
        return Ok(0.0);
    }
    if w <= 2.0 {
        let mut sum = 0.0;
        let mut inner = 0.0;
        let mut power = 1.0; // x^n / (n! 2^{n-1})
        for n in 1..200usize {
            power *= x / n as f64;
            if n > 1 {
                power *= 0.5;
            }
            if (n - 1) % 2 == 0 {
                inner += 1.0 / n as f64;
            }
            let term = if n % 2 == 1 { power * inner } else { -power * inner };
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(EULER_GAMMA + w.ln() + (0.5 * x).exp() * sum)
    } else {
        let mut t = w;
        for k in (1..=160).rev() {
            let k = k as f64;
            t = w + k / (1.0 + k / t);
        }
        Ok(-(-w).exp() / t)
    }
}

/// ∫_t^∞ s^{-1} Γ(α; s) ds, the tail of the clock obtained by composing the
/// Γ(α; ·) mapping with the selfdecomposability mapping.
pub fn gamma_tail_integral(alpha: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("time must be positive, got {t}")));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let quad = Quadrature::new(1e-15, 1e-13);
    let est = quad.try_integrate(
        |s: f64| -> Result<f64> {
            if s.is_infinite() {
                return Ok(0.0);
            }
            Ok(inc_gamma_tail(alpha, s)? / s)
        },
        t,
        f64::INFINITY,
    )?;
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(-0.5) + 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn tail_alpha_one_is_exponential() {
        let v = inc_gamma_tail(1.0, 2.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn recurrence_in_alpha() {
        for &alpha in &[0.0, 1.0, 2.0, -0.5, 0.3, -1.0, -2.5] {
            for &x in &[0.5, 1.0, 5.0, 0.01] {
                let lhs = inc_gamma_tail(alpha + 1.0, x).unwrap();
                let rhs = alpha * inc_gamma_tail(alpha, x).unwrap()
                    + (-x + alpha * f64::ln(x)).exp();
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                    "alpha {alpha} x {x}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn series_and_fraction_agree_at_switch() {
        for &alpha in &[0.5, 2.0] {
            let x = alpha + 1.0;
            let below = gamma(alpha) - lower_series(alpha, x);
            let above = upper_continued_fraction(alpha, x);
            assert!((below - above).abs() < 1e-13 * above);
        }
    }

    #[test]
    fn invalid_arguments() {
        assert!(inc_gamma_tail(1.0, 0.0).is_err());
        assert!(inc_gamma_tail(1.0, -1.0).is_err());
        assert!(ei(0.0).is_err());
        assert!(ei(1.0).is_err());
        assert!(gamma_tail_integral(1.0, 0.0).is_err());
    }

    #[test]
    fn ei_matches_negative_tail() {
        let mut w: f64 = 1e-3;
        while w <= 20.0 {
            let a = ei(-w).unwrap();
            let b = inc_gamma_tail(0.0, w).unwrap();
            assert!((a + b).abs() <= 1e-12, "w = {w}: {a} vs {b}");
            w *= 1.2;
        }
    }

    #[test]
    fn ei_bound_far_out() {
        let v = ei(-20.0).unwrap();
        assert!(v < 0.0 && v.abs() <= (-20.0f64).exp() / 20.0);
    }

    #[test]
    fn time_change_alpha_one_is_e1() {
        for &t in &[0.1, 1.0, 3.0] {
            let a = gamma_tail_integral(1.0, t).unwrap();
            let b = inc_gamma_tail(0.0, t).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn time_change_decreases_to_zero() {
        for &alpha in &[0.0, 0.5, 2.0] {
            let vals: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|&t| gamma_tail_integral(alpha, t).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
            assert!(vals[3] < 1e-3);
        }
    }
}
