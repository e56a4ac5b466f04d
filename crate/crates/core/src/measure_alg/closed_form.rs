//! Closed forms for image measures of known kernel/clock pairs.

use super::{DensityMeasure, HalfLineMeasure, Interval, KernelForm, TimeForm};
use crate::special_fn::{gamma_tail_integral, inc_gamma_tail};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    /// `w^{α-1} e^{-w}` on `(0, ∞)`
    Gamma(f64),
    /// `1/w` on `(0, 1]`
    InvUnit,
    /// `a w^{a-1}` on `(0, 1]`
    Power(f64),
}

fn law_of(m: &HalfLineMeasure) -> Option<(Law, f64)> {
    let HalfLineMeasure::Image(img) = m else {
        return None;
    };
    if img.kernel.scale != 1.0 {
        return None;
    }
    let HalfLineMeasure::FromTimeChange(tc) = img.base.as_ref() else {
        return None;
    };
    let i = tc.interval;
    let half = i.lo == 0.0 && i.hi.is_infinite();
    let unit = i.lo == 0.0 && i.hi == 1.0;
    let law = match (&img.kernel.form, &tc.form) {
        (KernelForm::ExpDecay, TimeForm::Identity) if half => Law::InvUnit,
        (KernelForm::Identity, TimeForm::OneMinusExp) if half => Law::Gamma(1.0),
        (KernelForm::Identity, TimeForm::IncGammaTail(a)) if half && *a > 0.0 => Law::Gamma(*a),
        (KernelForm::NegLog, TimeForm::Identity) if unit => Law::Gamma(1.0),
        (KernelForm::Power(p), TimeForm::Identity) if unit && *p > 0.0 => Law::Power(1.0 / p),
        (KernelForm::Identity, TimeForm::Identity) if unit => Law::Power(1.0),
        (KernelForm::Identity, TimeForm::Power(g)) if unit && *g > 0.0 => Law::Power(*g),
        _ => return None,
    };
    Some((law, tc.scale))
}

fn pair(a: Law, b: Law, mass: f64) -> Option<DensityMeasure> {
    match (a, b) {
        (Law::Gamma(alpha), Law::InvUnit) => Some(
            DensityMeasure::new(format!("{mass}*Gamma({alpha};w)/w"), Interval::half_line(), move |w| {
                mass * inc_gamma_tail(alpha, w).unwrap_or(f64::NAN) / w
            })
            .infinite_lower()
            .with_tail(move |t| {
                let v = if alpha == 1.0 {
                    inc_gamma_tail(0.0, t)?
                } else {
                    gamma_tail_integral(alpha, t)?
                };
                Ok(mass * v)
            }),
        ),
        (Law::Power(a), Law::Power(b)) if ((a - b) / a).abs() < 1e-12 => Some(
            DensityMeasure::new(format!("{mass}*{a}^2 w^{a}-1 (-ln w)"), Interval::unit(), move |w| {
                -mass * a * a * w.powf(a - 1.0) * w.ln()
            })
            .with_cdf(move |t| {
                let t = t.clamp(0.0, 1.0);
                Ok(if t == 0.0 { 0.0 } else { mass * t.powf(a) * (1.0 - a * t.ln()) })
            }),
        ),
        (Law::Power(a), Law::Power(b)) => Some(
            DensityMeasure::new(format!("{mass}*power-product({a},{b})"), Interval::unit(), move |w| {
                mass * a * b * (w.powf(b - 1.0) - w.powf(a - 1.0)) / (a - b)
            })
            .with_cdf(move |t| {
                let t = t.clamp(0.0, 1.0);
                Ok(mass * (a * t.powf(b) - b * t.powf(a)) / (a - b))
            }),
        ),
        (Law::Power(a), Law::InvUnit) => Some(
            DensityMeasure::new(format!("{mass}*(1-w^{a})/w"), Interval::unit(), move |w| {
                -mass * (a * w.ln()).exp_m1() / w
            })
            .infinite_lower()
            .with_tail(move |t| {
                if t >= 1.0 {
                    return Ok(0.0);
                }
                let l = t.ln();
                Ok(mass * (-l + (a * l).exp_m1() / a))
            }),
        ),
        _ => None,
    }
}

/// Closed form of the product image of two recognised one-dimensional factors.
pub(super) fn recognize(factors: &[HalfLineMeasure]) -> Option<DensityMeasure> {
    let [a, b] = factors else {
        return None;
    };
    let (la, ma) = law_of(a)?;
    let (lb, mb) = law_of(b)?;
    pair(la, lb, ma * mb).or_else(|| pair(lb, la, ma * mb))
}
