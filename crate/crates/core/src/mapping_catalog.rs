//! Named random integral mappings and executable composition identities.
//!
//! Every identity is checked by evaluating each of its forms on a `y` grid and
//! reporting the largest pairwise gap between the resulting exponents.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integral_map::{apply, apply_nested, compose, MappingSpec};
use crate::levy_core::{negate_law, LevyExponent};
use crate::measure_alg::{DensityMeasure, Direction, HalfLineMeasure, Interval, KernelFunction, TimeChange};
use crate::special_fn::{gamma_tail_integral, inc_gamma_tail};

/// Class of laws a mapping ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassTag {
    /// Range of the upsilon mapping.
    E,
    /// Selfdecomposable laws.
    L,
    /// Thorin class.
    T,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MappingName {
    /// `I^{t, 1-e^{-t}}` on `(0, ∞)`.
    Kexp,
    /// `I^{-ln s, s}` on `(0, 1]`.
    KexpAlt,
    /// `I^{e^{-s}, s}` on `(0, ∞)`.
    Lmap,
    /// `I^{w, Γ(0; w)}` on `(0, ∞)`, applied to the reflected law.
    Thorin,
    /// `I^{w, 2w^β - w^{2β}}` on `(0, 1]`.
    PowerPair(f64),
    /// `I^{-w, (w^β - 1)/β - ln w}` on `(0, 1]`.
    PowerLmap(f64),
    /// `I^{t, ∫_t^∞ Γ(α; s) ds/s}` on `(0, ∞)`.
    GammaLmap(f64),
}

impl MappingName {
    pub fn class_tag(self) -> ClassTag {
        match self {
            MappingName::Kexp | MappingName::KexpAlt => ClassTag::E,
            MappingName::Lmap => ClassTag::L,
            MappingName::Thorin => ClassTag::T,
            _ => ClassTag::Other,
        }
    }

    /// Parse `kexp`, `kexp-alt`, `lmap`, `thorin`, `power-pair:β`,
    /// `power-lmap:β` or `gamma-lmap:α`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => {
                let v: f64 = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid("mapping", format!("bad parameter in {s:?}")))?;
                (h.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        let name = match (head.to_ascii_lowercase().as_str(), arg) {
            ("kexp", None) => MappingName::Kexp,
            ("kexp-alt", None) => MappingName::KexpAlt,
            ("lmap", None) => MappingName::Lmap,
            ("thorin", None) => MappingName::Thorin,
            ("power-pair", Some(b)) => MappingName::PowerPair(b),
            ("power-lmap", Some(b)) => MappingName::PowerLmap(b),
            ("gamma-lmap", Some(a)) => MappingName::GammaLmap(a),
            _ => return Err(Error::invalid("mapping", format!("unknown mapping {s:?}"))),
        };
        Ok(name)
    }
}

#[derive(Debug, Clone)]
pub struct NamedMapping {
    pub name: MappingName,
    pub spec: MappingSpec,
    pub class_tag: ClassTag,
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(name, format!("must be positive, got {v}")))
    }
}

pub fn kexp() -> MappingSpec {
    MappingSpec::new(KernelFunction::identity(), TimeChange::one_minus_exp(Interval::half_line()))
        .expect("valid")
        .with_label("kexp")
}

pub fn kexp_alt() -> MappingSpec {
    MappingSpec::new(KernelFunction::neg_log(), TimeChange::identity(Interval::unit()))
        .expect("valid")
        .with_label("kexp-alt")
}

pub fn lmap() -> MappingSpec {
    MappingSpec::new(KernelFunction::exp_decay(), TimeChange::identity(Interval::half_line()))
        .expect("valid")
        .with_label("lmap")
}

pub fn thorin() -> MappingSpec {
    let time = TimeChange::inc_gamma_tail(0.0, Interval::half_line()).expect("valid");
    MappingSpec::new(KernelFunction::identity(), time)
        .expect("valid")
        .pre_negated(true)
        .with_label("thorin")
}

/// `I^{t^{1/β}, t}` on `(0, 1]`.
pub fn power_kernel(beta: f64) -> Result<MappingSpec> {
    let beta = positive("beta", beta)?;
    Ok(MappingSpec::new(KernelFunction::power(1.0 / beta), TimeChange::identity(Interval::unit()))?
        .with_label(format!("power[{beta}]")))
}

/// `I^{t, Γ(α; t)}` on `(0, ∞)`.
pub fn gamma_clock(alpha: f64) -> Result<MappingSpec> {
    let alpha = positive("alpha", alpha)?;
    Ok(MappingSpec::new(
        KernelFunction::identity(),
        TimeChange::inc_gamma_tail(alpha, Interval::half_line())?,
    )?
    .with_label(format!("gamma-clock[{alpha}]")))
}

/// Single form of `power(β) ∘ power(2β)`: clock `2w^β - w^{2β}` on `(0, 1]`.
pub fn power_pair(beta: f64) -> Result<MappingSpec> {
    let b = positive("beta", beta)?;
    let m = DensityMeasure::new(format!("2b w^(b-1)(1-w^b), b={b}"), Interval::unit(), move |w| {
        2.0 * b * w.powf(b - 1.0) * (1.0 - w.powf(b))
    })
    .with_cdf(move |t| {
        let u = t.clamp(0.0, 1.0).powf(b);
        Ok(2.0 * u - u * u)
    });
    let time = TimeChange::from_measure(HalfLineMeasure::Density(m), Direction::NonDecreasing)?;
    Ok(MappingSpec::new(KernelFunction::identity(), time)?.with_label(format!("power-pair[{b}]")))
}

/// Third form of the power pair: `I^{(1-√t)^{1/β}, t}` on `(0, 1]`.
pub fn power_pair_sqrt(beta: f64) -> Result<MappingSpec> {
    let b = positive("beta", beta)?;
    Ok(
        MappingSpec::new(KernelFunction::one_minus_sqrt_power(1.0 / b), TimeChange::identity(Interval::unit()))?
            .with_label(format!("power-pair-sqrt[{b}]")),
    )
}

/// Single form of `power(β) ∘ lmap`: kernel `-w`, clock `(w^β - 1)/β - ln w` on `(0, 1]`.
pub fn power_lmap(beta: f64) -> Result<MappingSpec> {
    let b = positive("beta", beta)?;
    let m = DensityMeasure::new(format!("(1-w^b)/w, b={b}"), Interval::unit(), move |w| {
        -(b * w.ln()).exp_m1() / w
    })
    .infinite_lower()
    .with_tail(move |t| {
        let t = t.min(1.0);
        Ok((b * t.ln()).exp_m1() / b - t.ln())
    });
    let time = TimeChange::from_measure(HalfLineMeasure::Density(m), Direction::NonIncreasing)?;
    Ok(MappingSpec::new(KernelFunction::identity().negated(), time)?.with_label(format!("power-lmap[{b}]")))
}

/// Middle form of `power(β) ∘ lmap`: `I^{e^{-s}, s + (e^{-βs} - 1)/β}` on `(0, ∞)`.
pub fn power_lmap_exp(beta: f64) -> Result<MappingSpec> {
    let b = positive("beta", beta)?;
    let m = DensityMeasure::new(format!("1-exp(-{b}s)"), Interval::half_line(), move |s| {
        -(-b * s).exp_m1()
    })
    .infinite_upper()
    .with_cdf(move |t| Ok(t + (-b * t).exp_m1() / b));
    let time = TimeChange::from_measure(HalfLineMeasure::Density(m), Direction::NonDecreasing)?;
    Ok(MappingSpec::new(KernelFunction::exp_decay(), time)?.with_label(format!("power-lmap-exp[{b}]")))
}

/// Single form of `gamma_clock(α) ∘ lmap`: clock `∫_t^∞ Γ(α; s) ds/s`.
pub fn gamma_lmap(alpha: f64) -> Result<MappingSpec> {
    let a = positive("alpha", alpha)?;
    let m = DensityMeasure::new(format!("Gamma({a};w)/w"), Interval::half_line(), move |w| {
        inc_gamma_tail(a, w).unwrap_or(f64::NAN) / w
    })
    .infinite_lower()
    .with_tail(move |t| gamma_tail_integral(a, t));
    let time = TimeChange::from_measure(HalfLineMeasure::Density(m), Direction::NonIncreasing)?;
    Ok(MappingSpec::new(KernelFunction::identity(), time)?.with_label(format!("gamma-lmap[{a}]")))
}

pub fn named(name: MappingName) -> Result<NamedMapping> {
    let spec = match name {
        MappingName::Kexp => kexp(),
        MappingName::KexpAlt => kexp_alt(),
        MappingName::Lmap => lmap(),
        MappingName::Thorin => thorin(),
        MappingName::PowerPair(b) => power_pair(b)?,
        MappingName::PowerLmap(b) => power_lmap(b)?,
        MappingName::GammaLmap(a) => gamma_lmap(a)?,
    };
    Ok(NamedMapping {
        name,
        spec,
        class_tag: name.class_tag(),
    })
}

/// The factors of a composite catalog entry, outermost first.
pub fn factors(name: MappingName) -> Result<Vec<MappingSpec>> {
    Ok(match name {
        MappingName::Thorin => vec![kexp(), lmap()],
        MappingName::PowerPair(b) => vec![power_kernel(b)?, power_kernel(2.0 * b)?],
        MappingName::PowerLmap(b) => vec![power_kernel(b)?, lmap()],
        MappingName::GammaLmap(a) => vec![gamma_clock(a)?, lmap()],
        _ => vec![named(name)?.spec],
    })
}

/// Catalog mappings on `(0, 1]` used for random composition checks.
pub fn unit_interval_specs() -> Vec<MappingSpec> {
    let unit = Interval::unit();
    let mut out = vec![kexp_alt()];
    for b in [0.5, 1.0, 2.0] {
        out.push(power_kernel(b).expect("valid"));
    }
    for g in [0.5, 2.0] {
        out.push(
            MappingSpec::new(KernelFunction::identity(), TimeChange::power(g, unit).expect("valid"))
                .expect("valid")
                .with_label(format!("clock-power[{g}]")),
        );
    }
    out.push(power_pair_sqrt(1.0).expect("valid"));
    out
}

/// Outcome of one identity check.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheckResult {
    pub identity: String,
    pub law: String,
    pub forms: Vec<String>,
    pub grid: Vec<f64>,
    /// Largest pairwise gap at each grid point.
    pub errors: Vec<f64>,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub artifacts: Vec<String>,
}

/// `count` evenly spaced points on `[min, max]`.
pub fn linear_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// 201 points on `[-10, 10]`.
pub fn standard_grid() -> Vec<f64> {
    linear_grid(-10.0, 10.0, 201)
}

/// Compare several exponents pairwise on `grid`.
pub fn compare_forms(
    identity: &str,
    law: &LevyExponent,
    forms: Vec<(String, LevyExponent)>,
    grid: &[f64],
    tol: f64,
) -> Result<IdentityCheckResult> {
    let values = forms
        .par_iter()
        .map(|(_, e)| e.eval_grid(grid))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = (0..grid.len())
        .map(|k| {
            let mut worst = 0.0f64;
            for i in 0..values.len() {
                for j in i + 1..values.len() {
                    worst = worst.max((values[i][k] - values[j][k]).norm());
                }
            }
            worst
        })
        .collect();
    let max_abs_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(IdentityCheckResult {
        identity: identity.to_string(),
        law: law.provenance().describe(),
        forms: forms.into_iter().map(|(n, _)| n).collect(),
        grid: grid.to_vec(),
        errors,
        max_abs_error,
        tolerance: tol,
        pass: max_abs_error <= tol,
        artifacts: Vec::new(),
    })
}

fn nested(specs: &[MappingSpec], e: &LevyExponent) -> Result<(String, LevyExponent)> {
    let label = specs.iter().map(|s| s.label()).collect::<Vec<_>>().join(" o ");
    Ok((label, apply_nested(specs, e)?))
}

fn single(spec: &MappingSpec, e: &LevyExponent) -> Result<(String, LevyExponent)> {
    Ok((spec.label().to_string(), apply(spec, e)?))
}

/// `kexp(lmap(ν)) = lmap(kexp(ν)) = thorin(ν)`.
pub fn check_thorin_composition(e: &LevyExponent, grid: &[f64], tol: f64) -> Result<IdentityCheckResult> {
    let forms = vec![nested(&[kexp(), lmap()], e)?, nested(&[lmap(), kexp()], e)?, single(&thorin(), e)?];
    compare_forms("thorin-composition", e, forms, grid, tol)
}

/// The two parametrizations of the upsilon mapping.
pub fn check_kexp_alt(e: &LevyExponent, grid: &[f64], tol: f64) -> Result<IdentityCheckResult> {
    let forms = vec![single(&kexp(), e)?, single(&kexp_alt(), e)?];
    compare_forms("kexp-alt", e, forms, grid, tol)
}

/// `power(β) ∘ power(2β)` against its two single-mapping forms.
pub fn check_power_pair(beta: f64, e: &LevyExponent, grid: &[f64], tol: f64) -> Result<IdentityCheckResult> {
    let forms = vec![
        nested(&factors(MappingName::PowerPair(beta))?, e)?,
        single(&power_pair(beta)?, e)?,
        single(&power_pair_sqrt(beta)?, e)?,
    ];
    compare_forms(&format!("power-pair[{beta}]"), e, forms, grid, tol)
}

/// `power(β) ∘ lmap` against its two single-mapping forms.
pub fn check_power_lmap(beta: f64, e: &LevyExponent, grid: &[f64], tol: f64) -> Result<IdentityCheckResult> {
    let forms = vec![
        nested(&factors(MappingName::PowerLmap(beta))?, e)?,
        single(&power_lmap_exp(beta)?, e)?,
        single(&power_lmap(beta)?, e)?,
    ];
    compare_forms(&format!("power-lmap[{beta}]"), e, forms, grid, tol)
}

/// `gamma_clock(α) ∘ lmap` against its single-mapping form and the composed clock.
pub fn check_gamma_lmap(alpha: f64, e: &LevyExponent, grid: &[f64], tol: f64) -> Result<IdentityCheckResult> {
    let parts = factors(MappingName::GammaLmap(alpha))?;
    let forms = vec![nested(&parts, e)?, single(&gamma_lmap(alpha)?, e)?, single(&compose(&parts)?, e)?];
    compare_forms(&format!("gamma-lmap[{alpha}]"), e, forms, grid, tol)
}

/// `thorin(ν) = lmap(kexp(ν)) = kexp(lmap(ν))`: the Thorin image is exhibited
/// both as a selfdecomposable law and as an upsilon image.
pub fn thorin_factorization_witness(e: &LevyExponent, grid: &[f64], tol: f64) -> Result<IdentityCheckResult> {
    let forms = vec![
        single(&thorin(), e)?,
        ("lmap(kexp)".to_string(), apply(&lmap(), &apply(&kexp(), e)?)?),
        ("kexp(lmap)".to_string(), apply(&kexp(), &apply(&lmap(), e)?)?),
    ];
    compare_forms("thorin-witness", e, forms, grid, tol)
}

/// `gamma_lmap(1)(ν) = thorin(ν⁻)`.
pub fn check_gamma_lmap_unit(e: &LevyExponent, grid: &[f64], tol: f64) -> Result<IdentityCheckResult> {
    let forms = vec![
        single(&gamma_lmap(1.0)?, e)?,
        ("thorin(reflected)".to_string(), apply(&thorin(), &negate_law(e))?),
    ];
    compare_forms("gamma-lmap-unit", e, forms, grid, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_core::{exponent_of, LevyTriple};

    fn gaussian() -> LevyExponent {
        exponent_of(&LevyTriple::gaussian(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn parse_names() {
        assert_eq!(MappingName::parse("Lmap").unwrap(), MappingName::Lmap);
        assert_eq!(MappingName::parse("power-pair:0.5").unwrap(), MappingName::PowerPair(0.5));
        assert!(MappingName::parse("power-pair").is_err());
        assert!(MappingName::parse("upsilon").is_err());
        assert_eq!(named(MappingName::Thorin).unwrap().class_tag, ClassTag::T);
    }

    #[test]
    fn grids() {
        let g = standard_grid();
        assert_eq!(g.len(), 201);
        assert_eq!(g[100], 0.0);
        assert_eq!(linear_grid(1.0, 2.0, 1), vec![1.0]);
    }

    #[test]
    fn composition_on_gaussian() {
        let grid = linear_grid(-5.0, 5.0, 11);
        let r = check_thorin_composition(&gaussian(), &grid, 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_kexp_alt(&gaussian(), &grid, 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn power_forms_on_gaussian() {
        let grid = linear_grid(0.0, 5.0, 6);
        assert!(check_power_pair(1.0, &gaussian(), &grid, 1e-8).unwrap().pass);
        assert!(check_power_lmap(1.0, &gaussian(), &grid, 1e-8).unwrap().pass);
    }

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(power_pair(0.0).is_err());
        assert!(gamma_lmap(-1.0).is_err());
    }
}
