mod common;

use levymap::integral_map::{
    apply, apply_nested, compose, domain_check, transform_triple, verify_conv_power, verify_dilation,
    verify_homomorphism, MappingSpec,
};
use levymap::levy_core::{exponent_of, Atom, LevyExponent, LevyTriple, SpectralDensity, SpectralMeasure};
use levymap::mapping_catalog::{kexp, kexp_alt, lmap, power_kernel, thorin};
use levymap::measure_alg::{Interval, KernelFunction, TimeChange};
use levymap::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn exponent(t: LevyTriple) -> LevyExponent {
    exponent_of(&t).unwrap()
}

fn gaussian() -> LevyExponent {
    exponent(LevyTriple::gaussian(0.0, 1.0).unwrap())
}

static JUMPS: [(f64, f64); 2] = [(1.0, 1.0), (-0.5, 0.7)];

fn jumps() -> LevyExponent {
    exponent(LevyTriple::compound_poisson(JUMPS.iter().map(|&(x, mass)| Atom { x, mass }).collect()).unwrap())
}

fn assert_close(a: Complex64, b: Complex64, tol: f64, what: &str) {
    assert!((a - b).norm() <= tol, "{what}: {a} vs {b}");
}

#[test]
fn gaussian_images_are_closed_form() {
    let l = apply(&lmap(), &gaussian()).unwrap();
    let k = apply(&kexp(), &gaussian()).unwrap();
    let t = apply(&thorin(), &gaussian()).unwrap();
    for y in [-6.0, 0.5, 2.0, 10.0] {
        assert_close(l.eval(y).unwrap(), Complex64::new(-y * y / 4.0, 0.0), 1e-9, "lmap");
        assert_close(k.eval(y).unwrap(), Complex64::new(-y * y, 0.0), 1e-9, "kexp");
        assert_close(t.eval(y).unwrap(), Complex64::new(-y * y / 2.0, 0.0), 1e-8, "thorin");
    }
}

#[test]
fn images_match_independent_quadrature() {
    let gamma = common::gamma_jumps(1.0, 1.0);
    let cp = common::compound_poisson(&JUMPS);
    let g = exponent(LevyTriple::gamma(1.0, 1.0).unwrap());
    for y in [-3.0, 0.7, 5.0] {
        assert_close(apply(&lmap(), &g).unwrap().eval(y).unwrap(), common::lmap(gamma, y), 1e-8, "lmap gamma");
        assert_close(apply(&kexp(), &g).unwrap().eval(y).unwrap(), common::kexp(gamma, y), 1e-8, "kexp gamma");
        assert_close(apply(&lmap(), &jumps()).unwrap().eval(y).unwrap(), common::lmap(cp, y), 1e-8, "lmap cp");
        assert_close(apply(&kexp(), &jumps()).unwrap().eval(y).unwrap(), common::kexp(cp, y), 1e-8, "kexp cp");
        assert_close(apply(&thorin(), &jumps()).unwrap().eval(y).unwrap(), common::thorin(cp, y), 1e-8, "thorin cp");
    }
}

#[test]
fn log_moment_failure_is_a_domain_violation() {
    let e = std::f64::consts::E;
    let tail = SpectralDensity::new("1/(x ln^2 x)", e, f64::INFINITY, |x: f64| 1.0 / (x * x.ln().powi(2))).unwrap();
    let law = exponent(LevyTriple::new(0.0, 0.0, SpectralMeasure::Density(tail)).unwrap());
    let report = domain_check(&lmap(), &law);
    assert!(report.log_moment_required);
    assert_eq!(report.log_moment_holds, Some(false));
    assert!(matches!(apply(&lmap(), &law), Err(Error::DomainViolation(_))));
    // the upsilon-type map needs no log moment
    let r = domain_check(&kexp(), &law);
    assert!(r.in_domain(), "{:?}", r.notes);
}

#[test]
fn single_composition_is_an_echo() {
    let spec = power_kernel(2.0).unwrap();
    let c = compose(std::slice::from_ref(&spec)).unwrap();
    assert_eq!(c.label(), spec.label());
    assert!(compose(&[]).is_err());
}

#[test]
fn nested_equals_composed_on_jumps() {
    let specs = [kexp_alt(), power_kernel(0.5).unwrap()];
    let nested = apply_nested(&specs, &jumps()).unwrap();
    let composed = apply(&compose(&specs).unwrap(), &jumps()).unwrap();
    for y in [-2.0, 1.0, 8.0] {
        assert_close(nested.eval(y).unwrap(), composed.eval(y).unwrap(), 1e-7, "nested vs composed");
    }
}

#[test]
fn triple_transform_agrees_with_exponent() {
    let law = LevyTriple::compound_poisson(JUMPS.iter().map(|&(x, mass)| Atom { x, mass }).collect())
        .unwrap()
        .with_shift(0.3);
    for spec in [kexp(), lmap()] {
        let mapped = exponent(transform_triple(&spec, &law).unwrap());
        let direct = apply(&spec, &exponent_of(&law).unwrap()).unwrap();
        for y in [-4.0, 0.5, 3.0] {
            assert_close(mapped.eval(y).unwrap(), direct.eval(y).unwrap(), 1e-7, spec.label());
        }
    }
}

fn spec_strategy() -> impl Strategy<Value = MappingSpec> {
    prop_oneof![
        Just(kexp()),
        Just(lmap()),
        Just(kexp_alt()),
        (0.5..2.0f64).prop_map(|b| power_kernel(b).unwrap()),
        (0.5..2.0f64).prop_map(|g| {
            MappingSpec::new(KernelFunction::identity(), TimeChange::power(g, Interval::unit()).unwrap()).unwrap()
        }),
    ]
}

fn small_grid() -> Vec<f64> {
    vec![-3.0, -0.5, 1.0, 4.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mapping_is_a_homomorphism(spec in spec_strategy(), v in 0.1..3.0f64) {
        let a = exponent(LevyTriple::gaussian(0.2, v).unwrap());
        let gap = verify_homomorphism(&spec, &a, &jumps(), &small_grid()).unwrap();
        prop_assert!(gap <= 1e-8, "{gap}");
    }

    #[test]
    fn convolution_powers_commute(spec in spec_strategy(), s in 0.3..3.0f64) {
        let gap = verify_conv_power(&spec, &jumps(), s, &small_grid()).unwrap();
        prop_assert!(gap <= 1e-8, "{gap}");
    }

    #[test]
    fn dilations_commute(spec in spec_strategy(), u in prop_oneof![-2.0..-0.2f64, 0.2..2.0f64]) {
        let gap = verify_dilation(&spec, &jumps(), u, &small_grid()).unwrap();
        prop_assert!(gap <= 1e-8, "{gap}");
    }

    #[test]
    fn mapped_exponent_keeps_symmetries(spec in spec_strategy(), y in 0.1..8.0f64) {
        let m = apply(&spec, &jumps()).unwrap();
        prop_assert!(m.eval(0.0).unwrap().norm() < 1e-14);
        prop_assert!((m.eval(-y).unwrap() - m.eval(y).unwrap().conj()).norm() < 1e-9);
    }
}
