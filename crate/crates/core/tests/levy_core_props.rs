mod common;

use levymap::levy_core::{
    check_id_log, conv_power, convolve, dilate, exponent_of, negate_law, Atom, LevyExponent, LevyTriple,
    SpectralDensity, SpectralMeasure,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn law_strategy() -> impl Strategy<Value = LevyTriple> {
    prop_oneof![
        (-2.0..2.0f64, 0.01..4.0f64).prop_map(|(m, v)| LevyTriple::gaussian(m, v).unwrap()),
        (0.1..3.0f64, 0.2..5.0f64).prop_map(|(k, r)| LevyTriple::gamma(k, r).unwrap()),
        prop::collection::vec((-4.0..4.0f64, 0.01..3.0f64), 1..4).prop_map(|atoms| {
            LevyTriple::compound_poisson(atoms.into_iter().map(|(x, mass)| Atom { x, mass }).collect()).unwrap()
        }),
    ]
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponent_vanishes_at_zero(t in law_strategy()) {
        let e = exponent_of(&t).unwrap();
        prop_assert!(e.eval(0.0).unwrap().norm() < 1e-14);
    }

    #[test]
    fn conjugate_symmetry(t in law_strategy(), y in -20.0..20.0f64) {
        let e = exponent_of(&t).unwrap();
        prop_assert!(close(e.eval(-y).unwrap(), e.eval(y).unwrap().conj(), 1e-9));
    }

    #[test]
    fn real_part_is_non_positive(t in law_strategy(), y in -20.0..20.0f64) {
        let e = exponent_of(&t).unwrap();
        prop_assert!(e.eval(y).unwrap().re <= 1e-12);
    }

    #[test]
    fn convolution_adds_exponents(a in law_strategy(), b in law_strategy(), y in -10.0..10.0f64) {
        let (ea, eb) = (exponent_of(&a).unwrap(), exponent_of(&b).unwrap());
        let sum = ea.eval(y).unwrap() + eb.eval(y).unwrap();
        prop_assert!(close(convolve(&ea, &eb).eval(y).unwrap(), sum, 1e-9));
        // the merged triple is a second route to the same exponent
        let merged = exponent_of(&a.merge(&b)).unwrap();
        prop_assert!(close(merged.eval(y).unwrap(), sum, 1e-9));
    }

    #[test]
    fn convolution_power_scales(t in law_strategy(), s in 0.1..4.0f64, y in -10.0..10.0f64) {
        let e = exponent_of(&t).unwrap();
        let want = e.eval(y).unwrap() * s;
        prop_assert!(close(conv_power(&e, s).unwrap().eval(y).unwrap(), want, 1e-10));
        let via_triple = exponent_of(&t.conv_power(s).unwrap()).unwrap();
        prop_assert!(close(via_triple.eval(y).unwrap(), want, 1e-9));
    }

    #[test]
    fn dilation_and_reflection(t in law_strategy(), u in -3.0..3.0f64, y in -5.0..5.0f64) {
        let e = exponent_of(&t).unwrap();
        prop_assert!(close(dilate(&e, u).unwrap().eval(y).unwrap(), e.eval(u * y).unwrap(), 1e-10));
        prop_assert!(close(negate_law(&e).eval(y).unwrap(), e.eval(-y).unwrap(), 1e-12));
        let reflected = exponent_of(&t.reflect()).unwrap();
        prop_assert!(close(reflected.eval(y).unwrap(), e.eval(-y).unwrap(), 1e-9));
    }
}

#[test]
fn gamma_exponent_matches_closed_form() {
    for (k, rate) in [(1.0, 1.0), (0.5, 2.0), (2.5, 0.7)] {
        let e = exponent_of(&LevyTriple::gamma(k, rate).unwrap()).unwrap();
        let oracle = common::gamma_jumps(k, rate);
        for y in [-7.0, -0.3, 0.01, 1.0, 12.0] {
            let got = e.eval(y).unwrap();
            assert!(close(got, oracle(y), 1e-10), "k={k} rate={rate} y={y}: {got} vs {}", oracle(y));
        }
    }
}

#[test]
fn compound_poisson_matches_closed_form() {
    static ATOMS: [(f64, f64); 3] = [(0.5, 1.0), (-2.0, 0.3), (3.0, 0.25)];
    let law = LevyTriple::compound_poisson(ATOMS.iter().map(|&(x, mass)| Atom { x, mass }).collect()).unwrap();
    let e = exponent_of(&law).unwrap();
    let oracle = common::compound_poisson(&ATOMS);
    for y in [-4.0, 0.2, 1.0, 9.0] {
        assert!(close(e.eval(y).unwrap(), oracle(y), 1e-12));
    }
}

#[test]
fn gaussian_exponent_is_quadratic() {
    let e = exponent_of(&LevyTriple::gaussian(0.0, 2.0).unwrap()).unwrap();
    let oracle = common::gaussian(2.0);
    for y in [-3.0, 0.5, 10.0] {
        assert!(close(e.eval(y).unwrap(), oracle(y), 1e-15));
    }
}

#[test]
fn id_log_membership_of_catalog_laws() {
    assert!(check_id_log(&SpectralMeasure::gamma(1.0, 1.0).unwrap()).unwrap());
    assert!(check_id_log(&SpectralMeasure::symmetric_stable(1.5, 1.0).unwrap()).unwrap());
    assert!(check_id_log(&SpectralMeasure::atoms(vec![Atom { x: 1.0, mass: 1.0 }]).unwrap()).unwrap());
}

#[test]
fn stable_exponent_is_symmetric_power() {
    let e: LevyExponent = exponent_of(&LevyTriple::symmetric_stable(1.0, 1.0).unwrap()).unwrap();
    let a = e.eval(1.0).unwrap();
    let b = e.eval(3.0).unwrap();
    assert!(a.im.abs() < 1e-12 && b.im.abs() < 1e-12);
    assert!((b.re / a.re - 3.0).abs() < 1e-9);
}

#[test]
fn slowly_decaying_density_tail() {
    // reference values from an independent oscillatory quadrature at 30 digits
    let e = std::f64::consts::E;
    let d = SpectralDensity::new("1/(x ln^2 x)", e, f64::INFINITY, |x: f64| 1.0 / (x * x.ln().powi(2))).unwrap();
    let phi = exponent_of(&LevyTriple::new(0.0, 0.0, SpectralMeasure::Density(d)).unwrap()).unwrap();
    let want = [
        (0.1, Complex64::new(-0.528_288_334_152_421_6, 0.348_782_417_206_466_5)),
        (1.0, Complex64::new(-1.216_061_756_334_172_5, -0.124_667_860_722_214_5)),
    ];
    for (y, v) in want {
        assert!(close(phi.eval(y).unwrap(), v, 1e-9), "y={y}: {}", phi.eval(y).unwrap());
        assert!(close(phi.eval(-y).unwrap(), v.conj(), 1e-9));
    }
}
