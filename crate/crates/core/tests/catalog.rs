use levymap::integral_map::compose;
use levymap::levy_core::{exponent_of, Atom, LevyExponent, LevyTriple};
use levymap::mapping_catalog::{
    check_gamma_lmap_unit, check_kexp_alt, check_power_lmap, check_power_pair, factors, named, power_lmap,
    power_pair, unit_interval_specs, ClassTag, MappingName,
};
use levymap::measure_alg::Direction;

fn jumps() -> LevyExponent {
    exponent_of(&LevyTriple::compound_poisson(vec![Atom { x: 1.0, mass: 1.0 }]).unwrap()).unwrap()
}

fn grid() -> Vec<f64> {
    vec![-5.0, -1.0, 0.3, 2.0, 7.0]
}

#[test]
fn names_parse_and_carry_class_tags() {
    for (text, tag) in [
        ("kexp", ClassTag::E),
        ("kexp-alt", ClassTag::E),
        ("lmap", ClassTag::L),
        ("thorin", ClassTag::T),
        ("power-pair:2", ClassTag::Other),
    ] {
        let name = MappingName::parse(text).unwrap();
        assert_eq!(named(name).unwrap().class_tag, tag, "{text}");
    }
    assert!(MappingName::parse("gamma-lmap:x").is_err());
    assert!(MappingName::parse("power-pair:-1").is_ok_and(|n| named(n).is_err()));
}

#[test]
fn composite_entries_have_two_factors() {
    for name in [MappingName::Thorin, MappingName::PowerPair(1.0), MappingName::PowerLmap(0.5)] {
        assert_eq!(factors(name).unwrap().len(), 2);
    }
    assert_eq!(factors(MappingName::Lmap).unwrap().len(), 1);
}

#[test]
fn unit_interval_specs_are_bounded() {
    for spec in unit_interval_specs() {
        assert!(spec.interval().is_bounded(), "{}", spec.label());
    }
}

#[test]
fn power_pair_clock_density() {
    // clock density of the single form: 2β w^{β-1} (1 - w^β)
    for beta in [0.5, 1.0, 2.0] {
        let spec = power_pair(beta).unwrap();
        let composed = compose(&factors(MappingName::PowerPair(beta)).unwrap()).unwrap();
        for w in [0.05f64, 0.3, 0.7, 0.95] {
            let want = 2.0 * beta * w.powf(beta - 1.0) * (1.0 - w.powf(beta));
            let single = spec.time().rho_density(w).unwrap();
            let image = composed.time().rho_density(w).unwrap();
            assert!((single - want).abs() < 1e-12 * want.max(1.0), "beta={beta} w={w}: {single}");
            assert!((image - want).abs() < 1e-8 * want.max(1.0), "beta={beta} w={w}: {image}");
        }
    }
}

#[test]
fn power_lmap_clock_density() {
    // ρ(dw) = (1 - w^β)/w dw, infinite near 0, so the clock is non-increasing
    for beta in [0.5, 2.0] {
        let spec = power_lmap(beta).unwrap();
        assert_eq!(spec.time().direction(), Direction::NonIncreasing);
        for w in [0.01f64, 0.5, 0.9] {
            let want = (1.0 - w.powf(beta)) / w;
            let got = spec.time().rho_density(w).unwrap();
            assert!((got - want).abs() < 1e-12 * want, "beta={beta} w={w}");
        }
    }
}

#[test]
fn identities_pass_on_compound_poisson() {
    let e = jumps();
    let g = grid();
    assert!(check_kexp_alt(&e, &g, 1e-6).unwrap().pass);
    assert!(check_power_pair(1.0, &e, &g, 1e-6).unwrap().pass);
    assert!(check_power_lmap(2.0, &e, &g, 1e-6).unwrap().pass);
    assert!(check_gamma_lmap_unit(&e, &g, 1e-6).unwrap().pass);
}

#[test]
fn failed_identity_reports_error_curve() {
    let r = check_power_pair(1.0, &jumps(), &grid(), 0.0).unwrap();
    assert_eq!(r.errors.len(), grid().len());
    assert_eq!(r.forms.len(), 3);
    assert!(r.max_abs_error >= 0.0 && r.max_abs_error < 1e-6);
}
