mod common;

use levymap::measure_alg::{
    product_time_change, pushforward, pushforward_numeric, Direction, HalfLineMeasure, Interval, KernelFunction,
    Monotonicity, SampleLaw, Table, TimeChange,
};
use proptest::prelude::*;

fn unit_square() -> Vec<HalfLineMeasure> {
    vec![HalfLineMeasure::lebesgue(Interval::unit()), HalfLineMeasure::lebesgue(Interval::unit())]
}

fn ids() -> Vec<KernelFunction> {
    vec![KernelFunction::identity(), KernelFunction::identity()]
}

fn exp_clock() -> Vec<HalfLineMeasure> {
    vec![
        HalfLineMeasure::lebesgue(Interval::half_line()),
        TimeChange::one_minus_exp(Interval::half_line()).rho(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn uniform_product_density_and_cdf(w in 0.001..0.999f64) {
        // U₁U₂ has density -ln w and cdf w - w ln w
        let numeric = pushforward_numeric(&ids(), &unit_square()).unwrap();
        let d = numeric.density(w).unwrap();
        prop_assert!((d + w.ln()).abs() <= 1e-9 * (1.0 + w.ln().abs()), "{d}");
        let c = numeric.cdf(w).unwrap();
        prop_assert!((c - (w - w * w.ln())).abs() <= 1e-9);
    }

    #[test]
    fn closed_and_numeric_images_agree(w in 0.02..12.0f64) {
        let h = vec![KernelFunction::exp_decay(), KernelFunction::identity()];
        let closed = pushforward(&h, &exp_clock()).unwrap();
        let numeric = pushforward_numeric(&h, &exp_clock()).unwrap();
        let (a, b) = (closed.density(w).unwrap(), numeric.density(w).unwrap());
        prop_assert!((a - b).abs() <= 1e-7 * a.abs(), "{a} vs {b}");
        prop_assert!((a - (-w).exp() / w).abs() <= 1e-12 * a);
    }

    #[test]
    fn cdf_is_monotone(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let m = pushforward_numeric(&ids(), &unit_square()).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(m.cdf(lo).unwrap() <= m.cdf(hi).unwrap() + 1e-14);
    }

    #[test]
    fn kernel_inverse_round_trips(t in 0.01..20.0f64, p in 0.2..3.0f64) {
        for k in [KernelFunction::exp_decay(), KernelFunction::power(p), KernelFunction::identity()] {
            let w = k.eval(t);
            let back = k.inverse(w).unwrap();
            prop_assert!((back - t).abs() <= 1e-9 * t.max(1.0), "{} at {t}: {back}", k.label());
        }
    }

    #[test]
    fn table_interpolates_linearly(slope in -3.0..3.0f64, x in 0.0..2.0f64) {
        let t = Table::new(vec![0.0, 1.0, 2.0], vec![0.0, slope, 2.0 * slope]).unwrap();
        prop_assert!((t.eval(x) - slope * x).abs() < 1e-12);
        let mono = t.monotonicity().unwrap();
        let expected = if slope > 0.0 {
            Monotonicity::Increasing
        } else if slope < 0.0 {
            Monotonicity::Decreasing
        } else {
            Monotonicity::Constant
        };
        prop_assert_eq!(mono, expected);
    }

    #[test]
    fn scaled_time_change_scales_mass(s in 0.1..5.0f64, t in 0.05..0.95f64) {
        let r = TimeChange::one_minus_exp(Interval::half_line());
        let rs = r.scaled(s).unwrap();
        prop_assert!((rs.value(t).unwrap() - s * r.value(t).unwrap()).abs() < 1e-14);
        prop_assert!((rs.rho_mass(0.0, t).unwrap() - s * r.rho_mass(0.0, t).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn exponential_clock_image_tail_is_e1() {
    let h = vec![KernelFunction::exp_decay(), KernelFunction::identity()];
    let numeric = pushforward_numeric(&h, &exp_clock()).unwrap();
    for w in [0.1, 1.0, 3.0] {
        let tail = numeric.tail(w).unwrap();
        let oracle = common::e1(w);
        assert!((tail - oracle).abs() < 1e-8, "w={w}: {tail} vs {oracle}");
    }
}

#[test]
fn interval_rejects_bad_endpoints() {
    assert!(Interval::new(1.0, 1.0).is_err());
    assert!(Interval::new(-1.0, 1.0).is_err());
    assert!(Interval::new(f64::INFINITY, f64::INFINITY).is_err());
    assert!(Interval::new(0.0, f64::INFINITY).is_ok());
}

#[test]
fn tabulated_time_change_needs_monotone_table() {
    let zigzag = Table::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.5]).unwrap();
    assert!(TimeChange::tabulated(zigzag, Interval::new(0.0, 2.0).unwrap()).is_err());
    let down = Table::new(vec![0.0, 2.0], vec![3.0, 1.0]).unwrap();
    let r = TimeChange::tabulated(down, Interval::new(0.0, 2.0).unwrap()).unwrap();
    assert_eq!(r.direction(), Direction::NonIncreasing);
    assert!((r.rho_mass(0.0, 2.0).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn product_clock_monte_carlo_is_seeded() {
    let dists = [SampleLaw::Exponential { rate: 1.0 }, SampleLaw::Exponential { rate: 1.0 }];
    let h = [KernelFunction::exp_decay(), KernelFunction::identity()];
    let a = product_time_change(&dists, &h, 20_000, 11).unwrap();
    let b = product_time_change(&dists, &h, 20_000, 11).unwrap();
    assert_eq!(a.empirical_cdf, b.empirical_cdf);
    assert!(a.sup_distance < 4.0 / (20_000f64).sqrt(), "{}", a.sup_distance);
}

#[test]
fn uniform_product_has_unit_mass() {
    let m = pushforward(&ids(), &unit_square()).unwrap();
    assert!((m.total_mass().unwrap() - 1.0).abs() < 1e-10);
}
