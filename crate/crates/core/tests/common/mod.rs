//! Reference values computed without the library's quadrature or special
//! functions: double-exponential quadrature and closed-form exponents.

#![allow(dead_code)]

use num_complex::Complex64;

/// Tanh-sinh rule on `(a, b)`, halving the step until two levels agree.
pub fn tanh_sinh<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64) -> Complex64 {
    let c = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |t: f64| -> Complex64 {
        let s = half_pi * t.sinh();
        let sech = 1.0 / s.cosh();
        let w = c * half_pi * t.cosh() * sech * sech;
        // endpoint distances without cancellation
        let x = if s > 0.0 {
            b - 2.0 * c / ((2.0 * s).exp() + 1.0)
        } else {
            a + 2.0 * c / ((-2.0 * s).exp() + 1.0)
        };
        if !(x > a && x < b) || w == 0.0 || !w.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        f(x) * w
    };
    let mut h = 0.5;
    let mut prev = Complex64::new(f64::NAN, 0.0);
    let mut sum;
    loop {
        sum = node(0.0);
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > 6.5 {
                break;
            }
            sum += node(t) + node(-t);
            k += 1;
        }
        let est = sum * h;
        if (est - prev).norm() <= 1e-15 * est.norm().max(1e-300) || h < 1.0 / 512.0 {
            return est;
        }
        prev = est;
        h *= 0.5;
    }
}

/// Exp-sinh rule on `(a, ∞)`.
pub fn exp_sinh<F: Fn(f64) -> Complex64>(f: F, a: f64) -> Complex64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |t: f64| -> Complex64 {
        let e = (half_pi * t.sinh()).exp();
        let w = half_pi * t.cosh() * e;
        let x = a + e;
        if !x.is_finite() || e == 0.0 || x == a {
            return Complex64::new(0.0, 0.0);
        }
        let v = f(x);
        if v == Complex64::new(0.0, 0.0) {
            return v;
        }
        v * w
    };
    let mut h = 0.5;
    let mut prev = Complex64::new(f64::NAN, 0.0);
    loop {
        let mut sum = node(0.0);
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > 5.0 {
                break;
            }
            sum += node(t) + node(-t);
            k += 1;
        }
        let est = sum * h;
        if (est - prev).norm() <= 1e-15 * est.norm().max(1e-300) || h < 1.0 / 512.0 {
            return est;
        }
        prev = est;
        h *= 0.5;
    }
}

pub fn real_tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    tanh_sinh(|x| Complex64::new(f(x), 0.0), a, b).re
}

pub fn real_exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64) -> f64 {
    exp_sinh(|x| Complex64::new(f(x), 0.0), a).re
}

pub const EULER: f64 = 0.577_215_664_901_532_9;

/// Γ(0; w) = ∫_w^∞ e^{-s}/s ds.
pub fn e1(w: f64) -> f64 {
    real_exp_sinh(|s| (-s).exp() / s, w)
}

pub fn gaussian(var: f64) -> impl Fn(f64) -> Complex64 + Copy {
    move |y| Complex64::new(-0.5 * var * y * y, 0.0)
}

/// Exponent of the triple `[0, 0, k e^{-λx}/x dx]` on `x > 0`.
pub fn gamma_jumps(k: f64, rate: f64) -> impl Fn(f64) -> Complex64 + Copy {
    move |y| {
        let i = Complex64::i();
        -k * (Complex64::new(1.0, 0.0) - i * y / rate).ln() - i * y * k * (1.0 - (-rate).exp()) / rate
    }
}

/// Exponent of a compound-Poisson triple with zero shift.
pub fn compound_poisson(atoms: &'static [(f64, f64)]) -> impl Fn(f64) -> Complex64 + Copy {
    move |y| {
        atoms
            .iter()
            .map(|&(x, m)| {
                let comp = if x.abs() <= 1.0 { y * x } else { 0.0 };
                (Complex64::new(0.0, y * x).exp() - 1.0 - Complex64::new(0.0, comp)) * m
            })
            .sum()
    }
}

/// `∫_0^1 Φ(wy) dw / w`, the selfdecomposability map.
pub fn lmap<F: Fn(f64) -> Complex64>(phi: F, y: f64) -> Complex64 {
    tanh_sinh(|w| phi(w * y) / w, 0.0, 1.0)
}

/// `∫_0^∞ Φ(ty) e^{-t} dt`.
pub fn kexp<F: Fn(f64) -> Complex64>(phi: F, y: f64) -> Complex64 {
    exp_sinh(|t| phi(t * y) * (-t).exp(), 0.0)
}

/// `∫_0^∞ Φ(wy) e^{-w}/w dw`.
pub fn thorin<F: Fn(f64) -> Complex64>(phi: F, y: f64) -> Complex64 {
    exp_sinh(|w| phi(w * y) * ((-w).exp() / w), 0.0)
}
