//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! Real and complex integrands share one engine: both parts of a complex
//! integrand are refined together, with the error measured as the modulus of
//! the Gauss/Kronrod difference. Integrands may be fallible so that errors
//! raised deep inside nested integrals (an inner quadrature that failed, a
//! non-finite exponent) surface unchanged.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// 15-point Kronrod abscissae, outermost first; the last entry is the centre.
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// 7-point Gauss weights for abscissae `XGK15[1]`, `[3]`, `[5]` and the centre.
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e} after {subintervals} subintervals")]
    NotConverged {
        estimate: f64,
        error: f64,
        subintervals: usize,
    },
    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },
    #[error("invalid integration bounds ({a}, {b})")]
    InvalidBounds { a: f64, b: f64 },
}

/// Values the adaptive engine can integrate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

/// Tolerances and budget for one adaptive integration.
///
/// Convergence is declared once the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subintervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_subintervals: 4000,
        }
    }
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn eval_checked<V, E, F>(f: &mut F, x: f64) -> Result<V, E>
where
    V: QuadValue,
    E: From<QuadratureError>,
    F: FnMut(f64) -> Result<V, E>,
{
    let v = f(x)?;
    if v.is_finite_value() {
        Ok(v)
    } else {
        Err(QuadratureError::NonFinite { at: x }.into())
    }
}

fn gk15<V, E, F>(f: &mut F, a: f64, b: f64) -> Result<Segment<V>, E>
where
    V: QuadValue,
    E: From<QuadratureError>,
    F: FnMut(f64) -> Result<V, E>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval_checked(f, centre)?;
    let mut resk = fc * WGK15[7];
    let mut resg = fc * WG7[3];
    let mut resabs = fc.magnitude() * WGK15[7];
    let mut left = [V::default(); 7];
    let mut right = [V::default(); 7];
    for j in 0..7 {
        let dx = half * XGK15[j];
        let f1 = eval_checked(f, centre - dx)?;
        let f2 = eval_checked(f, centre + dx)?;
        left[j] = f1;
        right[j] = f2;
        resk = resk + (f1 + f2) * WGK15[j];
        resabs += (f1.magnitude() + f2.magnitude()) * WGK15[j];
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * WG7[j / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK15[7] * (fc - mean).magnitude();
    for j in 0..7 {
        resasc += WGK15[j] * ((left[j] - mean).magnitude() + (right[j] - mean).magnitude());
    }
    let scale = half.abs();
    let error = rescale_error(
        (resk - resg).magnitude() * scale,
        resabs * scale,
        resasc * scale,
    );
    Ok(Segment {
        a,
        b,
        value: resk * half,
        error,
    })
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_subintervals(mut self, n: usize) -> Self {
        self.max_subintervals = n;
        self
    }

    /// Integrate a real function over `(a, b)`; either bound may be infinite.
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<f64, QuadratureError>
    where
        F: FnMut(f64) -> f64,
    {
        self.try_integrate(|x| Ok::<f64, QuadratureError>(f(x)), a, b)
            .map(|e| e.value)
    }

    pub fn integrate_complex<F>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
    ) -> Result<Complex64, QuadratureError>
    where
        F: FnMut(f64) -> Complex64,
    {
        self.try_integrate(|x| Ok::<Complex64, QuadratureError>(f(x)), a, b)
            .map(|e| e.value)
    }

    /// Integrate over `(a, b)` with a fallible integrand.
    ///
    /// Semi-infinite ranges use `x = a + u/(1-u)`; the whole line is split at 0.
    pub fn try_integrate<V, E, F>(&self, mut f: F, a: f64, b: f64) -> Result<Estimate<V>, E>
    where
        V: QuadValue,
        E: From<QuadratureError>,
        F: FnMut(f64) -> Result<V, E>,
    {
        if a.is_nan() || b.is_nan() {
            return Err(QuadratureError::InvalidBounds { a, b }.into());
        }
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let est = if lo.is_infinite() && hi.is_infinite() {
            if lo == hi {
                return Err(QuadratureError::InvalidBounds { a, b }.into());
            }
            let half = Quadrature {
                abs_tol: 0.5 * self.abs_tol,
                ..*self
            };
            let left = half.range(&mut f, lo, 0.0)?;
            let right = half.range(&mut f, 0.0, hi)?;
            Estimate {
                value: left.value + right.value,
                error: left.error + right.error,
                evaluations: left.evaluations + right.evaluations,
            }
        } else {
            self.range(&mut f, lo, hi)?
        };
        Ok(Estimate {
            value: est.value * sign,
            ..est
        })
    }

    fn range<V, E, F>(&self, f: &mut F, a: f64, b: f64) -> Result<Estimate<V>, E>
    where
        V: QuadValue,
        E: From<QuadratureError>,
        F: FnMut(f64) -> Result<V, E>,
    {
        if a == b {
            return Ok(Estimate {
                value: V::default(),
                error: 0.0,
                evaluations: 0,
            });
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => self.adaptive(f, &[a, b]),
            (true, false) => self.adaptive(
                &mut |u: f64| {
                    let w = 1.0 - u;
                    Ok(f(a + u / w)? * (1.0 / (w * w)))
                },
                &[0.0, 1.0],
            ),
            (false, true) => self.adaptive(
                &mut |u: f64| {
                    let w = 1.0 - u;
                    Ok(f(b - u / w)? * (1.0 / (w * w)))
                },
                &[0.0, 1.0],
            ),
            (false, false) => Err(QuadratureError::InvalidBounds { a, b }.into()),
        }
    }

    /// Integrate across consecutive breakpoints `points[0] < points[1] < ...`.
    ///
    /// Pieces are integrated independently, each with an equal share of the
    /// absolute tolerance. Outer points may be infinite.
    pub fn try_integrate_pieces<V, E, F>(&self, mut f: F, points: &[f64]) -> Result<Estimate<V>, E>
    where
        V: QuadValue,
        E: From<QuadratureError>,
        F: FnMut(f64) -> Result<V, E>,
    {
        let pieces = points.len().saturating_sub(1).max(1);
        let share = Quadrature {
            abs_tol: self.abs_tol / pieces as f64,
            ..*self
        };
        let mut total = Estimate {
            value: V::default(),
            error: 0.0,
            evaluations: 0,
        };
        for w in points.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let est = share.range(&mut f, w[0], w[1])?;
            total.value = total.value + est.value;
            total.error += est.error;
            total.evaluations += est.evaluations;
        }
        Ok(total)
    }

    /// `∫_a^∞ f(x) e^{iωx} dx` for `f` eventually monotone and decaying.
    ///
    /// Each trigonometric part is summed over the half periods between its
    /// zeros and the partial sums are extrapolated with Wynn's epsilon rule.
    pub fn fourier_tail<E, F>(&self, mut f: F, a: f64, omega: f64) -> Result<Complex64, E>
    where
        E: From<QuadratureError>,
        F: FnMut(f64) -> Result<f64, E>,
    {
        if !(a.is_finite() && omega.is_finite()) {
            return Err(QuadratureError::InvalidBounds { a, b: f64::INFINITY }.into());
        }
        if omega == 0.0 {
            let v = self.range(&mut f, a, f64::INFINITY)?;
            return Ok(Complex64::new(v.value, 0.0));
        }
        let w = omega.abs();
        let re = self.trig_tail(&mut f, a, w, 0.5, |x| (w * x).cos())?;
        let im = self.trig_tail(&mut f, a, w, 0.0, |x| (w * x).sin())?;
        Ok(Complex64::new(re, omega.signum() * im))
    }

    /// `∫_a^∞ f(x) g(x) dx` where `g` vanishes at `(k + offset)π/ω`.
    fn trig_tail<E, F, G>(&self, f: &mut F, a: f64, omega: f64, offset: f64, g: G) -> Result<f64, E>
    where
        E: From<QuadratureError>,
        F: FnMut(f64) -> Result<f64, E>,
        G: Fn(f64) -> f64,
    {
        const MAX_TERMS: usize = 400;
        const WINDOW: usize = 40;
        let half = std::f64::consts::PI / omega;
        let zero = |k: f64| (k + offset) * half;
        let mut k = (a / half - offset).ceil();
        let term_quad = Quadrature {
            abs_tol: 1e-3 * self.abs_tol,
            ..*self
        };
        let mut integrand = |x: f64| -> Result<f64, E> { Ok(f(x)? * g(x)) };
        let head = term_quad.adaptive(&mut integrand, &[a, zero(k)])?.value;
        let mut sums = Vec::with_capacity(MAX_TERMS);
        let mut total = head;
        let mut last: Option<f64> = None;
        let mut settled = 0;
        while sums.len() < MAX_TERMS {
            total += term_quad.adaptive(&mut integrand, &[zero(k), zero(k + 1.0)])?.value;
            k += 1.0;
            sums.push(total);
            if sums.len() < 6 {
                continue;
            }
            let ext = wynn_epsilon(&sums[sums.len().saturating_sub(WINDOW)..]);
            if let Some(prev) = last {
                if (ext - prev).abs() <= self.abs_tol.max(self.rel_tol * ext.abs()) {
                    settled += 1;
                    if settled >= 2 {
                        return Ok(ext);
                    }
                } else {
                    settled = 0;
                }
            }
            last = Some(ext);
        }
        Err(QuadratureError::NotConverged {
            estimate: last.unwrap_or(total).abs(),
            error: f64::NAN,
            subintervals: MAX_TERMS,
        }
        .into())
    }

    fn adaptive<V, E, F>(&self, f: &mut F, points: &[f64]) -> Result<Estimate<V>, E>
    where
        V: QuadValue,
        E: From<QuadratureError>,
        F: FnMut(f64) -> Result<V, E>,
    {
        let mut heap = BinaryHeap::new();
        let mut frozen_value = V::default();
        let mut frozen_error = 0.0;
        let mut evaluations = 0;
        for w in points.windows(2) {
            heap.push(gk15(f, w[0], w[1])?);
            evaluations += 15;
        }
        loop {
            let mut value = frozen_value;
            let mut error = frozen_error;
            for s in heap.iter() {
                value = value + s.value;
                error += s.error;
            }
            let target = self.abs_tol.max(self.rel_tol * value.magnitude());
            if error <= target || heap.is_empty() {
                if error <= target {
                    return Ok(Estimate {
                        value,
                        error,
                        evaluations,
                    });
                }
                return Err(QuadratureError::NotConverged {
                    estimate: value.magnitude(),
                    error,
                    subintervals: evaluations / 15,
                }
                .into());
            }
            if heap.len() >= self.max_subintervals {
                return Err(QuadratureError::NotConverged {
                    estimate: value.magnitude(),
                    error,
                    subintervals: heap.len(),
                }
                .into());
            }
            let worst = heap.pop().expect("heap is non-empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Cannot be bisected further in floating point.
                frozen_value = frozen_value + worst.value;
                frozen_error += worst.error;
                continue;
            }
            heap.push(gk15(f, worst.a, mid)?);
            heap.push(gk15(f, mid, worst.b)?);
            evaluations += 30;
        }
    }
}

/// Last even-column entry of Wynn's epsilon table for the partial sums `s`.
fn wynn_epsilon(s: &[f64]) -> f64 {
    let mut best = *s.last().expect("non-empty");
    let mut prev = vec![0.0; s.len() + 1];
    let mut cur = s.to_vec();
    let mut column = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                return if column % 2 == 0 { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return best;
        }
        column += 1;
        prev = cur;
        cur = next;
        if column % 2 == 0 {
            best = *cur.last().expect("non-empty");
        }
    }
    best
}
