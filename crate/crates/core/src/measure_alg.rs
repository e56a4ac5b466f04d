//! Positive measures on the half-line and their images under products of
//! kernels.
//!
//! Everything is lazy: densities of image measures are evaluated on demand by
//! adaptive quadrature, and products are integrated iteratively.

use std::fmt;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Uniform};

use crate::error::{Error, Result};
use crate::quadrature::{QuadValue, Quadrature, QuadratureError};
use crate::special_fn::inc_gamma_tail;

mod closed_form;

/// Relative tolerance for densities and masses computed by quadrature.
pub const DENSITY_REL_TOL: f64 = 1e-13;

pub(crate) fn measure_quad() -> Quadrature {
    Quadrature::new(1e-16, DENSITY_REL_TOL).with_max_subintervals(2000)
}

/// Half-open interval `(lo, hi]` with `0 ≤ lo < hi ≤ ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo.is_finite() && hi > lo) {
            return Err(Error::invalid("interval", format!("need 0 <= a < b <= inf, got ({lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn half_line() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }

    fn clamp(&self, t: f64) -> f64 {
        t.max(self.lo).min(self.hi)
    }

    /// A handful of interior points, geometric towards an infinite end.
    pub(crate) fn probes(&self) -> Vec<f64> {
        if self.hi.is_finite() {
            (1..10).map(|k| self.lo + (self.hi - self.lo) * k as f64 / 10.0).collect()
        } else {
            (0..10).map(|k| self.lo + 0.01 * 4f64.powi(k)).collect()
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
}

/// Piecewise-linear table through knots `(t_k, v_k)` with `t` non-decreasing.
///
/// Repeated abscissae encode jumps; evaluation is right-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    t: Vec<f64>,
    v: Vec<f64>,
}

impl Table {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() || t.len() < 2 {
            return Err(Error::invalid("table", "need at least two knots with matching values"));
        }
        if t.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("table", "knots must be finite"));
        }
        if t.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("table", "abscissae must be non-decreasing"));
        }
        Ok(Self { t, v })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.t, &self.v)
    }

    fn segment(&self, x: f64) -> Option<usize> {
        let idx = self.t.partition_point(|&tk| tk <= x);
        if idx == 0 || idx == self.t.len() {
            None
        } else {
            Some(idx - 1)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.segment(x) {
            Some(k) => {
                let w = (x - self.t[k]) / (self.t[k + 1] - self.t[k]);
                self.v[k] + w * (self.v[k + 1] - self.v[k])
            }
            None if x < self.t[0] => self.v[0],
            None => self.v[self.v.len() - 1],
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        match self.segment(x) {
            Some(k) => (self.v[k + 1] - self.v[k]) / (self.t[k + 1] - self.t[k]),
            None => 0.0,
        }
    }

    /// `(t, Δv)` at every repeated abscissa.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.t.len() {
            let mut j = i;
            while j + 1 < self.t.len() && self.t[j + 1] == self.t[i] {
                j += 1;
            }
            if j > i && self.v[j] != self.v[i] {
                out.push((self.t[i], self.v[j] - self.v[i]));
            }
            i = j + 1;
        }
        out
    }

    pub fn monotonicity(&self) -> Option<Monotonicity> {
        let up = self.v.windows(2).all(|w| w[1] >= w[0]);
        let down = self.v.windows(2).all(|w| w[1] <= w[0]);
        match (up, down) {
            (true, true) => Some(Monotonicity::Constant),
            (true, false) => Some(Monotonicity::Increasing),
            (false, true) => Some(Monotonicity::Decreasing),
            (false, false) => None,
        }
    }

    fn inverse(&self, target: f64) -> Option<f64> {
        let increasing = match self.monotonicity()? {
            Monotonicity::Increasing => true,
            Monotonicity::Decreasing => false,
            Monotonicity::Constant => return None,
        };
        for k in 0..self.t.len() - 1 {
            let (v0, v1) = (self.v[k], self.v[k + 1]);
            let inside = if increasing {
                target >= v0 && target <= v1
            } else {
                target <= v0 && target >= v1
            };
            if inside && v1 != v0 && self.t[k + 1] > self.t[k] {
                return Some(self.t[k] + (target - v0) / (v1 - v0) * (self.t[k + 1] - self.t[k]));
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    Constant(f64),
    Identity,
    /// `e^{-t}`
    ExpDecay,
    /// `t^p`
    Power(f64),
    /// `-ln t`
    NegLog,
    /// `(1 - √t)^p` on `(0, 1]`
    OneMinusSqrtPower(f64),
    Tabulated(Arc<Table>),
}

/// Integrand `h` of a random integral, `scale · form(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFunction {
    form: KernelForm,
    scale: f64,
}

impl KernelFunction {
    fn of(form: KernelForm) -> Self {
        Self { form, scale: 1.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self::of(KernelForm::Constant(c))
    }

    pub fn identity() -> Self {
        Self::of(KernelForm::Identity)
    }

    pub fn exp_decay() -> Self {
        Self::of(KernelForm::ExpDecay)
    }

    pub fn power(p: f64) -> Self {
        Self::of(KernelForm::Power(p))
    }

    pub fn neg_log() -> Self {
        Self::of(KernelForm::NegLog)
    }

    pub fn one_minus_sqrt_power(p: f64) -> Self {
        Self::of(KernelForm::OneMinusSqrtPower(p))
    }

    pub fn tabulated(table: Table) -> Self {
        Self::of(KernelForm::Tabulated(Arc::new(table)))
    }

    /// `-h`.
    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// `u·h`.
    pub fn scaled(&self, u: f64) -> Self {
        Self {
            form: self.form.clone(),
            scale: self.scale * u,
        }
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn label(&self) -> String {
        let base = match &self.form {
            KernelForm::Constant(c) => format!("{c}"),
            KernelForm::Identity => "t".into(),
            KernelForm::ExpDecay => "exp(-t)".into(),
            KernelForm::Power(p) => format!("t^{p}"),
            KernelForm::NegLog => "-ln(t)".into(),
            KernelForm::OneMinusSqrtPower(p) => format!("(1-sqrt(t))^{p}"),
            KernelForm::Tabulated(t) => format!("table[{}]", t.t.len()),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{}", self.scale, base)
        }
    }

    fn form_eval(&self, t: f64) -> f64 {
        match &self.form {
            KernelForm::Constant(c) => *c,
            KernelForm::Identity => t,
            KernelForm::ExpDecay => (-t).exp(),
            KernelForm::Power(p) => t.powf(*p),
            KernelForm::NegLog => -t.ln(),
            KernelForm::OneMinusSqrtPower(p) => (1.0 - t.sqrt()).max(0.0).powf(*p),
            KernelForm::Tabulated(tab) => tab.eval(t),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let v = self.form_eval(t);
        if v == 0.0 {
            0.0
        } else {
            self.scale * v
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let d = match &self.form {
            KernelForm::Constant(_) => 0.0,
            KernelForm::Identity => 1.0,
            KernelForm::ExpDecay => -(-t).exp(),
            KernelForm::Power(p) => p * t.powf(p - 1.0),
            KernelForm::NegLog => -1.0 / t,
            KernelForm::OneMinusSqrtPower(p) => {
                let s = t.sqrt();
                -p * (1.0 - s).powf(p - 1.0) / (2.0 * s)
            }
            KernelForm::Tabulated(tab) => tab.slope(t),
        };
        self.scale * d
    }

    fn form_monotonicity(&self) -> Option<Monotonicity> {
        Some(match &self.form {
            KernelForm::Constant(_) => Monotonicity::Constant,
            KernelForm::Identity => Monotonicity::Increasing,
            KernelForm::ExpDecay | KernelForm::NegLog => Monotonicity::Decreasing,
            KernelForm::Power(p) if *p > 0.0 => Monotonicity::Increasing,
            KernelForm::Power(p) if *p < 0.0 => Monotonicity::Decreasing,
            KernelForm::Power(_) => Monotonicity::Constant,
            KernelForm::OneMinusSqrtPower(p) if *p > 0.0 => Monotonicity::Decreasing,
            KernelForm::OneMinusSqrtPower(_) => Monotonicity::Constant,
            KernelForm::Tabulated(tab) => return tab.monotonicity(),
        })
    }

    /// Monotonicity of `h` itself, `None` when it is not monotone.
    pub fn monotonicity(&self) -> Option<Monotonicity> {
        let m = self.form_monotonicity()?;
        Some(match (m, self.scale < 0.0) {
            (Monotonicity::Increasing, true) => Monotonicity::Decreasing,
            (Monotonicity::Decreasing, true) => Monotonicity::Increasing,
            (m, _) => m,
        })
    }

    /// Solve `h(t) = w`, without checking the interval.
    pub fn inverse(&self, w: f64) -> Option<f64> {
        if self.scale == 0.0 {
            return None;
        }
        let v = w / self.scale;
        let t = match &self.form {
            KernelForm::Constant(_) => return None,
            KernelForm::Identity => v,
            KernelForm::ExpDecay => -v.ln(),
            KernelForm::Power(p) if *p != 0.0 => v.powf(1.0 / p),
            KernelForm::Power(_) => return None,
            KernelForm::NegLog => (-v).exp(),
            KernelForm::OneMinusSqrtPower(p) if *p != 0.0 => (1.0 - v.powf(1.0 / p)).powi(2),
            KernelForm::OneMinusSqrtPower(_) => return None,
            KernelForm::Tabulated(tab) => return tab.inverse(v),
        };
        t.is_finite().then_some(t)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.form {
            KernelForm::Tabulated(tab) => tab.t.clone(),
            _ => Vec::new(),
        }
    }

    /// `+1` or `-1` when `h` keeps one sign on the interval.
    pub fn sign_on(&self, interval: Interval) -> Result<f64> {
        let mut values: Vec<f64> = interval.probes().iter().map(|&t| self.eval(t)).collect();
        values.push(self.eval(interval.lo));
        values.push(self.eval(interval.hi));
        let pos = values.iter().any(|v| *v > 0.0);
        let neg = values.iter().any(|v| *v < 0.0);
        match (pos, neg) {
            (true, false) => Ok(1.0),
            (false, true) => Ok(-1.0),
            (true, true) => Err(Error::ImageNotPositive(format!(
                "kernel {} changes sign on {interval}",
                self.label()
            ))),
            (false, false) => Err(Error::ImageNotPositive(format!(
                "kernel {} vanishes on {interval}",
                self.label()
            ))),
        }
    }

    /// `|h|` on the interval.
    pub fn abs_on(&self, interval: Interval) -> Result<Self> {
        let s = self.sign_on(interval)?;
        Ok(if s < 0.0 { self.negated() } else { self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::NonDecreasing => 1.0,
            Direction::NonIncreasing => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum TimeForm {
    Identity,
    /// `1 - e^{-t}`
    OneMinusExp,
    /// `t^γ`
    Power(f64),
    /// `Γ(α; t)`
    IncGammaTail(f64),
    Tabulated(Arc<Table>),
    /// Clock whose increments are a given measure: its CDF when
    /// non-decreasing, its tail when non-increasing.
    Measure(Arc<HalfLineMeasure>),
}

/// Monotone time change `r` on `(a, b]`, scaled by a positive factor.
#[derive(Debug, Clone)]
pub struct TimeChange {
    form: TimeForm,
    direction: Direction,
    interval: Interval,
    scale: f64,
}

impl TimeChange {
    pub fn identity(interval: Interval) -> Self {
        Self::raw(TimeForm::Identity, Direction::NonDecreasing, interval)
    }

    pub fn one_minus_exp(interval: Interval) -> Self {
        Self::raw(TimeForm::OneMinusExp, Direction::NonDecreasing, interval)
    }

    pub fn power(gamma: f64, interval: Interval) -> Result<Self> {
        if !(gamma != 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("exponent must be non-zero, got {gamma}")));
        }
        if gamma < 0.0 && interval.lo == 0.0 && !interval.is_bounded() {
            return Err(Error::invalid("gamma", "t^gamma with gamma < 0 needs a bounded interval"));
        }
        let dir = if gamma > 0.0 {
            Direction::NonDecreasing
        } else {
            Direction::NonIncreasing
        };
        Ok(Self::raw(TimeForm::Power(gamma), dir, interval))
    }

    pub fn inc_gamma_tail(alpha: f64, interval: Interval) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        Ok(Self::raw(TimeForm::IncGammaTail(alpha), Direction::NonIncreasing, interval))
    }

    pub fn tabulated(table: Table, interval: Interval) -> Result<Self> {
        let dir = match table.monotonicity() {
            Some(Monotonicity::Increasing) | Some(Monotonicity::Constant) => Direction::NonDecreasing,
            Some(Monotonicity::Decreasing) => Direction::NonIncreasing,
            None => return Err(Error::invalid("table", "time change must be monotone")),
        };
        Ok(Self::raw(TimeForm::Tabulated(Arc::new(table)), dir, interval))
    }

    /// Time change whose clock measure is `m`.
    pub fn from_measure(m: HalfLineMeasure, direction: Direction) -> Result<Self> {
        if direction == Direction::NonDecreasing && m.infinite_lower() {
            return Err(Error::InfiniteMass(format!(
                "{} has infinite mass near its lower end; use a non-increasing clock",
                m.label()
            )));
        }
        if direction == Direction::NonIncreasing && m.infinite_upper() {
            return Err(Error::InfiniteMass(format!(
                "{} has infinite mass near its upper end; use a non-decreasing clock",
                m.label()
            )));
        }
        let interval = m.support();
        Ok(Self::raw(TimeForm::Measure(Arc::new(m)), direction, interval))
    }

    fn raw(form: TimeForm, direction: Direction, interval: Interval) -> Self {
        Self {
            form,
            direction,
            interval,
            scale: 1.0,
        }
    }

    /// `s·r` for `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("time-change scale must be positive, got {s}")));
        }
        let mut out = self.clone();
        out.scale *= s;
        Ok(out)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn form(&self) -> &TimeForm {
        &self.form
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn label(&self) -> String {
        let base = match &self.form {
            TimeForm::Identity => "t".into(),
            TimeForm::OneMinusExp => "1-exp(-t)".into(),
            TimeForm::Power(g) => format!("t^{g}"),
            TimeForm::IncGammaTail(a) => format!("Gamma({a};t)"),
            TimeForm::Tabulated(t) => format!("table[{}]", t.t.len()),
            TimeForm::Measure(m) => match self.direction {
                Direction::NonDecreasing => format!("cdf[{}]", m.label()),
                Direction::NonIncreasing => format!("tail[{}]", m.label()),
            },
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{}", self.scale, base)
        }
    }

    /// `r(t)`.
    pub fn value(&self, t: f64) -> Result<f64> {
        let v = match &self.form {
            TimeForm::Identity => t,
            TimeForm::OneMinusExp => -(-t).exp_m1(),
            TimeForm::Power(g) => t.powf(*g),
            TimeForm::IncGammaTail(a) => {
                if t == 0.0 {
                    if *a > 0.0 {
                        crate::special_fn::gamma(*a)
                    } else {
                        f64::INFINITY
                    }
                } else {
                    inc_gamma_tail(*a, t)?
                }
            }
            TimeForm::Tabulated(tab) => tab.eval(t),
            TimeForm::Measure(m) => {
                let i = self.interval;
                match self.direction {
                    Direction::NonDecreasing => m.mass(i.lo, i.clamp(t))?,
                    Direction::NonIncreasing => m.mass(i.clamp(t), i.hi)?,
                }
            }
        };
        Ok(self.scale * v)
    }

    /// Density of the clock measure `ρ = |dr|`.
    pub fn rho_density(&self, t: f64) -> Result<f64> {
        if !self.interval.contains(t) {
            return Ok(0.0);
        }
        let d = match &self.form {
            TimeForm::Identity => 1.0,
            TimeForm::OneMinusExp => (-t).exp(),
            TimeForm::Power(g) => (g * t.powf(g - 1.0)).abs(),
            TimeForm::IncGammaTail(a) => (-t + (a - 1.0) * t.ln()).exp(),
            TimeForm::Tabulated(tab) => tab.slope(t).abs(),
            TimeForm::Measure(m) => m.density(t)?,
        };
        Ok(self.scale * d)
    }

    pub fn rho_atoms(&self) -> Vec<(f64, f64)> {
        let raw = match &self.form {
            TimeForm::Tabulated(tab) => tab.jumps().into_iter().map(|(t, j)| (t, j.abs())).collect(),
            TimeForm::Measure(m) => m.atoms(),
            _ => Vec::new(),
        };
        raw.into_iter()
            .filter(|(t, _)| self.interval.contains(*t))
            .map(|(t, m)| (t, m * self.scale))
            .collect()
    }

    pub fn rho_breakpoints(&self) -> Vec<f64> {
        match &self.form {
            TimeForm::Tabulated(tab) => tab.t.clone(),
            TimeForm::Measure(m) => m.breakpoints(),
            _ => Vec::new(),
        }
    }

    pub fn rho_infinite_lower(&self) -> bool {
        match &self.form {
            TimeForm::Power(g) => *g < 0.0 && self.interval.lo == 0.0,
            TimeForm::IncGammaTail(a) => *a <= 0.0 && self.interval.lo == 0.0,
            TimeForm::Measure(m) => m.infinite_lower(),
            _ => false,
        }
    }

    pub fn rho_infinite_upper(&self) -> bool {
        match &self.form {
            TimeForm::Identity => !self.interval.is_bounded(),
            TimeForm::Power(g) => *g > 0.0 && !self.interval.is_bounded(),
            TimeForm::Measure(m) => m.infinite_upper(),
            _ => false,
        }
    }

    /// `ρ((lo, hi])`, exact for the analytic forms.
    pub fn rho_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        let lo = self.interval.clamp(lo);
        let hi = self.interval.clamp(hi);
        if lo >= hi {
            return Ok(0.0);
        }
        if let TimeForm::Measure(m) = &self.form {
            return Ok(self.scale * m.mass(lo, hi)?);
        }
        let (a, b) = (self.value(lo)?, self.value(hi)?);
        let mass = (b - a).abs();
        if !mass.is_finite() {
            return Err(Error::InfiniteMass(format!(
                "clock {} has infinite mass on ({lo}, {hi}]",
                self.label()
            )));
        }
        Ok(mass)
    }

    pub fn rho(&self) -> HalfLineMeasure {
        HalfLineMeasure::FromTimeChange(self.clone())
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type FallibleFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A measure given by a density, optionally with closed-form CDF or tail.
#[derive(Clone)]
pub struct DensityMeasure {
    label: String,
    f: RealFn,
    support: Interval,
    breakpoints: Vec<f64>,
    infinite_lower: bool,
    infinite_upper: bool,
    cdf: Option<FallibleFn>,
    tail: Option<FallibleFn>,
}

impl DensityMeasure {
    pub fn new(label: impl Into<String>, support: Interval, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            support,
            breakpoints: Vec::new(),
            infinite_lower: false,
            infinite_upper: false,
            cdf: None,
            tail: None,
        }
    }

    pub fn infinite_lower(mut self) -> Self {
        self.infinite_lower = true;
        self
    }

    pub fn infinite_upper(mut self) -> Self {
        self.infinite_upper = true;
        self
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    /// Closed form of `t ↦ m((lo, t])`.
    pub fn with_cdf(mut self, cdf: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        self.cdf = Some(Arc::new(cdf));
        self
    }

    /// Closed form of `t ↦ m((t, hi])`.
    pub fn with_tail(mut self, tail: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        self.tail = Some(Arc::new(tail));
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.support.contains(x) && x < f64::INFINITY {
            (self.f)(x)
        } else {
            0.0
        }
    }

    fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        if let Some(cdf) = &self.cdf {
            return Ok(cdf(hi)? - cdf(lo)?);
        }
        if let Some(tail) = &self.tail {
            return Ok(tail(lo)? - tail(hi)?);
        }
        let mut pts = vec![lo, hi];
        pts.extend(self.breakpoints.iter().copied().filter(|p| *p > lo && *p < hi));
        pts.sort_by(f64::total_cmp);
        Ok(measure_quad()
            .try_integrate_pieces(|x: f64| -> Result<f64> { Ok(self.eval(x)) }, &pts)?
            .value)
    }
}

impl fmt::Debug for DensityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMeasure")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("infinite_lower", &self.infinite_lower)
            .field("infinite_upper", &self.infinite_upper)
            .finish()
    }
}

/// Image of a measure under a positive monotone kernel.
#[derive(Debug, Clone)]
pub struct ImageMeasure {
    kernel: KernelFunction,
    base: Box<HalfLineMeasure>,
    support: Interval,
    increasing: bool,
    infinite_lower: bool,
    infinite_upper: bool,
}

impl ImageMeasure {
    fn preimage(&self, w: f64) -> f64 {
        let base = self.base.support();
        let (at_lo, at_hi) = if self.increasing {
            (base.lo, base.hi)
        } else {
            (base.hi, base.lo)
        };
        if w <= self.support.lo {
            at_lo
        } else if w >= self.support.hi {
            at_hi
        } else {
            self.kernel.inverse(w).map(|t| base.clamp(t)).unwrap_or(f64::NAN)
        }
    }

    fn density(&self, w: f64) -> Result<f64> {
        if !self.support.contains(w) || w.is_infinite() {
            return Ok(0.0);
        }
        let Some(t) = self.kernel.inverse(w) else {
            return Ok(0.0);
        };
        if !self.base.support().contains(t) {
            return Ok(0.0);
        }
        let d = self.base.density(t)?;
        if d == 0.0 {
            return Ok(0.0);
        }
        Ok(d / self.kernel.derivative(t).abs())
    }

    fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        let (p_lo, p_hi) = (self.preimage(lo), self.preimage(hi));
        let (t1, t2) = if self.increasing { (p_lo, p_hi) } else { (p_hi, p_lo) };
        let base_atoms = self.base.atoms();
        let continuous = if t1 < t2 {
            let swept: f64 = base_atoms.iter().filter(|(t, _)| *t > t1 && *t <= t2).map(|(_, m)| m).sum();
            self.base.mass(t1, t2)? - swept
        } else {
            0.0
        };
        let atoms: f64 = base_atoms
            .iter()
            .map(|&(t, m)| (self.kernel.eval(t), m))
            .filter(|(w, _)| *w > lo && *w <= hi)
            .map(|(_, m)| m)
            .sum();
        Ok(continuous + atoms)
    }
}

/// Positive measure on a sub-interval of `(0, ∞]`.
#[derive(Debug, Clone)]
pub enum HalfLineMeasure {
    /// `(location, mass)` pairs.
    Atoms(Vec<(f64, f64)>),
    Density(DensityMeasure),
    FromTimeChange(TimeChange),
    Image(ImageMeasure),
    /// Image of `a ⊗ b` under `(x, y) ↦ x·y`.
    Product(Box<HalfLineMeasure>, Box<HalfLineMeasure>, DensityMemo),
}

impl HalfLineMeasure {
    pub fn atoms_at(points: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, m) in &points {
            if !(x > 0.0 && x.is_finite() && m >= 0.0 && m.is_finite()) {
                return Err(Error::invalid("atoms", format!("atom ({x}, {m}) must sit in (0, inf) with mass >= 0")));
            }
        }
        Ok(HalfLineMeasure::Atoms(points))
    }

    /// Lebesgue measure on the interval.
    pub fn lebesgue(interval: Interval) -> Self {
        TimeChange::identity(interval).rho()
    }

    pub fn label(&self) -> String {
        match self {
            HalfLineMeasure::Atoms(a) => format!("atoms[{}]", a.len()),
            HalfLineMeasure::Density(d) => d.label.clone(),
            HalfLineMeasure::FromTimeChange(tc) => format!("d({})", tc.label()),
            HalfLineMeasure::Image(i) => format!("{}#{}", i.kernel.label(), i.base.label()),
            HalfLineMeasure::Product(a, b, _) => format!("({})*({})", a.label(), b.label()),
        }
    }

    pub fn support(&self) -> Interval {
        match self {
            HalfLineMeasure::Atoms(a) => Interval {
                lo: 0.0,
                hi: a.iter().map(|(x, _)| *x).fold(f64::MIN_POSITIVE, f64::max),
            },
            HalfLineMeasure::Density(d) => d.support,
            HalfLineMeasure::FromTimeChange(tc) => tc.interval,
            HalfLineMeasure::Image(i) => i.support,
            HalfLineMeasure::Product(a, b, _) => {
                let (sa, sb) = (a.support(), b.support());
                let lo = if sa.lo == 0.0 || sb.lo == 0.0 { 0.0 } else { sa.lo * sb.lo };
                let hi = if sa.hi.is_infinite() || sb.hi.is_infinite() {
                    f64::INFINITY
                } else {
                    sa.hi * sb.hi
                };
                Interval { lo, hi }
            }
        }
    }

    pub fn infinite_lower(&self) -> bool {
        match self {
            HalfLineMeasure::Atoms(_) => false,
            HalfLineMeasure::Density(d) => d.infinite_lower,
            HalfLineMeasure::FromTimeChange(tc) => tc.rho_infinite_lower(),
            HalfLineMeasure::Image(i) => i.infinite_lower,
            HalfLineMeasure::Product(a, b, _) => a.infinite_lower() || b.infinite_lower(),
        }
    }

    pub fn infinite_upper(&self) -> bool {
        match self {
            HalfLineMeasure::Atoms(_) => false,
            HalfLineMeasure::Density(d) => d.infinite_upper,
            HalfLineMeasure::FromTimeChange(tc) => tc.rho_infinite_upper(),
            HalfLineMeasure::Image(i) => i.infinite_upper,
            HalfLineMeasure::Product(a, b, _) => a.infinite_upper() || b.infinite_upper(),
        }
    }

    pub fn is_finite(&self) -> bool {
        !self.infinite_lower() && !self.infinite_upper()
    }

    /// Relative accuracy of density and mass evaluations (0 for closed forms).
    pub fn accuracy(&self) -> f64 {
        match self {
            HalfLineMeasure::Product(..) => DENSITY_REL_TOL,
            HalfLineMeasure::Image(i) => i.base.accuracy(),
            HalfLineMeasure::FromTimeChange(tc) => match &tc.form {
                TimeForm::Measure(m) => m.accuracy(),
                _ => 0.0,
            },
            _ => 0.0,
        }
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, x: f64) -> Result<f64> {
        match self {
            HalfLineMeasure::Atoms(_) => Ok(0.0),
            HalfLineMeasure::Density(d) => Ok(d.eval(x)),
            HalfLineMeasure::FromTimeChange(tc) => tc.rho_density(x),
            HalfLineMeasure::Image(i) => i.density(x),
            HalfLineMeasure::Product(a, b, memo) => memo.get_or(x, || product_density(a, b, x)),
        }
    }

    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            HalfLineMeasure::Atoms(a) => a.clone(),
            HalfLineMeasure::Density(_) => Vec::new(),
            HalfLineMeasure::FromTimeChange(tc) => tc.rho_atoms(),
            HalfLineMeasure::Image(i) => i
                .base
                .atoms()
                .into_iter()
                .map(|(t, m)| (i.kernel.eval(t), m))
                .collect(),
            HalfLineMeasure::Product(a, b, _) => {
                let bb = b.atoms();
                a.atoms()
                    .into_iter()
                    .flat_map(|(x, m)| bb.iter().map(move |(y, n)| (x * y, m * n)))
                    .collect()
            }
        }
    }

    /// Points inside the support where the density may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let s = self.support();
        let mut pts = match self {
            HalfLineMeasure::Atoms(_) => Vec::new(),
            HalfLineMeasure::Density(d) => d.breakpoints.clone(),
            HalfLineMeasure::FromTimeChange(tc) => match &tc.form {
                TimeForm::Tabulated(tab) => tab.t.clone(),
                TimeForm::Measure(m) => m.breakpoints(),
                _ => Vec::new(),
            },
            HalfLineMeasure::Image(i) => i
                .base
                .breakpoints()
                .into_iter()
                .chain(i.kernel.breakpoints())
                .map(|t| i.kernel.eval(t))
                .collect(),
            HalfLineMeasure::Product(a, b, _) => {
                let edges = |m: &HalfLineMeasure| {
                    let s = m.support();
                    let mut v = vec![s.lo, s.hi];
                    v.extend(m.breakpoints());
                    v.extend(m.atoms().into_iter().map(|(x, _)| x));
                    v
                };
                let eb = edges(b);
                edges(a)
                    .into_iter()
                    .flat_map(|x| eb.iter().map(move |y| x * y).collect::<Vec<_>>())
                    .collect()
            }
        };
        pts.retain(|p| p.is_finite() && *p > s.lo && *p < s.hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `m((lo, hi])`.
    pub fn mass(&self, lo: f64, hi: f64) -> Result<f64> {
        let s = self.support();
        if !(lo < hi) || hi <= s.lo && self.atoms().is_empty() {
            return Ok(0.0);
        }
        if (lo <= s.lo && self.infinite_lower()) || (hi >= s.hi && self.infinite_upper()) {
            return Err(Error::InfiniteMass(format!(
                "{} has infinite mass on ({lo}, {hi}]",
                self.label()
            )));
        }
        match self {
            HalfLineMeasure::Atoms(a) => Ok(a.iter().filter(|(x, _)| *x > lo && *x <= hi).map(|(_, m)| m).sum()),
            HalfLineMeasure::Density(d) => {
                let (lo, hi) = (lo.max(s.lo), hi.min(s.hi));
                if lo < hi {
                    d.mass(lo, hi)
                } else {
                    Ok(0.0)
                }
            }
            HalfLineMeasure::FromTimeChange(tc) => tc.rho_mass(lo, hi),
            HalfLineMeasure::Image(i) => i.mass(lo, hi),
            HalfLineMeasure::Product(a, b, _) => product_mass(a, b, lo, hi),
        }
    }

    /// `m((lower end, t])`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        self.mass(self.support().lo, t)
    }

    /// `m((t, ∞))`.
    pub fn tail(&self, t: f64) -> Result<f64> {
        self.mass(t, f64::INFINITY)
    }

    pub fn total_mass(&self) -> Result<f64> {
        if !self.is_finite() {
            return Ok(f64::INFINITY);
        }
        let s = self.support();
        self.mass(s.lo, s.hi)
    }

    /// `∫ f dm` over atoms and density.
    pub fn integrate<V, F>(&self, mut f: F, quad: &Quadrature) -> Result<V>
    where
        V: QuadValue,
        F: FnMut(f64) -> Result<V>,
    {
        let mut total = V::default();
        for (x, m) in self.atoms() {
            total = total + f(x)? * m;
        }
        let s = self.support();
        let mut pts = vec![s.lo];
        pts.extend(self.breakpoints());
        pts.push(s.hi);
        let est = quad.try_integrate_pieces(
            |x: f64| -> Result<V> {
                let d = self.density(x)?;
                if d == 0.0 {
                    Ok(V::default())
                } else {
                    Ok(f(x)? * d)
                }
            },
            &pts,
        );
        match est {
            Ok(e) => Ok(total + e.value),
            Err(Error::Quadrature(QuadratureError::NotConverged { .. })) if !self.is_finite() => {
                Err(Error::InfiniteMass(format!(
                    "integral against {} does not converge",
                    self.label()
                )))
            }
            Err(e) => Err(e),
        }
    }
}

const MEMO_CAPACITY: usize = 1 << 20;

/// Cache of product-density values keyed by the exact argument.
#[derive(Clone, Default)]
pub struct DensityMemo(Arc<Mutex<HashMap<u64, f64>>>);

impl DensityMemo {
    fn get_or(&self, x: f64, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
        let key = x.to_bits();
        if let Some(v) = self.0.lock().expect("memo lock").get(&key) {
            return Ok(*v);
        }
        let v = f()?;
        let mut map = self.0.lock().expect("memo lock");
        if map.len() < MEMO_CAPACITY {
            map.insert(key, v);
        }
        Ok(v)
    }
}

impl fmt::Debug for DensityMemo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMemo({})", self.0.lock().map(|m| m.len()).unwrap_or(0))
    }
}

fn product_density(a: &HalfLineMeasure, b: &HalfLineMeasure, w: f64) -> Result<f64> {
    let (sa, sb) = (a.support(), b.support());
    let mut total = 0.0;
    for (x, m) in a.atoms() {
        total += m * b.density(w / x)? / x;
    }
    for (y, n) in b.atoms() {
        total += n * a.density(w / y)? / y;
    }
    // x ranges over supp(a) with w/x in supp(b)
    let lo = sa.lo.max(if sb.hi.is_infinite() { 0.0 } else { w / sb.hi });
    let hi = sa.hi.min(if sb.lo == 0.0 { f64::INFINITY } else { w / sb.lo });
    if lo < hi {
        let mut pts = vec![lo, hi];
        pts.extend(a.breakpoints());
        pts.extend(b.breakpoints().into_iter().map(|y| w / y));
        pts.retain(|p| *p >= lo && *p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let v = measure_quad()
            .try_integrate_pieces(
                |x: f64| -> Result<f64> {
                    let da = a.density(x)?;
                    if da == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(da * b.density(w / x)? / x)
                },
                &pts,
            )?
            .value;
        total += v;
    }
    Ok(total)
}

fn product_mass(a: &HalfLineMeasure, b: &HalfLineMeasure, lo: f64, hi: f64) -> Result<f64> {
    let (sa, sb) = (a.support(), b.support());
    let mut total = 0.0;
    for (x, m) in a.atoms() {
        total += m * b.mass(lo / x, hi / x)?;
    }
    // x with (lo/x, hi/x] meeting supp(b)
    let x_lo = sa.lo.max(if sb.hi.is_infinite() { 0.0 } else { lo / sb.hi });
    let x_hi = sa.hi.min(if sb.lo == 0.0 { f64::INFINITY } else { hi / sb.lo });
    if x_lo < x_hi {
        let mut pts = vec![x_lo, x_hi];
        pts.extend(a.breakpoints());
        for y in b.breakpoints().into_iter().chain(b.atoms().into_iter().map(|(y, _)| y)) {
            pts.push(lo / y);
            pts.push(hi / y);
        }
        pts.retain(|p| p.is_finite() && *p >= x_lo && *p <= x_hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        total += measure_quad()
            .try_integrate_pieces(
                |x: f64| -> Result<f64> {
                    let da = a.density(x)?;
                    if da == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(da * b.mass(lo / x, hi / x)?)
                },
                &pts,
            )?
            .value;
    }
    Ok(total)
}

/// Lazy product `m₁ ⊗ … ⊗ m_k`, integrated in input order.
#[derive(Debug, Clone)]
pub struct ProductMeasure {
    factors: Vec<HalfLineMeasure>,
}

pub fn product_measure(ms: Vec<HalfLineMeasure>) -> ProductMeasure {
    ProductMeasure { factors: ms }
}

impl ProductMeasure {
    pub fn factors(&self) -> &[HalfLineMeasure] {
        &self.factors
    }

    /// `∫ g(t₁, …, t_k) m₁(dt₁) ⋯ m_k(dt_k)` by iterated quadrature.
    pub fn integrate(&self, g: &dyn Fn(&[f64]) -> f64, quad: &Quadrature) -> Result<f64> {
        let mut point = Vec::with_capacity(self.factors.len());
        self.integrate_from(0, &mut point, g, quad)
    }

    fn integrate_from(&self, k: usize, point: &mut Vec<f64>, g: &dyn Fn(&[f64]) -> f64, quad: &Quadrature) -> Result<f64> {
        if k == self.factors.len() {
            return Ok(g(point));
        }
        self.factors[k].integrate(
            |t| {
                point.push(t);
                let v = self.integrate_from(k + 1, point, g, quad);
                point.pop();
                v
            },
            quad,
        )
    }
}

/// Image of `ρ` under a single kernel, which must be positive on the support.
pub fn pushforward_one(h: &KernelFunction, rho: &HalfLineMeasure) -> Result<HalfLineMeasure> {
    let interval = rho.support();
    let h = h.abs_on(interval)?;
    match h.monotonicity() {
        Some(Monotonicity::Constant) => {
            let c = h.eval(interval.probes()[0]);
            let mass = rho.total_mass()?;
            if !mass.is_finite() {
                return Err(Error::InfiniteMass(format!(
                    "constant kernel against {} concentrates infinite mass at {c}",
                    rho.label()
                )));
            }
            HalfLineMeasure::atoms_at(vec![(c, mass)])
        }
        Some(m) => {
            let increasing = m == Monotonicity::Increasing;
            let (va, vb) = (h.eval(interval.lo), h.eval(interval.hi));
            let support = Interval {
                lo: va.min(vb),
                hi: va.max(vb),
            };
            let mut infinite_lower = false;
            let mut infinite_upper = false;
            for (infinite, v) in [(rho.infinite_lower(), va), (rho.infinite_upper(), vb)] {
                if !infinite {
                    continue;
                }
                if v == 0.0 {
                    infinite_lower = true;
                } else if v.is_infinite() {
                    infinite_upper = true;
                } else {
                    return Err(Error::InfiniteMass(format!(
                        "image of {} under {} has infinite mass near {v}",
                        rho.label(),
                        h.label()
                    )));
                }
            }
            if !(support.lo < support.hi) {
                return Err(Error::ImageNotPositive(format!("kernel {} has a degenerate image", h.label())));
            }
            Ok(HalfLineMeasure::Image(ImageMeasure {
                kernel: h,
                base: Box::new(rho.clone()),
                support,
                increasing,
                infinite_lower,
                infinite_upper,
            }))
        }
        None => Err(Error::UnsupportedTriple(format!(
            "kernel {} is not monotone; its image measure is not supported",
            h.label()
        ))),
    }
}

fn check_positive_image(h: &[KernelFunction], rho: &[HalfLineMeasure]) -> Result<()> {
    if h.is_empty() || h.len() != rho.len() {
        return Err(Error::invalid("pushforward", "need one kernel per measure"));
    }
    for (k, m) in h.iter().zip(rho) {
        if k.sign_on(m.support())? < 0.0 {
            return Err(Error::ImageNotPositive(format!(
                "kernel {} is negative on {}",
                k.label(),
                m.support()
            )));
        }
    }
    Ok(())
}

/// Image of `ρ₁ ⊗ … ⊗ ρ_m` under `(t₁, …, t_m) ↦ h₁(t₁)⋯h_m(t_m)`.
///
/// Known pairs are replaced by their closed forms.
pub fn pushforward(h: &[KernelFunction], rho: &[HalfLineMeasure]) -> Result<HalfLineMeasure> {
    check_positive_image(h, rho)?;
    let factors = h
        .iter()
        .zip(rho)
        .map(|(k, m)| pushforward_one(k, m))
        .collect::<Result<Vec<_>>>()?;
    if let Some(closed) = closed_form::recognize(&factors) {
        return Ok(HalfLineMeasure::Density(closed));
    }
    Ok(fold_product(factors))
}

/// As [`pushforward`], always through the numerical product.
pub fn pushforward_numeric(h: &[KernelFunction], rho: &[HalfLineMeasure]) -> Result<HalfLineMeasure> {
    check_positive_image(h, rho)?;
    let factors = h
        .iter()
        .zip(rho)
        .map(|(k, m)| pushforward_one(k, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(fold_product(factors))
}

fn fold_product(mut factors: Vec<HalfLineMeasure>) -> HalfLineMeasure {
    let mut acc = factors.pop().expect("at least one factor");
    while let Some(f) = factors.pop() {
        acc = HalfLineMeasure::Product(Box::new(f), Box::new(acc), DensityMemo::default());
    }
    acc
}

/// `m((0, t])`.
pub fn cdf(m: &HalfLineMeasure, t: f64) -> Result<f64> {
    m.cdf(t)
}

/// Probability laws that [`product_time_change`] can sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleLaw {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Point(f64),
}

impl SampleLaw {
    pub fn measure(&self) -> Result<HalfLineMeasure> {
        match *self {
            SampleLaw::Exponential { rate: 1.0 } => Ok(TimeChange::one_minus_exp(Interval::half_line()).rho()),
            SampleLaw::Exponential { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid("rate", format!("must be positive, got {rate}")));
                }
                Ok(HalfLineMeasure::Density(
                    DensityMeasure::new(format!("Exp({rate})"), Interval::half_line(), move |x| rate * (-rate * x).exp())
                        .with_cdf(move |t| Ok(-(-rate * t.max(0.0)).exp_m1())),
                ))
            }
            SampleLaw::Uniform { lo, hi } => {
                let interval = Interval::new(lo, hi)?;
                if lo == 0.0 && hi == 1.0 {
                    return Ok(HalfLineMeasure::lebesgue(interval));
                }
                let w = hi - lo;
                Ok(HalfLineMeasure::Density(
                    DensityMeasure::new(format!("U({lo},{hi})"), interval, move |_| 1.0 / w)
                        .with_cdf(move |t| Ok((t.clamp(lo, hi) - lo) / w)),
                ))
            }
            SampleLaw::Point(c) => HalfLineMeasure::atoms_at(vec![(c, 1.0)]),
        }
    }

    fn sample_many(&self, rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<f64>> {
        Ok(match *self {
            SampleLaw::Exponential { rate } => {
                let d = Exp::new(rate).map_err(|e| Error::invalid("rate", e.to_string()))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
            SampleLaw::Uniform { lo, hi } => {
                // (lo, hi]: reflect the half-open [lo, hi) draw
                let d = Uniform::new(0.0, hi - lo);
                (0..n).map(|_| hi - d.sample(rng)).collect()
            }
            SampleLaw::Point(c) => vec![c; n],
        })
    }
}

/// Monte Carlo clock `r(t) = P[h₁(Z₁)⋯h_m(Z_m) ≤ t]` next to its quadrature value.
#[derive(Debug, Clone)]
pub struct ProductTimeChange {
    pub estimate: TimeChange,
    pub grid: Vec<f64>,
    pub empirical_cdf: Vec<f64>,
    pub quadrature_cdf: Vec<f64>,
    pub sup_distance: f64,
}

const TABLE_KNOTS: usize = 1000;
const COMPARISON_POINTS: usize = 400;

pub fn product_time_change(
    dists: &[SampleLaw],
    h: &[KernelFunction],
    n_samples: usize,
    seed: u64,
) -> Result<ProductTimeChange> {
    if dists.is_empty() || dists.len() != h.len() {
        return Err(Error::invalid("dists", "need one kernel per law"));
    }
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![1.0; n_samples];
    for (law, k) in dists.iter().zip(h) {
        for (acc, z) in w.iter_mut().zip(law.sample_many(&mut rng, n_samples)?) {
            *acc *= k.eval(z);
        }
    }
    if w.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::ImageNotPositive("sampled product is not positive".into()));
    }
    w.sort_by(f64::total_cmp);
    let n = n_samples as f64;

    let (ts, vs): (Vec<f64>, Vec<f64>) = (0..=TABLE_KNOTS)
        .map(|k| {
            let idx = ((k * n_samples).div_ceil(TABLE_KNOTS)).saturating_sub(1).min(n_samples - 1);
            (w[idx], k as f64 / TABLE_KNOTS as f64)
        })
        .unzip();
    let mut ts = ts;
    ts[0] = ts[0].min(w[0]);
    let estimate = TimeChange::tabulated(Table::new(ts, vs)?, Interval::new(0.0, w[n_samples - 1])?)?;

    let rho: Vec<HalfLineMeasure> = dists.iter().map(|d| d.measure()).collect::<Result<_>>()?;
    let image = pushforward(h, &rho)?;
    let mut grid = Vec::with_capacity(COMPARISON_POINTS);
    let mut empirical = Vec::with_capacity(COMPARISON_POINTS);
    let mut quadrature = Vec::with_capacity(COMPARISON_POINTS);
    let mut sup: f64 = 0.0;
    for k in 0..COMPARISON_POINTS {
        let idx = ((k as f64 + 0.5) / COMPARISON_POINTS as f64 * n) as usize;
        let t = w[idx.min(n_samples - 1)];
        if grid.last() == Some(&t) {
            continue;
        }
        let at = w.partition_point(|&x| x <= t) as f64 / n;
        let f = image.cdf(t)?;
        sup = sup.max((at - f).abs());
        grid.push(t);
        empirical.push(at);
        quadrature.push(f);
    }
    Ok(ProductTimeChange {
        estimate,
        grid,
        empirical_cdf: empirical,
        quadrature_cdf: quadrature,
        sup_distance: sup,
    })
}
