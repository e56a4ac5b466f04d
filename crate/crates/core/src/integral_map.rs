//! Random integral mappings `ν ↦ L(∫_(a,b] h(t) dY_ν(r(t)))` acting on Lévy
//! exponents and triples.
//!
//! For a non-decreasing clock the image exponent is `∫ Φ(h(t)y) dr(t)`; for a
//! non-increasing one it is `∫ Φ(-h(t)y) |dr(t)|`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy_core::{
    conv_power, convolve, dilate, negate_law, Atom, ExponentSource, LevyExponent, LevyTriple, Provenance,
    SpectralDensity, SpectralMeasure,
};
use crate::measure_alg::{
    measure_quad, pushforward, pushforward_one, Direction, HalfLineMeasure, Interval, KernelFunction, TimeChange,
};
use crate::quadrature::{QuadValue, Quadrature};

/// Default absolute and relative tolerance of [`apply`].
pub const APPLY_TOL: f64 = 1e-10;
/// Truncation increment above which a probe integral is declared divergent.
pub const TOL_DIV: f64 = 1e-8;
pub const PROBE_Y: [f64; 3] = [0.1, 1.0, 10.0];

/// The pair `(h, r)` on `(a, b]`, optionally applied to the reflected law.
#[derive(Debug, Clone)]
pub struct MappingSpec {
    kernel: KernelFunction,
    time: TimeChange,
    pre_negate: bool,
    label: String,
}

impl MappingSpec {
    pub fn new(kernel: KernelFunction, time: TimeChange) -> Result<Self> {
        let interval = time.interval();
        for t in interval.probes() {
            if !kernel.eval(t).is_finite() {
                return Err(Error::invalid(
                    "kernel",
                    format!("{} is not finite at {t} in {interval}", kernel.label()),
                ));
            }
        }
        let label = format!("I[{}, {}, {}]", kernel.label(), time.label(), interval);
        Ok(Self {
            kernel,
            time,
            pre_negate: false,
            label,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Apply the mapping to ν⁻ instead of ν.
    pub fn pre_negated(mut self, flag: bool) -> Self {
        self.pre_negate = flag;
        self
    }

    pub fn kernel(&self) -> &KernelFunction {
        &self.kernel
    }

    pub fn time(&self) -> &TimeChange {
        &self.time
    }

    pub fn pre_negate(&self) -> bool {
        self.pre_negate
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn interval(&self) -> Interval {
        self.time.interval()
    }

    /// `+1` for a non-decreasing clock, `-1` otherwise.
    pub fn sign(&self) -> f64 {
        self.time.direction().sign()
    }

    pub fn rho(&self) -> HalfLineMeasure {
        self.time.rho()
    }

    /// `I^{h, s·r}`.
    pub fn time_scaled(&self, s: f64) -> Result<Self> {
        Ok(Self {
            kernel: self.kernel.clone(),
            time: self.time.scaled(s)?,
            pre_negate: self.pre_negate,
            label: format!("{}[r*{s}]", self.label),
        })
    }

    /// `I^{u·h, r}`.
    pub fn kernel_scaled(&self, u: f64) -> Self {
        Self {
            kernel: self.kernel.scaled(u),
            time: self.time.clone(),
            pre_negate: self.pre_negate,
            label: format!("{}[h*{u}]", self.label),
        }
    }
}

/// Change of variables used on one piece of the clock.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Substitution {
    Plain,
    /// `t = p + w·u²`
    Lower,
    /// `t = q - w·u²`
    Upper,
    /// `t = p + w·u²(3 - 2u)`
    Both,
    /// `t = p + w·e^{-v}`, for a kernel that blows up at `p`
    LogLower,
    /// `t = -ln u` on `(p, ∞)`
    Tail,
}

/// Atoms and pieces of the clock with their substitutions.
#[derive(Debug, Clone)]
struct ClockPlan {
    atoms: Vec<(f64, f64)>,
    pieces: Vec<(f64, f64, Substitution)>,
}

fn steep(spec: &MappingSpec, near: f64, mid: f64, width: f64) -> bool {
    let time = &spec.time;
    let d_near = time.rho_density(near).unwrap_or(f64::INFINITY);
    let d_mid = time.rho_density(mid).unwrap_or(0.0);
    let k_near = spec.kernel.derivative(near).abs();
    let k_mid = spec.kernel.derivative(mid).abs() + spec.kernel.eval(mid).abs() / width;
    !d_near.is_finite() || !k_near.is_finite() || d_near > 100.0 * d_mid || k_near > 100.0 * k_mid
}

impl ClockPlan {
    fn new(spec: &MappingSpec) -> Self {
        let time = &spec.time;
        let interval = time.interval();
        let mut pts = vec![interval.lo];
        let inner = time
            .rho_breakpoints()
            .into_iter()
            .chain(spec.kernel.breakpoints())
            .filter(|p| p.is_finite() && *p > interval.lo && *p < interval.hi);
        pts.extend(inner);
        pts.push(interval.hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if !interval.is_bounded() && pts.len() == 2 && interval.lo == 0.0 {
            pts.insert(1, 1.0);
        }
        let pieces = pts
            .windows(2)
            .map(|w| {
                let (p, q) = (w[0], w[1]);
                if q.is_infinite() {
                    return (p, q, Substitution::Tail);
                }
                let width = q - p;
                let mid = p + 0.5 * width;
                if !spec.kernel.eval(p).is_finite() {
                    return (p, q, Substitution::LogLower);
                }
                let lower = steep(spec, p + 1e-9 * width, mid, width);
                let upper = steep(spec, q - 1e-9 * width, mid, width);
                let sub = match (lower, upper) {
                    (false, false) => Substitution::Plain,
                    (true, false) => Substitution::Lower,
                    (false, true) => Substitution::Upper,
                    (true, true) => Substitution::Both,
                };
                (p, q, sub)
            })
            .collect();
        Self {
            atoms: time.rho_atoms(),
            pieces,
        }
    }

    /// `∫ f dρ`; `f` also receives the quadrature weight of its node.
    fn integrate<V, F>(&self, spec: &MappingSpec, mut f: F, quad: &Quadrature) -> Result<V>
    where
        V: QuadValue,
        F: FnMut(f64, f64) -> Result<V>,
    {
        let time = &spec.time;
        let mut total = V::default();
        for &(t, m) in &self.atoms {
            total = total + f(t, m)? * m;
        }
        for &(p, q, sub) in &self.pieces {
            let w = q - p;
            let mut g = |t: f64, jac: f64| -> Result<V> {
                if jac == 0.0 || !t.is_finite() {
                    return Ok(V::default());
                }
                let d = time.rho_density(t)?;
                if d == 0.0 {
                    return Ok(V::default());
                }
                let weight = d * jac;
                Ok(f(t, weight)? * weight)
            };
            let piece = match sub {
                Substitution::Plain => quad.try_integrate(|t: f64| g(t, 1.0), p, q)?,
                Substitution::Lower => quad.try_integrate(|u: f64| g(p + w * u * u, 2.0 * w * u), 0.0, 1.0)?,
                Substitution::Upper => quad.try_integrate(|u: f64| g(q - w * u * u, 2.0 * w * u), 0.0, 1.0)?,
                Substitution::Both => quad.try_integrate(
                    |u: f64| g(p + w * u * u * (3.0 - 2.0 * u), 6.0 * w * u * (1.0 - u)),
                    0.0,
                    1.0,
                )?,
                Substitution::LogLower => quad.try_integrate(
                    |v: f64| {
                        let e = (-v).exp();
                        g(p + w * e, w * e)
                    },
                    0.0,
                    f64::INFINITY,
                )?,
                Substitution::Tail => quad.try_integrate(|t: f64| g(t, 1.0), p, f64::INFINITY)?,
            };
            total = total + piece.value;
        }
        Ok(total)
    }
}

/// `∫ f dρ` over the clock of `spec`.
fn integrate_clock<V, F>(spec: &MappingSpec, f: F, quad: &Quadrature) -> Result<V>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    let mut f = f;
    ClockPlan::new(spec).integrate(spec, |t, _| f(t), quad)
}

struct Mapped {
    spec: MappingSpec,
    plan: ClockPlan,
    inner: LevyExponent,
    quad: Quadrature,
    log_moment: Option<bool>,
}

impl Mapped {
    fn eval_at(&self, y: f64, quad: &Quadrature) -> Result<Complex64> {
        let sigma = self.spec.sign();
        let kernel = &self.spec.kernel;
        // inner errors are damped by the node weight, so far-out nodes may be coarse
        let budget = 0.01 * quad.abs_tol;
        self.plan.integrate(
            &self.spec,
            |t, weight| {
                let h = kernel.eval(t);
                if h == 0.0 {
                    Ok(Complex64::new(0.0, 0.0))
                } else {
                    self.inner.eval_within(sigma * h * y, budget / weight.max(f64::MIN_POSITIVE))
                }
            },
            quad,
        )
    }
}

impl ExponentSource for Mapped {
    fn eval_positive(&self, y: f64) -> Result<Complex64> {
        self.eval_at(y, &self.quad)
    }

    fn eval_positive_within(&self, y: f64, abs_tol: f64) -> Result<Complex64> {
        if abs_tol <= self.quad.abs_tol {
            return self.eval_at(y, &self.quad);
        }
        self.eval_at(y, &Quadrature::new(abs_tol, self.quad.rel_tol))
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance().then(self.spec.label.clone())
    }

    fn log_moment(&self) -> Option<bool> {
        self.log_moment
    }

    fn accuracy(&self) -> f64 {
        self.quad.rel_tol
    }
}

/// Membership report for the domain of a mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainReport {
    pub finiteness: bool,
    pub log_moment_required: bool,
    pub log_moment_holds: Option<bool>,
    pub notes: Vec<String>,
}

impl DomainReport {
    pub fn in_domain(&self) -> bool {
        self.finiteness && !(self.log_moment_required && self.log_moment_holds == Some(false))
    }
}

fn probe_quad() -> Quadrature {
    Quadrature::new(1e-12, 1e-10).with_max_subintervals(1000)
}

/// `∫_(p,q] |Φ(σ h(t) y)| ρ(dt)` on a bounded piece.
fn probe_piece(spec: &MappingSpec, e: &LevyExponent, y: f64, p: f64, q: f64) -> Result<f64> {
    let sigma = spec.sign();
    let time = &spec.time;
    Ok(probe_quad()
        .try_integrate(
            |t: f64| -> Result<f64> {
                let d = time.rho_density(t)?;
                if d == 0.0 {
                    return Ok(0.0);
                }
                let h = spec.kernel.eval(t);
                if h == 0.0 {
                    return Ok(0.0);
                }
                Ok(e.eval(sigma * h * y)?.norm() * d)
            },
            p,
            q,
        )?
        .value)
}

/// Probe the mapping integral for finiteness and collect the log-moment flags.
///
/// The probe integrates `|Φ(h(t)y)|` against the clock for `y ∈ {0.1, 1, 10}`,
/// doubling the truncation towards an unbounded or infinitely charged end.
/// The check is necessary, not sufficient.
pub fn domain_check(spec: &MappingSpec, e: &LevyExponent) -> DomainReport {
    let mut notes = Vec::new();
    let interval = spec.interval();
    let time = &spec.time;
    let finiteness = match probe_all(spec, e) {
        Ok(None) => true,
        Ok(Some(note)) => {
            notes.push(note);
            false
        }
        Err(err) => {
            notes.push(format!("probe integral failed: {err}"));
            false
        }
    };
    let h_lo = spec.kernel.eval(interval.lo).abs();
    let h_hi = spec.kernel.eval(interval.hi).abs();
    let log_moment_required =
        (time.rho_infinite_lower() && h_lo == 0.0) || (time.rho_infinite_upper() && h_hi == 0.0);
    let log_moment_holds = e.log_moment();
    if log_moment_required {
        match log_moment_holds {
            Some(true) => {}
            Some(false) => notes.push("law has no finite log-moment".into()),
            None => notes.push("log-moment of the law is unknown".into()),
        }
    }
    DomainReport {
        finiteness,
        log_moment_required,
        log_moment_holds,
        notes,
    }
}

fn probe_all(spec: &MappingSpec, e: &LevyExponent) -> Result<Option<String>> {
    let interval = spec.interval();
    let time = &spec.time;
    let lower_open = time.rho_infinite_lower();
    let upper_open = time.rho_infinite_upper() || !interval.is_bounded();
    let width = if interval.is_bounded() {
        interval.hi - interval.lo
    } else {
        2.0
    };
    let core_lo = if lower_open { interval.lo + 0.25 * width } else { interval.lo };
    let core_hi = if upper_open {
        if interval.is_bounded() {
            interval.hi - 0.25 * width
        } else {
            interval.lo + 1.0
        }
    } else {
        interval.hi
    };
    let atom_total: f64 = time.rho_atoms().iter().map(|(_, m)| m).sum();
    for &y in &PROBE_Y {
        let mut value = probe_piece(spec, e, y, core_lo, core_hi)?;
        for (t, m) in time.rho_atoms() {
            value += m * e.eval(spec.sign() * spec.kernel.eval(t) * y)?.norm();
        }
        if !value.is_finite() || !atom_total.is_finite() {
            return Ok(Some(format!("probe at y = {y} is not finite")));
        }
        if lower_open {
            let mut hi = core_lo;
            let mut last = 0.0;
            for _ in 0..48 {
                let lo = interval.lo + 0.5 * (hi - interval.lo);
                last = probe_piece(spec, e, y, lo, hi)?;
                value += last;
                hi = lo;
            }
            if last > TOL_DIV {
                return Ok(Some(format!(
                    "probe at y = {y} keeps growing towards {} (last increment {last:e})",
                    interval.lo
                )));
            }
        }
        if upper_open {
            let mut last = 0.0;
            if interval.is_bounded() {
                let mut lo = core_hi;
                for _ in 0..48 {
                    let hi = interval.hi - 0.5 * (interval.hi - lo);
                    last = probe_piece(spec, e, y, lo, hi)?;
                    value += last;
                    lo = hi;
                }
            } else {
                let mut lo = core_hi;
                let mut step = 1.0;
                for _ in 0..7 {
                    last = probe_piece(spec, e, y, lo, lo + step)?;
                    value += last;
                    lo += step;
                    step *= 2.0;
                }
            }
            if last > TOL_DIV {
                return Ok(Some(format!(
                    "probe at y = {y} keeps growing towards {} (last increment {last:e})",
                    interval.hi
                )));
            }
        }
        if !value.is_finite() {
            return Ok(Some(format!("probe at y = {y} is not finite")));
        }
    }
    Ok(None)
}

/// The image exponent of `e` under the mapping, with the default tolerance.
pub fn apply(spec: &MappingSpec, e: &LevyExponent) -> Result<LevyExponent> {
    apply_with(spec, e, APPLY_TOL)
}

pub fn apply_with(spec: &MappingSpec, e: &LevyExponent, tol: f64) -> Result<LevyExponent> {
    let report = domain_check(spec, e);
    if !report.in_domain() {
        return Err(Error::DomainViolation(format!(
            "{} on {}: {}",
            spec.label,
            e.provenance().describe(),
            report.notes.join("; ")
        )));
    }
    let inner = if spec.pre_negate { negate_law(e) } else { e.clone() };
    let noise = inner.accuracy().max(spec.rho().accuracy());
    let tol = tol.max(50.0 * noise);
    let log_moment = if report.log_moment_required { None } else { e.log_moment() };
    Ok(LevyExponent::from_source(Mapped {
        plan: ClockPlan::new(spec),
        spec: spec.clone(),
        inner,
        quad: Quadrature::new(tol, tol),
        log_moment,
    }))
}

/// Apply a list of mappings, outermost first.
pub fn apply_nested(specs: &[MappingSpec], e: &LevyExponent) -> Result<LevyExponent> {
    let mut out = e.clone();
    for spec in specs.iter().rev() {
        out = apply(spec, &out)?;
    }
    Ok(out)
}

/// Reduce nested mappings (outermost first) to one mapping with kernel `w`
/// and clock measure equal to the image of the product of the clocks.
pub fn compose(specs: &[MappingSpec]) -> Result<MappingSpec> {
    match specs {
        [] => return Err(Error::invalid("specs", "nothing to compose")),
        [single] => return Ok(single.clone()),
        _ => {}
    }
    let mut parity = 1.0;
    let mut kernels = Vec::with_capacity(specs.len());
    let mut clocks = Vec::with_capacity(specs.len());
    for spec in specs {
        let s = spec.kernel.sign_on(spec.interval())?;
        parity *= spec.sign() * s * if spec.pre_negate { -1.0 } else { 1.0 };
        kernels.push(spec.kernel.scaled(s));
        clocks.push(spec.rho());
    }
    let image = pushforward(&kernels, &clocks)?;
    if image.infinite_lower() && image.infinite_upper() {
        return Err(Error::InfiniteMass(format!(
            "composed clock {} is infinite at both ends",
            image.label()
        )));
    }
    let direction = if image.infinite_lower() {
        Direction::NonIncreasing
    } else {
        Direction::NonDecreasing
    };
    let label = format!(
        "compose[{}]",
        specs.iter().map(|s| s.label.as_str()).collect::<Vec<_>>().join(", ")
    );
    let time = TimeChange::from_measure(image, direction)?;
    Ok(MappingSpec::new(KernelFunction::identity(), time)?
        .pre_negated(parity != direction.sign())
        .with_label(label))
}

fn max_gap(a: &LevyExponent, b: &LevyExponent, grid: &[f64]) -> Result<f64> {
    let va = a.eval_grid(grid)?;
    let vb = b.eval_grid(grid)?;
    Ok(va.iter().zip(&vb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

/// `max_y |I(ν₁∗ν₂) − I(ν₁) − I(ν₂)|`.
pub fn verify_homomorphism(spec: &MappingSpec, e1: &LevyExponent, e2: &LevyExponent, grid: &[f64]) -> Result<f64> {
    let joint = apply(spec, &convolve(e1, e2))?;
    let split = convolve(&apply(spec, e1)?, &apply(spec, e2)?);
    max_gap(&joint, &split, grid)
}

fn pairwise(exprs: &[LevyExponent; 3], grid: &[f64]) -> Result<f64> {
    Ok(max_gap(&exprs[0], &exprs[1], grid)?
        .max(max_gap(&exprs[0], &exprs[2], grid)?)
        .max(max_gap(&exprs[1], &exprs[2], grid)?))
}

/// Pairwise gap between `I(ν^{*s})`, `I(ν)^{*s}` and `I^{h, s·r}(ν)`.
pub fn verify_conv_power(spec: &MappingSpec, e: &LevyExponent, s: f64, grid: &[f64]) -> Result<f64> {
    let exprs = [
        apply(spec, &conv_power(e, s)?)?,
        conv_power(&apply(spec, e)?, s)?,
        apply(&spec.time_scaled(s)?, e)?,
    ];
    pairwise(&exprs, grid)
}

/// Pairwise gap between `T_u I(ν)`, `I(T_u ν)` and `I^{u·h, r}(ν)`.
pub fn verify_dilation(spec: &MappingSpec, e: &LevyExponent, u: f64, grid: &[f64]) -> Result<f64> {
    let exprs = [
        dilate(&apply(spec, e)?, u)?,
        apply(spec, &dilate(e, u)?)?,
        apply(&spec.kernel_scaled(u), e)?,
    ];
    pairwise(&exprs, grid)
}

/// The triple of the image law, for Gaussian and compound-Poisson inputs.
pub fn transform_triple(spec: &MappingSpec, t: &LevyTriple) -> Result<LevyTriple> {
    let t = if spec.pre_negate { t.reflect() } else { t.clone() };
    let atoms: Vec<Atom> = match t.spectral() {
        SpectralMeasure::Zero => Vec::new(),
        SpectralMeasure::Atoms(a) => a.clone(),
        _ => {
            return Err(Error::UnsupportedTriple(format!(
                "only Gaussian and finite compound-Poisson triples are transformed, got {}",
                t.family()
            )))
        }
    };
    let sigma = spec.sign();
    let quad = measure_quad();
    let kernel = spec.kernel.clone();
    let unsupported = |what: &str, e: Error| Error::UnsupportedTriple(format!("{what} under {}: {e}", spec.label));

    let g1 = if t.shift() != 0.0 || !atoms.is_empty() {
        integrate_clock(spec, |s| Ok(sigma * kernel.eval(s)), &quad).map_err(|e| unsupported("∫ h dr diverges", e))?
    } else {
        0.0
    };
    let gauss_var = if t.gauss_var() > 0.0 {
        let g2 = integrate_clock(spec, |s| Ok(kernel.eval(s).powi(2)), &quad)
            .map_err(|e| unsupported("∫ h² dr diverges", e))?;
        t.gauss_var() * g2
    } else {
        0.0
    };

    let mut parts = Vec::new();
    let mut new_atoms = Vec::new();
    if !atoms.is_empty() {
        let interval = spec.interval();
        let s_h = kernel.sign_on(interval)?;
        let image = pushforward_one(&kernel.scaled(s_h), &spec.rho())?;
        if image.infinite_upper() {
            return Err(Error::UnsupportedTriple(format!(
                "image of the jumps under {} has infinite mass at infinity",
                spec.label
            )));
        }
        let image = std::sync::Arc::new(image);
        for a in &atoms {
            let sign = sigma * s_h * a.x.signum();
            let scale = a.x.abs();
            for (w, m) in image.atoms() {
                new_atoms.push(Atom {
                    x: sign * w * scale,
                    mass: a.mass * m,
                });
            }
            let support = image.support();
            let (lo, hi) = (support.lo * scale, support.hi * scale);
            let (lo, hi) = if sign > 0.0 { (lo, hi) } else { (-hi, -lo) };
            let img = image.clone();
            let mass = a.mass;
            let breakpoints: Vec<f64> = img.breakpoints().into_iter().map(|b| sign * b * scale).collect();
            let density = SpectralDensity::new(format!("{}#{}", spec.label, a.x), lo, hi, move |v: f64| {
                mass * img.density(v.abs() / scale).unwrap_or(f64::NAN) / scale
            })?
            .with_breakpoints(breakpoints);
            parts.push(SpectralMeasure::Density(density));
        }
    }
    if !new_atoms.is_empty() {
        parts.push(SpectralMeasure::atoms(new_atoms)?);
    }
    let spectral = match parts.len() {
        0 => SpectralMeasure::Zero,
        1 => parts.pop().expect("one part"),
        _ => SpectralMeasure::Sum(parts),
    };
    let compensated: f64 = atoms.iter().filter(|a| a.x.abs() <= 1.0).map(|a| a.mass * a.x).sum();
    let shift = t.shift() * g1 - g1 * compensated + spectral.small_jump_mean(&quad)?;
    LevyTriple::new(shift, gauss_var, spectral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_core::exponent_of;

    fn gaussian() -> LevyExponent {
        exponent_of(&LevyTriple::gaussian(0.0, 1.0).unwrap()).unwrap()
    }

    fn lmap() -> MappingSpec {
        MappingSpec::new(KernelFunction::exp_decay(), TimeChange::identity(Interval::half_line())).unwrap()
    }

    fn kexp() -> MappingSpec {
        MappingSpec::new(KernelFunction::identity(), TimeChange::one_minus_exp(Interval::half_line())).unwrap()
    }

    #[test]
    fn identity_mapping_is_identity() {
        let spec = MappingSpec::new(KernelFunction::constant(1.0), TimeChange::identity(Interval::unit())).unwrap();
        let g = exponent_of(&LevyTriple::gamma(1.0, 1.0).unwrap()).unwrap();
        let out = apply(&spec, &g).unwrap();
        for &y in &[0.5, 3.0] {
            assert!((out.eval(y).unwrap() - g.eval(y).unwrap()).norm() < 1e-13);
        }
    }

    #[test]
    fn gaussian_under_named_maps() {
        let l = apply(&lmap(), &gaussian()).unwrap();
        let k = apply(&kexp(), &gaussian()).unwrap();
        for &y in &[0.3, 2.0, 10.0] {
            assert!((l.eval(y).unwrap().re + y * y / 4.0).abs() < 1e-10);
            assert!((k.eval(y).unwrap().re + y * y).abs() < 1e-10);
        }
    }

    #[test]
    fn domain_report_for_gaussian_under_lmap() {
        let r = domain_check(&lmap(), &gaussian());
        assert!(r.finiteness && r.log_moment_required && r.log_moment_holds == Some(true));
        let r = domain_check(&kexp(), &gaussian());
        assert!(r.finiteness && !r.log_moment_required);
    }

    #[test]
    fn infinite_clock_against_constant_kernel_diverges() {
        let spec = MappingSpec::new(KernelFunction::constant(1.0), TimeChange::identity(Interval::half_line())).unwrap();
        let r = domain_check(&spec, &gaussian());
        assert!(!r.finiteness);
        assert!(matches!(apply(&spec, &gaussian()), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn composed_lmap_kexp_is_thorin() {
        let c = compose(&[kexp(), lmap()]).unwrap();
        assert!(c.pre_negate());
        assert_eq!(c.time().direction(), Direction::NonIncreasing);
        let out = apply(&c, &gaussian()).unwrap();
        for &y in &[0.5, 4.0] {
            assert!((out.eval(y).unwrap().re + y * y / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn transform_triple_gaussian_under_lmap() {
        let t = transform_triple(&lmap(), &LevyTriple::gaussian(0.0, 1.0).unwrap()).unwrap();
        assert!((t.gauss_var() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn transform_triple_rejects_infinite_activity() {
        let r = transform_triple(&lmap(), &LevyTriple::gamma(1.0, 1.0).unwrap());
        assert!(matches!(r, Err(Error::UnsupportedTriple(_))));
    }
}
