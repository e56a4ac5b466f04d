//! Monte Carlo evaluation of `∫_(a,b] h(t) dY(r(t))` along simulated paths.
//!
//! Each path draws the clock increments of `Y` exactly and forms the
//! integration-by-parts sum `h(b)X(b) − h(a)X(a) − Σ X(t_{i+1})(h(t_{i+1}) − h(t_i))`.
//! The empirical characteristic function of the samples is then compared with
//! the analytic image exponent.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integral_map::MappingSpec;
use crate::levy_core::{Atom, LevyExponent, LevyTriple, Side, SpectralMeasure};
use crate::mapping_catalog::standard_grid;
use crate::quadrature::Quadrature;

/// Weight of the discarded tails, `∫ max(|h|, h²) dρ`, allowed by the truncation.
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Nodes at refinement level 0.
pub const BASE_NODES: usize = 1 << 12;

/// Discretisation of `(a, b]`, truncated where the clock or kernel is singular.
#[derive(Debug, Clone, Serialize)]
pub struct PathGrid {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub level: u32,
    /// Upper truncation point when `b = ∞`.
    pub truncation: Option<f64>,
    /// Lower cut when the clock or kernel is singular at `a`.
    pub lower_cut: Option<f64>,
    /// `∫ max(|h|, h²) dρ` over the discarded pieces.
    pub discarded_weight: f64,
}

fn tail_quad() -> Quadrature {
    Quadrature::new(1e-14, 1e-10)
}

fn weight(spec: &MappingSpec, t: f64) -> Result<f64> {
    let d = spec.time().rho_density(t)?;
    if d == 0.0 {
        return Ok(0.0);
    }
    let h = spec.kernel().eval(t).abs();
    Ok(h.max(h * h) * d)
}

fn weight_between(spec: &MappingSpec, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Ok(0.0);
    }
    Ok(tail_quad()
        .try_integrate(|t: f64| -> Result<f64> { weight(spec, t) }, lo, hi)?
        .value)
}

impl PathGrid {
    /// Grid with `BASE_NODES · 4^level` nodes.
    pub fn new(spec: &MappingSpec, level: u32) -> Result<Self> {
        Self::with_nodes(spec, BASE_NODES << (2 * level), level)
    }

    pub fn with_nodes(spec: &MappingSpec, count: usize, level: u32) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("nodes", format!("need at least two nodes, got {count}")));
        }
        let interval = spec.interval();
        let mut discarded = 0.0;
        let (hi, truncation) = if interval.hi.is_infinite() {
            let mut t = interval.lo + 1.0;
            let mut tail = weight_between(spec, t, f64::INFINITY)?;
            while tail >= TRUNCATION_TOL && t < 1e6 {
                t = interval.lo + 2.0 * (t - interval.lo);
                tail = weight_between(spec, t, f64::INFINITY)?;
            }
            let mut below = interval.lo + 0.5 * (t - interval.lo);
            for _ in 0..40 {
                let mid = 0.5 * (below + t);
                let w = weight_between(spec, mid, f64::INFINITY)?;
                if w < TRUNCATION_TOL {
                    t = mid;
                    tail = w;
                } else {
                    below = mid;
                }
            }
            discarded += tail;
            (t, Some(t))
        } else {
            (interval.hi, None)
        };
        let singular_lo = spec.time().rho_infinite_lower() || !spec.kernel().eval(interval.lo).is_finite();
        let (lo, lower_cut) = if singular_lo {
            let mut eps = interval.lo + 0.5 * (hi - interval.lo).min(1.0);
            let mut w = weight_between(spec, interval.lo, eps)?;
            while w >= TRUNCATION_TOL && eps > interval.lo + 1e-300 {
                eps = interval.lo + 0.5 * (eps - interval.lo);
                w = weight_between(spec, interval.lo, eps)?;
            }
            discarded += w;
            (eps, Some(eps))
        } else {
            (interval.lo, None)
        };
        let n = count - 1;
        let mut nodes: Vec<f64> = if lower_cut.is_some() && lo > 0.0 {
            let ratio = (hi / lo).ln();
            (0..=n).map(|i| lo * (ratio * i as f64 / n as f64).exp()).collect()
        } else {
            (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
        };
        nodes[0] = lo;
        nodes[n] = hi;
        nodes.extend(
            spec.time()
                .rho_breakpoints()
                .into_iter()
                .chain(spec.kernel().breakpoints())
                .filter(|p| *p > lo && *p < hi),
        );
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        Ok(Self {
            lo,
            hi,
            nodes,
            level,
            truncation,
            lower_cut,
            discarded_weight: discarded,
        })
    }
}

/// Exact sampler of `ν^{*Δ}` for Gaussian, gamma, compound-Poisson and drift parts.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    drift: f64,
    gauss_var: f64,
    gammas: Vec<(f64, f64, f64)>,
    atoms: Vec<Atom>,
    atom_rate: f64,
}

impl IncrementSampler {
    pub fn new(triple: &LevyTriple) -> Result<Self> {
        let mut out = Self {
            drift: triple.shift(),
            gauss_var: triple.gauss_var(),
            gammas: Vec::new(),
            atoms: Vec::new(),
            atom_rate: 0.0,
        };
        out.absorb(triple.spectral())?;
        out.atom_rate = out.atoms.iter().map(|a| a.mass).sum();
        Ok(out)
    }

    fn absorb(&mut self, m: &SpectralMeasure) -> Result<()> {
        match m {
            SpectralMeasure::Zero => {}
            SpectralMeasure::Atoms(atoms) => {
                for a in atoms {
                    if a.x.abs() <= 1.0 {
                        self.drift -= a.mass * a.x;
                    }
                    self.atoms.push(*a);
                }
            }
            SpectralMeasure::Gamma { shape, rate, side } => {
                let sign = if *side == Side::Positive { 1.0 } else { -1.0 };
                self.drift -= sign * shape * (-(-rate).exp_m1()) / rate;
                self.gammas.push((*shape, *rate, sign));
            }
            SpectralMeasure::Sum(parts) => {
                for p in parts {
                    self.absorb(p)?;
                }
            }
            SpectralMeasure::SymmetricStable { .. } | SpectralMeasure::Density(_) => {
                return Err(Error::UnsupportedFamily(
                    "paths are simulated for Gaussian, gamma, compound-Poisson and drift parts only".into(),
                ))
            }
        }
        Ok(())
    }

    /// One draw of the increment over clock time `dt`.
    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        if dt <= 0.0 {
            return 0.0;
        }
        let mut x = self.drift * dt;
        if self.gauss_var > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            x += (self.gauss_var * dt).sqrt() * z;
        }
        for &(shape, rate, sign) in &self.gammas {
            let g = Gamma::new(shape * dt, 1.0 / rate).expect("positive gamma parameters");
            x += sign * g.sample(rng);
        }
        if self.atom_rate > 0.0 {
            let count = Poisson::new(self.atom_rate * dt).expect("positive rate").sample(rng) as u64;
            for _ in 0..count {
                x += self.pick_atom(rng);
            }
        }
        x
    }

    fn pick_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u = rng.gen::<f64>() * self.atom_rate;
        for a in &self.atoms {
            if u < a.mass {
                return a.x;
            }
            u -= a.mass;
        }
        self.atoms.last().map_or(0.0, |a| a.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EcfPoint {
    pub y: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub seed: u64,
    pub n_paths: usize,
    pub nodes: usize,
    pub lo: f64,
    pub hi: f64,
    pub ecf: Vec<EcfPoint>,
    /// `4/√n` radius per grid point.
    pub ecf_band: Vec<f64>,
    /// Largest gap between the by-parts sum and the forward sum `Σ h(t_i) ΔX_i`.
    pub by_parts_gap: f64,
    pub warnings: Vec<String>,
}

impl SimResult {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let n = self.samples.len() as f64;
        self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
    }
}

/// Empirical characteristic function of `samples` on `grid`.
pub fn ecf(samples: &[f64], grid: &[f64]) -> Vec<EcfPoint> {
    let n = samples.len() as f64;
    grid.par_iter()
        .map(|&y| {
            if y == 0.0 {
                return EcfPoint { y, re: 1.0, im: 0.0 };
            }
            let (mut re, mut im) = (0.0, 0.0);
            for x in samples {
                let (s, c) = (y * x).sin_cos();
                re += c;
                im += s;
            }
            EcfPoint { y, re: re / n, im: im / n }
        })
        .collect()
}

/// Simulate `n_paths` values of the integral and their ECF on the standard grid.
pub fn simulate_integral(
    spec: &MappingSpec,
    law: &LevyTriple,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
) -> Result<SimResult> {
    simulate_on(spec, law, grid, n_paths, seed, &standard_grid())
}

pub fn simulate_on(
    spec: &MappingSpec,
    law: &LevyTriple,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
    y_grid: &[f64],
) -> Result<SimResult> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "need at least one path"));
    }
    let law = if spec.pre_negate() { law.reflect() } else { law.clone() };
    let sampler = IncrementSampler::new(&law)?;
    let sign = spec.sign();
    let h: Vec<f64> = grid.nodes.iter().map(|&t| spec.kernel().eval(t)).collect();
    let dr = grid
        .nodes
        .windows(2)
        .map(|w| spec.time().rho_mass(w[0], w[1]))
        .collect::<Result<Vec<f64>>>()?;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("grid", "kernel is not finite on the grid"));
    }
    let mut warnings = Vec::new();
    if grid.discarded_weight > TRUNCATION_TOL {
        warnings.push(format!(
            "truncated tails carry weight {:e} above {TRUNCATION_TOL:e}",
            grid.discarded_weight
        ));
    }
    let results: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path as u64);
            let mut x = 0.0;
            let mut parts = 0.0;
            let mut forward = 0.0;
            for i in 0..dr.len() {
                let dx = sign * sampler.sample(dr[i], &mut rng);
                forward += h[i] * dx;
                x += dx;
                parts -= x * (h[i + 1] - h[i]);
            }
            parts += h[h.len() - 1] * x;
            let scale = forward.abs().max(1.0);
            (parts, (parts - forward).abs() / scale)
        })
        .collect();
    let samples: Vec<f64> = results.iter().map(|r| r.0).collect();
    let by_parts_gap = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let ecf = ecf(&samples, y_grid);
    let band = 4.0 / (n_paths as f64).sqrt();
    Ok(SimResult {
        samples,
        seed,
        n_paths,
        nodes: grid.nodes.len(),
        lo: grid.lo,
        hi: grid.hi,
        ecf_band: vec![band; y_grid.len()],
        ecf,
        by_parts_gap,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EcfComparePoint {
    pub y: f64,
    pub ecf_re: f64,
    pub ecf_im: f64,
    pub model_re: f64,
    pub model_im: f64,
    pub discrepancy: f64,
    pub band: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EcfReport {
    pub max_discrepancy: f64,
    pub fraction_inside: f64,
    pub points: Vec<EcfComparePoint>,
}

/// Compare the ECF of a simulation with `exp(Φ)`.
pub fn ecf_compare(sim: &SimResult, e: &LevyExponent) -> Result<EcfReport> {
    let ys: Vec<f64> = sim.ecf.iter().map(|p| p.y).collect();
    let model = e.eval_grid(&ys)?;
    let points: Vec<EcfComparePoint> = sim
        .ecf
        .iter()
        .zip(&model)
        .zip(&sim.ecf_band)
        .map(|((p, phi), &band)| {
            let m = phi.exp();
            let discrepancy = (Complex64::new(p.re, p.im) - m).norm();
            EcfComparePoint {
                y: p.y,
                ecf_re: p.re,
                ecf_im: p.im,
                model_re: m.re,
                model_im: m.im,
                discrepancy,
                band,
                inside: discrepancy <= band,
            }
        })
        .collect();
    let inside = points.iter().filter(|p| p.inside).count();
    Ok(EcfReport {
        max_discrepancy: points.iter().map(|p| p.discrepancy).fold(0.0, f64::max),
        fraction_inside: if points.is_empty() { 1.0 } else { inside as f64 / points.len() as f64 },
        points,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineRow {
    pub level: u32,
    pub nodes: usize,
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
    pub variance: f64,
    pub max_discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineStudy {
    pub rows: Vec<RefineRow>,
    /// Whether discrepancies never grow by more than the `4/√n` band; `None`
    /// for a single level.
    pub non_increasing: Option<bool>,
}

/// Run [`simulate_integral`] at each refinement level against the exponent `e`.
pub fn refine_study(
    spec: &MappingSpec,
    law: &LevyTriple,
    e: &LevyExponent,
    levels: &[u32],
    n_paths: usize,
    seed: u64,
) -> Result<RefineStudy> {
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let grid = PathGrid::new(spec, level)?;
        let sim = simulate_integral(spec, law, &grid, n_paths, seed)?;
        let report = ecf_compare(&sim, e)?;
        rows.push(RefineRow {
            level,
            nodes: sim.nodes,
            lo: sim.lo,
            hi: sim.hi,
            mean: sim.mean(),
            variance: sim.variance(),
            max_discrepancy: report.max_discrepancy,
        });
    }
    let band = 4.0 / (n_paths as f64).sqrt();
    let non_increasing =
        (rows.len() > 1).then(|| rows.windows(2).all(|w| w[1].max_discrepancy <= w[0].max_discrepancy + band));
    Ok(RefineStudy { rows, non_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping_catalog::{kexp, lmap};

    #[test]
    fn kexp_grid_truncation() {
        let g = PathGrid::new(&kexp(), 0).unwrap();
        assert_eq!(g.nodes.len(), BASE_NODES);
        let t = g.truncation.unwrap();
        assert!(t > 15.0 && t < 30.0, "{t}");
        assert!(g.discarded_weight < TRUNCATION_TOL);
        assert!(g.lower_cut.is_none());
    }

    #[test]
    fn point_mass_at_zero_gives_zero() {
        let spec = lmap();
        let grid = PathGrid::with_nodes(&spec, 200, 0).unwrap();
        let sim = simulate_integral(&spec, &LevyTriple::point(0.0).unwrap(), &grid, 10, 1).unwrap();
        assert!(sim.samples.iter().all(|&x| x == 0.0));
        assert!(sim.ecf.iter().all(|p| p.re == 1.0 && p.im == 0.0));
    }

    #[test]
    fn seeds_are_reproducible() {
        let spec = kexp();
        let grid = PathGrid::with_nodes(&spec, 300, 0).unwrap();
        let law = LevyTriple::gaussian(0.0, 1.0).unwrap();
        let a = simulate_integral(&spec, &law, &grid, 50, 7).unwrap();
        let b = simulate_integral(&spec, &law, &grid, 50, 7).unwrap();
        let c = simulate_integral(&spec, &law, &grid, 50, 8).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn stable_law_is_rejected() {
        let spec = kexp();
        let grid = PathGrid::with_nodes(&spec, 10, 0).unwrap();
        let law = LevyTriple::symmetric_stable(1.0, 1.0).unwrap();
        assert!(matches!(
            simulate_integral(&spec, &law, &grid, 1, 0),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn sampler_mean_matches_triple() {
        let law = LevyTriple::compound_poisson(vec![Atom { x: 1.0, mass: 2.0 }, Atom { x: -3.0, mass: 0.5 }])
            .unwrap();
        let s = IncrementSampler::new(&law).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean = (0..n).map(|_| s.sample(1.0, &mut rng)).sum::<f64>() / n as f64;
        // drift -2 from compensation, jumps 2·1 − 0.5·3
        assert!((mean - (-2.0 + 2.0 - 1.5)).abs() < 0.02, "{mean}");
    }
}
