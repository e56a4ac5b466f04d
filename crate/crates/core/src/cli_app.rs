//! Command-line front end: JSON run configs, the four subcommands and their
//! CSV/JSON artifacts.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::integral_map::{apply_with, compose, MappingSpec, APPLY_TOL};
use crate::levy_core::{exponent_of, Atom, LevyExponent, LevyTriple, SpectralMeasure};
use crate::mapping_catalog::{
    check_gamma_lmap, check_gamma_lmap_unit, check_kexp_alt, check_power_lmap, check_power_pair,
    check_thorin_composition, linear_grid, named, standard_grid, thorin_factorization_witness,
    IdentityCheckResult, MappingName,
};
use crate::measure_alg::{Direction, Interval, KernelFunction, Table, TimeChange};
use crate::path_sim::{ecf_compare, simulate_on, EcfReport, IncrementSampler, PathGrid, SimResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "LEVYMAP_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_QUADRATURE: i32 = 4;

const DEFAULT_VERIFY_TOL: f64 = 1e-6;
const DEFAULT_PATHS: usize = 10_000;
const BAND_FRACTION: f64 = 0.95;
const CATALOG_PARAMS: [f64; 3] = [0.5, 1.0, 2.0];

pub const SUITES: [&str; 7] = [
    "thorin-composition",
    "kexp-alt",
    "power-pair",
    "power-lmap",
    "gamma-lmap",
    "gamma-lmap-unit",
    "thorin-witness",
];

#[derive(Debug, Parser)]
#[command(name = "levymap", version, about = "Random integral mappings of infinitely divisible laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the (mapped) exponent on a grid.
    Exponent(CommonArgs),
    /// Reduce a list of mappings to one and tabulate its clock.
    Compose(CommonArgs),
    /// Run identity checks from the catalog.
    Verify(CommonArgs),
    /// Simulate the stochastic integral and compare its ECF with the exponent.
    Simulate(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// `MIN:MAX:COUNT`
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<GridConfig>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub suite: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Library(#[from] Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Failed(_) => EXIT_FAILED,
            CliError::Library(e) => match e {
                Error::InvalidParameter { .. } | Error::SpectralDivergence(_) => EXIT_CONFIG,
                Error::Quadrature(_) => EXIT_QUADRATURE,
                _ => EXIT_DOMAIN,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridConfig {
    pub fn points(&self) -> Vec<f64> {
        linear_grid(self.min, self.max, self.count)
    }
}

fn parse_grid(s: &str) -> std::result::Result<GridConfig, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [min, max, count] = parts.as_slice() else {
        return Err(format!("expected MIN:MAX:COUNT, got {s:?}"));
    };
    let min: f64 = min.parse().map_err(|_| format!("bad MIN in {s:?}"))?;
    let max: f64 = max.parse().map_err(|_| format!("bad MAX in {s:?}"))?;
    let count: usize = count.parse().map_err(|_| format!("bad COUNT in {s:?}"))?;
    if !(min.is_finite() && max.is_finite() && min <= max) || count == 0 {
        return Err(format!("need finite MIN <= MAX and COUNT > 0, got {s:?}"));
    }
    Ok(GridConfig { min, max, count })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Drift,
    CompoundPoisson,
    Gamma,
    Stable,
    Sum,
}

/// A law given by family and parameters. `shift` adds to the triple's shift.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub family: Family,
    #[serde(default)]
    pub shift: f64,
    pub variance: Option<f64>,
    /// `[x, mass]` pairs.
    pub atoms: Option<Vec<[f64; 2]>>,
    pub shape: Option<f64>,
    pub rate: Option<f64>,
    pub alpha: Option<f64>,
    pub scale: Option<f64>,
    pub parts: Option<Vec<LawConfig>>,
}

impl LawConfig {
    pub fn triple(&self) -> CliResult<LevyTriple> {
        self.triple_at("law")
    }

    fn triple_at(&self, path: &str) -> CliResult<LevyTriple> {
        let need = |v: Option<f64>, field: &str| {
            v.ok_or_else(|| CliError::config(format!("{path}.{field}"), format!("required for {:?}", self.family)))
        };
        let wrap = |e: Error| CliError::config(path, e.to_string());
        let base = match self.family {
            Family::Gaussian => LevyTriple::gaussian(0.0, need(self.variance, "variance")?).map_err(wrap)?,
            Family::Drift => LevyTriple::point(0.0).map_err(wrap)?,
            Family::CompoundPoisson => {
                let atoms = self
                    .atoms
                    .as_ref()
                    .ok_or_else(|| CliError::config(format!("{path}.atoms"), "required for CompoundPoisson"))?;
                let atoms = atoms.iter().map(|&[x, mass]| Atom { x, mass }).collect();
                LevyTriple::compound_poisson(atoms).map_err(wrap)?
            }
            Family::Gamma => {
                LevyTriple::gamma(need(self.shape, "shape")?, need(self.rate, "rate")?).map_err(wrap)?
            }
            Family::Stable => {
                LevyTriple::symmetric_stable(need(self.alpha, "alpha")?, need(self.scale, "scale")?).map_err(wrap)?
            }
            Family::Sum => {
                let parts = self
                    .parts
                    .as_ref()
                    .filter(|p| !p.is_empty())
                    .ok_or_else(|| CliError::config(format!("{path}.parts"), "need at least one part"))?;
                let mut acc = LevyTriple::new(0.0, 0.0, SpectralMeasure::Zero).map_err(wrap)?;
                for (i, p) in parts.iter().enumerate() {
                    acc = acc.merge(&p.triple_at(&format!("{path}.parts[{i}]"))?);
                }
                acc
            }
        };
        let shift = base.shift() + self.shift;
        Ok(base.with_shift(shift))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    Constant,
    Identity,
    ExpDecay,
    Power,
    NegLog,
    OneMinusSqrtPower,
    Tabulated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub form: KernelForm,
    pub param: Option<f64>,
    pub scale: Option<f64>,
    pub t: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeForm {
    Identity,
    OneMinusExp,
    Power,
    IncGammaTail,
    Tabulated,
}

/// Time change on `(lo, hi]`; a missing `hi` means `+∞`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub form: TimeForm,
    pub param: Option<f64>,
    pub scale: Option<f64>,
    #[serde(default)]
    pub lo: f64,
    pub hi: Option<f64>,
    pub t: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
}

/// Either a catalog name or an explicit kernel and time change.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    pub name: Option<String>,
    pub kernel: Option<KernelConfig>,
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub pre_negate: bool,
    pub label: Option<String>,
}

fn table_at(path: &str, t: &Option<Vec<f64>>, v: &Option<Vec<f64>>) -> CliResult<Table> {
    let t = t.clone().ok_or_else(|| CliError::config(format!("{path}.t"), "required for tabulated"))?;
    let v = v.clone().ok_or_else(|| CliError::config(format!("{path}.v"), "required for tabulated"))?;
    Table::new(t, v).map_err(|e| CliError::config(path, e.to_string()))
}

impl KernelConfig {
    fn build(&self, path: &str) -> CliResult<KernelFunction> {
        let param = || {
            self.param
                .ok_or_else(|| CliError::config(format!("{path}.param"), format!("required for {:?}", self.form)))
        };
        let k = match self.form {
            KernelForm::Constant => KernelFunction::constant(param()?),
            KernelForm::Identity => KernelFunction::identity(),
            KernelForm::ExpDecay => KernelFunction::exp_decay(),
            KernelForm::Power => KernelFunction::power(param()?),
            KernelForm::NegLog => KernelFunction::neg_log(),
            KernelForm::OneMinusSqrtPower => KernelFunction::one_minus_sqrt_power(param()?),
            KernelForm::Tabulated => KernelFunction::tabulated(table_at(path, &self.t, &self.v)?),
        };
        Ok(match self.scale {
            Some(u) => k.scaled(u),
            None => k,
        })
    }
}

impl TimeConfig {
    fn build(&self, path: &str) -> CliResult<TimeChange> {
        let wrap = |e: Error| CliError::config(path, e.to_string());
        let interval = Interval::new(self.lo, self.hi.unwrap_or(f64::INFINITY)).map_err(wrap)?;
        let param = || {
            self.param
                .ok_or_else(|| CliError::config(format!("{path}.param"), format!("required for {:?}", self.form)))
        };
        let r = match self.form {
            TimeForm::Identity => TimeChange::identity(interval),
            TimeForm::OneMinusExp => TimeChange::one_minus_exp(interval),
            TimeForm::Power => TimeChange::power(param()?, interval).map_err(wrap)?,
            TimeForm::IncGammaTail => TimeChange::inc_gamma_tail(param()?, interval).map_err(wrap)?,
            TimeForm::Tabulated => {
                TimeChange::tabulated(table_at(path, &self.t, &self.v)?, interval).map_err(wrap)?
            }
        };
        match self.scale {
            Some(s) => r.scaled(s).map_err(wrap),
            None => Ok(r),
        }
    }
}

impl MappingConfig {
    fn build(&self, path: &str) -> CliResult<MappingSpec> {
        let spec = match (&self.name, &self.kernel, &self.time) {
            (Some(name), None, None) => {
                let parsed = MappingName::parse(name).map_err(|e| CliError::config(format!("{path}.name"), e.to_string()))?;
                let spec = named(parsed)
                    .map_err(|e| CliError::config(format!("{path}.name"), e.to_string()))?
                    .spec;
                if self.pre_negate {
                    let flag = !spec.pre_negate();
                    spec.pre_negated(flag)
                } else {
                    spec
                }
            }
            (None, Some(k), Some(t)) => {
                let kernel = k.build(&format!("{path}.kernel"))?;
                let time = t.build(&format!("{path}.time"))?;
                let spec = MappingSpec::new(kernel, time).map_err(|e| CliError::config(path, e.to_string()))?;
                let label = format!("I[{}, {}]", spec.kernel().label(), spec.time().label());
                spec.pre_negated(self.pre_negate).with_label(label)
            }
            _ => return Err(CliError::config(path, "give either `name` or both `kernel` and `time`")),
        };
        Ok(match &self.label {
            Some(l) => spec.with_label(l.clone()),
            None => spec,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    law: Option<LawConfig>,
    #[serde(default)]
    mappings: Vec<serde_json::Value>,
    grid: Option<GridConfig>,
    t_grid: Option<GridConfig>,
    tol: Option<f64>,
    seed: Option<u64>,
    n_paths: Option<usize>,
    level: Option<u32>,
    suite: Option<String>,
    out: Option<PathBuf>,
}

/// A parsed run configuration. Mappings are listed outermost first.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub law: Option<LawConfig>,
    pub mappings: Vec<MappingConfig>,
    pub grid: Option<GridConfig>,
    pub t_grid: Option<GridConfig>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub level: u32,
    pub suite: Option<String>,
    pub out: Option<PathBuf>,
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str, prefix: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, _) => inner.clone(),
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{inner}"),
        };
        CliError::config(path, e.into_inner().to_string())
    })
}

impl RunConfig {
    /// Parse a config document. Mappings may be catalog names or objects.
    pub fn parse(text: &str) -> CliResult<Self> {
        let raw: RawConfig = from_json(text, "")?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema_version),
            ));
        }
        let mut mappings = Vec::with_capacity(raw.mappings.len());
        for (i, value) in raw.mappings.into_iter().enumerate() {
            let m = match value {
                serde_json::Value::String(name) => MappingConfig {
                    name: Some(name),
                    kernel: None,
                    time: None,
                    pre_negate: false,
                    label: None,
                },
                other => from_json(&other.to_string(), &format!("mappings[{i}]"))?,
            };
            mappings.push(m);
        }
        Ok(RunConfig {
            law: raw.law,
            mappings,
            grid: raw.grid,
            t_grid: raw.t_grid,
            tol: raw.tol,
            seed: raw.seed,
            n_paths: raw.n_paths,
            level: raw.level.unwrap_or(0),
            suite: raw.suite,
            out: raw.out,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn law_triple(&self) -> CliResult<LevyTriple> {
        self.law
            .as_ref()
            .ok_or_else(|| CliError::config("law", "missing"))?
            .triple()
    }

    pub fn mapping_specs(&self) -> CliResult<Vec<MappingSpec>> {
        self.mappings
            .iter()
            .enumerate()
            .map(|(i, m)| m.build(&format!("mappings[{i}]")))
            .collect()
    }
}

/// Run the CLI on `args` and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let outcome = match &cli.command {
        Command::Exponent(a) => cmd_exponent(a),
        Command::Compose(a) => cmd_compose(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match outcome {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(THREADS_ENV, format!("expected a positive integer, got {value:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_config(args: &CommonArgs, required: bool) -> CliResult<Option<RunConfig>> {
    match &args.config {
        Some(p) => RunConfig::load(p).map(Some),
        None if required => Err(CliError::config("--config", "required for this command")),
        None => Ok(None),
    }
}

fn out_dir(args: &CommonArgs, cfg: Option<&RunConfig>) -> CliResult<PathBuf> {
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn y_grid(args: &CommonArgs, cfg: Option<&RunConfig>) -> Vec<f64> {
    args.grid
        .or_else(|| cfg.and_then(|c| c.grid))
        .map(|g| g.points())
        .unwrap_or_else(standard_grid)
}

/// Write `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(&target, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(&target, e))?;
    tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
    Ok(target)
}

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// CSV text with a header row.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn mapped_exponent(law: &LevyExponent, specs: &[MappingSpec], tol: f64) -> CliResult<LevyExponent> {
    let mut out = law.clone();
    for spec in specs.iter().rev() {
        out = apply_with(spec, &out, tol)?;
    }
    Ok(out)
}

fn checked_tol(tol: Option<f64>, default: f64) -> CliResult<f64> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(CliError::config("tol", format!("must be positive, got {t}"))),
        Some(t) => Ok(t),
        None => Ok(default),
    }
}

/// `exponent.csv` with columns `y, re, im`.
pub fn cmd_exponent(args: &CommonArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(args, true)?.expect("required");
    let tol = checked_tol(args.tol.or(cfg.tol), APPLY_TOL)?;
    let law = exponent_of(&cfg.law_triple()?)?;
    let specs = cfg.mapping_specs()?;
    let e = mapped_exponent(&law, &specs, tol)?;
    let ys = y_grid(args, Some(&cfg));
    let values = e.eval_grid(&ys)?;
    let dir = out_dir(args, Some(&cfg))?;
    let csv = csv_text(
        &["y", "re", "im"],
        ys.iter().zip(&values).map(|(&y, v)| vec![y, v.re, v.im]),
    );
    Ok(vec![write_atomic(&dir, "exponent.csv", csv.as_bytes())?])
}

#[derive(Debug, Serialize)]
struct ComposeReport {
    schema_version: u32,
    factors: Vec<String>,
    label: String,
    kernel: String,
    time_change: String,
    direction: &'static str,
    pre_negate: bool,
    lo: f64,
    /// `None` for `+∞`.
    hi: Option<f64>,
    total_mass: Option<f64>,
    table: String,
}

fn t_grid(cfg: &RunConfig, interval: Interval) -> Vec<f64> {
    if let Some(g) = cfg.t_grid {
        return g.points().into_iter().filter(|&t| interval.contains(t)).collect();
    }
    const COUNT: usize = 200;
    if interval.is_bounded() {
        let w = interval.hi - interval.lo;
        (1..=COUNT).map(|k| interval.lo + w * k as f64 / COUNT as f64).collect()
    } else {
        let (a, b) = ((interval.lo.max(1e-3)).ln(), (interval.lo + 30.0).ln());
        (0..COUNT)
            .map(|k| (a + (b - a) * k as f64 / (COUNT - 1) as f64).exp())
            .filter(|&t| interval.contains(t))
            .collect()
    }
}

/// `composed.json` describing the single mapping and `time_change.csv` with
/// columns `t, density, r` (clock density and time change `r(t)`).
pub fn cmd_compose(args: &CommonArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(args, true)?.expect("required");
    let specs = cfg.mapping_specs()?;
    if specs.is_empty() {
        return Err(CliError::config("mappings", "need at least one mapping"));
    }
    let composed = compose(&specs)?;
    let time = composed.time();
    let interval = composed.interval();
    let ts = t_grid(&cfg, interval);
    let rows = ts
        .iter()
        .map(|&t| Ok(vec![t, time.rho_density(t)?, time.value(t)?]))
        .collect::<std::result::Result<Vec<_>, Error>>()?;
    let dir = out_dir(args, Some(&cfg))?;
    let csv = csv_text(&["t", "density", "r"], rows);
    let table = write_atomic(&dir, "time_change.csv", csv.as_bytes())?;
    let rho = composed.rho();
    let total_mass = if rho.is_finite() { rho.total_mass().ok() } else { None };
    let report = ComposeReport {
        schema_version: SCHEMA_VERSION,
        factors: specs.iter().map(|s| s.label().to_string()).collect(),
        label: composed.label().to_string(),
        kernel: composed.kernel().label(),
        time_change: time.label(),
        direction: match time.direction() {
            Direction::NonDecreasing => "non_decreasing",
            Direction::NonIncreasing => "non_increasing",
        },
        pre_negate: composed.pre_negate(),
        lo: interval.lo,
        hi: interval.hi.is_finite().then_some(interval.hi),
        total_mass,
        table: "time_change.csv".into(),
    };
    let json = write_json(&dir, "composed.json", &report)?;
    Ok(vec![json, table])
}

fn default_laws() -> Vec<LevyTriple> {
    vec![
        LevyTriple::gaussian(0.0, 1.0).expect("valid"),
        LevyTriple::gamma(1.0, 1.0).expect("valid"),
        LevyTriple::compound_poisson(vec![Atom { x: 1.0, mass: 1.0 }]).expect("valid"),
    ]
}

fn run_suite(suite: &str, e: &LevyExponent, grid: &[f64], tol: f64) -> CliResult<Vec<IdentityCheckResult>> {
    let mut out = Vec::new();
    match suite {
        "thorin-composition" => out.push(check_thorin_composition(e, grid, tol)?),
        "kexp-alt" => out.push(check_kexp_alt(e, grid, tol)?),
        "power-pair" => {
            for b in CATALOG_PARAMS {
                out.push(check_power_pair(b, e, grid, tol)?);
            }
        }
        "power-lmap" => {
            for b in CATALOG_PARAMS {
                out.push(check_power_lmap(b, e, grid, tol)?);
            }
        }
        "gamma-lmap" => {
            for a in CATALOG_PARAMS {
                out.push(check_gamma_lmap(a, e, grid, tol)?);
            }
        }
        "gamma-lmap-unit" => out.push(check_gamma_lmap_unit(e, grid, tol)?),
        "thorin-witness" => out.push(thorin_factorization_witness(e, grid, tol)?),
        _ => unreachable!("suite names are checked before running"),
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    schema_version: u32,
    suite: String,
    tolerance: f64,
    pass: bool,
    failures: usize,
    results: Vec<IdentityCheckResult>,
    timestamp: u64,
}

/// `verify.json` with every identity result; failed identities also get
/// `<identity>-<law>-errors.csv` with columns `y, error`.
pub fn cmd_verify(args: &CommonArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(args, false)?;
    let suite = args
        .suite
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.suite.clone()))
        .unwrap_or_else(|| "all".into());
    let suites: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if let Some(s) = SUITES.iter().find(|s| **s == suite) {
        vec![*s]
    } else {
        return Err(CliError::config(
            "--suite",
            format!("unknown suite {suite:?}; expected `all` or one of {}", SUITES.join(", ")),
        ));
    };
    let tol = checked_tol(args.tol.or(cfg.as_ref().and_then(|c| c.tol)), DEFAULT_VERIFY_TOL)?;
    let laws = match cfg.as_ref().and_then(|c| c.law.as_ref()) {
        Some(l) => vec![l.triple()?],
        None => default_laws(),
    };
    let grid = y_grid(args, cfg.as_ref());
    let dir = out_dir(args, cfg.as_ref())?;
    let mut results = Vec::new();
    let mut files = Vec::new();
    for (li, law) in laws.iter().enumerate() {
        let e = exponent_of(law)?;
        for s in &suites {
            for mut r in run_suite(s, &e, &grid, tol)? {
                if !r.pass {
                    let name = format!("{}-law{li}-errors.csv", sanitize(&r.identity));
                    let csv = csv_text(&["y", "error"], r.grid.iter().zip(&r.errors).map(|(&y, &err)| vec![y, err]));
                    files.push(write_atomic(&dir, &name, csv.as_bytes())?);
                    r.artifacts.push(name);
                }
                results.push(r);
            }
        }
    }
    let failures = results.iter().filter(|r| !r.pass).count();
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        suite,
        tolerance: tol,
        pass: failures == 0,
        failures,
        results,
        timestamp: timestamp(),
    };
    files.insert(0, write_json(&dir, "verify.json", &report)?);
    for r in report.results.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {} on {}: {:.3e} > {:.1e}", r.identity, r.law, r.max_abs_error, r.tolerance);
    }
    if failures > 0 {
        return Err(CliError::Failed(format!("{failures} identity check(s) failed")));
    }
    Ok(files)
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    schema_version: u32,
    mapping: String,
    level: u32,
    mean: f64,
    variance: f64,
    model_mean: Option<f64>,
    band_fraction_required: f64,
    pass: bool,
    simulation: SimResult,
    comparison: EcfReport,
    timestamp: u64,
}

/// `samples.csv` (columns `path, value`) and `ecf_report.json`.
pub fn cmd_simulate(args: &CommonArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(args, true)?.expect("required");
    let triple = cfg.law_triple()?;
    IncrementSampler::new(&triple)?;
    let specs = cfg.mapping_specs()?;
    let spec = match specs.as_slice() {
        [] => return Err(CliError::config("mappings", "need at least one mapping")),
        [one] => one.clone(),
        many => compose(many)?,
    };
    let tol = checked_tol(args.tol.or(cfg.tol), APPLY_TOL)?;
    let n_paths = args.paths.or(cfg.n_paths).unwrap_or(DEFAULT_PATHS);
    if n_paths == 0 {
        return Err(CliError::config("n_paths", "need at least one path"));
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let model = apply_with(&spec, &exponent_of(&triple)?, tol)?;
    let grid = PathGrid::new(&spec, cfg.level)?;
    let ys = y_grid(args, Some(&cfg));
    let sim = simulate_on(&spec, &triple, &grid, n_paths, seed, &ys)?;
    let comparison = ecf_compare(&sim, &model)?;
    let dir = out_dir(args, Some(&cfg))?;
    let mut csv = String::from("path,value\n");
    for (i, &x) in sim.samples.iter().enumerate() {
        let _ = writeln!(csv, "{i},{}", fmt_f64(x));
    }
    let samples = write_atomic(&dir, "samples.csv", csv.as_bytes())?;
    let pass = comparison.fraction_inside >= BAND_FRACTION;
    let report = SimulateReport {
        schema_version: SCHEMA_VERSION,
        mapping: spec.label().to_string(),
        level: cfg.level,
        mean: sim.mean(),
        variance: sim.variance(),
        model_mean: model_mean(&model),
        band_fraction_required: BAND_FRACTION,
        pass,
        simulation: sim,
        comparison,
        timestamp: timestamp(),
    };
    let json = write_json(&dir, "ecf_report.json", &report)?;
    if !pass {
        eprintln!(
            "ECF inside the 4/sqrt(n) band at {:.1}% of the grid, need {:.0}%",
            100.0 * report.comparison.fraction_inside,
            100.0 * BAND_FRACTION
        );
        return Err(CliError::Failed("ECF band criterion failed".into()));
    }
    Ok(vec![samples, json])
}

/// `-i Φ'(0)` by a central difference, when finite.
fn model_mean(e: &LevyExponent) -> Option<f64> {
    let h = 1e-4;
    let d: Complex64 = (e.eval(h).ok()? - e.eval(-h).ok()?) / (2.0 * h);
    let m = d.im;
    m.is_finite().then_some(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag() {
        assert_eq!(parse_grid("-1:2:4").unwrap(), GridConfig { min: -1.0, max: 2.0, count: 4 });
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn unknown_family_names_its_field() {
        let err = RunConfig::parse(r#"{"schema_version": 1, "law": {"family": "cauchy"}}"#).unwrap_err();
        match err {
            CliError::Config { path, .. } => assert_eq!(path, "law.family"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mapping_errors_carry_index() {
        let text = r#"{"schema_version": 1, "mappings": ["lmap", {"kernel": {"form": "wobble"}}]}"#;
        match RunConfig::parse(text).unwrap_err() {
            CliError::Config { path, .. } => assert_eq!(path, "mappings[1].kernel.form"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_round_trips() {
        let x = 0.1 + 0.2;
        let text = csv_text(&["a"], [vec![x]]);
        let cell = text.lines().nth(1).unwrap();
        assert_eq!(cell.parse::<f64>().unwrap(), x);
    }
}
