//! Command-line front end.
//!
//! Settings come from flags, then an optional flat `key = value` file
//! (`--config`), then defaults. Config keys are the long flag names with
//! `_` in place of `-`. Every run writes its outputs and a manifest that
//! `replay` can re-execute.

use std::collections::{BTreeMap, BTreeSet};
use std::cell::RefCell;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{self, ShotsRow, SourceKind, SweepConfig, SweepResult, SweepRow};
use crate::error::{Error, Result};
use crate::hom::SourceModel;
use crate::qstate::{BlochAngles, PauliAxis, StokesVector};
use crate::tomo::{self, Backend, CoincidenceSet, DetectorConfig, StokesRecord};

pub const DEFAULT_SEED: u64 = 0x5eed_2017;
pub const OUT_DIR_ENV: &str = "HOM_TOMO_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "hom-tomo-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_SIGN_WARNING: i32 = 2;

pub const SWEEP_COLUMNS: [&str; 13] = [
    "state_index", "theta", "phi", "dop_true", "s1", "s2", "s3", "p_I", "p_1", "p_2", "p_3",
    "epsilon", "dop_est",
];
pub const BENCH_COLUMNS: [&str; 8] = [
    "total_rounds", "shots_per_setting", "st_mean", "st_se", "st_median", "qst_mean", "qst_se",
    "qst_median",
];

#[derive(Debug, Parser)]
#[command(name = "hom-tomo", version, about = "Polarization tomography from two-photon interference")]
pub struct Cli {
    /// Output directory (overrides $HOM_TOMO_OUT_DIR).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat key = value settings file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full protocol on one source.
    Tomo(TomoArgs),
    /// Random-state or DOP sweep.
    Sweep(SweepArgs),
    /// Error versus total measurement rounds, HOM method and standard tomography.
    Bench(BenchArgs),
    /// Re-run a command from its manifest.
    Replay { manifest: PathBuf },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// analytic | circuit | boson
    #[arg(long)]
    pub backend: Option<String>,
    /// Shots per measurement setting.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Exact probabilities (same as --shots 0).
    #[arg(long)]
    pub exact: bool,
    /// Integer seed or `random`.
    #[arg(long)]
    pub seed: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct TomoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// pure | internal | external
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Point the source along Stokes axis 1, 2 or 3 (overrides theta/phi).
    #[arg(long)]
    pub axis: Option<usize>,
    /// Schmidt weight of an internally entangled source.
    #[arg(long)]
    pub p: Option<f64>,
    /// Mixing weight of an externally entangled source.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long)]
    pub eta1: Option<f64>,
    #[arg(long)]
    pub eta_h: Option<f64>,
    #[arg(long)]
    pub eta_v: Option<f64>,
    /// Photon pairs for the single-count step.
    #[arg(long)]
    pub pairs: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// pure (random states) | internal | external (DOP sweep)
    #[arg(long)]
    pub kind: Option<String>,
    /// States per sweep (per grid point for DOP sweeps).
    #[arg(long)]
    pub states: Option<usize>,
    /// Use 10000 states.
    #[arg(long)]
    pub full_scale: bool,
    /// Comma-separated DOP values.
    #[arg(long)]
    pub dop_grid: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated total round counts (3 settings × shots).
    #[arg(long)]
    pub rounds: Option<String>,
    #[arg(long)]
    pub states: Option<usize>,
    /// Use 10000 states.
    #[arg(long)]
    pub full_scale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomoConfig {
    pub source: SourceModel,
    pub backend: Backend,
    pub shots_per_setting: u64,
    pub detector: DetectorConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sweep: SweepConfig,
    pub total_rounds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Tomo(TomoConfig),
    Sweep(SweepConfig),
    Bench(BenchConfig),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Tomo(_) => "tomo",
            RunConfig::Sweep(_) => "sweep",
            RunConfig::Bench(_) => "bench",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::Tomo(c) => c.seed,
            RunConfig::Sweep(c) => c.seed,
            RunConfig::Bench(c) => c.sweep.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedOrigin {
    Default,
    Explicit,
    Random,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub seed_origin: SeedOrigin,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

/// Flat `key = value` file. Blank lines and lines starting with `#` or `;`
/// are skipped, as are `[section]` headers.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key = value", n + 1)));
        };
        let key = k.trim().replace('-', "_");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{key}'", n + 1)));
        }
    }
    Ok(map)
}

struct Settings {
    file: BTreeMap<String, String>,
    seen: RefCell<BTreeSet<String>>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => parse_config_text(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            seen: RefCell::new(BTreeSet::new()),
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.seen.borrow_mut().insert(key.to_string());
        self.file.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let from_file = self.raw(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("{key} = {v}: {e}")))
            })
            .transpose()
    }

    fn flag(&self, key: &str, flag: bool) -> Result<bool> {
        Ok(flag || self.get::<bool>(key, None)?.unwrap_or(false))
    }

    fn finish(&self) -> Result<()> {
        let seen = self.seen.borrow();
        match self.file.keys().find(|k| !seen.contains(*k)) {
            Some(k) => Err(Error::Config(format!("unknown config key '{k}'"))),
            None => Ok(()),
        }
    }
}

fn parse_seed(s: &str) -> Result<(u64, SeedOrigin)> {
    if s.eq_ignore_ascii_case("random") {
        return Ok((rand::rng().random(), SeedOrigin::Random));
    }
    s.parse::<u64>()
        .map(|v| (v, SeedOrigin::Explicit))
        .map_err(|e| Error::Config(format!("seed '{s}': {e}")))
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| Error::Config(format!("{key}: '{t}': {e}")))
        })
        .collect()
}

struct Common {
    backend: Backend,
    shots: u64,
    seed: u64,
    seed_origin: SeedOrigin,
}

fn resolve_common(s: &Settings, a: &CommonArgs, default_shots: u64) -> Result<Common> {
    let backend = s.get::<Backend>("backend", a.backend.as_deref().map(str::parse).transpose()?)?;
    let exact = s.flag("exact", a.exact)?;
    let shots = s.get("shots", a.shots)?;
    if exact && shots.is_some_and(|n| n > 0) {
        return Err(Error::Config("--exact conflicts with a nonzero shot count".into()));
    }
    let (seed, seed_origin) = match s.get::<String>("seed", a.seed.clone())? {
        Some(v) => parse_seed(&v)?,
        None => (DEFAULT_SEED, SeedOrigin::Default),
    };
    Ok(Common {
        backend: backend.unwrap_or_default(),
        shots: if exact { 0 } else { shots.unwrap_or(default_shots) },
        seed,
        seed_origin,
    })
}

fn resolve_tomo(s: &Settings, a: &TomoArgs) -> Result<(RunConfig, SeedOrigin)> {
    let c = resolve_common(s, &a.common, 10_000)?;
    let kind: SourceKind = s
        .get::<String>("source", a.source.clone())?
        .ok_or_else(|| Error::Config("--source is required".into()))?
        .parse()?;
    let theta = s.get("theta", a.theta)?.unwrap_or(0.0);
    let phi = s.get("phi", a.phi)?.unwrap_or(0.0);
    let dir = match s.get("axis", a.axis)? {
        Some(k) => {
            let axis = k
                .checked_sub(1)
                .and_then(PauliAxis::from_index)
                .ok_or_else(|| Error::Config(format!("axis {k} is not 1, 2 or 3")))?;
            BlochAngles::along(axis).stokes()
        }
        None => BlochAngles::new(theta, phi).stokes(),
    };
    let p = s.get("p", a.p)?;
    let lambda = s.get("lambda", a.lambda)?;
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Config(format!("--{name} is required for source {kind}")))
    };
    let source = match kind {
        SourceKind::Pure => SourceModel::pure(dir)?,
        SourceKind::Internal => SourceModel::internal(need(p, "p")?, dir)?,
        SourceKind::External => SourceModel::external(need(lambda, "lambda")?, dir)?,
    };
    let d = DetectorConfig::default();
    let detector = DetectorConfig {
        eta0: s.get("eta0", a.eta0)?.unwrap_or(d.eta0),
        eta1: s.get("eta1", a.eta1)?.unwrap_or(d.eta1),
        eta_h: s.get("eta_h", a.eta_h)?.unwrap_or(d.eta_h),
        eta_v: s.get("eta_v", a.eta_v)?.unwrap_or(d.eta_v),
        pairs_n: s.get("pairs", a.pairs)?.unwrap_or(d.pairs_n),
    };
    detector.validate()?;
    Ok((
        RunConfig::Tomo(TomoConfig {
            source,
            backend: c.backend,
            shots_per_setting: c.shots,
            detector,
            seed: c.seed,
        }),
        c.seed_origin,
    ))
}

fn resolve_states(s: &Settings, states: Option<usize>, full_scale: bool) -> Result<usize> {
    let full = s.flag("full_scale", full_scale)?;
    let states = s.get("states", states)?;
    Ok(match (states, full) {
        (Some(n), _) => n,
        (None, true) => bench::FULL_NUM_STATES,
        (None, false) => bench::DEFAULT_NUM_STATES,
    })
}

fn resolve_sweep(s: &Settings, a: &SweepArgs) -> Result<(RunConfig, SeedOrigin)> {
    let c = resolve_common(s, &a.common, 10_000)?;
    let kind = s.get::<String>("kind", a.kind.clone())?;
    let kind = kind.as_deref().map(str::parse).transpose()?.unwrap_or(SourceKind::Pure);
    let grid = match s.get::<String>("dop_grid", a.dop_grid.clone())? {
        Some(g) => parse_list("dop_grid", &g)?,
        None => SweepConfig::default().dop_grid,
    };
    let cfg = SweepConfig {
        num_states: resolve_states(s, a.states, a.full_scale)?,
        shots_per_setting: c.shots,
        backend: c.backend,
        kind,
        dop_grid: grid,
        seed: c.seed,
    };
    cfg.validate()?;
    Ok((RunConfig::Sweep(cfg), c.seed_origin))
}

fn resolve_bench(s: &Settings, a: &BenchArgs) -> Result<(RunConfig, SeedOrigin)> {
    let c = resolve_common(s, &a.common, 0)?;
    if c.shots != 0 {
        return Err(Error::Config("bench takes --rounds, not --shots".into()));
    }
    let rounds = match s.get::<String>("rounds", a.rounds.clone())? {
        Some(r) => parse_list("rounds", &r)?,
        None => vec![100, 1000, 10_000, 100_000],
    };
    let sweep = SweepConfig {
        num_states: resolve_states(s, a.states, a.full_scale)?,
        shots_per_setting: 0,
        backend: c.backend,
        kind: SourceKind::Pure,
        dop_grid: Vec::new(),
        seed: c.seed,
    };
    sweep.validate()?;
    Ok((
        RunConfig::Bench(BenchConfig {
            sweep,
            total_rounds: rounds,
        }),
        c.seed_origin,
    ))
}

/// Output directory: `--out`, then `$HOM_TOMO_OUT_DIR`, then the `out` config
/// key, then `./hom-tomo-out`.
fn resolve_out(s: &Settings, flag: Option<PathBuf>) -> Result<PathBuf> {
    let from_file = s.get::<PathBuf>("out", None)?;
    Ok(flag
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or(from_file)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)))
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        let s = r.s_true;
        let c = &r.coincidences;
        let mut rec = vec![r.state_index.to_string()];
        rec.extend(
            [
                r.theta, r.phi, r.dop_true, s.s1, s.s2, s.s3, c.p_identity, c.p_axis[0], c.p_axis[1],
                c.p_axis[2], r.epsilon, r.dop_est,
            ]
            .map(fmt_f64),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_sweep_csv`]. The shot count is not part of
/// the row format and is supplied by the caller.
pub fn read_sweep_csv(path: &Path, shots_per_setting: u64) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_COLUMNS {
        return Err(Error::Config(format!("unexpected columns in {}", path.display())));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|e| Error::Config(format!("column {}: {e}", SWEEP_COLUMNS[i])))
            };
            Ok(SweepRow {
                state_index: rec[0]
                    .parse()
                    .map_err(|e| Error::Config(format!("state_index: {e}")))?,
                theta: f(1)?,
                phi: f(2)?,
                dop_true: f(3)?,
                s_true: StokesVector::new(f(4)?, f(5)?, f(6)?),
                coincidences: CoincidenceSet {
                    p_identity: f(7)?,
                    p_axis: [f(8)?, f(9)?, f(10)?],
                    shots_per_setting,
                },
                epsilon: f(11)?,
                dop_est: f(12)?,
            })
        })
        .collect()
}

pub fn write_bench_csv(path: &Path, rows: &[ShotsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(BENCH_COLUMNS)?;
    for r in rows {
        let mut rec = vec![r.total_rounds.to_string(), r.shots_per_setting.to_string()];
        rec.extend(
            [r.st.mean, r.st.se, r.st.median, r.qst.mean, r.qst.se, r.qst.median].map(fmt_f64),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Serialize)]
struct TomoOutput<'a> {
    source: &'a SourceModel,
    record: &'a StokesRecord,
}

#[derive(Serialize)]
struct SweepAggregates<'a> {
    epsilon: &'a bench::Aggregates,
    groups: &'a [bench::DopGroup],
}

fn print_record(rec: &StokesRecord) {
    println!("backend: {}", rec.backend);
    println!("s1: {}", fmt_f64(rec.s.s1));
    println!("s2: {}", fmt_f64(rec.s.s2));
    println!("s3: {}", fmt_f64(rec.s.s3));
    println!("dop: {}", fmt_f64(rec.dop));
    println!("global_purity: {}", fmt_f64(rec.global_purity));
    println!("p_identity: {}", fmt_f64(rec.coincidences.p_identity));
    println!("classification: {}", rec.classification);
    println!("sign_confidence: {:?}", rec.sign_confidence);
    if rec.global_sign_ambiguous {
        println!("warning: s1 is too small to fix the global sign");
    }
    if rec.estimator_warning {
        println!("warning: an estimator argument fell below -0.05");
    }
}

/// Runs a resolved configuration, writing outputs into `out`. Returns the
/// exit code and the output file names.
pub fn execute(config: &RunConfig, out: &Path) -> Result<(i32, Vec<String>)> {
    fs::create_dir_all(out)?;
    match config {
        RunConfig::Tomo(c) => {
            let rec = tomo::full_tomography(c.backend, &c.source, c.shots_per_setting, &c.detector, c.seed)?;
            print_record(&rec);
            let name = "tomo_record.json";
            write_json(&out.join(name), &TomoOutput { source: &c.source, record: &rec })?;
            let code = if rec.has_sign_warning() { EXIT_SIGN_WARNING } else { EXIT_OK };
            Ok((code, vec![name.into()]))
        }
        RunConfig::Sweep(c) => {
            let res: SweepResult = bench::run_sweep(c)?;
            write_sweep_csv(&out.join("sweep_rows.csv"), &res.rows)?;
            write_json(
                &out.join("sweep_aggregates.json"),
                &SweepAggregates { epsilon: &res.epsilon, groups: &res.groups },
            )?;
            println!("states: {}", res.rows.len());
            for g in &res.groups {
                println!(
                    "dop {:.4}: mean eps {:.4e} (se {:.2e}), median eps {:.4e}, mean dop_est {:.4}",
                    g.dop, g.epsilon.mean, g.epsilon.se, g.epsilon.median, g.mean_dop_est
                );
            }
            Ok((EXIT_OK, vec!["sweep_rows.csv".into(), "sweep_aggregates.json".into()]))
        }
        RunConfig::Bench(c) => {
            let rows = bench::run_shots_benchmark(&c.sweep, &c.total_rounds)?;
            write_bench_csv(&out.join("bench_table.csv"), &rows)?;
            write_json(&out.join("bench_aggregates.json"), &rows)?;
            println!("total_rounds  st_mean  qst_mean");
            for r in &rows {
                println!("{}  {:.4e}  {:.4e}", r.total_rounds, r.st.mean, r.qst.mean);
            }
            Ok((EXIT_OK, vec!["bench_table.csv".into(), "bench_aggregates.json".into()]))
        }
    }
}

fn run_and_record(config: RunConfig, seed_origin: SeedOrigin, out: &Path) -> Result<i32> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let (code, mut outputs) = execute(&config, out)?;
    let name = format!("{}_manifest.json", config.name());
    outputs.push(name.clone());
    let manifest = RunManifest {
        command: config.name().into(),
        seed: config.seed(),
        config,
        seed_origin,
        version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        outputs,
    };
    write_json(&out.join(name), &manifest)?;
    Ok(code)
}

pub fn run(cli: Cli) -> Result<i32> {
    let settings = Settings::load(cli.config.as_deref())?;
    let (config, origin) = match &cli.command {
        Command::Tomo(a) => resolve_tomo(&settings, a)?,
        Command::Sweep(a) => resolve_sweep(&settings, a)?,
        Command::Bench(a) => resolve_bench(&settings, a)?,
        Command::Replay { manifest } => (read_manifest(manifest)?.config, SeedOrigin::Replay),
    };
    let out = resolve_out(&settings, cli.out)?;
    settings.finish()?;
    run_and_record(config, origin, &out)
}

/// Parses `args` (including the program name) and runs. Invalid arguments,
/// invalid configuration and I/O failures give exit code 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tomo_args(source: &str) -> TomoArgs {
        TomoArgs {
            source: Some(source.into()),
            ..TomoArgs::default()
        }
    }

    fn settings(text: &str) -> Settings {
        Settings {
            file: parse_config_text(text).unwrap(),
            seen: RefCell::new(BTreeSet::new()),
        }
    }

    #[test]
    fn config_text_parsing() {
        let m = parse_config_text("# c\n[run]\nshots = 100\n eta-h=0.95 \n; x\n\n").unwrap();
        assert_eq!(m["shots"], "100");
        assert_eq!(m["eta_h"], "0.95");
        assert!(parse_config_text("shots 100").is_err());
        assert!(parse_config_text("a=1\na=2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let s = settings("shots = 100\nseed = 9\nbackend = boson\nsource = pure");
        let mut a = tomo_args("pure");
        a.common.shots = Some(500);
        let (RunConfig::Tomo(c), origin) = resolve_tomo(&s, &a).unwrap() else {
            panic!()
        };
        assert_eq!(c.shots_per_setting, 500);
        assert_eq!(c.seed, 9);
        assert_eq!(origin, SeedOrigin::Explicit);
        assert_eq!(c.backend, Backend::Boson);
        s.finish().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        let s = settings("shots = 100\nbogus = 1");
        resolve_tomo(&s, &tomo_args("pure")).unwrap();
        assert!(s.finish().is_err());

        let s = settings("shots = many");
        assert!(resolve_tomo(&s, &tomo_args("pure")).is_err());
        let s = settings("");
        assert!(resolve_tomo(&s, &tomo_args("photonic")).is_err());
        assert!(resolve_tomo(&s, &tomo_args("internal")).is_err());
        let mut a = tomo_args("external");
        a.lambda = Some(1.5);
        assert!(resolve_tomo(&s, &a).is_err());
        let mut a = tomo_args("pure");
        a.axis = Some(4);
        assert!(resolve_tomo(&s, &a).is_err());
        let mut a = tomo_args("pure");
        a.common.exact = true;
        a.common.shots = Some(10);
        assert!(resolve_tomo(&s, &a).is_err());
    }

    #[test]
    fn seed_handling() {
        let s = settings("");
        let (c, origin) = resolve_tomo(&s, &tomo_args("pure")).unwrap();
        assert_eq!((c.seed(), origin), (DEFAULT_SEED, SeedOrigin::Default));
        let mut a = tomo_args("pure");
        a.common.seed = Some("random".into());
        let (_, origin) = resolve_tomo(&s, &a).unwrap();
        assert_eq!(origin, SeedOrigin::Random);
        assert!(parse_seed("-3").is_err());
    }

    #[test]
    fn sweep_and_bench_resolution() {
        let s = settings("dop_grid = 0, 0.5 ,1\nkind = external");
        let (RunConfig::Sweep(c), _) = resolve_sweep(&s, &SweepArgs::default()).unwrap() else {
            panic!()
        };
        assert_eq!(c.dop_grid, vec![0.0, 0.5, 1.0]);
        assert_eq!(c.kind, SourceKind::External);
        assert_eq!(c.num_states, bench::DEFAULT_NUM_STATES);

        let a = SweepArgs {
            full_scale: true,
            ..SweepArgs::default()
        };
        let (RunConfig::Sweep(c), _) = resolve_sweep(&settings(""), &a).unwrap() else {
            panic!()
        };
        assert_eq!(c.num_states, bench::FULL_NUM_STATES);

        let (RunConfig::Bench(c), _) = resolve_bench(&settings("rounds = 300,3000"), &BenchArgs::default()).unwrap()
        else {
            panic!()
        };
        assert_eq!(c.total_rounds, vec![300, 3000]);
        assert!(resolve_sweep(&settings("dop_grid = 0, x"), &SweepArgs::default()).is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn sweep_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SweepConfig {
            num_states: 25,
            shots_per_setting: 300,
            ..SweepConfig::default()
        };
        let res = bench::run_pure_sweep(&cfg).unwrap();
        let path = dir.path().join("rows.csv");
        write_sweep_csv(&path, &res.rows).unwrap();
        let back = read_sweep_csv(&path, 300).unwrap();
        assert_eq!(back, res.rows);
        assert_eq!(SweepResult::from_rows(cfg, back), res);
    }
}
