//! Simulation campaigns: random-state sweeps, DOP sweeps and the
//! shots-versus-error comparison with standard tomography.
//!
//! Every state draws its own generator from `(seed, index path)`, so results
//! do not depend on thread scheduling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hom::SourceModel;
use crate::qstate::{BlochAngles, StokesVector};
use crate::rng;
use crate::tomo::{self, Backend, CoincidenceSet};

pub const DEFAULT_NUM_STATES: usize = 1000;
pub const FULL_NUM_STATES: usize = 10_000;
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.25;

// first element of every stream path
const PATH_DIRECTION: u64 = 0;
const PATH_PURE: u64 = 1;
const PATH_DOP: u64 = 2;
const PATH_SHOTS_ST: u64 = 3;
const PATH_SHOTS_QST: u64 = 4;

/// Area-uniform point on the sphere: `cos θ` uniform on `[-1, 1]`, `φ`
/// uniform on `[0, 2π)`.
pub fn sample_bloch_uniform<R: Rng + ?Sized>(rng: &mut R) -> BlochAngles {
    let c: f64 = rng.random_range(-1.0..=1.0);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    BlochAngles::new(c.acos(), phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Pure,
    Internal,
    External,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Pure => "pure",
            SourceKind::Internal => "internal",
            SourceKind::External => "external",
        })
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pure" => Ok(SourceKind::Pure),
            "internal" => Ok(SourceKind::Internal),
            "external" => Ok(SourceKind::External),
            other => Err(Error::Config(format!("unknown source kind '{other}'"))),
        }
    }
}

impl SourceKind {
    /// Source of this kind with unit direction `dir` and the given DOP;
    /// mixed kinds use weight `(1 + dop) / 2`.
    pub fn source(self, dir: StokesVector, dop: f64) -> Result<SourceModel> {
        let w = (1.0 + dop) / 2.0;
        match self {
            SourceKind::Pure => SourceModel::pure(dir),
            SourceKind::Internal => SourceModel::internal(w, dir),
            SourceKind::External => SourceModel::external(w, dir),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub num_states: usize,
    /// 0 for exact probabilities.
    pub shots_per_setting: u64,
    pub backend: Backend,
    pub kind: SourceKind,
    pub dop_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            num_states: DEFAULT_NUM_STATES,
            shots_per_setting: 10_000,
            backend: Backend::Analytic,
            kind: SourceKind::Pure,
            dop_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            seed: crate::cli::DEFAULT_SEED,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 {
            return Err(Error::Config("num_states must be at least 1".into()));
        }
        if let Some(d) = self.dop_grid.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::OutOfRange {
                name: "dop",
                value: *d,
                range: "[0, 1]",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub state_index: usize,
    pub theta: f64,
    pub phi: f64,
    pub dop_true: f64,
    pub s_true: StokesVector,
    pub coincidences: CoincidenceSet,
    pub epsilon: f64,
    pub dop_est: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub log10_lo: f64,
    pub log10_hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub se: f64,
    /// Values equal to zero, left out of the histogram.
    pub zero_count: usize,
    pub histogram: Vec<HistogramBin>,
}

impl Aggregates {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = mean(values);
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let zero_count = values.iter().filter(|v| **v <= 0.0).count();
        Self {
            count: n,
            mean,
            median: median(values),
            std,
            se: if n > 0 { std / (n as f64).sqrt() } else { 0.0 },
            zero_count,
            histogram: log_histogram(values),
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn log_histogram(values: &[f64]) -> Vec<HistogramBin> {
    let idx: Vec<i64> = values
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| (v.log10() / HISTOGRAM_BIN_WIDTH).floor() as i64)
        .collect();
    let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
        return Vec::new();
    };
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for i in idx {
        counts[(i - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| {
            let b = lo + k as i64;
            HistogramBin {
                log10_lo: b as f64 * HISTOGRAM_BIN_WIDTH,
                log10_hi: (b + 1) as f64 * HISTOGRAM_BIN_WIDTH,
                count,
            }
        })
        .collect()
}

/// Aggregates of the rows sharing one DOP value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopGroup {
    pub dop: f64,
    pub epsilon: Aggregates,
    pub mean_dop_est: f64,
    pub se_dop_est: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub epsilon: Aggregates,
    pub groups: Vec<DopGroup>,
}

impl SweepResult {
    /// Rebuilds all aggregates from `rows`, grouping by `dop_true` in order of
    /// first appearance.
    pub fn from_rows(config: SweepConfig, rows: Vec<SweepRow>) -> Self {
        let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        let mut dops: Vec<f64> = Vec::new();
        for r in &rows {
            if !dops.contains(&r.dop_true) {
                dops.push(r.dop_true);
            }
        }
        let groups = dops
            .into_iter()
            .map(|dop| {
                let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.dop_true == dop).collect();
                let e: Vec<f64> = sel.iter().map(|r| r.epsilon).collect();
                let d = Aggregates::from_values(&sel.iter().map(|r| r.dop_est).collect::<Vec<_>>());
                DopGroup {
                    dop,
                    epsilon: Aggregates::from_values(&e),
                    mean_dop_est: d.mean,
                    se_dop_est: d.se,
                }
            })
            .collect();
        Self {
            config,
            epsilon: Aggregates::from_values(&eps),
            rows,
            groups,
        }
    }
}

fn measure_row(
    cfg: &SweepConfig,
    state_index: usize,
    angles: BlochAngles,
    source: &SourceModel,
    seed: u64,
) -> Result<SweepRow> {
    let c = tomo::measure_coincidences(cfg.backend, source, cfg.shots_per_setting, seed)?;
    let (abs, _) = tomo::estimate_abs_stokes(&c);
    Ok(SweepRow {
        state_index,
        theta: angles.theta,
        phi: angles.phi,
        dop_true: source.dop(),
        s_true: source.mean_stokes(),
        coincidences: c,
        epsilon: tomo::error_epsilon(source, &c),
        dop_est: tomo::estimate_dop(&abs),
    })
}

fn direction(seed: u64, i: usize) -> BlochAngles {
    sample_bloch_uniform(&mut rng::stream(seed, &[PATH_DIRECTION, i as u64]))
}

/// Uniformly random pure states, four settings each.
pub fn run_pure_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.kind != SourceKind::Pure {
        return Err(Error::Config("the pure sweep needs kind = pure".into()));
    }
    let rows = (0..cfg.num_states)
        .into_par_iter()
        .map(|i| {
            let angles = direction(cfg.seed, i);
            let src = SourceModel::pure(angles.stokes())?;
            measure_row(cfg, i, angles, &src, rng::derive_seed(cfg.seed, &[PATH_PURE, i as u64]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::from_rows(cfg.clone(), rows))
}

/// For every DOP in the grid, `num_states` random directions (shared across
/// grid points) prepared with internal or external entanglement.
pub fn run_dop_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.dop_grid.is_empty() {
        return Err(Error::Config("dop grid is empty".into()));
    }
    if cfg.kind == SourceKind::Pure {
        return Err(Error::Config("the dop sweep needs kind = internal or external".into()));
    }
    let work: Vec<(usize, usize)> = (0..cfg.dop_grid.len())
        .flat_map(|g| (0..cfg.num_states).map(move |i| (g, i)))
        .collect();
    let rows = work
        .into_par_iter()
        .map(|(g, i)| {
            let angles = direction(cfg.seed, i);
            let src = cfg.kind.source(angles.stokes(), cfg.dop_grid[g])?;
            let seed = rng::derive_seed(cfg.seed, &[PATH_DOP, g as u64, i as u64]);
            measure_row(cfg, i, angles, &src, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::from_rows(cfg.clone(), rows))
}

/// Dispatches on `cfg.kind`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    match cfg.kind {
        SourceKind::Pure => run_pure_sweep(cfg),
        _ => run_dop_sweep(cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotsRow {
    pub total_rounds: u64,
    pub shots_per_setting: u64,
    pub st: Aggregates,
    pub qst: Aggregates,
}

/// Mean ε of the HOM method and of standard tomography at each total round
/// count (three settings, `rounds / 3` shots each), on the same pure states.
pub fn run_shots_benchmark(cfg: &SweepConfig, total_rounds: &[u64]) -> Result<Vec<ShotsRow>> {
    cfg.validate()?;
    if total_rounds.is_empty() {
        return Err(Error::Config("no shot counts given".into()));
    }
    if cfg.kind != SourceKind::Pure {
        return Err(Error::Config("the shots benchmark uses kind = pure".into()));
    }
    total_rounds
        .iter()
        .enumerate()
        .map(|(k, &rounds)| {
            let shots = rounds / 3;
            if shots == 0 {
                return Err(Error::Config(format!("{rounds} rounds leave no shots per setting")));
            }
            let pairs = (0..cfg.num_states)
                .into_par_iter()
                .map(|i| {
                    let src = SourceModel::pure(direction(cfg.seed, i).stokes())?;
                    let path = [k as u64, i as u64];
                    let st_seed = rng::derive_seed(cfg.seed, &[PATH_SHOTS_ST, path[0], path[1]]);
                    let st = tomo::measure_coincidences(cfg.backend, &src, shots, st_seed)?;
                    let qst_seed = rng::derive_seed(cfg.seed, &[PATH_SHOTS_QST, path[0], path[1]]);
                    let (rho, _) = tomo::standard_qst(&src, shots, qst_seed)?;
                    let qst = CoincidenceSet::implied_by(&rho, shots)?;
                    Ok((tomo::error_epsilon(&src, &st), tomo::error_epsilon(&src, &qst)))
                })
                .collect::<Result<Vec<(f64, f64)>>>()?;
            let (st, qst): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            Ok(ShotsRow {
                total_rounds: rounds,
                shots_per_setting: shots,
                st: Aggregates::from_values(&st),
                qst: Aggregates::from_values(&qst),
            })
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}
