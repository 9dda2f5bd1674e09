//! Synthetic benchmarks: low-rank ground truth, Gaussian noise and outlier
//! corruption, and the two experiment grids comparing the no-op baseline,
//! HOSVD, HOOI and TARST.
//!
//! Every random stream is seeded from the configuration seed mixed with the
//! values that identify its cell (not grid positions), so extending a grid
//! leaves existing cells untouched and parallel execution matches
//! sequential execution exactly.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::decomp::{hooi, hosvd, reconstruct, tarst_with, HooiOptions, Shrink, TarstOptions, TuckerModel};
use crate::error::{Error, Result};
use crate::linalg::count_svd_calls;
use crate::metrics::{rrse, summarize, SummaryStat};
use crate::svht::ThresholdRule;
use crate::tensor::{DenseTensor, Matrix, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Baseline,
    Hosvd,
    Hooi,
    Tarst,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::Hosvd, Method::Hooi, Method::Tarst];

    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Hosvd => "hosvd",
            Method::Hooi => "hooi",
            Method::Tarst => "tarst",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for a cell identified by `parts`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

const TAG_TRUTH: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_OUTLIER: u64 = 3;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points evenly spaced in log10 between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

/// Random `rows x cols` matrix with orthonormal columns. When `center` is set
/// the columns are also orthogonal to the all-ones vector.
fn random_orthonormal(rows: usize, cols: usize, center: bool, rng: &mut ChaCha8Rng) -> Matrix {
    let mut g = Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut *rng));
    if center {
        for mut c in g.column_iter_mut() {
            let mean = c.mean();
            c.add_scalar_mut(-mean);
        }
    }
    g.qr().q().columns(0, cols).into_owned()
}

/// Ground-truth tensor: a Gaussian core of size `ranks` multiplied by random
/// orthonormal factors, affinely rescaled to sample mean `mean` and sample
/// standard deviation `std`.
///
/// Factor columns are drawn orthogonal to the constant vector wherever
/// `ranks[k] < I_k`, so the constant offset is an extra rank-one term
/// orthogonal to the low-rank part: every mode rank is at most `ranks[k] + 1`.
pub fn gen_lowrank_tensor(shape: &Shape, ranks: &[usize], mean: f64, std: f64, seed: u64) -> Result<DenseTensor> {
    if ranks.len() != shape.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} ranks for an order-{} shape",
            ranks.len(),
            shape.order()
        )));
    }
    for (k, (&r, &d)) in ranks.iter().zip(shape.dims()).enumerate() {
        if r == 0 || r > d {
            return Err(Error::RankOutOfRange {
                mode: k,
                rank: r,
                extent: d,
            });
        }
    }
    if !(std >= 0.0 && std.is_finite() && mean.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "need finite mean and std >= 0, got {mean} and {std}"
        )));
    }
    let mut rng = rng(seed);
    let core_shape = Shape::new(ranks.to_vec())?;
    let core_data: Vec<f64> = (0..core_shape.numel())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let core = DenseTensor::from_vec(core_shape, core_data)?;
    let factors: Vec<Matrix> = shape
        .dims()
        .iter()
        .zip(ranks)
        .map(|(&d, &r)| random_orthonormal(d, r, r < d, &mut rng))
        .collect();
    let z = reconstruct(&TuckerModel::new(core, factors)?)?;

    let p = z.numel() as f64;
    let z_mean = z.as_slice().iter().sum::<f64>() / p;
    let z_sd = if z.numel() > 1 {
        (z.as_slice().iter().map(|v| (v - z_mean).powi(2)).sum::<f64>() / (p - 1.0)).sqrt()
    } else {
        0.0
    };
    let gain = if z_sd > 0.0 { std / z_sd } else { 0.0 };
    Ok(z.map(|v| mean + gain * (v - z_mean)))
}

/// `x + sigma * e` with `e` iid standard normal.
pub fn add_gaussian_noise(x: &DenseTensor, sigma: f64, seed: u64) -> Result<DenseTensor> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSigma(sigma));
    }
    let mut rng = rng(seed);
    Ok(x.map(|v| {
        let e: f64 = StandardNormal.sample(&mut rng);
        v + sigma * e
    }))
}

/// What a corrupted entry becomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierMode {
    /// `scale * original entry`.
    #[default]
    Multiply,
    /// `scale * mean of the input tensor`.
    ScaledMean,
}

impl FromStr for OutlierMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiply" => Ok(OutlierMode::Multiply),
            "scaled-mean" => Ok(OutlierMode::ScaledMean),
            _ => Err(Error::InvalidConfig(format!("unknown outlier mode {s:?}"))),
        }
    }
}

/// Corrupts `round(ratio * P)` distinct uniformly chosen entries, returning
/// the corrupted tensor and the mask of modified positions.
pub fn inject_outliers(x: &DenseTensor, ratio: f64, scale: f64, seed: u64) -> Result<(DenseTensor, Vec<bool>)> {
    inject_outliers_with(x, ratio, scale, OutlierMode::Multiply, seed)
}

pub fn inject_outliers_with(
    x: &DenseTensor,
    ratio: f64,
    scale: f64,
    mode: OutlierMode,
    seed: u64,
) -> Result<(DenseTensor, Vec<bool>)> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!("outlier ratio {ratio} outside (0, 1]")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("outlier scale {scale} must be positive")));
    }
    let p = x.numel();
    let count = ((ratio * p as f64).round() as usize).min(p);
    let mut rng = rng(seed);
    let mut mask = vec![false; p];
    let mut out = x.clone();
    let mean = x.as_slice().iter().sum::<f64>() / p as f64;
    for i in sample(&mut rng, p, count) {
        mask[i] = true;
        let v = &mut out.as_mut_slice()[i];
        *v = match mode {
            OutlierMode::Multiply => scale * *v,
            OutlierMode::ScaledMean => scale * mean,
        };
    }
    Ok((out, mask))
}

/// Where TARST gets its noise level from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RulePolicy {
    #[default]
    MedianBased,
    /// Use the injected noise level of the cell.
    KnownSigma,
}

impl RulePolicy {
    fn rule(self, sigma: f64) -> ThresholdRule {
        match self {
            RulePolicy::MedianBased => ThresholdRule::MedianBased,
            RulePolicy::KnownSigma => ThresholdRule::KnownSigma(sigma),
        }
    }
}

/// Settings shared by both experiment patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub methods: Vec<Method>,
    /// Ranks handed to HOSVD/HOOI; `None` means the true ranks plus one for
    /// the constant offset, capped at each extent.
    pub fit_ranks: Option<Vec<usize>>,
    pub tarst_rule: RulePolicy,
    pub shrink: Shrink,
    pub hooi: HooiOptions,
    /// When false every `wall_time_ms` is written as 0, making output
    /// byte-reproducible.
    pub record_timing: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            methods: Method::ALL.to_vec(),
            fit_ranks: None,
            tarst_rule: RulePolicy::MedianBased,
            shrink: Shrink::Hard,
            hooi: HooiOptions::default(),
            record_timing: true,
        }
    }
}

impl SolverSettings {
    fn resolve_fit_ranks(&self, shape: &Shape, true_ranks: &[usize]) -> Vec<usize> {
        match &self.fit_ranks {
            Some(r) => r.clone(),
            None => true_ranks
                .iter()
                .zip(shape.dims())
                .map(|(&r, &d)| (r + 1).min(d))
                .collect(),
        }
    }

    fn validate(&self, shape: &Shape) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if let Some(r) = &self.fit_ranks {
            check_ranks(shape, r, "fit")?;
        }
        if !(self.hooi.tol > 0.0) || self.hooi.max_iter == 0 {
            return Err(Error::InvalidConfig("HOOI needs tol > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }
}

fn check_ranks(shape: &Shape, ranks: &[usize], what: &str) -> Result<()> {
    if ranks.len() != shape.order() {
        return Err(Error::InvalidConfig(format!(
            "{what} ranks {ranks:?} do not match shape {shape}"
        )));
    }
    if ranks.iter().zip(shape.dims()).any(|(&r, &d)| r == 0 || r > d) {
        return Err(Error::InvalidConfig(format!(
            "{what} ranks {ranks:?} out of range for shape {shape}"
        )));
    }
    Ok(())
}

fn check_sigma_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty sigma grid".into()));
    }
    if grid.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidConfig("sigma grid values must be positive".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("sigma grid must be strictly ascending".into()));
    }
    Ok(())
}

fn check_truth(mean: f64, std: f64) -> Result<()> {
    if !(mean.is_finite() && std > 0.0 && std.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "ground truth needs finite mean and std > 0, got {mean} and {std}"
        )));
    }
    Ok(())
}

/// Gaussian-noise sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern1Config {
    pub shape: Shape,
    pub true_mean: f64,
    pub true_std: f64,
    pub true_ranks: Vec<usize>,
    pub sigma_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub solver: SolverSettings,
}

impl Default for Pattern1Config {
    fn default() -> Self {
        Pattern1Config {
            shape: Shape::new(vec![10, 10, 10]).expect("valid"),
            true_mean: 10.0,
            true_std: 2.0,
            true_ranks: vec![3, 3, 3],
            sigma_grid: log_grid(0.1, 10.0, 20),
            reps: 5,
            seed: 0,
            solver: SolverSettings::default(),
        }
    }
}

impl Pattern1Config {
    /// Default ground-truth ranks for a shape: 3 per mode for small tensors,
    /// 5 once every extent is at least 50.
    pub fn default_ranks(shape: &Shape) -> Vec<usize> {
        let r = if shape.dims().iter().all(|&d| d >= 50) { 5 } else { 3 };
        shape.dims().iter().map(|&d| r.min(d)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        check_ranks(&self.shape, &self.true_ranks, "true")?;
        check_sigma_grid(&self.sigma_grid)?;
        check_truth(self.true_mean, self.true_std)?;
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        self.solver.validate(&self.shape)
    }

    pub fn fit_ranks(&self) -> Vec<usize> {
        self.solver.resolve_fit_ranks(&self.shape, &self.true_ranks)
    }
}

/// Outlier robustness grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern2Config {
    pub shape: Shape,
    pub true_mean: f64,
    pub true_std: f64,
    pub true_ranks: Vec<usize>,
    pub sigma_grid: Vec<f64>,
    pub outlier_ratios: Vec<f64>,
    pub outlier_scales: Vec<f64>,
    pub outlier_mode: OutlierMode,
    pub reps: usize,
    pub seed: u64,
    pub solver: SolverSettings,
}

impl Default for Pattern2Config {
    fn default() -> Self {
        Pattern2Config {
            shape: Shape::new(vec![10, 10, 10]).expect("valid"),
            true_mean: 10.0,
            true_std: 2.0,
            true_ranks: vec![3, 3, 3],
            sigma_grid: log_grid(0.1, 10.0, 9),
            outlier_ratios: vec![0.01, 0.05, 0.10, 0.25, 0.50],
            outlier_scales: vec![10.0, 25.0, 50.0, 100.0],
            outlier_mode: OutlierMode::Multiply,
            reps: 5,
            seed: 0,
            solver: SolverSettings::default(),
        }
    }
}

impl Pattern2Config {
    pub fn validate(&self) -> Result<()> {
        check_ranks(&self.shape, &self.true_ranks, "true")?;
        check_sigma_grid(&self.sigma_grid)?;
        check_truth(self.true_mean, self.true_std)?;
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if self.outlier_ratios.is_empty() || self.outlier_scales.is_empty() {
            return Err(Error::InvalidConfig("empty outlier grid".into()));
        }
        if self.outlier_ratios.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::InvalidConfig("outlier ratios must lie in (0, 1]".into()));
        }
        if self.outlier_scales.iter().any(|&s| !(s > 1.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("outlier scales must exceed 1".into()));
        }
        self.solver.validate(&self.shape)
    }

    pub fn fit_ranks(&self) -> Vec<usize> {
        self.solver.resolve_fit_ranks(&self.shape, &self.true_ranks)
    }
}

/// One (method, condition, seed) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub dims: Vec<usize>,
    pub sigma: f64,
    pub outlier_ratio: Option<f64>,
    pub outlier_scale: Option<f64>,
    pub true_std: f64,
    pub rep: usize,
    /// Seed of the cell's last random stream (noise, or outliers in pattern 2).
    pub seed: u64,
    pub rrse: f64,
    pub ranks: Option<Vec<usize>>,
    pub wall_time_ms: f64,
    pub svd_calls: usize,
}

struct MethodResult {
    method: Method,
    rrse: f64,
    ranks: Option<Vec<usize>>,
    wall_time_ms: f64,
    svd_calls: usize,
}

fn run_method(
    method: Method,
    y: &DenseTensor,
    truth: &DenseTensor,
    sigma: f64,
    fit_ranks: &[usize],
    solver: &SolverSettings,
) -> Result<MethodResult> {
    let start = Instant::now();
    let (outcome, svd_calls) = count_svd_calls(|| -> Result<(DenseTensor, Option<Vec<usize>>)> {
        Ok(match method {
            Method::Baseline => (y.clone(), None),
            Method::Hosvd => (reconstruct(&hosvd(y, fit_ranks)?)?, Some(fit_ranks.to_vec())),
            Method::Hooi => (
                reconstruct(&hooi(y, fit_ranks, &solver.hooi)?.model)?,
                Some(fit_ranks.to_vec()),
            ),
            Method::Tarst => {
                let opts = TarstOptions {
                    rule: solver.tarst_rule.rule(sigma),
                    shrink: solver.shrink,
                };
                let report = tarst_with(y, &opts)?;
                (report.estimate()?, Some(report.estimated_ranks))
            }
        })
    });
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let (estimate, ranks) = outcome?;
    Ok(MethodResult {
        method,
        rrse: rrse(&estimate, truth)?,
        ranks,
        wall_time_ms: if solver.record_timing { elapsed } else { 0.0 },
        svd_calls,
    })
}

struct Cell {
    sigma: f64,
    ratio: Option<f64>,
    scale: Option<f64>,
    rep: usize,
}

fn run_cells(
    cells: Vec<Cell>,
    truths: &[DenseTensor],
    true_std: f64,
    fit_ranks: &[usize],
    solver: &SolverSettings,
    observe: impl Fn(&Cell, &DenseTensor) -> Result<(DenseTensor, u64)> + Sync,
) -> Result<Vec<TrialRecord>> {
    let per_cell: Vec<Result<Vec<TrialRecord>>> = cells
        .par_iter()
        .map(|cell| {
            let truth = &truths[cell.rep];
            let (y, seed) = observe(cell, truth)?;
            solver
                .methods
                .iter()
                .map(|&m| {
                    let r = run_method(m, &y, truth, cell.sigma, fit_ranks, solver)?;
                    Ok(TrialRecord {
                        method: r.method,
                        dims: truth.dims().to_vec(),
                        sigma: cell.sigma,
                        outlier_ratio: cell.ratio,
                        outlier_scale: cell.scale,
                        true_std,
                        rep: cell.rep,
                        seed,
                        rrse: r.rrse,
                        ranks: r.ranks,
                        wall_time_ms: r.wall_time_ms,
                        svd_calls: r.svd_calls,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for chunk in per_cell {
        out.extend(chunk?);
    }
    Ok(out)
}

fn truths(shape: &Shape, ranks: &[usize], mean: f64, std: f64, seed: u64, reps: usize) -> Result<Vec<DenseTensor>> {
    (0..reps)
        .map(|rep| gen_lowrank_tensor(shape, ranks, mean, std, derive_seed(seed, &[TAG_TRUTH, rep as u64])))
        .collect()
}

fn noise_seed(base: u64, sigma: f64, rep: usize) -> u64 {
    derive_seed(base, &[TAG_NOISE, sigma.to_bits(), rep as u64])
}

/// Records are ordered sigma-major, then repetition, then method.
pub fn run_pattern1(cfg: &Pattern1Config) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let truths = truths(&cfg.shape, &cfg.true_ranks, cfg.true_mean, cfg.true_std, cfg.seed, cfg.reps)?;
    let cells = cfg
        .sigma_grid
        .iter()
        .flat_map(|&sigma| {
            (0..cfg.reps).map(move |rep| Cell {
                sigma,
                ratio: None,
                scale: None,
                rep,
            })
        })
        .collect();
    run_cells(cells, &truths, cfg.true_std, &cfg.fit_ranks(), &cfg.solver, |cell, truth| {
        let seed = noise_seed(cfg.seed, cell.sigma, cell.rep);
        Ok((add_gaussian_noise(truth, cell.sigma, seed)?, seed))
    })
}

/// Records are ordered by sigma, outlier ratio, outlier scale, repetition, method.
/// The noise stream of a cell is the one pattern 1 uses for the same sigma
/// and repetition.
pub fn run_pattern2(cfg: &Pattern2Config) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let truths = truths(&cfg.shape, &cfg.true_ranks, cfg.true_mean, cfg.true_std, cfg.seed, cfg.reps)?;
    let mut cells = Vec::new();
    for &sigma in &cfg.sigma_grid {
        for &ratio in &cfg.outlier_ratios {
            for &scale in &cfg.outlier_scales {
                for rep in 0..cfg.reps {
                    cells.push(Cell {
                        sigma,
                        ratio: Some(ratio),
                        scale: Some(scale),
                        rep,
                    });
                }
            }
        }
    }
    run_cells(cells, &truths, cfg.true_std, &cfg.fit_ranks(), &cfg.solver, |cell, truth| {
        let noisy = add_gaussian_noise(truth, cell.sigma, noise_seed(cfg.seed, cell.sigma, cell.rep))?;
        let (ratio, scale) = (cell.ratio.unwrap_or(0.0), cell.scale.unwrap_or(1.0));
        let seed = derive_seed(
            cfg.seed,
            &[TAG_OUTLIER, cell.sigma.to_bits(), ratio.to_bits(), scale.to_bits(), cell.rep as u64],
        );
        let (y, _) = inject_outliers_with(&noisy, ratio, scale, cfg.outlier_mode, seed)?;
        Ok((y, seed))
    })
}

/// Mean RRSE with confidence interval for one (method, condition) group.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub method: Method,
    pub sigma: f64,
    pub outlier_ratio: Option<f64>,
    pub outlier_scale: Option<f64>,
    pub stat: SummaryStat,
}

/// Groups records by (method, sigma, ratio, scale) in first-appearance order.
pub fn summarize_records(records: &[TrialRecord]) -> Result<Vec<CellSummary>> {
    type Key = (Method, u64, Option<u64>, Option<u64>);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: std::collections::HashMap<Key, Vec<f64>> = Default::default();
    for r in records {
        let key = (
            r.method,
            r.sigma.to_bits(),
            r.outlier_ratio.map(f64::to_bits),
            r.outlier_scale.map(f64::to_bits),
        );
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r.rrse);
    }
    order
        .into_iter()
        .map(|key| {
            Ok(CellSummary {
                method: key.0,
                sigma: f64::from_bits(key.1),
                outlier_ratio: key.2.map(f64::from_bits),
                outlier_scale: key.3.map(f64::from_bits),
                stat: summarize(&groups[&key])?,
            })
        })
        .collect()
}

/// Mean RRSE for `method` at an exact grid condition, if present.
pub fn mean_rrse(
    summaries: &[CellSummary],
    method: Method,
    sigma: f64,
    ratio: Option<f64>,
    scale: Option<f64>,
) -> Option<f64> {
    summaries
        .iter()
        .find(|s| s.method == method && s.sigma == sigma && s.outlier_ratio == ratio && s.outlier_scale == scale)
        .map(|s| s.stat.mean)
}

pub const CSV_HEADER: [&str; 11] = [
    "method",
    "N",
    "dims",
    "sigma",
    "outlier_ratio",
    "outlier_scale",
    "seed",
    "rrse",
    "ranks",
    "wall_time_ms",
    "svd_calls",
];

/// One CSV row in typed form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub method: Method,
    pub order: usize,
    pub dims: Vec<usize>,
    pub sigma: f64,
    pub outlier_ratio: Option<f64>,
    pub outlier_scale: Option<f64>,
    pub seed: u64,
    pub rrse: f64,
    pub ranks: Option<Vec<usize>>,
    pub wall_time_ms: f64,
    pub svd_calls: usize,
}

impl From<&TrialRecord> for CsvRow {
    fn from(r: &TrialRecord) -> Self {
        CsvRow {
            method: r.method,
            order: r.dims.len(),
            dims: r.dims.clone(),
            sigma: r.sigma,
            outlier_ratio: r.outlier_ratio,
            outlier_scale: r.outlier_scale,
            seed: r.seed,
            rrse: r.rrse,
            ranks: r.ranks.clone(),
            wall_time_ms: r.wall_time_ms,
            svd_calls: r.svd_calls,
        }
    }
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv_to<W: std::io::Write>(records: &[TrialRecord], w: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.method.name().to_string(),
            r.dims.len().to_string(),
            join(&r.dims, "x"),
            r.sigma.to_string(),
            opt_f64(r.outlier_ratio),
            opt_f64(r.outlier_scale),
            r.seed.to_string(),
            r.rrse.to_string(),
            r.ranks.as_deref().map(|v| join(v, ";")).unwrap_or_default(),
            r.wall_time_ms.to_string(),
            r.svd_calls.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(records, std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn field_err(row: usize, what: &str, raw: &str) -> Error {
    Error::Parse {
        line: row,
        msg: format!("invalid {what} {raw:?}"),
    }
}

fn parse_list(raw: &str, sep: char, row: usize, what: &str) -> Result<Vec<usize>> {
    raw.split(sep)
        .map(|t| t.parse().map_err(|_| field_err(row, what, raw)))
        .collect()
}

fn parse_num<T: FromStr>(raw: &str, row: usize, what: &str) -> Result<T> {
    raw.parse().map_err(|_| field_err(row, what, raw))
}

fn parse_opt(raw: &str, row: usize, what: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_num(raw, row, what).map(Some)
    }
}

/// Parses benchmark CSV written by [`write_csv`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let f = |k: usize| rec.get(k).unwrap_or("");
        rows.push(CsvRow {
            method: f(0).parse().map_err(|_| field_err(line, "method", f(0)))?,
            order: parse_num(f(1), line, "N")?,
            dims: parse_list(f(2), 'x', line, "dims")?,
            sigma: parse_num(f(3), line, "sigma")?,
            outlier_ratio: parse_opt(f(4), line, "outlier_ratio")?,
            outlier_scale: parse_opt(f(5), line, "outlier_scale")?,
            seed: parse_num(f(6), line, "seed")?,
            rrse: parse_num(f(7), line, "rrse")?,
            ranks: if f(8).is_empty() {
                None
            } else {
                Some(parse_list(f(8), ';', line, "ranks")?)
            },
            wall_time_ms: parse_num(f(9), line, "wall_time_ms")?,
            svd_calls: parse_num(f(10), line, "svd_calls")?,
        });
    }
    Ok(rows)
}

fn condition_label(s: &CellSummary) -> String {
    match (s.outlier_ratio, s.outlier_scale) {
        (Some(r), Some(c)) => format!("{}:r={}:s={}", s.method, r, c),
        _ => s.method.to_string(),
    }
}

/// Matrix of mean RRSE: first row is the sigma grid, each further row a
/// condition label followed by one mean per sigma (`nan` where missing).
pub fn format_matrix(summaries: &[CellSummary]) -> String {
    let mut sigmas: Vec<f64> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for s in summaries {
        if !sigmas.contains(&s.sigma) {
            sigmas.push(s.sigma);
        }
        let l = condition_label(s);
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    sigmas.sort_by(f64::total_cmp);
    let mut out = format!("condition {}\n", join(&sigmas, " "));
    for label in &labels {
        let cells: Vec<String> = sigmas
            .iter()
            .map(|&sig| {
                summaries
                    .iter()
                    .find(|s| s.sigma == sig && &condition_label(s) == label)
                    .map(|s| s.stat.mean.to_string())
                    .unwrap_or_else(|| "nan".into())
            })
            .collect();
        out.push_str(&format!("{label} {}\n", cells.join(" ")));
    }
    out
}

pub fn write_matrix(summaries: &[CellSummary], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix(summaries)).map_err(|e| Error::io(path, e))
}
