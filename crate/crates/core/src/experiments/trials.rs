use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{gen_sensors, gen_spiral};
use super::outliers::{inject_outliers, OutlierSpec};
use crate::dbap::{SolverConfig, StopReason};
use crate::diagnostics::InstanceDiagnostics;
use crate::error::{Error, Result};
use crate::geometry::{pairwise_edm, rmse, split_blocks, AnchorSplit, PointConfiguration};
use crate::pipeline::reconstruct;

/// Schema version written into every [`TrialRecord`].
pub const TRIAL_RECORD_VERSION: u32 = 1;

/// A trial counts as recovered when its RMSE is at most this.
pub const RECOVERY_RMSE: f64 = 1.0;

/// Where a trial's ground-truth configuration comes from.
#[derive(Debug, Clone)]
pub enum InstanceSource {
    /// Fresh uniform box cloud per trial.
    Sensors { t: usize, d: usize, box_half_width: f64 },
    /// Fresh noisy spiral in ℝ¹⁰ per trial.
    Spiral { t: usize },
    /// The same configuration for every trial; only anchors and outliers vary.
    Fixed { label: String, points: Arc<PointConfiguration> },
}

impl InstanceSource {
    pub fn label(&self) -> &str {
        match self {
            Self::Sensors { .. } => "sensors",
            Self::Spiral { .. } => "spiral",
            Self::Fixed { label, .. } => label,
        }
    }

    pub fn n_points(&self) -> usize {
        match self {
            Self::Sensors { t, .. } | Self::Spiral { t } => *t,
            Self::Fixed { points, .. } => points.n_points(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Sensors { d, .. } => *d,
            Self::Spiral { .. } => super::generate::SPIRAL_DIM,
            Self::Fixed { points, .. } => points.dim(),
        }
    }

    fn instance(&self, seed: u64) -> Result<PointConfiguration> {
        match self {
            Self::Sensors { t, d, box_half_width } => gen_sensors(*t, *d, *box_half_width, seed),
            Self::Spiral { t } => gen_spiral(*t, seed),
            Self::Fixed { points, .. } => Ok((**points).clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub v: u32,
    pub experiment: String,
    pub cell: usize,
    pub trial: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub d: usize,
    pub m: usize,
    pub alpha: f64,
    pub seed: u64,
    /// `None` when the trial failed before an estimate was produced.
    pub rmse: Option<f64>,
    pub recovered: bool,
    pub iterations: usize,
    pub stop_reason: Option<StopReason>,
    pub final_rel_err: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<InstanceDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A grid of `(m, α)` cells, each run for `trials` independent instances.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub source: InstanceSource,
    pub m_values: Vec<usize>,
    pub alpha_values: Vec<f64>,
    pub trials: usize,
    pub magnitude_scale: f64,
    pub master_seed: u64,
    /// Worker threads; `0` lets the pool pick.
    pub workers: usize,
    pub with_diagnostics: bool,
}

impl PhaseGrid {
    pub fn new(source: InstanceSource, m_values: Vec<usize>, alpha_values: Vec<f64>, trials: usize) -> Self {
        Self {
            source,
            m_values,
            alpha_values,
            trials,
            magnitude_scale: 3.0,
            master_seed: 0,
            workers: 0,
            with_diagnostics: false,
        }
    }

    /// Cells in row-major order, `m` outermost.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.m_values.iter().flat_map(|&m| self.alpha_values.iter().map(move |&a| (m, a))).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of cell `cell`, independent of execution order.
pub fn derive_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)
}

/// `m` distinct indices out of `0..t`, uniformly, sorted ascending.
pub fn sample_anchors<R: Rng + ?Sized>(rng: &mut R, t: usize, m: usize) -> Result<Vec<usize>> {
    if m > t {
        return Err(Error::InvalidInput(format!("cannot pick {m} anchors from {t} points")));
    }
    let mut anchors = sample(rng, t, m).into_vec();
    anchors.sort_unstable();
    Ok(anchors)
}

/// Anchor split drawn from the sub-stream of `seed` reserved for anchors.
pub fn seeded_split(t: usize, m: usize, seed: u64) -> Result<AnchorSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
    AnchorSplit::new(sample_anchors(&mut rng, t, m)?, t)
}

/// Seed of the outlier sub-stream of `seed`.
pub fn outlier_seed(seed: u64) -> u64 {
    derive_seed(seed, 2, 0)
}

struct Outcome {
    rmse: f64,
    iterations: usize,
    stop_reason: StopReason,
    final_rel_err: f64,
    wall_time_ms: f64,
    diagnostics: Option<InstanceDiagnostics>,
}

fn trial_outcome(
    source: &InstanceSource,
    m: usize,
    alpha: f64,
    seed: u64,
    magnitude_scale: f64,
    cfg: &SolverConfig,
    with_diagnostics: bool,
) -> Result<Outcome> {
    let truth = source.instance(derive_seed(seed, 0, 0))?;
    let t = truth.n_points();
    let split = seeded_split(t, m, seed)?;
    split.check_dim(truth.dim())?;

    let blocks = split_blocks(&pairwise_edm(&truth), &split)?;
    let spec = OutlierSpec { alpha, magnitude_scale, seed: outlier_seed(seed), protect_row: cfg.central_row_k };
    let (f_corrupt, s_star) = inject_outliers(&blocks.f, &spec)?;

    let cfg = SolverConfig { rank_d: truth.dim(), ..cfg.clone() };
    let start = Instant::now();
    let result = reconstruct(&blocks.e, &f_corrupt, &cfg)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;

    let ordered_truth = truth.in_split_order(&split);
    let diagnostics =
        if with_diagnostics { Some(InstanceDiagnostics::compute(&truth, &split, &blocks.f, &s_star)?) } else { None };
    Ok(Outcome {
        rmse: rmse(&result.points_hat, &ordered_truth)?,
        iterations: result.dbap.iterations,
        stop_reason: result.dbap.stop_reason,
        final_rel_err: result.dbap.final_rel_err,
        wall_time_ms,
        diagnostics,
    })
}

/// One seeded instance through generation, corruption and reconstruction.
///
/// Failures are captured in the record rather than returned.
pub fn run_trial(grid: &PhaseGrid, cell: usize, trial: usize, cfg: &SolverConfig) -> TrialRecord {
    let cells = grid.cells();
    let (m, alpha) = cells[cell];
    let seed = derive_seed(grid.master_seed, cell as u64, trial as u64);
    let mut record = TrialRecord {
        v: TRIAL_RECORD_VERSION,
        experiment: grid.source.label().to_string(),
        cell,
        trial,
        t: grid.source.n_points(),
        d: grid.source.dim(),
        m,
        alpha,
        seed,
        rmse: None,
        recovered: false,
        iterations: 0,
        stop_reason: None,
        final_rel_err: None,
        wall_time_ms: None,
        diagnostics: None,
        error: None,
    };
    match trial_outcome(&grid.source, m, alpha, seed, grid.magnitude_scale, cfg, grid.with_diagnostics) {
        Ok(out) => {
            record.recovered = out.rmse <= RECOVERY_RMSE;
            record.rmse = Some(out.rmse);
            record.iterations = out.iterations;
            record.stop_reason = Some(out.stop_reason);
            record.final_rel_err = Some(out.final_rel_err);
            record.wall_time_ms = Some(out.wall_time_ms);
            record.diagnostics = out.diagnostics;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Every trial of every cell, ordered by `(cell, trial)`.
pub fn run_phase_grid(grid: &PhaseGrid, cfg: &SolverConfig) -> Result<Vec<TrialRecord>> {
    let jobs = grid_jobs(grid, cfg)?;
    let pool = worker_pool(grid.workers)?;
    Ok(pool.install(|| jobs.par_iter().map(|&(c, k)| run_trial(grid, c, k, cfg)).collect()))
}

/// Runs the grid like [`run_phase_grid`] but hands each record to `sink` as
/// soon as it completes, in completion order.
pub fn run_phase_grid_streaming<F>(grid: &PhaseGrid, cfg: &SolverConfig, sink: F) -> Result<()>
where
    F: Fn(TrialRecord) + Send + Sync,
{
    let jobs = grid_jobs(grid, cfg)?;
    let pool = worker_pool(grid.workers)?;
    pool.install(|| jobs.par_iter().for_each(|&(c, k)| sink(run_trial(grid, c, k, cfg))));
    Ok(())
}

fn grid_jobs(grid: &PhaseGrid, cfg: &SolverConfig) -> Result<Vec<(usize, usize)>> {
    if grid.m_values.is_empty() || grid.alpha_values.is_empty() {
        return Err(Error::InvalidInput("phase grid needs at least one m and one alpha".into()));
    }
    cfg.validate()?;
    Ok((0..grid.cells().len()).flat_map(|c| (0..grid.trials).map(move |k| (c, k))).collect())
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub m: usize,
    pub alpha: f64,
    pub trials: usize,
    pub recovered: usize,
    pub rate: f64,
}

/// Recovery rate per `(m, α)` cell, sorted by `m` then `α`.
pub fn recovery_rates(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(usize, u64), (usize, usize)> = BTreeMap::new();
    for r in records {
        let entry = cells.entry((r.m, r.alpha.to_bits())).or_default();
        entry.0 += 1;
        entry.1 += usize::from(r.recovered);
    }
    let mut out: Vec<CellSummary> = cells
        .into_iter()
        .map(|((m, bits), (trials, recovered))| CellSummary {
            m,
            alpha: f64::from_bits(bits),
            trials,
            recovered,
            rate: recovered as f64 / trials as f64,
        })
        .collect();
    out.sort_by(|a, b| a.m.cmp(&b.m).then(a.alpha.total_cmp(&b.alpha)));
    out
}
