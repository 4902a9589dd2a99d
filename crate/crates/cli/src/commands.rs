use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rodeodb_core::experiments::{
    gen_globule, gen_sensors, gen_spiral, inject_outliers, outlier_seed, recovery_rates, run_phase_grid_streaming,
    seeded_split, OutlierSpec, TrialRecord,
};
use rodeodb_core::geometry::{pairwise_edm, rmse, split_blocks};
use rodeodb_core::pipeline::reconstruct_with;
use rodeodb_core::{AnchorSplit, Error, PointConfiguration, StopReason};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::matrix_file::{read_matrix, read_points, write_matrix, write_points};
use crate::results::ResultsLog;
use crate::svg::phase_heatmap;

/// Version tag of `report.json`.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "rodeodb", version, about = "Outlier-robust point reconstruction from anchor distances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a ground-truth point cloud (T rows, d columns).
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Sample anchors, build E and F from a point cloud and corrupt F.
    Corrupt(CorruptArgs),
    /// Reconstruct points from E and F.
    Solve(SolveArgs),
    /// Run a seeded phase-transition grid and write results.jsonl.
    Phase(PhaseArgs),
    /// Procrustes RMSE between two point files.
    Eval(EvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Uniform in the box [-w, w]^d, centred.
    Sensors {
        #[arg(long = "t")]
        t: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 100.0)]
        box_half_width: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Noisy planar spiral embedded in ten dimensions.
    Spiral {
        #[arg(long = "t")]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Uniform 3-D ball.
    Globule {
        #[arg(long = "t")]
        t: usize,
        #[arg(long, default_value_t = 20.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub magnitude_scale: f64,
    /// Index into the anchor list of the row left uncorrupted.
    #[arg(long, default_value_t = 0)]
    pub central_row: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Solver overrides shared by `solve` and `phase`.
#[derive(Debug, Default, Args)]
pub struct SolverFlags {
    #[arg(long)]
    pub rank_d: Option<usize>,
    #[arg(long)]
    pub xi0_scale: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub conv_tol: Option<f64>,
    #[arg(long)]
    pub mask_tol: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub central_row: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, c: &mut RunConfig) {
        fn set<T: Copy>(dst: &mut T, src: Option<T>) {
            if let Some(v) = src {
                *dst = v;
            }
        }
        set(&mut c.rank_d, self.rank_d);
        set(&mut c.xi0_scale, self.xi0_scale);
        set(&mut c.gamma, self.gamma);
        set(&mut c.conv_tol, self.conv_tol);
        set(&mut c.mask_tol, self.mask_tol);
        set(&mut c.patience, self.patience);
        set(&mut c.max_iter, self.max_iter);
        set(&mut c.central_row_k, self.central_row);
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub e: PathBuf,
    #[arg(long)]
    pub f: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// split.json from `corrupt`; restores the original point order.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Ground-truth points for RMSE, in original order when --split is given.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Print one progress line per iteration to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub estimate: PathBuf,
}

/// Anchor/target split as written by `corrupt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub anchors: Vec<usize>,
    pub targets: Vec<usize>,
    /// Index into `anchors`.
    pub central_row: usize,
    pub seed: u64,
}

/// Contents of `report.json` written by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub v: u32,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub final_rel_err: f64,
    pub converged: bool,
    pub clipped_negatives: usize,
    pub eigenvalues_topd: Vec<f64>,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered: Option<bool>,
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Generate { kind } => generate(kind),
        Command::Corrupt(a) => corrupt(&a),
        Command::Solve(a) => solve(&a),
        Command::Phase(a) => phase(&a),
        Command::Eval(a) => eval(&a),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

fn generate(kind: GenerateKind) -> CliResult<i32> {
    let (points, out, meta) = match kind {
        GenerateKind::Sensors { t, d, box_half_width, seed, out } => {
            if d == 0 || t == 0 {
                return Err(CliError::Usage(format!("sensors need T >= 1 and d >= 1, got T = {t}, d = {d}")));
            }
            let meta = json!({"generator": "sensors", "T": t, "d": d, "box_half_width": box_half_width, "seed": seed});
            (gen_sensors(t, d, box_half_width, seed)?, out, meta)
        }
        GenerateKind::Spiral { t, seed, out } => {
            if t == 0 {
                return Err(CliError::Usage("spiral needs T >= 1".into()));
            }
            (gen_spiral(t, seed)?, out, json!({"generator": "spiral", "T": t, "seed": seed}))
        }
        GenerateKind::Globule { t, radius, seed, out } => {
            if t == 0 {
                return Err(CliError::Usage("globule needs T >= 1".into()));
            }
            let meta = json!({"generator": "globule", "T": t, "radius": radius, "seed": seed});
            (gen_globule(t, radius, seed)?, out, meta)
        }
    };
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_points(&out, &points)?;
    write_json(&out.with_extension("json"), &meta)?;
    Ok(0)
}

fn corrupt(a: &CorruptArgs) -> CliResult<i32> {
    let points = read_points(&a.points)?;
    let t = points.n_points();
    if a.m == 0 || a.m > t {
        return Err(CliError::Usage(format!("m must be in 1..={t}, got {}", a.m)));
    }
    if !(0.0..=1.0).contains(&a.alpha) {
        return Err(CliError::Usage(format!("alpha {} outside [0, 1]", a.alpha)));
    }
    if a.central_row >= a.m {
        return Err(CliError::Usage(format!("central row {} out of range for {} anchors", a.central_row, a.m)));
    }
    let split = seeded_split(t, a.m, a.seed)?;
    let blocks = split_blocks(&pairwise_edm(&points), &split)?;
    let spec = OutlierSpec {
        alpha: a.alpha,
        magnitude_scale: a.magnitude_scale,
        seed: outlier_seed(a.seed),
        protect_row: a.central_row,
    };
    let (f, s_star) = inject_outliers(&blocks.f, &spec)?;

    create_dir(&a.out_dir)?;
    write_matrix(&a.out_dir.join("E.csv"), &blocks.e)?;
    write_matrix(&a.out_dir.join("F.csv"), &f)?;
    write_matrix(&a.out_dir.join("S_star.csv"), &s_star)?;
    let split_file = SplitFile {
        anchors: split.anchors().to_vec(),
        targets: split.targets().to_vec(),
        central_row: a.central_row,
        seed: a.seed,
    };
    write_json(&a.out_dir.join("split.json"), &split_file)?;
    Ok(0)
}

fn solve(a: &SolveArgs) -> CliResult<i32> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let split = match &a.split {
        Some(p) => {
            let s: SplitFile = read_json(p)?;
            cfg.central_row_k = s.central_row;
            Some((AnchorSplit::with_targets(s.anchors, s.targets)?, p))
        }
        None => None,
    };
    a.solver.apply(&mut cfg);
    let solver = cfg.solver();

    let e = read_matrix(&a.e)?;
    let f = read_matrix(&a.f)?;
    if e.nrows() != e.ncols() || e.nrows() != f.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "E is {}x{} and F is {}x{}; E must be square with one row per row of F",
            e.nrows(),
            e.ncols(),
            f.nrows(),
            f.ncols()
        ))
        .into());
    }
    if let Some((s, path)) = &split {
        if s.n_anchors() != e.nrows() || s.n_targets() != f.ncols() {
            return Err(CliError::format(
                path,
                format!(
                    "split has {} anchors and {} targets but F is {}x{}",
                    s.n_anchors(),
                    s.n_targets(),
                    f.nrows(),
                    f.ncols()
                ),
            ));
        }
    }

    let start = Instant::now();
    let result = reconstruct_with(&e, &f, &solver, |p| {
        if a.verbose {
            eprintln!("iter {} rel_err {:.3e} xi {:.3e} support {}", p.iteration, p.rel_err, p.xi, p.support);
        }
    })?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;

    let points = match &split {
        Some((s, _)) => result.points_hat.from_split_order(s)?,
        None => result.points_hat.clone(),
    };
    let (rmse_val, recovered) = match &a.truth {
        Some(p) => {
            let truth = read_points(p)?;
            let r = eval_rmse(&points, &truth)?;
            (Some(r), Some(r <= rodeodb_core::experiments::RECOVERY_RMSE))
        }
        None => (None, None),
    };

    create_dir(&a.out_dir)?;
    write_points(&a.out_dir.join("points_hat.csv"), &points)?;
    let report = SolveReport {
        v: REPORT_VERSION,
        iterations: result.dbap.iterations,
        stop_reason: result.dbap.stop_reason,
        final_rel_err: result.dbap.final_rel_err,
        converged: result.dbap.converged,
        clipped_negatives: result.clipped_negatives,
        eigenvalues_topd: result.eigenvalues_topd.iter().copied().collect(),
        wall_time_ms,
        rmse: rmse_val,
        recovered,
    };
    write_json(&a.out_dir.join("report.json"), &report)?;
    Ok(if report.converged { 0 } else { 1 })
}

fn eval_rmse(estimate: &PointConfiguration, truth: &PointConfiguration) -> CliResult<f64> {
    if estimate.n_points() != truth.n_points() || estimate.dim() != truth.dim() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} points in {} dimensions, truth has {} points in {}",
            estimate.n_points(),
            estimate.dim(),
            truth.n_points(),
            truth.dim()
        ))
        .into());
    }
    Ok(rmse(estimate, truth)?)
}

fn eval(a: &EvalArgs) -> CliResult<i32> {
    let truth = read_points(&a.truth)?;
    let estimate = read_points(&a.estimate)?;
    let r = eval_rmse(&estimate, &truth)?;
    println!("{}", json!({"rmse": r, "recovered": r <= rodeodb_core::experiments::RECOVERY_RMSE}));
    Ok(0)
}

fn phase(a: &PhaseArgs) -> CliResult<i32> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    a.solver.apply(&mut cfg);
    if let Some(s) = a.master_seed {
        cfg.master_seed = s;
    }
    if let Some(n) = a.trials {
        cfg.trials = n;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if let Some(dir) = &a.out_dir {
        cfg.out_dir = Some(dir.clone());
    }
    cfg.validate()?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    create_dir(&out_dir)?;

    let grid = cfg.grid()?;
    let solver = cfg.solver();
    let mut log = ResultsLog::create(&out_dir.join("results.jsonl"))?;
    let trials = grid.trials;
    let keep_timing = cfg.log_timing;

    // Workers finish out of order; one writer restores (cell, trial) order so
    // the log is identical across runs and worker counts.
    let (tx, rx) = mpsc::channel::<TrialRecord>();
    let (run, written) = std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> CliResult<Vec<TrialRecord>> {
            let mut pending = BTreeMap::new();
            let mut next = 0;
            let mut done = Vec::new();
            for rec in rx {
                pending.insert(rec.cell * trials + rec.trial, rec);
                while let Some(r) = pending.remove(&next) {
                    log.append(&r)?;
                    done.push(r);
                    next += 1;
                }
            }
            for r in pending.into_values() {
                log.append(&r)?;
                done.push(r);
            }
            Ok(done)
        });
        let run = run_phase_grid_streaming(&grid, &solver, |mut r| {
            if !keep_timing {
                r.wall_time_ms = None;
            }
            let _ = tx.send(r);
        });
        drop(tx);
        (run, writer.join().expect("results writer panicked"))
    });
    run?;
    let records = written?;

    let cells = recovery_rates(&records);
    let title = format!("{} T={} recovery rate", grid.source.label(), grid.source.n_points());
    let svg_path = out_dir.join("phase_plot.svg");
    fs::write(&svg_path, phase_heatmap(&cells, &title)).map_err(|e| CliError::io(&svg_path, e))?;

    let failed = records.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{}",
        json!({
            "records": records.len(),
            "failed": failed,
            "cells": cells.iter().map(|c| json!({"m": c.m, "alpha": c.alpha, "recovered": c.recovered, "trials": c.trials, "rate": c.rate})).collect::<Vec<_>>(),
        })
    );
    if !records.is_empty() && failed == records.len() {
        eprintln!(
            "{}",
            json!({"error": "all_trials_failed", "message": "every trial returned an error", "exit_code": 1})
        );
        return Ok(1);
    }
    Ok(0)
}
