use std::path::{Path, PathBuf};
use std::sync::Arc;

use rodeodb_core::experiments::{gen_globule, load_protein, InstanceSource, PhaseGrid};
use rodeodb_core::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable that overrides [`RunConfig::workers`].
pub const WORKERS_ENV: &str = "RODEODB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Sensors,
    Spiral,
    /// Atoms from the PDB file at `pdb_path`.
    Protein,
    /// Synthetic 3-D ball standing in for a protein.
    Globule,
}

/// Flat run configuration: solver settings, experiment grid, seed and paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rank_d: usize,
    pub xi0_scale: f64,
    pub gamma: f64,
    pub conv_tol: f64,
    pub mask_tol: f64,
    pub patience: usize,
    pub max_iter: usize,
    pub central_row_k: usize,

    pub experiment: Experiment,
    #[serde(rename = "T")]
    pub t: usize,
    /// Ambient dimension of sensor clouds; other experiments fix their own.
    pub d: usize,
    pub box_half_width: f64,
    pub globule_radius: f64,
    pub pdb_path: Option<PathBuf>,
    pub m_values: Vec<usize>,
    pub alpha_values: Vec<f64>,
    pub trials: usize,
    pub magnitude_scale: f64,
    pub with_diagnostics: bool,
    /// Keep per-trial wall time in the results log (makes it run-dependent).
    pub log_timing: bool,

    pub master_seed: u64,
    /// Worker threads; `0` picks one per core.
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            rank_d: s.rank_d,
            xi0_scale: s.xi0_scale,
            gamma: s.gamma,
            conv_tol: s.conv_tol,
            mask_tol: s.mask_tol,
            patience: s.patience,
            max_iter: s.max_iter,
            central_row_k: s.central_row_k,
            experiment: Experiment::Sensors,
            t: 500,
            d: 2,
            box_half_width: 100.0,
            globule_radius: 20.0,
            pdb_path: None,
            m_values: vec![40],
            alpha_values: vec![0.1],
            trials: 10,
            magnitude_scale: 3.0,
            with_diagnostics: false,
            log_timing: false,
            master_seed: 0,
            workers: 0,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|msg| CliError::format(path, msg))
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            rank_d: self.rank_d,
            xi0_scale: self.xi0_scale,
            gamma: self.gamma,
            conv_tol: self.conv_tol,
            mask_tol: self.mask_tol,
            patience: self.patience,
            max_iter: self.max_iter,
            central_row_k: self.central_row_k,
        }
    }

    /// Applies the worker-count environment override, if set.
    pub fn apply_env(&mut self) -> CliResult<()> {
        if let Ok(raw) = std::env::var(WORKERS_ENV) {
            self.workers = raw
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a non-negative integer, got {raw:?}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        self.solver().validate()?;
        if self.m_values.is_empty() || self.alpha_values.is_empty() {
            return Err(CliError::Usage("m_values and alpha_values must be nonempty".into()));
        }
        if let Some(a) = self.alpha_values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(CliError::Usage(format!("alpha {a} outside [0, 1]")));
        }
        if self.m_values.contains(&0) {
            return Err(CliError::Usage("anchor counts must be positive".into()));
        }
        match self.experiment {
            Experiment::Sensors if self.d == 0 || self.t < self.d + 2 => {
                Err(CliError::Usage(format!("sensors need d >= 1 and T >= d + 2, got d = {}, T = {}", self.d, self.t)))
            }
            Experiment::Spiral if self.t < 3 => Err(CliError::Usage(format!("spiral needs T >= 3, got {}", self.t))),
            Experiment::Protein if self.pdb_path.is_none() => {
                Err(CliError::Usage("protein experiment needs pdb_path".into()))
            }
            Experiment::Globule if self.t < 5 => Err(CliError::Usage(format!("globule needs T >= 5, got {}", self.t))),
            _ => Ok(()),
        }
    }

    pub fn source(&self) -> CliResult<InstanceSource> {
        Ok(match self.experiment {
            Experiment::Sensors => {
                InstanceSource::Sensors { t: self.t, d: self.d, box_half_width: self.box_half_width }
            }
            Experiment::Spiral => InstanceSource::Spiral { t: self.t },
            Experiment::Protein => {
                let path = self.pdb_path.as_deref().ok_or_else(|| CliError::Usage("pdb_path missing".into()))?;
                InstanceSource::Fixed { label: "protein".into(), points: Arc::new(load_protein(path)?) }
            }
            Experiment::Globule => InstanceSource::Fixed {
                label: "globule".into(),
                points: Arc::new(gen_globule(self.t, self.globule_radius, self.master_seed)?),
            },
        })
    }

    pub fn grid(&self) -> CliResult<PhaseGrid> {
        let mut grid = PhaseGrid::new(self.source()?, self.m_values.clone(), self.alpha_values.clone(), self.trials);
        grid.magnitude_scale = self.magnitude_scale;
        grid.master_seed = self.master_seed;
        grid.workers = self.workers;
        grid.with_diagnostics = self.with_diagnostics;
        Ok(grid)
    }
}
