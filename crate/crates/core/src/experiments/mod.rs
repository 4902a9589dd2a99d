//! Synthetic and file-based instances, outlier injection and seeded trial
//! grids.

mod generate;
mod outliers;
mod pdb;
mod trials;

pub use generate::{gen_globule, gen_sensors, gen_spiral, spiral_curve, SPIRAL_DIM};
pub use outliers::{inject_outliers, OutlierSpec};
pub use pdb::{load_protein, parse_pdb};
pub use trials::{
    derive_seed, outlier_seed, recovery_rates, run_phase_grid, run_phase_grid_streaming, run_trial, sample_anchors,
    seeded_split, CellSummary, InstanceSource, PhaseGrid, TrialRecord, RECOVERY_RMSE, TRIAL_RECORD_VERSION,
};
