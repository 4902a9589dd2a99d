//! Seeded instances shared by the benchmarks.

use rodeodb_core::experiments::{derive_seed, gen_sensors, inject_outliers, seeded_split, OutlierSpec};
use rodeodb_core::geometry::{pairwise_edm, split_blocks};
use rodeodb_core::{DualBasisContext, Matrix, SolverConfig};

/// Corrupted sensor instance with `m` anchors and `n` targets in `d` dimensions.
pub struct Instance {
    pub e: Matrix,
    pub f: Matrix,
    pub ctx: DualBasisContext,
}

pub fn sensor_instance(m: usize, n: usize, d: usize, alpha: f64, seed: u64) -> Instance {
    let t = m + n;
    let points = gen_sensors(t, d, 100.0, derive_seed(seed, 0, 0)).expect("valid sensor parameters");
    let split = seeded_split(t, m, seed).expect("m <= T");
    let blocks = split_blocks(&pairwise_edm(&points), &split).expect("square EDM");
    let (f, _) = inject_outliers(&blocks.f, &OutlierSpec::new(alpha, derive_seed(seed, 2, 0))).expect("alpha in range");
    let ctx = DualBasisContext::new(blocks.e.clone(), &f, 0).expect("consistent blocks");
    Instance { e: blocks.e, f, ctx }
}

/// Solver settings that always run exactly `iters` iterations.
pub fn fixed_iterations(d: usize, iters: usize) -> SolverConfig {
    SolverConfig { conv_tol: f64::MIN_POSITIVE, patience: usize::MAX, max_iter: iters, ..SolverConfig::with_rank(d) }
}

/// `(M, U, V)` with orthonormal `U` (`m × d`) and `V` (`n × d`) taken from
/// the rank-`d` factors of `𝓑(F)`.
pub fn tangent_inputs(inst: &Instance, d: usize) -> (Matrix, Matrix, Matrix) {
    let b = inst.ctx.op_b(&inst.f).expect("shapes match");
    let low = rodeodb_core::dbap::truncated_rank_d(&b, d);
    (b, low.u, low.v)
}
