//! Dual-basis alternating projections.
//!
//! The loop alternates between distance space, where sparse outliers are
//! detected by hard thresholding the residual `F − 𝓐(B)` against a
//! geometrically decaying threshold, and Gram space, where `𝓑(F − S)` is
//! projected onto the tangent space of the rank-`d` manifold at the current
//! iterate and truncated back to rank `d`.
//!
//! ```text
//! ξ⁰ = scale · max|F|            S⁰ = 𝒯_ξ⁰(F)       B⁰ = 𝓗_d(𝓑(F − S⁰))
//! Fᵏ = 𝓐(Bᵏ⁻¹)   ξᵏ = γᵏξ⁰   Sᵏ = 𝒯_ξᵏ(F − Fᵏ)   Bᵏ = 𝓗_d 𝒫_Tᵏ(𝓑(F − Sᵏ))
//! ```
//!
//! The central anchor row is never thresholded.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dual_basis::DualBasisContext;
use crate::error::{Error, Result};
use crate::linalg::{orthonormality_deviation, thin_svd};
use crate::{Matrix, Vector};

const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rank_d: usize,
    /// `ξ⁰ = xi0_scale · max|F|` over the non-central rows.
    pub xi0_scale: f64,
    /// Threshold decay per iteration, in `(0, 1)`.
    pub gamma: f64,
    /// Stop once `‖F − Fᵏ − Sᵏ‖_F / ‖F‖_F` is at most this.
    pub conv_tol: f64,
    /// An iteration is mask-stable when the Jaccard distance between
    /// consecutive outlier supports is below `mask_tol` and every unflagged
    /// residual is at most `mask_tol · ξᵏ`.
    pub mask_tol: f64,
    /// Consecutive mask-stable iterations needed to stop.
    pub patience: usize,
    pub max_iter: usize,
    pub central_row_k: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rank_d: 2,
            xi0_scale: 1.2,
            gamma: 0.95,
            conv_tol: 1e-14,
            mask_tol: 1e-3,
            patience: 3,
            max_iter: 2000,
            central_row_k: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_rank(rank_d: usize) -> Self {
        Self { rank_d, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.rank_d == 0 {
            return bad("rank_d must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.xi0_scale > 0.0 && self.xi0_scale.is_finite()) {
            return bad(format!("xi0_scale must be positive, got {}", self.xi0_scale));
        }
        if self.conv_tol.is_nan() || self.mask_tol.is_nan() || self.conv_tol <= 0.0 || self.mask_tol <= 0.0 {
            return bad("tolerances must be positive".into());
        }
        if self.patience == 0 || self.max_iter == 0 {
            return bad("patience and max_iter must be positive".into());
        }
        Ok(())
    }
}

/// Rank-`d` matrix `U diag(σ) Vᵀ` with orthonormal `U` (`m × d`) and `V` (`n × d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRank {
    pub u: Matrix,
    pub sigma: Vector,
    pub v: Matrix,
}

impl LowRank {
    pub fn zeros(m: usize, n: usize, d: usize) -> Self {
        let mut u = Matrix::zeros(m, d);
        let mut v = Matrix::zeros(n, d);
        for i in 0..d.min(m) {
            u[(i, i)] = 1.0;
        }
        for i in 0..d.min(n) {
            v[(i, i)] = 1.0;
        }
        Self { u, sigma: Vector::zeros(d), v }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.iter().all(|&s| s == 0.0)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.sigma[j];
        }
        us * self.v.transpose()
    }
}

/// `[𝒯_ξ(Z)]ᵢⱼ = Zᵢⱼ` if `|Zᵢⱼ| > ξ`, else 0. The protected row is zeroed.
pub fn hard_threshold(z: &Matrix, xi: f64, protected_row: Option<usize>) -> Matrix {
    let mut out = z.map(|x| if x.abs() > xi { x } else { 0.0 });
    if let Some(k) = protected_row {
        if k < out.nrows() {
            out.row_mut(k).fill(0.0);
        }
    }
    out
}

/// Best rank-`d` approximation `𝓗_d(M)` via truncated SVD.
///
/// When `d` exceeds the smaller dimension the result is padded with zero
/// singular values and arbitrary orthonormal complements, so callers always
/// receive exactly `d` factors.
pub fn truncated_rank_d(m: &Matrix, d: usize) -> LowRank {
    let svd = thin_svd(m);
    let k = svd.sigma.len().min(d);
    let mut out = LowRank::zeros(m.nrows(), m.ncols(), d);
    out.u.columns_mut(0, k).copy_from(&svd.u.columns(0, k));
    out.v.columns_mut(0, k).copy_from(&svd.v.columns(0, k));
    out.sigma.rows_mut(0, k).copy_from(&svd.sigma.rows(0, k));
    out
}

/// Tangent-space projection `𝒫_T(M) = UUᵀM + MVVᵀ − UUᵀMVVᵀ` kept in the
/// factored form `[U Q₁] · core · [V Q₂]ᵀ`, where `core` is `2d × 2d`.
#[derive(Debug, Clone)]
pub struct TangentProjection {
    pub left: Matrix,
    pub core: Matrix,
    pub right: Matrix,
}

impl TangentProjection {
    pub fn to_dense(&self) -> Matrix {
        &self.left * &self.core * self.right.transpose()
    }

    /// `𝓗_d` of the projection at `O((m+n)d² + d³)` cost.
    pub fn truncate(&self, d: usize) -> LowRank {
        let svd = thin_svd(&self.core);
        let k = d.min(svd.sigma.len());
        let u = &self.left * svd.u.columns(0, k);
        let v = &self.right * svd.v.columns(0, k);
        let sigma = svd.sigma.rows(0, k).into_owned();
        let mut out = LowRank { u, sigma, v };
        normalize_signs(&mut out);
        out
    }
}

/// Sign convention shared with [`crate::linalg`]: largest-magnitude entry of
/// each left singular vector positive.
fn normalize_signs(lr: &mut LowRank) {
    for j in 0..lr.rank() {
        let s = crate::linalg::sign_of_dominant(lr.u.column(j).iter());
        if s < 0.0 {
            lr.u.column_mut(j).neg_mut();
            lr.v.column_mut(j).neg_mut();
        }
    }
}

/// Orthonormal complement block `Q` and coefficients `R = QᵀY` such that
/// `QR = (I − BBᵀ)Y` and `[B Q]` is orthonormal. Requires `rows ≥ 2d`.
///
/// The QR of `[B, Y]` is used rather than the QR of the projected `Y` alone:
/// when `(I − BBᵀ)Y` is rank deficient (typical near convergence), the extra
/// columns of a plain thin QR are not orthogonal to `B`.
fn complement_qr(basis: &Matrix, y_perp: &Matrix) -> (Matrix, Matrix) {
    let (rows, d) = basis.shape();
    let mut stacked = Matrix::zeros(rows, 2 * d);
    stacked.columns_mut(0, d).copy_from(basis);
    stacked.columns_mut(d, d).copy_from(y_perp);
    let q_full = stacked.qr().q();
    let mut q = q_full.columns(d, d).into_owned();
    // one pass of re-orthogonalisation against the basis
    let overlap = basis.transpose() * &q;
    q -= basis * overlap;
    for mut col in q.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let r = q.transpose() * y_perp;
    (q, r)
}

fn check_basis(m: &Matrix, u: &Matrix, v: &Matrix) -> Result<()> {
    if u.nrows() != m.nrows() || v.nrows() != m.ncols() || u.ncols() != v.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "M is {}x{}, U is {}x{}, V is {}x{}",
            m.nrows(),
            m.ncols(),
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    let dev = orthonormality_deviation(u).max(orthonormality_deviation(v));
    if dev > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    Ok(())
}

/// Factored tangent-space projection using two thin QR factorisations.
///
/// Needs `m ≥ 2d` and `n ≥ 2d`; otherwise the tangent space is the whole
/// space (or close to it) and [`tangent_project`] falls back to the dense
/// formula.
pub fn tangent_project_factored(m: &Matrix, u: &Matrix, v: &Matrix) -> Result<TangentProjection> {
    check_basis(m, u, v)?;
    let d = u.ncols();
    if m.nrows() < 2 * d || m.ncols() < 2 * d {
        return Err(Error::InvalidInput(format!(
            "factored tangent projection needs both sides ≥ 2d = {}, got {}x{}",
            2 * d,
            m.nrows(),
            m.ncols()
        )));
    }
    let mv = m * v; // m × d
    let mtu = m.transpose() * u; // n × d
    let core_uv = u.transpose() * &mv; // d × d
    let y1 = &mv - u * &core_uv;
    let y2 = &mtu - v * core_uv.transpose();
    let (q1, r1) = complement_qr(u, &y1);
    let (q2, r2) = complement_qr(v, &y2);

    let mut core = Matrix::zeros(2 * d, 2 * d);
    core.view_mut((0, 0), (d, d)).copy_from(&core_uv);
    core.view_mut((0, d), (d, d)).copy_from(&r2.transpose());
    core.view_mut((d, 0), (d, d)).copy_from(&r1);

    let mut left = Matrix::zeros(m.nrows(), 2 * d);
    left.columns_mut(0, d).copy_from(u);
    left.columns_mut(d, d).copy_from(&q1);
    let mut right = Matrix::zeros(m.ncols(), 2 * d);
    right.columns_mut(0, d).copy_from(v);
    right.columns_mut(d, d).copy_from(&q2);
    Ok(TangentProjection { left, core, right })
}

/// Dense `𝒫_T(M)`; routes through the factored form whenever it applies.
pub fn tangent_project(m: &Matrix, u: &Matrix, v: &Matrix) -> Result<Matrix> {
    check_basis(m, u, v)?;
    let d = u.ncols();
    if m.nrows() >= 2 * d && m.ncols() >= 2 * d {
        return Ok(tangent_project_factored(m, u, v)?.to_dense());
    }
    let uu_m = u * (u.transpose() * m);
    let m_vv = (m * v) * v.transpose();
    let uu_m_vv = u * ((u.transpose() * m * v) * v.transpose());
    Ok(uu_m + m_vv - uu_m_vv)
}

/// `𝓗_d 𝒫_T(M)` at the tangent space of `current`.
fn project_and_truncate(m: &Matrix, current: &LowRank, d: usize) -> Result<LowRank> {
    let (rows, cols) = m.shape();
    if rows >= 2 * d && cols >= 2 * d {
        Ok(tangent_project_factored(m, &current.u, &current.v)?.truncate(d))
    } else {
        Ok(truncated_rank_d(&tangent_project(m, &current.u, &current.v)?, d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaskStable,
    MaxIter,
}

/// Iterate of the solver; carried by [`Error::Diverged`].
#[derive(Debug, Clone)]
pub struct DbapState {
    pub b: LowRank,
    pub s: Matrix,
    pub xi: f64,
    pub iter: usize,
    pub rel_err_history: Vec<f64>,
}

/// Snapshot passed to the progress observer after every iteration.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub iteration: usize,
    pub rel_err: f64,
    pub xi: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbapReport {
    pub b_hat: Matrix,
    pub s_hat: Matrix,
    pub iterations: usize,
    pub final_rel_err: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Final rank-`d` factors of `b_hat`.
    #[serde(skip)]
    pub factors: Option<LowRank>,
}

/// Support of a sparse matrix as a set of column-major linear indices.
fn support(s: &Matrix) -> BTreeSet<usize> {
    s.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, _)| i).collect()
}

/// Largest `|r|` over entries where `s` is zero.
fn max_unflagged(residual: &Matrix, s: &Matrix) -> f64 {
    residual.iter().zip(s.iter()).filter(|(_, &sv)| sv == 0.0).fold(0.0, |acc, (&r, _)| acc.max(r.abs()))
}

/// Jaccard distance `|A Δ B| / |A ∪ B|`; `None` when both are empty.
fn jaccard_distance(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Option<f64> {
    let union = a.union(b).count();
    if union == 0 {
        return None;
    }
    let inter = a.intersection(b).count();
    Some((union - inter) as f64 / union as f64)
}

pub fn dbap_run(f: &Matrix, ctx: &DualBasisContext, cfg: &SolverConfig) -> Result<DbapReport> {
    dbap_run_with(f, ctx, cfg, |_| {})
}

/// [`dbap_run`] with an observer called once per iteration.
pub fn dbap_run_with(
    f: &Matrix,
    ctx: &DualBasisContext,
    cfg: &SolverConfig,
    mut observe: impl FnMut(&Progress),
) -> Result<DbapReport> {
    cfg.validate()?;
    let (m, n) = f.shape();
    let d = cfg.rank_d;
    if ctx.n_anchors() != m || ctx.n_targets() != n {
        return Err(Error::DimensionMismatch(format!(
            "F is {m}x{n}, context expects {}x{}",
            ctx.n_anchors(),
            ctx.n_targets()
        )));
    }
    if m < d || n < d {
        return Err(Error::InvalidConfig(format!("F is {m}x{n}, too small for rank {d}")));
    }
    if cfg.central_row_k != ctx.central_row() {
        return Err(Error::InvalidConfig(format!(
            "config central row {} differs from context central row {}",
            cfg.central_row_k,
            ctx.central_row()
        )));
    }
    if !crate::linalg::all_finite(f) {
        return Err(Error::InvalidInput("F contains non-finite entries".into()));
    }
    let k = ctx.central_row();

    let f_norm = f.norm();
    let xi0 = {
        let mut mx = 0.0_f64;
        for (i, row) in f.row_iter().enumerate() {
            if i != k {
                mx = mx.max(row.amax());
            }
        }
        cfg.xi0_scale * mx
    };

    let mut s = hard_threshold(f, xi0, Some(k));
    let mut work = f - &s;
    ctx.op_b_in_place(&mut work);
    let mut b = truncated_rank_d(&work, d);

    if f_norm == 0.0 {
        return Ok(DbapReport {
            b_hat: b.to_dense(),
            s_hat: s,
            iterations: 0,
            final_rel_err: 0.0,
            converged: true,
            stop_reason: StopReason::Tolerance,
            factors: Some(b),
        });
    }

    let mut history = Vec::new();
    let mut prev_support = support(&s);
    let mut stable_count = 0usize;
    let mut stop_reason = StopReason::MaxIter;
    let mut iterations = 0;
    let mut rel_err = f64::INFINITY;

    for iter in 1..=cfg.max_iter {
        iterations = iter;
        // Fᵏ = 𝓐(Bᵏ⁻¹); residual F − Fᵏ
        let mut residual = b.to_dense();
        ctx.op_a_in_place(&mut residual);
        residual = f - residual;

        let xi = xi0 * cfg.gamma.powi(iter as i32);
        s = hard_threshold(&residual, xi, Some(k));
        rel_err = (&residual - &s).norm() / f_norm;
        history.push(rel_err);

        work = f - &s;
        ctx.op_b_in_place(&mut work);
        b = if b.is_zero() { truncated_rank_d(&work, d) } else { project_and_truncate(&work, &b, d)? };

        if !b.sigma.iter().all(|x| x.is_finite()) || !crate::linalg::all_finite(&b.u) || !rel_err.is_finite() {
            return Err(Error::Diverged {
                iteration: iter,
                state: Box::new(DbapState { b, s, xi, iter, rel_err_history: history }),
            });
        }

        let supp = support(&s);
        observe(&Progress { iteration: iter, rel_err, xi, support: supp.len() });

        if rel_err <= cfg.conv_tol {
            stop_reason = StopReason::Tolerance;
            break;
        }
        // an unchanged support only counts once the unflagged residual sits far
        // below the threshold; otherwise small outliers may still be hiding
        // just under ξ and the support is merely between arrivals
        let separated = max_unflagged(&residual, &s) <= cfg.mask_tol * xi;
        match jaccard_distance(&prev_support, &supp) {
            Some(dist) if dist < cfg.mask_tol && separated => stable_count += 1,
            _ => stable_count = 0,
        }
        prev_support = supp;
        if stable_count >= cfg.patience {
            stop_reason = StopReason::MaskStable;
            break;
        }
    }

    Ok(DbapReport {
        b_hat: b.to_dense(),
        s_hat: s,
        iterations,
        final_rel_err: rel_err,
        converged: stop_reason != StopReason::MaxIter,
        stop_reason,
        factors: Some(b),
    })
}
