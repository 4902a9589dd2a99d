//! End-to-end reconstruction: dual-basis outlier removal, Nyström completion
//! of the target–target Gram block, and spectral embedding.

use serde::{Deserialize, Serialize};

use crate::dbap::{dbap_run_with, DbapReport, Progress, SolverConfig};
use crate::dual_basis::{anchor_gram_a, DualBasisContext};
use crate::error::{Error, Result};
use crate::geometry::{GramBlocks, PointConfiguration};
use crate::linalg::{sym_eigen_desc, symmetrize};
use crate::{Matrix, Vector};

/// Eigenvalues of `A` below this fraction of the largest magnitude are
/// treated as zero when forming `A†`.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// Anchors first, then targets, in the order of the input blocks.
    pub points_hat: PointConfiguration,
    pub gram_hat: GramBlocks,
    pub dbap: DbapReport,
    pub eigenvalues_topd: Vector,
    pub clipped_negatives: usize,
}

/// `Ĉ = B̂ᵀ A† B̂`, symmetrised.
///
/// Fails when `A` has fewer than `rank_d` eigenvalues above the cutoff, i.e.
/// the anchors do not span the embedding space.
pub fn nystrom_extend(a: &Matrix, b_hat: &Matrix, rank_d: usize) -> Result<Matrix> {
    if a.nrows() != a.ncols() || a.nrows() != b_hat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b_hat.nrows(),
            b_hat.ncols()
        )));
    }
    let (values, vectors) = sym_eigen_desc(a);
    let largest = values.amax();
    let kept: Vec<usize> =
        (0..values.len()).filter(|&i| largest > 0.0 && values[i].abs() > PINV_RELATIVE_CUTOFF * largest).collect();
    if kept.len() < rank_d {
        return Err(Error::DegenerateAnchors { rank: kept.len(), dim: rank_d });
    }
    let basis = vectors.select_columns(&kept);
    // Ĉ = (VᵀB̂)ᵀ Λ⁻¹ (VᵀB̂) over the kept eigenpairs
    let proj = basis.transpose() * b_hat;
    let mut scaled = proj.clone();
    for (row, &i) in kept.iter().enumerate() {
        scaled.row_mut(row).scale_mut(1.0 / values[i]);
    }
    let mut c = proj.transpose() * scaled;
    symmetrize(&mut c);
    Ok(c)
}

/// `X̂ = [[A, B̂], [B̂ᵀ, Ĉ]]`.
pub fn assemble_gram(a: &Matrix, b_hat: &Matrix, c_hat: &Matrix) -> Result<Matrix> {
    let (m, n) = b_hat.shape();
    if a.shape() != (m, m) || c_hat.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {m}x{n}, C is {}x{}",
            a.nrows(),
            a.ncols(),
            c_hat.nrows(),
            c_hat.ncols()
        )));
    }
    let t = m + n;
    let mut x = Matrix::zeros(t, t);
    x.view_mut((0, 0), (m, m)).copy_from(a);
    x.view_mut((0, m), (m, n)).copy_from(b_hat);
    x.view_mut((m, 0), (n, m)).copy_from(&b_hat.transpose());
    x.view_mut((m, m), (n, n)).copy_from(c_hat);
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub points: PointConfiguration,
    /// Top-`d` eigenvalues after clipping negatives to zero.
    pub eigenvalues_topd: Vector,
    pub clipped_negatives: usize,
}

/// `P̂ = Σ_d^{1/2} U_dᵀ` from the top-`d` eigenpairs of `X̂`, with negative
/// eigenvalues among the top `d` clipped to zero.
pub fn embed_points(x_hat: &Matrix, d: usize) -> Result<Embedding> {
    let t = x_hat.nrows();
    if x_hat.ncols() != t {
        return Err(Error::DimensionMismatch(format!("X is {}x{}, expected square", t, x_hat.ncols())));
    }
    if d == 0 || d > t {
        return Err(Error::InvalidInput(format!("cannot embed {t} points in {d} dimensions")));
    }
    let (values, vectors) = sym_eigen_desc(x_hat);
    let mut top = Vector::zeros(d);
    let mut clipped = 0;
    for i in 0..d {
        if values[i] < 0.0 {
            clipped += 1;
        } else {
            top[i] = values[i];
        }
    }
    let mut coords = vectors.columns(0, d).transpose();
    for (i, mut row) in coords.row_iter_mut().enumerate() {
        row *= top[i].sqrt();
    }
    Ok(Embedding { points: PointConfiguration::new(coords)?, eigenvalues_topd: top, clipped_negatives: clipped })
}

pub fn reconstruct(e: &Matrix, f: &Matrix, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    reconstruct_with(e, f, cfg, |_| {})
}

/// [`reconstruct`] with a per-iteration progress observer for the solver.
pub fn reconstruct_with(
    e: &Matrix,
    f: &Matrix,
    cfg: &SolverConfig,
    observe: impl FnMut(&Progress),
) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let a = anchor_gram_a(e);
    let ctx = DualBasisContext::new(e.clone(), f, cfg.central_row_k)?;
    let report = dbap_run_with(f, &ctx, cfg, observe)?;
    let c_hat = nystrom_extend(&a, &report.b_hat, cfg.rank_d)?;
    let x_hat = assemble_gram(&a, &report.b_hat, &c_hat)?;
    let emb = embed_points(&x_hat, cfg.rank_d)?;
    Ok(ReconstructionResult {
        points_hat: emb.points,
        gram_hat: GramBlocks { a, b: report.b_hat.clone(), c: Some(c_hat) },
        dbap: report,
        eigenvalues_topd: emb.eigenvalues_topd,
        clipped_negatives: emb.clipped_negatives,
    })
}
