//! Computable instance characteristics: singular-vector incoherence, row and
//! column sparsity of the outlier matrix, condition numbers and the norm of
//! the anchor-centring operator.
//!
//! These are reported alongside trial results; nothing here gates the solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AnchorSplit, CenteringVector, PointConfiguration};
use crate::linalg::{spectral_norm, thin_svd};
use crate::Matrix;

/// Relative singular-value cutoff used to decide numerical rank.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incoherence {
    pub mu1: f64,
    pub mu2: f64,
    /// Set when `r` exceeds the numerical rank of the input; the values are
    /// still computed over the top `r` singular vectors.
    pub rank_deficient: bool,
}

/// `μ₁ = (m/r) maxᵢ ‖U_rᵀeᵢ‖²`, `μ₂ = (n/r) maxⱼ ‖V_rᵀeⱼ‖²`.
pub fn incoherence(m: &Matrix, r: usize) -> Result<Incoherence> {
    let (rows, cols) = m.shape();
    if r == 0 || r > rows.min(cols) {
        return Err(Error::InvalidInput(format!("rank {r} out of range for a {rows}x{cols} matrix")));
    }
    if m.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidInput("incoherence of the zero matrix is undefined".into()));
    }
    let svd = thin_svd(m);
    let numerical_rank = svd.sigma.iter().filter(|&&s| s > RANK_CUTOFF * svd.sigma[0]).count();
    let max_row_energy =
        |basis: &Matrix| basis.columns(0, r).row_iter().map(|row| row.norm_squared()).fold(0.0_f64, f64::max);
    Ok(Incoherence {
        mu1: rows as f64 / r as f64 * max_row_energy(&svd.u),
        mu2: cols as f64 / r as f64 * max_row_energy(&svd.v),
        rank_deficient: numerical_rank < r,
    })
}

/// `(maxᵢ nnz(row i)/n, maxⱼ nnz(col j)/m)`.
pub fn alpha_sparsity(s: &Matrix) -> (f64, f64) {
    let (m, n) = s.shape();
    if m == 0 || n == 0 {
        return (0.0, 0.0);
    }
    let row_max = s.row_iter().map(|r| r.iter().filter(|&&x| x != 0.0).count()).max().unwrap_or(0);
    let col_max = s.column_iter().map(|c| c.iter().filter(|&&x| x != 0.0).count()).max().unwrap_or(0);
    (row_max as f64 / n as f64, col_max as f64 / m as f64)
}

/// Spectral norm of `I − 1sᵀ` for the anchor-uniform `s` with `m` of `T`
/// anchors, computed numerically. Equals `√(T/m)`.
pub fn centering_norm(t: usize, m: usize) -> Result<f64> {
    if m == 0 || m > t {
        return Err(Error::InvalidInput(format!("need 1 ≤ m ≤ T, got m = {m}, T = {t}")));
    }
    let split = AnchorSplit::contiguous(m, t)?;
    Ok(spectral_norm(&CenteringVector::anchor_uniform(&split).centering_matrix()))
}

/// `σ₁/σ_r` over the numerically nonzero singular values.
fn condition_number(sigma: &[f64]) -> f64 {
    let top = sigma.first().copied().unwrap_or(0.0);
    let smallest = sigma.iter().copied().rfind(|&s| s > RANK_CUTOFF * top);
    match smallest {
        Some(s) if s > 0.0 => top / s,
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceDiagnostics {
    /// Incoherence of the clean anchor–target block at rank `d + 2`.
    pub mu1: f64,
    pub mu2: f64,
    pub alpha_row: f64,
    pub alpha_col: f64,
    pub kappa_d: f64,
    pub kappa_x: f64,
    pub j_norm: f64,
}

impl InstanceDiagnostics {
    /// Diagnostics for a ground-truth configuration, its split, the clean
    /// anchor–target block and the injected outliers.
    ///
    /// The spectra of the full EDM and Gram matrix are obtained from the
    /// `(d+2)`-term factorisation `D = LᵀR` and from `P` directly, so the cost
    /// stays `O(T d²)`.
    pub fn compute(truth: &PointConfiguration, split: &AnchorSplit, f_clean: &Matrix, s_star: &Matrix) -> Result<Self> {
        let d = truth.dim();
        let t = truth.n_points();
        let centered = crate::geometry::center_anchors(truth, split);
        let p = centered.coords();

        let r = (d + 2).min(f_clean.nrows()).min(f_clean.ncols());
        let inc = incoherence(f_clean, r)?;
        let (alpha_row, alpha_col) = alpha_sparsity(s_star);

        // D = g1ᵀ + 1gᵀ − 2PᵀP = [g, 1, P̃ᵀ][1, g, −2P̃ᵀ]ᵀ
        let g: Vec<f64> = p.column_iter().map(|c| c.norm_squared()).collect();
        let mut left = Matrix::zeros(t, d + 2);
        let mut right = Matrix::zeros(t, d + 2);
        for i in 0..t {
            left[(i, 0)] = g[i];
            left[(i, 1)] = 1.0;
            right[(i, 0)] = 1.0;
            right[(i, 1)] = g[i];
            for k in 0..d {
                left[(i, 2 + k)] = p[(k, i)];
                right[(i, 2 + k)] = -2.0 * p[(k, i)];
            }
        }
        let ql = left.qr();
        let qr = right.qr();
        let small = ql.r() * qr.r().transpose();
        let sigma_d = thin_svd(&small).sigma;
        let sigma_p = thin_svd(p).sigma;
        let sigma_x: Vec<f64> = sigma_p.iter().map(|s| s * s).collect();

        Ok(Self {
            mu1: inc.mu1,
            mu2: inc.mu2,
            alpha_row,
            alpha_col,
            kappa_d: condition_number(sigma_d.as_slice()),
            kappa_x: condition_number(&sigma_x),
            j_norm: centering_norm(t, split.n_anchors())?,
        })
    }
}
