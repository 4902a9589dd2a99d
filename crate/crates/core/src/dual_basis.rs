//! Closed-form maps between anchor distance blocks and anchor-centred Gram
//! blocks.
//!
//! With the centroid of the anchors placed at the origin, the anchor Gram
//! block `A` depends only on `E`, and the anchor–target Gram block `B`
//! depends only on `E` and `F`:
//!
//! ```text
//! 𝓑(F) = −½ (F − (1/m)·1ₘ1ₘᵀF − (1/m)·E1ₘ1ₙᵀ + mean(E)·1ₘ1ₙᵀ)
//! 𝓐(B) = 1ₘF_k − 2(B − 1ₘB_k) + (1/m)(E1ₘ − (E1ₘ)_k·1ₘ)1ₙᵀ
//! ```
//!
//! where `F_k` is the row of `F` belonging to the central anchor `k`, whose
//! measurements are assumed exact. For clean data `𝓐(𝓑(F)) = F`.

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// `A = −½ (E − (1/m)11ᵀE − (1/m)E11ᵀ + mean(E)·11ᵀ)`.
pub fn anchor_gram_a(e: &Matrix) -> Matrix {
    let m = e.nrows();
    if m == 0 {
        return Matrix::zeros(0, 0);
    }
    let inv_m = 1.0 / m as f64;
    let row_sums = e.column_sum();
    let col_sums = e.row_sum();
    let mean = e.mean();
    let mut a = Matrix::from_fn(m, m, |i, j| -0.5 * (e[(i, j)] - inv_m * col_sums[j] - inv_m * row_sums[i] + mean));
    crate::linalg::symmetrize(&mut a);
    a
}

/// Precomputed quantities shared by `𝓐` and `𝓑` for one instance.
///
/// `E1ₘ`, `mean(E)` and the central row are computed once, so each operator
/// application is `O(mn)`.
#[derive(Debug, Clone)]
pub struct DualBasisContext {
    e: Matrix,
    central_row: usize,
    f_central: Vector,
    e_row_sums: Vector,
    e_mean: f64,
}

impl DualBasisContext {
    /// Captures row `central_row` of the observed `f` as the exact central row.
    pub fn new(e: Matrix, f: &Matrix, central_row: usize) -> Result<Self> {
        let m = e.nrows();
        if e.ncols() != m {
            return Err(Error::DimensionMismatch(format!("E must be square, got {}x{}", m, e.ncols())));
        }
        if f.nrows() != m {
            return Err(Error::DimensionMismatch(format!("E is {m}x{m} but F has {} rows", f.nrows())));
        }
        if central_row >= m {
            return Err(Error::InvalidConfig(format!("central row {central_row} out of range for {m} anchors")));
        }
        check_sub_edm(&e)?;
        let f_central = f.row(central_row).transpose();
        let e_row_sums = e.column_sum();
        let e_mean = e.mean();
        Ok(Self { e, central_row, f_central, e_row_sums, e_mean })
    }

    pub fn e(&self) -> &Matrix {
        &self.e
    }

    pub fn central_row(&self) -> usize {
        self.central_row
    }

    pub fn f_central(&self) -> &Vector {
        &self.f_central
    }

    pub fn n_anchors(&self) -> usize {
        self.e.nrows()
    }

    pub fn n_targets(&self) -> usize {
        self.f_central.len()
    }

    pub fn anchor_gram(&self) -> Matrix {
        anchor_gram_a(&self.e)
    }

    fn check_shape(&self, x: &Matrix, name: &str) -> Result<()> {
        if x.nrows() != self.n_anchors() || x.ncols() != self.n_targets() {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, context expects {}x{}",
                x.nrows(),
                x.ncols(),
                self.n_anchors(),
                self.n_targets()
            )));
        }
        Ok(())
    }

    /// Distance block to Gram block.
    pub fn op_b(&self, f: &Matrix) -> Result<Matrix> {
        self.check_shape(f, "F")?;
        let mut out = f.clone();
        self.op_b_in_place(&mut out);
        Ok(out)
    }

    /// Gram block to distance block. Row `central_row` of the result equals
    /// the captured central row exactly.
    pub fn op_a(&self, b: &Matrix) -> Result<Matrix> {
        self.check_shape(b, "B")?;
        let mut out = b.clone();
        self.op_a_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn op_b_in_place(&self, f: &mut Matrix) {
        let m = f.nrows();
        let inv_m = 1.0 / m as f64;
        let row_term: Vector = self.e_row_sums.map(|s| inv_m * s - self.e_mean);
        for mut col in f.column_iter_mut() {
            let col_mean = col.sum() * inv_m;
            for (x, r) in col.iter_mut().zip(row_term.iter()) {
                *x = -0.5 * (*x - col_mean - r);
            }
        }
    }

    pub(crate) fn op_a_in_place(&self, b: &mut Matrix) {
        let m = b.nrows();
        let k = self.central_row;
        let inv_m = 1.0 / m as f64;
        let es_k = self.e_row_sums[k];
        let row_term: Vector = self.e_row_sums.map(|s| inv_m * (s - es_k));
        for (j, mut col) in b.column_iter_mut().enumerate() {
            let b_kj = col[k];
            let f_kj = self.f_central[j];
            for (i, x) in col.iter_mut().enumerate() {
                *x = if i == k { f_kj } else { f_kj - 2.0 * (*x - b_kj) + row_term[i] };
            }
        }
    }
}

fn check_sub_edm(e: &Matrix) -> Result<()> {
    let m = e.nrows();
    let scale = e.amax().max(f64::MIN_POSITIVE);
    for i in 0..m {
        if e[(i, i)] != 0.0 {
            return Err(Error::InvalidInput(format!("anchor EDM has nonzero diagonal entry at {i}")));
        }
        for j in 0..i {
            let (a, b) = (e[(i, j)], e[(j, i)]);
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidInput(format!("anchor EDM entry ({i},{j}) = {a} is not a squared distance")));
            }
            if (a - b).abs() > 1e-12 * scale {
                return Err(Error::InvalidInput(format!("anchor EDM is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}
