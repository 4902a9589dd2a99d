//! Small dense linear-algebra helpers with a deterministic sign convention.
//!
//! Every singular vector or eigenvector returned from this module is scaled
//! by ±1 so that its largest-magnitude entry is positive. For SVD pairs the
//! left and right vectors are flipped together, so `U Σ Vᵀ` is unchanged.

use crate::{Matrix, Vector};

/// Thin SVD with singular values sorted in nonincreasing order.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: Matrix,
    pub sigma: Vector,
    pub v: Matrix,
}

/// Returns +1 or -1 such that `sign * col` has a positive largest-magnitude entry.
/// Ties between entries of equal magnitude resolve to the first one.
pub(crate) fn sign_of_dominant<'a>(col: impl Iterator<Item = &'a f64>) -> f64 {
    let mut best = 0.0_f64;
    let mut best_abs = -1.0_f64;
    for &x in col {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn thin_svd(m: &Matrix) -> SortedSvd {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return SortedSvd { u: Matrix::zeros(m.nrows(), 0), sigma: Vector::zeros(0), v: Matrix::zeros(m.ncols(), 0) };
    }
    // nalgebra's SVD loses accuracy on some rank-deficient inputs (factor
    // reconstruction errors around 1e-3), which the solver hits constantly
    let svd = to_faer(m).thin_svd().expect("SVD of a finite matrix converges");
    let (u_raw, v_raw) = (from_faer(svd.U()), from_faer(svd.V()));
    let values: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();
    let mut order: Vec<usize> = (0..k).collect();
    // Stable sort keeps the factorisation order among exact ties.
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut u = Matrix::zeros(m.nrows(), k);
    let mut v = Matrix::zeros(m.ncols(), k);
    let mut sigma = Vector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let s = sign_of_dominant(u_raw.column(src).iter());
        u.set_column(dst, &(u_raw.column(src) * s));
        v.set_column(dst, &(v_raw.column(src) * s));
        sigma[dst] = values[src];
    }
    SortedSvd { u, sigma, v }
}

/// Symmetric eigendecomposition sorted by algebraic value, largest first.
///
/// Returns `(values, vectors)` with eigenvectors stored as columns. Only the
/// lower triangle of `m` is read.
pub fn sym_eigen_desc(m: &Matrix) -> (Vector, Matrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vector::zeros(0), Matrix::zeros(0, 0));
    }
    let eig = to_faer(m).self_adjoint_eigen(faer::Side::Lower).expect("symmetric eigensolver converges");
    let raw_vectors = from_faer(eig.U());
    let raw_values: Vec<f64> = (0..n).map(|i| eig.S()[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[b].total_cmp(&raw_values[a]));
    let mut values = Vector::zeros(n);
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = raw_values[src];
        let s = sign_of_dominant(raw_vectors.column(src).iter());
        vectors.set_column(dst, &(raw_vectors.column(src) * s));
    }
    (values, vectors)
}

fn to_faer(m: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Largest absolute entry of `QᵀQ − I`.
pub fn orthonormality_deviation(q: &Matrix) -> f64 {
    let gram = q.transpose() * q;
    let mut worst = 0.0_f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Restores exact symmetry by averaging with the transpose.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}
