use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Matrix;

/// Sparse corruption model for the anchor–target block.
///
/// `⌊α(m−1)n⌋` entries outside the protected row are chosen uniformly
/// without replacement and receive additive values uniform on
/// `[−a, a)`, `a = magnitude_scale · mean|F⋆|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierSpec {
    pub alpha: f64,
    pub magnitude_scale: f64,
    pub seed: u64,
    pub protect_row: usize,
}

impl OutlierSpec {
    pub fn new(alpha: f64, seed: u64) -> Self {
        Self { alpha, magnitude_scale: 3.0, seed, protect_row: 0 }
    }
}

/// Returns `(F⋆ + S⋆, S⋆)`.
pub fn inject_outliers(f_clean: &Matrix, spec: &OutlierSpec) -> Result<(Matrix, Matrix)> {
    let (m, n) = f_clean.shape();
    if !(0.0..=1.0).contains(&spec.alpha) {
        return Err(Error::InvalidInput(format!("outlier fraction must lie in [0, 1], got {}", spec.alpha)));
    }
    if !(spec.magnitude_scale > 0.0 && spec.magnitude_scale.is_finite()) {
        return Err(Error::InvalidInput(format!("magnitude scale must be positive, got {}", spec.magnitude_scale)));
    }
    if spec.protect_row >= m {
        return Err(Error::InvalidInput(format!("protected row {} out of range for {m} rows", spec.protect_row)));
    }
    let pool = (m - 1) * n;
    // guard against α·N landing a hair below an integer
    let count = ((spec.alpha * pool as f64) + 1e-9).floor() as usize;
    let count = count.min(pool);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bound = if f_clean.is_empty() { 0.0 } else { spec.magnitude_scale * f_clean.abs().mean() };
    let mut s = Matrix::zeros(m, n);
    if count > 0 {
        for idx in sample(&mut rng, pool, count).into_iter() {
            let (r, j) = (idx % (m - 1), idx / (m - 1));
            let row = if r >= spec.protect_row { r + 1 } else { r };
            s[(row, j)] = if bound > 0.0 { rng.random_range(-bound..bound) } else { 0.0 };
        }
    }
    Ok((f_clean + &s, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::alpha_sparsity;
    use std::collections::HashSet;

    fn clean(m: usize, n: usize) -> Matrix {
        Matrix::from_fn(m, n, |i, j| 1.0 + ((i * 7 + j * 13) % 50) as f64)
    }

    #[test]
    fn zero_alpha_is_identity() {
        let f = clean(5, 8);
        let (fc, s) = inject_outliers(&f, &OutlierSpec::new(0.0, 1)).unwrap();
        assert_eq!(fc, f);
        assert_eq!(s, Matrix::zeros(5, 8));
    }

    #[test]
    fn full_corruption_spares_protected_row() {
        let f = clean(6, 9);
        let spec = OutlierSpec { protect_row: 2, ..OutlierSpec::new(1.0, 4) };
        let (fc, s) = inject_outliers(&f, &spec).unwrap();
        for i in 0..6 {
            for j in 0..9 {
                if i == 2 {
                    assert_eq!(s[(i, j)], 0.0);
                    assert_eq!(fc[(i, j)], f[(i, j)]);
                } else {
                    assert_ne!(s[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn counts_range_and_uniqueness() {
        let f = clean(30, 470);
        let spec = OutlierSpec::new(0.1, 99);
        let (fc, s) = inject_outliers(&f, &spec).unwrap();
        let positions: Vec<(usize, usize)> =
            (0..30).flat_map(|i| (0..470).map(move |j| (i, j))).filter(|&(i, j)| s[(i, j)] != 0.0).collect();
        assert_eq!(positions.len(), (0.1_f64 * 29.0 * 470.0).floor() as usize);
        assert_eq!(positions.iter().collect::<HashSet<_>>().len(), positions.len());
        let bound = 3.0 * f.abs().mean();
        assert!(s.iter().all(|&x| x >= -bound && x < bound));
        assert!(s.row(0).iter().all(|&x| x == 0.0));
        assert_eq!(fc - &f, s);
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let f = clean(10, 40);
        let spec = OutlierSpec::new(0.2, 5);
        assert_eq!(inject_outliers(&f, &spec).unwrap(), inject_outliers(&f, &spec).unwrap());
    }

    #[test]
    fn sparsity_within_slack() {
        let f = clean(40, 460);
        for (k, alpha) in [0.05, 0.1, 0.2, 0.3].into_iter().enumerate() {
            let (_, s) = inject_outliers(&f, &OutlierSpec::new(alpha, k as u64)).unwrap();
            let (row, _) = alpha_sparsity(&s);
            // uniform placement concentrates per-row counts near α; columns are
            // only 39 entries long, so their maxima fluctuate far more
            assert!(row <= alpha + 2.0 / 40.0 + 3.0 * (alpha / 460.0).sqrt(), "alpha {alpha}: row {row}");
        }
    }

    #[test]
    fn invalid_specs() {
        let f = clean(4, 4);
        assert!(inject_outliers(&f, &OutlierSpec::new(1.5, 0)).is_err());
        assert!(inject_outliers(&f, &OutlierSpec::new(-0.1, 0)).is_err());
        assert!(inject_outliers(&f, &OutlierSpec { protect_row: 4, ..OutlierSpec::new(0.1, 0) }).is_err());
    }
}
