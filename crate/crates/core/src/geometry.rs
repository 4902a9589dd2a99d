//! Point clouds, squared-distance matrices and their anchor/target blocks.
//!
//! Configurations are stored column-wise: a `d × T` matrix whose columns are
//! points. Block partitions always follow the order of the index lists in an
//! [`AnchorSplit`], never sorted order, so extracting and re-assembling blocks
//! is an exact round trip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::thin_svd;
use crate::{Matrix, Vector};

/// `d × T` real coordinates, one point per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    coords: Matrix,
}

impl PointConfiguration {
    pub fn new(coords: Matrix) -> Result<Self> {
        if coords.nrows() == 0 {
            return Err(Error::InvalidInput("configuration dimension must be at least 1".into()));
        }
        if coords.ncols() == 0 {
            return Err(Error::InvalidInput("configuration has no points".into()));
        }
        if !coords.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("configuration contains non-finite coordinates".into()));
        }
        Ok(Self { coords })
    }

    /// Builds a configuration from `T` rows of `d` coordinates (the on-disk layout).
    pub fn from_rows(rows: &Matrix) -> Result<Self> {
        Self::new(rows.transpose())
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    pub fn into_coords(self) -> Matrix {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.coords.ncols()
    }

    pub fn centroid(&self) -> Vector {
        self.coords.column_mean()
    }

    /// Configuration with columns taken in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self { coords: self.coords.select_columns(indices) }
    }

    /// Anchors first, then targets, in split order.
    pub fn in_split_order(&self, split: &AnchorSplit) -> Self {
        let order: Vec<usize> = split.anchors().iter().chain(split.targets()).copied().collect();
        self.select(&order)
    }

    /// Inverse of [`in_split_order`](Self::in_split_order): maps columns stored in
    /// split order back to their original labels.
    pub fn from_split_order(&self, split: &AnchorSplit) -> Result<Self> {
        if self.n_points() != split.n_total() {
            return Err(Error::DimensionMismatch(format!(
                "configuration has {} points, split covers {}",
                self.n_points(),
                split.n_total()
            )));
        }
        let mut coords = Matrix::zeros(self.dim(), self.n_points());
        for (pos, &label) in split.anchors().iter().chain(split.targets()).enumerate() {
            coords.set_column(label, &self.coords.column(pos));
        }
        Ok(Self { coords })
    }

    /// Subtracts the mean of all points.
    pub fn centered(&self) -> Self {
        let c = self.centroid();
        let mut coords = self.coords.clone();
        for mut col in coords.column_iter_mut() {
            col -= &c;
        }
        Self { coords }
    }

    pub fn translated(&self, t: &Vector) -> Self {
        let mut coords = self.coords.clone();
        for mut col in coords.column_iter_mut() {
            col += t;
        }
        Self { coords }
    }

    /// Left-multiplies every point by `q` (`d × d`).
    pub fn transformed(&self, q: &Matrix) -> Self {
        Self { coords: q * &self.coords }
    }
}

/// Partition of `{0, …, T−1}` into ordered anchor and target index lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSplit {
    anchors: Vec<usize>,
    targets: Vec<usize>,
}

impl AnchorSplit {
    /// Anchors in the given order; targets are the remaining indices ascending.
    pub fn new(anchors: Vec<usize>, n_total: usize) -> Result<Self> {
        let mut seen = vec![false; n_total];
        for &a in &anchors {
            if a >= n_total {
                return Err(Error::InvalidInput(format!("anchor index {a} out of range for T = {n_total}")));
            }
            if seen[a] {
                return Err(Error::InvalidInput(format!("anchor index {a} repeated")));
            }
            seen[a] = true;
        }
        if anchors.is_empty() {
            return Err(Error::InvalidInput("split needs at least one anchor".into()));
        }
        let targets = (0..n_total).filter(|&i| !seen[i]).collect();
        Ok(Self { anchors, targets })
    }

    /// Explicit anchor and target orders; they must partition `0..T`.
    pub fn with_targets(anchors: Vec<usize>, targets: Vec<usize>) -> Result<Self> {
        let n_total = anchors.len() + targets.len();
        let split = Self::new(anchors, n_total)?;
        let mut sorted = targets.clone();
        sorted.sort_unstable();
        if sorted != split.targets {
            return Err(Error::InvalidInput("anchor and target lists do not partition 0..T".into()));
        }
        Ok(Self { targets, ..split })
    }

    /// First `m` indices are anchors.
    pub fn contiguous(m: usize, n_total: usize) -> Result<Self> {
        Self::new((0..m).collect(), n_total)
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn n_anchors(&self) -> usize {
        self.anchors.len()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn n_total(&self) -> usize {
        self.anchors.len() + self.targets.len()
    }

    /// A rank-`d` anchor Gram block needs at least `d + 1` anchors.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.n_anchors() < dim + 1 {
            return Err(Error::InvalidInput(format!(
                "{} anchors cannot span a {dim}-dimensional configuration (need at least {})",
                self.n_anchors(),
                dim + 1
            )));
        }
        Ok(())
    }
}

/// Block partition `D = [[E, F], [Fᵀ, G]]` of a squared-distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceBlocks {
    pub e: Matrix,
    pub f: Matrix,
    pub g: Option<Matrix>,
    /// Set once outliers have been injected into `f`; a corrupted block may
    /// contain negative entries.
    pub corrupted: bool,
}

impl DistanceBlocks {
    pub fn n_anchors(&self) -> usize {
        self.e.nrows()
    }

    pub fn n_targets(&self) -> usize {
        self.f.ncols()
    }
}

/// Block partition `X = [[A, B], [Bᵀ, C]]` of an anchor-centred Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramBlocks {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Option<Matrix>,
}

/// Centring weights `s` with `sᵀ1 = 1`; `1/m` on anchors, `0` on targets.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringVector {
    s: Vector,
}

impl CenteringVector {
    pub fn anchor_uniform(split: &AnchorSplit) -> Self {
        let mut s = Vector::zeros(split.n_total());
        let w = 1.0 / split.n_anchors() as f64;
        for &a in split.anchors() {
            s[a] = w;
        }
        Self { s }
    }

    /// Arbitrary weights; they must sum to one.
    pub fn from_weights(s: Vector) -> Result<Self> {
        if (s.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("centring weights sum to {}, expected 1", s.sum())));
        }
        Ok(Self { s })
    }

    pub fn weights(&self) -> &Vector {
        &self.s
    }

    /// `J = I − 1sᵀ`.
    pub fn centering_matrix(&self) -> Matrix {
        let t = self.s.len();
        let mut j = Matrix::identity(t, t);
        for c in 0..t {
            for r in 0..t {
                j[(r, c)] -= self.s[c];
            }
        }
        j
    }
}

/// Full `T × T` matrix of squared pairwise distances.
pub fn pairwise_edm(points: &PointConfiguration) -> Matrix {
    let p = points.coords();
    let t = p.ncols();
    let mut d = Matrix::zeros(t, t);
    for j in 0..t {
        for i in (j + 1)..t {
            let dist2 = (p.column(i) - p.column(j)).norm_squared();
            d[(i, j)] = dist2;
            d[(j, i)] = dist2;
        }
    }
    d
}

/// Extracts `E = D[𝓘,𝓘]`, `F = D[𝓘,𝓙]`, `G = D[𝓙,𝓙]` in split order.
pub fn split_blocks(d: &Matrix, split: &AnchorSplit) -> Result<DistanceBlocks> {
    if d.nrows() != d.ncols() || d.nrows() != split.n_total() {
        return Err(Error::DimensionMismatch(format!(
            "distance matrix is {}x{}, split covers {} points",
            d.nrows(),
            d.ncols(),
            split.n_total()
        )));
    }
    let sub = |rows: &[usize], cols: &[usize]| Matrix::from_fn(rows.len(), cols.len(), |i, j| d[(rows[i], cols[j])]);
    let (anchors, targets) = (split.anchors(), split.targets());
    Ok(DistanceBlocks {
        e: sub(anchors, anchors),
        f: sub(anchors, targets),
        g: if targets.is_empty() { None } else { Some(sub(targets, targets)) },
        corrupted: false,
    })
}

/// Translates the configuration so the anchor centroid is at the origin.
pub fn center_anchors(points: &PointConfiguration, split: &AnchorSplit) -> PointConfiguration {
    let p = points.coords();
    let mut c = Vector::zeros(p.nrows());
    for &a in split.anchors() {
        c += p.column(a);
    }
    c /= split.n_anchors() as f64;
    points.translated(&(-c))
}

/// Double centring `X = −½ (I − 1sᵀ) D (I − s1ᵀ)`.
pub fn gram_from_edm(d: &Matrix, s: &CenteringVector) -> Result<Matrix> {
    let w = s.weights();
    if d.nrows() != d.ncols() || d.nrows() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "distance matrix is {}x{}, centring vector has length {}",
            d.nrows(),
            d.ncols(),
            w.len()
        )));
    }
    let ds = d * w;
    let sds = w.dot(&ds);
    let t = d.nrows();
    let mut x = Matrix::from_fn(t, t, |i, j| -0.5 * (d[(i, j)] - ds[i] - ds[j] + sds));
    crate::linalg::symmetrize(&mut x);
    Ok(x)
}

/// Orthogonal Procrustes alignment of `estimate` onto `truth`.
///
/// Both clouds are centred, the orthogonal `Q` (reflections allowed)
/// minimising `‖Q·Ê − P̃‖_F` is taken from the SVD of the cross-covariance,
/// and the truth centroid is added back. A vanishing cross-covariance yields
/// `Q = I`.
pub fn procrustes_align(estimate: &PointConfiguration, truth: &PointConfiguration) -> Result<PointConfiguration> {
    check_same_shape(estimate, truth)?;
    let q = procrustes_rotation(estimate, truth);
    let aligned = estimate.centered().transformed(&q).translated(&truth.centroid());
    Ok(aligned)
}

/// Optimal orthogonal matrix for [`procrustes_align`].
pub fn procrustes_rotation(estimate: &PointConfiguration, truth: &PointConfiguration) -> Matrix {
    let d = estimate.dim();
    let xe = estimate.centered();
    let xt = truth.centered();
    let cross = xt.coords() * xe.coords().transpose();
    let scale = xe.coords().norm() * xt.coords().norm();
    if scale == 0.0 || cross.norm() <= 1e-300 {
        return Matrix::identity(d, d);
    }
    let svd = thin_svd(&cross);
    &svd.u * svd.v.transpose()
}

/// `‖align(P̂) − P⋆‖_F / √T`.
pub fn rmse(estimate: &PointConfiguration, truth: &PointConfiguration) -> Result<f64> {
    let aligned = procrustes_align(estimate, truth)?;
    Ok((aligned.coords() - truth.coords()).norm() / (truth.n_points() as f64).sqrt())
}

fn check_same_shape(a: &PointConfiguration, b: &PointConfiguration) -> Result<()> {
    if a.dim() != b.dim() || a.n_points() != b.n_points() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{}, truth is {}x{}",
            a.dim(),
            a.n_points(),
            b.dim(),
            b.n_points()
        )));
    }
    Ok(())
}
