use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::PointConfiguration;
use crate::Matrix;

/// Ambient dimension of [`gen_spiral`] configurations.
pub const SPIRAL_DIM: usize = 10;

/// `T` points uniform in `[−w, w]^d`, then mean-centred.
pub fn gen_sensors(t: usize, d: usize, box_half_width: f64, seed: u64) -> Result<PointConfiguration> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if t < d + 2 {
        return Err(Error::InvalidInput(format!("need at least d + 2 = {} points, got {t}", d + 2)));
    }
    if !(box_half_width > 0.0 && box_half_width.is_finite()) {
        return Err(Error::InvalidInput(format!("box half-width must be positive, got {box_half_width}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = Matrix::from_fn(d, t, |_, _| rng.random_range(-box_half_width..box_half_width));
    Ok(PointConfiguration::new(coords)?.centered())
}

/// Noise-free planar spiral `r = 2θ` with `θ` evenly spaced over `[2π, 5π]`,
/// as a `2 × T` matrix (not centred).
pub fn spiral_curve(t: usize) -> Matrix {
    let (lo, hi) = (2.0 * std::f64::consts::PI, 5.0 * std::f64::consts::PI);
    Matrix::from_fn(2, t, |row, j| {
        let theta = if t == 1 { lo } else { lo + (hi - lo) * j as f64 / (t - 1) as f64 };
        let r = 2.0 * theta;
        if row == 0 {
            r * theta.cos()
        } else {
            r * theta.sin()
        }
    })
}

/// Spiral embedded in ℝ¹⁰: the planar curve plus independent standard normal
/// noise on each of the first two coordinates, eight further standard normal
/// coordinates, then mean-centred.
pub fn gen_spiral(t: usize, seed: u64) -> Result<PointConfiguration> {
    if t < 3 {
        return Err(Error::InvalidInput(format!("spiral needs at least 3 points, got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curve = spiral_curve(t);
    let mut coords = Matrix::zeros(SPIRAL_DIM, t);
    for j in 0..t {
        for i in 0..SPIRAL_DIM {
            let noise: f64 = StandardNormal.sample(&mut rng);
            coords[(i, j)] = if i < 2 { curve[(i, j)] + noise } else { noise };
        }
    }
    Ok(PointConfiguration::new(coords)?.centered())
}

/// `T` points uniform in a 3-D ball of the given radius, mean-centred.
///
/// Stands in for a small globular protein when no structure file is
/// available (roughly one heavy atom per 35 Å³ at `T = 953`, `radius = 20`).
pub fn gen_globule(t: usize, radius: f64, seed: u64) -> Result<PointConfiguration> {
    if t < 5 {
        return Err(Error::InvalidInput(format!("need at least 5 points, got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Matrix::zeros(3, t);
    let mut j = 0;
    while j < t {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r2: f64 = p.iter().map(|x| x * x).sum();
        if r2 <= 1.0 {
            for i in 0..3 {
                coords[(i, j)] = radius * p[i];
            }
            j += 1;
        }
    }
    Ok(PointConfiguration::new(coords)?.centered())
}
