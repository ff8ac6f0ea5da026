use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{polygon_area, ConstrainedZonotope, IntervalVector, SetError, Zonotope};
use crate::parallel::{pool, shard_sizes};
use crate::Scalar;

/// How to measure the volume of a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum VolumeMethod {
    /// Exact area; only defined in two dimensions.
    Exact2d,
    /// Hit ratio of uniform samples over the interval hull times the hull
    /// volume. Shard `i` uses seed `seed + i`.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Shared Monte Carlo driver: samples the box, counts hits of `inside`.
fn monte_carlo<F>(hull: &IntervalVector<f64>, samples: usize, seed: u64, inside: F) -> Result<f64, SetError>
where
    F: Fn(&nalgebra::DVector<f64>) -> Result<bool, SetError> + Sync,
{
    if samples == 0 {
        return Err(SetError::InvalidArgument(
            "monte carlo needs at least one sample".into(),
        ));
    }
    let box_volume = hull.volume();
    if box_volume == 0.0 {
        return Ok(0.0);
    }
    let n = hull.dim();
    let sizes = shard_sizes(samples);
    let hits: Result<Vec<usize>, SetError> = pool().install(|| {
        sizes
            .par_iter()
            .enumerate()
            .map(|(shard, &count)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(shard as u64));
                let mut x = nalgebra::DVector::zeros(n);
                let mut hits = 0usize;
                for _ in 0..count {
                    for i in 0..n {
                        x[i] = rng.gen_range(hull.lower()[i]..=hull.upper()[i]);
                    }
                    if inside(&x)? {
                        hits += 1;
                    }
                }
                Ok(hits)
            })
            .collect()
    });
    let hits: usize = hits?.into_iter().sum();
    Ok(box_volume * hits as f64 / samples as f64)
}

fn hull_f64<T: Scalar>(hull: &IntervalVector<T>) -> IntervalVector<f64> {
    let lo = hull.lower().map(|v| v.to_f64_lossy());
    let hi = hull.upper().map(|v| v.to_f64_lossy());
    IntervalVector::new(lo, hi).expect("hull bounds stay ordered")
}

impl<T: Scalar> Zonotope<T> {
    /// Exact area in 2D (`4 Σ_{i<j} |det(g_i, g_j)|`) or a Monte Carlo
    /// estimate in any dimension.
    pub fn volume(&self, method: VolumeMethod) -> Result<f64, SetError> {
        match method {
            VolumeMethod::Exact2d => {
                if self.dim() != 2 {
                    return Err(SetError::NotTwoDimensional(self.dim()));
                }
                let g = self.generators().map(|v| v.to_f64_lossy());
                let mut total = 0.0;
                for i in 0..g.ncols() {
                    for j in (i + 1)..g.ncols() {
                        total += (g[(0, i)] * g[(1, j)] - g[(1, i)] * g[(0, j)]).abs();
                    }
                }
                Ok(4.0 * total)
            }
            VolumeMethod::MonteCarlo { samples, seed } => {
                let z64 = Zonotope::new(
                    self.center().map(|v| v.to_f64_lossy()),
                    self.generators().map(|v| v.to_f64_lossy()),
                )?;
                monte_carlo(&hull_f64(&self.interval_hull()), samples, seed, |x| {
                    z64.contains_point(x)
                })
            }
        }
    }
}

impl<T: Scalar> ConstrainedZonotope<T> {
    /// Exact area via polygon vertex enumeration in 2D, or a Monte Carlo
    /// estimate over the LP-tightened hull. Empty sets have volume zero.
    pub fn volume(&self, method: VolumeMethod) -> Result<f64, SetError> {
        match method {
            VolumeMethod::Exact2d => {
                if self.dim() != 2 {
                    return Err(SetError::NotTwoDimensional(self.dim()));
                }
                Ok(polygon_area(&self.polygon()?))
            }
            VolumeMethod::MonteCarlo { samples, seed } => {
                let Some(hull) = self.tight_interval_hull()? else {
                    return Ok(0.0);
                };
                monte_carlo(&hull_f64(&hull), samples, seed, |x| {
                    let xt = x.map(T::lit);
                    self.contains_point(&xt)
                })
            }
        }
    }
}
