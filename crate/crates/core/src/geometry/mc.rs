//! Hit-or-miss Monte Carlo volume estimation.
//!
//! Samples are drawn uniformly in the support bounding box.  The budget is
//! split into fixed-size shards with per-shard derived seeds, merged in shard
//! order, so the estimate depends only on `(body, samples, seed)` and not on
//! the number of workers.

use super::{ConvexBody, Limits};
use crate::rng::stream_rng;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;

const SHARD: u64 = 4096;

/// Monte Carlo volume estimate with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy)]
pub struct McVolume {
    pub estimate: f64,
    pub half_width: f64,
    /// Total samples drawn (zero for exactly-degenerate bodies).
    pub samples: u64,
    pub seed: u64,
    /// Raw hit count.
    pub hits: u64,
    /// Volume of the sampling box.
    pub box_volume: f64,
}

impl McVolume {
    /// Half-width at an arbitrary two-sided confidence quantile `z`.
    pub fn half_width_at(&self, z: f64) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        let p = self.hits as f64 / self.samples as f64;
        z * (p * (1.0 - p) / self.samples as f64).sqrt() * self.box_volume
    }
}

/// Estimates the volume of `body` from `samples` uniform draws.
pub fn volume_mc(body: &ConvexBody, samples: u64, seed: u64) -> Result<McVolume> {
    volume_mc_with(body, samples, seed, &Limits::default())
}

/// [`volume_mc`] with explicit limits.
pub fn volume_mc_with(
    body: &ConvexBody,
    samples: u64,
    seed: u64,
    limits: &Limits,
) -> Result<McVolume> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample budget must be positive".into()));
    }
    let n = body.dim();
    if body.affine_dimension() < n {
        // Exactly degenerate: volume is zero, no sampling needed.
        return Ok(McVolume {
            estimate: 0.0,
            half_width: 0.0,
            samples: 0,
            seed,
            hits: 0,
            box_volume: 0.0,
        });
    }
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        hi[j] = body.support_value(&e)?;
        e[j] = -1.0;
        lo[j] = -body.support_value(&e)?;
    }
    let box_volume: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
    let planes = body.facet_planes(limits)?;
    let scale = 1.0 + hi.iter().chain(lo.iter()).fold(0.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-12 * scale;

    let shards = samples.div_ceil(SHARD);
    let hits: u64 = (0..shards)
        .into_par_iter()
        .map(|s| {
            let count = SHARD.min(samples - s * SHARD);
            let mut rng = stream_rng(seed, s);
            let mut h = 0u64;
            let mut p = vec![0.0; n];
            for _ in 0..count {
                for j in 0..n {
                    p[j] = rng.gen_range(lo[j]..=hi[j]);
                }
                let inside = planes
                    .iter()
                    .all(|(nv, b)| nv.iter().zip(&p).map(|(a, c)| a * c).sum::<f64>() <= b + eps);
                if inside {
                    h += 1;
                }
            }
            h
        })
        .sum();

    let p_hat = hits as f64 / samples as f64;
    let half_width = 1.96 * (p_hat * (1.0 - p_hat) / samples as f64).sqrt() * box_volume;
    Ok(McVolume { estimate: p_hat * box_volume, half_width, samples, seed, hits, box_volume })
}
