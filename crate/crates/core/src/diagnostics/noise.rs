//! Empirical stand-ins for the gradient variance and second-moment bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::ClientSpec;
use crate::objective::{grad_rows, sample_rows, ParamVector};
use crate::rng::derived;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    /// Largest mean `‖g_batch − g_full‖²` over clients and points.
    pub sigma_sq: f64,
    /// Largest mean `‖g_batch‖²` over clients and points.
    pub g_sq: f64,
}

/// Monte-Carlo minibatch statistics at each point in `w_samples` for every
/// client, maximized over both. Streams are derived from `seed` per
/// `(client, point)`.
pub fn estimate_noise(
    clients: &[ClientSpec],
    w_samples: &[ParamVector],
    reg_lambda: f64,
    batch_size: usize,
    n_draws: usize,
    seed: u64,
) -> Result<NoiseEstimate> {
    if n_draws == 0 || batch_size == 0 {
        return Err(Error::Argument("noise estimation needs n_draws ≥ 1 and batch_size ≥ 1".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..clients.len())
        .filter(|&c| !clients[c].dataset.is_empty())
        .flat_map(|c| (0..w_samples.len()).map(move |s| (c, s)))
        .collect();
    let stats: Vec<NoiseEstimate> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let ds = &clients[c].dataset;
            let w = w_samples[s].as_slice();
            let all: Vec<usize> = (0..ds.len()).collect();
            let full = grad_rows(w, ds, &all, reg_lambda);
            if batch_size >= ds.len() {
                return Ok(NoiseEstimate { sigma_sq: 0.0, g_sq: sq(&full) });
            }
            let mut rng = derived(seed, &[0x2015e, c as u64, s as u64]);
            let (mut var, mut second) = (0.0, 0.0);
            for _ in 0..n_draws {
                let rows = sample_rows(ds.len(), batch_size, &mut rng)?;
                let g = grad_rows(w, ds, &rows, reg_lambda);
                var += g.iter().zip(&full).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                second += sq(&g);
            }
            Ok(NoiseEstimate { sigma_sq: var / n_draws as f64, g_sq: second / n_draws as f64 })
        })
        .collect::<Result<_>>()?;
    Ok(stats.into_iter().fold(NoiseEstimate::default(), |acc, s| NoiseEstimate {
        sigma_sq: acc.sigma_sq.max(s.sigma_sq),
        g_sq: acc.g_sq.max(s.g_sq),
    }))
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
