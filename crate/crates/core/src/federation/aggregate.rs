//! Renormalized aggregation.
//!
//! With `S = Σ_{k∉P} p_k I_k` the full-participation update is
//!
//! ```text
//! w ← (Σ_{k∈P} p_k w_k + Σ_{k∉P} p_k I_k w_k) / (1 + S)
//! ```
//!
//! and the sampled variant replaces the priority sum by the mean of `K`
//! models drawn with replacement in proportion to `p_k`:
//!
//! ```text
//! w ← (1/K) Σ_{k∈S_t} w_k / (1 + S) + Σ_{k∉P} p_k I_k w_k / (1 + S)
//! ```
//!
//! Both are affine combinations. The sampled one is unbiased for the full
//! one because `E[(1/K) Σ_{k∈S_t} w_k] = Σ_{k∈P} p_k w_k`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use super::client::ClientWeight;
use crate::error::{Error, Result};
use crate::objective::ParamVector;
use crate::rng::RngState;

fn check_lengths(models: &[ParamVector], weights: &[ClientWeight], indicators: &[bool]) -> Result<usize> {
    if models.len() != weights.len() || indicators.len() != weights.len() {
        return Err(Error::Argument(format!(
            "aggregation got {} models, {} weights and {} indicators",
            models.len(),
            weights.len(),
            indicators.len()
        )));
    }
    let len = models.first().map_or(0, ParamVector::len);
    if models.iter().any(|m| m.len() != len) {
        return Err(Error::Argument("models to aggregate differ in length".into()));
    }
    Ok(len)
}

/// Mass of the admitted non-priority clients, `Σ_{k∉P} p_k I_k`.
pub fn admitted_mass(weights: &[ClientWeight], indicators: &[bool]) -> f64 {
    weights
        .iter()
        .zip(indicators)
        .filter(|(w, &i)| !w.is_priority && i)
        .map(|(w, _)| w.p)
        .sum()
}

/// Full-participation aggregate of the models whose indicator is set.
///
/// Models are indexed like `weights`; entries with a false indicator are
/// ignored. Priority clients normally all carry `true`. If some do not, the
/// denominator still normalizes the included mass to one.
pub fn aggregate(models: &[ParamVector], weights: &[ClientWeight], indicators: &[bool]) -> Result<ParamVector> {
    let len = check_lengths(models, weights, indicators)?;
    let priority_mass: f64 = weights
        .iter()
        .zip(indicators)
        .filter(|(w, &i)| w.is_priority && i)
        .map(|(w, _)| w.p)
        .sum();
    if !weights.iter().zip(indicators).any(|(w, &i)| w.is_priority && i) {
        return Err(Error::Protocol("no priority client is included in the round".into()));
    }
    let denom = priority_mass + admitted_mass(weights, indicators);
    let mut out = ParamVector::from_vec(vec![0.0; len]);
    for ((model, weight), &included) in models.iter().zip(weights).zip(indicators) {
        if included {
            out.axpy(weight.p / denom, model);
        }
    }
    Ok(out)
}

/// Sampled-priority aggregate. `sample` holds client ids and may repeat.
pub fn aggregate_partial(
    models: &[ParamVector],
    sample: &[usize],
    weights: &[ClientWeight],
    indicators: &[bool],
) -> Result<ParamVector> {
    let len = check_lengths(models, weights, indicators)?;
    if sample.is_empty() {
        return Err(Error::Protocol("the priority sample is empty".into()));
    }
    if let Some(&bad) = sample.iter().find(|&&k| k >= weights.len() || !weights[k].is_priority) {
        return Err(Error::Protocol(format!("sampled client {bad} is not a priority client")));
    }
    let denom = 1.0 + admitted_mass(weights, indicators);
    let per_draw = 1.0 / (sample.len() as f64 * denom);
    let mut out = ParamVector::from_vec(vec![0.0; len]);
    for &k in sample {
        out.axpy(per_draw, &models[k]);
    }
    for ((model, weight), &included) in models.iter().zip(weights).zip(indicators) {
        if included && !weight.is_priority {
            out.axpy(weight.p / denom, model);
        }
    }
    Ok(out)
}

/// `K` independent draws of a priority client id with probabilities `p_k`.
pub fn sample_priority(weights: &[ClientWeight], k: usize, rng: &mut RngState) -> Result<Vec<usize>> {
    let ids: Vec<usize> = (0..weights.len()).filter(|&i| weights[i].is_priority).collect();
    let probs: Vec<f64> = ids.iter().map(|&i| weights[i].p).collect();
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::Config(format!("priority data fractions cannot be sampled: {e}")))?;
    Ok((0..k).map(|_| ids[dist.sample(rng)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_vec(v.to_vec())
    }

    #[test]
    fn priority_only_limit() {
        let weights = [ClientWeight::priority(0.3), ClientWeight::priority(0.7), ClientWeight::nonpriority(0.4)];
        let models = [pv(&[1.0, 0.0]), pv(&[0.0, 1.0]), pv(&[9.0, 9.0])];
        let out = aggregate(&models, &weights, &[true, true, false]).unwrap();
        assert_eq!(out, pv(&[0.3, 0.7]));
    }

    #[test]
    fn admitted_client_is_renormalized() {
        let weights = [ClientWeight::priority(0.5), ClientWeight::priority(0.5), ClientWeight::nonpriority(0.5)];
        let models = [pv(&[1.0]), pv(&[2.0]), pv(&[6.0])];
        let out = aggregate(&models, &weights, &[true, true, true]).unwrap();
        let expected = (0.5 * 1.0 + 0.5 * 2.0 + 0.5 * 6.0) / 1.5;
        assert!((out.as_slice()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn identical_models_are_a_fixed_point() {
        let weights = [ClientWeight::priority(0.2), ClientWeight::priority(0.8), ClientWeight::nonpriority(1.3)];
        let w = pv(&[0.25, -1.5, 3.0]);
        let models = [w.clone(), w.clone(), w.clone()];
        let full = aggregate(&models, &weights, &[true, true, true]).unwrap();
        let partial = aggregate_partial(&models, &[1, 1, 0], &weights, &[true, true, true]).unwrap();
        for (a, b) in full.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in partial.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn no_priority_is_a_protocol_error() {
        let weights = [ClientWeight::priority(1.0), ClientWeight::nonpriority(1.0)];
        let models = [pv(&[1.0]), pv(&[2.0])];
        assert!(matches!(aggregate(&models, &weights, &[false, true]), Err(Error::Protocol(_))));
        assert!(matches!(aggregate_partial(&models, &[], &weights, &[true, true]), Err(Error::Protocol(_))));
    }

    #[test]
    fn single_draw_returns_that_model() {
        let weights = [ClientWeight::priority(0.4), ClientWeight::priority(0.6), ClientWeight::nonpriority(0.5)];
        let models = [pv(&[1.0]), pv(&[2.0]), pv(&[5.0])];
        let out = aggregate_partial(&models, &[1], &weights, &[true, true, false]).unwrap();
        assert_eq!(out, pv(&[2.0]));
    }

    #[test]
    fn single_priority_client_is_always_drawn() {
        let weights = [ClientWeight::nonpriority(0.5), ClientWeight::priority(1.0)];
        assert_eq!(sample_priority(&weights, 4, &mut seeded(0)).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn sampling_frequencies_follow_fractions() {
        let weights = [ClientWeight::priority(0.9), ClientWeight::priority(0.1)];
        let draws = 100_000;
        let sample = sample_priority(&weights, draws, &mut seeded(5)).unwrap();
        let ones = sample.iter().filter(|&&k| k == 1).count() as f64;
        let sigma = (draws as f64 * 0.1 * 0.9).sqrt();
        assert!((ones - 0.1 * draws as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn sampling_is_deterministic() {
        let weights = [ClientWeight::priority(0.5), ClientWeight::priority(0.3), ClientWeight::priority(0.2)];
        let a = sample_priority(&weights, 12, &mut seeded(9)).unwrap();
        let b = sample_priority(&weights, 12, &mut seeded(9)).unwrap();
        assert_eq!(a, b);
    }
}
