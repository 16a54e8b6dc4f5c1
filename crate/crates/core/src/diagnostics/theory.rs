//! Closed-form pieces of the convergence bound, evaluated on round logs.
//!
//! With `γ = max(8L/μ, E)`, `S_r = Σ_{k∉P} p_k I_{k,r}` for round `r` and
//! `τ(i) = ⌊i/E⌋` the round containing local step `i`:
//!
//! ```text
//! θ_T = 1/(T+γ−2) · Σ_{i=1}^{T−1} 1/(1 + S_τ(i))
//! ρ_T = 2L/(μ(T+γ−2)) · Σ_{i=1}^{T−1} (Σ_{k∉P} p_k I_{k,τ(i)} Γ_k)/(1 + S_τ(i))
//! bound = (C₁ + C₂ θ_T Γ)/(T+γ) + ρ_T
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::{ClientWeight, RoundLog};
use crate::objective::ParamVector;

fn check_horizon(logs: &[RoundLog], t: usize, local_steps: usize) -> Result<()> {
    if local_steps == 0 || t == 0 || t % local_steps != 0 {
        return Err(Error::Argument(format!(
            "horizon T = {t} must be a positive multiple of E = {local_steps}"
        )));
    }
    let needed = t / local_steps;
    if logs.len() < needed {
        return Err(Error::Argument(format!("T = {t} needs {needed} rounds of logs, got {}", logs.len())));
    }
    if logs[..needed].iter().enumerate().any(|(r, l)| l.round != r) {
        return Err(Error::Argument("round logs are not numbered consecutively".into()));
    }
    Ok(())
}

fn admitted(log: &RoundLog, weights: &[ClientWeight]) -> Result<f64> {
    if log.indicators.len() != weights.len() {
        return Err(Error::Argument(format!(
            "round {} logs {} indicators for {} clients",
            log.round,
            log.indicators.len(),
            weights.len()
        )));
    }
    Ok(log.admitted_mass(weights))
}

/// Average-inclusion factor for horizon `T` (in local steps).
pub fn theta_t(logs: &[RoundLog], weights: &[ClientWeight], t: usize, local_steps: usize, gamma_lr: f64) -> Result<f64> {
    check_horizon(logs, t, local_steps)?;
    let mut sum = 0.0;
    for i in 1..t {
        sum += 1.0 / (1.0 + admitted(&logs[i / local_steps], weights)?);
    }
    Ok(sum / (t as f64 + gamma_lr - 2.0))
}

/// Accumulated bias from misaligned admitted clients.
#[allow(clippy::too_many_arguments)]
pub fn rho_t(
    logs: &[RoundLog],
    gamma_k: &[f64],
    weights: &[ClientWeight],
    t: usize,
    local_steps: usize,
    smoothness: f64,
    mu: f64,
    gamma_lr: f64,
) -> Result<f64> {
    check_horizon(logs, t, local_steps)?;
    if gamma_k.len() != weights.len() {
        return Err(Error::Argument("Γ_k must have one entry per client".into()));
    }
    let mut sum = 0.0;
    for i in 1..t {
        let log = &logs[i / local_steps];
        let s = admitted(log, weights)?;
        let biased: f64 = weights
            .iter()
            .zip(&log.indicators)
            .zip(gamma_k)
            .filter(|((w, &inc), _)| inc && !w.is_priority)
            .map(|((w, _), g)| w.p * g)
            .sum();
        sum += biased / (1.0 + s);
    }
    Ok(2.0 * smoothness / (mu * (t as f64 + gamma_lr - 2.0)) * sum)
}

/// Mean of [`theta_t`] over independent runs.
pub fn theta_t_mean(runs: &[&[RoundLog]], weights: &[ClientWeight], t: usize, local_steps: usize, gamma_lr: f64) -> Result<f64> {
    mean(runs.iter().map(|logs| theta_t(logs, weights, t, local_steps, gamma_lr)))
}

/// Mean of [`rho_t`] over independent runs.
#[allow(clippy::too_many_arguments)]
pub fn rho_t_mean(
    runs: &[&[RoundLog]],
    gamma_k: &[f64],
    weights: &[ClientWeight],
    t: usize,
    local_steps: usize,
    smoothness: f64,
    mu: f64,
    gamma_lr: f64,
) -> Result<f64> {
    mean(runs.iter().map(|logs| rho_t(logs, gamma_k, weights, t, local_steps, smoothness, mu, gamma_lr)))
}

fn mean(values: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    let values: Vec<f64> = values.collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Argument("no runs to average".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Constants of the bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub c1: f64,
    pub c2: f64,
    /// Partial-participation replacement for `c1`, present when `K` is known.
    pub c1_prime: Option<f64>,
}

/// Inputs to [`theorem_constants`].
#[derive(Clone, Debug)]
pub struct ConstantInputs<'a> {
    pub mu: f64,
    pub smoothness: f64,
    pub local_steps: usize,
    pub sigma_sq: f64,
    pub g_sq: f64,
    pub w0: &'a ParamVector,
    pub w_star: &'a ParamVector,
    pub priority_sample: Option<usize>,
}

pub fn theorem_constants(inputs: &ConstantInputs<'_>) -> TheoremConstants {
    let (mu, l) = (inputs.mu, inputs.smoothness);
    let e = inputs.local_steps as f64;
    let drift = 8.0 * (e - 1.0).powi(2) * inputs.g_sq;
    let start = 4.0 * l * l / mu * inputs.w0.distance_sq(inputs.w_star);
    let c1 = 2.0 * l / (mu * mu) * (inputs.sigma_sq + drift) + start;
    let c1_prime = inputs.priority_sample.map(|k| {
        2.0 * l / (mu * mu) * (inputs.sigma_sq + drift + 8.0 * e * e * inputs.g_sq / k as f64) + start
    });
    TheoremConstants { c1, c2: 12.0 * l * l / (mu * mu), c1_prime }
}

/// Right-hand side of the convergence bound.
pub fn bound(t: usize, gamma_lr: f64, c1: f64, c2: f64, theta: f64, gamma: f64, rho: f64) -> f64 {
    (c1 + c2 * theta * gamma) / (t as f64 + gamma_lr) + rho
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(round: usize, indicators: Vec<bool>) -> RoundLog {
        RoundLog {
            round,
            t_start: 0,
            global_loss: 0.0,
            per_client_loss: vec![0.0; indicators.len()],
            indicators,
            epsilon: 0.0,
            eta: 0.0,
            test_accuracy: 0.0,
            participating_priority: Vec::new(),
        }
    }

    #[test]
    fn constants_examples() {
        let w = ParamVector::from_vec(vec![0.0]);
        let base = ConstantInputs {
            mu: 1.0,
            smoothness: 1.0,
            local_steps: 2,
            sigma_sq: 1.0,
            g_sq: 1.0,
            w0: &w,
            w_star: &w,
            priority_sample: None,
        };
        assert_eq!(theorem_constants(&base).c1, 18.0);
        assert_eq!(theorem_constants(&base).c1_prime, None);
        let one_step = ConstantInputs { local_steps: 1, mu: 0.5, smoothness: 2.0, sigma_sq: 3.0, ..base.clone() };
        assert_eq!(theorem_constants(&one_step).c1, 2.0 * 2.0 * 3.0 / 0.25);
        let c2 = ConstantInputs { mu: 2.0, smoothness: 3.0, ..base.clone() };
        assert_eq!(theorem_constants(&c2).c2, 27.0);
        let partial = ConstantInputs { priority_sample: Some(4), ..base };
        assert_eq!(theorem_constants(&partial).c1_prime, Some(2.0 * (1.0 + 8.0 + 8.0)));
    }

    #[test]
    fn start_distance_enters_c1() {
        let w0 = ParamVector::from_vec(vec![1.0, 1.0]);
        let ws = ParamVector::from_vec(vec![0.0, 0.0]);
        let inputs = ConstantInputs {
            mu: 1.0,
            smoothness: 2.0,
            local_steps: 1,
            sigma_sq: 0.0,
            g_sq: 0.0,
            w0: &w0,
            w_star: &ws,
            priority_sample: None,
        };
        assert_eq!(theorem_constants(&inputs).c1, 4.0 * 4.0 * 2.0);
    }

    #[test]
    fn bound_limits() {
        assert_eq!(bound(10, 6.0, 4.0, 2.0, 1.0, 3.0, 0.0), (4.0 + 6.0) / 16.0);
        assert_eq!(bound(10, 6.0, 4.0, 2.0, 0.7, 0.0, 0.0), 4.0 / 16.0);
        assert!(bound(20, 6.0, 4.0, 2.0, 0.7, 3.0, 0.1) < bound(10, 6.0, 4.0, 2.0, 0.7, 3.0, 0.1));
    }

    #[test]
    fn theta_horizon_must_match_rounds() {
        let w = [ClientWeight::priority(1.0)];
        let logs = vec![log(0, vec![true])];
        assert!(theta_t(&logs, &w, 4, 3, 8.0).is_err());
        assert!(theta_t(&logs, &w, 6, 3, 8.0).is_err());
        assert_eq!(theta_t(&logs, &w, 3, 3, 8.0).unwrap(), 2.0 / 9.0);
    }
}
