//! Quantities from the convergence analysis, computed from oracle minima
//! and round logs.

pub mod noise;
pub mod oracle;
pub mod theory;

use serde::{Deserialize, Serialize};

pub use noise::{estimate_noise, NoiseEstimate};
pub use oracle::{compute_gamma, federation_gamma, minimize, GammaReport, OracleSettings, OracleSolution, WeightedObjective};
pub use theory::{bound, rho_t, rho_t_mean, theorem_constants, theta_t, theta_t_mean, ConstantInputs, TheoremConstants};

use crate::error::{Error, Result};
use crate::federation::{lr_offset, weights, ClientSpec, FederationConfig, RoundLog};
use crate::objective::ParamVector;

/// Every term of the bound for one horizon, as written to experiment
/// summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryDiagnostics {
    pub horizon: usize,
    pub gamma_lr: f64,
    pub f_star: f64,
    pub gamma: f64,
    pub gamma_k: Vec<f64>,
    pub theta_t: f64,
    /// `θ_T` of a run that never admits a non-priority client,
    /// `(T−1)/(T+γ−2)`.
    pub theta_t_priority_only: f64,
    pub rho_t: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1_prime: Option<f64>,
    pub sigma_sq_hat: f64,
    pub g_sq_hat: f64,
    pub bound_value: f64,
    /// `"single-run"` or `"seed-average"`.
    pub expectation: String,
    pub runs: usize,
}

/// Evaluates the bound at horizon `T = rounds·E` for one or more runs that
/// share clients and configuration.
pub fn theory_diagnostics(
    runs: &[&[RoundLog]],
    clients: &[ClientSpec],
    cfg: &FederationConfig,
    oracle: &GammaReport,
    noise: NoiseEstimate,
    rounds: usize,
) -> Result<TheoryDiagnostics> {
    if runs.is_empty() {
        return Err(Error::Argument("diagnostics need at least one run".into()));
    }
    let roster = weights(clients);
    let e = cfg.local_steps;
    let t = rounds * e;
    let gamma_lr = lr_offset(cfg.mu, cfg.smoothness, e);
    let theta = theta_t_mean(runs, &roster, t, e, gamma_lr)?;
    let rho = rho_t_mean(runs, &oracle.gamma_k, &roster, t, e, cfg.smoothness, cfg.mu, gamma_lr)?;
    let w0 = cfg.w0.clone().unwrap_or_else(|| ParamVector::zeros(clients[0].dataset.shape()));
    let constants = theorem_constants(&ConstantInputs {
        mu: cfg.mu,
        smoothness: cfg.smoothness,
        local_steps: e,
        sigma_sq: noise.sigma_sq,
        g_sq: noise.g_sq,
        w0: &w0,
        w_star: &oracle.w_star,
        priority_sample: cfg.participation.priority_sample,
    });
    let c1 = constants.c1_prime.unwrap_or(constants.c1);
    Ok(TheoryDiagnostics {
        horizon: t,
        gamma_lr,
        f_star: oracle.f_star,
        gamma: oracle.gamma,
        gamma_k: oracle.gamma_k.clone(),
        theta_t: theta,
        theta_t_priority_only: (t as f64 - 1.0) / (t as f64 + gamma_lr - 2.0),
        rho_t: rho,
        c1: constants.c1,
        c2: constants.c2,
        c1_prime: constants.c1_prime,
        sigma_sq_hat: noise.sigma_sq,
        g_sq_hat: noise.g_sq,
        bound_value: bound(t, gamma_lr, c1, constants.c2, theta, oracle.gamma, rho),
        expectation: if runs.len() > 1 { "seed-average" } else { "single-run" }.to_string(),
        runs: runs.len(),
    })
}
