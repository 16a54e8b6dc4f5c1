//! The round loop.
//!
//! Each round the server broadcasts `w` together with the priority loss
//! `F(w) = Σ_{k∈P} p_k F_k(w)`. Priority clients always train. Non-priority
//! clients are handled by the algorithm's [`NonPriorityPolicy`]. The
//! surviving local models are merged with [`aggregate`] or, when priority
//! clients are sampled, [`aggregate_partial`].
//!
//! Randomness is split into one stream per `(round, client)` and one server
//! stream per round, so a client's minibatches never depend on which other
//! clients trained. Per-client work runs on the rayon pool and is collected
//! in id order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, aggregate_partial, sample_priority};
use super::client::{validate_roster, weights, ClientSpec, ClientWeight};
use super::config::{Algorithm, FederationConfig, IndicatorRule, NonPriorityPolicy};
use super::selection::admit;
use crate::error::{Error, Result};
use crate::objective::{accuracy, grad_rows, loss, LabeledDataset, ParamVector};
use crate::rng::{derived, RngState};

const CLIENT_STREAM: u64 = 0xc1;
const SERVER_STREAM: u64 = 0x5e;

/// What happened in one communication round, measured at the broadcast model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    /// Local-iteration index at which the round starts.
    pub t_start: usize,
    pub global_loss: f64,
    pub per_client_loss: Vec<f64>,
    /// Aggregation indicator per client. Priority clients are always `true`.
    pub indicators: Vec<bool>,
    pub epsilon: f64,
    pub eta: f64,
    pub test_accuracy: f64,
    /// Sampled priority ids with multiplicity. Empty under full participation.
    pub participating_priority: Vec<usize>,
}

impl RoundLog {
    /// Mass-free count of admitted non-priority clients.
    pub fn n_nonpriority_included(&self, clients: &[ClientWeight]) -> usize {
        clients
            .iter()
            .zip(&self.indicators)
            .filter(|(c, &i)| !c.is_priority && i)
            .count()
    }

    /// `Σ_{k∉P} p_k I_k` for this round.
    pub fn admitted_mass(&self, clients: &[ClientWeight]) -> f64 {
        super::aggregate::admitted_mass(clients, &self.indicators)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FederationOutcome {
    pub logs: Vec<RoundLog>,
    /// Final global model. For `LocalOnly` this is the untouched `w0`.
    pub model: ParamVector,
    pub final_global_loss: f64,
    pub final_test_accuracy: f64,
    /// Priority loss before round 0 and after every round, `rounds + 1` values.
    pub trajectory: Vec<f64>,
    /// Per-client models, only for `LocalOnly`.
    pub local_models: Option<Vec<ParamVector>>,
    /// Broadcast model of every round followed by the final model. Empty for
    /// `LocalOnly`.
    #[serde(skip)]
    pub checkpoints: Vec<ParamVector>,
}

/// `Σ_{k∈P} p_k F_k(w)`.
pub fn global_loss(w: &ParamVector, clients: &[ClientSpec], reg_lambda: f64) -> Result<f64> {
    let losses = client_losses(w, clients, reg_lambda, |c| c.is_priority)?;
    Ok(priority_mean(clients, &losses))
}

fn client_losses(
    w: &ParamVector,
    clients: &[ClientSpec],
    reg_lambda: f64,
    wanted: impl Fn(&ClientSpec) -> bool + Sync,
) -> Result<Vec<f64>> {
    clients
        .par_iter()
        .map(|c| if wanted(c) { loss(w, &c.objective(reg_lambda)) } else { Ok(f64::NAN) })
        .collect()
}

fn priority_mean(clients: &[ClientSpec], values: &[f64]) -> f64 {
    clients
        .iter()
        .zip(values)
        .filter(|(c, _)| c.is_priority)
        .map(|(c, v)| c.p * v)
        .sum()
}

/// `E` local SGD steps from `w` starting at global iteration `t0`.
///
/// A batch size of at least `D_k` uses the full local dataset and draws
/// nothing from `rng`. With `prox_mu > 0` each gradient gains
/// `prox_mu·(w − w_broadcast)`.
pub fn local_update(
    w: &ParamVector,
    client: &ClientSpec,
    steps: usize,
    t0: usize,
    cfg: &FederationConfig,
    rng: &mut RngState,
) -> Result<ParamVector> {
    let ds = &client.dataset;
    if ds.is_empty() {
        return Ok(w.clone());
    }
    if w.len() != ds.shape().param_len() {
        return Err(Error::Argument(format!(
            "model has {} parameters, client {} needs {}",
            w.len(),
            client.id,
            ds.shape().param_len()
        )));
    }
    let prox = if cfg.algorithm.is_prox() { cfg.prox_mu } else { 0.0 };
    let full: Vec<usize> = if cfg.batch_size >= ds.len() { (0..ds.len()).collect() } else { Vec::new() };
    let mut current = w.as_slice().to_vec();
    for j in 0..steps {
        let eta = cfg.eta(t0 + j);
        let sampled;
        let rows = if full.is_empty() {
            sampled = crate::objective::sample_rows(ds.len(), cfg.batch_size, rng)?;
            &sampled
        } else {
            &full
        };
        let g = grad_rows(&current, ds, rows, cfg.reg_lambda);
        for ((wi, gi), bi) in current.iter_mut().zip(&g).zip(w.as_slice()) {
            *wi -= eta * (gi + prox * (*wi - bi));
        }
    }
    Ok(ParamVector::from_vec(current))
}

fn client_rng(cfg: &FederationConfig, round: usize, id: usize) -> RngState {
    derived(cfg.seed, &[CLIENT_STREAM, round as u64, id as u64])
}

/// Run the configured algorithm and return every round's log.
pub fn run_federation(
    clients: &[ClientSpec],
    cfg: &FederationConfig,
    test_set: &LabeledDataset,
) -> Result<FederationOutcome> {
    validate_roster(clients)?;
    let n_priority = clients.iter().filter(|c| c.is_priority).count();
    cfg.validate(n_priority)?;
    let shape = clients[0].dataset.shape();
    if test_set.shape() != shape {
        return Err(Error::Config("test set shape differs from the client data".into()));
    }
    let w0 = match &cfg.w0 {
        Some(w) if w.len() == shape.param_len() => w.clone(),
        Some(w) => {
            return Err(Error::Config(format!(
                "initial model has {} parameters, expected {}",
                w.len(),
                shape.param_len()
            )))
        }
        None => ParamVector::zeros(shape),
    };
    if cfg.algorithm == Algorithm::LocalOnly {
        return run_local_only(clients, cfg, test_set, w0);
    }

    let roster = weights(clients);
    let mut w = w0;
    let mut logs = Vec::with_capacity(cfg.rounds);
    let mut trajectory = Vec::with_capacity(cfg.rounds + 1);
    let mut checkpoints = Vec::with_capacity(cfg.rounds + 1);
    for round in 0..cfg.rounds {
        checkpoints.push(w.clone());
        let t_start = round * cfg.local_steps;
        let epsilon = match cfg.algorithm.policy() {
            NonPriorityPolicy::LossMatching => cfg.epsilon.at(round),
            _ => 0.0,
        };
        let eta = cfg.eta(t_start);
        let per_client_loss = client_losses(&w, clients, cfg.reg_lambda, |_| true)?;
        let global = priority_mean(clients, &per_client_loss);
        if !global.is_finite() {
            return Err(Error::Protocol(format!("global loss is not finite at round {round}")));
        }
        trajectory.push(global);
        let test_accuracy = accuracy(&w, test_set)?;

        let mut server = derived(cfg.seed, &[SERVER_STREAM, round as u64]);
        let sample = match cfg.participation.priority_sample {
            Some(k) => sample_priority(&roster, k, &mut server)?,
            None => Vec::new(),
        };
        let available: Vec<bool> = clients
            .iter()
            .map(|c| match cfg.participation.nonpriority_probability {
                Some(p) if !c.is_priority => server.random::<f64>() < p,
                _ => true,
            })
            .collect();

        // Which clients train, and which non-priority ones are admitted before training.
        let trains: Vec<bool> = clients
            .iter()
            .map(|c| {
                if c.is_priority {
                    sample.is_empty() || sample.contains(&c.id)
                } else if !available[c.id] {
                    false
                } else {
                    match cfg.algorithm.policy() {
                        NonPriorityPolicy::Ignore => false,
                        NonPriorityPolicy::IncludeAll => true,
                        NonPriorityPolicy::LossMatching => match cfg.indicator_rule {
                            IndicatorRule::Broadcast => admit(global, per_client_loss[c.id], epsilon).included,
                            IndicatorRule::LocalModel => true,
                        },
                    }
                }
            })
            .collect();

        let local: Vec<Option<ParamVector>> = clients
            .par_iter()
            .map(|c| {
                if trains[c.id] {
                    let mut rng = client_rng(cfg, round, c.id);
                    local_update(&w, c, cfg.local_steps, t_start, cfg, &mut rng).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;

        let indicators: Vec<bool> = match (cfg.algorithm.policy(), cfg.indicator_rule) {
            (NonPriorityPolicy::LossMatching, IndicatorRule::LocalModel) => clients
                .par_iter()
                .map(|c| {
                    if c.is_priority {
                        return Ok(true);
                    }
                    match &local[c.id] {
                        Some(wk) => {
                            let fk = loss(wk, &c.objective(cfg.reg_lambda))?;
                            let f = global_loss(wk, clients, cfg.reg_lambda)?;
                            Ok(admit(f, fk, epsilon).included)
                        }
                        None => Ok(false),
                    }
                })
                .collect::<Result<_>>()?,
            _ => clients.iter().map(|c| c.is_priority || trains[c.id]).collect(),
        };

        let models: Vec<ParamVector> = local
            .into_iter()
            .map(|m| m.unwrap_or_else(|| w.clone()))
            .collect();
        w = if sample.is_empty() {
            aggregate(&models, &roster, &indicators)?
        } else {
            aggregate_partial(&models, &sample, &roster, &indicators)?
        };
        if !w.is_finite() {
            return Err(Error::Protocol(format!("aggregated model diverged at round {round}")));
        }
        logs.push(RoundLog {
            round,
            t_start,
            global_loss: global,
            per_client_loss,
            indicators,
            epsilon,
            eta,
            test_accuracy,
            participating_priority: sample,
        });
    }
    let final_global_loss = global_loss(&w, clients, cfg.reg_lambda)?;
    trajectory.push(final_global_loss);
    let final_test_accuracy = accuracy(&w, test_set)?;
    checkpoints.push(w.clone());
    Ok(FederationOutcome {
        logs,
        model: w,
        final_global_loss,
        final_test_accuracy,
        trajectory,
        local_models: None,
        checkpoints,
    })
}

fn run_local_only(
    clients: &[ClientSpec],
    cfg: &FederationConfig,
    test_set: &LabeledDataset,
    w0: ParamVector,
) -> Result<FederationOutcome> {
    let mut models: Vec<ParamVector> = vec![w0.clone(); clients.len()];
    let mut logs = Vec::with_capacity(cfg.rounds);
    let mut trajectory = Vec::with_capacity(cfg.rounds + 1);
    let evaluate = |models: &[ParamVector]| -> Result<(Vec<f64>, f64, f64)> {
        let losses: Vec<f64> = clients
            .par_iter()
            .map(|c| loss(&models[c.id], &c.objective(cfg.reg_lambda)))
            .collect::<Result<_>>()?;
        let accs: Vec<f64> = clients
            .par_iter()
            .map(|c| if c.is_priority { accuracy(&models[c.id], test_set) } else { Ok(0.0) })
            .collect::<Result<_>>()?;
        Ok((losses.clone(), priority_mean(clients, &losses), priority_mean(clients, &accs)))
    };
    for round in 0..cfg.rounds {
        let t_start = round * cfg.local_steps;
        let (per_client_loss, global, test_accuracy) = evaluate(&models)?;
        trajectory.push(global);
        models = clients
            .par_iter()
            .map(|c| {
                let mut rng = client_rng(cfg, round, c.id);
                local_update(&models[c.id], c, cfg.local_steps, t_start, cfg, &mut rng)
            })
            .collect::<Result<_>>()?;
        logs.push(RoundLog {
            round,
            t_start,
            global_loss: global,
            per_client_loss,
            indicators: clients.iter().map(|c| c.is_priority).collect(),
            epsilon: 0.0,
            eta: cfg.eta(t_start),
            test_accuracy,
            participating_priority: Vec::new(),
        });
    }
    let (_, final_global_loss, final_test_accuracy) = evaluate(&models)?;
    trajectory.push(final_global_loss);
    Ok(FederationOutcome {
        logs,
        model: w0,
        final_global_loss,
        final_test_accuracy,
        trajectory,
        local_models: Some(models),
        checkpoints: Vec::new(),
    })
}
