//! Runs every `(algorithm, seed)` pair of a config and writes the results.

use std::fs;

use fedalign::datagen::{shard_partition, synth_federation, SynthParams};
use fedalign::diagnostics::{
    estimate_noise, federation_gamma, theory_diagnostics, GammaReport, NoiseEstimate, OracleSettings,
    TheoryDiagnostics,
};
use fedalign::federation::{
    run_federation, weights, Algorithm, ClientSpec, FederationConfig, FederationOutcome, ParticipationMode,
};
use fedalign::objective::{accuracy, estimate_l_with, LabeledDataset, ParamVector};
use fedalign::rng::{derive_seed, derived};
use log::{info, warn};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, ExperimentConfig, Participation, Smoothness};
use crate::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SUMMARY_FILE: &str = "summary.json";

/// Clients and held-out data built from the `data` section.
pub struct Federation {
    pub clients: Vec<ClientSpec>,
    pub global_test: LabeledDataset,
    /// Held-out data of each priority client, in client-id order.
    pub priority_tests: Vec<LabeledDataset>,
}

pub fn build_federation(cfg: &ExperimentConfig) -> Result<Federation, CliError> {
    let data = &cfg.data;
    let f = data.test_fraction;
    match &data.source {
        DataSource::Synth { alpha, beta, features, classes, samples_per_client, n_clients, noise } => {
            let params = SynthParams {
                features: *features,
                classes: *classes,
                ..SynthParams::new(*alpha, *beta, *samples_per_client, *n_clients, data.seed)
            };
            let test_per_client = ((*samples_per_client as f64) * f / (1.0 - f)).round().max(1.0) as usize;
            let generated = synth_federation(&params, data.n_priority, noise, test_per_client)?;
            Ok(Federation {
                clients: generated.clients()?,
                global_test: generated.global_test()?,
                priority_tests: generated.priority_test,
            })
        }
        DataSource::CsvShards { path, classes, n_shards, shards_per_client } => {
            let ds = LabeledDataset::from_csv(path, *classes)?;
            let shards = shard_partition(&ds, *n_shards, *shards_per_client, &mut derived(data.seed, &[0x5a2d]))?;
            let mut members = Vec::with_capacity(shards.len());
            let mut priority_tests = Vec::new();
            for (k, shard) in shards.iter().enumerate() {
                let mut rows: Vec<usize> = (0..shard.len()).collect();
                rows.shuffle(&mut derived(data.seed, &[0x5b117, k as u64]));
                let n_test = (((shard.len() as f64) * f).round() as usize).min(shard.len().saturating_sub(1));
                let is_priority = k < data.n_priority;
                if is_priority {
                    priority_tests.push(shard.select(&rows[..n_test])?);
                }
                members.push((shard.select(&rows[n_test..])?, is_priority));
            }
            let global_test = LabeledDataset::concat(&priority_tests.iter().collect::<Vec<_>>())?;
            if global_test.is_empty() {
                return Err(CliError::Config(vec![
                    "data.test_fraction: leaves the priority clients without held-out rows".into(),
                ]));
            }
            Ok(Federation { clients: ClientSpec::roster(members)?, global_test, priority_tests })
        }
    }
}

/// Engine configuration for one run.
pub fn federation_config(cfg: &ExperimentConfig, clients: &[ClientSpec], algorithm: Algorithm, seed: u64) -> FederationConfig {
    let s = &cfg.federation;
    let mu = s.mu.unwrap_or(s.reg_lambda);
    let smoothness = match s.smoothness {
        Smoothness::Fixed(l) => l,
        Smoothness::Auto(bound) => clients
            .iter()
            .map(|c| estimate_l_with(&c.objective(s.reg_lambda), bound))
            .fold(mu, f64::max),
    };
    let n_priority = clients.iter().filter(|c| c.is_priority).count();
    let participation = match s.participation {
        Participation::Full => ParticipationMode::full(),
        Participation::Fraction(f) => ParticipationMode {
            priority_sample: Some(((f * n_priority as f64).round() as usize).clamp(1, n_priority)),
            nonpriority_probability: Some(f),
        },
        Participation::Explicit { priority_sample, nonpriority_probability } => {
            ParticipationMode { priority_sample, nonpriority_probability }
        }
    };
    let mut out = FederationConfig::new(algorithm, s.local_steps, s.rounds, s.reg_lambda, smoothness);
    out.batch_size = s.batch_size;
    out.mu = mu;
    out.epsilon = s.epsilon.clone();
    out.participation = participation;
    out.prox_mu = s.prox_mu;
    out.seed = seed;
    out.indicator_rule = s.indicator_rule;
    out.lr_schedule = s.learning_rate;
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub rounds_csv: String,
    pub final_test_accuracy: Option<f64>,
    pub final_global_loss: Option<f64>,
    pub rounds_to_target: Option<usize>,
    /// Accuracy on each priority client's own held-out data.
    pub per_client_test_accuracy: Vec<f64>,
    pub diagnostics: Option<TheoryDiagnostics>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmDiagnostics {
    pub algorithm: Algorithm,
    pub diagnostics: TheoryDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub artifact_version: String,
    pub name: String,
    pub complete: bool,
    pub target_loss: Option<f64>,
    pub f_star: Option<f64>,
    pub gamma: Option<f64>,
    pub records: Vec<RunRecord>,
    pub seed_averaged_diagnostics: Vec<AlgorithmDiagnostics>,
    pub config: serde_json::Value,
}

/// Smallest round after which the priority loss is at most `target`.
pub fn rounds_to_target(trajectory: &[f64], target: f64) -> Option<usize> {
    trajectory.iter().position(|&f| f <= target)
}

/// Round-log CSV: fixed columns, then `ind_k`, `loss_k` for every client.
pub fn rounds_csv(outcome: &FederationOutcome, clients: &[ClientSpec]) -> Result<Vec<u8>, CliError> {
    let roster = weights(clients);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["round", "t_start", "epsilon", "eta", "global_loss", "test_accuracy", "n_nonpriority_included"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    for k in 0..clients.len() {
        header.push(format!("ind_{k}"));
        header.push(format!("loss_{k}"));
    }
    writer.write_record(&header)?;
    for log in &outcome.logs {
        let mut row = vec![
            log.round.to_string(),
            log.t_start.to_string(),
            log.epsilon.to_string(),
            log.eta.to_string(),
            log.global_loss.to_string(),
            log.test_accuracy.to_string(),
            log.n_nonpriority_included(&roster).to_string(),
        ];
        for (ind, loss) in log.indicators.iter().zip(&log.per_client_loss) {
            row.push(u8::from(*ind).to_string());
            row.push(loss.to_string());
        }
        writer.write_record(&row)?;
    }
    writer.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

struct RunOutput {
    record: RunRecord,
    csv: Vec<u8>,
    outcome: Option<FederationOutcome>,
    noise: Option<NoiseEstimate>,
    fed_cfg: FederationConfig,
}

fn csv_name(algorithm: Algorithm, seed: u64) -> String {
    format!("{}_seed{seed}.csv", algorithm.name())
}

/// Up to `count` evenly spaced checkpoints, always including the last.
fn noise_points(outcome: &FederationOutcome, oracle: &GammaReport, count: usize) -> Vec<ParamVector> {
    let cps = &outcome.checkpoints;
    let mut points: Vec<ParamVector> = if cps.len() <= count {
        cps.clone()
    } else {
        (0..count).map(|i| cps[i * (cps.len() - 1) / (count - 1).max(1)].clone()).collect()
    };
    points.push(oracle.w_star.clone());
    points
}

fn run_one(
    cfg: &ExperimentConfig,
    fed: &Federation,
    oracle: Option<&GammaReport>,
    target: Option<f64>,
    algorithm: Algorithm,
    seed: u64,
) -> RunOutput {
    let fed_cfg = federation_config(cfg, &fed.clients, algorithm, seed);
    let mut record = RunRecord {
        algorithm,
        seed,
        rounds_csv: csv_name(algorithm, seed),
        final_test_accuracy: None,
        final_global_loss: None,
        rounds_to_target: None,
        per_client_test_accuracy: Vec::new(),
        diagnostics: None,
        error: None,
    };
    let result = (|| -> Result<(FederationOutcome, Vec<u8>, Option<NoiseEstimate>), CliError> {
        let outcome = run_federation(&fed.clients, &fed_cfg, &fed.global_test)?;
        let csv = rounds_csv(&outcome, &fed.clients)?;
        record.final_test_accuracy = Some(outcome.final_test_accuracy);
        record.final_global_loss = Some(outcome.final_global_loss);
        record.rounds_to_target = target.and_then(|t| rounds_to_target(&outcome.trajectory, t));
        let priority_ids = fed.clients.iter().filter(|c| c.is_priority).map(|c| c.id);
        record.per_client_test_accuracy = priority_ids
            .zip(&fed.priority_tests)
            .map(|(id, test)| {
                let model = outcome.local_models.as_ref().map_or(&outcome.model, |m| &m[id]);
                accuracy(model, test)
            })
            .collect::<Result<_, _>>()?;
        let mut noise = None;
        if let (Some(oracle), false) = (oracle, algorithm == Algorithm::LocalOnly) {
            let points = noise_points(&outcome, oracle, cfg.diagnostics.noise_points);
            let est = estimate_noise(
                &fed.clients,
                &points,
                fed_cfg.reg_lambda,
                fed_cfg.batch_size,
                cfg.diagnostics.noise_draws,
                derive_seed(seed, &[0x2015e]),
            )?;
            record.diagnostics =
                Some(theory_diagnostics(&[&outcome.logs], &fed.clients, &fed_cfg, oracle, est, fed_cfg.rounds)?);
            noise = Some(est);
        }
        Ok((outcome, csv, noise))
    })();
    match result {
        Ok((outcome, csv, noise)) => RunOutput { record, csv, outcome: Some(outcome), noise, fed_cfg },
        Err(e) => {
            warn!("{algorithm} seed {seed} failed: {e}");
            record.error = Some(e.to_string());
            RunOutput { record, csv: Vec::new(), outcome: None, noise: None, fed_cfg }
        }
    }
}

/// Runs the experiment, writes round CSVs and the summary into
/// `cfg.output_dir`, and returns the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary, CliError> {
    info!("building federation for {}", cfg.name);
    let fed = build_federation(cfg)?;
    let oracle = if cfg.diagnostics.enabled {
        let settings = OracleSettings { tol: cfg.diagnostics.oracle_tol, max_iter: cfg.diagnostics.oracle_max_iter };
        info!("solving oracle problems for {} clients", fed.clients.len());
        Some(federation_gamma(&fed.clients, cfg.federation.reg_lambda, settings)?)
    } else {
        None
    };
    let target = cfg.target_loss.or(oracle.as_ref().map(|o| cfg.diagnostics.target_factor * o.f_star));

    let jobs: Vec<(Algorithm, u64)> =
        cfg.algorithms.iter().flat_map(|&a| cfg.seeds.iter().map(move |&s| (a, s))).collect();
    let outputs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(algorithm, seed)| {
            info!("running {algorithm} with seed {seed}");
            run_one(cfg, &fed, oracle.as_ref(), target, algorithm, seed)
        })
        .collect();

    let mut seed_averaged = Vec::new();
    if let Some(oracle) = &oracle {
        for &algorithm in cfg.algorithms.iter().filter(|&&a| a != Algorithm::LocalOnly) {
            let runs: Vec<&RunOutput> =
                outputs.iter().filter(|o| o.record.algorithm == algorithm && o.outcome.is_some()).collect();
            let Some(first) = runs.first() else { continue };
            let logs: Vec<&[_]> = runs.iter().filter_map(|o| o.outcome.as_ref().map(|x| x.logs.as_slice())).collect();
            let noise = runs.iter().filter_map(|o| o.noise).fold(NoiseEstimate::default(), |a, n| NoiseEstimate {
                sigma_sq: a.sigma_sq.max(n.sigma_sq),
                g_sq: a.g_sq.max(n.g_sq),
            });
            let diagnostics =
                theory_diagnostics(&logs, &fed.clients, &first.fed_cfg, oracle, noise, first.fed_cfg.rounds)?;
            seed_averaged.push(AlgorithmDiagnostics { algorithm, diagnostics });
        }
    }

    fs::create_dir_all(&cfg.output_dir)?;
    for out in outputs.iter().filter(|o| o.outcome.is_some()) {
        fs::write(cfg.output_dir.join(&out.record.rounds_csv), &out.csv)?;
    }
    let summary = ExperimentSummary {
        artifact_version: ARTIFACT_VERSION.to_string(),
        name: cfg.name.clone(),
        complete: outputs.iter().all(|o| o.record.error.is_none()),
        target_loss: target,
        f_star: oracle.as_ref().map(|o| o.f_star),
        gamma: oracle.as_ref().map(|o| o.gamma),
        records: outputs.into_iter().map(|o| o.record).collect(),
        seed_averaged_diagnostics: seed_averaged,
        config: serde_json::to_value(cfg).map_err(|e| CliError::Runtime(e.to_string()))?,
    };
    let mut json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    fs::write(cfg.output_dir.join(SUMMARY_FILE), json)?;
    Ok(summary)
}
