//! Seed-averaged comparison of finished experiment summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use fedalign::federation::Algorithm;
use serde::Serialize;

use crate::experiment::{ExperimentSummary, RunRecord};
use crate::CliError;

/// One algorithm's statistics over its successful runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlgorithmRow {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    /// Runs that reached the target loss.
    pub reached: usize,
    /// Mean and standard deviation over the runs that reached the target.
    pub rounds_mean: Option<f64>,
    pub rounds_sd: Option<f64>,
    pub accuracy_diff: f64,
    pub rounds_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub baseline: Algorithm,
    pub rows: Vec<AlgorithmRow>,
}

pub fn load_summary(path: &Path) -> Result<ExperimentSummary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Builds the table. Summaries must share their `data` and `federation`
/// settings; records repeated verbatim across summaries count once.
/// The baseline is FedAvgPriority when present, else the first algorithm in
/// enum order.
pub fn compare_report(summaries: &[ExperimentSummary]) -> Result<ComparisonTable, CliError> {
    let Some(first) = summaries.first() else {
        return Err(CliError::Runtime("compare needs at least one summary".into()));
    };
    for (i, s) in summaries.iter().enumerate().skip(1) {
        for section in ["data", "federation"] {
            if s.config.get(section) != first.config.get(section) {
                return Err(CliError::Runtime(format!(
                    "summary {i} ({}) has different {section} settings than summary 0 ({})",
                    s.name, first.name
                )));
            }
        }
    }

    let mut records: BTreeMap<(Algorithm, u64), &RunRecord> = BTreeMap::new();
    for r in summaries.iter().flat_map(|s| &s.records) {
        match records.get(&(r.algorithm, r.seed)) {
            Some(prev) if *prev != r => {
                return Err(CliError::Runtime(format!(
                    "conflicting records for {} seed {} across summaries",
                    r.algorithm, r.seed
                )))
            }
            Some(_) => {}
            None => {
                records.insert((r.algorithm, r.seed), r);
            }
        }
    }

    let mut by_alg: BTreeMap<Algorithm, Vec<&RunRecord>> = BTreeMap::new();
    for ((alg, _), r) in &records {
        by_alg.entry(*alg).or_default().push(r);
    }
    if by_alg.len() < 2 {
        return Err(CliError::Runtime(format!(
            "compare needs at least 2 algorithms, found {}",
            by_alg.len()
        )));
    }

    let mut rows = Vec::new();
    for (&algorithm, recs) in &by_alg {
        let acc: Vec<f64> = recs.iter().filter_map(|r| r.final_test_accuracy).collect();
        if acc.is_empty() {
            return Err(CliError::Runtime(format!("{algorithm} has no successful runs")));
        }
        let rounds: Vec<f64> = recs.iter().filter_map(|r| r.rounds_to_target.map(|x| x as f64)).collect();
        let (accuracy_mean, accuracy_sd) = mean_sd(&acc);
        let (rounds_mean, rounds_sd) = if rounds.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_sd(&rounds);
            (Some(m), Some(s))
        };
        rows.push(AlgorithmRow {
            algorithm,
            runs: acc.len(),
            accuracy_mean,
            accuracy_sd,
            reached: rounds.len(),
            rounds_mean,
            rounds_sd,
            accuracy_diff: 0.0,
            rounds_diff: None,
        });
    }
    let baseline = if by_alg.contains_key(&Algorithm::FedAvgPriority) { Algorithm::FedAvgPriority } else { rows[0].algorithm };
    let base = rows.iter().find(|r| r.algorithm == baseline).cloned().expect("baseline row exists");
    for row in &mut rows {
        row.accuracy_diff = row.accuracy_mean - base.accuracy_mean;
        row.rounds_diff = row.rounds_mean.zip(base.rounds_mean).map(|(a, b)| a - b);
    }
    Ok(ComparisonTable { baseline, rows })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

impl ComparisonTable {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>4} {:>18} {:>9} {:>16} {:>8} {:>10}",
            "algorithm", "runs", "accuracy", "acc_diff", "rounds", "reached", "rnd_diff"
        );
        for r in &self.rows {
            let rounds = match (r.rounds_mean, r.rounds_sd) {
                (Some(m), Some(s)) => format!("{m:.1} ± {s:.1}"),
                _ => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<16} {:>4} {:>18} {:>+9.4} {:>16} {:>8} {:>10}",
                r.algorithm.name(),
                r.runs,
                format!("{:.4} ± {:.4}", r.accuracy_mean, r.accuracy_sd),
                r.accuracy_diff,
                rounds,
                format!("{}/{}", r.reached, r.runs),
                r.rounds_diff.map_or_else(|| "-".to_string(), |d| format!("{d:+.1}")),
            );
        }
        let _ = writeln!(out, "differences are relative to {}", self.baseline.name());
        out
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "algorithm", "runs", "accuracy_mean", "accuracy_sd", "accuracy_diff", "reached", "rounds_mean",
            "rounds_sd", "rounds_diff",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.algorithm.name().to_string(),
                r.runs.to_string(),
                r.accuracy_mean.to_string(),
                r.accuracy_sd.to_string(),
                r.accuracy_diff.to_string(),
                r.reached.to_string(),
                opt(r.rounds_mean, 6),
                opt(r.rounds_sd, 6),
                opt(r.rounds_diff, 6),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
    }
}
