//! Experiment files.
//!
//! A config is a TOML document with four tables. Every key has a default
//! except `data.n_clients` and `data.n_priority` for synthetic data and
//! `data.path` for CSV data:
//!
//! ```toml
//! name = "example"
//! algorithms = ["FedAvgPriority", "FedALIGN"]
//! seeds = [0, 1]
//! output_dir = "out/example"
//! target_loss = 0.5            # optional; defaults to target_factor·F*
//!
//! [data]
//! source = "synth"             # or "csv"
//! n_clients = 32
//! n_priority = 2
//! alpha = 1.0
//! beta = 1.0
//! features = 60
//! classes = 10
//! samples_per_client = 200
//! test_fraction = 0.2
//! seed = 1
//! noise = "low"                # "none", "low", "medium", "high" or a table
//!
//! [federation]
//! local_steps = 5
//! rounds = 100
//! batch_size = 10
//! reg_lambda = 0.1
//! smoothness = "auto"          # "auto", "spectral" or a number
//! learning_rate = "theorem"    # or a constant step size
//! epsilon = 0.2                # or { kind = "linear-decay", eps0 = 0.2, rounds = 50 }
//! participation = "full"       # or { fraction = 0.3 } or { priority_sample = 5 }
//! prox_mu = 0.0
//! indicator_rule = "broadcast" # or "local-model"
//!
//! [diagnostics]
//! enabled = true
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fedalign::datagen::{NoiseProfile, NoiseSeverity, DEFAULT_CLASSES, DEFAULT_FEATURES};
use fedalign::federation::{Algorithm, EpsilonSchedule, IndicatorRule, LrSchedule};
use fedalign::objective::SmoothnessBound;
use serde::Serialize;
use toml::{Table, Value};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub target_loss: Option<f64>,
    pub data: DataConfig,
    pub federation: FederationSettings,
    pub diagnostics: DiagnosticsSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataConfig {
    pub source: DataSource,
    pub n_priority: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Synth {
        alpha: f64,
        beta: f64,
        features: usize,
        classes: usize,
        samples_per_client: usize,
        n_clients: usize,
        noise: NoiseProfile,
    },
    CsvShards {
        path: PathBuf,
        classes: Option<usize>,
        n_shards: usize,
        shards_per_client: usize,
    },
}

impl DataSource {
    pub fn n_clients(&self) -> usize {
        match self {
            DataSource::Synth { n_clients, .. } => *n_clients,
            DataSource::CsvShards { n_shards, shards_per_client, .. } => n_shards / shards_per_client.max(&1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothness {
    Auto(SmoothnessBound),
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Participation {
    Full,
    /// `K = round(f·|P|)` sampled priority clients and availability `f` for the rest.
    Fraction(f64),
    Explicit {
        priority_sample: Option<usize>,
        nonpriority_probability: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FederationSettings {
    pub local_steps: usize,
    pub rounds: usize,
    pub batch_size: usize,
    pub reg_lambda: f64,
    pub mu: Option<f64>,
    pub smoothness: Smoothness,
    pub learning_rate: LrSchedule,
    pub epsilon: EpsilonSchedule,
    pub participation: Participation,
    pub prox_mu: f64,
    pub indicator_rule: IndicatorRule,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsSettings {
    pub enabled: bool,
    pub oracle_tol: f64,
    pub oracle_max_iter: usize,
    pub target_factor: f64,
    pub noise_draws: usize,
    pub noise_points: usize,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            oracle_tol: 1e-8,
            oracle_max_iter: 200_000,
            target_factor: 1.05,
            noise_draws: 20,
            noise_points: 10,
        }
    }
}

/// Collects every problem found while walking the document.
struct Walker {
    errors: Vec<String>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Walker {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn allow(&mut self, table: &Table, path: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.err(&join(path, key), format!("unknown key (expected one of: {})", allowed.join(", ")));
            }
        }
    }

    fn float(&mut self, table: &Table, path: &str, key: &str, default: f64) -> f64 {
        self.opt_float(table, path, key).unwrap_or(default)
    }

    fn opt_float(&mut self, table: &Table, path: &str, key: &str) -> Option<f64> {
        match table.get(key) {
            None => None,
            Some(Value::Float(f)) => Some(*f),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(other) => {
                self.err(&join(path, key), format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn int(&mut self, table: &Table, path: &str, key: &str, default: u64) -> u64 {
        self.opt_int(table, path, key).unwrap_or(default)
    }

    fn opt_int(&mut self, table: &Table, path: &str, key: &str) -> Option<u64> {
        match table.get(key) {
            None => None,
            Some(v) => self.as_int(v, &join(path, key)),
        }
    }

    fn as_int(&mut self, v: &Value, path: &str) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.err(path, format!("expected a non-negative integer, found {i}"));
                None
            }
            other => {
                self.err(path, format!("expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn required_int(&mut self, table: &Table, path: &str, key: &str) -> u64 {
        if !table.contains_key(key) {
            self.err(&join(path, key), "missing required key");
        }
        self.int(table, path, key, 0)
    }

    fn string(&mut self, table: &Table, path: &str, key: &str) -> Option<String> {
        match table.get(key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(other) => {
                self.err(&join(path, key), format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn boolean(&mut self, table: &Table, path: &str, key: &str, default: bool) -> bool {
        match table.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.err(&join(path, key), format!("expected a boolean, found {}", other.type_str()));
                default
            }
        }
    }

    fn table<'t>(&mut self, table: &'t Table, path: &str, key: &str) -> Option<&'t Table> {
        match table.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                self.err(&join(path, key), format!("expected a table, found {}", other.type_str()));
                None
            }
        }
    }

    fn check(&mut self, ok: bool, path: &str, msg: impl std::fmt::Display) {
        if !ok {
            self.err(path, msg);
        }
    }
}

pub const DEFAULT_ALGORITHMS: [Algorithm; 2] = [Algorithm::FedAvgPriority, Algorithm::FedAlign];

/// Reads and validates a config file. Relative data paths resolve against
/// the file's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig, CliError> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(vec![format!("invalid TOML: {}", e.message())]))?;
    let mut w = Walker { errors: Vec::new() };
    w.allow(&doc, "", &["name", "algorithms", "seeds", "output_dir", "target_loss", "data", "federation", "diagnostics"]);

    let name = w.string(&doc, "", "name").unwrap_or_else(|| "experiment".to_string());
    let algorithms = parse_algorithms(&mut w, &doc);
    let seeds = match doc.get("seeds") {
        None => vec![0],
        Some(Value::Array(items)) => {
            let seeds: Vec<u64> = items
                .iter()
                .enumerate()
                .filter_map(|(i, v)| w.as_int(v, &format!("seeds[{i}]")))
                .collect();
            w.check(!items.is_empty(), "seeds", "needs at least one seed");
            seeds
        }
        Some(other) => {
            w.err("seeds", format!("expected an array of integers, found {}", other.type_str()));
            vec![0]
        }
    };
    let output_dir = PathBuf::from(w.string(&doc, "", "output_dir").unwrap_or_else(|| format!("fedalign-out/{name}")));
    let target_loss = w.opt_float(&doc, "", "target_loss");
    if let Some(t) = target_loss {
        w.check(t.is_finite(), "target_loss", "must be finite");
    }

    let empty = Table::new();
    let data_table = w.table(&doc, "", "data");
    if data_table.is_none() && !doc.contains_key("data") {
        w.err("data", "missing required table");
    }
    let data = parse_data(&mut w, data_table.unwrap_or(&empty), base_dir);
    let federation = parse_federation(&mut w, w_table(&doc, "federation").unwrap_or(&empty));
    let diagnostics = parse_diagnostics(&mut w, w_table(&doc, "diagnostics").unwrap_or(&empty));
    if doc.get("federation").is_some_and(|v| !v.is_table()) {
        w.err("federation", "expected a table");
    }
    if doc.get("diagnostics").is_some_and(|v| !v.is_table()) {
        w.err("diagnostics", "expected a table");
    }

    if federation.mu.is_none() && federation.reg_lambda == 0.0 && federation.learning_rate == LrSchedule::Theorem {
        w.err("federation.mu", "must be set when reg_lambda is 0 and the theorem learning rate is used");
    }
    if let (Participation::Explicit { priority_sample: Some(k), .. }, true) = (&federation.participation, data.n_priority > 0) {
        w.check(
            *k <= data.n_priority,
            "federation.participation.priority_sample",
            format!("{k} exceeds data.n_priority ({})", data.n_priority),
        );
    }

    if w.errors.is_empty() {
        Ok(ExperimentConfig { name, algorithms, seeds, output_dir, target_loss, data, federation, diagnostics })
    } else {
        Err(CliError::Config(w.errors))
    }
}

fn w_table<'t>(doc: &'t Table, key: &str) -> Option<&'t Table> {
    doc.get(key).and_then(Value::as_table)
}

fn parse_algorithms(w: &mut Walker, doc: &Table) -> Vec<Algorithm> {
    match doc.get("algorithms") {
        None => DEFAULT_ALGORITHMS.to_vec(),
        Some(Value::Array(items)) => {
            w.check(!items.is_empty(), "algorithms", "needs at least one algorithm");
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("algorithms[{i}]");
                match item.as_str().map(str::parse::<Algorithm>) {
                    Some(Ok(a)) => {
                        if seen.insert(a) {
                            out.push(a);
                        } else {
                            w.err(&path, format!("{a} listed twice"));
                        }
                    }
                    Some(Err(e)) => w.err(&path, e.to_string().trim_start_matches("configuration error: ")),
                    None => w.err(&path, format!("expected a string, found {}", item.type_str())),
                }
            }
            out
        }
        Some(other) => {
            w.err("algorithms", format!("expected an array of strings, found {}", other.type_str()));
            Vec::new()
        }
    }
}

fn parse_data(w: &mut Walker, t: &Table, base_dir: &Path) -> DataConfig {
    let p = "data";
    let source = w.string(t, p, "source").unwrap_or_else(|| "synth".to_string());
    let n_priority = w.required_int(t, p, "n_priority") as usize;
    let test_fraction = w.float(t, p, "test_fraction", 0.2);
    w.check(test_fraction > 0.0 && test_fraction < 1.0, "data.test_fraction", format!("{test_fraction} must lie in (0, 1)"));
    let seed = w.int(t, p, "seed", 0);
    let common = ["source", "n_priority", "test_fraction", "seed"];
    let source = match source.as_str() {
        "synth" => {
            w.allow(t, p, &[&common[..], &["n_clients", "alpha", "beta", "features", "classes", "samples_per_client", "noise"]].concat());
            let n_clients = w.required_int(t, p, "n_clients") as usize;
            let alpha = w.float(t, p, "alpha", 1.0);
            let beta = w.float(t, p, "beta", 1.0);
            let features = w.int(t, p, "features", DEFAULT_FEATURES as u64) as usize;
            let classes = w.int(t, p, "classes", DEFAULT_CLASSES as u64) as usize;
            let samples_per_client = w.int(t, p, "samples_per_client", 200) as usize;
            w.check(alpha >= 0.0 && alpha.is_finite(), "data.alpha", "must be finite and >= 0");
            w.check(beta >= 0.0 && beta.is_finite(), "data.beta", "must be finite and >= 0");
            w.check(features >= 1, "data.features", "must be >= 1");
            w.check(classes >= 2, "data.classes", "must be >= 2");
            w.check(samples_per_client >= 1, "data.samples_per_client", "must be >= 1");
            w.check(
                n_priority >= 1 && n_priority <= n_clients,
                "data.n_priority",
                format!("{n_priority} must lie in 1..=data.n_clients ({n_clients})"),
            );
            let noise = parse_noise(w, t);
            DataSource::Synth { alpha, beta, features, classes, samples_per_client, n_clients, noise }
        }
        "csv" => {
            w.allow(t, p, &[&common[..], &["path", "classes", "n_shards", "shards_per_client"]].concat());
            let path = match w.string(t, p, "path") {
                Some(s) => base_dir.join(s),
                None => {
                    w.err("data.path", "missing required key for csv data");
                    PathBuf::new()
                }
            };
            let classes = w.opt_int(t, p, "classes").map(|c| c as usize);
            let n_shards = w.required_int(t, p, "n_shards") as usize;
            let shards_per_client = w.int(t, p, "shards_per_client", 2) as usize;
            w.check(n_shards >= 1, "data.n_shards", "must be >= 1");
            w.check(shards_per_client >= 1, "data.shards_per_client", "must be >= 1");
            if n_shards >= 1 && shards_per_client >= 1 {
                w.check(
                    n_shards % shards_per_client == 0,
                    "data.n_shards",
                    format!("{n_shards} is not a multiple of data.shards_per_client ({shards_per_client})"),
                );
                let n_clients = n_shards / shards_per_client;
                w.check(
                    n_priority >= 1 && n_priority <= n_clients,
                    "data.n_priority",
                    format!("{n_priority} must lie in 1..={n_clients} (data.n_shards / data.shards_per_client)"),
                );
            }
            DataSource::CsvShards { path, classes, n_shards, shards_per_client }
        }
        other => {
            w.err("data.source", format!("unknown source {other:?}; valid values: synth, csv"));
            DataSource::Synth {
                alpha: 1.0,
                beta: 1.0,
                features: DEFAULT_FEATURES,
                classes: DEFAULT_CLASSES,
                samples_per_client: 1,
                n_clients: 1,
                noise: NoiseProfile::NONE,
            }
        }
    };
    DataConfig { source, n_priority, test_fraction, seed }
}

fn parse_noise(w: &mut Walker, t: &Table) -> NoiseProfile {
    let p = "data.noise";
    match t.get("noise") {
        None => NoiseProfile::NONE,
        Some(Value::String(s)) => match s.as_str() {
            "none" => NoiseProfile::NONE,
            "low" => NoiseProfile::preset(NoiseSeverity::Low),
            "medium" => NoiseProfile::preset(NoiseSeverity::Medium),
            "high" => NoiseProfile::preset(NoiseSeverity::High),
            other => {
                w.err(p, format!("unknown preset {other:?}; valid values: none, low, medium, high"));
                NoiseProfile::NONE
            }
        },
        Some(Value::Table(nt)) => {
            w.allow(nt, p, &["label_noise_factor", "label_noise_skew", "random_data_fraction_factor", "random_data_fraction_skew"]);
            let profile = NoiseProfile {
                label_noise_factor: w.float(nt, p, "label_noise_factor", 0.0),
                label_noise_skew: w.float(nt, p, "label_noise_skew", 1.0),
                random_data_fraction_factor: w.float(nt, p, "random_data_fraction_factor", 0.0),
                random_data_fraction_skew: w.float(nt, p, "random_data_fraction_skew", 1.0),
            };
            if let Err(e) = profile.validate() {
                w.err(p, e.to_string().trim_start_matches("configuration error: "));
            }
            profile
        }
        Some(other) => {
            w.err(p, format!("expected a preset name or a table, found {}", other.type_str()));
            NoiseProfile::NONE
        }
    }
}

fn parse_federation(w: &mut Walker, t: &Table) -> FederationSettings {
    let p = "federation";
    w.allow(
        t,
        p,
        &[
            "local_steps", "rounds", "batch_size", "reg_lambda", "mu", "smoothness", "learning_rate", "epsilon",
            "participation", "prox_mu", "indicator_rule",
        ],
    );
    let local_steps = w.int(t, p, "local_steps", 5) as usize;
    let rounds = w.int(t, p, "rounds", 50) as usize;
    let batch_size = w.int(t, p, "batch_size", 10) as usize;
    let reg_lambda = w.float(t, p, "reg_lambda", 0.1);
    let mu = w.opt_float(t, p, "mu");
    let prox_mu = w.float(t, p, "prox_mu", 0.0);
    w.check(local_steps >= 1, "federation.local_steps", "must be >= 1");
    w.check(rounds >= 1, "federation.rounds", "must be >= 1");
    w.check(batch_size >= 1, "federation.batch_size", "must be >= 1");
    w.check(reg_lambda >= 0.0 && reg_lambda.is_finite(), "federation.reg_lambda", "must be finite and >= 0");
    if let Some(m) = mu {
        w.check(m > 0.0 && m.is_finite(), "federation.mu", "must be finite and > 0");
    }
    w.check(prox_mu >= 0.0 && prox_mu.is_finite(), "federation.prox_mu", "must be finite and >= 0");

    let smoothness = match t.get("smoothness") {
        None => Smoothness::Auto(SmoothnessBound::RowNorm),
        Some(Value::String(s)) if s == "auto" => Smoothness::Auto(SmoothnessBound::RowNorm),
        Some(Value::String(s)) if s == "spectral" => Smoothness::Auto(SmoothnessBound::Spectral),
        Some(v @ (Value::Float(_) | Value::Integer(_))) => {
            let l = v.as_float().unwrap_or_else(|| v.as_integer().unwrap_or(0) as f64);
            w.check(l > 0.0 && l.is_finite(), "federation.smoothness", "must be finite and > 0");
            Smoothness::Fixed(l)
        }
        Some(other) => {
            w.err("federation.smoothness", format!("expected \"auto\", \"spectral\" or a number, found {other}"));
            Smoothness::Auto(SmoothnessBound::RowNorm)
        }
    };
    let learning_rate = match t.get("learning_rate") {
        None => LrSchedule::Theorem,
        Some(Value::String(s)) if s == "theorem" => LrSchedule::Theorem,
        Some(v @ (Value::Float(_) | Value::Integer(_))) => {
            let eta = v.as_float().unwrap_or_else(|| v.as_integer().unwrap_or(0) as f64);
            w.check(eta > 0.0 && eta.is_finite(), "federation.learning_rate", "must be finite and > 0");
            LrSchedule::Constant { eta }
        }
        Some(other) => {
            w.err("federation.learning_rate", format!("expected \"theorem\" or a number, found {other}"));
            LrSchedule::Theorem
        }
    };
    let epsilon = parse_epsilon(w, t);
    let participation = parse_participation(w, t);
    let indicator_rule = match w.string(t, p, "indicator_rule").as_deref() {
        None | Some("broadcast") => IndicatorRule::Broadcast,
        Some("local-model") => IndicatorRule::LocalModel,
        Some(other) => {
            w.err("federation.indicator_rule", format!("unknown rule {other:?}; valid values: broadcast, local-model"));
            IndicatorRule::Broadcast
        }
    };
    FederationSettings {
        local_steps,
        rounds,
        batch_size,
        reg_lambda,
        mu,
        smoothness,
        learning_rate,
        epsilon,
        participation,
        prox_mu,
        indicator_rule,
    }
}

fn parse_epsilon(w: &mut Walker, t: &Table) -> EpsilonSchedule {
    let p = "federation.epsilon";
    let schedule = match t.get("epsilon") {
        None => EpsilonSchedule::constant(0.2),
        Some(Value::Float(_) | Value::Integer(_)) => EpsilonSchedule::constant(w.float(t, "federation", "epsilon", 0.2)),
        Some(Value::Table(et)) => {
            let kind = w.string(et, p, "kind").unwrap_or_else(|| "constant".to_string());
            let eps0 = w.float(et, p, "eps0", 0.2);
            match kind.as_str() {
                "constant" => {
                    w.allow(et, p, &["kind", "eps0"]);
                    EpsilonSchedule::Constant { eps0 }
                }
                "linear-decay" => {
                    w.allow(et, p, &["kind", "eps0", "rounds"]);
                    EpsilonSchedule::LinearDecay { eps0, rounds: w.int(et, p, "rounds", 1) as usize }
                }
                "step-decay" => {
                    w.allow(et, p, &["kind", "eps0", "factor", "every"]);
                    EpsilonSchedule::StepDecay {
                        eps0,
                        factor: w.float(et, p, "factor", 0.5),
                        every: w.int(et, p, "every", 1) as usize,
                    }
                }
                other => {
                    w.err(
                        &join(p, "kind"),
                        format!("unknown schedule {other:?}; valid values: constant, linear-decay, step-decay"),
                    );
                    EpsilonSchedule::constant(eps0)
                }
            }
        }
        Some(other) => {
            w.err(p, format!("expected a number or a table, found {}", other.type_str()));
            EpsilonSchedule::constant(0.2)
        }
    };
    if let Err(e) = schedule.validate() {
        w.err(p, e.to_string().trim_start_matches("configuration error: "));
    }
    schedule
}

fn parse_participation(w: &mut Walker, t: &Table) -> Participation {
    let p = "federation.participation";
    match t.get("participation") {
        None => Participation::Full,
        Some(Value::String(s)) if s == "full" => Participation::Full,
        Some(Value::Table(pt)) => {
            w.allow(pt, p, &["fraction", "priority_sample", "nonpriority_probability"]);
            if let Some(f) = w.opt_float(pt, p, "fraction") {
                w.check(f > 0.0 && f <= 1.0, &join(p, "fraction"), format!("{f} must lie in (0, 1]"));
                if pt.contains_key("priority_sample") || pt.contains_key("nonpriority_probability") {
                    w.err(p, "fraction cannot be combined with priority_sample or nonpriority_probability");
                }
                return Participation::Fraction(f);
            }
            let priority_sample = w.opt_int(pt, p, "priority_sample").map(|k| k as usize);
            let nonpriority_probability = w.opt_float(pt, p, "nonpriority_probability");
            if let Some(k) = priority_sample {
                w.check(k >= 1, &join(p, "priority_sample"), "must be >= 1");
            }
            if let Some(q) = nonpriority_probability {
                w.check((0.0..=1.0).contains(&q), &join(p, "nonpriority_probability"), format!("{q} must lie in [0, 1]"));
            }
            Participation::Explicit { priority_sample, nonpriority_probability }
        }
        Some(other) => {
            w.err(p, format!("expected \"full\" or a table, found {other}"));
            Participation::Full
        }
    }
}

fn parse_diagnostics(w: &mut Walker, t: &Table) -> DiagnosticsSettings {
    let p = "diagnostics";
    w.allow(t, p, &["enabled", "oracle_tol", "oracle_max_iter", "target_factor", "noise_draws", "noise_points"]);
    let d = DiagnosticsSettings::default();
    let out = DiagnosticsSettings {
        enabled: w.boolean(t, p, "enabled", d.enabled),
        oracle_tol: w.float(t, p, "oracle_tol", d.oracle_tol),
        oracle_max_iter: w.int(t, p, "oracle_max_iter", d.oracle_max_iter as u64) as usize,
        target_factor: w.float(t, p, "target_factor", d.target_factor),
        noise_draws: w.int(t, p, "noise_draws", d.noise_draws as u64) as usize,
        noise_points: w.int(t, p, "noise_points", d.noise_points as u64) as usize,
    };
    w.check(out.oracle_tol > 0.0, "diagnostics.oracle_tol", "must be > 0");
    w.check(out.target_factor >= 1.0, "diagnostics.target_factor", "must be >= 1");
    w.check(out.noise_draws >= 1, "diagnostics.noise_draws", "must be >= 1");
    w.check(out.noise_points >= 1, "diagnostics.noise_points", "must be >= 1");
    out
}
