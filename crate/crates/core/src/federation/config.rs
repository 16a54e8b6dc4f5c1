use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ParamVector;

/// Training algorithm of a federation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// FedAvg over the priority clients only.
    FedAvgPriority,
    /// FedAvg over every client, non-priority ones weighted by their data.
    FedAvgAll,
    /// FedAvg plus loss-matching admission of non-priority clients.
    #[serde(rename = "FedALIGN")]
    FedAlign,
    FedProxPriority,
    FedProxAll,
    #[serde(rename = "FedProxALIGN")]
    FedProxAlign,
    /// Every client trains alone; nothing is aggregated.
    LocalOnly,
}

/// What a round does with non-priority clients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonPriorityPolicy {
    Ignore,
    IncludeAll,
    LossMatching,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::FedAvgPriority,
        Algorithm::FedAvgAll,
        Algorithm::FedAlign,
        Algorithm::FedProxPriority,
        Algorithm::FedProxAll,
        Algorithm::FedProxAlign,
        Algorithm::LocalOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FedAvgPriority => "FedAvgPriority",
            Algorithm::FedAvgAll => "FedAvgAll",
            Algorithm::FedAlign => "FedALIGN",
            Algorithm::FedProxPriority => "FedProxPriority",
            Algorithm::FedProxAll => "FedProxAll",
            Algorithm::FedProxAlign => "FedProxALIGN",
            Algorithm::LocalOnly => "LocalOnly",
        }
    }

    pub fn is_prox(self) -> bool {
        matches!(
            self,
            Algorithm::FedProxPriority | Algorithm::FedProxAll | Algorithm::FedProxAlign
        )
    }

    pub fn policy(self) -> NonPriorityPolicy {
        match self {
            Algorithm::FedAvgPriority | Algorithm::FedProxPriority | Algorithm::LocalOnly => {
                NonPriorityPolicy::Ignore
            }
            Algorithm::FedAvgAll | Algorithm::FedProxAll => NonPriorityPolicy::IncludeAll,
            Algorithm::FedAlign | Algorithm::FedProxAlign => NonPriorityPolicy::LossMatching,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let valid: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::Config(format!("unknown algorithm {s:?}; valid values: {}", valid.join(", ")))
            })
    }
}

/// Admission threshold `ε` as a function of the round index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EpsilonSchedule {
    Constant { eps0: f64 },
    /// Falls linearly from `eps0` to zero at round `rounds`, then stays at zero.
    LinearDecay { eps0: f64, rounds: usize },
    /// Multiplies by `factor` every `every` rounds.
    StepDecay { eps0: f64, factor: f64, every: usize },
}

impl EpsilonSchedule {
    pub fn constant(eps0: f64) -> Self {
        EpsilonSchedule::Constant { eps0 }
    }

    pub fn at(&self, round: usize) -> f64 {
        match *self {
            EpsilonSchedule::Constant { eps0 } => eps0,
            EpsilonSchedule::LinearDecay { eps0, rounds } => {
                if rounds == 0 || round >= rounds {
                    0.0
                } else {
                    eps0 * (1.0 - round as f64 / rounds as f64)
                }
            }
            EpsilonSchedule::StepDecay { eps0, factor, every } => {
                eps0 * factor.powi((round / every.max(1)) as i32)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EpsilonSchedule::Constant { eps0 } | EpsilonSchedule::LinearDecay { eps0, .. } => {
                eps0 >= 0.0 && eps0.is_finite()
            }
            EpsilonSchedule::StepDecay { eps0, factor, every } => {
                eps0 >= 0.0 && eps0.is_finite() && (0.0..=1.0).contains(&factor) && every >= 1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid epsilon schedule {self:?}")))
        }
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule::Constant { eps0: 0.0 }
    }
}

/// Which clients take part in a round.
///
/// Priority clients either all participate or are sampled `K` times with
/// replacement in proportion to `p_k`. Independently, each non-priority
/// client may be available only with probability `p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParticipationMode {
    pub priority_sample: Option<usize>,
    pub nonpriority_probability: Option<f64>,
}

impl ParticipationMode {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn partial_priority(k: usize) -> Self {
        Self { priority_sample: Some(k), nonpriority_probability: None }
    }

    pub fn bernoulli_nonpriority(p: f64) -> Self {
        Self { priority_sample: None, nonpriority_probability: Some(p) }
    }

    pub fn with_bernoulli_nonpriority(self, p: f64) -> Self {
        Self { nonpriority_probability: Some(p), ..self }
    }

    pub fn is_partial(&self) -> bool {
        self.priority_sample.is_some()
    }
}

/// Model at which the admission condition is evaluated.
/// Step-size rule for local SGD.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LrSchedule {
    /// `η_t = 2 / (μ (t + γ))`, see [`lr`].
    #[default]
    Theorem,
    Constant { eta: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorRule {
    /// Losses of the broadcast global model, fixed for the whole round.
    #[default]
    Broadcast,
    /// `|F_k(w^k) − F(w^k)|` at the client's trained local model.
    LocalModel,
}

/// Everything that determines a federation run apart from the clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    pub algorithm: Algorithm,
    /// Local SGD steps between aggregations (`E`).
    pub local_steps: usize,
    pub rounds: usize,
    /// Clamped to each client's sample count.
    pub batch_size: usize,
    /// L2 coefficient of every local objective.
    pub reg_lambda: f64,
    /// Strong-convexity constant of the learning-rate schedule.
    pub mu: f64,
    /// Smoothness constant of the learning-rate schedule.
    pub smoothness: f64,
    pub epsilon: EpsilonSchedule,
    pub participation: ParticipationMode,
    pub prox_mu: f64,
    pub seed: u64,
    /// Initial global model; zeros when absent.
    pub w0: Option<ParamVector>,
    pub indicator_rule: IndicatorRule,
    pub lr_schedule: LrSchedule,
}

impl FederationConfig {
    /// Config with `μ = reg_lambda`, constant zero `ε` and full participation.
    pub fn new(algorithm: Algorithm, local_steps: usize, rounds: usize, reg_lambda: f64, smoothness: f64) -> Self {
        Self {
            algorithm,
            local_steps,
            rounds,
            batch_size: 10,
            reg_lambda,
            mu: reg_lambda,
            smoothness,
            epsilon: EpsilonSchedule::default(),
            participation: ParticipationMode::full(),
            prox_mu: 0.0,
            seed: 0,
            w0: None,
            indicator_rule: IndicatorRule::Broadcast,
            lr_schedule: LrSchedule::Theorem,
        }
    }

    /// Step size at global local-iteration `t`.
    pub fn eta(&self, t: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Theorem => lr(t, self.mu, self.smoothness, self.local_steps),
            LrSchedule::Constant { eta } => eta,
        }
    }

    pub fn validate(&self, n_priority: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.local_steps == 0 {
            problems.push("local_steps must be >= 1".to_string());
        }
        if self.rounds == 0 {
            problems.push("rounds must be >= 1".to_string());
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be >= 1".to_string());
        }
        if !(self.reg_lambda >= 0.0 && self.reg_lambda.is_finite()) {
            problems.push("reg_lambda must be finite and >= 0".to_string());
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            problems.push(format!("mu must be positive for the learning-rate schedule, got {}", self.mu));
        }
        if !(self.smoothness >= self.mu && self.smoothness.is_finite()) {
            problems.push(format!("smoothness {} must be finite and >= mu {}", self.smoothness, self.mu));
        }
        if !(self.prox_mu >= 0.0 && self.prox_mu.is_finite()) {
            problems.push("prox_mu must be finite and >= 0".to_string());
        }
        if let LrSchedule::Constant { eta } = self.lr_schedule {
            if !(eta > 0.0 && eta.is_finite()) {
                problems.push(format!("constant learning rate must be positive, got {eta}"));
            }
        }
        if let Err(e) = self.epsilon.validate() {
            problems.push(e.to_string());
        }
        if let Some(k) = self.participation.priority_sample {
            if k == 0 || k > n_priority {
                problems.push(format!("priority sample size {k} must lie in 1..={n_priority}"));
            }
        }
        if let Some(p) = self.participation.nonpriority_probability {
            if !(0.0..=1.0).contains(&p) {
                problems.push(format!("non-priority participation probability {p} outside [0, 1]"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// `γ = max(8L/μ, E)` of the decaying schedule.
pub fn lr_offset(mu: f64, smoothness: f64, local_steps: usize) -> f64 {
    (8.0 * smoothness / mu).max(local_steps as f64)
}

/// `η_t = 2 / (μ (t + γ))`.
pub fn lr(t: usize, mu: f64, smoothness: f64, local_steps: usize) -> f64 {
    2.0 / (mu * (t as f64 + lr_offset(mu, smoothness, local_steps)))
}
