//! Federated training with prioritized clients.

pub mod aggregate;
pub mod client;
pub mod config;
pub mod engine;
pub mod selection;

pub use aggregate::{admitted_mass, aggregate, aggregate_partial, sample_priority};
pub use client::{validate_roster, weights, ClientSpec, ClientWeight};
pub use config::{
    lr, lr_offset, Algorithm, EpsilonSchedule, FederationConfig, IndicatorRule, LrSchedule, NonPriorityPolicy,
    ParticipationMode,
};
pub use engine::{global_loss, local_update, run_federation, FederationOutcome, RoundLog};
pub use selection::{admit, client_opt_in, include_nonpriority, Admission};
