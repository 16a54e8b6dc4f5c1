//! Example configs shipped inside the binary.

use std::path::Path;

use crate::config::{parse_config_str, ExperimentConfig};
use crate::CliError;

/// `(name, TOML text)` for every bundled config.
pub const PRESETS: &[(&str, &str)] = &[
    ("synth-low-noise", include_str!("../configs/synth-low-noise.toml")),
    ("synth-medium-noise", include_str!("../configs/synth-medium-noise.toml")),
    ("synth-high-noise", include_str!("../configs/synth-high-noise.toml")),
    ("full-participation", include_str!("../configs/full-participation.toml")),
    ("partial", include_str!("../configs/partial.toml")),
    ("fedprox", include_str!("../configs/fedprox.toml")),
    ("local-comparison", include_str!("../configs/local-comparison.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load_preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let text = preset_text(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Config(vec![format!("unknown preset {name:?}; available: {}", names.join(", "))])
    })?;
    parse_config_str(text, Path::new("."))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DataSource, Participation};

    #[test]
    fn every_preset_parses() {
        for (name, _) in PRESETS {
            let cfg = load_preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, *name);
        }
    }

    #[test]
    fn low_noise_preset_levels() {
        let cfg = load_preset("synth-low-noise").unwrap();
        let DataSource::Synth { alpha, beta, features, classes, noise, .. } = cfg.data.source else {
            panic!("expected synthetic data");
        };
        assert_eq!((alpha, beta, features, classes), (1.0, 1.0, 60, 10));
        assert_eq!(noise.label_noise_factor, 2.5);
        assert_eq!(noise.random_data_fraction_factor, 1.0);
        assert_eq!(noise.label_noise_skew, 0.5);
        assert_eq!(noise.random_data_fraction_skew, 0.5);
        assert_eq!(cfg.federation.local_steps, 5);
        assert_eq!(cfg.federation.epsilon.at(0), 0.2);
    }

    #[test]
    fn participation_and_prox_presets() {
        let full = load_preset("full-participation").unwrap();
        assert_eq!((full.data.n_priority, full.data.source.n_clients()), (2, 60));
        let partial = load_preset("partial").unwrap();
        assert_eq!(partial.data.n_priority, 18);
        assert_eq!(partial.federation.participation, Participation::Fraction(0.3));
        let prox = load_preset("fedprox").unwrap();
        assert_eq!((prox.data.n_priority, prox.data.source.n_clients() - 4), (4, 60));
        assert_eq!(prox.federation.prox_mu, 1.0);
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = load_preset("nope").unwrap_err().to_string();
        assert!(err.contains("synth-low-noise") && err.contains("partial"));
    }
}
