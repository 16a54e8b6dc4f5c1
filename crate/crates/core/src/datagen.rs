//! Synthetic heterogeneous clients, non-priority noise, and shard partitioning.
//!
//! Each synthetic client `k` owns a random softmax-linear labeller and a
//! feature distribution:
//!
//! * `u_k ~ N(0, α)`, then every entry of `W_k` (`C × d`) and `b_k` is
//!   drawn from `N(u_k, 1)`;
//! * `B_k ~ N(0, β)`, then every entry of the mean `v_k` is drawn from
//!   `N(B_k, 1)`;
//! * `x ~ N(v_k, Σ)` with diagonal covariance `Σ_jj = j^(-1.2)`, and
//!   `y = argmax(W_k x + b_k)`.
//!
//! `α` and `β` are used as the standard deviation of the outer draw. All
//! Gaussian draws use the Ziggurat sampler behind `rand_distr::StandardNormal`
//! over ChaCha8 streams, so a seed fixes every dataset bit-for-bit.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::ClientSpec;
use crate::objective::LabeledDataset;
use crate::rng::{derived, RngState};

pub const DEFAULT_FEATURES: usize = 60;
pub const DEFAULT_CLASSES: usize = 10;

/// Parameters of the `Synth(α, β)` family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub alpha: f64,
    pub beta: f64,
    pub features: usize,
    pub classes: usize,
    pub samples_per_client: usize,
    pub n_clients: usize,
    pub seed: u64,
    /// Every client reuses client 0's labeller and feature mean.
    #[serde(default)]
    pub shared_draw: bool,
}

impl SynthParams {
    pub fn new(alpha: f64, beta: f64, samples_per_client: usize, n_clients: usize, seed: u64) -> Self {
        Self {
            alpha,
            beta,
            features: DEFAULT_FEATURES,
            classes: DEFAULT_CLASSES,
            samples_per_client,
            n_clients,
            seed,
            shared_draw: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            problems.push(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            problems.push(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if self.features == 0 {
            problems.push("features must be >= 1".into());
        }
        if self.classes < 2 {
            problems.push("classes must be >= 2".into());
        }
        if self.samples_per_client == 0 {
            problems.push("samples_per_client must be >= 1".into());
        }
        if self.n_clients == 0 {
            problems.push("n_clients must be >= 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Diagonal of the feature covariance: `j^(-1.2)` for `j = 1..=d`.
pub fn covariance_diagonal(features: usize) -> Vec<f64> {
    (1..=features).map(|j| (j as f64).powf(-1.2)).collect()
}

fn normal(rng: &mut RngState, mean: f64, sd: f64) -> f64 {
    mean + sd * rng.sample::<f64, _>(StandardNormal)
}

/// One client's labeller and feature distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthClientModel {
    /// `C × d`, row-major by class.
    weights: Vec<f64>,
    bias: Vec<f64>,
    feature_mean: Vec<f64>,
    feature_sd: Vec<f64>,
    classes: usize,
}

impl SynthClientModel {
    pub fn draw(alpha: f64, beta: f64, features: usize, classes: usize, rng: &mut RngState) -> Self {
        let u = normal(rng, 0.0, alpha);
        let weights = (0..classes * features).map(|_| normal(rng, u, 1.0)).collect();
        let bias = (0..classes).map(|_| normal(rng, u, 1.0)).collect();
        let b = normal(rng, 0.0, beta);
        let feature_mean = (0..features).map(|_| normal(rng, b, 1.0)).collect();
        let feature_sd = covariance_diagonal(features).into_iter().map(f64::sqrt).collect();
        Self { weights, bias, feature_mean, feature_sd, classes }
    }

    pub fn features(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature_mean(&self) -> &[f64] {
        &self.feature_mean
    }

    /// Draws one `(x, y)` pair, appending `x` to `out`.
    pub fn sample_into(&self, rng: &mut RngState, out: &mut Vec<f64>) -> usize {
        let start = out.len();
        for (m, s) in self.feature_mean.iter().zip(&self.feature_sd) {
            out.push(normal(rng, *m, *s));
        }
        self.label(&out[start..])
    }

    pub fn label(&self, x: &[f64]) -> usize {
        let d = self.features();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for c in 0..self.classes {
            let row = &self.weights[c * d..(c + 1) * d];
            let score = self.bias[c] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        best
    }

    pub fn sample(&self, n: usize, rng: &mut RngState) -> Result<LabeledDataset> {
        let mut features = Vec::with_capacity(n * self.features());
        let labels = (0..n).map(|_| self.sample_into(rng, &mut features)).collect();
        LabeledDataset::new(features, labels, self.features(), self.classes)
    }
}

/// Per-client generative models, one ChaCha stream per client.
pub fn synth_models(p: &SynthParams) -> Result<Vec<SynthClientModel>> {
    p.validate()?;
    let draw = |k: usize| {
        let mut rng = derived(p.seed, &[0x5717, k as u64]);
        SynthClientModel::draw(p.alpha, p.beta, p.features, p.classes, &mut rng)
    };
    if p.shared_draw {
        let shared = draw(0);
        Ok(vec![shared; p.n_clients])
    } else {
        Ok((0..p.n_clients).map(draw).collect())
    }
}

/// `n_clients` datasets of `samples_per_client` rows each.
pub fn synth_generate(p: &SynthParams) -> Result<Vec<LabeledDataset>> {
    synth_models(p)?
        .iter()
        .enumerate()
        .map(|(k, model)| {
            let mut rng = derived(p.seed, &[0xda7a, k as u64]);
            model.sample(p.samples_per_client, &mut rng)
        })
        .collect()
}

/// Severity settings for the two non-priority noise mechanisms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub label_noise_factor: f64,
    pub label_noise_skew: f64,
    pub random_data_fraction_factor: f64,
    pub random_data_fraction_skew: f64,
}

/// Named skew presets. Low, medium and high use skew 0.5, 1.5 and 5 for both
/// mechanisms, with label factor 2.5 and irrelevant-data factor 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSeverity {
    Low,
    Medium,
    High,
}

impl NoiseSeverity {
    pub fn skew(self) -> f64 {
        match self {
            NoiseSeverity::Low => 0.5,
            NoiseSeverity::Medium => 1.5,
            NoiseSeverity::High => 5.0,
        }
    }
}

impl NoiseProfile {
    pub const NONE: NoiseProfile = NoiseProfile {
        label_noise_factor: 0.0,
        label_noise_skew: 1.0,
        random_data_fraction_factor: 0.0,
        random_data_fraction_skew: 1.0,
    };

    pub fn preset(severity: NoiseSeverity) -> Self {
        Self {
            label_noise_factor: 2.5,
            label_noise_skew: severity.skew(),
            random_data_fraction_factor: 1.0,
            random_data_fraction_skew: severity.skew(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.label_noise_factor >= 0.0 && self.label_noise_factor.is_finite()) {
            problems.push("label_noise_factor must be finite and >= 0".to_string());
        }
        if !(self.label_noise_skew > 0.0 && self.label_noise_skew.is_finite()) {
            problems.push("label_noise_skew must be finite and > 0".to_string());
        }
        if !(0.0..=1.0).contains(&self.random_data_fraction_factor) {
            problems.push("random_data_fraction_factor must lie in [0, 1]".to_string());
        }
        if !(self.random_data_fraction_skew > 0.0 && self.random_data_fraction_skew.is_finite()) {
            problems.push("random_data_fraction_skew must be finite and > 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Label-flip probability for non-priority client `i` of `n`.
    pub fn flip_probability(&self, i: usize, n: usize) -> f64 {
        noise_level_for_client(i, n, self.label_noise_factor, self.label_noise_skew).clamp(0.0, 1.0)
    }

    /// Fraction of rows replaced by irrelevant data for client `i` of `n`.
    pub fn irrelevant_fraction(&self, i: usize, n: usize) -> f64 {
        noise_level_for_client(i, n, self.random_data_fraction_factor, self.random_data_fraction_skew)
            .clamp(0.0, 1.0)
    }
}

/// `factor · ((i+1)/n)^(1/skew)`.
///
/// Nondecreasing in `i` and reaching `factor` at the last client. A larger
/// skew flattens the curve toward `factor`, so more clients sit near the
/// maximum. Callers clamp to `[0, 1]` when the level is a probability.
pub fn noise_level_for_client(i: usize, n_nonpriority: usize, factor: f64, skew: f64) -> f64 {
    debug_assert!(i < n_nonpriority);
    factor * ((i + 1) as f64 / n_nonpriority as f64).powf(1.0 / skew)
}

/// Replaces each label, with probability `flip_prob`, by a uniformly chosen
/// different class.
pub fn add_label_noise(ds: &LabeledDataset, flip_prob: f64, rng: &mut RngState) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&flip_prob) {
        return Err(Error::Argument(format!("flip probability {flip_prob} outside [0, 1]")));
    }
    let classes = ds.classes();
    let mut out = ds.clone();
    for i in 0..ds.len() {
        if rng.random::<f64>() < flip_prob {
            let y = ds.label(i);
            let mut other = rng.random_range(0..classes - 1);
            if other >= y {
                other += 1;
            }
            out.set_label(i, other);
        }
    }
    Ok(out)
}

/// Overwrites `⌊fraction·n⌋` uniformly chosen rows with `N(0, I)` features
/// and uniform labels.
pub fn add_irrelevant_data(ds: &LabeledDataset, fraction: f64, rng: &mut RngState) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Argument(format!("irrelevant fraction {fraction} outside [0, 1]")));
    }
    let n = ds.len();
    let count = ((fraction * n as f64).floor() as usize).min(n);
    let classes = ds.classes();
    let mut out = ds.clone();
    for i in index::sample(rng, n, count).into_iter() {
        for v in out.row_mut(i) {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let y = rng.random_range(0..classes);
        out.set_label(i, y);
    }
    Ok(out)
}

/// Sorts by label, cuts `n_shards` equal single-class shards, and deals
/// `shards_per_client` random shards to each client.
pub fn shard_partition(
    ds: &LabeledDataset,
    n_shards: usize,
    shards_per_client: usize,
    rng: &mut RngState,
) -> Result<Vec<LabeledDataset>> {
    if n_shards == 0 || shards_per_client == 0 {
        return Err(Error::Argument("shard counts must be positive".into()));
    }
    if ds.len() % n_shards != 0 {
        return Err(Error::Argument(format!(
            "{} samples do not split into {n_shards} equal shards",
            ds.len()
        )));
    }
    if n_shards % shards_per_client != 0 {
        return Err(Error::Argument(format!(
            "{n_shards} shards cannot be dealt {shards_per_client} per client"
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by_key(|&i| ds.label(i));
    let shard_len = ds.len() / n_shards;
    let shards: Vec<&[usize]> = order.chunks(shard_len).collect();
    for (s, shard) in shards.iter().enumerate() {
        let first = ds.label(shard[0]);
        if shard.iter().any(|&i| ds.label(i) != first) {
            return Err(Error::Argument(format!(
                "shard {s} mixes classes; class counts must be multiples of the shard size {shard_len}"
            )));
        }
    }
    let mut deal: Vec<usize> = (0..n_shards).collect();
    deal.shuffle(rng);
    deal.chunks(shards_per_client)
        .map(|hand| {
            let rows: Vec<usize> = hand.iter().flat_map(|&s| shards[s].iter().copied()).collect();
            ds.select(&rows)
        })
        .collect()
}

/// Train and test splits for a synthetic prioritized federation.
#[derive(Clone, Debug)]
pub struct SynthFederationData {
    pub priority_train: Vec<LabeledDataset>,
    pub priority_test: Vec<LabeledDataset>,
    pub nonpriority_train: Vec<LabeledDataset>,
    pub nonpriority_test: Vec<LabeledDataset>,
    /// Noise levels applied to each non-priority client, `(flip, irrelevant)`.
    pub nonpriority_noise: Vec<(f64, f64)>,
}

impl SynthFederationData {
    /// Pooled held-out data of the priority clients.
    pub fn global_test(&self) -> Result<LabeledDataset> {
        LabeledDataset::concat(&self.priority_test.iter().collect::<Vec<_>>())
    }

    /// Training roster: priority clients first, then non-priority ones.
    pub fn clients(&self) -> Result<Vec<ClientSpec>> {
        let members = self
            .priority_train
            .iter()
            .map(|ds| (ds.clone(), true))
            .chain(self.nonpriority_train.iter().map(|ds| (ds.clone(), false)))
            .collect();
        ClientSpec::roster(members)
    }
}

/// Builds `n_priority` clients from `Synth(α, β)` and `n_clients − n_priority`
/// non-priority clients whose rows are drawn from the priority mixture
/// (client chosen in proportion to its data) before noise is applied. Noise
/// severity rises with the non-priority index.
pub fn synth_federation(
    p: &SynthParams,
    n_priority: usize,
    noise: &NoiseProfile,
    test_per_client: usize,
) -> Result<SynthFederationData> {
    p.validate()?;
    noise.validate()?;
    if n_priority == 0 || n_priority > p.n_clients {
        return Err(Error::Config(format!(
            "n_priority = {n_priority} must lie in 1..={} (n_clients)",
            p.n_clients
        )));
    }
    let priority_params = SynthParams { n_clients: n_priority, ..p.clone() };
    let models = synth_models(&priority_params)?;
    let total = p.samples_per_client + test_per_client;

    let mut priority_train = Vec::with_capacity(n_priority);
    let mut priority_test = Vec::with_capacity(n_priority);
    for (k, model) in models.iter().enumerate() {
        let mut rng = derived(p.seed, &[0xda7a, k as u64]);
        let train = model.sample(p.samples_per_client, &mut rng)?;
        priority_train.push(train);
        if test_per_client > 0 {
            let mut rng = derived(p.seed, &[0x7e57, k as u64]);
            priority_test.push(model.sample(test_per_client, &mut rng)?);
        }
    }

    let n_non = p.n_clients - n_priority;
    let mut nonpriority_train = Vec::with_capacity(n_non);
    let mut nonpriority_test = Vec::with_capacity(n_non);
    let mut nonpriority_noise = Vec::with_capacity(n_non);
    // equal sample counts make the priority mixture uniform
    for i in 0..n_non {
        let id = (n_priority + i) as u64;
        let mut rng = derived(p.seed, &[0xda7a, id]);
        let mut features = Vec::with_capacity(total * p.features);
        let mut labels = Vec::with_capacity(total);
        for _ in 0..total {
            let source = rng.random_range(0..n_priority);
            labels.push(models[source].sample_into(&mut rng, &mut features));
        }
        let clean = LabeledDataset::new(features, labels, p.features, p.classes)?;
        let flip = noise.flip_probability(i, n_non);
        let irrelevant = noise.irrelevant_fraction(i, n_non);
        let mut noise_rng = derived(p.seed, &[0x0153, id]);
        let noisy = add_label_noise(&clean, flip, &mut noise_rng)?;
        let noisy = add_irrelevant_data(&noisy, irrelevant, &mut noise_rng)?;
        let train_rows: Vec<usize> = (0..p.samples_per_client).collect();
        nonpriority_train.push(noisy.select(&train_rows)?);
        if test_per_client > 0 {
            let test_rows: Vec<usize> = (p.samples_per_client..total).collect();
            nonpriority_test.push(noisy.select(&test_rows)?);
        }
        nonpriority_noise.push((flip, irrelevant));
    }

    Ok(SynthFederationData {
        priority_train,
        priority_test,
        nonpriority_train,
        nonpriority_test,
        nonpriority_noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn small(seed: u64) -> SynthParams {
        SynthParams {
            features: 8,
            classes: 4,
            ..SynthParams::new(1.0, 1.0, 50, 3, seed)
        }
    }

    #[test]
    fn covariance_diagonal_follows_power_law() {
        let diag = covariance_diagonal(60);
        assert_eq!(diag[0], 1.0);
        assert!((diag[1] - 0.435_275_281_648_062_1).abs() < 1e-15);
        assert!((diag[1] - 2f64.powf(-1.2)).abs() < 1e-15);
    }

    #[test]
    fn same_seed_gives_identical_data() {
        let a = synth_generate(&small(3)).unwrap();
        let b = synth_generate(&small(3)).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(&small(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn default_dimensions() {
        let p = SynthParams::new(1.0, 1.0, 5, 2, 0);
        let data = synth_generate(&p).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0].dim(), 60);
        assert_eq!(data[0].classes(), 10);
        assert_eq!(data[0].len(), 5);
    }

    #[test]
    fn homogeneous_limit_matches_label_conditional_means() {
        let p = SynthParams {
            shared_draw: true,
            samples_per_client: 4000,
            ..SynthParams::new(0.0, 0.0, 4000, 2, 21)
        };
        let data = synth_generate(&p).unwrap();
        let sd = covariance_diagonal(p.features);
        for class in 0..p.classes {
            let stats: Vec<(usize, Vec<f64>)> = data
                .iter()
                .map(|ds| {
                    let rows: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == class).collect();
                    let mut mean = vec![0.0; ds.dim()];
                    for &i in &rows {
                        for (m, v) in mean.iter_mut().zip(ds.row(i)) {
                            *m += v / rows.len() as f64;
                        }
                    }
                    (rows.len(), mean)
                })
                .collect();
            let (n0, m0) = &stats[0];
            let (n1, m1) = &stats[1];
            if *n0 < 100 || *n1 < 100 {
                continue;
            }
            for j in 0..p.features {
                let se = (sd[j] / *n0 as f64 + sd[j] / *n1 as f64).sqrt();
                assert!((m0[j] - m1[j]).abs() < 5.0 * se, "class {class} feature {j}");
            }
        }
    }

    #[test]
    fn noise_level_endpoints_and_skew() {
        assert!((noise_level_for_client(9, 10, 0.5, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(noise_level_for_client(3, 10, 0.0, 2.0), 0.0);
        // skew 100: the first client already sits at 0.5 * 0.1^(0.01)
        let first = noise_level_for_client(0, 10, 0.5, 100.0);
        assert!((first - 0.5 * 0.1f64.powf(0.01)).abs() < 1e-15);
        assert!(first > 0.48);
        let profile = NoiseProfile::preset(NoiseSeverity::Low);
        assert_eq!(profile.flip_probability(29, 30), 1.0);
    }

    #[test]
    fn skew_raises_mean_noise() {
        let mean = |skew: f64| (0..20).map(|i| noise_level_for_client(i, 20, 1.0, skew)).sum::<f64>() / 20.0;
        assert!(mean(5.0) >= mean(1.5));
        assert!(mean(1.5) >= mean(0.5));
    }

    #[test]
    fn label_noise_extremes() {
        let ds = synth_generate(&small(5)).unwrap().remove(0);
        let same = add_label_noise(&ds, 0.0, &mut seeded(1)).unwrap();
        assert_eq!(same, ds);
        let flipped = add_label_noise(&ds, 1.0, &mut seeded(1)).unwrap();
        assert!((0..ds.len()).all(|i| flipped.label(i) != ds.label(i)));
        assert_eq!(flipped.features(), ds.features());
    }

    #[test]
    fn irrelevant_data_extremes() {
        let ds = synth_generate(&small(6)).unwrap().remove(0);
        assert_eq!(add_irrelevant_data(&ds, 0.0, &mut seeded(2)).unwrap(), ds);
        let all = add_irrelevant_data(&ds, 1.0, &mut seeded(2)).unwrap();
        assert!((0..ds.len()).all(|i| all.row(i) != ds.row(i)));
        let half = add_irrelevant_data(&ds, 0.5, &mut seeded(2)).unwrap();
        let replaced = (0..ds.len()).filter(|&i| half.row(i) != ds.row(i)).count();
        assert_eq!(replaced, 25);
        assert_eq!(half.len(), ds.len());
        assert_eq!(half.dim(), ds.dim());
    }

    fn balanced(per_class: usize, classes: usize) -> LabeledDataset {
        let n = per_class * classes;
        let features = (0..n).map(|i| i as f64).collect();
        let labels = (0..n).map(|i| (i * 7) % classes).collect();
        LabeledDataset::new(features, labels, 1, classes).unwrap()
    }

    #[test]
    fn sharding_deals_single_class_shards() {
        let ds = balanced(12, 10);
        let clients = shard_partition(&ds, 120, 2, &mut seeded(3)).unwrap();
        assert_eq!(clients.len(), 60);
        for c in &clients {
            let mut classes: Vec<usize> = c.labels().to_vec();
            classes.sort();
            classes.dedup();
            assert!(classes.len() <= 2);
        }
        let mut all: Vec<f64> = clients.iter().flat_map(|c| c.features().to_vec()).collect();
        all.sort_by(f64::total_cmp);
        let mut orig = ds.features().to_vec();
        orig.sort_by(f64::total_cmp);
        assert_eq!(all, orig);
    }

    #[test]
    fn one_shard_one_client() {
        let ds = LabeledDataset::new(vec![1.0, 2.0, 3.0], vec![1, 1, 1], 1, 2).unwrap();
        let clients = shard_partition(&ds, 1, 1, &mut seeded(4)).unwrap();
        assert_eq!(clients.len(), 1);
        assert_eq!(clients[0], ds);
    }

    #[test]
    fn indivisible_shards_rejected() {
        let ds = balanced(3, 2);
        assert!(matches!(shard_partition(&ds, 4, 1, &mut seeded(0)), Err(Error::Argument(_))));
        assert!(matches!(shard_partition(&ds, 6, 4, &mut seeded(0)), Err(Error::Argument(_))));
        // 3 per class with shards of 2 rows straddle a class boundary
        assert!(matches!(shard_partition(&ds, 3, 1, &mut seeded(0)), Err(Error::Argument(_))));
    }

    #[test]
    fn federation_data_has_requested_layout() {
        let p = SynthParams { n_clients: 6, ..small(8) };
        let fed = synth_federation(&p, 2, &NoiseProfile::preset(NoiseSeverity::High), 10).unwrap();
        assert_eq!(fed.priority_train.len(), 2);
        assert_eq!(fed.nonpriority_train.len(), 4);
        assert_eq!(fed.global_test().unwrap().len(), 20);
        assert!(fed.nonpriority_noise.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        assert!(synth_federation(&p, 7, &NoiseProfile::NONE, 0).is_err());
    }
}
