#![allow(dead_code)]

use fedalign::datagen::{synth_federation, NoiseProfile, SynthParams};
use fedalign::federation::ClientSpec;
use fedalign::objective::LabeledDataset;
use fedalign::rng::seeded;
use rand::Rng;
use rand_distr::StandardNormal;

/// Small synthetic federation: `(clients, global test set)`.
pub fn small_federation(
    seed: u64,
    n_priority: usize,
    n_nonpriority: usize,
    noise: &NoiseProfile,
) -> (Vec<ClientSpec>, LabeledDataset) {
    let params = SynthParams {
        features: 6,
        classes: 3,
        ..SynthParams::new(1.0, 1.0, 40, n_priority + n_nonpriority, seed)
    };
    let data = synth_federation(&params, n_priority, noise, 20).unwrap();
    (data.clients().unwrap(), data.global_test().unwrap())
}

pub fn random_dataset(n: usize, d: usize, classes: usize, seed: u64) -> LabeledDataset {
    let mut rng = seeded(seed);
    let features = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    LabeledDataset::new(features, labels, d, classes).unwrap()
}
