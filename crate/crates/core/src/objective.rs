//! Multinomial logistic regression with an L2 penalty.
//!
//! Every client objective in the simulator has the form
//!
//! ```text
//! F(w) = (1/n) Σ_i CE(softmax(Wᵀx_i + b), y_i) + (λ/2)‖w‖²
//! ```
//!
//! where `w` flattens the `d × C` weight matrix (row-major, one row per
//! feature) followed by the `C` biases. With `λ > 0` the objective is
//! `λ`-strongly convex, and its smoothness constant is bounded by
//! `λ + ½ λ_max(M)` where `M` is the second-moment matrix of the
//! bias-augmented features `(x, 1)`.

use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Feature dimension and class count of a linear classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub features: usize,
    pub classes: usize,
}

impl ModelShape {
    pub fn new(features: usize, classes: usize) -> Self {
        Self { features, classes }
    }

    /// `d·C + C`.
    pub fn param_len(&self) -> usize {
        (self.features + 1) * self.classes
    }
}

/// Flat model parameters: weights (`d × C`, row-major) then biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(shape: ModelShape) -> Self {
        Self(vec![0.0; shape.param_len()])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn distance_sq(&self, other: &ParamVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &ParamVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.0 {
            *a *= alpha;
        }
    }

    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        ParamVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

/// Feature matrix and integer labels for one client.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
}

impl LabeledDataset {
    /// Builds a dataset from a row-major `n × dim` feature buffer.
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Argument("dataset must contain at least one sample".into()));
        }
        if dim == 0 || classes < 2 {
            return Err(Error::Config(format!(
                "dataset needs dim >= 1 and classes >= 2, got dim={dim}, classes={classes}"
            )));
        }
        if features.len() != n * dim {
            return Err(Error::Config(format!(
                "feature buffer has {} values, expected {n} x {dim}",
                features.len()
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
            return Err(Error::Argument(format!("label {y} at row {i} is not below {classes}")));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite feature in row {}", pos / dim)));
        }
        Ok(Self { features, labels, dim, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape::new(self.dim, self.classes)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Rows at `indices`, in that order. Indices may repeat.
    pub fn select(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Argument(format!("row {i} out of range for {} rows", self.len())));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        LabeledDataset::new(features, labels, self.dim, self.classes)
    }

    /// Stacks datasets with a common shape.
    pub fn concat(parts: &[&LabeledDataset]) -> Result<LabeledDataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Argument("cannot concatenate zero datasets".into()))?;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for part in parts {
            if part.shape() != first.shape() {
                return Err(Error::Config("datasets with different shapes cannot be stacked".into()));
            }
            features.extend_from_slice(&part.features);
            labels.extend_from_slice(&part.labels);
        }
        LabeledDataset::new(features, labels, first.dim, first.classes)
    }

    pub(crate) fn set_label(&mut self, i: usize, label: usize) {
        debug_assert!(label < self.classes);
        self.labels[i] = label;
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Reads the `f0..f{d-1},label` CSV layout. When `classes` is `None`
    /// the class count is `max(label) + 1` (at least 2).
    pub fn from_csv(path: impl AsRef<Path>, classes: Option<usize>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path.as_ref())?;
        let headers = reader.headers()?.clone();
        let dim = headers.len().saturating_sub(1);
        for (j, name) in headers.iter().enumerate() {
            let expected = if j == dim { "label".to_string() } else { format!("f{j}") };
            if name.trim() != expected {
                return Err(Error::Config(format!(
                    "csv header column {j} is {name:?}, expected {expected:?}"
                )));
            }
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            for j in 0..dim {
                let v: f64 = record[j].trim().parse().map_err(|_| {
                    Error::Config(format!("row {line}: column f{j} is not a number: {:?}", &record[j]))
                })?;
                features.push(v);
            }
            let y: usize = record[dim].trim().parse().map_err(|_| {
                Error::Config(format!("row {line}: label is not a non-negative integer: {:?}", &record[dim]))
            })?;
            labels.push(y);
        }
        let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(2, |m| (m + 1).max(2)));
        Self::new(features, labels, dim, classes)
    }

    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path.as_ref())?;
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        writer.write_record(&header)?;
        let mut record = Vec::with_capacity(self.dim + 1);
        for i in 0..self.len() {
            record.clear();
            record.extend(self.row(i).iter().map(|v| v.to_string()));
            record.push(self.labels[i].to_string());
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// A smooth function of a flat parameter vector, as consumed by the oracle
/// solver.
pub trait Differentiable {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    fn gradient(&self, w: &[f64]) -> Vec<f64>;

    fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        (self.value(w), self.gradient(w))
    }
}

impl<D: Differentiable + ?Sized> Differentiable for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, w: &[f64]) -> f64 {
        (**self).value(w)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        (**self).gradient(w)
    }

    fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(w)
    }
}

/// Regularized cross-entropy over one dataset.
#[derive(Clone, Copy, Debug)]
pub struct Objective<'a> {
    pub dataset: &'a LabeledDataset,
    pub reg_lambda: f64,
}

impl<'a> Objective<'a> {
    pub fn new(dataset: &'a LabeledDataset, reg_lambda: f64) -> Self {
        Self { dataset, reg_lambda }
    }

    pub fn shape(&self) -> ModelShape {
        self.dataset.shape()
    }

    /// Strong-convexity constant; exactly `reg_lambda` for this family.
    pub fn mu(&self) -> f64 {
        self.reg_lambda
    }
}

impl Differentiable for Objective<'_> {
    fn dim(&self) -> usize {
        self.shape().param_len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let (data, _) = cross_entropy(w, self.dataset, None, false);
        data + 0.5 * self.reg_lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.value_and_gradient(w).1
    }

    fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let (data, mut g) = cross_entropy(w, self.dataset, None, true);
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi += self.reg_lambda * wi;
        }
        (data + 0.5 * self.reg_lambda * w.iter().map(|v| v * v).sum::<f64>(), g)
    }
}

fn check_dims(w: &ParamVector, shape: ModelShape) -> Result<()> {
    if w.len() != shape.param_len() {
        return Err(Error::Config(format!(
            "parameter vector has length {}, model with d={} and C={} needs {}",
            w.len(),
            shape.features,
            shape.classes,
            shape.param_len()
        )));
    }
    Ok(())
}

/// Mean cross-entropy plus `(λ/2)‖w‖²`.
pub fn loss(w: &ParamVector, obj: &Objective<'_>) -> Result<f64> {
    check_dims(w, obj.shape())?;
    Ok(obj.value(w.as_slice()))
}

/// Gradient of the mean cross-entropy over `batch` plus `reg·w`.
pub fn grad(w: &ParamVector, batch: &LabeledDataset, reg: f64) -> Result<ParamVector> {
    if batch.is_empty() {
        return Err(Error::Argument("gradient needs a nonempty batch".into()));
    }
    check_dims(w, batch.shape())?;
    let (_, mut g) = cross_entropy(w.as_slice(), batch, None, true);
    for (gi, wi) in g.iter_mut().zip(w.as_slice()) {
        *gi += reg * wi;
    }
    Ok(ParamVector(g))
}

/// Same as [`grad`] restricted to the rows at `rows`, without copying them.
pub(crate) fn grad_rows(w: &[f64], ds: &LabeledDataset, rows: &[usize], reg: f64) -> Vec<f64> {
    let (_, mut g) = cross_entropy(w, ds, Some(rows), true);
    for (gi, wi) in g.iter_mut().zip(w) {
        *gi += reg * wi;
    }
    g
}

/// Fraction of rows whose highest logit is the true label (first index wins
/// ties).
pub fn accuracy(w: &ParamVector, ds: &LabeledDataset) -> Result<f64> {
    check_dims(w, ds.shape())?;
    let classes = ds.classes();
    let mut logits = vec![0.0; classes];
    let mut correct = 0usize;
    for i in 0..ds.len() {
        compute_logits(w.as_slice(), ds.row(i), classes, &mut logits);
        let mut best = 0;
        for c in 1..classes {
            if logits[c] > logits[best] {
                best = c;
            }
        }
        if best == ds.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}

fn compute_logits(w: &[f64], x: &[f64], classes: usize, out: &mut [f64]) {
    let bias = &w[x.len() * classes..];
    out.copy_from_slice(bias);
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let row = &w[j * classes..(j + 1) * classes];
        for (o, &wjc) in out.iter_mut().zip(row) {
            *o += xj * wjc;
        }
    }
}

/// Mean cross-entropy over the chosen rows and, when requested, its gradient.
fn cross_entropy(w: &[f64], ds: &LabeledDataset, rows: Option<&[usize]>, with_grad: bool) -> (f64, Vec<f64>) {
    let classes = ds.classes();
    let dim = ds.dim();
    let count = rows.map_or(ds.len(), <[usize]>::len);
    let mut logits = vec![0.0; classes];
    let mut g = if with_grad { vec![0.0; w.len()] } else { Vec::new() };
    let mut total = 0.0;
    for r in 0..count {
        let i = rows.map_or(r, |rows| rows[r]);
        let x = ds.row(i);
        let y = ds.label(i);
        compute_logits(w, x, classes, &mut logits);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let true_logit = logits[y];
        let mut sum = 0.0;
        for l in logits.iter_mut() {
            *l = (*l - max).exp();
            sum += *l;
        }
        total += max + sum.ln() - true_logit;
        if with_grad {
            for l in logits.iter_mut() {
                *l /= sum;
            }
            logits[y] -= 1.0;
            for (j, &xj) in x.iter().enumerate() {
                if xj == 0.0 {
                    continue;
                }
                let row = &mut g[j * classes..(j + 1) * classes];
                for (gjc, &delta) in row.iter_mut().zip(logits.iter()) {
                    *gjc += xj * delta;
                }
            }
            for (gb, &delta) in g[dim * classes..].iter_mut().zip(logits.iter()) {
                *gb += delta;
            }
        }
    }
    let scale = 1.0 / count as f64;
    for v in &mut g {
        *v *= scale;
    }
    (total * scale, g)
}

/// Uniform minibatch drawn without replacement.
pub fn sample_batch(ds: &LabeledDataset, batch_size: usize, rng: &mut RngState) -> Result<LabeledDataset> {
    let rows = sample_rows(ds.len(), batch_size, rng)?;
    ds.select(&rows)
}

pub(crate) fn sample_rows(n: usize, batch_size: usize, rng: &mut RngState) -> Result<Vec<usize>> {
    if batch_size == 0 || batch_size > n {
        return Err(Error::Argument(format!(
            "batch size {batch_size} must lie in 1..={n}"
        )));
    }
    Ok(index::sample(rng, n, batch_size).into_vec())
}

/// How tightly [`estimate_l`] bounds the feature second-moment spectrum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothnessBound {
    /// Mean squared row norm, i.e. the trace of the second-moment matrix.
    #[default]
    RowNorm,
    /// Exact largest eigenvalue of the second-moment matrix.
    Spectral,
}

/// Upper bound on the smoothness constant: `λ + ½·λ_max(E[x̃x̃ᵀ])` with
/// `x̃ = (x, 1)`.
///
/// The softmax Jacobian `diag(p) − ppᵀ` never exceeds ½ in operator norm, so
/// the cross-entropy Hessian is dominated by `½ I ⊗ E[x̃x̃ᵀ]`.
pub fn estimate_l(obj: &Objective<'_>) -> f64 {
    estimate_l_with(obj, SmoothnessBound::RowNorm)
}

pub fn estimate_l_with(obj: &Objective<'_>, bound: SmoothnessBound) -> f64 {
    let ds = obj.dataset;
    let n = ds.len() as f64;
    let lambda_max = match bound {
        SmoothnessBound::RowNorm => {
            (0..ds.len())
                .map(|i| 1.0 + ds.row(i).iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                / n
        }
        SmoothnessBound::Spectral => {
            let d = ds.dim() + 1;
            let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
            let mut aug = vec![1.0; d];
            for i in 0..ds.len() {
                aug[..d - 1].copy_from_slice(ds.row(i));
                for a in 0..d {
                    for b in a..d {
                        m[(a, b)] += aug[a] * aug[b];
                    }
                }
            }
            for a in 0..d {
                for b in 0..a {
                    m[(a, b)] = m[(b, a)];
                }
            }
            m /= n;
            m.symmetric_eigenvalues().max()
        }
    };
    obj.reg_lambda + 0.5 * lambda_max.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_dataset(n: usize, d: usize, classes: usize, seed: u64) -> LabeledDataset {
        let mut rng = seeded(seed);
        let features = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
        LabeledDataset::new(features, labels, d, classes).unwrap()
    }

    fn random_params(shape: ModelShape, scale: f64, seed: u64) -> ParamVector {
        let mut rng = seeded(seed);
        ParamVector::from_vec(
            (0..shape.param_len())
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        )
    }

    #[test]
    fn zero_model_has_uniform_loss() {
        let ds = LabeledDataset::new(vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.0], vec![0, 1, 2], 2, 3).unwrap();
        let w = ParamVector::zeros(ds.shape());
        assert!((loss(&w, &Objective::new(&ds, 0.0)).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((loss(&w, &Objective::new(&ds, 0.1)).unwrap() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_cross_entropy() {
        // one feature x = 1, weights give logits (2, 0)
        let ds = LabeledDataset::new(vec![1.0], vec![0], 1, 2).unwrap();
        let w = ParamVector::from_vec(vec![2.0, 0.0, 0.0, 0.0]);
        let got = loss(&w, &Objective::new(&ds, 0.0)).unwrap();
        assert!((got - (1.0 + (-2f64).exp()).ln()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        let ds = random_dataset(4, 3, 2, 1);
        let w = ParamVector::from_vec(vec![0.0; 5]);
        assert!(matches!(loss(&w, &Objective::new(&ds, 0.0)), Err(Error::Config(_))));
        assert!(matches!(grad(&w, &ds, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let ds = random_dataset(12, 4, 3, 2);
        let obj = Objective::new(&ds, 0.05);
        let w = random_params(ds.shape(), 0.5, 3);
        let g = grad(&w, &ds, 0.05).unwrap();
        let h = 1e-5;
        for k in 0..w.len() {
            let mut plus = w.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = w.clone();
            minus.as_mut_slice()[k] -= h;
            let fd = (obj.value(plus.as_slice()) - obj.value(minus.as_slice())) / (2.0 * h);
            let rel = (fd - g.as_slice()[k]).abs() / fd.abs().max(1e-3);
            assert!(rel < 1e-5, "coordinate {k}: fd {fd} vs {}", g.as_slice()[k]);
        }
    }

    #[test]
    fn regularizer_enters_gradient_linearly() {
        let ds = random_dataset(10, 3, 4, 4);
        let w = random_params(ds.shape(), 1.0, 5);
        let with = grad(&w, &ds, 0.7).unwrap();
        let without = grad(&w, &ds, 0.0).unwrap();
        for ((a, b), wi) in with.as_slice().iter().zip(without.as_slice()).zip(w.as_slice()) {
            assert!((a - b - 0.7 * wi).abs() < 1e-15);
        }
    }

    #[test]
    fn full_batch_gradient_is_mean_of_per_sample_gradients() {
        let ds = random_dataset(9, 3, 3, 6);
        let w = random_params(ds.shape(), 1.0, 7);
        let full = grad(&w, &ds, 0.0).unwrap();
        let mut mean = vec![0.0; w.len()];
        for i in 0..ds.len() {
            let single = grad(&w, &ds.select(&[i]).unwrap(), 0.0).unwrap();
            for (m, s) in mean.iter_mut().zip(single.as_slice()) {
                *m += s / ds.len() as f64;
            }
        }
        for (a, b) in full.as_slice().iter().zip(&mean) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn empty_batch_rejected() {
        let ds = random_dataset(3, 2, 2, 8);
        assert!(matches!(sample_batch(&ds, 0, &mut seeded(1)), Err(Error::Argument(_))));
        assert!(matches!(sample_batch(&ds, 4, &mut seeded(1)), Err(Error::Argument(_))));
    }

    #[test]
    fn exhaustive_batch_is_a_permutation() {
        let ds = random_dataset(7, 2, 3, 9);
        let batch = sample_batch(&ds, 7, &mut seeded(3)).unwrap();
        let key = |d: &LabeledDataset| {
            let mut rows: Vec<String> = (0..d.len()).map(|i| format!("{:?}{}", d.row(i), d.label(i))).collect();
            rows.sort();
            rows
        };
        assert_eq!(key(&ds), key(&batch));
    }

    #[test]
    fn batch_sampling_is_deterministic() {
        let ds = random_dataset(20, 2, 3, 10);
        let a = sample_batch(&ds, 5, &mut seeded(11)).unwrap();
        let b = sample_batch(&ds, 5, &mut seeded(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_draws_are_uniform() {
        let mut rng = seeded(12);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[sample_rows(4, 1, &mut rng).unwrap()[0]] += 1;
        }
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * 0.25).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn zero_features_leave_only_bias_curvature() {
        let ds = LabeledDataset::new(vec![0.0; 6], vec![0, 1, 1], 2, 2).unwrap();
        let l = estimate_l(&Objective::new(&ds, 0.3));
        assert!((l - 0.8).abs() < 1e-15);
        assert!((estimate_l_with(&Objective::new(&ds, 0.3), SmoothnessBound::Spectral) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spectral_bound_never_exceeds_row_norm_bound() {
        let ds = random_dataset(30, 5, 3, 13);
        let obj = Objective::new(&ds, 0.1);
        let spectral = estimate_l_with(&obj, SmoothnessBound::Spectral);
        assert!(spectral <= estimate_l(&obj) + 1e-12);
        assert!(spectral >= 0.1);
    }

    #[test]
    fn doubling_features_at_least_doubles_the_data_term() {
        let base = random_dataset(25, 4, 3, 14);
        let doubled = LabeledDataset::new(
            base.features().iter().map(|v| 2.0 * v).collect(),
            base.labels().to_vec(),
            base.dim(),
            base.classes(),
        )
        .unwrap();
        for bound in [SmoothnessBound::RowNorm, SmoothnessBound::Spectral] {
            let a = estimate_l_with(&Objective::new(&base, 0.2), bound) - 0.2;
            let b = estimate_l_with(&Objective::new(&doubled, 0.2), bound) - 0.2;
            assert!(b >= 2.0 * a, "{bound:?}: {a} -> {b}");
        }
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let ds = random_dataset(6, 3, 4, 15);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        ds.to_csv(&path).unwrap();
        let back = LabeledDataset::from_csv(&path, Some(4)).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn csv_with_wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x0,f1,label\n1,2,0\n").unwrap();
        assert!(matches!(LabeledDataset::from_csv(&path, None), Err(Error::Config(_))));
    }

    #[test]
    fn out_of_range_label_rejected() {
        assert!(LabeledDataset::new(vec![0.0, 1.0], vec![0, 2], 1, 2).is_err());
    }
}
