//! Multinomial logistic regression trained with mini-batch SGD.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Labelled samples with features stored row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, x: &[f64], y: usize) {
        debug_assert_eq!(x.len(), self.dim);
        self.features.extend_from_slice(x);
        self.labels.push(y);
    }

    pub fn push_from(&mut self, other: &Dataset, i: usize) {
        self.push(other.x(i), other.labels[i]);
    }

    pub fn label_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for y in &self.labels {
            counts[*y] += 1;
        }
        counts
    }
}

/// `classes x (dim + 1)` weight matrix; the last column is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub classes: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
}

impl ToyModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            classes,
            dim,
            weights: vec![0.0; classes * (dim + 1)],
        }
    }

    fn row(&self, k: usize) -> &[f64] {
        let w = self.dim + 1;
        &self.weights[k * w..(k + 1) * w]
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|k| {
                let row = self.row(k);
                row[..self.dim].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + row[self.dim]
            })
            .collect()
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (k, v) in logits.iter().enumerate() {
            if *v > logits[best] {
                best = k;
            }
        }
        best
    }

    /// Mean cross-entropy over `indices` and its gradient.
    pub fn loss_and_gradient(&self, data: &Dataset, indices: &[usize]) -> (f64, Vec<f64>) {
        let w = self.dim + 1;
        let mut grad = vec![0.0; self.weights.len()];
        let mut loss = 0.0;
        for &i in indices {
            let x = data.x(i);
            let y = data.labels[i];
            let logits = self.logits(x);
            let p = softmax(&logits);
            loss += log_sum_exp(&logits) - logits[y];
            for k in 0..self.classes {
                let r = p[k] - if k == y { 1.0 } else { 0.0 };
                let g = &mut grad[k * w..(k + 1) * w];
                for (gj, xj) in g[..self.dim].iter_mut().zip(x) {
                    *gj += r * xj;
                }
                g[self.dim] += r;
            }
        }
        let n = indices.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    pub fn loss(&self, data: &Dataset) -> f64 {
        let all: Vec<usize> = (0..data.len()).collect();
        self.loss_and_gradient(data, &all).0
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = (0..data.len())
            .filter(|&i| self.predict(data.x(i)) == data.labels[i])
            .count();
        hits as f64 / data.len() as f64
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// `steps` SGD updates on mini-batches drawn with replacement.
pub fn local_sgd(
    model: &ToyModel,
    data: &Dataset,
    steps: u32,
    lr: f64,
    batch: usize,
    rng: &mut Rng,
) -> Result<ToyModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out = model.clone();
    let mut indices = vec![0; batch.max(1)];
    for _ in 0..steps {
        indices
            .iter_mut()
            .for_each(|i| *i = rng.random_range(0..data.len()));
        let (_, grad) = out.loss_and_gradient(data, &indices);
        for (w, g) in out.weights.iter_mut().zip(&grad) {
            *w -= lr * g;
        }
    }
    Ok(out)
}
