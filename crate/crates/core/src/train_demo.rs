//! Doubt-penalized training on synthetic blobs.
//!
//! A two-layer ReLU network (2 → 16 → K) trained by full-batch gradient
//! descent on the batch mean of `cross_entropy + λ·raw_doubt_cost`. Epoch
//! metrics make the effect of λ visible: with the penalty on, the logit
//! margins grow faster and the mean raw doubt cost falls further.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cost::{composite_loss, CompositeLoss};
use crate::error::{Error, Result};
use crate::score_core::LogitVector;

pub const HIDDEN_WIDTH: usize = 16;
const INPUT_DIM: usize = 2;
const BLOB_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub points: Vec<([f64; 2], usize)>,
    pub classes: usize,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gaussian clusters centred on a circle of radius 2, class by class.
pub fn make_blobs(classes: usize, n_per_class: usize, spread: f64, seed: u64) -> Result<SyntheticDataset> {
    if classes < 2 {
        return Err(Error::invalid("need at least 2 classes"));
    }
    if n_per_class == 0 {
        return Err(Error::invalid("need at least 1 point per class"));
    }
    if spread < 0.0 || !spread.is_finite() {
        return Err(Error::invalid(format!(
            "spread must be finite and >= 0, got {spread}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(classes * n_per_class);
    for k in 0..classes {
        let angle = std::f64::consts::TAU * k as f64 / classes as f64;
        let center = [BLOB_RADIUS * angle.cos(), BLOB_RADIUS * angle.sin()];
        for _ in 0..n_per_class {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            points.push(([center[0] + spread * dx, center[1] + spread * dy], k));
        }
    }
    Ok(SyntheticDataset {
        points,
        classes,
        seed,
    })
}

/// `x ↦ W2·relu(W1·x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyNet {
    pub hidden: usize,
    pub classes: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl TinyNet {
    /// He-initialized weights, zero biases.
    pub fn new(hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = |scale: f64| -> f64 { scale * rng.sample::<f64, _>(StandardNormal) };
        let s1 = (2.0 / INPUT_DIM as f64).sqrt();
        let w1 = (0..hidden * INPUT_DIM).map(|_| normal(s1)).collect();
        let s2 = (2.0 / hidden as f64).sqrt();
        let w2 = (0..classes * hidden).map(|_| normal(s2)).collect();
        Self {
            hidden,
            classes,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; classes],
        }
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Flattened as `w1, b1, w2, b2` (row-major weights).
    pub fn params(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "parameter vector length");
        let (w1, rest) = flat.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, b2) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
    }

    fn hidden_layer(&self, x: &[f64; 2]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| self.w1[2 * h] * x[0] + self.w1[2 * h + 1] * x[1] + self.b1[h])
            .collect()
    }

    fn output_layer(&self, act: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|k| {
                let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
                row.iter().zip(act).fold(self.b2[k], |acc, (w, a)| acc + w * a)
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64; 2]) -> Vec<f64> {
        let act: Vec<f64> = self.hidden_layer(x).into_iter().map(|z| z.max(0.0)).collect();
        self.output_layer(&act)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub accuracy: f64,
    pub cross_entropy: f64,
    pub doubt_cost: f64,
    pub degenerate_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: TinyNet,
    /// `epochs + 1` rows: row 0 is the initialization, row `e` follows `e` updates.
    pub metrics: Vec<EpochMetrics>,
}

/// Per-sample loss with its gradient in the logits.
pub trait SampleLoss {
    fn eval(&self, logits: &LogitVector<f64>, target: usize) -> Result<CompositeLoss<f64>>;
}

impl<F> SampleLoss for F
where
    F: Fn(&LogitVector<f64>, usize) -> Result<CompositeLoss<f64>>,
{
    fn eval(&self, logits: &LogitVector<f64>, target: usize) -> Result<CompositeLoss<f64>> {
        self(logits, target)
    }
}

/// Mean loss over the dataset, its gradient in the flattened parameters,
/// and the epoch statistics (with `epoch` left at 0).
pub fn objective<L: SampleLoss>(
    net: &TinyNet,
    data: &SyntheticDataset,
    loss: &L,
) -> Result<(f64, Vec<f64>, EpochMetrics)> {
    let n = data.len() as f64;
    let (h, k) = (net.hidden, net.classes);
    let mut gw1 = vec![0.0; net.w1.len()];
    let mut gb1 = vec![0.0; h];
    let mut gw2 = vec![0.0; net.w2.len()];
    let mut gb2 = vec![0.0; k];
    let (mut total, mut ce, mut theta) = (0.0, 0.0, 0.0);
    let (mut correct, mut degenerate) = (0usize, 0usize);

    for (x, target) in &data.points {
        let pre = net.hidden_layer(x);
        let act: Vec<f64> = pre.iter().map(|z| z.max(0.0)).collect();
        let logits = LogitVector::new(net.output_layer(&act))?;
        if logits.argmax() == *target {
            correct += 1;
        }
        let sample = loss.eval(&logits, *target)?;
        total += sample.loss;
        ce += sample.cross_entropy;
        theta += sample.doubt_cost;
        if sample.gradient.degenerate {
            degenerate += 1;
        }

        let dy: Vec<f64> = sample.gradient.entries.iter().map(|g| g / n).collect();
        let mut dact = vec![0.0; h];
        for c in 0..k {
            gb2[c] += dy[c];
            for u in 0..h {
                gw2[c * h + u] += dy[c] * act[u];
                dact[u] += net.w2[c * h + u] * dy[c];
            }
        }
        for u in 0..h {
            if pre[u] > 0.0 {
                gb1[u] += dact[u];
                gw1[2 * u] += dact[u] * x[0];
                gw1[2 * u + 1] += dact[u] * x[1];
            }
        }
    }

    let grad = [gw1, gb1, gw2, gb2].concat();
    let metrics = EpochMetrics {
        epoch: 0,
        accuracy: correct as f64 / n,
        cross_entropy: ce / n,
        doubt_cost: theta / n,
        degenerate_count: degenerate,
    };
    Ok((total / n, grad, metrics))
}

/// Full-batch gradient descent on `cross_entropy + λ·raw_doubt_cost`.
pub fn train(data: &SyntheticDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let lambda = cfg.lambda;
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    train_with_loss(data, cfg, &|y: &LogitVector<f64>, t: usize| {
        composite_loss(y, t, lambda)
    })
}

/// [`train`] with an arbitrary per-sample loss; `cfg.lambda` is ignored.
pub fn train_with_loss<L: SampleLoss>(
    data: &SyntheticDataset,
    cfg: &TrainConfig,
    loss: &L,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let mut net = TinyNet::new(HIDDEN_WIDTH, data.classes, cfg.seed);
    let mut metrics = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..=cfg.epochs {
        let (value, grad, mut m) = objective(&net, data, loss)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training {
                epoch,
                message: format!(
                    "loss = {value}, mean ce = {}, mean doubt cost = {}",
                    m.cross_entropy, m.doubt_cost
                ),
            });
        }
        m.epoch = epoch;
        metrics.push(m);
        if epoch == cfg.epochs {
            break;
        }
        let params: Vec<f64> = net
            .params()
            .iter()
            .zip(&grad)
            .map(|(p, g)| p - cfg.learning_rate * g)
            .collect();
        net.set_params(&params);
    }
    Ok(TrainOutcome { net, metrics })
}

/// `epoch,acc,ce,doubt_cost,degenerate_count`.
pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut s = String::from("epoch,acc,ce,doubt_cost,degenerate_count\n");
    for m in metrics {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            m.epoch, m.accuracy, m.cross_entropy, m.doubt_cost, m.degenerate_count
        );
    }
    s
}
