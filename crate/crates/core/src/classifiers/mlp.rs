use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::dataset::PixelDataset;
use crate::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MlpTrainLog {
    pub final_mse: f64,
    pub epochs_run: usize,
    #[serde(default)]
    pub history: Vec<f64>,
}

/// 3 → hidden → 1 network with logistic activations on both layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// hidden × 3 input weights.
    pub w1: Vec<[f64; 3]>,
    pub b1: Vec<f64>,
    /// 1 × hidden output weights, stored flat.
    pub w2: Vec<f64>,
    pub b2: f64,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub train_log: MlpTrainLog,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl MlpModel {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            w1: vec![[0.0; 3]; hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            activation: Activation::Logistic,
            train_log: MlpTrainLog::default(),
        }
    }

    /// Weights and biases drawn uniformly from [-0.5, 0.5].
    pub fn random(hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(hidden);
        let mut params = m.params();
        for p in params.iter_mut() {
            *p = rng.gen_range(-0.5..=0.5);
        }
        m.set_params(&params);
        m
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    pub fn n_params(&self) -> usize {
        5 * self.hidden() + 1
    }

    /// Flattened parameters: w1 row-major, b1, w2, b2.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend(self.w1.iter().flatten());
        out.extend(&self.b1);
        out.extend(&self.w2);
        out.push(self.b2);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let h = self.hidden();
        assert_eq!(params.len(), 5 * h + 1, "parameter vector length");
        for (j, row) in self.w1.iter_mut().enumerate() {
            row.copy_from_slice(&params[3 * j..3 * j + 3]);
        }
        self.b1.copy_from_slice(&params[3 * h..4 * h]);
        self.w2.copy_from_slice(&params[4 * h..5 * h]);
        self.b2 = params[5 * h];
    }

    fn check(&self) -> Result<()> {
        let h = self.hidden();
        if self.w1.len() != h || self.w2.len() != h {
            return Err(Error::ShapeMismatch("mlp layer sizes disagree".into()));
        }
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("mlp has non-finite parameters".into()));
        }
        Ok(())
    }
}

/// `σ(w2 · σ(w1·x + b1) + b2)`.
pub fn mlp_forward(m: &MlpModel, x: [f64; 3]) -> f64 {
    let mut z = m.b2;
    for ((w, b), v) in m.w1.iter().zip(&m.b1).zip(&m.w2) {
        let a = sigmoid(w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + b);
        z += v * a;
    }
    sigmoid(z)
}

pub fn mlp_mse(m: &MlpModel, features: &[[f64; 3]], targets: &[f64]) -> f64 {
    let n = features.len() as f64;
    features
        .iter()
        .zip(targets)
        .map(|(x, t)| (mlp_forward(m, *x) - t).powi(2))
        .sum::<f64>()
        / n
}

/// Mean squared error and its gradient in [`MlpModel::params`] order.
pub fn mlp_loss_and_gradient(
    m: &MlpModel,
    features: &[[f64; 3]],
    targets: &[f64],
) -> (f64, Vec<f64>) {
    let h = m.hidden();
    let n = features.len() as f64;
    let mut grad = vec![0.0; m.n_params()];
    let mut loss = 0.0;
    let mut act = vec![0.0; h];
    for (x, t) in features.iter().zip(targets) {
        let mut z = m.b2;
        for j in 0..h {
            let w = m.w1[j];
            act[j] = sigmoid(w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + m.b1[j]);
            z += m.w2[j] * act[j];
        }
        let y = sigmoid(z);
        let err = y - t;
        loss += err * err;
        let delta_out = 2.0 * err / n * y * (1.0 - y);
        for j in 0..h {
            grad[4 * h + j] += delta_out * act[j];
            let delta_h = delta_out * m.w2[j] * act[j] * (1.0 - act[j]);
            grad[3 * j] += delta_h * x[0];
            grad[3 * j + 1] += delta_h * x[1];
            grad[3 * j + 2] += delta_h * x[2];
            grad[3 * h + j] += delta_h;
        }
        grad[5 * h] += delta_out;
    }
    (loss / n, grad)
}

/// Full-batch gradient descent on MSE with an adaptive step: an epoch that
/// lowers the loss is kept and grows the step, one that does not is undone
/// and shrinks it.
pub fn train_mlp(data: &PixelDataset, cfg: &TrainConfig) -> Result<MlpModel> {
    train_mlp_with_hidden(data, DEFAULT_HIDDEN, cfg)
}

pub fn train_mlp_with_hidden(
    data: &PixelDataset,
    hidden: usize,
    cfg: &TrainConfig,
) -> Result<MlpModel> {
    cfg.validate()?;
    if hidden == 0 {
        return Err(Error::InvalidConfig(
            "mlp needs at least one hidden unit".into(),
        ));
    }
    if !data.has_both_classes() {
        return Err(Error::SingleClassData);
    }
    let features = data.features();
    let targets = data.targets();
    let mut model = MlpModel::random(hidden, cfg.seed);
    let mut params = model.params();
    let mut loss = mlp_mse(&model, features, &targets);
    let mut step = cfg.initial_step;
    let mut history = Vec::new();
    let mut epochs = 0;
    let mut trial = model.clone();

    while epochs < cfg.max_epochs && loss > cfg.mse_goal {
        epochs += 1;
        model.set_params(&params);
        let (_, grad) = mlp_loss_and_gradient(&model, features, &targets);
        let candidate: Vec<f64> = params
            .iter()
            .zip(&grad)
            .map(|(p, g)| p - step * g)
            .collect();
        trial.set_params(&candidate);
        let trial_loss = mlp_mse(&trial, features, &targets);
        if trial_loss < loss && candidate.iter().all(|v| v.is_finite()) {
            params = candidate;
            loss = trial_loss;
            step *= cfg.step_increase;
        } else {
            step *= cfg.step_decrease;
        }
        history.push(loss);
    }

    model.set_params(&params);
    model.check()?;
    model.train_log = MlpTrainLog {
        final_mse: loss,
        epochs_run: epochs,
        history,
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SpaceTag;

    fn blobs(n_per: usize, seed: u64) -> PixelDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Vec::new();
        let mut l = Vec::new();
        for (center, label) in [([0.25, 0.3, 0.35], true), ([0.7, 0.65, 0.6], false)] {
            for _ in 0..n_per {
                f.push(center.map(|c: f64| (c + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0)));
                l.push(label);
            }
        }
        PixelDataset::new(f, l, SpaceTag::RgbNorm).unwrap()
    }

    #[test]
    fn zero_network_outputs_half() {
        let m = MlpModel::zeros(18);
        for x in [[0.0; 3], [1.0, -4.0, 9.0], [1e6, 0.0, -1e6]] {
            assert_eq!(mlp_forward(&m, x), 0.5);
        }
    }

    #[test]
    fn output_is_bounded_and_saturates() {
        let m = MlpModel::random(18, 4);
        for x in [[0.0; 3], [50.0, -50.0, 3.0], [-1e3, 1e3, 1e3]] {
            let y = mlp_forward(&m, x);
            assert!(y > 0.0 && y < 1.0);
        }
        let mut big = MlpModel::zeros(18);
        big.b2 = 50.0;
        assert!(mlp_forward(&big, [0.3; 3]) > 1.0 - 1e-15);
    }

    #[test]
    fn params_round_trip() {
        let m = MlpModel::random(5, 1);
        let mut z = MlpModel::zeros(5);
        z.set_params(&m.params());
        assert_eq!(z.params(), m.params());
        assert_eq!(z.w1, m.w1);
        assert!(m.params().iter().all(|v| (-0.5..=0.5).contains(v)));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let data = blobs(10, 3);
        let targets = data.targets();
        for seed in 0..5 {
            let m = MlpModel::random(6, seed);
            let (_, grad) = mlp_loss_and_gradient(&m, data.features(), &targets);
            let base = m.params();
            let h = 1e-5;
            for i in 0..base.len() {
                let mut plus = m.clone();
                let mut p = base.clone();
                p[i] += h;
                plus.set_params(&p);
                let mut minus = m.clone();
                p[i] -= 2.0 * h;
                minus.set_params(&p);
                let numeric = (mlp_mse(&plus, data.features(), &targets)
                    - mlp_mse(&minus, data.features(), &targets))
                    / (2.0 * h);
                let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-8);
                assert!(
                    rel <= 1e-4,
                    "param {i}: analytic {} numeric {numeric}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn single_class_rejected() {
        let ds = PixelDataset::new(
            vec![[0.1; 3], [0.2; 3]],
            vec![true, true],
            SpaceTag::RgbNorm,
        )
        .unwrap();
        assert!(matches!(
            train_mlp(&ds, &TrainConfig::default()),
            Err(Error::SingleClassData)
        ));
    }

    #[test]
    fn training_is_deterministic_and_monotone() {
        let data = blobs(20, 8);
        let cfg = TrainConfig {
            max_epochs: 200,
            seed: 12,
            ..TrainConfig::default()
        };
        let a = train_mlp(&data, &cfg).unwrap();
        let b = train_mlp(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.train_log.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.train_log.epochs_run, a.train_log.history.len());
        assert_eq!(
            a.train_log.final_mse,
            mlp_mse(&a, data.features(), &data.targets())
        );
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = blobs(108, 21);
        let cfg = TrainConfig::default();
        let m = train_mlp(&data, &cfg).unwrap();
        assert!(
            m.train_log.final_mse <= 1e-4,
            "mse {}",
            m.train_log.final_mse
        );
        assert!(m.train_log.epochs_run <= 1000);
    }
}
