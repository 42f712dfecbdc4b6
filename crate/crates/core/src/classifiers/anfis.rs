//! First-order Sugeno ANFIS with Gaussian premises.
//!
//! Rules are seeded from fuzzy c-means clusters of the joint (input, target)
//! vectors. Training alternates a least-squares solve for the linear
//! consequents with a gradient step on the Gaussian centers and widths.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::dataset::PixelDataset;
use crate::fcm::{fcm_cluster, FcmConfig};
use crate::{Error, Result};

pub const DEFAULT_RULES: usize = 15;
pub const SIGMA_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMf {
    pub center: f64,
    pub sigma: f64,
}

impl GaussianMf {
    pub fn new(center: f64, sigma: f64) -> Self {
        Self { center, sigma }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.center;
        (-d * d / (2.0 * self.sigma * self.sigma)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnfisTrainLog {
    pub final_rmse: f64,
    pub epochs_run: usize,
    #[serde(default)]
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnfisModel {
    pub n_rules: usize,
    /// Per rule, one membership function per input dimension.
    pub premise: Vec<[GaussianMf; 3]>,
    /// Per rule `(p1, p2, p3, p0)`: `f = p1·x1 + p2·x2 + p3·x3 + p0`.
    pub consequents: Vec<[f64; 4]>,
    #[serde(default)]
    pub train_log: AnfisTrainLog,
}

impl AnfisModel {
    pub fn from_parts(premise: Vec<[GaussianMf; 3]>, consequents: Vec<[f64; 4]>) -> Result<Self> {
        if premise.is_empty() || premise.len() != consequents.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} premise rules but {} consequents",
                premise.len(),
                consequents.len()
            )));
        }
        let m = Self {
            n_rules: premise.len(),
            premise,
            consequents,
            train_log: AnfisTrainLog::default(),
        };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        let sig_ok = self
            .premise
            .iter()
            .flatten()
            .all(|mf| mf.sigma > 0.0 && mf.sigma.is_finite() && mf.center.is_finite());
        let con_ok = self.consequents.iter().flatten().all(|v| v.is_finite());
        if !sig_ok || !con_ok {
            return Err(Error::InvalidInput(
                "anfis parameters must be finite with positive widths".into(),
            ));
        }
        Ok(())
    }

    /// Unnormalized firing strength of every rule.
    pub fn firing_strengths(&self, x: [f64; 3]) -> Vec<f64> {
        self.premise
            .iter()
            .map(|mfs| mfs[0].eval(x[0]) * mfs[1].eval(x[1]) * mfs[2].eval(x[2]))
            .collect()
    }

    fn rule_output(&self, r: usize, x: [f64; 3]) -> f64 {
        let p = &self.consequents[r];
        p[0] * x[0] + p[1] * x[1] + p[2] * x[2] + p[3]
    }

    /// Normalized rule weights actually used by the output layer: firing
    /// strengths over their sum, or uniform weights when all underflow.
    fn output_weights(&self, x: [f64; 3]) -> Vec<f64> {
        normalized_strengths(self, x)
            .unwrap_or_else(|| vec![1.0 / self.n_rules as f64; self.n_rules])
    }
}

/// Firing strengths divided by their sum; `None` when every strength is 0.
pub fn normalized_strengths(m: &AnfisModel, x: [f64; 3]) -> Option<Vec<f64>> {
    let mut w = m.firing_strengths(x);
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    for v in w.iter_mut() {
        *v /= total;
    }
    Some(w)
}

/// Weighted average of the rule outputs. Unbounded; falls back to the plain
/// mean of the rule outputs when no rule fires.
pub fn anfis_forward(m: &AnfisModel, x: [f64; 3]) -> f64 {
    m.output_weights(x)
        .iter()
        .enumerate()
        .map(|(r, w)| w * m.rule_output(r, x))
        .sum()
}

pub fn anfis_rmse(m: &AnfisModel, data: &PixelDataset) -> f64 {
    let targets = data.targets();
    let sse: f64 = data
        .features()
        .iter()
        .zip(&targets)
        .map(|(x, t)| (anfis_forward(m, *x) - t).powi(2))
        .sum();
    (sse / targets.len() as f64).sqrt()
}

/// Builds the rule base from fuzzy c-means clusters of `[x1, x2, x3, target]`.
///
/// Rule centers are the input coordinates of the cluster centers. Widths are
/// the standard deviations of each input around its center, weighted by
/// `u^m` (the same weights the center update uses), floored at
/// [`SIGMA_FLOOR`]. Consequents start at zero.
pub fn init_anfis_from_fcm(
    data: &PixelDataset,
    n_rules: usize,
    fcm_cfg: &FcmConfig,
) -> Result<AnfisModel> {
    if n_rules == 0 {
        return Err(Error::InvalidConfig("anfis needs at least one rule".into()));
    }
    if data.len() < n_rules {
        return Err(Error::DegenerateData(format!(
            "{} samples cannot seed {n_rules} rules",
            data.len()
        )));
    }
    let joint: Vec<[f64; 4]> = data
        .features()
        .iter()
        .zip(data.targets())
        .map(|(x, t)| [x[0], x[1], x[2], t])
        .collect();

    let (centers, memberships) = if n_rules == 1 {
        let n = joint.len() as f64;
        let mean: Vec<f64> = (0..4)
            .map(|j| joint.iter().map(|p| p[j]).sum::<f64>() / n)
            .collect();
        (vec![mean], vec![vec![1.0; joint.len()]])
    } else {
        let cfg = FcmConfig {
            n_clusters: n_rules,
            ..*fcm_cfg
        };
        let res = fcm_cluster(&joint, &cfg)?;
        (res.centers, res.memberships)
    };

    let m = fcm_cfg.exponent_m;
    let premise = centers
        .iter()
        .zip(&memberships)
        .map(|(center, u)| {
            let weights: Vec<f64> = u.iter().map(|v| v.powf(m)).collect();
            let total: f64 = weights.iter().sum();
            std::array::from_fn(|j| {
                let var = if total > 0.0 {
                    joint
                        .iter()
                        .zip(&weights)
                        .map(|(p, w)| w * (p[j] - center[j]).powi(2))
                        .sum::<f64>()
                        / total
                } else {
                    0.0
                };
                GaussianMf::new(center[j], var.sqrt().max(SIGMA_FLOOR))
            })
        })
        .collect();
    AnfisModel::from_parts(premise, vec![[0.0; 4]; n_rules])
}

/// Solves the consequents by linear least squares for the current premise
/// (minimum-norm solution when the design is rank deficient).
pub fn anfis_lse_pass(model: &AnfisModel, data: &PixelDataset) -> AnfisModel {
    anfis_lse_fit(model, data.features(), &data.targets())
}

/// Least-squares consequents for arbitrary real targets.
pub fn anfis_lse_fit(model: &AnfisModel, features: &[[f64; 3]], targets: &[f64]) -> AnfisModel {
    let n = features.len();
    let r = model.n_rules;
    let mut design = DMatrix::<f64>::zeros(n, 4 * r);
    for (k, x) in features.iter().enumerate() {
        for (rule, w) in model.output_weights(*x).into_iter().enumerate() {
            design[(k, 4 * rule)] = w * x[0];
            design[(k, 4 * rule + 1)] = w * x[1];
            design[(k, 4 * rule + 2)] = w * x[2];
            design[(k, 4 * rule + 3)] = w;
        }
    }
    let rhs = DVector::from_column_slice(targets);
    let svd = design.svd(true, true);
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = largest * (n.max(4 * r) as f64) * f64::EPSILON;
    let sol = svd
        .solve(&rhs, eps)
        .expect("both singular vector sets were computed");
    let mut out = model.clone();
    for (rule, p) in out.consequents.iter_mut().enumerate() {
        *p = std::array::from_fn(|i| sol[4 * rule + i]);
    }
    out
}

/// Gradient of the summed squared error with respect to every premise
/// parameter, laid out as `[center, sigma]` per rule and input.
fn premise_gradient(model: &AnfisModel, data: &PixelDataset) -> Vec<f64> {
    let r = model.n_rules;
    let mut grad = vec![0.0; 6 * r];
    for (x, t) in data.features().iter().zip(data.targets()) {
        let w = model.firing_strengths(*x);
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            continue;
        }
        let f: Vec<f64> = (0..r).map(|i| model.rule_output(i, *x)).collect();
        let y: f64 = w.iter().zip(&f).map(|(wi, fi)| wi * fi).sum::<f64>() / total;
        let d_err = 2.0 * (y - t);
        for i in 0..r {
            // ∂y/∂w_i = (f_i − y) / Σw
            let dy_dw = (f[i] - y) / total * w[i];
            for j in 0..3 {
                let mf = model.premise[i][j];
                let d = x[j] - mf.center;
                let s2 = mf.sigma * mf.sigma;
                grad[6 * i + 2 * j] += d_err * dy_dw * d / s2;
                grad[6 * i + 2 * j + 1] += d_err * dy_dw * d * d / (s2 * mf.sigma);
            }
        }
    }
    grad
}

fn step_premise(model: &AnfisModel, grad: &[f64], step: f64) -> Option<AnfisModel> {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let mut out = model.clone();
    for (i, mfs) in out.premise.iter_mut().enumerate() {
        for (j, mf) in mfs.iter_mut().enumerate() {
            mf.center -= step * grad[6 * i + 2 * j] / norm;
            mf.sigma = (mf.sigma - step * grad[6 * i + 2 * j + 1] / norm).max(SIGMA_FLOOR);
        }
    }
    Some(out)
}

/// Hybrid training: each epoch solves the consequents by least squares,
/// then moves the premise by a normalized gradient step of length `step`.
/// A premise move that raises the error is undone and the step shrinks;
/// otherwise it is kept and the step grows. The recorded per-epoch RMSE is
/// the post-least-squares error, which is non-increasing.
pub fn train_anfis(
    data: &PixelDataset,
    model: &AnfisModel,
    cfg: &TrainConfig,
) -> Result<AnfisModel> {
    cfg.validate()?;
    model.check()?;
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut current = model.clone();
    let mut step = cfg.initial_step;
    let mut history = Vec::new();
    let mut rmse = f64::INFINITY;

    for _ in 0..cfg.max_epochs {
        current = anfis_lse_pass(&current, data);
        let lse_rmse = anfis_rmse(&current, data);
        rmse = lse_rmse;
        history.push(lse_rmse);
        if lse_rmse <= cfg.rmse_goal {
            break;
        }
        let grad = premise_gradient(&current, data);
        match step_premise(&current, &grad, step) {
            Some(candidate) => {
                let cand_rmse = anfis_rmse(&candidate, data);
                if cand_rmse < lse_rmse {
                    current = candidate;
                    rmse = cand_rmse;
                    step *= cfg.step_increase;
                } else {
                    step *= cfg.step_decrease;
                }
            }
            None => break,
        }
    }

    current.check()?;
    current.train_log = AnfisTrainLog {
        final_rmse: rmse,
        epochs_run: history.len(),
        history,
    };
    Ok(current)
}
