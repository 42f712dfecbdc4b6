//! Pixel classifiers: a one-hidden-layer MLP, a first-order Sugeno ANFIS and
//! Euclidean/Mahalanobis distance models.
//!
//! Every model maps a 3-component feature vector to a soft score; a pixel is
//! skin when its score is at least the decision threshold (0.5 by default).

mod anfis;
mod distance;
mod mlp;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use anfis::{
    anfis_forward, anfis_lse_fit, anfis_lse_pass, anfis_rmse, init_anfis_from_fcm,
    normalized_strengths, train_anfis, AnfisModel, AnfisTrainLog, GaussianMf, DEFAULT_RULES,
    SIGMA_FLOOR,
};
pub use distance::{
    distance_score, fit_distance_model, DistanceKind, DistanceModel, DEFAULT_PERCENTILE,
};
pub use mlp::{
    mlp_forward, mlp_loss_and_gradient, mlp_mse, train_mlp, train_mlp_with_hidden, MlpModel,
    MlpTrainLog, DEFAULT_HIDDEN,
};

use crate::colorspace::FeatureImage;
use crate::dataset::{BinaryMask, SpaceTag};
use crate::{Error, Result};

/// Iterative-training controls shared by the MLP and ANFIS trainers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// MLP stopping goal on mean squared error.
    pub mse_goal: f64,
    /// ANFIS stopping goal on root mean squared error.
    pub rmse_goal: f64,
    pub seed: u64,
    pub initial_step: f64,
    pub step_increase: f64,
    pub step_decrease: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            mse_goal: 1e-10,
            rmse_goal: 0.0,
            seed: 0,
            initial_step: 0.01,
            step_increase: 1.1,
            step_decrease: 0.9,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if !(self.mse_goal >= 0.0) || !(self.rmse_goal >= 0.0) {
            return Err(Error::InvalidConfig("training goals must be >= 0".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidConfig("initial_step must be positive".into()));
        }
        if !(self.step_increase > 1.0 && 1.0 > self.step_decrease && self.step_decrease > 0.0) {
            return Err(Error::InvalidConfig(
                "need step_increase > 1 > step_decrease > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierModel {
    Mlp(MlpModel),
    Anfis(AnfisModel),
    Distance(DistanceModel),
}

impl ClassifierModel {
    pub fn score(&self, x: [f64; 3]) -> f64 {
        match self {
            ClassifierModel::Mlp(m) => mlp_forward(m, x),
            ClassifierModel::Anfis(m) => anfis_forward(m, x),
            ClassifierModel::Distance(m) => distance_score(m, x),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassifierModel::Mlp(_) => "mlp",
            ClassifierModel::Anfis(_) => "anfis",
            ClassifierModel::Distance(_) => "distance",
        }
    }
}

pub const MODEL_FILE_VERSION: u32 = 1;

/// On-disk form of a classifier: the model plus the feature space it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub v: u32,
    pub space_tag: SpaceTag,
    #[serde(flatten)]
    pub model: ClassifierModel,
}

impl ModelFile {
    pub fn new(model: ClassifierModel, space_tag: SpaceTag) -> Self {
        Self {
            v: MODEL_FILE_VERSION,
            space_tag,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.v != MODEL_FILE_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model file version {}",
                file.v
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Per-pixel soft scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScoreImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} scores for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Hard decision: `score >= threshold` is skin.
    pub fn threshold(&self, threshold: f64) -> BinaryMask {
        BinaryMask::new(
            self.width,
            self.height,
            self.data.iter().map(|&s| s >= threshold).collect(),
        )
        .expect("shape preserved")
    }
}

/// Scores every pixel and thresholds (inclusive) into a mask.
pub fn classify_image(
    model: &ClassifierModel,
    fimg: &FeatureImage,
    threshold: f64,
) -> (ScoreImage, BinaryMask) {
    let data: Vec<f64> = fimg.pixels().par_iter().map(|&x| model.score(x)).collect();
    let scores = ScoreImage {
        width: fimg.width(),
        height: fimg.height(),
        data,
    };
    let mask = scores.threshold(threshold);
    (scores, mask)
}
