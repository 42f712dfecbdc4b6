use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_PERCENTILE: f64 = 99.0;
pub const COVARIANCE_RIDGE: f64 = 1e-6;
const MIN_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Euclidean,
    Mahalanobis,
}

/// Skin-class model scored by distance to the class mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistanceRepr", into = "DistanceRepr")]
pub struct DistanceModel {
    pub kind: DistanceKind,
    pub mean: [f64; 3],
    pub covariance: Option<[[f64; 3]; 3]>,
    pub threshold: f64,
    precision: Option<Matrix3<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DistanceRepr {
    distance_kind: DistanceKind,
    mean: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariance: Option<[[f64; 3]; 3]>,
    threshold: f64,
}

impl From<DistanceModel> for DistanceRepr {
    fn from(m: DistanceModel) -> Self {
        Self {
            distance_kind: m.kind,
            mean: m.mean,
            covariance: m.covariance,
            threshold: m.threshold,
        }
    }
}

impl TryFrom<DistanceRepr> for DistanceModel {
    type Error = Error;

    fn try_from(r: DistanceRepr) -> Result<Self> {
        DistanceModel::new(r.distance_kind, r.mean, r.covariance, r.threshold)
    }
}

fn precision_of(cov: &[[f64; 3]; 3]) -> Result<Matrix3<f64>> {
    let m = Matrix3::from_fn(|i, j| cov[i][j]);
    for i in 0..3 {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                return Err(Error::InvalidInput("covariance is not symmetric".into()));
            }
        }
    }
    let chol = m.cholesky().ok_or(Error::SingularCovariance)?;
    Ok(chol.inverse())
}

impl DistanceModel {
    pub fn new(
        kind: DistanceKind,
        mean: [f64; 3],
        covariance: Option<[[f64; 3]; 3]>,
        threshold: f64,
    ) -> Result<Self> {
        if !mean.iter().all(|v| v.is_finite()) || !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidInput(
                "distance model needs a finite mean and a positive threshold".into(),
            ));
        }
        let precision = match (kind, &covariance) {
            (DistanceKind::Euclidean, None) => None,
            (DistanceKind::Mahalanobis, Some(cov)) => Some(precision_of(cov)?),
            (DistanceKind::Euclidean, Some(_)) => {
                return Err(Error::InvalidInput(
                    "euclidean model carries a covariance".into(),
                ))
            }
            (DistanceKind::Mahalanobis, None) => {
                return Err(Error::InvalidInput(
                    "mahalanobis model needs a covariance".into(),
                ))
            }
        };
        Ok(Self {
            kind,
            mean,
            covariance,
            threshold,
            precision,
        })
    }

    pub fn distance(&self, x: [f64; 3]) -> f64 {
        let d = Vector3::new(
            x[0] - self.mean[0],
            x[1] - self.mean[1],
            x[2] - self.mean[2],
        );
        match &self.precision {
            None => d.norm(),
            Some(p) => d.dot(&(p * d)).max(0.0).sqrt(),
        }
    }
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Fits the skin-class mean (and regularized sample covariance for
/// Mahalanobis) and sets the threshold at the given percentile of the
/// training distances.
pub fn fit_distance_model(
    skin: &[[f64; 3]],
    kind: DistanceKind,
    percentile_p: f64,
) -> Result<DistanceModel> {
    if skin.len() < 4 {
        return Err(Error::InsufficientSamples {
            class: "skin",
            requested: 4,
            available: skin.len(),
        });
    }
    if !(percentile_p > 0.0 && percentile_p <= 100.0) {
        return Err(Error::InvalidConfig(
            "percentile must be in (0, 100]".into(),
        ));
    }
    if skin.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite skin feature".into()));
    }
    let n = skin.len() as f64;
    let mean: [f64; 3] = std::array::from_fn(|j| skin.iter().map(|x| x[j]).sum::<f64>() / n);
    let covariance = match kind {
        DistanceKind::Euclidean => None,
        DistanceKind::Mahalanobis => Some(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let s: f64 = skin
                    .iter()
                    .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                    .sum();
                s / (n - 1.0) + if i == j { COVARIANCE_RIDGE } else { 0.0 }
            })
        })),
    };
    // provisional threshold; replaced below once distances are known
    let mut model = DistanceModel::new(kind, mean, covariance, 1.0)?;
    let mut dists: Vec<f64> = skin.iter().map(|x| model.distance(*x)).collect();
    dists.sort_by(f64::total_cmp);
    model.threshold = percentile(&dists, percentile_p).max(MIN_THRESHOLD);
    Ok(model)
}

/// `threshold / (threshold + d)`: 1 at the mean, 0.5 at the threshold.
pub fn distance_score(m: &DistanceModel, x: [f64; 3]) -> f64 {
    m.threshold / (m.threshold + m.distance(x))
}
