//! End-to-end detection and dataset evaluation built from the other modules.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classifiers::{classify_image, ClassifierModel, ModelFile, ScoreImage};
use crate::colorspace::FeatureSpace;
use crate::dataset::{load_image, load_mask, BinaryMask, RgbImage};
use crate::metrics::{confusion, rmse, roc_curve, ConfusionCounts, EvaluationReport, RocCurve};
use crate::postprocess::{apply_mask, clean_mask, StructuringElement};
use crate::{Error, Result};

/// Fails unless the model was trained in `space`.
pub fn check_space(file: &ModelFile, space: &FeatureSpace) -> Result<()> {
    if file.space_tag != space.tag() {
        return Err(Error::SpaceTagMismatch(format!(
            "model was trained in {} but features are in {}",
            file.space_tag,
            space.tag()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub scores: ScoreImage,
    pub raw_mask: BinaryMask,
    pub clean_mask: BinaryMask,
    pub masked: RgbImage,
}

/// Features → scores → thresholded mask → morphological cleanup → masked image.
pub fn detect(
    model: &ClassifierModel,
    space: &FeatureSpace,
    image: &RgbImage,
    threshold: f64,
    se: &StructuringElement,
) -> Result<Detection> {
    let features = space.image(image);
    let (scores, raw_mask) = classify_image(model, &features, threshold);
    let cleaned = clean_mask(&raw_mask, se);
    let masked = apply_mask(image, &cleaned)?;
    Ok(Detection {
        scores,
        raw_mask,
        clean_mask: cleaned,
        masked,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePair {
    pub stem: String,
    pub image: PathBuf,
    pub mask: PathBuf,
}

const IMAGE_EXTS: [&str; 2] = ["png", "ppm"];
const MASK_EXTS: [&str; 3] = ["png", "pgm", "ppm"];

/// Pairs every `x.png` (or `.ppm`) in `dir` with `x_mask.png` (or `.pgm`,
/// `.ppm`). Images without a mask are skipped. Sorted by stem.
pub fn find_pairs(dir: impl AsRef<Path>) -> Result<Vec<ImagePair>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut pairs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let (Some(stem), Some(ext)) = (
            path.file_stem().and_then(|s| s.to_str()),
            path.extension().and_then(|s| s.to_str()),
        ) else {
            continue;
        };
        if stem.ends_with("_mask") || !IMAGE_EXTS.contains(&ext.to_ascii_lowercase().as_str()) {
            continue;
        }
        let mask = MASK_EXTS
            .iter()
            .map(|m| dir.join(format!("{stem}_mask.{m}")))
            .find(|p| p.is_file());
        if let Some(mask) = mask {
            pairs.push(ImagePair {
                stem: stem.to_string(),
                image: path.clone(),
                mask,
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoPairsFound(dir.to_path_buf()));
    }
    pairs.sort_by(|a, b| a.stem.cmp(&b.stem).then_with(|| a.image.cmp(&b.image)));
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageResult {
    pub stem: String,
    pub counts: ConfusionCounts,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvaluationReport,
    /// `None` when the pooled ground truth holds a single class.
    pub roc: Option<RocCurve>,
    pub per_image: Vec<ImageResult>,
}

/// Which mask the confusion counts are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskChoice {
    #[default]
    Raw,
    Clean,
}

/// One image's result with its scores, predictions and truth.
type PerImage = (ImageResult, Vec<f64>, Vec<bool>, Vec<bool>);

/// Runs detection on every pair (concurrently) and pools the pixels of all
/// images, in stem order, into one report.
pub fn evaluate_pairs(
    model: &ClassifierModel,
    space: &FeatureSpace,
    pairs: &[ImagePair],
    threshold: f64,
    se: &StructuringElement,
    choice: MaskChoice,
) -> Result<Evaluation> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let results: Vec<PerImage> = pairs
        .par_iter()
        .map(|pair| {
            let image = load_image(&pair.image)?;
            let truth = load_mask(&pair.mask)?;
            if !image.same_shape(&truth) {
                return Err(Error::ShapeMismatch(format!(
                    "{} and its mask differ in size",
                    pair.image.display()
                )));
            }
            let start = std::time::Instant::now();
            let det = detect(model, space, &image, threshold, se)?;
            let seconds = start.elapsed().as_secs_f64();
            let pred = match choice {
                MaskChoice::Raw => det.raw_mask,
                MaskChoice::Clean => det.clean_mask,
            };
            let counts = confusion(&pred, &truth)?;
            Ok((
                ImageResult {
                    stem: pair.stem.clone(),
                    counts,
                    seconds,
                },
                det.scores.values().to_vec(),
                pred.values().to_vec(),
                truth.values().to_vec(),
            ))
        })
        .collect::<Result<_>>()?;

    let mut scores = Vec::new();
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    let mut per_image = Vec::with_capacity(results.len());
    for (res, s, p, t) in results {
        scores.extend(s);
        pred.extend(p);
        truth.extend(t);
        per_image.push(res);
    }
    let n = truth.len();
    let truth = BinaryMask::new(n, 1, truth)?;
    let pred = BinaryMask::new(n, 1, pred)?;
    let counts = confusion(&pred, &truth)?;
    let roc = match roc_curve(&scores, &truth) {
        Ok(r) => Some(r),
        Err(Error::SingleClassTruth) => None,
        Err(e) => return Err(e),
    };
    let report = EvaluationReport::from_parts(counts, roc.as_ref(), rmse(&scores, &truth)?)?;
    Ok(Evaluation {
        report,
        roc,
        per_image,
    })
}
