use std::path::{Path, PathBuf};
use std::time::Instant;

use skinspace::classifiers::{
    fit_distance_model, init_anfis_from_fcm, train_anfis, train_mlp_with_hidden, ClassifierModel,
    ModelFile, TrainConfig, DEFAULT_HIDDEN, DEFAULT_PERCENTILE, DEFAULT_RULES,
};
use skinspace::colorspace::{FeatureSpace, TransformMatrix, TransformMode};
use skinspace::dataset::{
    dataset_from_points, load_image, load_mask, load_sample_points, sample_pixels, save_gray,
    save_image, save_mask, PixelDataset, SpaceTag,
};
use skinspace::fcm::FcmConfig;
use skinspace::metrics::RocCurve;
use skinspace::pipeline::{check_space, detect, evaluate_pairs, find_pairs, MaskChoice};
use skinspace::postprocess::StructuringElement;
use skinspace::pso::{optimize_objective, Interval, PsoConfig, SegmentationObjective};
use skinspace::Error;

use crate::args::{
    ClassifierArg, DetectArgs, DistanceArg, EvaluateArgs, FcmArgs, ModeArg, OptimizeArgs,
    RocPlotArgs, TrainArgs, VariantArg,
};
use crate::error::CliError;

type CmdResult = Result<(), CliError>;

const DEFAULT_SAMPLES_PER_CLASS: usize = 108;
const DEFAULT_THRESHOLD: f64 = 0.5;

fn required<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::usage(format!("missing --{}", name.replace('_', "-"))))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| {
        CliError::from(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn fcm_config(a: &FcmArgs, seed: u64) -> FcmConfig {
    let d = FcmConfig::default();
    FcmConfig {
        exponent_m: a.fcm_m.unwrap_or(d.exponent_m),
        max_iter: a.fcm_max_iter.unwrap_or(d.max_iter),
        min_improvement: a.fcm_min_improvement.unwrap_or(d.min_improvement),
        seed,
        ..d
    }
}

fn check_threshold(t: f64) -> CmdResult {
    if t.is_finite() {
        Ok(())
    } else {
        Err(CliError::config("threshold must be finite"))
    }
}

pub fn optimize(a: OptimizeArgs) -> CmdResult {
    let image_path = required(a.image, "image")?;
    let mask_path = required(a.mask, "mask")?;
    let out = a.out.unwrap_or_else(|| PathBuf::from("matrix.json"));
    let seed = a.seed.unwrap_or(0);
    let d = PsoConfig::default();
    let cfg = PsoConfig {
        n_particles: a.particles.unwrap_or(d.n_particles),
        n_iterations: a.iterations.unwrap_or(d.n_iterations),
        inertia_init: a.inertia_init.unwrap_or(d.inertia_init),
        inertia_final: a.inertia_final.unwrap_or(d.inertia_final),
        c1_init: a.c1_init.unwrap_or(d.c1_init),
        c1_final: a.c1_final.unwrap_or(d.c1_final),
        c2_init: a.c2_init.unwrap_or(d.c2_init),
        c2_final: a.c2_final.unwrap_or(d.c2_final),
        position_bounds: Interval::new(
            a.position_min.unwrap_or(d.position_bounds.lo),
            a.position_max.unwrap_or(d.position_bounds.hi),
        ),
        velocity_bounds: Interval::new(
            a.velocity_min.unwrap_or(d.velocity_bounds.lo),
            a.velocity_max.unwrap_or(d.velocity_bounds.hi),
        ),
        c_step: a.c_step.unwrap_or(d.c_step),
        seed,
    };
    let stride = a.stride.unwrap_or(1);
    if stride == 0 {
        return Err(CliError::config("stride must be >= 1"));
    }
    let fcm = fcm_config(&a.fcm, seed);
    fcm.validate()?;

    let image = load_image(&image_path)?;
    let mask = load_mask(&mask_path)?;
    let mode: TransformMode = a.mode.unwrap_or(ModeArg::Quadratic).into();
    let variant = a.quadratic_variant.unwrap_or(VariantArg::AsPrinted).into();
    let objective = SegmentationObjective::new(&image, &mask)?
        .with_mode(mode, variant)
        .with_fcm(fcm)
        .with_stride(stride);
    let res = optimize_objective(&objective, &cfg)?;
    for (i, c) in res.gbest_history.iter().enumerate() {
        println!("iteration {:>3}: gbest {c:.6}", i + 1);
    }
    println!("final cost {:.6}", res.best_cost);
    res.best_matrix.save(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Picks the feature space from an explicit tag, else the matrix, else the
/// fallback tag.
fn resolve_space(
    explicit: Option<SpaceTag>,
    matrix: Option<&Path>,
    fallback: SpaceTag,
) -> Result<FeatureSpace, CliError> {
    let matrix = matrix.map(TransformMatrix::load).transpose()?;
    let tag = explicit
        .or(matrix.as_ref().map(TransformMatrix::space_tag))
        .unwrap_or(fallback);
    if tag.needs_matrix() && matrix.is_none() {
        return Err(CliError::usage(format!("space {tag} requires --matrix")));
    }
    Ok(FeatureSpace::resolve(tag, matrix)?)
}

fn training_pixels(a: &TrainArgs, seed: u64) -> Result<PixelDataset, CliError> {
    let data = required(a.data.as_deref(), "data")?;
    let pairs = find_pairs(data)?;
    match &a.samples {
        Some(samples) => {
            let images = pairs
                .iter()
                .map(|p| load_image(&p.image))
                .collect::<Result<Vec<_>, _>>()?;
            let points = load_sample_points(samples)?;
            Ok(dataset_from_points(&images, &points)?)
        }
        None => {
            let labeled = pairs
                .iter()
                .map(|p| Ok((load_image(&p.image)?, load_mask(&p.mask)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(sample_pixels(
                &labeled,
                a.n_skin.unwrap_or(DEFAULT_SAMPLES_PER_CLASS),
                a.n_nonskin.unwrap_or(DEFAULT_SAMPLES_PER_CLASS),
                seed,
            )?)
        }
    }
}

pub fn train(a: TrainArgs) -> CmdResult {
    let kind = required(a.kind, "kind")?;
    let seed = a.seed.unwrap_or(0);
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("model.json"));
    let space = resolve_space(
        a.space.map(Into::into),
        a.matrix.as_deref(),
        SpaceTag::RgbNorm,
    )?;
    let rgb = training_pixels(&a, seed)?;
    let feats = space.dataset(&rgb)?;

    let d = TrainConfig::default();
    let t = &a.trainer;
    let tc = TrainConfig {
        max_epochs: t.epochs.unwrap_or(d.max_epochs),
        mse_goal: t.mse_goal.unwrap_or(d.mse_goal),
        rmse_goal: t.rmse_goal.unwrap_or(d.rmse_goal),
        seed,
        initial_step: t.initial_step.unwrap_or(d.initial_step),
        step_increase: t.step_increase.unwrap_or(d.step_increase),
        step_decrease: t.step_decrease.unwrap_or(d.step_decrease),
    };
    let model = match kind {
        ClassifierArg::Mlp => {
            let m = train_mlp_with_hidden(&feats, a.hidden.unwrap_or(DEFAULT_HIDDEN), &tc)?;
            println!(
                "mlp: mse {:.3e} after {} epochs",
                m.train_log.final_mse, m.train_log.epochs_run
            );
            ClassifierModel::Mlp(m)
        }
        ClassifierArg::Anfis => {
            let init = init_anfis_from_fcm(
                &feats,
                a.rules.unwrap_or(DEFAULT_RULES),
                &fcm_config(&a.fcm, seed),
            )?;
            let m = train_anfis(&feats, &init, &tc)?;
            println!(
                "anfis: {} rules, rmse {:.3e} after {} epochs",
                m.n_rules, m.train_log.final_rmse, m.train_log.epochs_run
            );
            ClassifierModel::Anfis(m)
        }
        ClassifierArg::Distance => {
            let m = fit_distance_model(
                &feats.skin_features(),
                a.distance.unwrap_or(DistanceArg::Euclidean).into(),
                a.percentile.unwrap_or(DEFAULT_PERCENTILE),
            )?;
            println!("distance: threshold {:.6}", m.threshold);
            ClassifierModel::Distance(m)
        }
    };
    println!("trained on {} pixels in {}", feats.len(), space.tag());
    ModelFile::new(model, space.tag()).save(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Detection and evaluation use the matrix's space when one is given and
/// the model's own space otherwise; new_* models therefore need --matrix.
fn model_and_space(
    model: &Path,
    matrix: Option<&Path>,
) -> Result<(ModelFile, FeatureSpace), CliError> {
    let file = ModelFile::load(model)?;
    let fallback = if file.space_tag.needs_matrix() {
        SpaceTag::RgbNorm
    } else {
        file.space_tag
    };
    let space = resolve_space(None, matrix, fallback)?;
    check_space(&file, &space)?;
    Ok((file, space))
}

pub fn detect_cmd(a: DetectArgs) -> CmdResult {
    let model_path = required(a.model, "model")?;
    let image_path = required(a.image, "image")?;
    let out = a.out.unwrap_or_else(|| PathBuf::from("."));
    let threshold = a.threshold.unwrap_or(DEFAULT_THRESHOLD);
    check_threshold(threshold)?;
    let se = match a.radius {
        Some(r) => StructuringElement::disk(r)?,
        None => StructuringElement::default(),
    };
    let (file, space) = model_and_space(&model_path, a.matrix.as_deref())?;
    let image = load_image(&image_path)?;

    let start = Instant::now();
    let det = detect(&file.model, &space, &image, threshold, &se)?;
    let secs = start.elapsed().as_secs_f64();

    ensure_dir(&out)?;
    let stem = image_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image");
    let (w, h) = (image.width(), image.height());
    save_gray(
        det.scores.values(),
        w,
        h,
        out.join(format!("{stem}_scores.png")),
    )?;
    save_mask(&det.raw_mask, out.join(format!("{stem}_raw_mask.png")))?;
    save_mask(&det.clean_mask, out.join(format!("{stem}_clean_mask.png")))?;
    save_image(&det.masked, out.join(format!("{stem}_masked.png")))?;
    println!(
        "{stem}: {} of {} pixels skin after cleanup ({secs:.3}s)",
        det.clean_mask.count_true(),
        det.clean_mask.len()
    );
    println!("wrote 4 images to {}", out.display());
    Ok(())
}

fn fmt_metric(m: skinspace::metrics::Metric) -> String {
    m.value()
        .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

pub fn evaluate(a: EvaluateArgs) -> CmdResult {
    let model_path = required(a.model, "model")?;
    let data = required(a.data, "data")?;
    let out = a.out.unwrap_or_else(|| PathBuf::from("."));
    let threshold = a.threshold.unwrap_or(DEFAULT_THRESHOLD);
    check_threshold(threshold)?;
    let se = match a.radius {
        Some(r) => StructuringElement::disk(r)?,
        None => StructuringElement::default(),
    };
    let choice = if a.clean {
        MaskChoice::Clean
    } else {
        MaskChoice::Raw
    };
    let (file, space) = model_and_space(&model_path, a.matrix.as_deref())?;
    let pairs = find_pairs(&data)?;
    let eval = evaluate_pairs(&file.model, &space, &pairs, threshold, &se, choice)?;

    ensure_dir(&out)?;
    eval.report.save_json(out.join("report.json"))?;
    let mut per_image = String::from("stem,tp,fn,fp,tn\n");
    for r in &eval.per_image {
        let c = &r.counts;
        per_image.push_str(&format!(
            "{},{},{},{},{}\n",
            r.stem, c.tp, c.fn_, c.fp, c.tn
        ));
        println!("{}: {:.3}s", r.stem, r.seconds);
    }
    write_text(&out.join("per_image.csv"), &per_image)?;
    match &eval.roc {
        Some(roc) => roc.save_csv(out.join("roc.csv"))?,
        None => eprintln!("note: ground truth holds a single class; no ROC written"),
    }
    let r = &eval.report;
    println!(
        "{} images, {} pixels: CDR {:.4} FRR {:.4} FAR {:.4}",
        pairs.len(),
        r.counts.total(),
        r.cdr,
        r.frr,
        r.far
    );
    println!(
        "acc {} F {} AUC {} 1-EER {} RMSE {:.4}",
        fmt_metric(r.acc),
        fmt_metric(r.f),
        fmt_metric(r.auc),
        fmt_metric(r.one_minus_eer),
        r.rmse
    );
    println!("wrote report to {}", out.display());
    Ok(())
}

pub fn roc_plot(a: RocPlotArgs) -> CmdResult {
    let roc_path = required(a.roc, "roc")?;
    let out = a.out.unwrap_or_else(|| PathBuf::from("roc.svg"));
    let text = std::fs::read_to_string(&roc_path).map_err(io_err(&roc_path))?;
    let roc = RocCurve::from_csv(&text)?;
    write_text(&out, &roc.to_svg(a.title.as_deref().unwrap_or("ROC")))?;
    println!("wrote {}", out.display());
    Ok(())
}
