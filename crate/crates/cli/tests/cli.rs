use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use skinspace::classifiers::{ClassifierModel, MlpModel, ModelFile};
use skinspace::dataset::{load_image, load_mask, save_image, save_mask, SpaceTag};
use skinspace::synthetic::{skin_scene, two_color_scene, SceneConfig};

const SKIN: [u8; 3] = [205, 150, 125];
const GRASS: [u8; 3] = [40, 110, 50];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skinspace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Runs a command expected to fail and returns its stderr.
fn fails(args: &[&str], kind: &str) -> String {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.starts_with(&format!("error[{kind}]: ")),
        "{args:?}: expected {kind}, got {err:?}"
    );
    assert_eq!(err.trim_end().lines().count(), 1, "{err:?}");
    err
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Writes `stem.png` / `stem_mask.png` pairs of two flat colors.
fn two_color_pairs(dir: &Path, n: usize) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let fg = [SKIN[0] - 10 * i as u8, SKIN[1], SKIN[2]];
        let (img, mask) = two_color_scene(40, 30, fg, GRASS);
        save_image(&img, dir.join(format!("img{i}.png"))).unwrap();
        save_mask(&mask, dir.join(format!("img{i}_mask.png"))).unwrap();
    }
    dir.to_path_buf()
}

fn scene_pairs(dir: &Path, seeds: &[u64]) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    for &seed in seeds {
        let (img, mask) = skin_scene(&SceneConfig::separable(seed));
        save_image(&img, dir.join(format!("scene{seed}.png"))).unwrap();
        save_mask(&mask, dir.join(format!("scene{seed}_mask.png"))).unwrap();
    }
    dir.to_path_buf()
}

/// Skin iff the red channel is high; exact on the two-color pairs.
fn red_model(dir: &Path) -> PathBuf {
    let mut m = MlpModel::zeros(1);
    m.w1[0] = [60.0, 0.0, 0.0];
    m.b1[0] = -30.0;
    m.w2[0] = 60.0;
    m.b2 = -30.0;
    let path = dir.join("red.json");
    ModelFile::new(ClassifierModel::Mlp(m), SpaceTag::RgbNorm)
        .save(&path)
        .unwrap();
    path
}

#[test]
fn optimize_two_colors() {
    let dir = tempfile::tempdir().unwrap();
    let (img, mask) = two_color_scene(40, 40, SKIN, GRASS);
    save_image(&img, dir.path().join("a.png")).unwrap();
    save_mask(&mask, dir.path().join("a_mask.png")).unwrap();
    let out = dir.path().join("w.json");
    let stdout = ok(&[
        "optimize",
        "--image",
        s(&dir.path().join("a.png")),
        "--mask",
        s(&dir.path().join("a_mask.png")),
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    assert!(stdout.contains("final cost"));
    assert_eq!(stdout.matches("gbest").count(), 30);
    let json = read_json(&out);
    assert!(json["meta"]["final_cost"].as_f64().unwrap() <= 0.05);
    assert_eq!(json["meta"]["seed"], 3);
    assert_eq!(json["mode"], "quadratic");
    assert_eq!(json["w"].as_array().unwrap().len(), 3);

    // same seed, same matrix
    let again = dir.path().join("w2.json");
    ok(&[
        "optimize",
        "--image",
        s(&dir.path().join("a.png")),
        "--mask",
        s(&dir.path().join("a_mask.png")),
        "--seed",
        "3",
        "--out",
        s(&again),
    ]);
    assert_eq!(read_json(&again), json);
}

#[test]
fn optimize_missing_mask_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = two_color_scene(10, 10, SKIN, GRASS);
    save_image(&img, dir.path().join("a.png")).unwrap();
    fails(
        &[
            "optimize",
            "--image",
            s(&dir.path().join("a.png")),
            "--mask",
            s(&dir.path().join("nope_mask.png")),
        ],
        "IoError",
    );
}

#[test]
fn iterations_flag_and_config_layering() {
    let dir = tempfile::tempdir().unwrap();
    let (img, mask) = two_color_scene(20, 20, SKIN, GRASS);
    let image = dir.path().join("a.png");
    let maskp = dir.path().join("a_mask.png");
    save_image(&img, &image).unwrap();
    save_mask(&mask, &maskp).unwrap();
    let out = dir.path().join("w.json");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"image": {:?}, "mask": {:?}, "iterations": 2, "particles": 4, "mode": "linear"}}"#,
            s(&image),
            s(&maskp)
        ),
    )
    .unwrap();

    ok(&["optimize", "--config", s(&cfg), "--out", s(&out)]);
    let json = read_json(&out);
    assert_eq!(json["meta"]["gbest_history"].as_array().unwrap().len(), 2);
    assert_eq!(json["mode"], "linear");

    ok(&[
        "optimize",
        "--config",
        s(&cfg),
        "--iterations",
        "1",
        "--out",
        s(&out),
    ]);
    let json = read_json(&out);
    assert_eq!(json["meta"]["gbest_history"].as_array().unwrap().len(), 1);

    std::fs::write(&cfg, r#"{"iteratons": 2}"#).unwrap();
    fails(&["optimize", "--config", s(&cfg)], "InvalidConfig");
}

#[test]
fn train_mlp_reaches_goal() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_color_pairs(&dir.path().join("train"), 3);
    let out = dir.path().join("mlp.json");
    ok(&["train", "mlp", "--data", s(&data), "--out", s(&out)]);
    let json = read_json(&out);
    assert_eq!(json["kind"], "mlp");
    assert_eq!(json["space_tag"], "rgb_norm");
    assert!(json["train_log"]["final_mse"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn train_anfis_defaults_to_fifteen_rules() {
    let dir = tempfile::tempdir().unwrap();
    let data = scene_pairs(&dir.path().join("train"), &[1, 2]);
    let out = dir.path().join("anfis.json");
    let stdout = ok(&[
        "train",
        "anfis",
        "--data",
        s(&data),
        "--epochs",
        "20",
        "--out",
        s(&out),
    ]);
    assert!(stdout.contains("15 rules"));
    let json = read_json(&out);
    assert_eq!(json["n_rules"], 15);
    assert_eq!(json["premise"].as_array().unwrap().len(), 15);
}

#[test]
fn train_distance_and_curated_samples() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_color_pairs(&dir.path().join("train"), 2);
    let samples = dir.path().join("samples.txt");
    // image 1 is img1; (20, 15) is the circle center, (0, 0) a corner
    std::fs::write(
        &samples,
        "# image x y label\n0 20 15 1\n1 20 15 1\n0 19 15 1\n1 21 14 1\n0 0 0 0\n1 39 29 0\n",
    )
    .unwrap();
    let out = dir.path().join("maha.json");
    ok(&[
        "train",
        "distance",
        "--data",
        s(&data),
        "--samples",
        s(&samples),
        "--distance",
        "mahalanobis",
        "--space",
        "lab_norm",
        "--out",
        s(&out),
    ]);
    let json = read_json(&out);
    assert_eq!(json["kind"], "distance");
    assert_eq!(json["distance_kind"], "mahalanobis");
    assert_eq!(json["space_tag"], "lab_norm");
}

#[test]
fn new_space_without_matrix_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = two_color_pairs(&dir.path().join("train"), 1);
    let out = run(&["train", "mlp", "--data", s(&data), "--space", "new_linear"]);
    assert_eq!(out.status.code(), Some(2));
    fails(
        &["train", "mlp", "--data", s(&data), "--space", "new_linear"],
        "UsageError",
    );
}

#[test]
fn constant_model_keeps_whole_image() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = MlpModel::zeros(18);
    m.b2 = 60.0;
    let model = dir.path().join("const.json");
    ModelFile::new(ClassifierModel::Mlp(m), SpaceTag::RgbNorm)
        .save(&model)
        .unwrap();
    let (img, _) = skin_scene(&SceneConfig::overlapping(4));
    let image = dir.path().join("photo.png");
    save_image(&img, &image).unwrap();
    let out = dir.path().join("det");
    ok(&[
        "detect",
        "--model",
        s(&model),
        "--image",
        s(&image),
        "--out",
        s(&out),
    ]);
    let clean = load_mask(out.join("photo_clean_mask.png")).unwrap();
    assert_eq!(clean.count_true(), clean.len());
    assert_eq!(load_image(out.join("photo_masked.png")).unwrap(), img);
    assert!(out.join("photo_scores.png").is_file());
    assert!(out.join("photo_raw_mask.png").is_file());
}

#[test]
fn detect_space_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("new.json");
    ModelFile::new(
        ClassifierModel::Mlp(MlpModel::zeros(18)),
        SpaceTag::NewLinear,
    )
    .save(&model)
    .unwrap();
    let (img, _) = two_color_scene(8, 8, SKIN, GRASS);
    let image = dir.path().join("a.png");
    save_image(&img, &image).unwrap();
    fails(
        &["detect", "--model", s(&model), "--image", s(&image)],
        "SpaceTagMismatch",
    );
}

#[test]
fn evaluate_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let model = red_model(dir.path());
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    fails(
        &["evaluate", "--model", s(&model), "--data", s(&empty)],
        "NoPairsFound",
    );
}

#[test]
fn perfect_model_report_and_roc_plot() {
    let dir = tempfile::tempdir().unwrap();
    let model = red_model(dir.path());
    let data = two_color_pairs(&dir.path().join("test"), 2);
    let out = dir.path().join("eval");
    ok(&[
        "evaluate",
        "--model",
        s(&model),
        "--data",
        s(&data),
        "--out",
        s(&out),
    ]);
    let report = read_json(&out.join("report.json"));
    let keys: Vec<&str> = report
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    let mut want = vec![
        "counts",
        "cdr",
        "frr",
        "far",
        "r",
        "p",
        "f",
        "fpr",
        "fnr",
        "tnr",
        "tde",
        "acc",
        "auc",
        "one_minus_eer",
        "rmse",
    ];
    let mut got = keys.clone();
    got.sort_unstable();
    want.sort_unstable();
    assert_eq!(got, want);
    for key in ["cdr", "acc", "auc", "one_minus_eer"] {
        assert_eq!(report[key], 1.0, "{key}");
    }
    assert!(report["rmse"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["counts"]["fn"], 0);
    assert_eq!(report["counts"]["fp"], 0);
    let per_image = std::fs::read_to_string(out.join("per_image.csv")).unwrap();
    assert_eq!(per_image.lines().count(), 3);

    let svg = dir.path().join("roc.svg");
    ok(&[
        "roc-plot",
        "--roc",
        s(&out.join("roc.csv")),
        "--title",
        "perfect",
        "--out",
        s(&svg),
    ]);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert!(text.contains("perfect"));
}

#[test]
fn trained_new_space_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = scene_pairs(&dir.path().join("train"), &[5]);
    let test = scene_pairs(&dir.path().join("test"), &[6]);
    let image = data.join("scene5.png");
    let mask = data.join("scene5_mask.png");
    let matrix = dir.path().join("w.json");
    ok(&[
        "optimize",
        "--image",
        s(&image),
        "--mask",
        s(&mask),
        "--mode",
        "linear",
        "--iterations",
        "3",
        "--stride",
        "2",
        "--out",
        s(&matrix),
    ]);
    let model = dir.path().join("m.json");
    ok(&[
        "train",
        "distance",
        "--data",
        s(&data),
        "--matrix",
        s(&matrix),
        "--out",
        s(&model),
    ]);
    assert_eq!(read_json(&model)["space_tag"], "new_linear");
    let out = dir.path().join("eval");
    ok(&[
        "evaluate",
        "--model",
        s(&model),
        "--data",
        s(&test),
        "--matrix",
        s(&matrix),
        "--clean",
        "--out",
        s(&out),
    ]);
    assert!(out.join("roc.csv").is_file());
    fails(
        &["evaluate", "--model", s(&model), "--data", s(&test)],
        "SpaceTagMismatch",
    );
}

#[test]
fn help_and_bad_flags() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("optimize"));
    let out = run(&["detect", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[UsageError]: "));
}
