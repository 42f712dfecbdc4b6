//! Pixel-level evaluation: confusion counts, rate metrics, ROC analysis.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::BinaryMask;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fn_: self.fn_ + o.fn_,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
        }
    }
}

/// A rate that may be undefined because its denominator is zero.
/// Serializes as a number or the string `"n/a"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    Undefined,
}

impl Metric {
    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::Undefined => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        matches!(self, Metric::Undefined)
    }

    fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            Metric::Undefined
        } else {
            Metric::Value(num as f64 / den as f64)
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Value(v) => write!(f, "{v:.5}"),
            Metric::Undefined => f.write_str("n/a"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => s.serialize_f64(*v),
            Metric::Undefined => s.serialize_str("n/a"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Metric::Value(v)),
            Raw::Str(s) if s == "n/a" => Ok(Metric::Undefined),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"n/a\", got {s:?}"
            ))),
        }
    }
}

fn check_shape(n_pred: usize, truth: &BinaryMask) -> Result<()> {
    if n_pred != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{n_pred} predictions for {} ground-truth pixels",
            truth.len()
        )));
    }
    Ok(())
}

pub fn confusion(pred: &BinaryMask, truth: &BinaryMask) -> Result<ConfusionCounts> {
    if !pred.same_shape(truth) {
        return Err(Error::ShapeMismatch(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.values().iter().zip(truth.values()) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (false, true) => c.fn_ += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Correct detection rate, false rejection rate and false acceptance rate,
/// all over the total pixel count.
pub fn cdr_frr_far(c: &ConfusionCounts) -> Result<(f64, f64, f64)> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let t = total as f64;
    Ok(((c.tp + c.tn) as f64 / t, c.fn_ as f64 / t, c.fp as f64 / t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolMetrics {
    pub r: Metric,
    pub p: Metric,
    pub f: Metric,
    pub fpr: Metric,
    pub fnr: Metric,
    pub tnr: Metric,
    pub tde: Metric,
    pub acc: Metric,
}

/// Recall, precision, F-measure, FPR, FNR, TNR, total detection error and
/// accuracy. A rate over an empty class is undefined; F is 0 when both
/// recall and precision are 0.
pub fn protocol_metrics(c: &ConfusionCounts) -> Result<ProtocolMetrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let r = Metric::ratio(c.tp, c.tp + c.fn_);
    let p = Metric::ratio(c.tp, c.tp + c.fp);
    let f = match (r, p) {
        (Metric::Value(r), Metric::Value(p)) if r + p == 0.0 => Metric::Value(0.0),
        (Metric::Value(r), Metric::Value(p)) => Metric::Value(2.0 * r * p / (r + p)),
        _ => Metric::Undefined,
    };
    let fpr = Metric::ratio(c.fp, c.tn + c.fp);
    let fnr = Metric::ratio(c.fn_, c.tp + c.fn_);
    let tnr = Metric::ratio(c.tn, c.tn + c.fp);
    let tde = match (fpr, fnr) {
        (Metric::Value(a), Metric::Value(b)) => Metric::Value(a + b),
        _ => Metric::Undefined,
    };
    let acc = Metric::ratio(c.tp + c.tn, total);
    Ok(ProtocolMetrics {
        r,
        p,
        f,
        fpr,
        fnr,
        tnr,
        tde,
        acc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Sweeps the decision rule `score >= t` over `+∞`, every distinct score in
/// decreasing order, and `-∞`. Points come out ordered by increasing FPR.
pub fn roc_curve(scores: &[f64], truth: &BinaryMask) -> Result<RocCurve> {
    check_shape(scores.len(), truth)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let mut pairs: Vec<(f64, bool)> = scores
        .iter()
        .cloned()
        .zip(truth.values().iter().cloned())
        .collect();
    let n_pos = pairs.iter().filter(|p| p.1).count();
    let n_neg = pairs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassTruth);
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (pos, neg) = (n_pos as f64, n_neg as f64);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == t {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / neg,
            tpr: tp as f64 / pos,
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    Ok(RocCurve { points })
}

impl RocCurve {
    /// Builds a curve directly from `(fpr, tpr)` pairs (thresholds NaN).
    pub fn from_points(pts: &[(f64, f64)]) -> Self {
        Self {
            points: pts
                .iter()
                .map(|&(fpr, tpr)| RocPoint {
                    threshold: f64::NAN,
                    fpr,
                    tpr,
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            writeln!(out, "{:.6},{:.6},{:.6}", p.threshold, p.fpr, p.tpr).unwrap();
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::InvalidInput(format!("bad ROC row {line:?}"));
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("threshold,fpr,tpr") {
            return Err(Error::InvalidInput(
                "ROC CSV must start with threshold,fpr,tpr".into(),
            ));
        }
        let mut points = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.trim().split(',').collect();
            if cols.len() != 3 {
                return Err(bad(line));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
            points.push(RocPoint {
                threshold: num(cols[0])?,
                fpr: num(cols[1])?,
                tpr: num(cols[2])?,
            });
        }
        if points.len() < 2 {
            return Err(Error::InvalidInput("ROC needs at least two points".into()));
        }
        Ok(Self { points })
    }

    /// Line plot on the unit square with the chance diagonal.
    pub fn to_svg(&self, title: &str) -> String {
        let (size, margin) = (400.0, 50.0);
        let sx = |v: f64| margin + v * size;
        let sy = |v: f64| margin + (1.0 - v) * size;
        let mut path = String::new();
        for (i, p) in self.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            write!(path, "{cmd}{:.2},{:.2} ", sx(p.fpr), sy(p.tpr)).unwrap();
        }
        let total = size + 2.0 * margin;
        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
        )
        .unwrap();
        writeln!(svg, r#"<rect x="{margin}" y="{margin}" width="{size}" height="{size}" fill="white" stroke="black"/>"#).unwrap();
        writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
            sx(0.0),
            sy(0.0),
            sx(1.0),
            sy(1.0)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            path.trim_end()
        )
        .unwrap();
        for v in [0.0, 0.5, 1.0] {
            writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{v}</text>"#,
                sx(v),
                sy(0.0) + 18.0
            )
            .unwrap();
            writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{v}</text>"#,
                sx(0.0) - 6.0,
                sy(v) + 4.0
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">false positive rate</text>"#,
            sx(0.5),
            total - 10.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="15" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 15 {})">true positive rate</text>"#,
            sy(0.5),
            sy(0.5)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="30" font-size="14" text-anchor="middle">{}</text>"#,
            sx(0.5),
            xml_escape(title)
        )
        .unwrap();
        svg.push_str("</svg>\n");
        svg
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Trapezoidal area under the curve.
pub fn auc(roc: &RocCurve) -> f64 {
    roc.points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// `1 − EER`, where EER is the FPR at which FPR equals FNR, found by linear
/// interpolation along the curve.
pub fn one_minus_eer(roc: &RocCurve) -> f64 {
    // g = FPR − FNR rises from −1 at (0,0) to 1 at (1,1)
    let g = |p: &RocPoint| p.fpr - (1.0 - p.tpr);
    for w in roc.points.windows(2) {
        let (g0, g1) = (g(&w[0]), g(&w[1]));
        if g0 == 0.0 {
            return 1.0 - w[0].fpr;
        }
        if g0 < 0.0 && g1 >= 0.0 {
            let t = -g0 / (g1 - g0);
            return 1.0 - (w[0].fpr + t * (w[1].fpr - w[0].fpr));
        }
    }
    let last = roc.points.last().map(|p| p.fpr).unwrap_or(1.0);
    1.0 - last
}

/// Root mean squared difference between clipped scores and 0/1 labels.
pub fn rmse(scores: &[f64], truth: &BinaryMask) -> Result<f64> {
    check_shape(scores.len(), truth)?;
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sse: f64 = scores
        .iter()
        .zip(truth.values())
        .map(|(&s, &t)| (s.clamp(0.0, 1.0) - if t { 1.0 } else { 0.0 }).powi(2))
        .sum();
    Ok((sse / scores.len() as f64).sqrt())
}

/// Everything reported for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub counts: ConfusionCounts,
    pub cdr: f64,
    pub frr: f64,
    pub far: f64,
    pub r: Metric,
    pub p: Metric,
    pub f: Metric,
    pub fpr: Metric,
    pub fnr: Metric,
    pub tnr: Metric,
    pub tde: Metric,
    pub acc: Metric,
    /// Undefined when the ground truth holds a single class.
    pub auc: Metric,
    pub one_minus_eer: Metric,
    pub rmse: f64,
}

impl EvaluationReport {
    /// `pred` is the hard decision, `scores` the soft scores behind it.
    pub fn compute(pred: &BinaryMask, scores: &[f64], truth: &BinaryMask) -> Result<Self> {
        let counts = confusion(pred, truth)?;
        let (roc, rmse_v) = (roc_curve(scores, truth), rmse(scores, truth)?);
        let roc = match roc {
            Ok(r) => Some(r),
            Err(Error::SingleClassTruth) => None,
            Err(e) => return Err(e),
        };
        Self::from_parts(counts, roc.as_ref(), rmse_v)
    }

    pub fn from_parts(counts: ConfusionCounts, roc: Option<&RocCurve>, rmse: f64) -> Result<Self> {
        let (cdr, frr, far) = cdr_frr_far(&counts)?;
        let pm = protocol_metrics(&counts)?;
        Ok(Self {
            counts,
            cdr,
            frr,
            far,
            r: pm.r,
            p: pm.p,
            f: pm.f,
            fpr: pm.fpr,
            fnr: pm.fnr,
            tnr: pm.tnr,
            tde: pm.tde,
            acc: pm.acc,
            auc: roc.map_or(Metric::Undefined, |r| Metric::Value(auc(r))),
            one_minus_eer: roc.map_or(Metric::Undefined, |r| Metric::Value(one_minus_eer(r))),
            rmse,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(tp: u64, fn_: u64, fp: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fn_, fp, tn }
    }

    fn val(m: Metric) -> f64 {
        m.value().expect("defined")
    }

    fn mask(bits: &[bool]) -> BinaryMask {
        BinaryMask::new(bits.len(), 1, bits.to_vec()).unwrap()
    }

    #[test]
    fn grid_confusion() {
        let truth = BinaryMask::from_fn(10, 10, |x, _| x < 5);
        let pred = BinaryMask::from_fn(10, 10, |_, y| y < 5);
        assert_eq!(confusion(&pred, &truth).unwrap(), counts(25, 25, 25, 25));
        let all = BinaryMask::filled(10, 10, true);
        assert_eq!(confusion(&all, &all).unwrap(), counts(100, 0, 0, 0));
        let c = confusion(&truth.complement(), &truth).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        assert!(confusion(&all, &BinaryMask::filled(5, 20, true)).is_err());
    }

    #[test]
    fn rate_triplet() {
        let (cdr, frr, far) = cdr_frr_far(&counts(90, 4, 6, 0)).unwrap();
        assert!(
            (cdr - 0.90).abs() < 1e-12 && (frr - 0.04).abs() < 1e-12 && (far - 0.06).abs() < 1e-12
        );
        assert_eq!(cdr_frr_far(&counts(3, 0, 0, 7)).unwrap(), (1.0, 0.0, 0.0));
        assert!(matches!(
            cdr_frr_far(&counts(0, 0, 0, 0)),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn protocol_hand_example() {
        let m = protocol_metrics(&counts(50, 10, 5, 35)).unwrap();
        let want = [
            (m.r, 0.83333),
            (m.p, 0.90909),
            (m.f, 0.86957),
            (m.fpr, 0.125),
            (m.fnr, 0.16667),
            (m.tnr, 0.875),
            (m.tde, 0.29167),
            (m.acc, 0.85),
        ];
        for (got, w) in want {
            assert!((val(got) - w).abs() < 1e-5, "{got:?} vs {w}");
        }
    }

    #[test]
    fn degenerate_denominators() {
        let m = protocol_metrics(&counts(100, 0, 0, 0)).unwrap();
        for v in [m.r, m.p, m.f, m.acc] {
            assert_eq!(val(v), 1.0);
        }
        assert!(m.fpr.is_undefined() && m.tnr.is_undefined() && m.tde.is_undefined());
        assert_eq!(val(m.fnr), 0.0);

        let perfect = protocol_metrics(&counts(40, 0, 0, 60)).unwrap();
        assert_eq!(
            (val(perfect.fpr), val(perfect.fnr), val(perfect.tde)),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(val(perfect.tnr), 1.0);

        let nothing_found = protocol_metrics(&counts(0, 10, 5, 5)).unwrap();
        assert_eq!(val(nothing_found.r), 0.0);
        assert_eq!(val(nothing_found.p), 0.0);
        assert_eq!(val(nothing_found.f), 0.0);

        let nothing_predicted = protocol_metrics(&counts(0, 10, 0, 5)).unwrap();
        assert!(nothing_predicted.p.is_undefined() && nothing_predicted.f.is_undefined());
    }

    #[test]
    fn metric_serialization() {
        assert_eq!(
            serde_json::to_string(&Metric::Undefined).unwrap(),
            "\"n/a\""
        );
        assert_eq!(serde_json::to_string(&Metric::Value(0.25)).unwrap(), "0.25");
        let back: Metric = serde_json::from_str("\"n/a\"").unwrap();
        assert!(back.is_undefined());
        assert!(serde_json::from_str::<Metric>("\"nope\"").is_err());
        let c = serde_json::to_value(counts(1, 2, 3, 4)).unwrap();
        assert_eq!(c["fn"], 2);
    }

    #[test]
    fn roc_basics() {
        let truth = mask(&[true, true, false, false, true, false]);
        let labels: Vec<f64> = truth
            .values()
            .iter()
            .map(|&t| if t { 1.0 } else { 0.0 })
            .collect();
        let perfect = roc_curve(&labels, &truth).unwrap();
        assert!(perfect.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        assert_eq!(auc(&perfect), 1.0);
        assert_eq!(one_minus_eer(&perfect), 1.0);

        let inverted: Vec<f64> = labels.iter().map(|v| 1.0 - v).collect();
        assert_eq!(auc(&roc_curve(&inverted, &truth).unwrap()), 0.0);

        let flat = roc_curve(&[0.3; 6], &truth).unwrap();
        let pts: Vec<(f64, f64)> = flat.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (1.0, 1.0), (1.0, 1.0)]);
        assert_eq!(auc(&flat), 0.5);
        assert_eq!(one_minus_eer(&flat), 0.5);

        assert!(matches!(
            roc_curve(&[0.1, 0.2], &mask(&[true, true])),
            Err(Error::SingleClassTruth)
        ));
    }

    #[test]
    fn curve_examples() {
        assert_eq!(
            auc(&RocCurve::from_points(&[
                (0.0, 0.0),
                (0.5, 1.0),
                (1.0, 1.0)
            ])),
            0.75
        );
        assert_eq!(auc(&RocCurve::from_points(&[(0.0, 0.0), (1.0, 1.0)])), 0.5);
        assert_eq!(
            one_minus_eer(&RocCurve::from_points(&[(0.0, 0.0), (1.0, 1.0)])),
            0.5
        );
        // crossing on the first segment: x = 1 − 4.5x
        let c = RocCurve::from_points(&[(0.0, 0.0), (0.2, 0.9), (1.0, 1.0)]);
        assert!((one_minus_eer(&c) - (1.0 - 1.0 / 5.5)).abs() < 1e-12);
        assert!((one_minus_eer(&c) - 0.818182).abs() < 1e-6);
    }

    #[test]
    fn rmse_examples() {
        let truth = mask(&[true, false, true, false]);
        assert_eq!(rmse(&[1.0, 0.0, 1.0, 0.0], &truth).unwrap(), 0.0);
        assert_eq!(rmse(&[0.5; 4], &truth).unwrap(), 0.5);
        assert_eq!(rmse(&[0.0, 1.0, 0.0, 1.0], &truth).unwrap(), 1.0);
        assert_eq!(rmse(&[7.0, -3.0, 1.0, 0.0], &truth).unwrap(), 0.0);
        assert!(rmse(&[0.5; 3], &truth).is_err());
    }

    #[test]
    fn csv_round_trip_and_svg() {
        let truth = mask(&[true, false, true, false, true]);
        let roc = roc_curve(&[0.9, 0.1, 0.4, 0.4, 0.7], &truth).unwrap();
        let csv = roc.to_csv();
        assert!(csv.starts_with("threshold,fpr,tpr\ninf,0.000000,0.000000\n"));
        assert!(csv.trim_end().ends_with("-inf,1.000000,1.000000"));
        let back = RocCurve::from_csv(&csv).unwrap();
        assert_eq!(back.points.len(), roc.points.len());
        assert!((auc(&back) - auc(&roc)).abs() < 1e-6);
        let svg = roc.to_svg("a < b");
        assert!(
            svg.starts_with("<svg")
                && svg.contains("a &lt; b")
                && svg.trim_end().ends_with("</svg>")
        );
    }

    #[test]
    fn report_json_uses_na() {
        let truth = BinaryMask::filled(4, 1, true);
        let pred = truth.clone();
        let r = EvaluationReport::compute(&pred, &[0.9; 4], &truth).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["fpr"], "n/a");
        assert_eq!(v["auc"], "n/a");
        assert_eq!(v["r"], 1.0);
        assert_eq!(v["counts"]["tp"], 4);
        for key in [
            "cdr",
            "frr",
            "far",
            "f",
            "fnr",
            "tnr",
            "tde",
            "acc",
            "one_minus_eer",
            "rmse",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    fn mann_whitney(scores: &[f64], truth: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (s, _) in scores.iter().zip(truth).filter(|p| *p.1) {
            for (n, _) in scores.iter().zip(truth).filter(|p| !*p.1) {
                pairs += 1.0;
                if s > n {
                    wins += 1.0;
                } else if s == n {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    proptest! {
        #[test]
        fn auc_matches_mann_whitney(
            raw in prop::collection::vec((0u8..6, any::<bool>()), 2..40)
        ) {
            let scores: Vec<f64> = raw.iter().map(|p| p.0 as f64 / 5.0).collect();
            let labels: Vec<bool> = raw.iter().map(|p| p.1).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let roc = roc_curve(&scores, &mask(&labels)).unwrap();
            prop_assert!((auc(&roc) - mann_whitney(&scores, &labels)).abs() < 1e-9);
            prop_assert!(roc.points.windows(2).all(|w| w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr));
            let e = one_minus_eer(&roc);
            prop_assert!((0.0..=1.0).contains(&e));

            // strictly increasing transform leaves everything unchanged
            let warped: Vec<f64> = scores.iter().map(|s| (4.0 * s).exp() - 2.0).collect();
            let roc2 = roc_curve(&warped, &mask(&labels)).unwrap();
            prop_assert_eq!(auc(&roc2), auc(&roc));
            prop_assert_eq!(one_minus_eer(&roc2), e);
        }

        #[test]
        fn rate_identities(tp in 0u64..50, fn_ in 0u64..50, fp in 0u64..50, tn in 0u64..50) {
            let c = counts(tp, fn_, fp, tn);
            prop_assume!(c.total() > 0);
            let (cdr, frr, far) = cdr_frr_far(&c).unwrap();
            prop_assert!((cdr + frr + far - 1.0).abs() < 1e-12);
            let m = protocol_metrics(&c).unwrap();
            prop_assert_eq!(val(m.acc), cdr);
            if let (Some(r), Some(fnr)) = (m.r.value(), m.fnr.value()) {
                prop_assert!((fnr - (1.0 - r)).abs() < 1e-12);
            }
            if let (Some(fpr), Some(tnr)) = (m.fpr.value(), m.tnr.value()) {
                prop_assert!((tnr - (1.0 - fpr)).abs() < 1e-12);
                prop_assert_eq!(val(m.tde), fpr + val(m.fnr));
            }
        }
    }
}
