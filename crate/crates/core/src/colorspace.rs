//! Learned 3×3 color transforms, RGB→CIELAB, and display rescaling.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{normalize_pixel, PixelDataset, RgbImage, SpaceTag};
use crate::{Error, Result};

pub type Matrix3 = [[f64; 3]; 3];

/// How the transform matrix is applied to a normalized RGB vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformMode {
    #[default]
    Linear,
    Quadratic,
}

/// Reading of the quadratic transform.
///
/// `AsPrinted` evaluates `0.5 · W · (rgbᵀ · W)ᵀ`, which is the linear map
/// `0.5 · W · Wᵀ`. `ElementwiseSquare` evaluates `0.5 · W · (W·rgb)²`
/// with the square taken per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticVariant {
    #[default]
    AsPrinted,
    ElementwiseSquare,
}

/// Provenance of an optimized matrix.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformMeta {
    pub seed: u64,
    pub final_cost: f64,
    pub iterations: usize,
    pub gbest_history: Vec<f64>,
}

/// The 3×3 matrix defining a learned color space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformMatrix {
    pub w: Matrix3,
    #[serde(default)]
    pub mode: TransformMode,
    #[serde(default)]
    pub quadratic_variant: QuadraticVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<TransformMeta>,
}

impl TransformMatrix {
    pub fn linear(w: Matrix3) -> Self {
        Self {
            w,
            mode: TransformMode::Linear,
            quadratic_variant: QuadraticVariant::AsPrinted,
            meta: None,
        }
    }

    pub fn quadratic(w: Matrix3, variant: QuadraticVariant) -> Self {
        Self {
            w,
            mode: TransformMode::Quadratic,
            quadratic_variant: variant,
            meta: None,
        }
    }

    /// Reshapes a 9-vector row-major into a matrix.
    pub fn from_position(
        position: &[f64; 9],
        mode: TransformMode,
        quadratic_variant: QuadraticVariant,
    ) -> Self {
        let mut w = [[0.0; 3]; 3];
        for (i, v) in position.iter().enumerate() {
            w[i / 3][i % 3] = *v;
        }
        Self {
            w,
            mode,
            quadratic_variant,
            meta: None,
        }
    }

    pub fn space_tag(&self) -> SpaceTag {
        match self.mode {
            TransformMode::Linear => SpaceTag::NewLinear,
            TransformMode::Quadratic => SpaceTag::NewQuadratic,
        }
    }

    /// Applies the mode-appropriate transform to a normalized RGB vector.
    pub fn apply(&self, rgb: [f64; 3]) -> [f64; 3] {
        match self.mode {
            TransformMode::Linear => transform_linear(&self.w, rgb),
            TransformMode::Quadratic => transform_quadratic(&self.w, self.quadratic_variant, rgb),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.w.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite elements".into()));
        }
        Ok(m)
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

pub fn mat_vec(w: &Matrix3, v: [f64; 3]) -> [f64; 3] {
    [
        w[0][0] * v[0] + w[0][1] * v[1] + w[0][2] * v[2],
        w[1][0] * v[0] + w[1][1] * v[1] + w[1][2] * v[2],
        w[2][0] * v[0] + w[2][1] * v[1] + w[2][2] * v[2],
    ]
}

pub fn transform_linear(w: &Matrix3, rgb: [f64; 3]) -> [f64; 3] {
    mat_vec(w, rgb)
}

pub fn transform_quadratic(w: &Matrix3, variant: QuadraticVariant, rgb: [f64; 3]) -> [f64; 3] {
    let inner = match variant {
        // (rgbᵀ · W)ᵀ = Wᵀ · rgb
        QuadraticVariant::AsPrinted => {
            let mut t = [0.0; 3];
            for (j, tj) in t.iter_mut().enumerate() {
                *tj = rgb[0] * w[0][j] + rgb[1] * w[1][j] + rgb[2] * w[2][j];
            }
            t
        }
        QuadraticVariant::ElementwiseSquare => mat_vec(w, rgb).map(|v| v * v),
    };
    mat_vec(w, inner).map(|v| 0.5 * v)
}

const SRGB_TO_XYZ: Matrix3 = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// CIE L*a*b* (D65) of an 8-bit sRGB pixel, unnormalized.
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = normalize_pixel(rgb).map(srgb_to_linear);
    let xyz = mat_vec(&SRGB_TO_XYZ, lin);
    // The white point is the image of sRGB white, so white maps to a = b = 0.
    let white = mat_vec(&SRGB_TO_XYZ, [1.0; 3]);
    let fx = lab_f(xyz[0] / white[0]);
    let fy = lab_f(xyz[1] / white[1]);
    let fz = lab_f(xyz[2] / white[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// L*a*b* with every component divided by 128. No clamping: a* and b*
/// stay signed.
pub fn rgb_to_lab_normalized(rgb: [u8; 3]) -> [f64; 3] {
    rgb_to_lab(rgb).map(|v| v / 128.0)
}

/// A per-pixel real-valued 3-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl FeatureImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} feature vectors for a {width}x{height} image",
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

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Normalizes every pixel and applies the matrix transform.
pub fn apply_to_image(w: &TransformMatrix, image: &RgbImage) -> FeatureImage {
    let data = image
        .pixels()
        .par_iter()
        .map(|&p| w.apply(normalize_pixel(p)))
        .collect();
    FeatureImage {
        width: image.width(),
        height: image.height(),
        data,
    }
}

/// Per-channel min–max rescale to [0, 255]; a constant channel maps to 0.
pub fn rescale_for_display(fimg: &FeatureImage) -> RgbImage {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for px in fimg.pixels() {
        for c in 0..3 {
            lo[c] = lo[c].min(px[c]);
            hi[c] = hi[c].max(px[c]);
        }
    }
    let data = fimg
        .pixels()
        .iter()
        .map(|px| {
            let mut out = [0u8; 3];
            for c in 0..3 {
                let range = hi[c] - lo[c];
                if range > 0.0 {
                    let scaled = (px[c] - lo[c]) / range * 255.0;
                    out[c] = (scaled + 0.5).floor().clamp(0.0, 255.0) as u8;
                }
            }
            out
        })
        .collect();
    RgbImage::new(fimg.width(), fimg.height(), data).expect("shape preserved")
}

/// A complete recipe for turning 8-bit pixels into classifier features.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSpace {
    RgbNorm,
    LabNorm,
    Transformed(TransformMatrix),
}

impl FeatureSpace {
    pub fn tag(&self) -> SpaceTag {
        match self {
            FeatureSpace::RgbNorm => SpaceTag::RgbNorm,
            FeatureSpace::LabNorm => SpaceTag::LabNorm,
            FeatureSpace::Transformed(m) => m.space_tag(),
        }
    }

    /// Resolves a space tag plus an optional matrix, rejecting combinations
    /// that cannot produce the tagged features.
    pub fn resolve(tag: SpaceTag, matrix: Option<TransformMatrix>) -> Result<Self> {
        match (tag, matrix) {
            (SpaceTag::RgbNorm, _) => Ok(FeatureSpace::RgbNorm),
            (SpaceTag::LabNorm, _) => Ok(FeatureSpace::LabNorm),
            (tag, Some(m)) if m.space_tag() == tag => Ok(FeatureSpace::Transformed(m)),
            (tag, Some(m)) => Err(Error::SpaceTagMismatch(format!(
                "space {tag} needs a {} matrix but a {:?} matrix was given",
                if tag == SpaceTag::NewLinear {
                    "linear"
                } else {
                    "quadratic"
                },
                m.mode
            ))),
            (tag, None) => Err(Error::SpaceTagMismatch(format!(
                "space {tag} requires a transform matrix"
            ))),
        }
    }

    pub fn pixel(&self, rgb: [u8; 3]) -> [f64; 3] {
        match self {
            FeatureSpace::RgbNorm => normalize_pixel(rgb),
            FeatureSpace::LabNorm => rgb_to_lab_normalized(rgb),
            FeatureSpace::Transformed(m) => m.apply(normalize_pixel(rgb)),
        }
    }

    pub fn image(&self, image: &RgbImage) -> FeatureImage {
        match self {
            FeatureSpace::Transformed(m) => apply_to_image(m, image),
            _ => {
                let data = image.pixels().par_iter().map(|&p| self.pixel(p)).collect();
                FeatureImage {
                    width: image.width(),
                    height: image.height(),
                    data,
                }
            }
        }
    }

    /// Re-expresses a normalized-RGB dataset in this space.
    pub fn dataset(&self, rgb: &PixelDataset) -> Result<PixelDataset> {
        let pixels = rgb.rgb_pixels()?;
        let features = pixels.iter().map(|&p| self.pixel(p)).collect();
        PixelDataset::new(features, rgb.labels().to_vec(), self.tag())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE_INITIAL: Matrix3 = [
        [3.1472, 4.0579, -3.7301],
        [4.1338, 1.3236, -4.0246],
        [-2.215, 0.46882, 4.5751],
    ];
    pub(crate) const EXAMPLE_OPTIMAL: Matrix3 = [
        [-3.0403, 3.341, 2.9736],
        [1.4881, -0.6337, 2.8407],
        [-1.3716, -3.8494, -4.4728],
    ];
    const IDENTITY: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn linear_examples() {
        assert_eq!(
            transform_linear(&IDENTITY, [0.5, 0.2, 0.1]),
            [0.5, 0.2, 0.1]
        );
        assert_eq!(
            transform_linear(&EXAMPLE_INITIAL, [1.0, 0.0, 0.0]),
            [3.1472, 4.1338, -2.215]
        );
        assert_eq!(
            transform_linear(&EXAMPLE_OPTIMAL, [0.0, 0.0, 1.0]),
            [2.9736, 2.8407, -4.4728]
        );
    }

    #[test]
    fn quadratic_examples() {
        let x = transform_quadratic(&IDENTITY, QuadraticVariant::AsPrinted, [0.4, 0.6, 0.8]);
        assert!(close3(x, [0.2, 0.3, 0.4], 1e-15));
        let x = transform_quadratic(
            &IDENTITY,
            QuadraticVariant::ElementwiseSquare,
            [0.4, 0.6, 0.8],
        );
        assert!(close3(x, [0.08, 0.18, 0.32], 1e-15));
        let two = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        let x = transform_quadratic(&two, QuadraticVariant::AsPrinted, [1.0, 0.0, 0.0]);
        assert_eq!(x, [2.0, 0.0, 0.0]);
    }

    #[test]
    fn lab_examples() {
        assert_eq!(rgb_to_lab_normalized([0, 0, 0]), [0.0, 0.0, 0.0]);
        let white = rgb_to_lab_normalized([255, 255, 255]);
        assert!((white[0] - 0.78125).abs() < 1e-9, "{white:?}");
        assert!(white[1].abs() < 0.01 && white[2].abs() < 0.01);
        let red = rgb_to_lab([255, 0, 0]);
        assert!((red[0] - 53.24).abs() < 0.01, "{red:?}");
        assert!((red[1] - 80.09).abs() < 0.01, "{red:?}");
        assert!((red[2] - 67.20).abs() < 0.01, "{red:?}");
        let red_n = rgb_to_lab_normalized([255, 0, 0]);
        assert!(close3(red_n, red.map(|v| v / 128.0), 0.0));
    }

    #[test]
    fn grays_are_neutral_in_lab() {
        for g in 0..=255u8 {
            let lab = rgb_to_lab_normalized([g, g, g]);
            assert!(
                lab[1].abs() < 0.01 && lab[2].abs() < 0.01,
                "gray {g}: {lab:?}"
            );
        }
    }

    #[test]
    fn apply_to_image_examples() {
        let img = RgbImage::new(
            2,
            2,
            vec![[0, 0, 0], [255, 0, 0], [12, 34, 56], [255, 255, 255]],
        )
        .unwrap();
        let f = apply_to_image(&TransformMatrix::linear(IDENTITY), &img);
        assert_eq!((f.width(), f.height()), (2, 2));
        assert_eq!(f.pixels(), crate::dataset::normalize_rgb(&img).as_slice());

        let red = RgbImage::filled(1, 1, [255, 0, 0]);
        let f = apply_to_image(&TransformMatrix::linear(EXAMPLE_OPTIMAL), &red);
        assert_eq!(f.pixels()[0], [-3.0403, 1.4881, -1.3716]);
    }

    #[test]
    fn rescale_examples() {
        let f = FeatureImage::new(2, 1, vec![[0.0, 7.3, -1.0], [1.0, 7.3, 1.0]]).unwrap();
        let img = rescale_for_display(&f);
        assert_eq!(img.pixels(), &[[0, 0, 0], [255, 0, 255]]);
        let f = FeatureImage::new(3, 1, vec![[-1.0; 3], [0.0; 3], [1.0; 3]]).unwrap();
        let img = rescale_for_display(&f);
        assert_eq!(img.pixels()[1], [128, 128, 128]);
    }

    #[test]
    fn matrix_json_schema() {
        let mut m =
            TransformMatrix::quadratic(EXAMPLE_OPTIMAL, QuadraticVariant::ElementwiseSquare);
        m.meta = Some(TransformMeta {
            seed: 3,
            final_cost: 0.11,
            iterations: 30,
            gbest_history: vec![0.15, 0.11],
        });
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["mode"], "quadratic");
        assert_eq!(v["quadratic_variant"], "elementwise_square");
        assert_eq!(v["w"][2][1], -3.8494);
        assert_eq!(v["meta"]["seed"], 3);
        assert_eq!(
            TransformMatrix::from_json(&m.to_json().unwrap()).unwrap(),
            m
        );

        let minimal = r#"{"w": [[1,0,0],[0,1,0],[0,0,1]], "mode": "linear"}"#;
        let m = TransformMatrix::from_json(minimal).unwrap();
        assert_eq!(m.w, IDENTITY);
        assert!(m.meta.is_none());
    }

    #[test]
    fn feature_space_resolution() {
        let lin = TransformMatrix::linear(IDENTITY);
        assert!(FeatureSpace::resolve(SpaceTag::NewLinear, None).is_err());
        assert!(FeatureSpace::resolve(SpaceTag::NewQuadratic, Some(lin.clone())).is_err());
        let fs = FeatureSpace::resolve(SpaceTag::NewLinear, Some(lin)).unwrap();
        assert_eq!(fs.tag(), SpaceTag::NewLinear);
        assert_eq!(
            FeatureSpace::resolve(SpaceTag::LabNorm, None).unwrap(),
            FeatureSpace::LabNorm
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = Matrix3> {
            proptest::array::uniform3(proptest::array::uniform3(-5.0f64..5.0))
        }
        fn unit3() -> impl Strategy<Value = [f64; 3]> {
            proptest::array::uniform3(0.0f64..=1.0)
        }

        proptest! {
            #[test]
            fn linear_map_is_linear(w in matrix(), u in unit3(), v in unit3(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let combo = [0, 1, 2].map(|i| a * u[i] + b * v[i]);
                let lhs = transform_linear(&w, combo);
                let (tu, tv) = (transform_linear(&w, u), transform_linear(&w, v));
                for i in 0..3 {
                    prop_assert!((lhs[i] - (a * tu[i] + b * tv[i])).abs() < 1e-12);
                }
            }

            #[test]
            fn printed_quadratic_is_half_w_wt(w in matrix(), rgb in unit3()) {
                let mut g = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        g[i][j] = 0.5 * (0..3).map(|k| w[i][k] * w[j][k]).sum::<f64>();
                    }
                }
                let got = transform_quadratic(&w, QuadraticVariant::AsPrinted, rgb);
                let want = transform_linear(&g, rgb);
                for i in 0..3 {
                    prop_assert!((got[i] - want[i]).abs() < 1e-12);
                    for j in 0..3 {
                        prop_assert!((g[i][j] - g[j][i]).abs() < 1e-12);
                    }
                }
                // positive semidefinite: xᵀ G x = 0.5‖Wᵀx‖² ≥ 0
                let quad: f64 = (0..3).map(|i| rgb[i] * want[i]).sum();
                prop_assert!(quad >= -1e-12);
            }

            #[test]
            fn apply_preserves_shape(w in matrix(), width in 1usize..6, height in 1usize..6) {
                let img = RgbImage::new(width, height, (0..width * height).map(|i| [i as u8, 2 * i as u8, 255 - i as u8]).collect()).unwrap();
                let m = TransformMatrix::linear(w);
                let f = apply_to_image(&m, &img);
                prop_assert_eq!((f.width(), f.height()), (width, height));
                for (p, x) in img.pixels().iter().zip(f.pixels()) {
                    prop_assert_eq!(*x, m.apply(normalize_pixel(*p)));
                }
            }
        }
    }
}
