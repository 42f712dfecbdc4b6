//! Image and mask I/O, labeled pixel sampling and RGB normalization.

use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An 8-bit RGB image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, pixel: [u8; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![pixel; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, mask: &BinaryMask) -> bool {
        self.width == mask.width() && self.height == mask.height()
    }
}

/// A binary segmentation; `true` marks skin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} mask values for a {width}x{height} mask",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Which feature space a dataset or model lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceTag {
    RgbNorm,
    LabNorm,
    NewLinear,
    NewQuadratic,
}

impl SpaceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SpaceTag::RgbNorm => "rgb_norm",
            SpaceTag::LabNorm => "lab_norm",
            SpaceTag::NewLinear => "new_linear",
            SpaceTag::NewQuadratic => "new_quadratic",
        }
    }

    /// Whether features in this space come from a learned transform matrix.
    pub fn needs_matrix(self) -> bool {
        matches!(self, SpaceTag::NewLinear | SpaceTag::NewQuadratic)
    }
}

impl std::fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SpaceTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgb_norm" | "rgb" => Ok(SpaceTag::RgbNorm),
            "lab_norm" | "lab" => Ok(SpaceTag::LabNorm),
            "new_linear" => Ok(SpaceTag::NewLinear),
            "new_quadratic" => Ok(SpaceTag::NewQuadratic),
            other => Err(Error::InvalidConfig(format!("unknown space tag {other:?}"))),
        }
    }
}

/// Labeled pixel features for classifier training.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDataset {
    features: Vec<[f64; 3]>,
    labels: Vec<bool>,
    space_tag: SpaceTag,
}

impl PixelDataset {
    pub fn new(features: Vec<[f64; 3]>, labels: Vec<bool>, space_tag: SpaceTag) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite pixel feature".into()));
        }
        if matches!(space_tag, SpaceTag::RgbNorm)
            && features.iter().flatten().any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidInput(
                "normalized RGB features must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            features,
            labels,
            space_tag,
        })
    }

    pub fn features(&self) -> &[[f64; 3]] {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn space_tag(&self) -> SpaceTag {
        self.space_tag
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Target values in {0, 1} as reals.
    pub fn targets(&self) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&l| if l { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&l| l) && self.labels.iter().any(|&l| !l)
    }

    /// Features of the skin-labeled samples only.
    pub fn skin_features(&self) -> Vec<[f64; 3]> {
        self.features
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l)
            .map(|(f, _)| *f)
            .collect()
    }

    /// Recovers the 8-bit pixels of a normalized-RGB dataset.
    pub fn rgb_pixels(&self) -> Result<Vec<[u8; 3]>> {
        if self.space_tag != SpaceTag::RgbNorm {
            return Err(Error::SpaceTagMismatch(format!(
                "cannot recover RGB pixels from a {} dataset",
                self.space_tag
            )));
        }
        Ok(self
            .features
            .iter()
            .map(|f| f.map(|v| (v * 255.0).round() as u8))
            .collect())
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) if io.kind() != std::io::ErrorKind::UnexpectedEof => {
            Error::io(path, io)
        }
        other => Error::format(path, other.to_string()),
    })
}

/// Loads an 8-bit PNG or PPM/PGM image as RGB. Alpha is dropped and
/// grayscale is replicated across channels.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let rgb = match decode(path)? {
        DynamicImage::ImageRgb8(img) => img,
        img @ (DynamicImage::ImageRgba8(_)
        | DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageLumaA8(_)) => img.to_rgb8(),
        other => {
            return Err(Error::format(
                path,
                format!("unsupported pixel format {:?}", other.color()),
            ))
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.pixels().map(|p| p.0).collect();
    RgbImage::new(w, h, data)
}

/// Luminance used to binarize RGB masks.
pub fn luminance(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb.map(f64::from);
    (0.299 * r + 0.587 * g + 0.114 * b).round().min(255.0) as u8
}

/// Loads a ground-truth mask; pixels with luminance ≥ 128 are skin.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let (w, h, lum): (u32, u32, Vec<u8>) = match decode(path)? {
        DynamicImage::ImageLuma8(img) => (img.width(), img.height(), img.into_raw()),
        DynamicImage::ImageLumaA8(img) => (
            img.width(),
            img.height(),
            img.pixels().map(|p| p.0[0]).collect(),
        ),
        DynamicImage::ImageRgb8(img) => (
            img.width(),
            img.height(),
            img.pixels().map(|p| luminance(p.0)).collect(),
        ),
        DynamicImage::ImageRgba8(img) => (
            img.width(),
            img.height(),
            img.pixels()
                .map(|p| luminance([p.0[0], p.0[1], p.0[2]]))
                .collect(),
        ),
        other => {
            return Err(Error::format(
                path,
                format!("unsupported pixel format {:?}", other.color()),
            ))
        }
    };
    BinaryMask::new(
        w as usize,
        h as usize,
        lum.into_iter().map(|l| l >= 128).collect(),
    )
}

fn write_png(
    path: &Path,
    w: usize,
    h: usize,
    color: image::ExtendedColorType,
    buf: &[u8],
) -> Result<()> {
    image::save_buffer_with_format(path, buf, w as u32, h as u32, color, ImageFormat::Png).map_err(
        |e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::format(path, other.to_string()),
        },
    )
}

/// Writes an RGB image as 8-bit PNG.
pub fn save_image(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let buf: Vec<u8> = image.pixels().iter().flatten().copied().collect();
    write_png(
        path.as_ref(),
        image.width(),
        image.height(),
        image::ExtendedColorType::Rgb8,
        &buf,
    )
}

/// Writes a mask as an 8-bit grayscale PNG with values 0 and 255.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let buf: Vec<u8> = mask
        .values()
        .iter()
        .map(|&v| if v { 255 } else { 0 })
        .collect();
    write_png(
        path.as_ref(),
        mask.width(),
        mask.height(),
        image::ExtendedColorType::L8,
        &buf,
    )
}

/// Writes real values in [0, 1] (clipped) as an 8-bit grayscale PNG.
pub fn save_gray(
    values: &[f64],
    width: usize,
    height: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::ShapeMismatch(format!(
            "{} values for a {width}x{height} image",
            values.len()
        )));
    }
    let buf: Vec<u8> = values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    write_png(
        path.as_ref(),
        width,
        height,
        image::ExtendedColorType::L8,
        &buf,
    )
}

pub fn normalize_pixel(rgb: [u8; 3]) -> [f64; 3] {
    rgb.map(|c| f64::from(c) / 255.0)
}

/// Maps every channel value `v` to `v / 255`.
pub fn normalize_rgb(image: &RgbImage) -> Vec<[f64; 3]> {
    image.pixels().iter().map(|&p| normalize_pixel(p)).collect()
}

fn check_pairs(images: &[(RgbImage, BinaryMask)]) -> Result<()> {
    for (i, (img, mask)) in images.iter().enumerate() {
        if !img.same_shape(mask) {
            return Err(Error::ShapeMismatch(format!(
                "image {i} is {}x{} but its mask is {}x{}",
                img.width(),
                img.height(),
                mask.width(),
                mask.height()
            )));
        }
    }
    Ok(())
}

/// Draws `n_skin` skin and `n_nonskin` non-skin pixels uniformly without
/// replacement from the pooled, mask-labeled pixels of `images`.
///
/// Skin samples come first, each class in draw order. The result is fully
/// determined by `seed` and the input order.
pub fn sample_pixels(
    images: &[(RgbImage, BinaryMask)],
    n_skin: usize,
    n_nonskin: usize,
    seed: u64,
) -> Result<PixelDataset> {
    check_pairs(images)?;
    let mut skin_pool = Vec::new();
    let mut nonskin_pool = Vec::new();
    for (img, mask) in images {
        for (px, &label) in img.pixels().iter().zip(mask.values()) {
            if label {
                skin_pool.push(*px);
            } else {
                nonskin_pool.push(*px);
            }
        }
    }
    for (class, requested, available) in [
        ("skin", n_skin, skin_pool.len()),
        ("non-skin", n_nonskin, nonskin_pool.len()),
    ] {
        if requested > available {
            return Err(Error::InsufficientSamples {
                class,
                requested,
                available,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n_skin + n_nonskin);
    let mut labels = Vec::with_capacity(n_skin + n_nonskin);
    for (pool, n, label) in [
        (&skin_pool, n_skin, true),
        (&nonskin_pool, n_nonskin, false),
    ] {
        for idx in rand::seq::index::sample(&mut rng, pool.len(), n) {
            features.push(normalize_pixel(pool[idx]));
            labels.push(label);
        }
    }
    PixelDataset::new(features, labels, SpaceTag::RgbNorm)
}

/// One line of a curated-sample file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplePoint {
    pub image: usize,
    pub x: usize,
    pub y: usize,
    pub skin: bool,
}

/// Parses `<image-index> <x> <y> <label 0|1>` lines; `#` starts a comment.
pub fn parse_sample_points(text: &str) -> Result<Vec<SamplePoint>> {
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| {
            Error::InvalidInput(format!("sample file line {}: {what}: {raw:?}", lineno + 1))
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad("not a non-negative integer"))
        };
        let skin = match fields[3] {
            "0" => false,
            "1" => true,
            _ => return Err(bad("label must be 0 or 1")),
        };
        points.push(SamplePoint {
            image: num(fields[0])?,
            x: num(fields[1])?,
            y: num(fields[2])?,
            skin,
        });
    }
    Ok(points)
}

pub fn load_sample_points(path: impl AsRef<Path>) -> Result<Vec<SamplePoint>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sample_points(&text)
}

/// Builds a normalized-RGB dataset from explicit pixel coordinates. Labels
/// come from the sample list, not from any mask.
pub fn dataset_from_points(images: &[RgbImage], points: &[SamplePoint]) -> Result<PixelDataset> {
    let mut features = Vec::with_capacity(points.len());
    let mut labels = Vec::with_capacity(points.len());
    for p in points {
        let img = images.get(p.image).ok_or_else(|| {
            Error::InvalidInput(format!(
                "sample refers to image {} but only {} images were given",
                p.image,
                images.len()
            ))
        })?;
        if p.x >= img.width() || p.y >= img.height() {
            return Err(Error::InvalidInput(format!(
                "sample ({}, {}) outside {}x{} image {}",
                p.x,
                p.y,
                img.width(),
                img.height(),
                p.image
            )));
        }
        features.push(normalize_pixel(img.get(p.x, p.y)));
        labels.push(p.skin);
    }
    PixelDataset::new(features, labels, SpaceTag::RgbNorm)
}
