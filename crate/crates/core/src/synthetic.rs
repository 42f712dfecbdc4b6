//! Deterministic skin-like test scenes.
//!
//! Skin regions are random ellipses filled with warm, reddish tones. The
//! background mixes foliage, sky, gray and dark tones; the overlapping
//! variant also scatters skin-toned background (wood, sand, brick) whose
//! colors partly coincide with the skin distribution.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{BinaryMask, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub n_regions: usize,
    /// Fraction of background pixels drawn from skin-like confuser tones.
    pub confuser_fraction: f64,
    pub seed: u64,
}

impl SceneConfig {
    pub fn separable(seed: u64) -> Self {
        Self {
            width: 64,
            height: 64,
            n_regions: 3,
            confuser_fraction: 0.0,
            seed,
        }
    }

    pub fn overlapping(seed: u64) -> Self {
        Self {
            confuser_fraction: 0.3,
            ..Self::separable(seed)
        }
    }
}

struct Tone {
    mean: [f64; 3],
    sd: f64,
}

const SKIN_TONES: [Tone; 3] = [
    Tone {
        mean: [0.86, 0.62, 0.52],
        sd: 0.035,
    },
    Tone {
        mean: [0.74, 0.50, 0.40],
        sd: 0.035,
    },
    Tone {
        mean: [0.58, 0.38, 0.30],
        sd: 0.03,
    },
];

const BACKGROUND_TONES: [Tone; 5] = [
    Tone {
        mean: [0.22, 0.48, 0.24],
        sd: 0.06,
    },
    Tone {
        mean: [0.30, 0.45, 0.78],
        sd: 0.06,
    },
    Tone {
        mean: [0.50, 0.50, 0.52],
        sd: 0.08,
    },
    Tone {
        mean: [0.10, 0.10, 0.12],
        sd: 0.04,
    },
    Tone {
        mean: [0.92, 0.92, 0.90],
        sd: 0.03,
    },
];

const CONFUSER_TONES: [Tone; 3] = [
    Tone {
        mean: [0.70, 0.52, 0.30],
        sd: 0.06,
    },
    Tone {
        mean: [0.82, 0.70, 0.52],
        sd: 0.05,
    },
    Tone {
        mean: [0.66, 0.34, 0.28],
        sd: 0.05,
    },
];

fn draw(tone: &Tone, rng: &mut ChaCha8Rng) -> [u8; 3] {
    let noise = Normal::new(0.0, tone.sd).expect("positive sd");
    // a shared brightness factor keeps chromaticity while varying shading
    let shade = 1.0 + noise.sample(rng) * 0.5;
    tone.mean
        .map(|m| ((m * shade + noise.sample(rng)).clamp(0.0, 1.0) * 255.0).round() as u8)
}

/// Renders an image and its ground-truth skin mask.
pub fn skin_scene(cfg: &SceneConfig) -> (RgbImage, BinaryMask) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let regions: Vec<(f64, f64, f64, f64, usize)> = (0..cfg.n_regions)
        .map(|_| {
            (
                rng.gen_range(0.2..0.8) * w,
                rng.gen_range(0.2..0.8) * h,
                rng.gen_range(0.08..0.2) * w,
                rng.gen_range(0.08..0.2) * h,
                rng.gen_range(0..SKIN_TONES.len()),
            )
        })
        .collect();
    let mask = BinaryMask::from_fn(cfg.width, cfg.height, |x, y| {
        regions.iter().any(|&(cx, cy, rx, ry, _)| {
            let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
            dx * dx + dy * dy <= 1.0
        })
    });
    // horizontal bands cycle through shuffled rounds of every background
    // tone, so any scene tall enough shows the whole background palette
    let n_bands = cfg.height.div_ceil(8);
    let mut band_tones: Vec<usize> = Vec::with_capacity(n_bands + BACKGROUND_TONES.len());
    while band_tones.len() < n_bands {
        let mut round: Vec<usize> = (0..BACKGROUND_TONES.len()).collect();
        round.shuffle(&mut rng);
        band_tones.extend(round);
    }
    let mut pixels = Vec::with_capacity(cfg.width * cfg.height);
    for y in 0..cfg.height {
        for x in 0..cfg.width {
            let px = if mask.get(x, y) {
                let tone = regions
                    .iter()
                    .find(|&&(cx, cy, rx, ry, _)| {
                        let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                        dx * dx + dy * dy <= 1.0
                    })
                    .map(|r| r.4)
                    .unwrap_or(0);
                draw(&SKIN_TONES[tone], &mut rng)
            } else if rng.gen_bool(cfg.confuser_fraction.clamp(0.0, 1.0)) {
                let k = rng.gen_range(0..CONFUSER_TONES.len());
                draw(&CONFUSER_TONES[k], &mut rng)
            } else {
                draw(&BACKGROUND_TONES[band_tones[y / 8]], &mut rng)
            };
            pixels.push(px);
        }
    }
    let image = RgbImage::new(cfg.width, cfg.height, pixels).expect("sized to fit");
    (image, mask)
}

/// Two flat colors split by a mask: the easiest possible segmentation task.
pub fn two_color_scene(
    width: usize,
    height: usize,
    fg: [u8; 3],
    bg: [u8; 3],
) -> (RgbImage, BinaryMask) {
    let mask = BinaryMask::from_fn(width, height, |x, y| {
        let (dx, dy) = (
            x as f64 - width as f64 / 2.0,
            y as f64 - height as f64 / 2.0,
        );
        dx * dx + dy * dy <= (width.min(height) as f64 / 3.0).powi(2)
    });
    let pixels = mask
        .values()
        .iter()
        .map(|&m| if m { fg } else { bg })
        .collect();
    (
        RgbImage::new(width, height, pixels).expect("sized to fit"),
        mask,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic() {
        let cfg = SceneConfig::overlapping(5);
        assert_eq!(skin_scene(&cfg), skin_scene(&cfg));
        assert_ne!(
            skin_scene(&cfg).0,
            skin_scene(&SceneConfig::overlapping(6)).0
        );
    }

    #[test]
    fn both_classes_present() {
        for seed in 0..10 {
            let (img, mask) = skin_scene(&SceneConfig::separable(seed));
            let skin = mask.count_true();
            assert!(skin > 200 && skin < mask.len() - 200, "seed {seed}: {skin}");
            assert_eq!((img.width(), img.height()), (64, 64));
        }
    }

    #[test]
    fn two_color_layout() {
        let (img, mask) = two_color_scene(30, 20, [200, 150, 120], [20, 90, 40]);
        assert!(mask.get(15, 10) && !mask.get(0, 0));
        assert_eq!(img.get(15, 10), [200, 150, 120]);
        assert_eq!(img.get(0, 0), [20, 90, 40]);
    }
}
