//! Binary morphology for cleaning skin masks.
//!
//! Dilation pads with background. Erosion only looks at offsets that land
//! inside the image, which makes it the exact adjoint of the dilation: closing
//! is extensive and idempotent and a full mask stays full.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::dataset::{BinaryMask, RgbImage};
use crate::{Error, Result};

pub const DEFAULT_RADIUS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    radius: usize,
    offsets: Vec<(isize, isize)>,
}

impl StructuringElement {
    /// All integer offsets with `dx² + dy² <= r²`.
    pub fn disk(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidConfig("disk radius must be >= 1".into()));
        }
        let r = radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    offsets.push((dx, dy));
                }
            }
        }
        Ok(Self { radius, offsets })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::disk(DEFAULT_RADIUS).expect("nonzero radius")
    }
}

fn neighbors<'a>(
    mask: &'a BinaryMask,
    se: &'a StructuringElement,
    x: usize,
    y: usize,
) -> impl Iterator<Item = bool> + 'a {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let (x, y) = (x as isize, y as isize);
    se.offsets.iter().filter_map(move |&(dx, dy)| {
        let (nx, ny) = (x + dx, y + dy);
        (nx >= 0 && ny >= 0 && nx < w && ny < h).then(|| mask.get(nx as usize, ny as usize))
    })
}

fn pointwise(mask: &BinaryMask, f: impl Fn(usize, usize) -> bool + Sync) -> BinaryMask {
    let w = mask.width();
    let data = (0..mask.len())
        .into_par_iter()
        .map(|i| f(i % w, i / w))
        .collect();
    BinaryMask::new(w, mask.height(), data).expect("shape preserved")
}

pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    pointwise(mask, |x, y| neighbors(mask, se, x, y).any(|v| v))
}

pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    pointwise(mask, |x, y| neighbors(mask, se, x, y).all(|v| v))
}

pub fn morph_close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(mask, se), se)
}

pub fn morph_open(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(mask, se), se)
}

/// Sets every background pixel that is not 4-connected to the border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed =
        |x: usize, y: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
            let i = y * w + x;
            if !mask.values()[i] && !outside[i] {
                outside[i] = true;
                queue.push_back((x, y));
            }
        };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        seed(x, h.saturating_sub(1), &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        seed(w.saturating_sub(1), y, &mut outside, &mut queue);
    }
    while let Some((x, y)) = queue.pop_front() {
        if x > 0 {
            seed(x - 1, y, &mut outside, &mut queue);
        }
        if x + 1 < w {
            seed(x + 1, y, &mut outside, &mut queue);
        }
        if y > 0 {
            seed(x, y - 1, &mut outside, &mut queue);
        }
        if y + 1 < h {
            seed(x, y + 1, &mut outside, &mut queue);
        }
    }
    BinaryMask::new(w, h, outside.into_iter().map(|o| !o).collect()).expect("shape preserved")
}

/// close → open → fill holes.
pub fn clean_mask(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    fill_holes(&morph_open(&morph_close(mask, se), se))
}

/// Keeps pixels under the mask and blacks out the rest.
pub fn apply_mask(image: &RgbImage, mask: &BinaryMask) -> Result<RgbImage> {
    if !image.same_shape(mask) {
        return Err(Error::ShapeMismatch(format!(
            "image is {}x{} but mask is {}x{}",
            image.width(),
            image.height(),
            mask.width(),
            mask.height()
        )));
    }
    let data = image
        .pixels()
        .iter()
        .zip(mask.values())
        .map(|(&p, &keep)| if keep { p } else { [0, 0, 0] })
        .collect();
    RgbImage::new(image.width(), image.height(), data)
}
