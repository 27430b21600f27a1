//! Random-dot stereogram generator.
//!
//! Samples come from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with the
//! caller's seed, so the same seed always yields the same pair. Every
//! sample is an 8-bit level `k / 255`, so the pair survives PGM8 storage
//! unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{DisparityMap, Image, INVALID_DISPARITY};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticPair {
    pub left: Image,
    pub right: Image,
    /// Left-view ground truth; pixels without a right-view match are invalid.
    pub ground_truth: DisparityMap,
}

/// Left image of random dots and a right image whose pixel `x` shows left
/// pixel `x + disparity`; the band this leaves uncovered on the right edge
/// is filled with fresh dots.
pub fn gen_synthetic(width: usize, height: usize, disparity: usize, seed: u64) -> Result<SyntheticPair> {
    if width == 0 || height == 0 {
        return Err(Error::contract("synthetic image dimensions must be positive"));
    }
    if 4 * disparity >= width {
        return Err(Error::contract(format!(
            "disparity {disparity} must be below width/4 for width {width}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dot = || rng.random::<u8>() as f64 / 255.0;
    let left = Image::from_fn(width, height, |_, _| dot());
    let right = Image::from_fn(width, height, |x, y| {
        if x + disparity < width {
            left.get(x + disparity, y)
        } else {
            dot()
        }
    });
    let gt = (0..height)
        .flat_map(|_| {
            (0..width).map(move |x| {
                if x >= disparity {
                    disparity as f64
                } else {
                    INVALID_DISPARITY
                }
            })
        })
        .collect();
    Ok(SyntheticPair {
        left,
        right,
        ground_truth: DisparityMap::new(width, height, gt)?,
    })
}
