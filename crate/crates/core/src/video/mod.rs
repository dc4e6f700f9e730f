//! Visual input path: two frames 0.4 s apart, crop/colour augmentation and
//! 16×16×2 tubelet tokens.

mod augment;
mod clip;
mod tubelet;

pub use augment::{augment_frames, AugmentConfig, AugmentParams};
pub use clip::{load_clip, sample_frames, write_raw_clip, Clip, Image, FRAME_GAP_S};
pub use tubelet::{tubelet_tokenize, TUBELET_FRAMES, TUBELET_SIZE, TUBELET_VALUES};

use crate::error::{Error, Result};

/// Side length of model input frames.
pub const FULL_IMAGE_SIZE: usize = 224;

/// Two square RGB frames, stored `[2][size][size][3]` with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameStack {
    pub size: usize,
    pub data: Vec<f64>,
    pub timestamps_s: [f64; 2],
}

impl FrameStack {
    pub fn new(size: usize, data: Vec<f64>, timestamps_s: [f64; 2]) -> Result<Self> {
        if size == 0 || size % TUBELET_SIZE != 0 {
            return Err(Error::contract(format!(
                "frame size {size} is not a positive multiple of {TUBELET_SIZE}"
            )));
        }
        if data.len() != 2 * size * size * 3 {
            return Err(Error::contract(format!(
                "frame stack of size {size} needs {} values, got {}",
                2 * size * size * 3,
                data.len()
            )));
        }
        Ok(FrameStack {
            size,
            data,
            timestamps_s,
        })
    }

    /// Uniform frames, useful as a blank visual input.
    pub fn constant(size: usize, value: f64) -> Result<Self> {
        Self::new(size, vec![value; 2 * size * size * 3], [0.0, FRAME_GAP_S])
    }

    pub fn index(&self, frame: usize, y: usize, x: usize, c: usize) -> usize {
        ((frame * self.size + y) * self.size + x) * 3 + c
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        let n = self.size * self.size * 3;
        &self.data[i * n..(i + 1) * n]
    }
}
