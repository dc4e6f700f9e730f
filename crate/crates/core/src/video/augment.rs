use crate::numerics::Rng;
use crate::video::{FrameStack, Image};

/// Magnitudes of the training-time visual augmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentConfig {
    /// Smallest crop side as a fraction of the frame side.
    pub crop_min_scale: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            crop_min_scale: 0.8,
            brightness: 0.2,
            contrast: 0.2,
            saturation: 0.2,
        }
    }
}

/// One concrete draw of crop and colour parameters, shared by both frames.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentParams {
    pub crop_scale: f64,
    /// Top-left corner as a fraction of the free margin, in `[0, 1]`.
    pub crop_y: f64,
    pub crop_x: f64,
    pub brightness_delta: f64,
    pub contrast_factor: f64,
    pub saturation_factor: f64,
}

impl AugmentParams {
    pub fn identity() -> Self {
        AugmentParams {
            crop_scale: 1.0,
            crop_y: 0.0,
            crop_x: 0.0,
            brightness_delta: 0.0,
            contrast_factor: 1.0,
            saturation_factor: 1.0,
        }
    }

    pub fn sample(cfg: &AugmentConfig, rng: &mut Rng) -> Self {
        AugmentParams {
            crop_scale: rng.uniform_range(cfg.crop_min_scale, 1.0),
            crop_y: rng.uniform(),
            crop_x: rng.uniform(),
            brightness_delta: rng.uniform_range(-cfg.brightness, cfg.brightness),
            contrast_factor: rng.uniform_range(1.0 - cfg.contrast, 1.0 + cfg.contrast),
            saturation_factor: rng.uniform_range(1.0 - cfg.saturation, 1.0 + cfg.saturation),
        }
    }

    pub fn apply(&self, f: &FrameStack) -> FrameStack {
        let n = f.size;
        let side = self.crop_scale * n as f64;
        let margin = n as f64 - side;
        let (y0, x0) = (self.crop_y * margin, self.crop_x * margin);
        let mut data = Vec::with_capacity(f.data.len());
        for i in 0..2 {
            let img = Image {
                width: n,
                height: n,
                data: f.frame(i).to_vec(),
            };
            img.crop_resize(y0, x0, side, side, n, &mut data);
        }
        if self.brightness_delta != 0.0 {
            for v in &mut data {
                *v += self.brightness_delta;
            }
        }
        let luma = |p: &[f64]| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        if self.contrast_factor != 1.0 {
            let mean = data.chunks(3).map(luma).sum::<f64>() / (data.len() / 3) as f64;
            for v in &mut data {
                *v = mean + self.contrast_factor * (*v - mean);
            }
        }
        if self.saturation_factor != 1.0 {
            for p in data.chunks_mut(3) {
                let g = luma(p);
                for v in p.iter_mut() {
                    *v = g + self.saturation_factor * (*v - g);
                }
            }
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        FrameStack {
            size: n,
            data,
            timestamps_s: f.timestamps_s,
        }
    }
}

/// Random crop and colour jitter in training; identity otherwise.
pub fn augment_frames(f: &FrameStack, cfg: &AugmentConfig, rng: &mut Rng, train: bool) -> FrameStack {
    if !train {
        return f.clone();
    }
    AugmentParams::sample(cfg, rng).apply(f)
}
