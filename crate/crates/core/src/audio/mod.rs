//! Audio input path: waveforms, log-mel features, spectrogram patch tokens
//! and the degradations applied during training and evaluation.

mod frontend;
mod masking;
mod mel;
mod noise;
mod patch;
mod specaug;
mod wav;

pub use frontend::{AudioFrontend, FeatureNorm};
pub use masking::mask_words;
pub use mel::{
    log_mel_spectrogram, MelExtractor, Spectrogram, FFT_SIZE, FRAMES_PER_SECOND, HOP_LENGTH, LOG_FLOOR,
    N_MELS, FULL_CLIP_FRAMES, WINDOW_LENGTH,
};
pub use noise::{apply_noise, degrade, load_noise_bank, BurstInterval, NoiseKind, NoiseSpec, NoiseTrace};
pub use patch::{patchify_audio, PATCH_SIZE, PATCH_VALUES};
pub use specaug::{MaskAxis, MaskRegion, MaskValue, SpecAugment};
pub use wav::{load_audio, read_wav, write_wav};

use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 16_000;

/// Mono 16 kHz audio with samples nominally in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz != SAMPLE_RATE {
            return Err(Error::input(format!(
                "expected {SAMPLE_RATE} Hz audio, got {sample_rate_hz} Hz; resample first"
            )));
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
        })
    }

    pub fn from_samples(samples: Vec<f64>) -> Self {
        Waveform {
            samples,
            sample_rate_hz: SAMPLE_RATE,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    /// Mean square amplitude; zero for an empty clip.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    /// Sample index for a time in seconds, rounded to the nearest sample and
    /// clamped to the clip.
    pub fn index_at(&self, t_s: f64) -> usize {
        ((t_s * self.sample_rate_hz as f64).round().max(0.0) as usize).min(self.samples.len())
    }
}
