use serde::{Deserialize, Serialize};

use crate::audio::{Spectrogram, N_MELS};
use crate::error::{Error, Result};
use crate::numerics::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskValue {
    /// Mean of the unmasked utterance.
    Mean,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskAxis {
    Frequency,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskRegion {
    pub axis: MaskAxis,
    pub start: usize,
    pub width: usize,
}

/// Frequency and time masking policy.
///
/// `freq_masks` bands of width `U[0, freq_width]` mel bins and `time_masks`
/// spans of width `U[0, time_width]` frames are overwritten with the mask
/// value. Defaults follow the LibriSpeech-basic policy.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecAugment {
    pub freq_width: usize,
    pub freq_masks: usize,
    pub time_width: usize,
    pub time_masks: usize,
    pub mask_value: MaskValue,
}

impl Default for SpecAugment {
    fn default() -> Self {
        SpecAugment {
            freq_width: 27,
            freq_masks: 2,
            time_width: 100,
            time_masks: 2,
            mask_value: MaskValue::Mean,
        }
    }
}

impl SpecAugment {
    pub fn validate(&self, n_frames: usize) -> Result<()> {
        if self.freq_width > N_MELS {
            return Err(Error::config(format!(
                "SpecAugment frequency width {} exceeds {N_MELS} mel bins",
                self.freq_width
            )));
        }
        if self.time_width > n_frames {
            return Err(Error::config(format!(
                "SpecAugment time width {} exceeds {n_frames} frames",
                self.time_width
            )));
        }
        Ok(())
    }

    pub fn sample_regions(&self, n_frames: usize, rng: &mut Rng) -> Result<Vec<MaskRegion>> {
        self.validate(n_frames)?;
        let mut out = Vec::with_capacity(self.freq_masks + self.time_masks);
        let draw = |axis, max_width: usize, extent: usize, rng: &mut Rng| {
            let width = rng.int_inclusive(0, max_width);
            let start = rng.int_inclusive(0, extent - width);
            MaskRegion { axis, start, width }
        };
        for _ in 0..self.freq_masks {
            out.push(draw(MaskAxis::Frequency, self.freq_width, N_MELS, rng));
        }
        for _ in 0..self.time_masks {
            out.push(draw(MaskAxis::Time, self.time_width, n_frames, rng));
        }
        Ok(out)
    }

    pub fn apply_regions(&self, s: &Spectrogram, regions: &[MaskRegion]) -> Result<Spectrogram> {
        let fill = match self.mask_value {
            MaskValue::Mean => s.mean(),
            MaskValue::Zero => 0.0,
        };
        let mut out = s.clone();
        for r in regions {
            let extent = match r.axis {
                MaskAxis::Frequency => N_MELS,
                MaskAxis::Time => s.n_frames,
            };
            if r.start + r.width > extent {
                return Err(Error::contract(format!("mask region {r:?} exceeds extent {extent}")));
            }
            match r.axis {
                MaskAxis::Frequency => {
                    for f in 0..s.n_frames {
                        for b in r.start..r.start + r.width {
                            out.data[f * N_MELS + b] = fill;
                        }
                    }
                }
                MaskAxis::Time => {
                    out.data[r.start * N_MELS..(r.start + r.width) * N_MELS].fill(fill);
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, s: &Spectrogram, rng: &mut Rng) -> Result<Spectrogram> {
        let regions = self.sample_regions(s.n_frames, rng)?;
        self.apply_regions(s, &regions)
    }
}
