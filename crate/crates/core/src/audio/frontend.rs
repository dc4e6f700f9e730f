use crate::audio::{patchify_audio, MelExtractor, SpecAugment, Spectrogram, Waveform};
use crate::error::Result;
use crate::numerics::{Rng, Tensor};

/// Feature scaling applied to the log-mel spectrogram before patching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureNorm {
    None,
    /// Zero mean, unit variance over the whole utterance.
    Utterance,
}

/// Waveform to audio tokens: log-mel, optional SpecAugment, scaling, patches.
#[derive(Clone, Debug)]
pub struct AudioFrontend {
    mel: MelExtractor,
    pub n_frames: usize,
    pub spec_augment: Option<SpecAugment>,
    pub norm: FeatureNorm,
}

impl AudioFrontend {
    pub fn new(n_frames: usize, spec_augment: Option<SpecAugment>, norm: FeatureNorm) -> Self {
        AudioFrontend {
            mel: MelExtractor::new(),
            n_frames,
            spec_augment,
            norm,
        }
    }

    pub fn spectrogram(&self, w: &Waveform) -> Result<Spectrogram> {
        self.mel.compute(w, self.n_frames)
    }

    fn normalize(&self, mut s: Spectrogram) -> Spectrogram {
        if self.norm == FeatureNorm::Utterance {
            let n = s.data.len() as f64;
            let mean = s.data.iter().sum::<f64>() / n;
            let var = s.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let inv = 1.0 / var.sqrt().max(1e-5);
            for v in &mut s.data {
                *v = (*v - mean) * inv;
            }
        }
        s
    }

    /// Audio tokens; SpecAugment runs only when an rng is supplied.
    pub fn tokens(&self, w: &Waveform, augment_rng: Option<&mut Rng>) -> Result<Tensor> {
        let mut s = self.spectrogram(w)?;
        if let (Some(aug), Some(rng)) = (&self.spec_augment, augment_rng) {
            s = aug.apply(&s, rng)?;
        }
        patchify_audio(&self.normalize(s))
    }
}
