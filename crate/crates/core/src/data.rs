//! Manifest entries turned into model inputs.

use rayon::prelude::*;

use crate::audio::{load_audio, AudioFrontend, Waveform};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::manifest::{Manifest, ManifestEntry};
use crate::model::ModelConfig;
use crate::numerics::{Rng, Tensor};
use crate::text::{Transcript, WordAlignment, WordpieceVocab};
use crate::video::{augment_frames, load_clip, sample_frames, tubelet_tokenize, AugmentConfig, Clip, FrameStack};

/// A decoded manifest entry.
#[derive(Clone, Debug)]
pub struct Utterance {
    pub id: String,
    pub waveform: Waveform,
    pub clip: Option<Clip>,
    pub transcript: Transcript,
    pub alignment: Option<WordAlignment>,
}

pub fn load_utterance(m: &Manifest, e: &ManifestEntry) -> Result<Utterance> {
    let clip = match &e.frames_path {
        Some(p) => Some(load_clip(m.resolve(p))?),
        None => None,
    };
    Ok(Utterance {
        id: e.id.clone(),
        waveform: load_audio(m.resolve(&e.audio_path))?,
        clip,
        transcript: Transcript::new(&e.transcript),
        alignment: e.word_alignment(),
    })
}

/// Loads every entry, in manifest order.
pub fn load_utterances(m: &Manifest) -> Result<Vec<Utterance>> {
    m.entries.par_iter().map(|e| load_utterance(m, e)).collect()
}

/// What the visual stream receives.
#[derive(Clone, Copy, Debug)]
pub enum Visual<'a> {
    Clip(&'a Clip),
    /// All-zero frames.
    Blank,
}

/// Audio, video and target encoders for one experiment.
#[derive(Clone, Debug)]
pub struct Featurizer {
    pub audio: AudioFrontend,
    pub image_size: usize,
    pub augment: AugmentConfig,
    pub model: ModelConfig,
    pub vocab: WordpieceVocab,
}

impl Featurizer {
    pub fn new(exp: &ExperimentConfig, vocab: WordpieceVocab) -> Result<Self> {
        exp.validate()?;
        let model = exp.model_config(vocab.len(), vocab.bos, vocab.eos)?;
        Ok(Featurizer {
            audio: exp.audio_frontend(),
            image_size: exp.image_size,
            augment: exp.augment_config(),
            model,
            vocab,
        })
    }

    /// Token ids followed by the end token.
    pub fn target(&self, t: &Transcript) -> Result<Vec<u32>> {
        let mut ids = self.vocab.encode(&t.text());
        ids.push(self.vocab.eos);
        if ids.len() > self.model.max_target_len {
            return Err(Error::config(format!(
                "transcript {:?} needs {} tokens, max_target_len is {}",
                t.text(),
                ids.len(),
                self.model.max_target_len
            )));
        }
        Ok(ids)
    }

    /// Audio tokens; SpecAugment is applied only when `augment` is given.
    pub fn audio_tokens(&self, w: &Waveform, augment: Option<&mut Rng>) -> Result<Tensor> {
        self.audio.tokens(w, augment)
    }

    /// Video tokens, or `None` for an audio-only model.
    pub fn video_tokens(&self, visual: Visual<'_>, rng: &mut Rng, augment: bool) -> Result<Option<Tensor>> {
        if self.model.audio_only {
            return Ok(None);
        }
        let frames = match visual {
            Visual::Clip(c) => sample_frames(c, self.image_size, rng)?,
            Visual::Blank => FrameStack::constant(self.image_size, 0.0)?,
        };
        let frames = augment_frames(&frames, &self.augment, rng, augment);
        tubelet_tokenize(&frames).map(Some)
    }

    /// Hypothesis text from decoded ids.
    pub fn detokenize(&self, ids: &[u32]) -> String {
        self.vocab.decode(ids)
    }
}
