use crate::audio::PATCH_VALUES;
use crate::error::{Error, Result};
use crate::video::TUBELET_VALUES;

/// Which encoder hidden states the decoder attends to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderOutput {
    /// Every final-layer token: audio, video, both CLS tokens and bottlenecks.
    All,
    /// Only the per-modality CLS tokens.
    Cls,
}

impl EncoderOutput {
    pub fn as_str(self) -> &'static str {
        match self {
            EncoderOutput::All => "all",
            EncoderOutput::Cls => "cls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(EncoderOutput::All),
            "cls" => Ok(EncoderOutput::Cls),
            other => Err(Error::config(format!("unknown encoder_output {other:?} (expected all or cls)"))),
        }
    }
}

/// Network hyperparameters. Token counts fix the positional tables.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub d_model: usize,
    /// Encoder layers per modality.
    pub layers: usize,
    pub heads: usize,
    /// Feed-forward hidden width, shared by encoder and decoder.
    pub ff_dim: usize,
    pub n_bottleneck: usize,
    /// First fused encoder layer, 0-based. Equal to `layers` disables fusion.
    pub fusion_layer: usize,
    pub dec_layers: usize,
    pub dec_heads: usize,
    pub vocab_size: usize,
    pub max_target_len: usize,
    pub audio_only: bool,
    pub audio_tokens: usize,
    pub video_tokens: usize,
    pub encoder_output: EncoderOutput,
    pub bos_id: u32,
    pub eos_id: u32,
}

impl ModelConfig {
    /// The published architecture; the vocabulary size comes from the vocab file.
    pub fn paper(vocab_size: usize) -> Self {
        ModelConfig {
            d_model: 768,
            layers: 12,
            heads: 12,
            ff_dim: 3072,
            n_bottleneck: 4,
            fusion_layer: 8,
            dec_layers: 8,
            dec_heads: 4,
            vocab_size,
            max_target_len: 128,
            audio_only: false,
            audio_tokens: 780,
            video_tokens: 196,
            encoder_output: EncoderOutput::All,
            bos_id: 2,
            eos_id: 3,
        }
    }

    /// Desk-scale model used for tests and the synthetic overfit run.
    pub fn tiny(vocab_size: usize) -> Self {
        ModelConfig {
            d_model: 16,
            layers: 2,
            heads: 2,
            ff_dim: 32,
            n_bottleneck: 4,
            fusion_layer: 1,
            dec_layers: 2,
            dec_heads: 2,
            vocab_size,
            max_target_len: 16,
            audio_only: false,
            audio_tokens: 60,
            video_tokens: 4,
            encoder_output: EncoderOutput::All,
            bos_id: 2,
            eos_id: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if self.d_model == 0 || self.heads == 0 || self.dec_heads == 0 || self.ff_dim == 0 {
            return fail("d_model, heads, dec_heads and ff_dim must be positive".into());
        }
        if self.d_model % self.heads != 0 || self.d_model % self.dec_heads != 0 {
            return fail(format!(
                "d_model {} is not divisible by heads {} and dec_heads {}",
                self.d_model, self.heads, self.dec_heads
            ));
        }
        if self.fusion_layer > self.layers {
            return fail(format!("fusion_layer {} exceeds layers {}", self.fusion_layer, self.layers));
        }
        if self.audio_tokens == 0 || (!self.audio_only && self.video_tokens == 0) {
            return fail("token counts must be positive".into());
        }
        if self.max_target_len == 0 {
            return fail("max_target_len must be positive".into());
        }
        for (name, id) in [("bos_id", self.bos_id), ("eos_id", self.eos_id)] {
            if id as usize >= self.vocab_size {
                return fail(format!("{name} {id} outside vocabulary of {}", self.vocab_size));
            }
        }
        Ok(())
    }

    pub fn audio_patch_dim(&self) -> usize {
        PATCH_VALUES
    }

    pub fn video_patch_dim(&self) -> usize {
        TUBELET_VALUES
    }

    /// Rows of the encoder output passed to the decoder.
    pub fn encoder_len(&self) -> usize {
        let streams = if self.audio_only { 1 } else { 2 };
        match self.encoder_output {
            EncoderOutput::Cls => streams,
            EncoderOutput::All => {
                let video = if self.audio_only { 0 } else { self.video_tokens };
                self.audio_tokens + video + streams + self.n_bottleneck
            }
        }
    }

    pub(crate) fn streams(&self) -> &'static [&'static str] {
        if self.audio_only {
            &["audio"]
        } else {
            &["audio", "video"]
        }
    }
}
