//! Flat `key = value` experiment configuration with named presets.
//!
//! A file may start from a preset (`preset = tiny`); later keys override it.
//! [`ExperimentConfig::to_text`] writes every key, so a resolved config
//! reproduces a run exactly.

use std::path::Path;

use crate::audio::{AudioFrontend, FeatureNorm, MaskValue, SpecAugment, FRAMES_PER_SECOND, PATCH_SIZE};
use crate::error::{Error, Result};
use crate::model::{BeamConfig, EncoderOutput, ModelConfig};
use crate::training::{MaskStrategy, Schedule};
use crate::video::{AugmentConfig, TUBELET_SIZE};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: String,
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub n_bottleneck: usize,
    pub fusion_layer: usize,
    pub dec_layers: usize,
    pub dec_heads: usize,
    pub max_target_len: usize,
    pub audio_only: bool,
    pub encoder_output: EncoderOutput,
    pub clip_seconds: f64,
    pub image_size: usize,
    pub feature_norm: FeatureNorm,
    pub spec_augment: bool,
    pub specaug_freq_width: usize,
    pub specaug_freq_masks: usize,
    pub specaug_time_width: usize,
    pub specaug_time_masks: usize,
    pub specaug_mask_value: MaskValue,
    pub video_augment: bool,
    pub crop_min_scale: f64,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub warmup_iters: usize,
    pub momentum: f64,
    /// Global L2 gradient-norm cap; 0 disables clipping.
    pub grad_clip: f64,
    pub mask_strategy: MaskStrategy,
    pub mask_rate: f64,
    pub checkpoint_every: usize,
    pub beam_size: usize,
    pub length_penalty: f64,
    pub seed: u64,
    /// Wordpiece vocabulary file; empty builds a whole-word vocabulary from
    /// the training transcripts.
    pub vocab: String,
    /// Optional pretrained tensors and the name map used to import them.
    pub init_weights: String,
    pub init_map: String,
}

pub const PRESETS: [&str; 4] = ["paper", "pretrain-paper", "finetune-paper", "tiny"];

impl ExperimentConfig {
    pub fn paper() -> Self {
        let m = ModelConfig::paper(0);
        ExperimentConfig {
            preset: "paper".into(),
            d_model: m.d_model,
            layers: m.layers,
            heads: m.heads,
            ff_dim: m.ff_dim,
            n_bottleneck: m.n_bottleneck,
            fusion_layer: m.fusion_layer,
            dec_layers: m.dec_layers,
            dec_heads: m.dec_heads,
            max_target_len: m.max_target_len,
            audio_only: false,
            encoder_output: EncoderOutput::All,
            clip_seconds: 25.0,
            image_size: 224,
            feature_norm: FeatureNorm::Utterance,
            spec_augment: true,
            specaug_freq_width: 27,
            specaug_freq_masks: 2,
            specaug_time_width: 100,
            specaug_time_masks: 2,
            specaug_mask_value: MaskValue::Mean,
            video_augment: true,
            crop_min_scale: 0.8,
            brightness: 0.2,
            contrast: 0.2,
            saturation: 0.2,
            iterations: 1_000_000,
            batch_size: 1536,
            base_lr: 2.0,
            warmup_iters: 1000,
            momentum: 0.9,
            grad_clip: 0.0,
            mask_strategy: MaskStrategy::None,
            mask_rate: 0.1,
            checkpoint_every: 10_000,
            beam_size: 4,
            length_penalty: 0.6,
            seed: 0,
            vocab: String::new(),
            init_weights: String::new(),
            init_map: String::new(),
        }
    }

    pub fn finetune_paper() -> Self {
        ExperimentConfig {
            preset: "finetune-paper".into(),
            iterations: 40_000,
            batch_size: 256,
            warmup_iters: 0,
            ..Self::paper()
        }
    }

    pub fn tiny() -> Self {
        let m = ModelConfig::tiny(0);
        ExperimentConfig {
            preset: "tiny".into(),
            d_model: m.d_model,
            layers: m.layers,
            heads: m.heads,
            ff_dim: m.ff_dim,
            n_bottleneck: m.n_bottleneck,
            fusion_layer: m.fusion_layer,
            dec_layers: m.dec_layers,
            dec_heads: m.dec_heads,
            max_target_len: m.max_target_len,
            clip_seconds: 2.0,
            image_size: 32,
            specaug_freq_width: 10,
            specaug_time_width: 20,
            iterations: 300,
            batch_size: 10,
            base_lr: 0.2,
            warmup_iters: 10,
            grad_clip: 1.0,
            checkpoint_every: 100,
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "pretrain-paper" => Ok(ExperimentConfig {
                preset: "pretrain-paper".into(),
                ..Self::paper()
            }),
            "finetune-paper" => Ok(Self::finetune_paper()),
            "tiny" => Ok(Self::tiny()),
            other => Err(Error::config(format!("unknown preset {other:?} (expected one of {PRESETS:?})"))),
        }
    }

    /// Parses a config file body. A `preset` key, wherever it appears,
    /// selects the base; other keys override it.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let base = pairs
            .iter()
            .rev()
            .find(|p| p.1 == "preset")
            .map_or("paper", |p| p.2.as_str());
        let mut cfg = Self::preset(base)?;
        for (line, k, v) in &pairs {
            if k != "preset" {
                cfg.set(k, v).map_err(|e| Error::Parse {
                    path: origin.to_string(),
                    line: *line,
                    msg: e.to_string(),
                })?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Applies one override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::config(format!("{key}: cannot parse {v:?}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::config(format!("{key}: expected true or false, got {v:?}"))),
            }
        }
        let v = value;
        match key {
            "preset" => *self = Self::preset(v)?,
            "d_model" => self.d_model = num(key, v)?,
            "layers" => self.layers = num(key, v)?,
            "heads" => self.heads = num(key, v)?,
            "ff_dim" => self.ff_dim = num(key, v)?,
            "n_bottleneck" => self.n_bottleneck = num(key, v)?,
            "fusion_layer" => self.fusion_layer = num(key, v)?,
            "dec_layers" => self.dec_layers = num(key, v)?,
            "dec_heads" => self.dec_heads = num(key, v)?,
            "max_target_len" => self.max_target_len = num(key, v)?,
            "audio_only" => self.audio_only = flag(key, v)?,
            "encoder_output" => self.encoder_output = EncoderOutput::parse(v)?,
            "clip_seconds" => self.clip_seconds = num(key, v)?,
            "image_size" => self.image_size = num(key, v)?,
            "feature_norm" => {
                self.feature_norm = match v {
                    "utterance" => FeatureNorm::Utterance,
                    "none" => FeatureNorm::None,
                    _ => return Err(Error::config(format!("feature_norm: expected utterance or none, got {v:?}"))),
                }
            }
            "spec_augment" => self.spec_augment = flag(key, v)?,
            "specaug_freq_width" => self.specaug_freq_width = num(key, v)?,
            "specaug_freq_masks" => self.specaug_freq_masks = num(key, v)?,
            "specaug_time_width" => self.specaug_time_width = num(key, v)?,
            "specaug_time_masks" => self.specaug_time_masks = num(key, v)?,
            "specaug_mask_value" => {
                self.specaug_mask_value = match v {
                    "mean" => MaskValue::Mean,
                    "zero" => MaskValue::Zero,
                    _ => return Err(Error::config(format!("specaug_mask_value: expected mean or zero, got {v:?}"))),
                }
            }
            "video_augment" => self.video_augment = flag(key, v)?,
            "crop_min_scale" => self.crop_min_scale = num(key, v)?,
            "brightness" => self.brightness = num(key, v)?,
            "contrast" => self.contrast = num(key, v)?,
            "saturation" => self.saturation = num(key, v)?,
            "iterations" => self.iterations = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "base_lr" => self.base_lr = num(key, v)?,
            "warmup_iters" => self.warmup_iters = num(key, v)?,
            "momentum" => self.momentum = num(key, v)?,
            "grad_clip" => self.grad_clip = num(key, v)?,
            "mask_strategy" => self.mask_strategy = v.parse()?,
            "mask_rate" => self.mask_rate = num(key, v)?,
            "checkpoint_every" => self.checkpoint_every = num(key, v)?,
            "beam_size" => self.beam_size = num(key, v)?,
            "length_penalty" => self.length_penalty = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "vocab" => self.vocab = v.to_string(),
            "init_weights" => self.init_weights = v.to_string(),
            "init_map" => self.init_map = v.to_string(),
            _ => return Err(Error::config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let norm = match self.feature_norm {
            FeatureNorm::Utterance => "utterance",
            FeatureNorm::None => "none",
        };
        let mask_value = match self.specaug_mask_value {
            MaskValue::Mean => "mean",
            MaskValue::Zero => "zero",
        };
        let rows: Vec<(&str, String)> = vec![
            ("preset", self.preset.clone()),
            ("d_model", self.d_model.to_string()),
            ("layers", self.layers.to_string()),
            ("heads", self.heads.to_string()),
            ("ff_dim", self.ff_dim.to_string()),
            ("n_bottleneck", self.n_bottleneck.to_string()),
            ("fusion_layer", self.fusion_layer.to_string()),
            ("dec_layers", self.dec_layers.to_string()),
            ("dec_heads", self.dec_heads.to_string()),
            ("max_target_len", self.max_target_len.to_string()),
            ("audio_only", self.audio_only.to_string()),
            ("encoder_output", self.encoder_output.as_str().into()),
            ("clip_seconds", self.clip_seconds.to_string()),
            ("image_size", self.image_size.to_string()),
            ("feature_norm", norm.into()),
            ("spec_augment", self.spec_augment.to_string()),
            ("specaug_freq_width", self.specaug_freq_width.to_string()),
            ("specaug_freq_masks", self.specaug_freq_masks.to_string()),
            ("specaug_time_width", self.specaug_time_width.to_string()),
            ("specaug_time_masks", self.specaug_time_masks.to_string()),
            ("specaug_mask_value", mask_value.into()),
            ("video_augment", self.video_augment.to_string()),
            ("crop_min_scale", self.crop_min_scale.to_string()),
            ("brightness", self.brightness.to_string()),
            ("contrast", self.contrast.to_string()),
            ("saturation", self.saturation.to_string()),
            ("iterations", self.iterations.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("base_lr", self.base_lr.to_string()),
            ("warmup_iters", self.warmup_iters.to_string()),
            ("momentum", self.momentum.to_string()),
            ("grad_clip", self.grad_clip.to_string()),
            ("mask_strategy", self.mask_strategy.to_string()),
            ("mask_rate", self.mask_rate.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("beam_size", self.beam_size.to_string()),
            ("length_penalty", self.length_penalty.to_string()),
            ("seed", self.seed.to_string()),
            ("vocab", self.vocab.clone()),
            ("init_weights", self.init_weights.clone()),
            ("init_map", self.init_map.clone()),
        ];
        rows.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn n_frames(&self) -> usize {
        (self.clip_seconds * FRAMES_PER_SECOND as f64).round() as usize
    }

    pub fn audio_tokens(&self) -> usize {
        (self.n_frames() / PATCH_SIZE) * (crate::audio::N_MELS / PATCH_SIZE)
    }

    pub fn video_tokens(&self) -> usize {
        (self.image_size / TUBELET_SIZE).pow(2)
    }

    pub fn model_config(&self, vocab_size: usize, bos_id: u32, eos_id: u32) -> Result<ModelConfig> {
        let m = ModelConfig {
            d_model: self.d_model,
            layers: self.layers,
            heads: self.heads,
            ff_dim: self.ff_dim,
            n_bottleneck: self.n_bottleneck,
            fusion_layer: self.fusion_layer,
            dec_layers: self.dec_layers,
            dec_heads: self.dec_heads,
            vocab_size,
            max_target_len: self.max_target_len,
            audio_only: self.audio_only,
            audio_tokens: self.audio_tokens(),
            video_tokens: self.video_tokens(),
            encoder_output: self.encoder_output,
            bos_id,
            eos_id,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn spec_augment_policy(&self) -> Option<SpecAugment> {
        self.spec_augment.then(|| SpecAugment {
            freq_width: self.specaug_freq_width,
            freq_masks: self.specaug_freq_masks,
            time_width: self.specaug_time_width,
            time_masks: self.specaug_time_masks,
            mask_value: self.specaug_mask_value,
        })
    }

    pub fn audio_frontend(&self) -> AudioFrontend {
        AudioFrontend::new(self.n_frames(), self.spec_augment_policy(), self.feature_norm)
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            crop_min_scale: self.crop_min_scale,
            brightness: self.brightness,
            contrast: self.contrast,
            saturation: self.saturation,
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            base_lr: self.base_lr,
            warmup_iters: self.warmup_iters,
            total_iters: self.iterations,
            momentum: self.momentum,
        }
    }

    pub fn beam(&self, suppress: Vec<u32>) -> BeamConfig {
        BeamConfig {
            beam_size: self.beam_size,
            alpha: self.length_penalty,
            suppress,
        }
    }

    /// Checks everything that does not depend on the vocabulary.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if self.n_frames() < PATCH_SIZE {
            return fail(format!("clip_seconds {} gives fewer than {PATCH_SIZE} frames", self.clip_seconds));
        }
        if self.image_size == 0 || self.image_size % TUBELET_SIZE != 0 {
            return fail(format!("image_size {} is not a positive multiple of {TUBELET_SIZE}", self.image_size));
        }
        if let Some(sa) = self.spec_augment_policy() {
            sa.validate(self.n_frames())?;
        }
        if !(0.0 < self.crop_min_scale && self.crop_min_scale <= 1.0) {
            return fail(format!("crop_min_scale {} outside (0, 1]", self.crop_min_scale));
        }
        if !(0.0..=1.0).contains(&self.mask_rate) {
            return fail(format!("mask_rate {} outside [0, 1]", self.mask_rate));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        if !(self.grad_clip >= 0.0 && self.grad_clip.is_finite()) {
            return fail(format!("grad_clip {} must be finite and non-negative", self.grad_clip));
        }
        if self.beam_size == 0 {
            return fail("beam_size must be positive".into());
        }
        self.schedule().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_round_trip() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            c.validate().unwrap();
            assert_eq!(ExperimentConfig::parse(&c.to_text(), "x").unwrap(), c);
        }
    }

    #[test]
    fn paper_token_counts() {
        let c = ExperimentConfig::paper();
        assert_eq!(c.n_frames(), 2500);
        assert_eq!(c.audio_tokens(), 780);
        assert_eq!(c.video_tokens(), 196);
        let t = ExperimentConfig::tiny();
        assert_eq!((t.audio_tokens(), t.video_tokens()), (60, 4));
    }

    #[test]
    fn overrides_and_errors() {
        let c = ExperimentConfig::parse("# comment\nbase_lr = 0.5\npreset = tiny\n\naudio_only = true # inline\n", "f").unwrap();
        assert_eq!(c.preset, "tiny");
        assert_eq!(c.base_lr, 0.5);
        assert!(c.audio_only);
        assert!(matches!(ExperimentConfig::parse("nonsense", "f"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("\nlayers = many", "f"), Err(Error::Parse { line: 2, .. })));
        assert!(ExperimentConfig::parse("colour = red", "f").is_err());
        assert!(ExperimentConfig::parse("preset = huge", "f").is_err());
    }
}
