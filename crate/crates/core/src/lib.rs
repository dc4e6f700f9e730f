//! Audio-visual speech recognition toolkit.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`numerics`]: f64 tensors and a reverse-mode gradient tape
//! - [`text`]: transcripts, wordpiece tokenization, stopwords, word alignment
//! - [`audio`]: log-mel features, spectrogram patches and every audio degradation
//! - [`video`]: frame sampling, augmentation and tubelet tokens
//! - [`model`]: bottleneck-fusion encoder, autoregressive decoder, beam search
//! - [`training`]: word-masking plans, momentum optimizer, training loop
//! - [`evaluation`]: corpus WER with content/stop slices, noisy evaluation
//! - [`curation`]: transcript-disagreement filtering and candidate ranking
//!
//! [`config`], [`manifest`] and [`data`] connect these stages to files on disk.

pub mod error;
pub mod numerics;
pub mod text;
pub mod audio;
pub mod video;
pub mod model;
pub mod training;
pub mod evaluation;
pub mod curation;
pub mod config;
pub mod manifest;
pub mod data;
pub mod synth;

pub use error::{Error, Result};
