//! Encoder-decoder network: per-modality patch embeddings, a bottleneck
//! fusion encoder, an autoregressive decoder and beam search.

mod beam;
mod config;
mod decoder;
mod encoder;
mod import;
mod layers;
mod params;

pub use beam::{beam_search, length_penalty, BeamConfig, Hypothesis};
pub use config::{EncoderOutput, ModelConfig};
pub use decoder::{decode_step, decoder_logits, sequence_loss};
pub use encoder::{encode, encode_on, BottleneckProbe};
pub use import::{import_weights, parse_import_map, ImportRule, Transform};
pub use params::{Bound, Params, INIT_STD};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::numerics::{Tape, Tensor};

/// One training or evaluation input after the frontends.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub audio: Tensor,
    pub video: Option<Tensor>,
    /// Target token ids ending with the end-of-sequence id.
    pub target: Vec<u32>,
}

/// Teacher-forced loss value only.
pub fn example_loss(params: &Params, cfg: &ModelConfig, ex: &Example) -> Result<f64> {
    let tape = Tape::new();
    let p = params.bind(&tape, false);
    let enc = encode_on(&tape, &p, cfg, &ex.audio, ex.video.as_ref(), None)?;
    Ok(sequence_loss(&p, cfg, enc, &ex.target)?.value().item())
}

/// Loss and the gradient of every parameter.
pub fn loss_and_grads(params: &Params, cfg: &ModelConfig, ex: &Example) -> Result<(f64, BTreeMap<String, Tensor>)> {
    let tape = Tape::new();
    let p = params.bind(&tape, true);
    let enc = encode_on(&tape, &p, cfg, &ex.audio, ex.video.as_ref(), None)?;
    let loss = sequence_loss(&p, cfg, enc, &ex.target)?;
    tape.backward(loss)?;
    Ok((loss.value().item(), p.grads(&tape)))
}

#[cfg(test)]
mod tests;
