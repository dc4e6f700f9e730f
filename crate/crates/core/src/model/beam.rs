use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{decode_step, ModelConfig, Params};
use crate::numerics::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct BeamConfig {
    pub beam_size: usize,
    /// Length-penalty exponent; 0 scores by raw log-probability.
    pub alpha: f64,
    /// Tokens never emitted (typically padding and the start token).
    pub suppress: Vec<u32>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_size: 4,
            alpha: 0.6,
            suppress: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<u32>,
    pub log_prob: f64,
    pub finished: bool,
}

/// `((5 + len) / 6)^alpha`.
pub fn length_penalty(len: usize, alpha: f64) -> f64 {
    ((5.0 + len as f64) / 6.0).powf(alpha)
}

impl Hypothesis {
    pub fn score(&self, alpha: f64) -> f64 {
        self.log_prob / length_penalty(self.tokens.len(), alpha)
    }
}

/// Higher first; equal values fall back to the lexicographically lower sequence.
fn rank(a: (f64, &[u32]), b: (f64, &[u32])) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Beam search from the start token.
///
/// Every step expands all live hypotheses and keeps the `beam_size` most
/// probable extensions; those ending in the end token move to the finished
/// pool. Decoding stops when no live hypothesis remains or outputs reach
/// `max_target_len` tokens. The best finished hypothesis under the length
/// penalty wins; with none finished, the best unfinished one is returned.
pub fn beam_search(params: &Params, cfg: &ModelConfig, enc: &Tensor, beam: &BeamConfig) -> Result<Hypothesis> {
    if beam.beam_size == 0 {
        return Err(Error::config("beam_size must be at least 1"));
    }
    let mut alive = vec![Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        finished: false,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for _ in 0..cfg.max_target_len {
        let mut cands = Vec::new();
        for h in &alive {
            let logp = decode_step(params, cfg, enc, &h.tokens)?;
            for (tok, lp) in logp.iter().enumerate() {
                let tok = tok as u32;
                if beam.suppress.contains(&tok) {
                    continue;
                }
                let mut tokens = h.tokens.clone();
                tokens.push(tok);
                cands.push(Hypothesis {
                    tokens,
                    log_prob: h.log_prob + lp,
                    finished: tok == cfg.eos_id,
                });
            }
        }
        cands.sort_by(|a, b| rank((a.log_prob, &a.tokens), (b.log_prob, &b.tokens)));
        cands.truncate(beam.beam_size);
        let (done, live): (Vec<_>, Vec<_>) = cands.into_iter().partition(|h| h.finished);
        finished.extend(done);
        alive = live;
        if alive.is_empty() {
            break;
        }
    }
    let pool = if finished.is_empty() { alive } else { finished };
    pool.into_iter()
        .min_by(|a, b| rank((a.score(beam.alpha), &a.tokens), (b.score(beam.alpha), &b.tokens)))
        .ok_or_else(|| Error::Numeric("beam search produced no hypothesis".into()))
}
