use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{degrade, NoiseSpec, NoiseTrace};
use crate::data::{Featurizer, Utterance, Visual};
use crate::error::{Error, Result};
use crate::evaluation::{corpus_wer, InsertionSlice, SliceCounts, WerBreakdown};
use crate::model::{beam_search, encode, BeamConfig, Params};
use crate::numerics::Rng;
use crate::text::{Stoplist, Transcript};

const NOISE_STREAM: u64 = 11;
const FRAME_STREAM: u64 = 12;
const SHUFFLE_STREAM: u64 = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisualMode {
    /// The utterance's own frames.
    Real,
    /// No video for audio-only models, blank frames otherwise.
    None,
    /// Frames of another utterance in the same manifest.
    Shuffled,
}

impl fmt::Display for VisualMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VisualMode::Real => "real",
            VisualMode::None => "none",
            VisualMode::Shuffled => "shuffled",
        })
    }
}

impl FromStr for VisualMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(VisualMode::Real),
            "none" => Ok(VisualMode::None),
            "shuffled" => Ok(VisualMode::Shuffled),
            other => Err(Error::config(format!(
                "unknown visual mode {other:?} (expected real, none or shuffled)"
            ))),
        }
    }
}

pub struct EvalSetup<'a> {
    pub featurizer: &'a Featurizer,
    pub params: &'a Params,
    pub beam: BeamConfig,
    pub noise: NoiseSpec,
    pub visual: VisualMode,
    pub seed: u64,
    pub stoplist: &'a Stoplist,
    pub insertions: InsertionSlice,
}

/// Per-utterance outcome, one JSONL line in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub reference: String,
    pub hypothesis: String,
    pub errors: SliceCounts,
    pub noise: NoiseTrace,
    /// Utterance whose frames were shown, if any.
    pub visual_source: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutput {
    pub breakdown: WerBreakdown,
    pub records: Vec<EvalRecord>,
}

/// A uniformly drawn permutation without fixed points.
pub fn derangement(n: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::config(format!(
            "shuffled visuals need at least 2 utterances, manifest has {n}"
        )));
    }
    loop {
        let mut p: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut p);
        if p.iter().enumerate().all(|(i, &j)| i != j) {
            return Ok(p);
        }
    }
}

/// Noise seed for utterance `index`; depends only on the run seed, so
/// different checkpoints face identical degradations.
pub fn noise_seed(seed: u64, index: usize) -> u64 {
    Rng::derive(seed, &[NOISE_STREAM, index as u64]).next_u64()
}

/// Degrades, transcribes and scores every utterance.
pub fn evaluate(setup: &EvalSetup<'_>, data: &[Utterance]) -> Result<EvalOutput> {
    setup.noise.validate()?;
    let model = &setup.featurizer.model;
    setup.params.validate(model)?;
    let sources: Vec<Option<usize>> = match setup.visual {
        VisualMode::Real => (0..data.len()).map(Some).collect(),
        VisualMode::None => vec![None; data.len()],
        VisualMode::Shuffled => derangement(data.len(), &mut Rng::derive(setup.seed, &[SHUFFLE_STREAM]))?
            .into_iter()
            .map(Some)
            .collect(),
    };
    if !model.audio_only {
        for &s in sources.iter().flatten() {
            if data[s].clip.is_none() {
                return Err(Error::config(format!(
                    "entry {} has no frames for visual mode {}",
                    data[s].id, setup.visual
                )));
            }
        }
    }
    let outs: Vec<(String, NoiseTrace, Option<String>)> = data
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let (wave, trace) = degrade(&u.waveform, &setup.noise.with_seed(noise_seed(setup.seed, i)))?;
            let audio = setup.featurizer.audio_tokens(&wave, None)?;
            let clip = sources[i].and_then(|s| data[s].clip.as_ref());
            let visual = clip.map_or(Visual::Blank, Visual::Clip);
            let mut frame_rng = Rng::derive(setup.seed, &[FRAME_STREAM, i as u64]);
            let video = setup.featurizer.video_tokens(visual, &mut frame_rng, false)?;
            let enc = encode(setup.params, model, &audio, video.as_ref())?;
            let hyp = beam_search(setup.params, model, &enc, &setup.beam)?;
            let shown = (!model.audio_only)
                .then(|| sources[i].map(|s| data[s].id.clone()))
                .flatten();
            Ok((setup.featurizer.detokenize(&hyp.tokens), trace, shown))
        })
        .collect::<Result<_>>()?;
    let refs: Vec<Transcript> = data.iter().map(|u| u.transcript.clone()).collect();
    let hyps: Vec<Transcript> = outs.iter().map(|o| Transcript::new(&o.0)).collect();
    let breakdown = corpus_wer(&refs, &hyps, setup.stoplist, setup.insertions)?;
    let records = data
        .iter()
        .zip(outs)
        .zip(&breakdown.utterances)
        .map(|((u, (_, noise, visual_source)), w)| EvalRecord {
            id: u.id.clone(),
            reference: w.reference.clone(),
            hypothesis: w.hypothesis.clone(),
            errors: w.total,
            noise,
            visual_source,
        })
        .collect();
    Ok(EvalOutput { breakdown, records })
}
