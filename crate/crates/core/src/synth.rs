//! Synthetic corpora for smoke tests and overfitting checks.
//!
//! Each lexicon word is rendered as a Hann-windowed pair of tones unique to
//! that word. Frames are flat colours keyed by the utterance's first content
//! word, so the visual stream carries a little information about the text.

use std::path::Path;

use crate::audio::{write_wav, Waveform, SAMPLE_RATE};
use crate::error::Result;
use crate::manifest::{write_manifest, ManifestEntry};
use crate::numerics::Rng;
use crate::text::{AlignedWord, Stoplist};
use crate::video::{write_raw_clip, Clip, Image};

pub const LEXICON: [&str; 16] = [
    "the", "a", "of", "and", "red", "blue", "green", "cat", "dog", "ball", "run", "jump", "big", "small", "tree", "car",
];

const LEAD_S: f64 = 0.1;
const WORD_S: f64 = 0.25;
const GAP_S: f64 = 0.08;
const FPS: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub utterances: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub frame_size: usize,
    pub noise_clips: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            utterances: 10,
            min_words: 3,
            max_words: 5,
            frame_size: 48,
            noise_clips: 3,
            seed: 0,
        }
    }
}

fn word_index(w: &str) -> usize {
    LEXICON.iter().position(|x| *x == w).unwrap_or(0)
}

/// Renders words back to back and returns the waveform with its alignment.
pub fn render_words(words: &[&str], rng: &mut Rng) -> (Waveform, Vec<AlignedWord>) {
    let sr = SAMPLE_RATE as f64;
    let total = LEAD_S * 2.0 + words.len() as f64 * (WORD_S + GAP_S);
    let mut samples: Vec<f64> = (0..(total * sr).round() as usize)
        .map(|_| 0.003 * rng.normal())
        .collect();
    let mut align = Vec::new();
    let n = (WORD_S * sr).round() as usize;
    for (k, w) in words.iter().enumerate() {
        let i = word_index(w) as f64;
        let (f1, f2) = (300.0 + 140.0 * i, 2500.0 + 260.0 * i);
        let start_s = LEAD_S + k as f64 * (WORD_S + GAP_S);
        let s0 = (start_s * sr).round() as usize;
        for j in 0..n {
            let t = j as f64 / sr;
            let env = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
            let tone = (2.0 * std::f64::consts::PI * f1 * t).sin() + 0.6 * (2.0 * std::f64::consts::PI * f2 * t).sin();
            samples[s0 + j] += 0.3 * env * tone;
        }
        align.push(AlignedWord {
            word: w.to_string(),
            start_s,
            end_s: start_s + WORD_S,
        });
    }
    (Waveform::from_samples(samples), align)
}

/// Random words from the lexicon.
pub fn random_words(rng: &mut Rng, n: usize) -> Vec<&'static str> {
    (0..n).map(|_| LEXICON[rng.below(LEXICON.len())]).collect()
}

fn colour_clip(words: &[&str], duration_s: f64, size: usize, stop: &Stoplist, rng: &mut Rng) -> Clip {
    let key = words
        .iter()
        .find(|w| !stop.is_stopword(w))
        .map_or(0, |w| word_index(w));
    let base = [
        (key % 4) as f64 / 3.0,
        ((key / 4) % 4) as f64 / 3.0,
        0.5 + 0.25 * (key % 2) as f64,
    ];
    let n = ((duration_s * FPS).ceil() as usize).max(1);
    let frames = (0..n)
        .map(|_| {
            let data = (0..size * size)
                .flat_map(|_| base)
                .map(|v| (v + 0.02 * rng.normal()).clamp(0.0, 1.0))
                .collect();
            Image::new(size, size, data).expect("square frame")
        })
        .collect();
    Clip { frames, fps: FPS }
}

/// A noise clip: white noise plus a few random tones.
pub fn noise_clip(rng: &mut Rng, seconds: f64) -> Waveform {
    let sr = SAMPLE_RATE as f64;
    let tones: Vec<(f64, f64)> = (0..3).map(|_| (rng.uniform_range(100.0, 4000.0), rng.uniform_range(0.0, 6.3))).collect();
    Waveform::from_samples(
        (0..(seconds * sr) as usize)
            .map(|i| {
                let t = i as f64 / sr;
                0.1 * rng.normal() + tones.iter().map(|(f, ph)| 0.1 * (2.0 * std::f64::consts::PI * f * t + ph).sin()).sum::<f64>()
            })
            .collect(),
    )
}

/// Writes `manifest.jsonl`, audio, frames and a `noise/` bank under `dir`.
pub fn write_corpus(dir: impl AsRef<Path>, spec: &SynthSpec) -> Result<Vec<ManifestEntry>> {
    let dir = dir.as_ref();
    let io = |p: &Path, e| crate::Error::io(p, e);
    std::fs::create_dir_all(dir.join("noise")).map_err(|e| io(dir, e))?;
    let stop = Stoplist::default();
    let mut entries = Vec::new();
    for u in 0..spec.utterances {
        let mut rng = Rng::derive(spec.seed, &[u as u64]);
        let n = rng.int_inclusive(spec.min_words, spec.max_words);
        let words = random_words(&mut rng, n);
        let (wave, align) = render_words(&words, &mut rng);
        let id = format!("utt{u:04}");
        write_wav(dir.join(format!("{id}.wav")), &wave)?;
        let clip = colour_clip(&words, wave.duration_s(), spec.frame_size, &stop, &mut rng);
        write_raw_clip(dir.join(format!("{id}.frames")), &clip)?;
        entries.push(ManifestEntry {
            id: id.clone(),
            audio_path: format!("{id}.wav").into(),
            frames_path: Some(format!("{id}.frames").into()),
            transcript: words.join(" "),
            alignment: Some(align),
            duration_s: wave.duration_s(),
        });
    }
    for k in 0..spec.noise_clips {
        let mut rng = Rng::derive(spec.seed, &[u64::MAX, k as u64]);
        write_wav(dir.join("noise").join(format!("noise{k:02}.wav")), &noise_clip(&mut rng, 1.5))?;
    }
    write_manifest(dir.join("manifest.jsonl"), &entries)?;
    Ok(entries)
}
