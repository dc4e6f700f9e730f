use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::audio::NoiseKind;
use crate::evaluation::{rel_delta, EvalOutput, SliceCounts, VisualMode};

/// Headline numbers of one evaluation run, written as `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mask_strategy: String,
    pub audio_only: bool,
    pub noise: NoiseKind,
    pub snr_db: f64,
    pub visual: VisualMode,
    pub seed: u64,
    pub n_utterances: usize,
    pub wer_total: Option<f64>,
    pub wer_content: Option<f64>,
    pub wer_stop: Option<f64>,
    pub total: SliceCounts,
    pub content: SliceCounts,
    pub stop: SliceCounts,
}

impl EvalSummary {
    pub fn new(out: &EvalOutput, mask_strategy: &str, audio_only: bool, noise: NoiseKind, snr_db: f64, visual: VisualMode, seed: u64) -> Self {
        let b = &out.breakdown;
        EvalSummary {
            mask_strategy: mask_strategy.to_string(),
            audio_only,
            noise,
            snr_db,
            visual,
            seed,
            n_utterances: out.records.len(),
            wer_total: b.wer_total(),
            wer_content: b.wer_content(),
            wer_stop: b.wer_stop(),
            total: b.total,
            content: b.content,
            stop: b.stop,
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

/// A text table with one row per training strategy and, for each noise
/// condition, the audio-only WER, the audio-visual WER and the relative
/// improvement. Runs with non-real visuals are listed below the table.
pub fn table_report(runs: &[EvalSummary]) -> String {
    let mut strategies: Vec<&str> = Vec::new();
    for name in ["none", "random", "content"] {
        if runs.iter().any(|r| r.mask_strategy == name) {
            strategies.push(name);
        }
    }
    for r in runs {
        if !strategies.contains(&r.mask_strategy.as_str()) {
            strategies.push(&r.mask_strategy);
        }
    }
    let find = |s: &str, n: NoiseKind, audio_only: bool| {
        runs.iter()
            .find(|r| r.mask_strategy == s && r.noise == n && r.audio_only == audio_only && r.visual == VisualMode::Real)
            .and_then(|r| r.wer_total)
    };
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "strategy");
    for n in NoiseKind::ALL {
        let _ = write!(out, " | {:>11} {:>8} {:>8}", format!("{n} A"), "A+V", "RelΔ");
    }
    out.push('\n');
    for s in &strategies {
        let _ = write!(out, "{s:<10}");
        for n in NoiseKind::ALL {
            let (a, av) = (find(s, n, true), find(s, n, false));
            let d = a.zip(av).and_then(|(a, av)| rel_delta(a, av));
            let _ = write!(out, " | {:>11} {:>8} {:>8}", cell(a), cell(av), cell(d));
        }
        out.push('\n');
    }
    for r in runs.iter().filter(|r| r.visual != VisualMode::Real) {
        let _ = writeln!(
            out,
            "{} {} visual={} noise={}: WER {} (content {}, stop {})",
            r.mask_strategy,
            if r.audio_only { "A" } else { "A+V" },
            r.visual,
            r.noise,
            cell(r.wer_total),
            cell(r.wer_content),
            cell(r.wer_stop)
        );
    }
    out
}
