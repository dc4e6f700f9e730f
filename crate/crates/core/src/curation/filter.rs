use serde::{Deserialize, Serialize};

use crate::evaluation::{utterance_wer, InsertionSlice};
use crate::text::{Stoplist, Transcript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    #[serde(rename = "video_wer_gt_100")]
    VideoWerGt100,
    #[serde(rename = "seg_wer_gt_50")]
    SegWerGt50,
    #[serde(rename = "nonstop_wer_lt_20")]
    NonstopWerLt20,
    TooShort,
    /// No caption words to compare against.
    EmptyUserTranscript,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "lowercase")]
pub enum Verdict {
    Kept,
    Rejected(RejectReason),
}

impl Verdict {
    pub fn is_kept(&self) -> bool {
        *self == Verdict::Kept
    }
}

/// Filter thresholds in percent, except `min_words`. Comparisons are strict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Videos with WER above this are dropped.
    pub video_wer: f64,
    /// Segments with WER above this are dropped.
    pub segment_wer: f64,
    /// Segments with content-word WER below this are too easy.
    pub nonstop_wer: f64,
    /// Segments with fewer caption words are too short.
    pub min_words: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            video_wer: 100.0,
            segment_wer: 50.0,
            nonstop_wer: 20.0,
            min_words: 9,
        }
    }
}

/// `100·errors/n > threshold`, evaluated without division.
fn above(errors: usize, n: usize, threshold: f64) -> bool {
    errors as f64 * 100.0 > threshold * n as f64
}

fn below(errors: usize, n: usize, threshold: f64) -> bool {
    (errors as f64 * 100.0) < threshold * n as f64
}

/// Keeps a video unless the ASR's WER against the captions exceeds the threshold.
pub fn video_gate(user: &Transcript, asr: &Transcript, thr: &Thresholds) -> Verdict {
    if user.is_empty() {
        log::warn!("video with an empty caption transcript rejected");
        return Verdict::Rejected(RejectReason::EmptyUserTranscript);
    }
    let w = utterance_wer(user, asr, &Stoplist::parse(""), InsertionSlice::TotalOnly);
    if above(w.total.errors(), w.total.n_ref_words, thr.video_wer) {
        Verdict::Rejected(RejectReason::VideoWerGt100)
    } else {
        Verdict::Kept
    }
}

/// Segment statistics used by [`segment_filter`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterInput {
    pub errors: usize,
    pub n_words: usize,
    /// Substitutions and deletions at content-word reference positions.
    pub content_errors: usize,
    pub n_content_words: usize,
}

impl FilterInput {
    pub fn measure(user: &Transcript, asr: &Transcript, stoplist: &Stoplist) -> Self {
        let w = utterance_wer(user, asr, stoplist, InsertionSlice::TotalOnly);
        FilterInput {
            errors: w.total.errors(),
            n_words: w.total.n_ref_words,
            content_errors: w.content.sub + w.content.del,
            n_content_words: w.content.n_ref_words,
        }
    }
}

/// Quality, then too-clean, then too-short; the first failed check is the reason.
pub fn segment_filter(s: &FilterInput, thr: &Thresholds) -> Verdict {
    if s.n_words == 0 {
        return Verdict::Rejected(RejectReason::EmptyUserTranscript);
    }
    if above(s.errors, s.n_words, thr.segment_wer) {
        return Verdict::Rejected(RejectReason::SegWerGt50);
    }
    if s.n_content_words == 0 {
        log::info!("segment without content words: too-clean check skipped");
    } else if below(s.content_errors, s.n_content_words, thr.nonstop_wer) {
        return Verdict::Rejected(RejectReason::NonstopWerLt20);
    }
    if s.n_words < thr.min_words {
        return Verdict::Rejected(RejectReason::TooShort);
    }
    Verdict::Kept
}
