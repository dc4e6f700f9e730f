//! Building a hard audio-visual test set from videos with two transcripts:
//! user-uploaded captions (the reference) and ASR output (the hypothesis).
//!
//! 1. Videos whose ASR disagrees with the captions beyond a WER threshold are
//!    dropped.
//! 2. Audio is split at silences; segments with poor caption quality, too
//!    little ASR difficulty or too few words are dropped.
//! 3. Survivors are ranked by a visual-relevance scorer for manual review.

mod filter;
mod pipeline;
mod scorer;
mod vad;

pub use filter::{segment_filter, video_gate, FilterInput, RejectReason, Thresholds, Verdict};
pub use pipeline::{
    apply_corrections, curate_video, load_corrections, rank_candidates, split_words, Correction, SegmentRecord,
    TimedWords, VideoInput,
};
pub use scorer::{KeywordScorer, Scorer};
pub use vad::{EnergyVad, Vad};
