//! Corpus WER, noisy evaluation and result tables.

mod evaluate;
mod report;
mod wer;

pub use evaluate::{derangement, evaluate, noise_seed, EvalOutput, EvalRecord, EvalSetup, VisualMode};
pub use report::{table_report, EvalSummary};
pub use wer::{corpus_wer, rel_delta, utterance_wer, InsertionSlice, SliceCounts, UtteranceWer, WerBreakdown};
