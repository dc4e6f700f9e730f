//! Transcripts, tokenization and word-level alignment.

mod align;
mod stoplist;
mod transcript;
mod wordpiece;

pub use align::{align_words, AlignStep, AlignmentResult};
pub use stoplist::Stoplist;
pub use transcript::{normalize, AlignedWord, Transcript, WordAlignment};
pub use wordpiece::{WordpieceVocab, CONTINUATION_PREFIX, MAX_WORD_CHARS};
