use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{align_words, AlignStep, Stoplist, Transcript};

/// Error counts over a set of reference words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCounts {
    pub sub: usize,
    pub del: usize,
    pub ins: usize,
    pub n_ref_words: usize,
}

impl SliceCounts {
    pub fn errors(&self) -> usize {
        self.sub + self.del + self.ins
    }

    /// Percentage; `None` when the slice has no reference words.
    pub fn wer(&self) -> Option<f64> {
        (self.n_ref_words > 0).then(|| 100.0 * self.errors() as f64 / self.n_ref_words as f64)
    }

    fn add(&mut self, o: &SliceCounts) {
        self.sub += o.sub;
        self.del += o.del;
        self.ins += o.ins;
        self.n_ref_words += o.n_ref_words;
    }
}

/// Where an inserted word's error is counted besides the total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionSlice {
    /// The content or stop slice of the inserted hypothesis word.
    #[default]
    Hypothesis,
    /// Only the total.
    TotalOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceWer {
    pub reference: String,
    pub hypothesis: String,
    pub total: SliceCounts,
    pub content: SliceCounts,
    pub stop: SliceCounts,
}

/// Corpus-pooled WER with content-word and stopword slices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WerBreakdown {
    pub total: SliceCounts,
    pub content: SliceCounts,
    pub stop: SliceCounts,
    pub utterances: Vec<UtteranceWer>,
}

impl WerBreakdown {
    pub fn wer_total(&self) -> Option<f64> {
        self.total.wer()
    }

    pub fn wer_content(&self) -> Option<f64> {
        self.content.wer()
    }

    pub fn wer_stop(&self) -> Option<f64> {
        self.stop.wer()
    }
}

/// Scores one pair. The reference may be empty here; corpus scoring rejects that.
pub fn utterance_wer(r: &Transcript, h: &Transcript, stoplist: &Stoplist, ins: InsertionSlice) -> UtteranceWer {
    let al = align_words(&r.words, &h.words);
    let mut u = UtteranceWer {
        reference: r.text(),
        hypothesis: h.text(),
        total: SliceCounts::default(),
        content: SliceCounts::default(),
        stop: SliceCounts::default(),
    };
    for w in &r.words {
        u.total.n_ref_words += 1;
        if stoplist.is_stopword(w) {
            u.stop.n_ref_words += 1;
        } else {
            u.content.n_ref_words += 1;
        }
    }
    for step in &al.steps {
        match *step {
            AlignStep::Match { .. } => {}
            AlignStep::Substitution { r: i, .. } => {
                u.total.sub += 1;
                if stoplist.is_stopword(&r.words[i]) {
                    u.stop.sub += 1;
                } else {
                    u.content.sub += 1;
                }
            }
            AlignStep::Deletion { r: i } => {
                u.total.del += 1;
                if stoplist.is_stopword(&r.words[i]) {
                    u.stop.del += 1;
                } else {
                    u.content.del += 1;
                }
            }
            AlignStep::Insertion { h: j } => {
                u.total.ins += 1;
                if ins == InsertionSlice::Hypothesis {
                    if stoplist.is_stopword(&h.words[j]) {
                        u.stop.ins += 1;
                    } else {
                        u.content.ins += 1;
                    }
                }
            }
        }
    }
    u
}

/// Pools errors over all pairs and divides by the total reference length.
pub fn corpus_wer(
    refs: &[Transcript],
    hyps: &[Transcript],
    stoplist: &Stoplist,
    ins: InsertionSlice,
) -> Result<WerBreakdown> {
    if refs.len() != hyps.len() {
        return Err(Error::contract(format!(
            "{} references but {} hypotheses",
            refs.len(),
            hyps.len()
        )));
    }
    let mut out = WerBreakdown::default();
    for (i, (r, h)) in refs.iter().zip(hyps).enumerate() {
        if r.is_empty() {
            return Err(Error::contract(format!("reference {i} is empty")));
        }
        let u = utterance_wer(r, h, stoplist, ins);
        out.total.add(&u.total);
        out.content.add(&u.content);
        out.stop.add(&u.stop);
        out.utterances.push(u);
    }
    Ok(out)
}

/// Relative improvement of `wer_av` over `wer_a`, in percent.
pub fn rel_delta(wer_a: f64, wer_av: f64) -> Option<f64> {
    (wer_a > 0.0).then(|| 100.0 * (wer_a - wer_av) / wer_a)
}
