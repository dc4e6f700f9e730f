use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scoring normalization: lowercase, drop punctuation other than apostrophes
/// (hyphens and slashes separate words), collapse whitespace.
pub fn normalize(raw: &str) -> String {
    let mut cleaned = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c.is_alphanumeric() || c == '\'' {
            cleaned.extend(c.to_lowercase());
        } else if c.is_whitespace() || c == '-' || c == '/' {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A normalized word sequence together with the text it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub words: Vec<String>,
    pub raw: String,
}

impl Transcript {
    pub fn new(raw: &str) -> Self {
        Transcript {
            words: normalize(raw).split(' ').filter(|w| !w.is_empty()).map(str::to_string).collect(),
            raw: raw.to_string(),
        }
    }

    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        Self::new(&words.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" "))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

/// One word with its time span in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedWord {
    pub word: String,
    pub start_s: f64,
    pub end_s: f64,
}

/// Word-level time alignment of a clip, as produced by an external aligner.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordAlignment {
    pub entries: Vec<AlignedWord>,
}

impl WordAlignment {
    /// Checks ordering, positivity and non-overlap; `duration_s`, when given,
    /// bounds every end time.
    pub fn validate(&self, duration_s: Option<f64>) -> Result<()> {
        let mut prev_end = 0.0;
        for (i, e) in self.entries.iter().enumerate() {
            if e.word.is_empty() {
                return Err(Error::input(format!("alignment entry {i} has an empty word")));
            }
            if !(e.start_s >= 0.0 && e.end_s > e.start_s) {
                return Err(Error::input(format!(
                    "alignment entry {i} ({}) has invalid span [{}, {})",
                    e.word, e.start_s, e.end_s
                )));
            }
            if e.start_s < prev_end {
                return Err(Error::input(format!(
                    "alignment entry {i} ({}) overlaps or precedes the previous word",
                    e.word
                )));
            }
            if let Some(d) = duration_s {
                if e.end_s > d + 1e-9 {
                    return Err(Error::input(format!(
                        "alignment entry {i} ({}) ends at {} beyond clip duration {d}",
                        e.word, e.end_s
                    )));
                }
            }
            prev_end = e.end_s;
        }
        Ok(())
    }

    pub fn words(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.word.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
