use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::{normalize, Stoplist, Transcript};

/// Visual relevance of a sentence to a video; higher is more grounded.
pub trait Scorer: Sync {
    fn score(&self, video_id: &str, sentence: &Transcript) -> f64;
}

/// Fraction of a sentence's content words found in the video's keyword list.
#[derive(Clone, Debug, Default)]
pub struct KeywordScorer {
    pub keywords: BTreeMap<String, BTreeSet<String>>,
    pub stoplist: Stoplist,
}

impl KeywordScorer {
    /// Reads one whitespace-separated keyword list for `video_id`.
    pub fn add_file(&mut self, video_id: &str, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.keywords
            .insert(video_id.to_string(), normalize(&text).split_whitespace().map(str::to_string).collect());
        Ok(())
    }
}

impl Scorer for KeywordScorer {
    fn score(&self, video_id: &str, sentence: &Transcript) -> f64 {
        let content: Vec<&String> = sentence.words.iter().filter(|w| !self.stoplist.is_stopword(w)).collect();
        let Some(kw) = self.keywords.get(video_id) else {
            return 0.0;
        };
        if content.is_empty() {
            return 0.0;
        }
        content.iter().filter(|w| kw.contains(w.as_str())).count() as f64 / content.len() as f64
    }
}
