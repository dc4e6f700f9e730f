use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../../data/stopwords.txt");

/// Set of stop words; everything else is a content word.
#[derive(Clone, Debug)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Default for Stoplist {
    fn default() -> Self {
        Self::parse(BUNDLED)
    }
}

impl Stoplist {
    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stoplist { words }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn is_content_word(&self, word: &str) -> Result<bool> {
        if word.is_empty() {
            return Err(Error::input("empty word has no stopword class"));
        }
        Ok(!self.is_stopword(word))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list() {
        let s = Stoplist::default();
        assert!((170..=190).contains(&s.len()), "{}", s.len());
        assert!(!s.is_content_word("the").unwrap());
        assert!(!s.is_content_word("The").unwrap());
        assert!(s.is_content_word("eggplant").unwrap());
        assert!(s.is_content_word("").is_err());
    }

    #[test]
    fn custom_list() {
        let s = Stoplist::parse("# comment\nfoo\n\nBar\n");
        assert_eq!(s.len(), 2);
        assert!(s.is_stopword("bar"));
        assert!(s.is_content_word("the").unwrap());
    }
}
