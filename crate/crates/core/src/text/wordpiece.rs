use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::normalize;

/// Marker carried by pieces that continue a word.
pub const CONTINUATION_PREFIX: &str = "##";
/// Words longer than this many characters become the unknown token.
pub const MAX_WORD_CHARS: usize = 100;

pub const PAD_TOKEN: &str = "[PAD]";
pub const UNK_TOKEN: &str = "[UNK]";
pub const BOS_TOKEN: &str = "[CLS]";
pub const EOS_TOKEN: &str = "[SEP]";

/// Wordpiece vocabulary with BERT-style special tokens.
///
/// The file format is one piece per line, the id being the zero-based line
/// number. `[PAD]`, `[UNK]`, `[CLS]` (start of sequence) and `[SEP]` (end of
/// sequence) must all be present.
#[derive(Clone, Debug)]
pub struct WordpieceVocab {
    pieces: Vec<String>,
    ids: HashMap<String, u32>,
    pub pad: u32,
    pub unk: u32,
    pub bos: u32,
    pub eos: u32,
}

impl WordpieceVocab {
    pub fn from_pieces<S: AsRef<str>>(pieces: &[S]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::config("empty wordpiece vocabulary"));
        }
        let mut ids = HashMap::with_capacity(pieces.len());
        let pieces: Vec<String> = pieces.iter().map(|p| p.as_ref().to_string()).collect();
        for (i, p) in pieces.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::config(format!("vocabulary line {} is empty", i + 1)));
            }
            if ids.insert(p.clone(), i as u32).is_some() {
                return Err(Error::config(format!("duplicate vocabulary piece {p:?}")));
            }
        }
        let special = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| Error::config(format!("vocabulary lacks special token {name}")))
        };
        Ok(WordpieceVocab {
            pad: special(PAD_TOKEN)?,
            unk: special(UNK_TOKEN)?,
            bos: special(BOS_TOKEN)?,
            eos: special(EOS_TOKEN)?,
            pieces,
            ids,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
        Self::from_pieces(&lines)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Special tokens followed by `words`, each as a whole-word piece.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        let mut pieces: Vec<String> = [PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for w in words {
            if !pieces.iter().any(|p| p == w.as_ref()) {
                pieces.push(w.as_ref().to_string());
            }
        }
        Self::from_pieces(&pieces)
    }

    pub fn to_text(&self) -> String {
        let mut s = self.pieces.join("\n");
        s.push('\n');
        s
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.ids.get(piece).copied()
    }

    pub fn piece(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(String::as_str)
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.pad || id == self.bos || id == self.eos
    }

    /// Greedy longest-match-first decomposition of one word.
    fn encode_word(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > MAX_WORD_CHARS {
            out.push(self.unk);
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while end > start {
                let mut cand: String = chars[start..end].iter().collect();
                if start > 0 {
                    cand.insert_str(0, CONTINUATION_PREFIX);
                }
                if let Some(&id) = self.ids.get(&cand) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => {
                    out.push(self.unk);
                    return;
                }
            }
        }
        out.extend(pieces);
    }

    /// Token ids of the normalized text, without start/end markers.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let norm = normalize(text);
        let mut out = Vec::new();
        for word in norm.split_whitespace() {
            self.encode_word(word, &mut out);
        }
        out
    }

    /// Joins pieces back into words; pad, start and end tokens are skipped.
    pub fn decode(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        for &id in ids {
            if self.is_special(id) {
                continue;
            }
            let piece = self.piece(id).unwrap_or(UNK_TOKEN);
            match piece.strip_prefix(CONTINUATION_PREFIX) {
                Some(rest) if !out.is_empty() => out.push_str(rest),
                _ => {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(piece);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> WordpieceVocab {
        WordpieceVocab::from_pieces(&["[PAD]", "[UNK]", "[CLS]", "[SEP]", "play", "##ing", "the", "p", "##l"]).unwrap()
    }

    #[test]
    fn examples() {
        let v = toy();
        assert!(v.encode("").is_empty());
        let play = v.id("play").unwrap();
        let ing = v.id("##ing").unwrap();
        let the = v.id("the").unwrap();
        assert_eq!(v.encode("playing the"), vec![play, ing, the]);
        assert_eq!(v.encode("zebra"), vec![v.unk]);
        // partial cover is still unknown for the whole word
        assert_eq!(v.encode("plx"), vec![v.unk]);
        assert_eq!(v.decode(&[v.bos, play, ing, the, v.eos]), "playing the");
    }

    #[test]
    fn overlong_word_is_unknown() {
        let v = WordpieceVocab::from_pieces(&["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "##a"]).unwrap();
        assert_eq!(v.encode(&"a".repeat(100)).len(), 100);
        assert_eq!(v.encode(&"a".repeat(101)), vec![v.unk]);
    }

    #[test]
    fn configuration_errors() {
        let none: [&str; 0] = [];
        assert!(matches!(WordpieceVocab::from_pieces(&none), Err(Error::Config(_))));
        assert!(WordpieceVocab::from_pieces(&["[PAD]", "[UNK]", "[CLS]"]).is_err());
        assert!(WordpieceVocab::from_pieces(&["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "a"]).is_err());
    }

    #[test]
    fn ids_are_a_bijection() {
        let v = toy();
        for id in 0..v.len() as u32 {
            assert_eq!(v.id(v.piece(id).unwrap()), Some(id));
        }
    }

    proptest! {
        #[test]
        fn in_vocabulary_text_round_trips(idx in proptest::collection::vec(0usize..5, 0..12)) {
            let words = ["play", "playing", "the", "pl", "pling"];
            let v = toy();
            let text = idx.iter().map(|&i| words[i]).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(v.decode(&v.encode(&text)), text);
        }
    }
}
