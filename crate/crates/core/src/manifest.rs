//! JSONL manifests: one utterance per line.
//!
//! ```text
//! {"id":"u0","audio_path":"u0.wav","frames_path":"u0.frames","transcript":"the red fox",
//!  "alignment":[{"word":"the","start_s":0.1,"end_s":0.3},...],"duration_s":1.5}
//! ```
//!
//! Relative paths resolve against the manifest's directory. `frames_path`
//! and `alignment` may be omitted.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{AlignedWord, Transcript, WordAlignment};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub audio_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames_path: Option<PathBuf>,
    pub transcript: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<Vec<AlignedWord>>,
    pub duration_s: f64,
}

impl ManifestEntry {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::input("empty id"));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::input(format!("duration_s {} must be positive", self.duration_s)));
        }
        if let Some(al) = &self.alignment {
            let words = Transcript::new(&self.transcript).words;
            let aligned: Vec<&str> = al.iter().map(|w| w.word.as_str()).collect();
            if aligned != words {
                return Err(Error::input(format!(
                    "alignment words {aligned:?} differ from transcript words {words:?}"
                )));
            }
            self.word_alignment().unwrap_or_default().validate(Some(self.duration_s))?;
        }
        Ok(())
    }

    pub fn word_alignment(&self) -> Option<WordAlignment> {
        self.alignment.clone().map(|entries| WordAlignment { entries })
    }
}

/// A loaded manifest with the directory its relative paths refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_manifest(text: &str, path: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_string(),
            line: i + 1,
            msg,
        };
        let e: ManifestEntry = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        e.validate().map_err(|e| err(e.to_string()))?;
        out.push(e);
    }
    Ok(out)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries = parse_manifest(&text, &path.display().to_string())?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { base_dir, entries })
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e).map_err(|e| Error::input(e.to_string()))?;
        buf.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry() -> ManifestEntry {
        ManifestEntry {
            id: "a1".into(),
            audio_path: "a1.wav".into(),
            frames_path: Some("a1.frames".into()),
            transcript: "Hello, World".into(),
            alignment: Some(vec![
                AlignedWord {
                    word: "hello".into(),
                    start_s: 0.1,
                    end_s: 0.4,
                },
                AlignedWord {
                    word: "world".into(),
                    start_s: 0.5,
                    end_s: 0.9000000000000001,
                },
            ]),
            duration_s: 1.25,
        }
    }

    #[test]
    fn empty_file_is_empty_manifest() {
        assert!(parse_manifest("", "m").unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        let minimal = ManifestEntry {
            frames_path: None,
            alignment: None,
            ..entry()
        };
        write_manifest(&p, &[entry(), minimal.clone()]).unwrap();
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.entries, vec![entry(), minimal]);
        assert_eq!(m.resolve(Path::new("x.wav")), dir.path().join("x.wav"));
    }

    #[test]
    fn mismatched_alignment_names_the_line() {
        let mut bad = entry();
        bad.transcript = "hello there".into();
        let text = format!(
            "{}\n{}\n",
            serde_json::to_string(&entry()).unwrap(),
            serde_json::to_string(&bad).unwrap()
        );
        match parse_manifest(&text, "m.jsonl") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_and_missing_fields() {
        assert!(matches!(parse_manifest("{not json", "m"), Err(Error::Parse { line: 1, .. })));
        let missing = r#"{"id":"x","audio_path":"x.wav","duration_s":1.0}"#;
        assert!(matches!(parse_manifest(missing, "m"), Err(Error::Parse { line: 1, .. })));
    }
}
