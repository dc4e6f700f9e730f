use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, Waveform};
use crate::curation::filter::{segment_filter, video_gate, FilterInput, Thresholds, Verdict};
use crate::curation::scorer::Scorer;
use crate::curation::vad::Vad;
use crate::error::{Error, Result};
use crate::text::{align_words, normalize, AlignStep, AlignedWord, Stoplist, Transcript};

/// ASR words, timed when `asr.txt` carries `word start end` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedWords {
    pub words: Vec<AlignedWord>,
    pub timed: bool,
}

impl TimedWords {
    /// Every non-empty line `word start end` gives a timed list; anything
    /// else is read as plain text.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> =
            text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)).collect();
        let columns = |l: &str| {
            let f: Vec<&str> = l.split_whitespace().collect();
            f.len() == 3 && f[1].parse::<f64>().is_ok() && f[2].parse::<f64>().is_ok()
        };
        if lines.is_empty() || !lines.iter().all(|(_, l)| columns(l)) {
            let words = Transcript::new(text)
                .words
                .into_iter()
                .map(|word| AlignedWord {
                    word,
                    start_s: 0.0,
                    end_s: 0.0,
                })
                .collect();
            return Ok(TimedWords { words, timed: false });
        }
        let mut words = Vec::new();
        let mut last_start = f64::NEG_INFINITY;
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            let (start_s, end_s): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
            if !(start_s.is_finite() && end_s.is_finite() && start_s >= 0.0 && end_s >= start_s && start_s >= last_start) {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line,
                    msg: format!("bad word timing {start_s} {end_s}"),
                });
            }
            last_start = start_s;
            for word in normalize(f[0]).split_whitespace() {
                words.push(AlignedWord {
                    word: word.to_string(),
                    start_s,
                    end_s,
                });
            }
        }
        Ok(TimedWords { words, timed: true })
    }

    pub fn transcript(&self) -> Transcript {
        Transcript::from_words(&self.words.iter().map(|w| w.word.as_str()).collect::<Vec<_>>())
    }
}

/// One video directory: `user.txt`, `asr.txt`, `audio.wav` and optionally
/// `keywords.txt`.
#[derive(Clone, Debug)]
pub struct VideoInput {
    pub id: String,
    pub user: Transcript,
    pub asr: TimedWords,
    pub audio: Waveform,
    pub keywords: Option<PathBuf>,
}

impl VideoInput {
    pub fn load(dir: &Path) -> Result<Self> {
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| Error::input(format!("{}: not a video directory", dir.display())))?;
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
        };
        let asr_path = dir.join("asr.txt");
        let keywords = dir.join("keywords.txt");
        Ok(VideoInput {
            user: Transcript::new(&read("user.txt")?),
            asr: TimedWords::parse(&read("asr.txt")?, &asr_path.display().to_string())?,
            audio: read_wav(dir.join("audio.wav"))?,
            keywords: keywords.exists().then_some(keywords),
            id,
        })
    }
}

/// One curated segment. Percentages are `None` when the reference is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub video_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub user_transcript: String,
    pub asr_transcript: String,
    pub wer_user_vs_asr: Option<f64>,
    pub wer_nonstop: Option<f64>,
    pub n_words: usize,
    pub similarity: Option<f64>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Splits both transcripts over `spans`.
///
/// Each ASR word goes to the span it overlaps most (none if it overlaps
/// nothing). Caption words are aligned to the ASR words and inherit the span
/// of their partner; unpaired caption words take the span of the nearest
/// preceding paired word, or the following one at the start.
pub fn split_words(user: &Transcript, asr: &TimedWords, spans: &[(f64, f64)]) -> Vec<(Transcript, Transcript)> {
    let asr_span: Vec<Option<usize>> = asr
        .words
        .iter()
        .map(|w| {
            let mut best: Option<(usize, f64)> = None;
            for (i, &s) in spans.iter().enumerate() {
                let o = overlap((w.start_s, w.end_s), s);
                let inside = w.start_s == w.end_s && s.0 <= w.start_s && w.start_s <= s.1;
                if (o > 0.0 || inside) && best.map_or(true, |(_, b)| o > b) {
                    best = Some((i, o));
                }
            }
            best.map(|(i, _)| i)
        })
        .collect();
    let asr_words: Vec<&str> = asr.words.iter().map(|w| w.word.as_str()).collect();
    let user_words: Vec<&str> = user.words.iter().map(String::as_str).collect();
    let mut user_span: Vec<Option<usize>> = vec![None; user_words.len()];
    for step in align_words(&user_words, &asr_words).steps {
        if let AlignStep::Match { r, h } | AlignStep::Substitution { r, h } = step {
            user_span[r] = asr_span[h];
        }
    }
    let mut prev = None;
    let mut filled = user_span.clone();
    for s in filled.iter_mut() {
        match s {
            Some(_) => prev = *s,
            None => *s = prev,
        }
    }
    let mut next = None;
    for (s, orig) in filled.iter_mut().zip(&user_span).rev() {
        if orig.is_some() {
            next = *orig;
        } else if s.is_none() {
            *s = next;
        }
    }
    (0..spans.len())
        .map(|i| {
            let u: Vec<&str> = user_words.iter().zip(&filled).filter(|(_, s)| **s == Some(i)).map(|(w, _)| *w).collect();
            let a: Vec<&str> = asr_words.iter().zip(&asr_span).filter(|(_, s)| **s == Some(i)).map(|(w, _)| *w).collect();
            (Transcript::from_words(&u), Transcript::from_words(&a))
        })
        .collect()
}

fn record(video_id: &str, span: (f64, f64), user: &Transcript, asr: &Transcript, m: &FilterInput, verdict: Verdict) -> SegmentRecord {
    let pct = |e: usize, n: usize| (n > 0).then(|| 100.0 * e as f64 / n as f64);
    SegmentRecord {
        video_id: video_id.to_string(),
        start_s: span.0,
        end_s: span.1,
        user_transcript: user.text(),
        asr_transcript: asr.text(),
        wer_user_vs_asr: pct(m.errors, m.n_words),
        wer_nonstop: pct(m.content_errors, m.n_content_words),
        n_words: m.n_words,
        similarity: None,
        verdict,
    }
}

/// Runs the video gate, then segments and filters. A rejected video yields a
/// single record covering the whole clip. Without word timings the whole clip
/// is one segment. Kept segments are scored.
pub fn curate_video(
    v: &VideoInput,
    vad: &dyn Vad,
    scorer: &dyn Scorer,
    stoplist: &Stoplist,
    thr: &Thresholds,
) -> Vec<SegmentRecord> {
    let asr = v.asr.transcript();
    let whole = (0.0, v.audio.duration_s().max(v.asr.words.last().map_or(0.0, |w| w.end_s)));
    let gate = video_gate(&v.user, &asr, thr);
    if !gate.is_kept() {
        let m = FilterInput::measure(&v.user, &asr, &Stoplist::parse(""));
        return vec![record(&v.id, whole, &v.user, &asr, &m, gate)];
    }
    let spans = if v.asr.timed { vad.segments(&v.audio) } else { vec![whole] };
    split_words(&v.user, &v.asr, &spans)
        .into_iter()
        .zip(spans)
        .filter(|((u, a), _)| !(u.is_empty() && a.is_empty()))
        .map(|((u, a), span)| {
            let m = FilterInput::measure(&u, &a, stoplist);
            let verdict = segment_filter(&m, thr);
            let mut r = record(&v.id, span, &u, &a, &m, verdict);
            if verdict.is_kept() {
                r.similarity = Some(scorer.score(&v.id, &u));
            }
            r
        })
        .collect()
}

/// Kept records by similarity, descending, ties by `(video_id, start_s)`.
pub fn rank_candidates(records: &[SegmentRecord], top_k: usize) -> Vec<SegmentRecord> {
    let mut kept: Vec<&SegmentRecord> = records.iter().filter(|r| r.verdict.is_kept()).collect();
    kept.sort_by(|a, b| {
        let (sa, sb) = (a.similarity.unwrap_or(f64::NEG_INFINITY), b.similarity.unwrap_or(f64::NEG_INFINITY));
        sb.partial_cmp(&sa)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.video_id.cmp(&b.video_id))
            .then_with(|| a.start_s.total_cmp(&b.start_s))
    });
    kept.into_iter().take(top_k).cloned().collect()
}

/// A reviewed caption for one segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correction {
    pub video_id: String,
    pub start_s: f64,
    pub user_transcript: String,
}

pub fn load_corrections(path: &Path) -> Result<Vec<Correction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Replaces caption text of the matching segments. Every correction must
/// match a record.
pub fn apply_corrections(records: &mut [SegmentRecord], corrections: &[Correction]) -> Result<()> {
    for c in corrections {
        let r = records
            .iter_mut()
            .find(|r| r.video_id == c.video_id && (r.start_s - c.start_s).abs() < 1e-6)
            .ok_or_else(|| Error::input(format!("correction for unknown segment {} @ {}", c.video_id, c.start_s)))?;
        r.user_transcript = Transcript::new(&c.user_transcript).text();
    }
    Ok(())
}
