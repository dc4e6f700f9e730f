use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;

use avatar_core::curation::{
    apply_corrections, curate_video, load_corrections, rank_candidates, EnergyVad, KeywordScorer, SegmentRecord,
    Thresholds, VideoInput,
};
use avatar_core::Error;

use crate::train::load_stoplist;

#[derive(Args, Debug)]
pub struct CurateArgs {
    /// Directory with one sub-directory per video (`user.txt`, `asr.txt`,
    /// `audio.wav`, optional `keywords.txt`).
    #[arg(long)]
    videos: PathBuf,
    /// Output directory for `segments.jsonl` and `review_topk.jsonl`.
    #[arg(long)]
    out: PathBuf,
    /// Videos whose WER exceeds this percentage are dropped.
    #[arg(long, default_value_t = 100.0)]
    video_wer: f64,
    /// Segments whose WER exceeds this percentage are dropped.
    #[arg(long, default_value_t = 50.0)]
    segment_wer: f64,
    /// Segments whose content-word WER is below this percentage are dropped.
    #[arg(long, default_value_t = 20.0)]
    nonstop_wer: f64,
    /// Segments with fewer caption words are dropped.
    #[arg(long, default_value_t = 9)]
    min_words: usize,
    /// Frame RMS below which audio counts as silence.
    #[arg(long, default_value_t = 0.02)]
    vad_threshold: f64,
    /// Silence length in seconds that ends a segment.
    #[arg(long, default_value_t = 0.3)]
    min_silence: f64,
    #[arg(long, default_value_t = 50)]
    top_k: usize,
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Reviewed captions (JSONL) applied to the records before writing.
    #[arg(long)]
    corrections: Option<PathBuf>,
}

fn video_dirs(root: &Path) -> avatar_core::Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let p = entry.map_err(|e| Error::io(root, e))?.path();
        if p.is_dir() {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn write_jsonl(path: &Path, records: &[SegmentRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn run(a: CurateArgs) -> Result<()> {
    let thr = Thresholds {
        video_wer: a.video_wer,
        segment_wer: a.segment_wer,
        nonstop_wer: a.nonstop_wer,
        min_words: a.min_words,
    };
    let vad = EnergyVad {
        threshold_rms: a.vad_threshold,
        min_silence_s: a.min_silence,
        ..EnergyVad::default()
    };
    eprintln!("# thresholds = {thr:?}\n# vad = {vad:?}\n# top_k = {}", a.top_k);
    let stoplist = load_stoplist(a.stoplist.as_deref())?;
    let videos: Vec<VideoInput> = video_dirs(&a.videos)?
        .par_iter()
        .map(|d| VideoInput::load(d))
        .collect::<avatar_core::Result<_>>()?;
    let mut scorer = KeywordScorer {
        stoplist: stoplist.clone(),
        ..KeywordScorer::default()
    };
    for v in &videos {
        if let Some(k) = &v.keywords {
            scorer.add_file(&v.id, k)?;
        }
    }
    let per_video: Vec<Vec<SegmentRecord>> =
        videos.par_iter().map(|v| curate_video(v, &vad, &scorer, &stoplist, &thr)).collect();
    let mut records: Vec<SegmentRecord> = per_video.into_iter().flatten().collect();
    if let Some(p) = &a.corrections {
        apply_corrections(&mut records, &load_corrections(p)?)?;
    }
    let review = rank_candidates(&records, a.top_k);

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_jsonl(&a.out.join("segments.jsonl"), &records)?;
    write_jsonl(&a.out.join("review_topk.jsonl"), &review)?;
    let kept = records.iter().filter(|r| r.verdict.is_kept()).count();
    println!("{} videos, {} segments, {} kept, {} for review", videos.len(), records.len(), kept, review.len());
    Ok(())
}
