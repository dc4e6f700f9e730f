use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Result;
use clap::Args;

use avatar_core::audio::{degrade as degrade_wave, load_audio, load_noise_bank, write_wav, NoiseKind, NoiseSpec};
use avatar_core::evaluation::{corpus_wer, table_report, EvalSummary, InsertionSlice};
use avatar_core::synth::{write_corpus, SynthSpec};
use avatar_core::text::Transcript;
use avatar_core::Error;

use crate::train::load_stoplist;

#[derive(Args, Debug)]
pub struct DegradeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    noise: NoiseKind,
    #[arg(long)]
    noise_bank: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn degrade(a: DegradeArgs) -> Result<()> {
    let bank = match (&a.noise_bank, a.noise.needs_bank()) {
        (Some(p), true) => load_noise_bank(p)?,
        (None, true) => {
            return Err(Error::config(format!("--noise {} needs --noise-bank DIR with noise WAV files", a.noise)).into())
        }
        _ => Vec::new(),
    };
    let spec = NoiseSpec {
        kind: a.noise,
        noise_bank: Arc::new(bank),
        snr_db: a.snr_db,
        seed: a.seed,
    };
    let (wave, trace) = degrade_wave(&load_audio(&a.input)?, &spec)?;
    write_wav(&a.out, &wave)?;
    println!("{}", serde_json::to_string(&trace)?);
    Ok(())
}

#[derive(Args, Debug)]
pub struct WerArgs {
    /// Reference transcripts, one utterance per line.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Hypothesis transcripts, line-aligned with the reference.
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long)]
    stoplist: Option<PathBuf>,
}

fn read_lines(path: &PathBuf) -> avatar_core::Result<Vec<Transcript>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(Transcript::new).collect())
}

pub fn wer(a: WerArgs) -> Result<()> {
    let refs = read_lines(&a.reference)?;
    let hyps = read_lines(&a.hyp)?;
    if refs.len() != hyps.len() {
        return Err(Error::input(format!(
            "{} has {} lines but {} has {}",
            a.reference.display(),
            refs.len(),
            a.hyp.display(),
            hyps.len()
        ))
        .into());
    }
    if let Some(i) = refs.iter().position(Transcript::is_empty) {
        return Err(Error::input(format!("{}:{}: empty reference", a.reference.display(), i + 1)).into());
    }
    let stoplist = load_stoplist(a.stoplist.as_deref())?;
    let b = corpus_wer(&refs, &hyps, &stoplist, InsertionSlice::Hypothesis)?;
    let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}%"));
    println!("WER {}", pct(b.wer_total()));
    println!(
        "content {} stop {} (sub {} del {} ins {} over {} words)",
        pct(b.wer_content()),
        pct(b.wer_stop()),
        b.total.sub,
        b.total.del,
        b.total.ins,
        b.total.n_ref_words
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    utterances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side of the generated video frames in pixels.
    #[arg(long, default_value_t = 48)]
    frame_size: usize,
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        utterances: a.utterances,
        seed: a.seed,
        frame_size: a.frame_size,
        ..SynthSpec::default()
    };
    let entries = write_corpus(&a.out, &spec)?;
    println!("wrote {} utterances to {}", entries.len(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// `summary.json` files written by `evaluate`.
    #[arg(required = true)]
    summaries: Vec<PathBuf>,
}

pub fn report(a: ReportArgs) -> Result<()> {
    let mut runs = Vec::new();
    for p in &a.summaries {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let s: EvalSummary = serde_json::from_str(&text)
            .map_err(|e| Error::input(format!("{}: {e}", p.display())))?;
        runs.push(s);
    }
    print!("{}", table_report(&runs));
    Ok(())
}
