use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Result;
use clap::{Args, ValueEnum};

use avatar_core::audio::{load_noise_bank, NoiseKind, NoiseSpec};
use avatar_core::data::{load_utterances, Featurizer};
use avatar_core::evaluation::{evaluate, EvalSetup, EvalSummary, InsertionSlice, VisualMode};
use avatar_core::manifest::load_manifest;
use avatar_core::model::Params;
use avatar_core::text::WordpieceVocab;
use avatar_core::Error;

use crate::train::load_stoplist;
use crate::{echo_config, ConfigArgs};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Insertions {
    /// Attribute insertions to the slice of the inserted word.
    Hypothesis,
    /// Count insertions in the total only.
    TotalOnly,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Trained parameters. `config.txt` and `vocab.txt` next to it are used
    /// unless `--config`/`--preset` and `--vocab` are given.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "clean")]
    noise: NoiseKind,
    /// Directory of noise WAV files for environment and mixed noise.
    #[arg(long)]
    noise_bank: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value = "real")]
    visual: VisualMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stoplist: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Insertions::Hypothesis)]
    insertions: Insertions,
    /// Output directory for `summary.json` and `utterances.jsonl`.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: EvalArgs) -> Result<()> {
    let dir = a.checkpoint.parent().map(PathBuf::from).unwrap_or_default();
    let exp = a.config.resolve(Some(&dir.join("config.txt")))?;
    exp.validate()?;
    echo_config(&exp);
    eprintln!("# noise = {}, snr_db = {}, visual = {}, seed = {}", a.noise, a.snr_db, a.visual, a.seed);
    let noise_bank = match (&a.noise_bank, a.noise.needs_bank()) {
        (Some(p), true) => load_noise_bank(p)?,
        (None, true) => {
            return Err(Error::config(format!("--noise {} needs --noise-bank DIR with noise WAV files", a.noise)).into())
        }
        _ => Vec::new(),
    };
    let vocab = WordpieceVocab::load(a.vocab.clone().unwrap_or_else(|| dir.join("vocab.txt")))?;
    let featurizer = Featurizer::new(&exp, vocab)?;
    let params = Params::load(&a.checkpoint, &featurizer.model)?;
    let data = load_utterances(&load_manifest(&a.manifest)?)?;
    if data.is_empty() {
        return Err(Error::input(format!("{}: empty manifest", a.manifest.display())).into());
    }
    let stoplist = load_stoplist(a.stoplist.as_deref())?;
    let setup = EvalSetup {
        featurizer: &featurizer,
        params: &params,
        beam: exp.beam(vec![featurizer.vocab.pad, featurizer.vocab.bos]),
        noise: NoiseSpec {
            kind: a.noise,
            noise_bank: Arc::new(noise_bank),
            snr_db: a.snr_db,
            seed: a.seed,
        },
        visual: a.visual,
        seed: a.seed,
        stoplist: &stoplist,
        insertions: match a.insertions {
            Insertions::Hypothesis => InsertionSlice::Hypothesis,
            Insertions::TotalOnly => InsertionSlice::TotalOnly,
        },
    };
    let out = evaluate(&setup, &data)?;
    let summary = EvalSummary::new(&out, &exp.mask_strategy.to_string(), exp.audio_only, a.noise, a.snr_db, a.visual, a.seed);

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let summary_path = a.out.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n").map_err(|e| Error::io(&summary_path, e))?;
    let rec_path = a.out.join("utterances.jsonl");
    let mut w = BufWriter::new(File::create(&rec_path).map_err(|e| Error::io(&rec_path, e))?);
    for r in &out.records {
        writeln!(w, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(&rec_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&rec_path, e))?;
    exp.save(a.out.join("config.txt"))?;

    let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}%"));
    println!(
        "WER {} (content {}, stop {}) over {} utterances",
        pct(summary.wer_total),
        pct(summary.wer_content),
        pct(summary.wer_stop),
        summary.n_utterances
    );
    Ok(())
}
