use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;

use avatar_core::config::ExperimentConfig;
use avatar_core::data::{load_utterances, Featurizer, Utterance};
use avatar_core::manifest::load_manifest;
use avatar_core::model::{import_weights, parse_import_map, Params};
use avatar_core::numerics::{read_checkpoint, Rng};
use avatar_core::text::{Stoplist, WordpieceVocab};
use avatar_core::training::{compute_content_rate, train, MaskPlan, MaskStrategy, TrainSetup};
use avatar_core::Error;

use crate::{echo_config, ConfigArgs};

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Training manifest (JSONL).
    #[arg(long)]
    manifest: PathBuf,
    /// Word-masking strategy; overrides `mask_strategy`.
    #[arg(long)]
    mask: Option<MaskStrategy>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `iterations`.
    #[arg(long)]
    iterations: Option<usize>,
    /// Stopword list for content masking; the built-in list by default.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Output directory for checkpoints, logs, config and vocabulary.
    #[arg(long)]
    out: PathBuf,
}

pub(crate) fn load_stoplist(path: Option<&Path>) -> avatar_core::Result<Stoplist> {
    path.map_or_else(|| Ok(Stoplist::default()), Stoplist::load)
}

/// Whole-word vocabulary over the sorted, distinct transcript words.
fn corpus_vocab(data: &[Utterance]) -> avatar_core::Result<WordpieceVocab> {
    let mut words: Vec<&str> = data.iter().flat_map(|u| u.transcript.words.iter().map(String::as_str)).collect();
    words.sort_unstable();
    words.dedup();
    WordpieceVocab::from_words(&words)
}

fn mask_plan(exp: &ExperimentConfig, data: &[Utterance], stoplist: &Stoplist) -> avatar_core::Result<MaskPlan> {
    Ok(match exp.mask_strategy {
        MaskStrategy::None => MaskPlan::none(),
        MaskStrategy::Random => MaskPlan::random(exp.mask_rate),
        MaskStrategy::Content => {
            let words = data.iter().flat_map(|u| u.transcript.words.iter().map(String::as_str));
            let cr = compute_content_rate(words, stoplist, exp.mask_rate)?;
            MaskPlan::content(exp.mask_rate, cr.rate)
        }
    })
}

fn initial_params(exp: &ExperimentConfig, feat: &Featurizer) -> avatar_core::Result<Params> {
    let mut params = Params::init(&feat.model, &mut Rng::new(exp.seed))?;
    if !exp.init_weights.is_empty() {
        if exp.init_map.is_empty() {
            return Err(Error::config("init_weights needs an init_map"));
        }
        let map = std::fs::read_to_string(&exp.init_map).map_err(|e| Error::io(&exp.init_map, e))?;
        import_weights(&mut params, &read_checkpoint(&exp.init_weights)?, &parse_import_map(&map)?)?;
    }
    Ok(params)
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

pub fn run(a: TrainArgs) -> Result<()> {
    let mut exp = a.config.resolve(None)?;
    if let Some(m) = a.mask {
        exp.mask_strategy = m;
    }
    if let Some(s) = a.seed {
        exp.seed = s;
    }
    if let Some(n) = a.iterations {
        exp.iterations = n;
    }
    exp.validate()?;
    echo_config(&exp);
    std::fs::create_dir_all(&a.out).map_err(io(&a.out))?;
    exp.save(a.out.join("config.txt"))?;

    let manifest = load_manifest(&a.manifest)?;
    let data = load_utterances(&manifest)?;
    if data.is_empty() {
        return Err(Error::input(format!("{}: empty manifest", a.manifest.display())).into());
    }
    let vocab = if exp.vocab.is_empty() { corpus_vocab(&data)? } else { WordpieceVocab::load(&exp.vocab)? };
    let vocab_path = a.out.join("vocab.txt");
    std::fs::write(&vocab_path, vocab.to_text()).map_err(io(&vocab_path))?;
    let stoplist = load_stoplist(a.stoplist.as_deref())?;
    let featurizer = Featurizer::new(&exp, vocab)?;
    let plan = mask_plan(&exp, &data, &stoplist)?;
    let setup = TrainSetup {
        exp: &exp,
        featurizer: &featurizer,
        plan,
        stoplist: &stoplist,
        data: &data,
    };
    let params = initial_params(&exp, &featurizer)?;
    let log_path = a.out.join("loss.log");
    let mut log = BufWriter::new(File::create(&log_path).map_err(io(&log_path))?);
    let params = train(&setup, params, |entry, p| {
        writeln!(log, "{}", entry.line()).map_err(io(&log_path))?;
        let done = entry.iter + 1;
        if exp.checkpoint_every > 0 && done % exp.checkpoint_every == 0 && done < exp.iterations {
            p.save(a.out.join(format!("step-{done:07}.ckpt")))?;
        }
        if entry.iter % 50 == 0 {
            log::info!("{}", entry.line());
        }
        Ok(())
    })?;
    log.flush().map_err(io(&log_path))?;
    params.save(a.out.join("model.ckpt"))?;
    eprintln!("wrote {}", a.out.join("model.ckpt").display());
    Ok(())
}
