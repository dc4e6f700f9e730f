//! The `avatar` command line.
//!
//! [`run`] parses arguments, executes one subcommand on a rayon pool of
//! `--workers` threads and maps failures to exit codes: 1 for bad input or
//! configuration, 2 for internal errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod curate;
mod evaluate;
mod tools;
mod train;

#[derive(Parser, Debug)]
#[command(name = "avatar", version, about = "Audio-visual speech recognition experiments")]
struct Cli {
    /// Worker threads; 0 uses one per core. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on a manifest.
    Train(train::TrainArgs),
    /// Transcribe a manifest under a noise condition and score it.
    Evaluate(evaluate::EvalArgs),
    /// Write a degraded copy of one WAV file.
    Degrade(tools::DegradeArgs),
    /// Filter and rank segments of captioned videos.
    Curate(curate::CurateArgs),
    /// Score hypothesis lines against reference lines.
    Wer(tools::WerArgs),
    /// Write a small synthetic corpus with frames and a noise bank.
    Synth(tools::SynthArgs),
    /// Tabulate evaluation summaries.
    Report(tools::ReportArgs),
}

/// Experiment configuration sources shared by `train` and `evaluate`.
#[derive(Args, Debug, Clone)]
pub(crate) struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset used when no config file is given.
    #[arg(long)]
    preset: Option<String>,
    /// Override one config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    pub(crate) fn resolve(&self, fallback: Option<&std::path::Path>) -> avatar_core::Result<avatar_core::config::ExperimentConfig> {
        use avatar_core::config::ExperimentConfig;
        let mut exp = match (&self.config, fallback) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(p)) if self.preset.is_none() => ExperimentConfig::load(p)?,
            _ => ExperimentConfig::preset(self.preset.as_deref().unwrap_or("paper"))?,
        };
        if let (Some(_), Some(name)) = (&self.config, &self.preset) {
            return Err(avatar_core::Error::config(format!(
                "--preset {name} conflicts with --config; put `preset = {name}` in the file"
            )));
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| avatar_core::Error::config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            exp.set(k.trim(), v.trim())?;
        }
        Ok(exp)
    }
}

/// Prints the resolved configuration to stderr.
pub(crate) fn echo_config(exp: &avatar_core::config::ExperimentConfig) {
    eprintln!("# resolved configuration");
    eprint!("{}", exp.to_text());
}

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<avatar_core::Error>() {
        Some(e) if e.is_user_error() => 1,
        Some(_) => 2,
        None => 2,
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} workers: {e}", cli.workers);
            return 2;
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Train(a) => train::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Degrade(a) => tools::degrade(a),
        Command::Curate(a) => curate::run(a),
        Command::Wer(a) => tools::wer(a),
        Command::Synth(a) => tools::synth(a),
        Command::Report(a) => tools::report(a),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
