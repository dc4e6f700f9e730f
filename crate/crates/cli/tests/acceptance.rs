//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use avatar_core::audio::{degrade, write_wav, NoiseKind, NoiseSpec, Waveform};
use avatar_core::config::ExperimentConfig;
use avatar_core::data::{Featurizer, Visual};
use avatar_core::evaluation::{corpus_wer, rel_delta, InsertionSlice};
use avatar_core::model::{beam_search, decode_step, length_penalty, loss_and_grads, example_loss, BeamConfig, Example, ModelConfig, Params};
use avatar_core::numerics::{Rng, Tape, Tensor, Var};
use avatar_core::text::{AlignedWord, Stoplist, Transcript, WordAlignment, WordpieceVocab};
use avatar_core::training::{compute_content_rate, select_mask_targets, MaskPlan};
use avatar_core::video::{tubelet_tokenize, write_raw_clip, Clip, FrameStack, Image};
use statrs::distribution::{ContinuousCDF, Uniform};

// ---------------------------------------------------------------- helpers

fn avatar(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_avatar")).args(args).output().expect("spawn avatar");
    assert!(
        out.status.success(),
        "avatar {args:?} exited with {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Synthetic corpus plus the tiny model trained on it, shared by several criteria.
struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn corpus(&self) -> PathBuf {
        self.root.join("corpus")
    }
    fn manifest(&self) -> PathBuf {
        self.corpus().join("manifest.jsonl")
    }
    fn noise(&self) -> PathBuf {
        self.corpus().join("noise")
    }
    fn run(&self) -> PathBuf {
        self.root.join("run")
    }
    fn checkpoint(&self) -> PathBuf {
        self.run().join("model.ckpt")
    }
}

fn workspace() -> &'static Workspace {
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let ws = Workspace { _dir: dir, root };
        avatar(&["synth", "--out", s(&ws.corpus()), "--seed", "0"]);
        avatar(&[
            "--workers", "1", "train", "--preset", "tiny", "--manifest", s(&ws.manifest()), "--seed", "0", "--out", s(&ws.run()),
        ]);
        ws
    })
}

fn evaluate(ws: &Workspace, checkpoint: &Path, manifest: &Path, noise: &str, visual: &str, out: &Path, workers: &str) -> serde_json::Value {
    avatar(&[
        "--workers", workers, "evaluate", "--checkpoint", s(checkpoint), "--manifest", s(manifest), "--noise", noise,
        "--noise-bank", s(&ws.noise()), "--visual", visual, "--seed", "3", "--out", s(out),
    ]);
    json(&out.join("summary.json"))
}

fn wsum<'t>(tape: &'t Tape, v: Var<'t>, seed: u64) -> avatar_core::Result<Var<'t>> {
    let w = Tensor::randn(&v.shape(), 1.0, &mut Rng::new(seed));
    Ok(v.mul(&tape.constant(w))?.sum())
}

/// Largest relative error between tape gradients and central differences.
fn fd_error<F>(inputs: &[Tensor], f: F) -> f64
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> avatar_core::Result<Var<'t>>,
{
    let tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = f(&tape, &vars).unwrap();
    tape.backward(loss).unwrap();
    let value = |ins: &[Tensor]| {
        let tp = Tape::new();
        let vs: Vec<Var> = ins.iter().map(|t| tp.leaf(t.clone())).collect();
        f(&tp, &vs).unwrap().value().item()
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let g = tape.grad(*v).unwrap_or_else(|| Tensor::zeros(inputs[i].shape()));
        for j in 0..inputs[i].numel() {
            let mut up = inputs.to_vec();
            up[i].data_mut()[j] += h;
            let mut down = inputs.to_vec();
            down[i].data_mut()[j] -= h;
            let fd = (value(&up) - value(&down)) / (2.0 * h);
            let a = g.data()[j];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6));
        }
    }
    worst
}

fn randn(shape: &[usize], seed: u64) -> Tensor {
    Tensor::randn(shape, 1.0, &mut Rng::new(seed))
}

fn random_params(cfg: &ModelConfig, seed: u64, std: f64) -> Params {
    let mut rng = Rng::new(seed);
    let mut p = Params::init(cfg, &mut rng).unwrap();
    for t in p.tensors.values_mut() {
        let shape = t.shape().to_vec();
        *t = Tensor::randn(&shape, std, &mut rng);
    }
    p
}

/// Plain dynamic-programming word edit distance.
fn edit_distance(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

// ---------------------------------------------------------------- criteria

fn token_counts() {
    let exp = ExperimentConfig::preset("paper").unwrap();
    let feat = Featurizer::new(&exp, WordpieceVocab::from_words(&["x"]).unwrap()).unwrap();
    let samples: Vec<f64> = (0..25 * 16_000).map(|i| 0.3 * (i as f64 * 0.05).sin()).collect();
    let audio = feat.audio_tokens(&Waveform::from_samples(samples), None).unwrap();
    assert_eq!(audio.shape(), &[780, 256]);

    let stack = FrameStack::constant(224, 0.5).unwrap();
    assert_eq!(tubelet_tokenize(&stack).unwrap().shape(), &[196, 16 * 16 * 2 * 3]);
    let clip = Clip {
        frames: (0..10).map(|i| Image::filled(320, 240, [0.1 * i as f64, 0.2, 0.3])).collect(),
        fps: 10.0,
    };
    let video = feat.video_tokens(Visual::Clip(&clip), &mut Rng::new(1), false).unwrap().unwrap();
    assert_eq!(video.shape()[0], 196);
}

fn gradients() {
    let ops: Vec<(&str, f64)> = vec![
        ("matmul", fd_error(&[randn(&[3, 4], 1), randn(&[4, 2], 2)], |t, v| wsum(t, v[0].matmul(&v[1])?, 9))),
        ("add", fd_error(&[randn(&[3, 4], 1), randn(&[3, 4], 2)], |t, v| wsum(t, v[0].add(&v[1])?, 9))),
        ("sub", fd_error(&[randn(&[3, 4], 1), randn(&[3, 4], 2)], |t, v| wsum(t, v[0].sub(&v[1])?, 9))),
        ("mul", fd_error(&[randn(&[3, 4], 1), randn(&[3, 4], 2)], |t, v| wsum(t, v[0].mul(&v[1])?, 9))),
        ("add_row", fd_error(&[randn(&[3, 4], 1), randn(&[4], 2)], |t, v| wsum(t, v[0].add_row(&v[1])?, 9))),
        ("scale", fd_error(&[randn(&[3, 4], 1)], |t, v| wsum(t, v[0].scale(-1.7), 9))),
        ("transpose", fd_error(&[randn(&[3, 4], 1)], |t, v| wsum(t, v[0].transpose()?, 9))),
        ("reshape", fd_error(&[randn(&[3, 4], 1)], |t, v| wsum(t, v[0].reshape(&[2, 6])?, 9))),
        ("slice_cols", fd_error(&[randn(&[3, 5], 1)], |t, v| wsum(t, v[0].slice_cols(1, 3)?, 9))),
        ("slice_rows", fd_error(&[randn(&[5, 3], 1)], |t, v| wsum(t, v[0].slice_rows(2, 2)?, 9))),
        ("concat_cols", fd_error(&[randn(&[3, 2], 1), randn(&[3, 4], 2)], |t, v| wsum(t, t.concat_cols(&[v[0], v[1]])?, 9))),
        ("concat_rows", fd_error(&[randn(&[2, 3], 1), randn(&[4, 3], 2)], |t, v| wsum(t, t.concat_rows(&[v[0], v[1]])?, 9))),
        ("gather", fd_error(&[randn(&[5, 3], 1)], |t, v| wsum(t, t.gather(v[0], &[0, 2, 2, 4])?, 9))),
        ("softmax rows", fd_error(&[randn(&[3, 4], 1)], |t, v| wsum(t, v[0].softmax(1)?, 9))),
        ("softmax cols", fd_error(&[randn(&[3, 4], 1)], |t, v| wsum(t, v[0].softmax(0)?, 9))),
        ("log_softmax", fd_error(&[randn(&[3, 4], 1)], |t, v| wsum(t, v[0].log_softmax(1)?, 9))),
        ("layer_norm", fd_error(&[randn(&[3, 4], 1), randn(&[4], 2), randn(&[4], 3)], |t, v| {
            wsum(t, v[0].layer_norm(&v[1], &v[2], 1e-6)?, 9)
        })),
        ("gelu", fd_error(&[randn(&[3, 4], 1)], |t, v| wsum(t, v[0].gelu(), 9))),
        ("pick", fd_error(&[randn(&[3, 4], 1)], |t, v| wsum(t, v[0].pick(&[1, 0, 3])?, 9))),
        ("sum", fd_error(&[randn(&[3, 4], 1)], |_, v| Ok(v[0].sum()))),
        ("mean", fd_error(&[randn(&[3, 4], 1)], |_, v| Ok(v[0].mean()))),
    ];
    for (name, err) in &ops {
        assert!(*err <= 1e-4, "{name}: relative error {err:e}");
    }

    // Full tiny-preset model. Every tensor is checked on a seeded sample of
    // up to 48 coordinates; central differences on all ~40k values would
    // exceed the time budget.
    let cfg = ExperimentConfig::tiny().model_config(11, 2, 3).unwrap();
    let p = random_params(&cfg, 20, 0.3);
    let ex = Example {
        audio: randn(&[cfg.audio_tokens, cfg.audio_patch_dim()], 21),
        video: Some(randn(&[cfg.video_tokens, cfg.video_patch_dim()], 22)),
        target: vec![4, 7, 9, 3],
    };
    let (_, grads) = loss_and_grads(&p, &cfg, &ex).unwrap();
    let mut rng = Rng::new(23);
    let h = 1e-5;
    let mut q = p.clone();
    let mut worst: f64 = 0.0;
    for (name, g) in &grads {
        let n = g.numel();
        let picks: Vec<usize> = if n <= 48 { (0..n).collect() } else { (0..48).map(|_| rng.below(n)).collect() };
        for i in picks {
            let orig = q.tensors[name].data()[i];
            q.get_mut(name).unwrap().data_mut()[i] = orig + h;
            let up = example_loss(&q, &cfg, &ex).unwrap();
            q.get_mut(name).unwrap().data_mut()[i] = orig - h;
            let down = example_loss(&q, &cfg, &ex).unwrap();
            q.get_mut(name).unwrap().data_mut()[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = g.data()[i];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6));
        }
    }
    assert!(worst <= 1e-3, "full model relative error {worst:e}");
}

fn beam_oracle() {
    let base = ExperimentConfig::tiny().model_config(5, 2, 3).unwrap();
    let cfg = ModelConfig {
        max_target_len: 3,
        audio_only: true,
        ..base
    };
    let beam = BeamConfig {
        beam_size: 125,
        alpha: 0.6,
        suppress: vec![],
    };
    for seed in 0..100 {
        let p = random_params(&cfg, seed, 0.5);
        let enc = randn(&[cfg.encoder_len(), cfg.d_model], 10_000 + seed);
        // every EOS-terminated sequence up to the length cap, scored directly
        let mut best: Option<(f64, Vec<u32>)> = None;
        let mut stack = vec![(Vec::<u32>::new(), 0.0)];
        while let Some((prefix, lp)) = stack.pop() {
            let step = decode_step(&p, &cfg, &enc, &prefix).unwrap();
            for tok in 0..cfg.vocab_size as u32 {
                let mut seq = prefix.clone();
                seq.push(tok);
                let total = lp + step[tok as usize];
                if tok == cfg.eos_id {
                    let score = total / length_penalty(seq.len(), beam.alpha);
                    if best.as_ref().map_or(true, |(s, b)| score > *s || (score == *s && seq < *b)) {
                        best = Some((score, seq));
                    }
                } else if seq.len() < cfg.max_target_len {
                    stack.push((seq, total));
                }
            }
        }
        let got = beam_search(&p, &cfg, &enc, &beam).unwrap();
        assert_eq!(got.tokens, best.unwrap().1, "model {seed}");
    }
}

fn wer_oracle() {
    let symbols = ["x", "y", "z"];
    let mut strings: Vec<Vec<String>> = vec![vec![]];
    let mut frontier: Vec<Vec<String>> = vec![vec![]];
    for _ in 0..6 {
        let mut next = Vec::new();
        for p in &frontier {
            for s in symbols {
                let mut q = p.clone();
                q.push(s.to_string());
                next.push(q);
            }
        }
        strings.extend(next.iter().cloned());
        frontier = next;
    }
    assert_eq!(strings.len(), 1093);
    let stop = Stoplist::parse("x");
    let hyps: Vec<Transcript> = strings.iter().map(|w| Transcript::from_words(w)).collect();
    for r in strings.iter().filter(|r| !r.is_empty()) {
        let refs = vec![Transcript::from_words(r); hyps.len()];
        let b = corpus_wer(&refs, &hyps, &stop, InsertionSlice::Hypothesis).unwrap();
        let mut pooled = 0;
        for (u, h) in b.utterances.iter().zip(&strings) {
            let d = edit_distance(r, h);
            assert_eq!(u.total.errors(), d, "{r:?} vs {h:?}");
            pooled += d;
        }
        assert_eq!(b.total.errors(), pooled);
        assert_eq!(b.total.n_ref_words, r.len() * hyps.len());
    }
    let mut rng = Rng::new(4);
    let word = |rng: &mut Rng| format!("w{}", rng.below(8));
    let pairs: Vec<(Vec<String>, Vec<String>)> = (0..1000)
        .map(|_| {
            let n = rng.int_inclusive(7, 30);
            let m = rng.int_inclusive(0, 30);
            ((0..n).map(|_| word(&mut rng)).collect(), (0..m).map(|_| word(&mut rng)).collect())
        })
        .collect();
    let refs: Vec<Transcript> = pairs.iter().map(|(r, _)| Transcript::from_words(r)).collect();
    let hyps: Vec<Transcript> = pairs.iter().map(|(_, h)| Transcript::from_words(h)).collect();
    let b = corpus_wer(&refs, &hyps, &stop, InsertionSlice::Hypothesis).unwrap();
    let mut pooled = 0;
    for (u, (r, h)) in b.utterances.iter().zip(&pairs) {
        let d = edit_distance(r, h);
        assert_eq!(u.total.errors(), d);
        pooled += d;
    }
    assert_eq!(b.total.errors(), pooled);
}

fn masking_rates() {
    let stoplist = Stoplist::default();
    let stops = ["the", "of", "and", "to", "a", "in", "is", "it"];
    let mut rng = Rng::new(8);
    let utterances: Vec<WordAlignment> = (0..5000)
        .map(|_| WordAlignment {
            entries: (0..21)
                .map(|k| {
                    let word = if rng.bernoulli(0.45) {
                        stops[rng.below(stops.len())].to_string()
                    } else {
                        format!("word{}", rng.below(200))
                    };
                    AlignedWord {
                        word,
                        start_s: k as f64 * 0.3,
                        end_s: k as f64 * 0.3 + 0.25,
                    }
                })
                .collect(),
        })
        .collect();
    let total: usize = utterances.iter().map(|u| u.entries.len()).sum();
    assert!(total >= 100_000);
    let words = utterances.iter().flat_map(|u| u.entries.iter().map(|e| e.word.as_str()));
    let cr = compute_content_rate(words, &stoplist, 0.1).unwrap();
    for plan in [MaskPlan::random(0.1), MaskPlan::content(0.1, cr.rate)] {
        let (mut masked, mut masked_stop) = (0usize, 0usize);
        for (i, u) in utterances.iter().enumerate() {
            let targets = select_mask_targets(u, &plan, &stoplist, &mut Rng::derive(99, &[i as u64])).unwrap();
            masked += targets.len();
            masked_stop += targets.iter().filter(|&&t| stoplist.is_stopword(&u.entries[t].word)).count();
        }
        let frac = masked as f64 / total as f64;
        assert!((frac - 0.1).abs() <= 0.005, "{:?}: masked fraction {frac}", plan.strategy);
        if plan.content_rate.is_some() {
            assert_eq!(masked_stop, 0);
        }
    }
}

/// Asymptotic Kolmogorov survival function with Stephens' small-sample correction.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

fn burst_noise() {
    let n = 160_000;
    let mut fractions = Vec::with_capacity(2000);
    for clip in 0..1000u64 {
        let mut rng = Rng::new(50_000 + clip);
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let m = rng.uniform_range(0.05, 1.0);
                if rng.bernoulli(0.5) { m } else { -m }
            })
            .collect();
        let spec = NoiseSpec {
            kind: NoiseKind::Burst,
            seed: clip,
            ..NoiseSpec::clean()
        };
        let (out, _) = degrade(&Waveform::from_samples(samples), &spec).unwrap();
        let mut runs = Vec::new();
        let mut i = 0;
        while i < n {
            if out.samples[i] == 0.0 {
                let start = i;
                while i < n && out.samples[i] == 0.0 {
                    i += 1;
                }
                runs.push(i - start);
            } else {
                i += 1;
            }
        }
        assert_eq!(runs.len(), 2, "clip {clip}: {} zeroed intervals", runs.len());
        for len in runs {
            assert!(len <= 16_000, "clip {clip}: interval of {len} samples");
            fractions.push(len as f64 / (0.1 * n as f64));
        }
    }
    fractions.sort_by(f64::total_cmp);
    let u = Uniform::new(0.0, 1.0).unwrap();
    let m = fractions.len() as f64;
    let d = fractions
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = u.cdf(x);
            (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
        })
        .fold(0.0, f64::max);
    let p = ks_p_value(d, fractions.len());
    assert!(p > 0.01, "KS D = {d}, p = {p}");
}

fn snr_mixing() {
    for pair in 0..100u64 {
        let mut rng = Rng::new(7_000 + pair);
        let n = rng.int_inclusive(8_000, 48_000);
        let m = rng.int_inclusive(4_000, 64_000);
        let f = rng.uniform_range(0.01, 0.2);
        let signal: Vec<f64> = (0..n).map(|i| 0.5 * (i as f64 * f).sin() + 0.05 * rng.normal()).collect();
        let noise: Vec<f64> = (0..m).map(|_| rng.uniform_range(0.1, 2.0) * rng.normal()).collect();
        let spec = NoiseSpec {
            kind: NoiseKind::Environment,
            noise_bank: Arc::new(vec![Waveform::from_samples(noise)]),
            snr_db: 0.0,
            seed: pair,
        };
        let (out, _) = degrade(&Waveform::from_samples(signal.clone()), &spec).unwrap();
        let ps: f64 = signal.iter().map(|x| x * x).sum();
        let pn: f64 = out.samples.iter().zip(&signal).map(|(y, x)| (y - x) * (y - x)).sum();
        let snr = 10.0 * (ps / pn).log10();
        assert!(snr.abs() <= 0.1, "pair {pair}: {snr} dB");
    }
}

fn overfit() {
    let ws = workspace();
    let log = std::fs::read_to_string(ws.run().join("loss.log")).unwrap();
    let losses: Vec<f64> = log.lines().map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(losses.len(), 300);
    let (first, last) = (losses[0], *losses.last().unwrap());
    assert!(last < 0.1 * first, "loss {first} -> {last}");
    let summary = evaluate(ws, &ws.checkpoint(), &ws.manifest(), "clean", "real", &ws.root.join("eval_clean"), "1");
    assert_eq!(summary["wer_total"].as_f64(), Some(0.0), "{summary}");
}

fn noise_and_isolation() {
    let ws = workspace();
    let clean = evaluate(ws, &ws.checkpoint(), &ws.manifest(), "clean", "real", &ws.root.join("eval_clean9"), "1");
    let mixed = evaluate(ws, &ws.checkpoint(), &ws.manifest(), "mixed", "real", &ws.root.join("eval_mixed"), "1");
    let (c, m) = (clean["wer_total"].as_f64().unwrap(), mixed["wer_total"].as_f64().unwrap());
    assert!(m > c, "mixed {m} vs clean {c}");

    let ao = ws.root.join("audio_only");
    avatar(&[
        "train", "--preset", "tiny", "--set", "audio_only=true", "--iterations", "30", "--manifest", s(&ws.manifest()), "--out", s(&ao),
    ]);
    // same manifest with every clip replaced by random frames
    let other = ws.root.join("other_frames");
    std::fs::create_dir_all(&other).unwrap();
    let mut rng = Rng::new(77);
    for entry in std::fs::read_dir(ws.corpus()).unwrap() {
        let p = entry.unwrap().path();
        let dst = other.join(p.file_name().unwrap());
        match p.extension().and_then(|e| e.to_str()) {
            Some("frames") => {
                let frames = (0..12).map(|_| Image::new(40, 40, (0..40 * 40 * 3).map(|_| rng.uniform()).collect()).unwrap()).collect();
                write_raw_clip(&dst, &Clip { frames, fps: 5.0 }).unwrap();
            }
            Some("wav") | Some("jsonl") => {
                std::fs::copy(&p, &dst).unwrap();
            }
            _ => {}
        }
    }
    let ckpt = ao.join("model.ckpt");
    let a = ws.root.join("ao_real");
    let b = ws.root.join("ao_other");
    evaluate(ws, &ckpt, &ws.manifest(), "mixed", "real", &a, "1");
    evaluate(ws, &ckpt, &other.join("manifest.jsonl"), "mixed", "real", &b, "1");
    for f in ["summary.json", "utterances.jsonl"] {
        assert!(read(&a.join(f)) == read(&b.join(f)), "{f} depends on video content");
    }
    let hyps = |dir: &Path| -> Vec<String> {
        std::fs::read_to_string(dir.join("utterances.jsonl"))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["hypothesis"].to_string())
            .collect()
    };
    for visual in ["none", "shuffled"] {
        let d = ws.root.join(format!("ao_{visual}"));
        evaluate(ws, &ckpt, &ws.manifest(), "mixed", visual, &d, "1");
        assert_eq!(hyps(&d), hyps(&a), "visual mode {visual} changed audio-only hypotheses");
    }
}

/// One constructed video: caption with `nc` content and `ns` stop words;
/// the ASR substitutes the first `cs` content and `ss` stop words, deletes
/// the next `cd` content words and appends `ins` extra words.
struct Case {
    nc: usize,
    ns: usize,
    cs: usize,
    ss: usize,
    cd: usize,
    ins: usize,
    expect: &'static str,
}

const fn case(nc: usize, ns: usize, cs: usize, ss: usize, cd: usize, ins: usize, expect: &'static str) -> Case {
    Case { nc, ns, cs, ss, cd, ins, expect }
}

#[rustfmt::skip]
const CURATION_CASES: [Case; 40] = [
    // video gate at 100%
    case(2, 2, 2, 2, 0, 0, "seg_wer_gt_50"),      // 4/4 = 100%, kept by the gate
    case(2, 2, 2, 2, 0, 1, "video_wer_gt_100"),   // 5/4
    case(5, 5, 5, 5, 0, 0, "seg_wer_gt_50"),      // 10/10
    case(5, 5, 5, 5, 0, 1, "video_wer_gt_100"),   // 11/10
    case(3, 0, 0, 0, 0, 3, "seg_wer_gt_50"),      // 3 insertions over 3 words
    case(3, 0, 0, 0, 0, 4, "video_wer_gt_100"),   // 4/3
    case(1, 0, 1, 0, 0, 0, "seg_wer_gt_50"),      // 1/1
    case(1, 0, 1, 0, 0, 1, "video_wer_gt_100"),   // 2/1
    case(0, 0, 0, 0, 0, 2, "empty_user_transcript"),
    case(6, 6, 6, 6, 0, 1, "video_wer_gt_100"),   // 13/12
    // segment WER at 50%
    case(5, 5, 3, 2, 0, 0, "kept"),               // 5/10, content 3/5
    case(5, 5, 3, 3, 0, 0, "seg_wer_gt_50"),      // 6/10
    case(10, 10, 5, 5, 0, 0, "kept"),             // 10/20, content 5/10
    case(10, 10, 5, 5, 0, 1, "seg_wer_gt_50"),    // 11/20
    case(6, 6, 3, 3, 0, 0, "kept"),               // 6/12
    case(6, 6, 3, 3, 0, 1, "seg_wer_gt_50"),      // 7/12
    case(8, 8, 4, 2, 2, 0, "kept"),               // 8/16, content 6/8
    case(8, 8, 4, 2, 3, 0, "seg_wer_gt_50"),      // 9/16
    case(9, 9, 9, 0, 0, 0, "kept"),               // 9/18, content 9/9
    case(9, 9, 9, 1, 0, 0, "seg_wer_gt_50"),      // 10/18
    // content-word WER at 20%
    case(10, 0, 2, 0, 0, 0, "kept"),              // content 2/10 = 20%
    case(10, 0, 1, 0, 0, 0, "nonstop_wer_lt_20"), // 1/10
    case(5, 5, 1, 0, 0, 0, "kept"),               // content 1/5
    case(5, 5, 0, 4, 0, 0, "nonstop_wer_lt_20"),  // 4/10 overall, content 0/5
    case(5, 5, 0, 0, 1, 0, "kept"),               // one content deletion, 1/5
    case(6, 6, 1, 5, 0, 0, "nonstop_wer_lt_20"),  // 6/12 overall, content 1/6
    case(6, 6, 2, 0, 0, 0, "kept"),               // content 2/6
    case(10, 5, 1, 0, 0, 3, "nonstop_wer_lt_20"), // insertions do not count: content 1/10
    case(10, 5, 2, 0, 0, 3, "kept"),              // 5/15 overall, content 2/10
    case(0, 10, 0, 2, 0, 0, "kept"),              // no content words: check skipped
    case(0, 8, 0, 1, 0, 0, "too_short"),          // no content words, 8 words
    case(15, 0, 3, 0, 0, 0, "kept"),              // 3/15 = 20%
    case(15, 0, 2, 0, 0, 5, "nonstop_wer_lt_20"), // 7/15 overall, content 2/15
    // length at 9 words
    case(5, 4, 2, 0, 0, 0, "kept"),               // 9 words
    case(4, 4, 2, 0, 0, 0, "too_short"),          // 8 words
    case(9, 0, 2, 0, 0, 0, "kept"),
    case(8, 0, 2, 0, 0, 0, "too_short"),
    case(4, 4, 4, 1, 0, 0, "seg_wer_gt_50"),      // quality is checked first
    case(4, 4, 0, 0, 0, 0, "nonstop_wer_lt_20"),  // too-clean is checked before length
    case(3, 2, 1, 0, 0, 0, "too_short"),
];

const STOPS: [&str; 12] = ["the", "of", "and", "to", "in", "is", "it", "that", "on", "for", "with", "was"];

fn build_case(c: &Case, k: usize) -> (Vec<String>, Vec<String>, usize) {
    let content: Vec<String> = (0..c.nc).map(|i| format!("c{k}x{i}")).collect();
    let stop: Vec<String> = (0..c.ns).map(|i| STOPS[i % STOPS.len()].to_string()).collect();
    let mut user = Vec::new();
    let mut asr = Vec::new();
    for i in 0..c.nc.max(c.ns) {
        if i < c.nc {
            user.push(content[i].clone());
            if i < c.cs {
                asr.push(format!("sub{k}x{i}"));
            } else if i >= c.cs + c.cd {
                asr.push(content[i].clone());
            }
        }
        if i < c.ns {
            user.push(stop[i].clone());
            asr.push(if i < c.ss { format!("stopsub{k}x{i}") } else { stop[i].clone() });
        }
    }
    asr.extend((0..c.ins).map(|i| format!("ins{k}x{i}")));
    (user, asr, c.cs + c.ss + c.cd + c.ins)
}

fn curation_dir(root: &Path) -> PathBuf {
    let videos = root.join("videos");
    for (k, c) in CURATION_CASES.iter().enumerate() {
        let (user, asr, errors) = build_case(c, k);
        assert_eq!(edit_distance(&user, &asr), errors, "case {k} is not built as intended");
        let d = videos.join(format!("v{k:02}"));
        std::fs::create_dir_all(&d).unwrap();
        std::fs::write(d.join("user.txt"), user.join(" ") + "\n").unwrap();
        std::fs::write(d.join("asr.txt"), asr.join(" ") + "\n").unwrap();
        std::fs::write(d.join("keywords.txt"), format!("c{k}x0 c{k}x1\n")).unwrap();
        write_wav(d.join("audio.wav"), &Waveform::from_samples(vec![0.0; 8000])).unwrap();
    }
    videos
}

fn curation() {
    let dir = tempfile::tempdir().unwrap();
    let videos = curation_dir(dir.path());
    let out = dir.path().join("out");
    avatar(&["curate", "--videos", s(&videos), "--out", s(&out)]);
    let text = std::fs::read_to_string(out.join("segments.jsonl")).unwrap();
    let got: HashMap<String, String> = text
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            let verdict = if v["verdict"] == "kept" { "kept".to_string() } else { v["reason"].as_str().unwrap().to_string() };
            (v["video_id"].as_str().unwrap().to_string(), verdict)
        })
        .collect();
    assert_eq!(got.len(), CURATION_CASES.len(), "one record per video expected");
    for (k, c) in CURATION_CASES.iter().enumerate() {
        assert_eq!(got[&format!("v{k:02}")], c.expect, "case {k}");
    }
}

fn rel_delta_values() {
    // Table values: Random Word Masking, environment noise; Vanilla, clean.
    let a = rel_delta(23.39, 22.35).unwrap();
    assert!((a - 4.45).abs() < 0.005, "{a}");
    let b = rel_delta(9.75, 9.79).unwrap();
    assert!((b - -0.41).abs() < 0.005, "{b}");
    assert!((b - -0.33).abs() <= 0.15, "{b}");
}

fn determinism() {
    let ws = workspace();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let videos = curation_dir(root);
    let wav = ws.corpus().join("utt0000.wav");
    std::fs::write(root.join("ref.txt"), "the red cat\na big dog runs\n").unwrap();
    std::fs::write(root.join("hyp.txt"), "the bed cat sat\nbig dog runs\n").unwrap();
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for workers in ["1", "4"] {
        let w = root.join(format!("w{workers}"));
        let mut files = Vec::new();
        avatar(&["--workers", workers, "synth", "--out", s(&w.join("synth")), "--seed", "5"]);
        let train = w.join("train");
        avatar(&[
            "--workers", workers, "train", "--preset", "tiny", "--mask", "content", "--iterations", "12", "--set", "checkpoint_every=5",
            "--manifest", s(&ws.manifest()), "--seed", "9", "--out", s(&train),
        ]);
        evaluate(ws, &train.join("model.ckpt"), &ws.manifest(), "mixed", "shuffled", &w.join("eval"), workers);
        avatar(&[
            "--workers", workers, "degrade", "--in", s(&wav), "--out", s(&w.join("degraded.wav")), "--noise", "mixed",
            "--noise-bank", s(&ws.noise()), "--seed", "7",
        ]);
        avatar(&["--workers", workers, "curate", "--videos", s(&videos), "--out", s(&w.join("curate"))]);
        let wer = avatar(&["--workers", workers, "wer", "--ref", s(&root.join("ref.txt")), "--hyp", s(&root.join("hyp.txt"))]);
        files.push(("wer stdout".to_string(), wer.into_bytes()));
        for rel in [
            "synth/manifest.jsonl", "synth/utt0003.wav", "synth/utt0003.frames", "synth/noise/noise00.wav",
            "train/model.ckpt", "train/step-0000005.ckpt", "train/loss.log", "train/vocab.txt", "train/config.txt",
            "eval/summary.json", "eval/utterances.jsonl", "degraded.wav", "curate/segments.jsonl", "curate/review_topk.jsonl",
        ] {
            files.push((rel.to_string(), read(&w.join(rel))));
        }
        outputs.push(files);
    }
    for ((name, a), (_, b)) in outputs[0].iter().zip(&outputs[1]) {
        assert!(a == b, "{name} differs between 1 and 4 workers");
    }
}

// ---------------------------------------------------------------- runner

fn main() {
    let criteria: [(&str, Duration, fn()); 12] = [
        ("token counts: 780 audio, 196 video", Duration::from_secs(1), token_counts),
        ("finite-difference gradients: ops and tiny model", Duration::from_secs(120), gradients),
        ("beam search equals exhaustive search on 100 models", Duration::from_secs(60), beam_oracle),
        ("WER counts equal brute-force edit distance", Duration::from_secs(60), wer_oracle),
        ("masking rate 0.100 +- 0.005, content spares stopwords", Duration::from_secs(30), masking_rates),
        ("burst noise: two intervals, uniform lengths (KS)", Duration::from_secs(30), burst_noise),
        ("environment noise at 0 dB SNR", Duration::from_secs(30), snr_mixing),
        ("tiny model overfits 10 utterances, 0% clean WER", Duration::from_secs(600), overfit),
        ("mixed noise hurts, audio-only ignores video", Duration::from_secs(300), noise_and_isolation),
        ("curation verdicts on 40 constructed segments", Duration::from_secs(10), curation),
        ("relative improvement figures", Duration::from_secs(1), rel_delta_values),
        ("byte-identical outputs for 1 and 4 workers", Duration::from_secs(300), determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (mut ran, mut failed) = (0, 0);
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        let took = t.elapsed();
        let in_time = took <= *budget;
        let pass = ok && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2}: {} {} ({:.2} s, budget {} s{})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            name,
            took.as_secs_f64(),
            budget.as_secs(),
            if ok && !in_time { ", over budget" } else { "" }
        );
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
