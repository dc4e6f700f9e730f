use super::*;
use crate::numerics::{Rng, Tape, Tensor};

fn micro(vocab: usize) -> ModelConfig {
    ModelConfig {
        d_model: 8,
        layers: 2,
        heads: 2,
        ff_dim: 12,
        n_bottleneck: 2,
        fusion_layer: 1,
        dec_layers: 1,
        dec_heads: 2,
        vocab_size: vocab,
        max_target_len: 5,
        audio_only: false,
        audio_tokens: 3,
        video_tokens: 1,
        encoder_output: EncoderOutput::All,
        bos_id: 2,
        eos_id: 3,
    }
}

/// Initialisation with a larger spread so outputs are far from uniform.
fn random_params(cfg: &ModelConfig, seed: u64, std: f64) -> Params {
    let mut rng = Rng::new(seed);
    let mut p = Params::init(cfg, &mut rng).unwrap();
    for t in p.tensors.values_mut() {
        let shape = t.shape().to_vec();
        *t = Tensor::randn(&shape, std, &mut rng);
    }
    p
}

fn tokens(cfg: &ModelConfig, seed: u64) -> (Tensor, Option<Tensor>) {
    let mut rng = Rng::new(seed);
    let a = Tensor::randn(&[cfg.audio_tokens, cfg.audio_patch_dim()], 1.0, &mut rng);
    let v = (!cfg.audio_only).then(|| Tensor::randn(&[cfg.video_tokens, cfg.video_patch_dim()], 1.0, &mut rng));
    (a, v)
}

#[test]
fn encoder_output_length_invariant() {
    for (ao, nb, fl, mode) in [
        (false, 2, 1, EncoderOutput::All),
        (false, 0, 2, EncoderOutput::All),
        (false, 0, 0, EncoderOutput::All),
        (true, 2, 0, EncoderOutput::All),
        (false, 2, 1, EncoderOutput::Cls),
        (true, 3, 2, EncoderOutput::Cls),
    ] {
        let cfg = ModelConfig {
            audio_only: ao,
            n_bottleneck: nb,
            fusion_layer: fl,
            encoder_output: mode,
            ..micro(7)
        };
        let p = random_params(&cfg, 1, 0.2);
        let (a, v) = tokens(&cfg, 2);
        let out = encode(&p, &cfg, &a, v.as_ref()).unwrap();
        assert_eq!(out.shape(), &[cfg.encoder_len(), cfg.d_model]);
        if mode == EncoderOutput::All {
            let video = if ao { 0 } else { cfg.video_tokens };
            assert_eq!(cfg.encoder_len(), cfg.audio_tokens + video + cfg.streams().len() + nb);
        }
    }
}

#[test]
fn encoder_rejects_wrong_inputs() {
    let cfg = micro(7);
    let p = random_params(&cfg, 1, 0.2);
    let (a, v) = tokens(&cfg, 2);
    assert!(matches!(encode(&p, &cfg, &a, None), Err(crate::Error::Contract(_))));
    let short = Tensor::zeros(&[2, 256]);
    assert!(matches!(encode(&p, &cfg, &short, v.as_ref()), Err(crate::Error::Contract(_))));
}

#[test]
fn unfused_audio_ignores_video() {
    let cfg = ModelConfig {
        fusion_layer: 2,
        ..micro(7)
    };
    let p = random_params(&cfg, 3, 0.3);
    let (a, v) = tokens(&cfg, 4);
    let zeros = Tensor::zeros(v.as_ref().unwrap().shape());
    let x = encode(&p, &cfg, &a, v.as_ref()).unwrap();
    let y = encode(&p, &cfg, &a, Some(&zeros)).unwrap();
    let audio_rows = (cfg.audio_tokens + 1) * cfg.d_model;
    assert_eq!(&x.data()[..audio_rows], &y.data()[..audio_rows]);
    assert_ne!(x.data(), y.data());
}

#[test]
fn fused_information_flows_only_through_bottlenecks() {
    // two fused layers: the first carries video into the bottlenecks, the second into audio
    let cfg = ModelConfig {
        fusion_layer: 0,
        ..micro(7)
    };
    let p = random_params(&cfg, 5, 0.3);
    let (a, v1) = tokens(&cfg, 6);
    let (_, v2) = tokens(&cfg, 7);
    let run = |video: &Tensor, probe: &mut BottleneckProbe| {
        let tape = Tape::new();
        let b = p.bind(&tape, false);
        let out = encode_on(&tape, &b, &cfg, &a, Some(video), Some(probe)).unwrap();
        (*out.value()).clone()
    };
    let mut rec = BottleneckProbe::default();
    let base = run(v1.as_ref().unwrap(), &mut rec);
    assert_eq!(rec.recorded.len(), cfg.layers - cfg.fusion_layer);
    let mut free = BottleneckProbe::default();
    let changed = run(v2.as_ref().unwrap(), &mut free);
    let mut frozen = BottleneckProbe {
        recorded: Vec::new(),
        frozen: Some(rec.recorded.clone()),
    };
    let pinned = run(v2.as_ref().unwrap(), &mut frozen);
    let n = (cfg.audio_tokens + 1) * cfg.d_model;
    let diff = |x: &Tensor, y: &Tensor| x.data()[..n].iter().zip(&y.data()[..n]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff(&base, &pinned) <= 1e-9);
    assert!(diff(&base, &changed) > 1e-6, "video should reach audio via bottlenecks");
}

#[test]
fn decode_step_is_a_distribution() {
    let cfg = micro(7);
    let p = random_params(&cfg, 8, 0.5);
    let (a, v) = tokens(&cfg, 9);
    let enc = encode(&p, &cfg, &a, v.as_ref()).unwrap();
    for prefix in [vec![], vec![4], vec![4, 5, 6, 0]] {
        let lp = decode_step(&p, &cfg, &enc, &prefix).unwrap();
        assert_eq!(lp.len(), 7);
        let total: f64 = lp.iter().map(|x| x.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    assert!(matches!(decode_step(&p, &cfg, &enc, &[4; 5]), Err(crate::Error::Contract(_))));
}

#[test]
fn decoder_is_causal() {
    let cfg = micro(7);
    let p = random_params(&cfg, 10, 0.5);
    let mut rng = Rng::new(11);
    let enc = Tensor::randn(&[4, cfg.d_model], 1.0, &mut rng);
    for trial in 0..20 {
        let inputs: Vec<usize> = (0..cfg.max_target_len).map(|_| rng.below(7)).collect();
        let j = trial % cfg.max_target_len;
        let mut perturbed = inputs.clone();
        perturbed[j] = (perturbed[j] + 1) % 7;
        let logits = |ids: &[usize]| {
            let tape = Tape::new();
            let b = p.bind(&tape, false);
            let e = tape.constant(enc.clone());
            (*decoder_logits(&b, &cfg, e, ids).unwrap().value()).clone()
        };
        let (x, y) = (logits(&inputs), logits(&perturbed));
        for pos in 0..cfg.max_target_len {
            let same = x.row(pos) == y.row(pos);
            assert_eq!(same, pos < j, "position {pos}, perturbed {j}");
        }
    }
}

#[test]
fn zero_cross_attention_ignores_encoder() {
    let cfg = micro(7);
    let mut p = random_params(&cfg, 12, 0.5);
    for name in ["dec.0.cross.o.w", "dec.0.cross.o.b"] {
        let t = p.get_mut(name).unwrap();
        *t = Tensor::zeros(t.shape());
    }
    let mut rng = Rng::new(13);
    let e1 = Tensor::randn(&[5, 8], 1.0, &mut rng);
    let e2 = Tensor::randn(&[2, 8], 3.0, &mut rng);
    assert_eq!(
        decode_step(&p, &cfg, &e1, &[4, 1]).unwrap(),
        decode_step(&p, &cfg, &e2, &[4, 1]).unwrap()
    );
}

#[test]
fn uniform_logits_give_log_vocab_loss() {
    let cfg = micro(7);
    let mut p = random_params(&cfg, 14, 0.5);
    for name in ["dec.out.w", "dec.out.b"] {
        let t = p.get_mut(name).unwrap();
        *t = Tensor::zeros(t.shape());
    }
    let (a, v) = tokens(&cfg, 15);
    let ex = Example {
        audio: a,
        video: v,
        target: vec![4, 5, 3],
    };
    let loss = example_loss(&p, &cfg, &ex).unwrap();
    assert!((loss - 7f64.ln()).abs() < 1e-12);
}

#[test]
fn single_token_loss_is_its_nll() {
    let cfg = micro(7);
    let p = random_params(&cfg, 16, 0.5);
    let (a, v) = tokens(&cfg, 17);
    let enc = encode(&p, &cfg, &a, v.as_ref()).unwrap();
    let lp = decode_step(&p, &cfg, &enc, &[]).unwrap();
    let ex = Example {
        audio: a,
        video: v,
        target: vec![3],
    };
    assert!((example_loss(&p, &cfg, &ex).unwrap() + lp[3]).abs() < 1e-12);
    let empty = Example { target: vec![], ..ex };
    assert!(matches!(example_loss(&p, &cfg, &empty), Err(crate::Error::Contract(_))));
}

/// Central differences over every value of every parameter.
fn max_param_rel_error(p: &Params, cfg: &ModelConfig, ex: &Example, only: Option<&str>) -> f64 {
    let (_, grads) = loss_and_grads(p, cfg, ex).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut q = p.clone();
    for (name, g) in &grads {
        if only.is_some_and(|o| !name.starts_with(o)) {
            continue;
        }
        for i in 0..g.numel() {
            let orig = q.tensors[name].data()[i];
            q.get_mut(name).unwrap().data_mut()[i] = orig + h;
            let up = example_loss(&q, cfg, ex).unwrap();
            q.get_mut(name).unwrap().data_mut()[i] = orig - h;
            let down = example_loss(&q, cfg, ex).unwrap();
            q.get_mut(name).unwrap().data_mut()[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = g.data()[i];
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

#[test]
fn output_projection_gradient() {
    let cfg = micro(7);
    let p = random_params(&cfg, 18, 0.4);
    let (a, v) = tokens(&cfg, 19);
    let ex = Example {
        audio: a,
        video: v,
        target: vec![4, 6, 3],
    };
    assert!(max_param_rel_error(&p, &cfg, &ex, Some("dec.out")) < 1e-4);
}

#[test]
fn full_model_gradient() {
    let cfg = micro(7);
    let p = random_params(&cfg, 20, 0.3);
    let (a, v) = tokens(&cfg, 21);
    let ex = Example {
        audio: a,
        video: v,
        target: vec![4, 5, 6, 3],
    };
    let err = max_param_rel_error(&p, &cfg, &ex, None);
    assert!(err < 1e-3, "{err}");
}

fn beam_model(seed: u64) -> (Params, ModelConfig, Tensor) {
    let cfg = ModelConfig {
        vocab_size: 5,
        max_target_len: 3,
        audio_only: true,
        audio_tokens: 1,
        ..micro(5)
    };
    let p = random_params(&cfg, seed, 0.8);
    let enc = Tensor::randn(&[3, cfg.d_model], 1.0, &mut Rng::new(seed + 1000));
    (p, cfg, enc)
}

/// Every output sequence scored directly; sums accumulate in decoding order.
fn exhaustive(p: &Params, cfg: &ModelConfig, enc: &Tensor, alpha: f64) -> Vec<u32> {
    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut stack = vec![(Vec::<u32>::new(), 0.0)];
    while let Some((prefix, lp)) = stack.pop() {
        let step = decode_step(p, cfg, enc, &prefix).unwrap();
        for tok in 0..cfg.vocab_size as u32 {
            let mut seq = prefix.clone();
            seq.push(tok);
            let total = lp + step[tok as usize];
            if tok == cfg.eos_id {
                let score = total / length_penalty(seq.len(), alpha);
                let better = match &best {
                    None => true,
                    Some((s, b)) => score > *s || (score == *s && seq < *b),
                };
                if better {
                    best = Some((score, seq));
                }
            } else if seq.len() < cfg.max_target_len {
                stack.push((seq, total));
            }
        }
    }
    best.unwrap().1
}

#[test]
fn full_width_beam_matches_exhaustive_search() {
    for seed in 0..10 {
        let (p, cfg, enc) = beam_model(seed);
        let beam = BeamConfig {
            beam_size: 125,
            alpha: 0.6,
            suppress: vec![],
        };
        let got = beam_search(&p, &cfg, &enc, &beam).unwrap();
        assert!(got.finished && got.log_prob <= 0.0);
        assert_eq!(got.tokens, exhaustive(&p, &cfg, &enc, 0.6), "seed {seed}");
    }
}

#[test]
fn beam_of_one_is_greedy() {
    for seed in 0..10 {
        let (p, cfg, enc) = beam_model(seed);
        let beam = BeamConfig {
            beam_size: 1,
            alpha: 0.6,
            suppress: vec![0],
        };
        let got = beam_search(&p, &cfg, &enc, &beam).unwrap();
        let mut greedy = Vec::new();
        while greedy.len() < cfg.max_target_len {
            let lp = decode_step(&p, &cfg, &enc, &greedy).unwrap();
            let tok = (1..5).max_by(|&a, &b| lp[a].total_cmp(&lp[b]).then(b.cmp(&a))).unwrap() as u32;
            greedy.push(tok);
            if tok == cfg.eos_id {
                break;
            }
        }
        assert_eq!(got.tokens, greedy);
        assert_eq!(got.finished, greedy.last() == Some(&cfg.eos_id));
    }
}

#[test]
fn zero_alpha_scores_by_log_probability() {
    assert_eq!(length_penalty(7, 0.0), 1.0);
    assert!((length_penalty(1, 0.6) - 1.0).abs() < 1e-15);
    for seed in 0..5 {
        let (p, cfg, enc) = beam_model(seed);
        let beam = BeamConfig {
            beam_size: 125,
            alpha: 0.0,
            suppress: vec![],
        };
        let got = beam_search(&p, &cfg, &enc, &beam).unwrap();
        assert_eq!(got.tokens, exhaustive(&p, &cfg, &enc, 0.0));
    }
}

#[test]
fn identical_examples_give_identical_losses() {
    let cfg = micro(7);
    let p = random_params(&cfg, 22, 0.3);
    let (a, v) = tokens(&cfg, 23);
    let ex = Example {
        audio: a,
        video: v,
        target: vec![4, 3],
    };
    assert_eq!(example_loss(&p, &cfg, &ex).unwrap(), example_loss(&p, &cfg, &ex.clone()).unwrap());
}
