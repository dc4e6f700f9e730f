use crate::error::{Error, Result};
use crate::model::layers::{attention, causal_mask, layer_norm, linear, mlp};
use crate::model::{Bound, ModelConfig, Params};
use crate::numerics::{Tape, Tensor, Var};

/// Vocabulary logits `[inputs.len(), vocab]` for decoder inputs that start
/// with the start-of-sequence token.
pub fn decoder_logits<'t>(p: &Bound<'t>, cfg: &ModelConfig, enc: Var<'t>, inputs: &[usize]) -> Result<Var<'t>> {
    let n = inputs.len();
    if n == 0 || n > cfg.max_target_len {
        return Err(Error::contract(format!(
            "decoder input of length {n} outside 1..={}",
            cfg.max_target_len
        )));
    }
    let tape = enc.tape();
    let mut x = tape
        .gather(p.get("dec.embed")?, inputs)?
        .add(&p.get("dec.pos")?.slice_rows(0, n)?)?;
    let mask = causal_mask(n);
    for l in 0..cfg.dec_layers {
        let name = format!("dec.{l}");
        let h = layer_norm(p, &format!("{name}.ln1"), x)?;
        x = x.add(&attention(p, &format!("{name}.self"), h, h, cfg.dec_heads, Some(&mask))?)?;
        let h = layer_norm(p, &format!("{name}.ln2"), x)?;
        x = x.add(&attention(p, &format!("{name}.cross"), h, enc, cfg.dec_heads, None)?)?;
        let h = layer_norm(p, &format!("{name}.ln3"), x)?;
        x = x.add(&mlp(p, &name, h)?)?;
    }
    linear(p, "dec.out", layer_norm(p, "dec.ln_f", x)?)
}

fn check_ids(cfg: &ModelConfig, ids: &[u32]) -> Result<()> {
    match ids.iter().find(|&&t| t as usize >= cfg.vocab_size) {
        Some(t) => Err(Error::contract(format!("token id {t} outside vocabulary of {}", cfg.vocab_size))),
        None => Ok(()),
    }
}

fn with_bos(cfg: &ModelConfig, prefix: &[u32]) -> Vec<usize> {
    std::iter::once(cfg.bos_id as usize)
        .chain(prefix.iter().map(|&t| t as usize))
        .collect()
}

/// Teacher-forced mean token negative log-likelihood of `target`.
pub fn sequence_loss<'t>(p: &Bound<'t>, cfg: &ModelConfig, enc: Var<'t>, target: &[u32]) -> Result<Var<'t>> {
    if target.is_empty() {
        return Err(Error::contract("empty target sequence"));
    }
    check_ids(cfg, target)?;
    let inputs = with_bos(cfg, &target[..target.len() - 1]);
    let logp = decoder_logits(p, cfg, enc, &inputs)?.log_softmax(1)?;
    let idx: Vec<usize> = target.iter().map(|&t| t as usize).collect();
    Ok(logp.pick(&idx)?.mean().scale(-1.0))
}

/// Log-probabilities of the token following `prefix` (which excludes the
/// start token).
pub fn decode_step(params: &Params, cfg: &ModelConfig, enc: &Tensor, prefix: &[u32]) -> Result<Vec<f64>> {
    if prefix.len() >= cfg.max_target_len {
        return Err(Error::contract(format!(
            "prefix of length {} reaches max_target_len {}",
            prefix.len(),
            cfg.max_target_len
        )));
    }
    check_ids(cfg, prefix)?;
    let tape = Tape::new();
    let p = params.bind(&tape, false);
    let e = tape.constant(enc.clone());
    let logits = decoder_logits(&p, cfg, e, &with_bos(cfg, prefix))?;
    let last = logits.slice_rows(prefix.len(), 1)?.log_softmax(1)?;
    let out = last.value().data().to_vec();
    Ok(out)
}
