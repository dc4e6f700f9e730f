//! Transformer building blocks shared by the encoder and decoder.

use crate::error::Result;
use crate::model::Bound;
use crate::numerics::{Tensor, Var};

pub(crate) const LN_EPS: f64 = 1e-6;
/// Additive attention mask for disallowed positions. Finite so softmax accepts it.
pub(crate) const MASKED: f64 = -1e9;

pub(crate) fn linear<'t>(p: &Bound<'t>, name: &str, x: Var<'t>) -> Result<Var<'t>> {
    x.matmul(&p.get(&format!("{name}.w"))?)?.add_row(&p.get(&format!("{name}.b"))?)
}

pub(crate) fn layer_norm<'t>(p: &Bound<'t>, name: &str, x: Var<'t>) -> Result<Var<'t>> {
    x.layer_norm(&p.get(&format!("{name}.g"))?, &p.get(&format!("{name}.b"))?, LN_EPS)
}

/// Multi-head attention of `query` rows over `memory` rows.
pub(crate) fn attention<'t>(
    p: &Bound<'t>,
    name: &str,
    query: Var<'t>,
    memory: Var<'t>,
    heads: usize,
    mask: Option<&Tensor>,
) -> Result<Var<'t>> {
    let q = linear(p, &format!("{name}.q"), query)?;
    let k = linear(p, &format!("{name}.k"), memory)?;
    let v = linear(p, &format!("{name}.v"), memory)?;
    let d = q.shape()[1];
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let tape = query.tape();
    let mask = mask.map(|m| tape.constant(m.clone()));
    let mut outs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = q.slice_cols(h * dh, dh)?;
        let kh = k.slice_cols(h * dh, dh)?;
        let vh = v.slice_cols(h * dh, dh)?;
        let mut s = qh.matmul(&kh.transpose()?)?.scale(scale);
        if let Some(m) = &mask {
            s = s.add(m)?;
        }
        outs.push(s.softmax(1)?.matmul(&vh)?);
    }
    let o = if heads == 1 { outs[0] } else { tape.concat_cols(&outs)? };
    linear(p, &format!("{name}.o"), o)
}

pub(crate) fn mlp<'t>(p: &Bound<'t>, name: &str, x: Var<'t>) -> Result<Var<'t>> {
    let h = linear(p, &format!("{name}.mlp1"), x)?.gelu();
    linear(p, &format!("{name}.mlp2"), h)
}

/// Pre-norm self-attention block.
pub(crate) fn encoder_block<'t>(p: &Bound<'t>, name: &str, x: Var<'t>, heads: usize) -> Result<Var<'t>> {
    let h = layer_norm(p, &format!("{name}.ln1"), x)?;
    let x = x.add(&attention(p, &format!("{name}.attn"), h, h, heads, None)?)?;
    let h = layer_norm(p, &format!("{name}.ln2"), x)?;
    x.add(&mlp(p, name, h)?)
}

/// `[n, n]` mask hiding positions after the query position.
pub(crate) fn causal_mask(n: usize) -> Tensor {
    let data = (0..n * n)
        .map(|i| if i % n > i / n { MASKED } else { 0.0 })
        .collect();
    Tensor::new(vec![n, n], data).expect("square mask")
}
