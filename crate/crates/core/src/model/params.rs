use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::numerics::{read_checkpoint, write_checkpoint, Rng, Tape, Tensor, Var};

/// Standard deviation of the truncated-normal initializer.
pub const INIT_STD: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Init {
    Normal,
    Zeros,
    Ones,
}

fn layer_norm(out: &mut Vec<(String, Vec<usize>, Init)>, name: &str, d: usize) {
    out.push((format!("{name}.g"), vec![d], Init::Ones));
    out.push((format!("{name}.b"), vec![d], Init::Zeros));
}

fn linear(out: &mut Vec<(String, Vec<usize>, Init)>, name: &str, i: usize, o: usize) {
    out.push((format!("{name}.w"), vec![i, o], Init::Normal));
    out.push((format!("{name}.b"), vec![o], Init::Zeros));
}

fn attention(out: &mut Vec<(String, Vec<usize>, Init)>, name: &str, d: usize) {
    for p in ["q", "k", "v", "o"] {
        linear(out, &format!("{name}.{p}"), d, d);
    }
}

fn layout(cfg: &ModelConfig) -> Vec<(String, Vec<usize>, Init)> {
    let d = cfg.d_model;
    let mut out = Vec::new();
    for &m in cfg.streams() {
        let (n, dim) = if m == "audio" {
            (cfg.audio_tokens, cfg.audio_patch_dim())
        } else {
            (cfg.video_tokens, cfg.video_patch_dim())
        };
        linear(&mut out, &format!("{m}.embed"), dim, d);
        out.push((format!("{m}.pos"), vec![n, d], Init::Normal));
        out.push((format!("{m}.cls"), vec![1, d], Init::Normal));
        for l in 0..cfg.layers {
            let p = format!("enc.{m}.{l}");
            layer_norm(&mut out, &format!("{p}.ln1"), d);
            attention(&mut out, &format!("{p}.attn"), d);
            layer_norm(&mut out, &format!("{p}.ln2"), d);
            linear(&mut out, &format!("{p}.mlp1"), d, cfg.ff_dim);
            linear(&mut out, &format!("{p}.mlp2"), cfg.ff_dim, d);
        }
    }
    if cfg.n_bottleneck > 0 {
        out.push(("bottleneck".into(), vec![cfg.n_bottleneck, d], Init::Normal));
    }
    layer_norm(&mut out, "enc.ln_f", d);
    out.push(("dec.embed".into(), vec![cfg.vocab_size, d], Init::Normal));
    out.push(("dec.pos".into(), vec![cfg.max_target_len, d], Init::Normal));
    for l in 0..cfg.dec_layers {
        let p = format!("dec.{l}");
        layer_norm(&mut out, &format!("{p}.ln1"), d);
        attention(&mut out, &format!("{p}.self"), d);
        layer_norm(&mut out, &format!("{p}.ln2"), d);
        attention(&mut out, &format!("{p}.cross"), d);
        layer_norm(&mut out, &format!("{p}.ln3"), d);
        linear(&mut out, &format!("{p}.mlp1"), d, cfg.ff_dim);
        linear(&mut out, &format!("{p}.mlp2"), cfg.ff_dim, d);
    }
    layer_norm(&mut out, "dec.ln_f", d);
    linear(&mut out, "dec.out", d, cfg.vocab_size);
    out
}

/// Named model weights. The key set and shapes are fixed by a [`ModelConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub tensors: BTreeMap<String, Tensor>,
}

impl Params {
    /// Truncated-normal weights, zero biases, unit layer-norm gains.
    pub fn init(cfg: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let tensors = layout(cfg)
            .into_iter()
            .map(|(name, shape, init)| {
                let t = match init {
                    Init::Normal => Tensor::truncated_normal(&shape, INIT_STD, rng),
                    Init::Zeros => Tensor::zeros(&shape),
                    Init::Ones => Tensor::full(&shape, 1.0),
                };
                (name, t)
            })
            .collect();
        Ok(Params { tensors })
    }

    /// Checks that names and shapes are exactly those required by `cfg`.
    pub fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        let expected = layout(cfg);
        for (name, shape, _) in &expected {
            match self.tensors.get(name) {
                None => return Err(Error::config(format!("checkpoint lacks tensor {name}"))),
                Some(t) if t.shape() != shape.as_slice() => {
                    return Err(Error::config(format!(
                        "tensor {name} has shape {:?}, config needs {shape:?}",
                        t.shape()
                    )))
                }
                _ => {}
            }
        }
        if self.tensors.len() != expected.len() {
            let known: std::collections::BTreeSet<_> = expected.iter().map(|e| e.0.as_str()).collect();
            let extra: Vec<_> = self.tensors.keys().filter(|k| !known.contains(k.as_str())).collect();
            return Err(Error::config(format!("checkpoint has unexpected tensors {extra:?}")));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::contract(format!("no parameter named {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::contract(format!("no parameter named {name}")))
    }

    pub fn num_values(&self) -> usize {
        self.tensors.values().map(Tensor::numel).sum()
    }

    /// Puts every tensor on `tape`, as leaves when `trainable`.
    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> Bound<'t> {
        let vars = self
            .tensors
            .iter()
            .map(|(k, t)| {
                let v = if trainable {
                    tape.leaf(t.clone())
                } else {
                    tape.constant(t.clone())
                };
                (k.clone(), v)
            })
            .collect();
        Bound { vars }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_checkpoint(path, &self.tensors)
    }

    pub fn load(path: impl AsRef<Path>, cfg: &ModelConfig) -> Result<Self> {
        let p = Params {
            tensors: read_checkpoint(path)?,
        };
        p.validate(cfg)?;
        Ok(p)
    }
}

/// Parameters placed on a tape.
pub struct Bound<'t> {
    vars: BTreeMap<String, Var<'t>>,
}

impl<'t> Bound<'t> {
    pub fn get(&self, name: &str) -> Result<Var<'t>> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::contract(format!("no parameter named {name}")))
    }

    /// Accumulated gradient of every parameter after `Tape::backward`.
    pub fn grads(&self, tape: &Tape) -> BTreeMap<String, Tensor> {
        self.vars
            .iter()
            .map(|(k, v)| {
                let g = tape.grad(*v).unwrap_or_else(|| Tensor::zeros(&v.shape()));
                (k.clone(), g)
            })
            .collect()
    }
}
