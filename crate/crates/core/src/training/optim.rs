use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Params;
use crate::numerics::Tensor;

/// Linear warmup to `base_lr`, then linear decay to zero at `total_iters`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub base_lr: f64,
    pub warmup_iters: usize,
    pub total_iters: usize,
    pub momentum: f64,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr >= 0.0 && self.base_lr.is_finite()) {
            return Err(Error::config(format!("base_lr {} must be finite and non-negative", self.base_lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if self.total_iters == 0 || self.warmup_iters > self.total_iters {
            return Err(Error::config(format!(
                "need 0 < iterations and warmup_iters <= iterations (got {} and {})",
                self.total_iters, self.warmup_iters
            )));
        }
        Ok(())
    }

    pub fn lr(&self, iter: usize) -> f64 {
        let (w, t) = (self.warmup_iters, self.total_iters);
        if iter < w {
            self.base_lr * iter as f64 / w as f64
        } else if iter >= t {
            0.0
        } else if iter == w {
            self.base_lr
        } else {
            self.base_lr * (t - iter) as f64 / (t - w) as f64
        }
    }
}

/// Heavy-ball momentum: `v ← μ·v + g`, `p ← p − lr·v`.
#[derive(Clone, Debug, Default)]
pub struct Momentum {
    pub velocity: BTreeMap<String, Tensor>,
}

impl Momentum {
    pub fn step(&mut self, params: &mut Params, grads: &BTreeMap<String, Tensor>, lr: f64, mu: f64) -> Result<()> {
        for (name, g) in grads {
            if let Some(i) = g.data().iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite gradient {} at index {i} of {name}",
                    g.data()[i]
                )));
            }
        }
        for (name, g) in grads {
            let p = params.get_mut(name)?;
            if p.shape() != g.shape() {
                return Err(Error::Shape {
                    op: "momentum step",
                    lhs: p.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
            let v = self
                .velocity
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(g.shape()));
            for ((pv, vv), gv) in p.data_mut().iter_mut().zip(v.data_mut()).zip(g.data()) {
                *vv = mu * *vv + gv;
                *pv -= lr * *vv;
            }
        }
        Ok(())
    }
}
