//! Initialising from externally trained weights through a name map.
//!
//! Each non-comment line of a map reads `target <- source [transform]`.
//! Transforms:
//!
//! - `copy` (default): shapes must match;
//! - `transpose`: source is `[out, in]`;
//! - `rgb_mean`: an RGB patch projection `[16·16·3, d]` averaged over
//!   channels into a spectrogram patch projection `[256, d]`;
//! - `inflate`: an RGB patch projection `[16·16·3, d]` expanded to a
//!   two-frame tubelet projection `[16·16·2·3, d]`, halved per frame so a
//!   static clip yields the image response.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Params;
use crate::numerics::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    Copy,
    Transpose,
    RgbMean,
    Inflate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportRule {
    pub target: String,
    pub source: String,
    pub transform: Transform,
}

pub fn parse_import_map(text: &str) -> Result<Vec<ImportRule>> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            path: "import map".into(),
            line: i + 1,
            msg: msg.into(),
        };
        let (target, rest) = line.split_once("<-").ok_or_else(|| bad("expected `target <- source`"))?;
        let mut parts = rest.split_whitespace();
        let source = parts.next().ok_or_else(|| bad("missing source name"))?;
        let transform = match parts.next() {
            None | Some("copy") => Transform::Copy,
            Some("transpose") => Transform::Transpose,
            Some("rgb_mean") => Transform::RgbMean,
            Some("inflate") => Transform::Inflate,
            Some(other) => return Err(bad(&format!("unknown transform {other:?}"))),
        };
        if parts.next().is_some() {
            return Err(bad("trailing text"));
        }
        rules.push(ImportRule {
            target: target.trim().to_string(),
            source: source.to_string(),
            transform,
        });
    }
    Ok(rules)
}

const RGB_PATCH: usize = 16 * 16;

fn apply(t: &Tensor, transform: Transform) -> Result<Tensor> {
    match transform {
        Transform::Copy => Ok(t.clone()),
        Transform::Transpose => t.transpose(),
        Transform::RgbMean | Transform::Inflate => {
            let (rows, d) = t.dims2()?;
            if rows != RGB_PATCH * 3 {
                return Err(Error::config(format!(
                    "{transform:?} needs a [{}, d] source, got {:?}",
                    RGB_PATCH * 3,
                    t.shape()
                )));
            }
            let at = |pix: usize, c: usize| &t.data()[(pix * 3 + c) * d..(pix * 3 + c + 1) * d];
            let mut data = Vec::new();
            for pix in 0..RGB_PATCH {
                if transform == Transform::RgbMean {
                    data.extend((0..d).map(|j| (0..3).map(|c| at(pix, c)[j]).sum::<f64>() / 3.0));
                } else {
                    for _frame in 0..2 {
                        for c in 0..3 {
                            data.extend(at(pix, c).iter().map(|v| v * 0.5));
                        }
                    }
                }
            }
            let out_rows = if transform == Transform::RgbMean { RGB_PATCH } else { RGB_PATCH * 6 };
            Tensor::new(vec![out_rows, d], data)
        }
    }
}

/// Overwrites mapped parameters with transformed source tensors.
pub fn import_weights(params: &mut Params, source: &BTreeMap<String, Tensor>, rules: &[ImportRule]) -> Result<()> {
    for r in rules {
        let src = source
            .get(&r.source)
            .ok_or_else(|| Error::config(format!("import source {} not found", r.source)))?;
        let value = apply(src, r.transform)?;
        let dst = params
            .tensors
            .get_mut(&r.target)
            .ok_or_else(|| Error::config(format!("import target {} is not a model parameter", r.target)))?;
        if dst.shape() != value.shape() {
            return Err(Error::config(format!(
                "import {} -> {}: shape {:?} does not fit {:?}",
                r.source,
                r.target,
                value.shape(),
                dst.shape()
            )));
        }
        *dst = value;
    }
    Ok(())
}
