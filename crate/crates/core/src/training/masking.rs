use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::text::{Stoplist, WordAlignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MaskStrategy {
    None,
    /// Every word is a candidate.
    Random,
    /// Only content words are candidates, at a rate raised to keep the
    /// corpus-wide fraction at the overall rate.
    Content,
}

impl fmt::Display for MaskStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskStrategy::None => "none",
            MaskStrategy::Random => "random",
            MaskStrategy::Content => "content",
        })
    }
}

impl FromStr for MaskStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(MaskStrategy::None),
            "random" => Ok(MaskStrategy::Random),
            "content" => Ok(MaskStrategy::Content),
            other => Err(Error::config(format!(
                "unknown mask strategy {other:?} (expected none, random or content)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskPlan {
    pub strategy: MaskStrategy,
    pub overall_rate: f64,
    /// Per-content-word probability; required by the content strategy.
    pub content_rate: Option<f64>,
}

impl MaskPlan {
    pub fn none() -> Self {
        MaskPlan {
            strategy: MaskStrategy::None,
            overall_rate: 0.0,
            content_rate: None,
        }
    }

    pub fn random(rate: f64) -> Self {
        MaskPlan {
            strategy: MaskStrategy::Random,
            overall_rate: rate,
            content_rate: None,
        }
    }

    pub fn content(rate: f64, content_rate: f64) -> Self {
        MaskPlan {
            strategy: MaskStrategy::Content,
            overall_rate: rate,
            content_rate: Some(content_rate),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.overall_rate) {
            return Err(Error::config(format!("mask rate {} outside [0, 1]", self.overall_rate)));
        }
        if self.strategy == MaskStrategy::Content {
            match self.content_rate {
                Some(r) if (0.0..=1.0).contains(&r) => {}
                Some(r) => return Err(Error::config(format!("content mask rate {r} outside [0, 1]"))),
                None => return Err(Error::config("content masking needs a computed content rate")),
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContentRate {
    pub rate: f64,
    /// True when the uncapped rate exceeded 1.
    pub capped: bool,
    /// Expected overall fraction actually masked.
    pub achieved_overall: f64,
}

/// `min(1, overall_rate · N_total / N_content)` over a corpus word stream.
pub fn compute_content_rate<'a>(
    words: impl IntoIterator<Item = &'a str>,
    stoplist: &Stoplist,
    overall_rate: f64,
) -> Result<ContentRate> {
    let (mut total, mut content) = (0usize, 0usize);
    for w in words {
        total += 1;
        if stoplist.is_content_word(w)? {
            content += 1;
        }
    }
    if content == 0 {
        return Err(Error::config("corpus has no content words to mask"));
    }
    let raw = overall_rate * total as f64 / content as f64;
    let rate = raw.min(1.0);
    let achieved_overall = rate * content as f64 / total as f64;
    if raw > 1.0 {
        log::warn!(
            "content words are {:.1}% of the corpus; masking all of them reaches only {:.2}% overall",
            100.0 * content as f64 / total as f64,
            100.0 * achieved_overall
        );
    }
    Ok(ContentRate {
        rate,
        capped: raw > 1.0,
        achieved_overall,
    })
}

/// Indices of the words whose audio is masked in this visit.
pub fn select_mask_targets(
    align: &WordAlignment,
    plan: &MaskPlan,
    stoplist: &Stoplist,
    rng: &mut Rng,
) -> Result<BTreeSet<usize>> {
    plan.validate()?;
    let mut out = BTreeSet::new();
    for (i, e) in align.entries.iter().enumerate() {
        let picked = match plan.strategy {
            MaskStrategy::None => false,
            MaskStrategy::Random => rng.bernoulli(plan.overall_rate),
            MaskStrategy::Content => {
                stoplist.is_content_word(&e.word)? && rng.bernoulli(plan.content_rate.unwrap_or(0.0))
            }
        };
        if picked {
            out.insert(i);
        }
    }
    Ok(out)
}
