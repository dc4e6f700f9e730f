use std::collections::BTreeSet;

use crate::audio::Waveform;
use crate::error::{Error, Result};
use crate::text::WordAlignment;

/// Zeroes the samples spanned by each target word, `[start_s, end_s)`, with
/// both ends rounded to the nearest sample. Samples outside the targets are
/// left untouched.
pub fn mask_words(w: &Waveform, align: &WordAlignment, targets: &BTreeSet<usize>) -> Result<Waveform> {
    let mut out = w.clone();
    for &t in targets {
        let e = align.entries.get(t).ok_or_else(|| {
            Error::contract(format!("mask target {t} out of range for {} aligned words", align.len()))
        })?;
        let (a, b) = (w.index_at(e.start_s), w.index_at(e.end_s));
        out.samples[a..b].iter_mut().for_each(|x| *x = 0.0);
    }
    Ok(out)
}
