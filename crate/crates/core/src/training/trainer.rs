use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::audio::mask_words;
use crate::config::ExperimentConfig;
use crate::data::{Featurizer, Utterance, Visual};
use crate::error::{Error, Result};
use crate::model::{loss_and_grads, Example, Params};
use crate::numerics::{Rng, Tensor};
use crate::text::Stoplist;
use crate::training::{select_mask_targets, MaskPlan, MaskStrategy, Momentum};

const EPOCH_STREAM: u64 = 1;
const EXAMPLE_STREAM: u64 = 2;

/// Everything the loop needs besides the parameters.
pub struct TrainSetup<'a> {
    pub exp: &'a ExperimentConfig,
    pub featurizer: &'a Featurizer,
    pub plan: MaskPlan,
    pub stoplist: &'a Stoplist,
    pub data: &'a [Utterance],
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub iter: usize,
    /// Mean batch loss before the update.
    pub loss: f64,
    pub lr: f64,
}

impl IterationLog {
    /// `iter<TAB>loss<TAB>lr`.
    pub fn line(&self) -> String {
        format!("{}\t{:.9}\t{:.9}", self.iter, self.loss, self.lr)
    }
}

/// Manifest positions for one batch. Batches walk through per-epoch seeded
/// permutations of the data, so every utterance is visited once per epoch.
pub fn batch_indices(seed: u64, iter: usize, batch: usize, n: usize) -> Vec<usize> {
    let mut perms: HashMap<usize, Vec<usize>> = HashMap::new();
    (0..batch)
        .map(|k| {
            let pos = iter * batch + k;
            let perm = perms.entry(pos / n).or_insert_with(|| {
                let mut p: Vec<usize> = (0..n).collect();
                Rng::derive(seed, &[EPOCH_STREAM, (pos / n) as u64]).shuffle(&mut p);
                p
            });
            perm[pos % n]
        })
        .collect()
}

impl TrainSetup<'_> {
    fn check(&self) -> Result<Vec<Vec<u32>>> {
        if self.data.is_empty() {
            return Err(Error::config("training manifest is empty"));
        }
        self.plan.validate()?;
        let model = &self.featurizer.model;
        for u in self.data {
            if self.plan.strategy != MaskStrategy::None && u.alignment.is_none() {
                return Err(Error::config(format!(
                    "{} masking needs word alignments; entry {} has none",
                    self.plan.strategy, u.id
                )));
            }
            if !model.audio_only && u.clip.is_none() {
                return Err(Error::config(format!(
                    "audio-visual training needs frames; entry {} has none",
                    u.id
                )));
            }
        }
        self.data.iter().map(|u| self.featurizer.target(&u.transcript)).collect()
    }

    fn example(&self, u: &Utterance, target: &[u32], rng: &mut Rng) -> Result<Example> {
        let masked;
        let mut wave = &u.waveform;
        if let (Some(align), true) = (&u.alignment, self.plan.strategy != MaskStrategy::None) {
            let targets = select_mask_targets(align, &self.plan, self.stoplist, rng)?;
            if !targets.is_empty() {
                masked = mask_words(wave, align, &targets)?;
                wave = &masked;
            }
        }
        let audio = self.featurizer.audio_tokens(wave, Some(rng))?;
        let visual = u.clip.as_ref().map_or(Visual::Blank, Visual::Clip);
        let video = self.featurizer.video_tokens(visual, rng, self.exp.video_augment)?;
        Ok(Example {
            audio,
            video,
            target: target.to_vec(),
        })
    }
}

/// Rescales all gradients together so their joint L2 norm is at most `max_norm`.
pub fn clip_global_norm(grads: &mut BTreeMap<String, Tensor>, max_norm: f64) -> f64 {
    let norm = grads
        .values()
        .flat_map(|g| g.data())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if max_norm > 0.0 && norm > max_norm {
        for g in grads.values_mut() {
            g.scale_in_place(max_norm / norm);
        }
    }
    norm
}

/// Runs `exp.iterations` optimizer steps, calling `on_iter` after each.
///
/// Examples of a batch are prepared and differentiated in parallel on the
/// current rayon pool; gradients are summed in batch order, so results do
/// not depend on the number of threads.
pub fn train(
    setup: &TrainSetup<'_>,
    mut params: Params,
    mut on_iter: impl FnMut(&IterationLog, &Params) -> Result<()>,
) -> Result<Params> {
    let exp = setup.exp;
    let schedule = exp.schedule();
    schedule.validate()?;
    params.validate(&setup.featurizer.model)?;
    let targets = setup.check()?;
    let mut opt = Momentum::default();
    for iter in 0..exp.iterations {
        let idx = batch_indices(exp.seed, iter, exp.batch_size, setup.data.len());
        let results: Vec<Result<(f64, BTreeMap<String, Tensor>)>> = idx
            .par_iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut rng = Rng::derive(exp.seed, &[EXAMPLE_STREAM, iter as u64, k as u64]);
                let ex = setup.example(&setup.data[i], &targets[i], &mut rng)?;
                loss_and_grads(&params, &setup.featurizer.model, &ex)
            })
            .collect();
        let mut loss = 0.0;
        let mut total: Option<BTreeMap<String, Tensor>> = None;
        for r in results {
            let (l, g) = r?;
            loss += l;
            match &mut total {
                None => total = Some(g),
                Some(t) => {
                    for (name, gv) in g {
                        t.get_mut(&name).expect("same parameter set").add_assign(&gv)?;
                    }
                }
            }
        }
        let scale = 1.0 / idx.len() as f64;
        let mut grads = total.expect("non-empty batch");
        for g in grads.values_mut() {
            g.scale_in_place(scale);
        }
        clip_global_norm(&mut grads, exp.grad_clip);
        let lr = schedule.lr(iter);
        opt.step(&mut params, &grads, lr, schedule.momentum)
            .map_err(|e| Error::Numeric(format!("iteration {iter}: {e}")))?;
        on_iter(
            &IterationLog {
                iter,
                loss: loss * scale,
                lr,
            },
            &params,
        )?;
    }
    Ok(params)
}
