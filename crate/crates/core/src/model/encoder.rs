use crate::error::{Error, Result};
use crate::model::layers::{encoder_block, layer_norm, linear};
use crate::model::{Bound, EncoderOutput, ModelConfig, Params};
use crate::numerics::{Tape, Tensor, Var};

/// Test hook for the fused layers: records the shared bottleneck state
/// entering each fused layer and optionally replaces it.
#[derive(Debug, Default)]
pub struct BottleneckProbe {
    pub recorded: Vec<Tensor>,
    pub frozen: Option<Vec<Tensor>>,
}

fn check_tokens(name: &str, t: &Tensor, rows: usize, cols: usize) -> Result<()> {
    if t.shape() != [rows, cols] {
        return Err(Error::contract(format!(
            "{name} tokens have shape {:?}, expected [{rows}, {cols}]",
            t.shape()
        )));
    }
    Ok(())
}

fn embed<'t>(p: &Bound<'t>, tape: &'t Tape, m: &str, tokens: &Tensor) -> Result<Var<'t>> {
    let x = linear(p, &format!("{m}.embed"), tape.constant(tokens.clone()))?;
    let x = x.add(&p.get(&format!("{m}.pos"))?)?;
    tape.concat_rows(&[p.get(&format!("{m}.cls"))?, x])
}

/// Runs the encoder on `tape`, returning the rows handed to the decoder.
///
/// Layers below `fusion_layer` are independent per modality. From
/// `fusion_layer` on, each modality attends over its tokens plus the shared
/// bottlenecks, and the per-modality bottleneck outputs are averaged.
pub fn encode_on<'t>(
    tape: &'t Tape,
    p: &Bound<'t>,
    cfg: &ModelConfig,
    audio: &Tensor,
    video: Option<&Tensor>,
    mut probe: Option<&mut BottleneckProbe>,
) -> Result<Var<'t>> {
    check_tokens("audio", audio, cfg.audio_tokens, cfg.audio_patch_dim())?;
    let mut streams = vec![embed(p, tape, "audio", audio)?];
    match (cfg.audio_only, video) {
        (true, None) => {}
        (false, Some(v)) => {
            check_tokens("video", v, cfg.video_tokens, cfg.video_patch_dim())?;
            streams.push(embed(p, tape, "video", v)?);
        }
        (true, Some(_)) => return Err(Error::contract("audio-only model given video tokens")),
        (false, None) => return Err(Error::contract("audio-visual model given no video tokens")),
    }
    let names = cfg.streams();
    let nb = cfg.n_bottleneck;
    let mut z = if nb > 0 { Some(p.get("bottleneck")?) } else { None };
    let mut fused = 0;
    for l in 0..cfg.layers {
        let is_fused = l >= cfg.fusion_layer;
        if let (true, Some(zv), Some(pr)) = (is_fused, z, probe.as_deref_mut()) {
            pr.recorded.push((*zv.value()).clone());
            if let Some(frozen) = &pr.frozen {
                let t = frozen
                    .get(fused)
                    .ok_or_else(|| Error::contract("bottleneck probe has too few frozen states"))?;
                z = Some(tape.constant(t.clone()));
            }
        }
        let mut updates = Vec::new();
        for (x, m) in streams.iter_mut().zip(names) {
            let name = format!("enc.{m}.{l}");
            match (is_fused, z) {
                (true, Some(zv)) => {
                    let n = x.shape()[0];
                    let y = encoder_block(p, &name, tape.concat_rows(&[*x, zv])?, cfg.heads)?;
                    *x = y.slice_rows(0, n)?;
                    updates.push(y.slice_rows(n, nb)?);
                }
                _ => *x = encoder_block(p, &name, *x, cfg.heads)?,
            }
        }
        if let Some(first) = updates.first() {
            let mut acc = *first;
            for u in &updates[1..] {
                acc = acc.add(u)?;
            }
            z = Some(acc.scale(1.0 / updates.len() as f64));
        }
        if is_fused {
            fused += 1;
        }
    }
    let mut rows = Vec::new();
    for x in &streams {
        rows.push(match cfg.encoder_output {
            EncoderOutput::All => *x,
            EncoderOutput::Cls => x.slice_rows(0, 1)?,
        });
    }
    if let (EncoderOutput::All, Some(zv)) = (cfg.encoder_output, z) {
        rows.push(zv);
    }
    layer_norm(p, "enc.ln_f", tape.concat_rows(&rows)?)
}

/// Inference-time encoding with frozen parameters.
pub fn encode(params: &Params, cfg: &ModelConfig, audio: &Tensor, video: Option<&Tensor>) -> Result<Tensor> {
    let tape = Tape::new();
    let p = params.bind(&tape, false);
    let out = encode_on(&tape, &p, cfg, audio, video, None)?;
    Ok((*out.value()).clone())
}
