use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, Waveform};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Number of chunks removed by burst packet loss.
pub const BURST_CHUNKS: usize = 2;
/// Upper bound of a burst chunk as a fraction of the clip duration.
pub const MAX_BURST_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Clean,
    Burst,
    Environment,
    Mixed,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [NoiseKind::Clean, NoiseKind::Burst, NoiseKind::Environment, NoiseKind::Mixed];

    pub fn needs_bank(self) -> bool {
        matches!(self, NoiseKind::Environment | NoiseKind::Mixed)
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Clean => "clean",
            NoiseKind::Burst => "burst",
            NoiseKind::Environment => "environment",
            NoiseKind::Mixed => "mixed",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clean" => Ok(NoiseKind::Clean),
            "burst" => Ok(NoiseKind::Burst),
            "environment" => Ok(NoiseKind::Environment),
            "mixed" => Ok(NoiseKind::Mixed),
            other => Err(Error::config(format!(
                "unknown noise kind {other:?} (expected clean, burst, environment or mixed)"
            ))),
        }
    }
}

/// A simulated evaluation degradation.
#[derive(Clone, Debug)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub noise_bank: Arc<Vec<Waveform>>,
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        NoiseSpec {
            kind: NoiseKind::Clean,
            noise_bank: Arc::new(Vec::new()),
            snr_db: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.needs_bank() && self.noise_bank.is_empty() {
            return Err(Error::config(format!(
                "{} noise needs a non-empty noise bank",
                self.kind
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db must be finite"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        NoiseSpec { seed, ..self.clone() }
    }
}

/// Half-open sample range `[start, end)` that was zeroed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstInterval {
    pub start: usize,
    pub end: usize,
}

/// Random draws made by one degradation, for logging and pairing checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrace {
    pub bursts: Vec<BurstInterval>,
    pub noise_index: Option<usize>,
    pub noise_offset: Option<usize>,
    pub gain: Option<f64>,
}

/// Drops two chunks whose lengths are independently `U(0, 0.1]` of the clip.
///
/// Chunks are placed uniformly among placements where they are disjoint and
/// separated by at least one untouched sample, so the output always has two
/// distinct zeroed runs with exactly the sampled lengths.
fn burst(samples: &mut [f64], rng: &mut Rng) -> Result<Vec<BurstInterval>> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::input(format!("clip of {n} samples is too short for burst loss")));
    }
    let max_len = MAX_BURST_FRACTION * n as f64;
    let lens: Vec<usize> = (0..BURST_CHUNKS)
        .map(|_| ((rng.uniform_open_closed() * max_len).round() as usize).max(1))
        .collect();
    let free = n - lens.iter().sum::<usize>() - 1;
    let (a, b) = (rng.int_inclusive(0, free), rng.int_inclusive(0, free));
    let (lo, hi) = (a.min(b), a.max(b));
    let first = rng.below(2);
    let (l1, l2) = (lens[first], lens[1 - first]);
    let s1 = lo;
    let s2 = s1 + l1 + (hi - lo) + 1;
    let intervals = vec![
        BurstInterval { start: s1, end: s1 + l1 },
        BurstInterval { start: s2, end: s2 + l2 },
    ];
    for iv in &intervals {
        samples[iv.start..iv.end].fill(0.0);
    }
    Ok(intervals)
}

/// Adds a bank clip, looped from a random offset, scaled to the target SNR
/// relative to the current signal power.
fn environment(samples: &mut [f64], spec: &NoiseSpec, rng: &mut Rng, trace: &mut NoiseTrace) -> Result<()> {
    let idx = rng.below(spec.noise_bank.len());
    let noise = &spec.noise_bank[idx].samples;
    if noise.is_empty() {
        return Err(Error::config(format!("noise bank clip {idx} is empty")));
    }
    let offset = rng.below(noise.len());
    let looped: Vec<f64> = (0..samples.len()).map(|i| noise[(offset + i) % noise.len()]).collect();
    let n = samples.len().max(1) as f64;
    let p_signal = samples.iter().map(|x| x * x).sum::<f64>() / n;
    let p_noise = looped.iter().map(|x| x * x).sum::<f64>() / n;
    if p_noise == 0.0 {
        return Err(Error::config(format!("noise bank clip {idx} is silent")));
    }
    let gain = (p_signal / (p_noise * 10f64.powf(spec.snr_db / 10.0))).sqrt();
    for (x, v) in samples.iter_mut().zip(&looped) {
        *x += gain * v;
    }
    trace.noise_index = Some(idx);
    trace.noise_offset = Some(offset);
    trace.gain = Some(gain);
    Ok(())
}

/// Applies `spec` and reports the random draws it made.
pub fn degrade(w: &Waveform, spec: &NoiseSpec) -> Result<(Waveform, NoiseTrace)> {
    spec.validate()?;
    let mut out = w.clone();
    let mut trace = NoiseTrace::default();
    let mut rng = Rng::new(spec.seed);
    match spec.kind {
        NoiseKind::Clean => {}
        NoiseKind::Burst => trace.bursts = burst(&mut out.samples, &mut rng)?,
        NoiseKind::Environment => environment(&mut out.samples, spec, &mut rng, &mut trace)?,
        NoiseKind::Mixed => {
            trace.bursts = burst(&mut out.samples, &mut rng)?;
            environment(&mut out.samples, spec, &mut rng, &mut trace)?;
        }
    }
    Ok((out, trace))
}

pub fn apply_noise(w: &Waveform, spec: &NoiseSpec) -> Result<Waveform> {
    degrade(w, spec).map(|(w, _)| w)
}

/// Every `.wav` file in `dir`, in file-name order.
pub fn load_noise_bank(dir: impl AsRef<Path>) -> Result<Vec<Waveform>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::config(format!("noise bank {} contains no .wav files", dir.display())));
    }
    paths.iter().map(read_wav).collect()
}
