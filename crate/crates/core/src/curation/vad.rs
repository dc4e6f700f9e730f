use crate::audio::Waveform;

/// Voice activity detection: voiced spans in seconds, sorted and disjoint.
pub trait Vad: Sync {
    fn segments(&self, w: &Waveform) -> Vec<(f64, f64)>;
}

/// Frame-RMS threshold detector. A segment ends once at least
/// `min_silence_s` of consecutive frames fall below the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyVad {
    pub frame_s: f64,
    pub threshold_rms: f64,
    pub min_silence_s: f64,
}

impl Default for EnergyVad {
    fn default() -> Self {
        EnergyVad {
            frame_s: 0.02,
            threshold_rms: 0.02,
            min_silence_s: 0.3,
        }
    }
}

impl Vad for EnergyVad {
    fn segments(&self, w: &Waveform) -> Vec<(f64, f64)> {
        let frame = ((self.frame_s * w.sample_rate_hz as f64).round() as usize).max(1);
        let voiced: Vec<bool> = w
            .samples
            .chunks(frame)
            .map(|c| (c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64).sqrt() >= self.threshold_rms)
            .collect();
        let min_gap = (self.min_silence_s / self.frame_s).ceil() as usize;
        let to_s = |f: usize| ((f * frame).min(w.samples.len())) as f64 / w.sample_rate_hz as f64;
        let mut out = Vec::new();
        let mut current: Option<(usize, usize)> = None;
        for (i, &v) in voiced.iter().enumerate() {
            match (v, current) {
                (true, None) => current = Some((i, i + 1)),
                (true, Some((s, _))) => current = Some((s, i + 1)),
                (false, Some((s, e))) if i + 1 - e >= min_gap => {
                    out.push((to_s(s), to_s(e)));
                    current = None;
                }
                _ => {}
            }
        }
        if let Some((s, e)) = current {
            out.push((to_s(s), to_s(e)));
        }
        out
    }
}
