use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::{Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};

pub const N_MELS: usize = 80;
/// 25 ms at 16 kHz.
pub const WINDOW_LENGTH: usize = 400;
/// 10 ms at 16 kHz.
pub const HOP_LENGTH: usize = 160;
pub const FFT_SIZE: usize = 512;
pub const FRAMES_PER_SECOND: usize = 100;
/// Frames in a 25 s input.
pub const FULL_CLIP_FRAMES: usize = 2500;
pub const LOG_FLOOR: f64 = 1e-10;

const N_BINS: usize = FFT_SIZE / 2 + 1;

/// `[n_frames × 80]` log-mel energies, row-major by frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub n_frames: usize,
    pub data: Vec<f64>,
}

impl Spectrogram {
    pub const FRAME_STRIDE_S: f64 = 0.010;
    pub const FRAME_LENGTH_S: f64 = 0.025;

    pub fn new(n_frames: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_frames * N_MELS {
            return Err(Error::contract(format!(
                "spectrogram of {n_frames} frames needs {} values, got {}",
                n_frames * N_MELS,
                data.len()
            )));
        }
        Ok(Spectrogram { n_frames, data })
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * N_MELS..(i + 1) * N_MELS]
    }

    pub fn at(&self, frame: usize, bin: usize) -> f64 {
        self.data[frame * N_MELS + bin]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Hamming-windowed STFT followed by an HTK-scale triangular mel filterbank.
#[derive(Clone)]
pub struct MelExtractor {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    /// `[N_MELS][N_BINS]` triangular weights.
    filters: Vec<Vec<f64>>,
    centers_hz: Vec<f64>,
}

impl std::fmt::Debug for MelExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MelExtractor").finish_non_exhaustive()
    }
}

impl Default for MelExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl MelExtractor {
    pub fn new() -> Self {
        let fft = FftPlanner::new().plan_fft_forward(FFT_SIZE);
        // symmetric Hamming
        let window = (0..WINDOW_LENGTH)
            .map(|n| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (WINDOW_LENGTH - 1) as f64).cos())
            .collect();
        let nyquist = SAMPLE_RATE as f64 / 2.0;
        let top = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..N_MELS + 2)
            .map(|i| mel_to_hz(top * i as f64 / (N_MELS + 1) as f64))
            .collect();
        let bin_hz = |k: usize| k as f64 * SAMPLE_RATE as f64 / FFT_SIZE as f64;
        let filters = (0..N_MELS)
            .map(|m| {
                let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..N_BINS)
                    .map(|k| {
                        let f = bin_hz(k);
                        if f > lo && f <= c {
                            (f - lo) / (c - lo)
                        } else if f > c && f < hi {
                            (hi - f) / (hi - c)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        MelExtractor {
            fft,
            window,
            filters,
            centers_hz: edges[1..=N_MELS].to_vec(),
        }
    }

    /// Centre frequency of each mel filter in Hz.
    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    /// Log-mel features padded with the silence floor, or truncated, to
    /// exactly `n_frames` frames.
    pub fn compute(&self, w: &Waveform, n_frames: usize) -> Result<Spectrogram> {
        if w.is_empty() {
            return Err(Error::input("empty waveform"));
        }
        if n_frames == 0 {
            return Err(Error::contract("spectrogram needs at least one frame"));
        }
        let n = w.len();
        let available = if n >= WINDOW_LENGTH {
            1 + (n - WINDOW_LENGTH) / HOP_LENGTH
        } else {
            1
        };
        let computed = available.min(n_frames);
        let floor = LOG_FLOOR.ln();
        let mut data = vec![floor; n_frames * N_MELS];
        let mut buf = vec![Complex::new(0.0, 0.0); FFT_SIZE];
        let mut power = vec![0.0; N_BINS];
        for f in 0..computed {
            let start = f * HOP_LENGTH;
            for (i, b) in buf.iter_mut().enumerate() {
                let x = if i < WINDOW_LENGTH {
                    w.samples.get(start + i).copied().unwrap_or(0.0) * self.window[i]
                } else {
                    0.0
                };
                *b = Complex::new(x, 0.0);
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf[..N_BINS]) {
                *p = c.norm_sqr();
            }
            let row = &mut data[f * N_MELS..(f + 1) * N_MELS];
            for (out, filt) in row.iter_mut().zip(&self.filters) {
                let e: f64 = filt.iter().zip(&power).map(|(a, b)| a * b).sum();
                *out = (e + LOG_FLOOR).ln();
            }
        }
        Spectrogram::new(n_frames, data)
    }
}

/// 80-bin log-mel spectrogram of a 25 s clip: `[2500 × 80]`.
pub fn log_mel_spectrogram(w: &Waveform) -> Result<Spectrogram> {
    MelExtractor::new().compute(w, FULL_CLIP_FRAMES)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, seconds: f64) -> Waveform {
        let n = (seconds * SAMPLE_RATE as f64) as usize;
        Waveform::from_samples(
            (0..n)
                .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / SAMPLE_RATE as f64).sin())
                .collect(),
        )
    }

    #[test]
    fn twenty_five_seconds_gives_full_shape() {
        let w = tone(440.0, 25.0);
        let s = log_mel_spectrogram(&w).unwrap();
        assert_eq!(s.n_frames, 2500);
        assert_eq!(s.data.len(), 2500 * 80);
    }

    #[test]
    fn silence_is_constant_floor() {
        let s = log_mel_spectrogram(&Waveform::from_samples(vec![0.0; 16000])).unwrap();
        let floor = LOG_FLOOR.ln();
        assert!(s.data.iter().all(|&v| v == floor));
    }

    #[test]
    fn empty_waveform_is_an_input_error() {
        assert!(matches!(
            log_mel_spectrogram(&Waveform::from_samples(vec![])),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn pure_tone_peaks_at_nearest_filter() {
        let ex = MelExtractor::new();
        let expected = ex
            .centers_hz()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().total_cmp(&(b.1 - 1000.0).abs()))
            .unwrap()
            .0;
        let s = ex.compute(&tone(1000.0, 1.0), 98).unwrap();
        for f in 0..98 {
            let row = s.frame(f);
            let argmax = (0..N_MELS).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(argmax, expected, "frame {f}");
        }
    }

    #[test]
    fn filterbank_spans_zero_to_nyquist() {
        let ex = MelExtractor::new();
        let c = ex.centers_hz();
        assert_eq!(c.len(), 80);
        assert!(c.windows(2).all(|p| p[1] > p[0]));
        assert!(c[0] > 0.0 && c[79] < 8000.0);
    }

    #[test]
    fn short_clip_pads_with_floor() {
        let s = MelExtractor::new().compute(&tone(500.0, 0.05), 10).unwrap();
        // 800 samples yield 3 analysed frames
        assert!(s.frame(2).iter().any(|&v| v > LOG_FLOOR.ln()));
        assert!(s.frame(3).iter().all(|&v| v == LOG_FLOOR.ln()));
    }
}
