use std::path::Path;

use crate::audio::Waveform;
use crate::error::{Error, Result};

/// Reads a mono 16 kHz WAV file (16-bit PCM or 32-bit float).
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let bad = |msg: String| Error::input(format!("{}: {msg}", path.display()));
    let mut reader = hound::WavReader::open(path).map_err(|e| bad(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(bad(format!("expected mono audio, got {} channels", spec.channels)));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?,
        (fmt, bits) => return Err(bad(format!("unsupported sample format {fmt:?} {bits}-bit"))),
    };
    Waveform::new(samples, spec.sample_rate).map_err(|e| bad(e.to_string()))
}

/// Writes 16-bit PCM; samples are clamped to `[-1, 1]`.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let err = |e: hound::Error| Error::input(format!("{}: {e}", path.display()));
    let mut writer = hound::WavWriter::create(path, spec).map_err(err)?;
    for &x in &w.samples {
        let v = (x.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(err)?;
    }
    writer.finalize().map_err(err)
}

/// Raw little-endian f32 samples; the sample count is stored as decimal text
/// in a sidecar file `<path>.len`.
fn read_raw_f32(path: &Path) -> Result<Waveform> {
    let sidecar = {
        let mut s = path.as_os_str().to_owned();
        s.push(".len");
        std::path::PathBuf::from(s)
    };
    let len_text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let n: usize = len_text
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("{}: not a sample count", sidecar.display())))?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != n * 4 {
        return Err(Error::input(format!(
            "{}: {} bytes but sidecar declares {n} samples",
            path.display(),
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(Waveform::from_samples(samples))
}

/// Loads `.wav` files or raw `.f32`/`.raw` sample dumps.
pub fn load_audio(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("f32") | Some("raw") => read_raw_f32(path),
        _ => read_wav(path),
    }
}
