//! Pre-decoded clip sources.
//!
//! Two on-disk forms are accepted:
//!
//! - a directory of numbered `.png`/`.ppm` frames (sorted by file name) with a
//!   `fps.txt` sidecar holding the frame rate as decimal text;
//! - a raw clip file: magic `AVTRFRMS`, then little-endian `u32` frame count,
//!   `u32` height, `u32` width, `f64` fps, followed by
//!   `count × height × width × 3` `f32` RGB values in `[0, 1]`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::video::FrameStack;

/// Spacing of the two sampled frames (2.5 fps).
pub const FRAME_GAP_S: f64 = 0.4;
const RAW_MAGIC: &[u8; 8] = b"AVTRFRMS";

/// An RGB image with values in `[0, 1]`, stored `[height][width][3]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height * 3 {
            return Err(Error::input(format!(
                "image {width}x{height} needs {} values, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Image { width, height, data }
    }

    fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * 3 + c]
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centres at
    /// integers), clamped at the borders.
    pub fn sample(&self, y: f64, x: f64, c: usize) -> f64 {
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let (y0, x0) = (y.floor() as usize, x.floor() as usize);
        let (y1, x1) = ((y0 + 1).min(self.height - 1), (x0 + 1).min(self.width - 1));
        let (fy, fx) = (y - y0 as f64, x - x0 as f64);
        if fy == 0.0 && fx == 0.0 {
            return self.at(y0, x0, c);
        }
        let top = self.at(y0, x0, c) * (1.0 - fx) + self.at(y0, x1, c) * fx;
        let bottom = self.at(y1, x0, c) * (1.0 - fx) + self.at(y1, x1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// The square window `[y0, y0 + side) × [x0, x0 + side)` resampled to
    /// `size × size`.
    pub fn crop_resize(&self, y0: f64, x0: f64, side_y: f64, side_x: f64, size: usize, out: &mut Vec<f64>) {
        let (sy, sx) = (side_y / size as f64, side_x / size as f64);
        for oy in 0..size {
            let y = y0 + (oy as f64 + 0.5) * sy - 0.5;
            for ox in 0..size {
                let x = x0 + (ox as f64 + 0.5) * sx - 0.5;
                for c in 0..3 {
                    out.push(self.sample(y, x, c));
                }
            }
        }
    }
}

/// Decoded frames of one video at a fixed frame rate.
#[derive(Clone, Debug)]
pub struct Clip {
    pub frames: Vec<Image>,
    pub fps: f64,
}

impl Clip {
    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    fn nearest(&self, t: f64) -> usize {
        ((t * self.fps).round().max(0.0) as usize).min(self.frames.len() - 1)
    }
}

fn read_image(path: &Path) -> Result<Image> {
    let img = image::open(path)
        .map_err(|e| Error::input(format!("{}: {e}", path.display())))?
        .to_rgb32f();
    let (w, h) = img.dimensions();
    Image::new(w as usize, h as usize, img.into_raw().into_iter().map(f64::from).collect())
}

fn read_raw(path: &Path) -> Result<Clip> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::input(format!("{}: {m}", path.display()));
    if bytes.len() < 28 || &bytes[..8] != RAW_MAGIC {
        return Err(bad("not a raw clip file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (n, h, w) = (u32_at(8), u32_at(12), u32_at(16));
    let fps = f64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
    let per = h * w * 3;
    if bytes.len() != 28 + n * per * 4 {
        return Err(bad("size does not match header"));
    }
    let vals: Vec<f64> = bytes[28..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
        .collect();
    let frames = vals
        .chunks(per.max(1))
        .take(n)
        .map(|c| Image::new(w, h, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Clip { frames, fps })
}

pub fn write_raw_clip(path: impl AsRef<Path>, clip: &Clip) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = clip.frames.first().map_or((0, 0), |f| (f.height, f.width));
    let mut buf = Vec::new();
    buf.extend_from_slice(RAW_MAGIC);
    for v in [clip.frames.len(), h, w] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    buf.extend_from_slice(&clip.fps.to_le_bytes());
    for f in &clip.frames {
        if (f.height, f.width) != (h, w) {
            return Err(Error::input("clip frames differ in size"));
        }
        for v in &f.data {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

/// Loads a frame directory or a raw clip file.
pub fn load_clip(path: impl AsRef<Path>) -> Result<Clip> {
    let path = path.as_ref();
    if !path.is_dir() {
        return read_raw(path);
    }
    let fps_path = path.join("fps.txt");
    let fps: f64 = std::fs::read_to_string(&fps_path)
        .map_err(|e| Error::io(&fps_path, e))?
        .trim()
        .parse()
        .map_err(|_| Error::input(format!("{}: not a frame rate", fps_path.display())))?;
    if !(fps > 0.0) {
        return Err(Error::input(format!("{}: frame rate must be positive", fps_path.display())));
    }
    let mut paths: Vec<_> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
        })
        .collect();
    paths.sort();
    let frames = paths.iter().map(|p| read_image(p)).collect::<Result<Vec<_>>>()?;
    Ok(Clip { frames, fps })
}

/// Two frames 0.4 s apart from a uniformly drawn offset, resized to
/// `size × size`. A single-frame clip yields the same frame twice.
pub fn sample_frames(clip: &Clip, size: usize, rng: &mut Rng) -> Result<FrameStack> {
    if clip.frames.is_empty() {
        return Err(Error::input("clip has no frames"));
    }
    let latest = (clip.duration_s() - FRAME_GAP_S).max(0.0);
    let t0 = rng.uniform() * latest;
    let times = [t0, t0 + FRAME_GAP_S];
    let mut data = Vec::with_capacity(2 * size * size * 3);
    for t in times {
        let img = &clip.frames[clip.nearest(t)];
        img.crop_resize(0.0, 0.0, img.height as f64, img.width as f64, size, &mut data);
    }
    FrameStack::new(size, data, times)
}
