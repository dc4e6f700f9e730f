use crate::audio::{Spectrogram, N_MELS};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const PATCH_SIZE: usize = 16;
pub const PATCH_VALUES: usize = PATCH_SIZE * PATCH_SIZE;

/// Non-overlapping 16×16 spectrogram patches as a `[tokens × 256]` matrix.
///
/// Tokens are ordered time-major: token `t * 5 + m` covers frames
/// `16t..16t+16` and mel bins `16m..16m+16`. Each patch is flattened
/// frame-major. Trailing frames that do not fill a whole patch are dropped,
/// so a 2500-frame input yields `156 × 5 = 780` tokens.
pub fn patchify_audio(s: &Spectrogram) -> Result<Tensor> {
    if s.data.len() != s.n_frames * N_MELS || s.n_frames < PATCH_SIZE {
        return Err(Error::contract(format!(
            "cannot patchify a spectrogram of {} frames",
            s.n_frames
        )));
    }
    let cols = s.n_frames / PATCH_SIZE;
    let rows = N_MELS / PATCH_SIZE;
    let mut data = Vec::with_capacity(cols * rows * PATCH_VALUES);
    for t in 0..cols {
        for m in 0..rows {
            for dt in 0..PATCH_SIZE {
                let frame = s.frame(t * PATCH_SIZE + dt);
                data.extend_from_slice(&frame[m * PATCH_SIZE..(m + 1) * PATCH_SIZE]);
            }
        }
    }
    Tensor::new(vec![cols * rows, PATCH_VALUES], data)
}
