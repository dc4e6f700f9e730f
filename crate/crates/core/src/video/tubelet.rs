use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::video::FrameStack;

pub const TUBELET_SIZE: usize = 16;
pub const TUBELET_FRAMES: usize = 2;
pub const TUBELET_VALUES: usize = TUBELET_SIZE * TUBELET_SIZE * TUBELET_FRAMES * 3;

/// `16×16×2` tubelets in row-major spatial order; each token is the
/// `(y, x, frame, channel)` block flattened to 1536 values. A 224×224 stack
/// gives 14×14 = 196 tokens.
pub fn tubelet_tokenize(f: &FrameStack) -> Result<Tensor> {
    let n = f.size;
    if n % TUBELET_SIZE != 0 || f.data.len() != 2 * n * n * 3 {
        return Err(Error::contract(format!("frame stack of size {n} cannot be tokenized")));
    }
    let g = n / TUBELET_SIZE;
    let mut data = Vec::with_capacity(g * g * TUBELET_VALUES);
    for ty in 0..g {
        for tx in 0..g {
            for dy in 0..TUBELET_SIZE {
                for dx in 0..TUBELET_SIZE {
                    for fr in 0..TUBELET_FRAMES {
                        let base = f.index(fr, ty * TUBELET_SIZE + dy, tx * TUBELET_SIZE + dx, 0);
                        data.extend_from_slice(&f.data[base..base + 3]);
                    }
                }
            }
        }
    }
    Tensor::new(vec![g * g, TUBELET_VALUES], data)
}
