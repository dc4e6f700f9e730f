//! Named-tensor checkpoint files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "AVTRCKPT"
//! version    u32      1
//! count      u32      number of tensors
//! table      count ×  { name_len u32, name utf-8 bytes, rank u32, dims rank × u64 }
//! data       for each table entry in order: product(dims) × f64
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"AVTRCKPT";
const VERSION: u32 = 1;

pub fn write_checkpoint(path: impl AsRef<Path>, tensors: &BTreeMap<String, Tensor>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
    }
    for t in tensors.values() {
        for x in t.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::input(format!(
                "{}: truncated checkpoint at byte {}",
                self.path.display(),
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<BTreeMap<String, Tensor>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if c.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::input(format!("{}: not a checkpoint file", path.display())));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::input(format!(
            "{}: unsupported checkpoint version {version}",
            path.display()
        )));
    }
    let count = c.u32()? as usize;
    let mut table = Vec::with_capacity(count);
    for _ in 0..count {
        let n = c.u32()? as usize;
        let name = String::from_utf8(c.take(n)?.to_vec())
            .map_err(|_| Error::input(format!("{}: tensor name is not utf-8", path.display())))?;
        let rank = c.u32()? as usize;
        let dims = (0..rank).map(|_| c.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        table.push((name, dims));
    }
    let mut out = BTreeMap::new();
    for (name, dims) in table {
        let n: usize = dims.iter().product();
        let raw = c.take(n * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        if out.insert(name.clone(), Tensor::new(dims, data)?).is_some() {
            return Err(Error::input(format!("{}: duplicate tensor {name}", path.display())));
        }
    }
    if c.pos != bytes.len() {
        return Err(Error::input(format!("{}: trailing bytes after tensor data", path.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn round_trip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        let mut rng = Rng::new(1);
        let mut m = BTreeMap::new();
        m.insert("a.w".to_string(), Tensor::randn(&[3, 4], 1.0, &mut rng));
        m.insert("b".to_string(), Tensor::scalar(-0.0));
        write_checkpoint(&p, &m).unwrap();
        let back = read_checkpoint(&p).unwrap();
        assert_eq!(m.len(), back.len());
        for (k, v) in &m {
            let w = &back[k];
            assert_eq!(v.shape(), w.shape());
            for (x, y) in v.data().iter().zip(w.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        let mut m = BTreeMap::new();
        m.insert("w".to_string(), Tensor::zeros(&[10]));
        write_checkpoint(&p, &m).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_checkpoint(&p).is_err());
    }
}
