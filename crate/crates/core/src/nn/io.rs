//! Binary weight files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `PVNW` |
//! | 2     | format version (`1`) |
//! | 1     | scalar width in bytes (4 or 8) |
//! | 1     | head (0 linear, 1 softmax) |
//! | 1     | hidden activation (0 rectifier) |
//! | 4     | number of layer dimensions `d` |
//! | 4·d   | layer dimensions, input first |
//! | 8     | parameter count `p` |
//! | w·p   | parameters, little-endian, per layer: weights `(fan_in, fan_out)` row-major, then biases |

use std::fs;
use std::path::Path;

use super::{param_count, DenseNet, Head};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::scalar::Real;

pub const WEIGHT_MAGIC: [u8; 4] = *b"PVNW";
pub const WEIGHT_VERSION: u16 = 1;

pub fn encode<T: Real>(net: &DenseNet<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + net.num_params() * T::WIDTH as usize);
    out.extend_from_slice(&WEIGHT_MAGIC);
    out.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
    out.push(T::WIDTH);
    out.push(match net.head {
        Head::Linear => 0,
        Head::Softmax => 1,
    });
    out.push(0);
    out.extend_from_slice(&(net.dims.len() as u32).to_le_bytes());
    for &d in &net.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(net.params.len() as u64).to_le_bytes());
    for &p in &net.params {
        out.extend_from_slice(&p.to_le_vec());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.buf.len() - self.pos < n {
            return Err(format!("truncated at byte {}", self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> std::result::Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode<T: Real>(bytes: &[u8]) -> std::result::Result<DenseNet<T>, String> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != WEIGHT_MAGIC {
        return Err("bad magic header".into());
    }
    let version = r.u16()?;
    if version != WEIGHT_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let width = r.u8()?;
    if width != T::WIDTH {
        return Err(format!(
            "scalar width {width} does not match the requested {}-byte type",
            T::WIDTH
        ));
    }
    let head = match r.u8()? {
        0 => Head::Linear,
        1 => Head::Softmax,
        h => return Err(format!("unknown head {h}")),
    };
    match r.u8()? {
        0 => {}
        a => return Err(format!("unknown activation {a}")),
    }
    let n_dims = r.u32()? as usize;
    if !(2..=64).contains(&n_dims) {
        return Err(format!("implausible layer count {n_dims}"));
    }
    let dims = (0..n_dims)
        .map(|_| r.u32().map(|d| d as usize))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let count = r.u64()? as usize;
    if dims.contains(&0) || count != param_count(&dims) {
        return Err(format!("parameter count {count} inconsistent with dims {dims:?}"));
    }
    let w = width as usize;
    let payload = r.take(count.checked_mul(w).ok_or("parameter count overflow")?)?;
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    let params = payload.chunks_exact(w).map(T::from_le_slice).collect();
    DenseNet::from_parts(&dims, head, params).map_err(|e| e.to_string())
}

pub fn save_weights<T: Real>(net: &DenseNet<T>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode(net))
}

pub fn load_weights<T: Real>(path: impl AsRef<Path>) -> Result<DenseNet<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::WeightFile {
        path: path.to_path_buf(),
        reason,
    })
}
