//! Flat binary checkpoint.
//!
//! ```text
//! magic        8 bytes   "HDALABCK"
//! version      u32       1
//! name_len     u32
//! name         name_len bytes of UTF-8 (e.g. "mini_vgg")
//! num_classes  u32
//! input        3 × u32   channels, height, width
//! tensors      u32       tensor count
//! per tensor, in declaration order:
//!   rank       u32
//!   dims       rank × u32
//!   values     product(dims) × f32
//! ```
//!
//! Every integer and float is little-endian.

use std::io::{Read, Write};

use super::layers::Shape3;
use super::network::{build_model_for, ModelName, ModelSpec};
use super::params::Parameters;
use super::real::Real;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HDALABCK";
const VERSION: u32 = 1;

pub fn write_checkpoint<T: Real, W: Write>(spec: &ModelSpec, params: &Parameters<T>, mut out: W) -> std::io::Result<()> {
    let u32le = |v: usize| (v as u32).to_le_bytes();
    let mut buf = Vec::with_capacity(64 + params.num_scalars() * 4);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let name = spec.name.as_str().as_bytes();
    buf.extend_from_slice(&u32le(name.len()));
    buf.extend_from_slice(name);
    buf.extend_from_slice(&u32le(spec.num_classes));
    let input = spec.input_shape();
    for d in [input.channels, input.height, input.width] {
        buf.extend_from_slice(&u32le(d));
    }
    buf.extend_from_slice(&u32le(params.tensors().len()));
    for t in params.tensors() {
        buf.extend_from_slice(&u32le(t.shape.len()));
        for &d in &t.shape {
            buf.extend_from_slice(&u32le(d));
        }
        for &v in &t.data {
            buf.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    out.flush()
}

/// Reads a checkpoint and rebuilds its model. Tensor shapes must match the
/// architecture named in the header.
pub fn read_checkpoint<R: Read>(mut input: R) -> Result<(ModelSpec, Parameters<f32>)> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut r = Cursor { bytes: &bytes, pos: 0 };

    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let name_len = r.u32()? as usize;
    let name = std::str::from_utf8(r.take(name_len)?)
        .map_err(|_| Error::Checkpoint("model name is not UTF-8".into()))?;
    let name: ModelName = name.parse()?;
    let num_classes = r.u32()? as usize;
    let input_shape = Shape3::new(r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let spec = build_model_for(name, input_shape, num_classes)?;
    let mut params = Parameters::<f32>::zeros(spec.layers());

    let count = r.u32()? as usize;
    if count != params.tensors().len() {
        return Err(Error::Checkpoint(format!(
            "{name} has {} tensors, checkpoint holds {count}",
            params.tensors().len()
        )));
    }
    for t in params.tensors_mut() {
        let rank = r.u32()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims != t.shape {
            return Err(Error::Checkpoint(format!(
                "tensor {}: expected shape {:?}, found {dims:?}",
                t.name, t.shape
            )));
        }
        for v in &mut t.data {
            *v = f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok((spec, params))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
