//! Little-endian binary layouts for tensors and model checkpoints.
//!
//! Tensor file:
//!
//! | bytes | field                         |
//! |-------|-------------------------------|
//! | 4     | magic `AMXT`                  |
//! | 4     | u32 format version (1)        |
//! | 8     | u64 rows                      |
//! | 8     | u64 cols                      |
//! | 8·r·c | f64 payload, row-major        |
//!
//! Model checkpoint:
//!
//! | bytes | field                                        |
//! |-------|----------------------------------------------|
//! | 4     | magic `AMXM`                                 |
//! | 4     | u32 format version (1)                       |
//! | 4     | u32 activation tag (0 identity, 1 tanh, 2 relu) |
//! | 4     | u32 output flag (0 raw, 1 sigmoid)           |
//! | 4     | u32 number of layer dims `k`                 |
//! | 8·k   | u64 layer dims, input first, last is 1       |
//! | ...   | per layer: f64 weight `d_in×d_out` row-major, then f64 bias `d_out` |
//!
//! Both layouts have no padding and end exactly after the last payload value.

use std::io::{Read, Write};
use std::path::Path;

use super::model::{Activation, DenseLayer, DiffModel};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"AMXT";
pub const MODEL_MAGIC: &[u8; 4] = b"AMXM";
pub const FORMAT_VERSION: u32 = 1;

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Format(format!("truncated while reading {what}: {e}")))
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f64>> {
    let mut raw = vec![
        0u8;
        n.checked_mul(8)
            .ok_or_else(|| Error::Format(format!("{what} too large")))?
    ];
    read_exact(r, &mut raw, what)?;
    Ok(raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    read_exact(r, &mut m, "magic")?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(r, "version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}"
        )));
    }
    Ok(())
}

fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra) {
        Ok(0) => Ok(()),
        Ok(_) => Err(Error::Format("trailing bytes after payload".into())),
        Err(e) => Err(Error::Format(e.to_string())),
    }
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * t.data().len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
    put_f64s(&mut out, t.data());
    out
}

pub fn decode_tensor(mut bytes: &[u8]) -> Result<Tensor> {
    let r = &mut bytes;
    expect_magic(r, TENSOR_MAGIC)?;
    let rows = read_u64(r, "rows")? as usize;
    let cols = read_u64(r, "cols")? as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("tensor dims overflow".into()))?;
    if r.len() != n * 8 {
        return Err(Error::Format(format!(
            "payload has {} bytes, {rows}x{cols} needs {}",
            r.len(),
            n * 8
        )));
    }
    let data = read_f64s(r, n, "tensor payload")?;
    Tensor::from_vec(rows, cols, data)
}

pub fn encode_model(m: &DiffModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&m.activation().tag().to_le_bytes());
    out.extend_from_slice(&u32::from(m.sigmoid_output()).to_le_bytes());
    out.extend_from_slice(&(m.layer_dims().len() as u32).to_le_bytes());
    for &d in m.layer_dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for layer in m.layers() {
        put_f64s(&mut out, layer.weight.data());
        put_f64s(&mut out, layer.bias.data());
    }
    out
}

pub fn decode_model(mut bytes: &[u8]) -> Result<DiffModel> {
    let r = &mut bytes;
    expect_magic(r, MODEL_MAGIC)?;
    let tag = read_u32(r, "activation tag")?;
    let activation = Activation::from_tag(tag)
        .ok_or_else(|| Error::Format(format!("unknown activation tag {tag}")))?;
    let sigmoid = match read_u32(r, "output flag")? {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("unknown output flag {other}"))),
    };
    let k = read_u32(r, "dim count")? as usize;
    if !(2..=1024).contains(&k) {
        return Err(Error::Format(format!("implausible layer count {k}")));
    }
    let dims = (0..k)
        .map(|_| read_u64(r, "layer dim").map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(k - 1);
    for w in dims.windows(2) {
        let weight = Tensor::from_vec(w[0], w[1], read_f64s(r, w[0] * w[1], "weights")?)?;
        let bias = Tensor::from_vec(1, w[1], read_f64s(r, w[1], "bias")?)?;
        layers.push(DenseLayer { weight, bias });
    }
    expect_eof(r)?;
    DiffModel::from_layers(layers, activation, sigmoid).map_err(|e| Error::Format(e.to_string()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save_tensor(path: &Path, t: &Tensor) -> Result<()> {
    write_atomic(path, &encode_tensor(t))
}

pub fn load_tensor(path: &Path) -> Result<Tensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}

pub fn save_model(path: &Path, m: &DiffModel) -> Result<()> {
    write_atomic(path, &encode_model(m))
}

pub fn load_model(path: &Path) -> Result<DiffModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
