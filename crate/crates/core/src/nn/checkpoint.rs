//! Checkpoint layout, all integers little-endian:
//!
//! ```text
//! b"MCKP" | u32 version | u32 config_len | config JSON bytes
//! u32 n_tensors
//! per tensor: u32 name_len | name UTF-8 | u32 ndim | u64 dims... | f32 data (row-major)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::params::{ParamSet, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Config JSON plus named weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: serde_json::Value,
    pub params: ParamSet,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn write_checkpoint(path: impl AsRef<Path>, config: &serde_json::Value, params: &ParamSet) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    let config = serde_json::to_vec(config)?;
    put_u32(&mut out, config.len() as u32);
    out.extend_from_slice(&config);
    put_u32(&mut out, params.len() as u32);
    for (name, t) in params.iter() {
        put_u32(&mut out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, t.shape.len() as u32);
        for d in &t.shape {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for x in &t.data {
            out.extend_from_slice(&(*x as f32).to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Data("truncated checkpoint".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Data(format!("{} is not a checkpoint", path.display())));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {version}")));
    }
    let config_len = c.u32()? as usize;
    let config = serde_json::from_slice(c.take(config_len)?)?;
    let n = c.u32()?;
    let mut params = ParamSet::new();
    for _ in 0..n {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::Data("tensor name is not UTF-8".into()))?
            .to_string();
        let ndim = c.u32()? as usize;
        let shape = (0..ndim).map(|_| c.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let numel: usize = shape.iter().product();
        let raw = c.take(numel * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        params.insert(name, Tensor::from_vec(&shape, data)?);
    }
    if c.pos != buf.len() {
        return Err(Error::Data("trailing bytes after checkpoint tensors".into()));
    }
    Ok(Checkpoint { config, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_at_f32_precision() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("m.ckpt");
        let mut p = ParamSet::new();
        p.insert("emb", Tensor::from_vec(&[2, 3], vec![0.1, -0.2, 0.3, 1.0, 2.0, 3.0]).unwrap());
        p.insert("bias", Tensor::from_vec(&[1], vec![0.5]).unwrap());
        let cfg = serde_json::json!({"kind": "test", "dim": 3});
        write_checkpoint(&path, &cfg, &p).unwrap();
        let ck = read_checkpoint(&path).unwrap();
        assert_eq!(ck.config, cfg);
        assert_eq!(ck.params.names(), p.names());
        for ((_, a), (_, b)) in ck.params.iter().zip(p.iter()) {
            assert_eq!(a.shape, b.shape);
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
    }

    #[test]
    fn rejects_foreign_files() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("x");
        std::fs::write(&path, b"hello world").unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Data(_))));
        assert!(matches!(read_checkpoint(tmp.path().join("none")), Err(Error::MissingFile(_))));
    }
}
