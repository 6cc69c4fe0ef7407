use std::fs;
use std::path::Path;

use super::{OptimConfig, Optimizer, ParamEntry, ParamSet, Real, Tensor};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"CLCPCKPT";
const VERSION: u32 = 1;

/// Parameters, buffers, optional optimizer state and free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub params: ParamSet<T>,
    pub optimizer: Option<Optimizer<T>>,
    pub meta: serde_json::Value,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u32(out, b.len() as u32);
    out.extend_from_slice(b);
}

fn put_buf<T: Real>(out: &mut Vec<u8>, data: &[T]) {
    put_u64(out, data.len() as u64);
    for &v in data {
        v.write_le(out);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    fn buf<T: Real>(&mut self) -> Result<Vec<T>> {
        let n = self.u64()? as usize;
        let raw = self.take(n.checked_mul(T::BYTES).ok_or_else(|| Error::Checkpoint("buffer size".into()))?)?;
        Ok(raw.chunks_exact(T::BYTES).map(T::read_le).collect())
    }
}

impl<T: Real> Checkpoint<T> {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, T::BYTES as u32);
        put_bytes(&mut out, serde_json::to_string(&self.meta)?.as_bytes());
        put_u32(&mut out, self.params.len() as u32);
        for (_, e) in self.params.iter() {
            put_bytes(&mut out, e.name.as_bytes());
            out.push(e.trainable as u8);
            put_u32(&mut out, e.value.shape().len() as u32);
            for &d in e.value.shape() {
                put_u64(&mut out, d as u64);
            }
        }
        for (_, e) in self.params.iter() {
            put_buf(&mut out, e.value.data());
        }
        match &self.optimizer {
            None => out.push(0),
            Some(opt) => {
                out.push(1);
                put_bytes(&mut out, serde_json::to_string(&opt.config)?.as_bytes());
                put_u64(&mut out, opt.step);
                for (m, v) in opt.m.iter().zip(&opt.v) {
                    put_buf(&mut out, m);
                    put_buf(&mut out, v);
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let width = r.u32()? as usize;
        if width != T::BYTES {
            return Err(Error::Checkpoint(format!(
                "checkpoint stores {width}-byte floats, reader expects {}",
                T::BYTES
            )));
        }
        let meta = serde_json::from_slice(r.bytes()?)?;
        let n = r.u32()? as usize;
        let mut manifest = Vec::with_capacity(n);
        for _ in 0..n {
            let name = String::from_utf8(r.bytes()?.to_vec())
                .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
            let trainable = r.u8()? != 0;
            let ndim = r.u32()? as usize;
            let shape = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            manifest.push((name, trainable, shape));
        }
        let mut params = ParamSet::new();
        for (name, trainable, shape) in manifest {
            let value = Tensor::new(shape, r.buf()?)
                .map_err(|e| Error::Checkpoint(format!("parameter {name}: {e}")))?;
            let entry = ParamEntry {
                name,
                value,
                trainable,
            };
            if entry.trainable {
                params.add(entry.name, entry.value);
            } else {
                params.add_buffer(entry.name, entry.value);
            }
        }
        let optimizer = match r.u8()? {
            0 => None,
            _ => {
                let config: OptimConfig = serde_json::from_slice(r.bytes()?)?;
                let step = r.u64()?;
                let mut m = Vec::with_capacity(n);
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    m.push(r.buf()?);
                    v.push(r.buf()?);
                }
                Some(Optimizer { config, step, m, v })
            }
        };
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(Checkpoint {
            params,
            optimizer,
            meta,
        })
    }
}

pub fn write_checkpoint<T: Real>(path: &Path, ckpt: &Checkpoint<T>) -> Result<()> {
    fs::write(path, ckpt.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<T: Real>(path: &Path) -> Result<Checkpoint<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
