//! Model checkpoints.
//!
//! Layout: magic `EPG2SCK\0`, u32 version, u8 dtype (0 = f32, 1 = f64),
//! u64 seed, a length-prefixed config text block, then a length-prefixed
//! named-tensor section in visitation order. f32 is the compact export
//! format; f64 preserves training state bit-for-bit for exact resume.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::params::{zero_params, Params};

const MAGIC: &[u8; 8] = b"EPG2SCK\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

pub fn save_checkpoint(params: &Params, dtype: Dtype, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_bytes(params, dtype)).map_err(|e| Error::io(path, e))
}

/// Serializes the checkpoint to memory; `save_checkpoint` writes this to disk
/// and the training-state container embeds it.
pub fn checkpoint_bytes(params: &Params, dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match dtype {
        Dtype::F32 => 0,
        Dtype::F64 => 1,
    });
    out.extend_from_slice(&params.seed.to_le_bytes());

    let cfg_text = params.cfg.to_kv();
    out.extend_from_slice(&(cfg_text.len() as u32).to_le_bytes());
    out.extend_from_slice(cfg_text.as_bytes());

    let mut n_tensors = 0u32;
    params.visit(&mut |_, _, _| n_tensors += 1);
    out.extend_from_slice(&n_tensors.to_le_bytes());
    params.visit(&mut |name, shape, data| {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        match dtype {
            Dtype::F32 => {
                for &v in data {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            Dtype::F64 => {
                for &v in data {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    });
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(self.path, "checkpoint is truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
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

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Params> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes, path)
}

/// Parses a checkpoint from memory; `path` is used only for error messages.
pub fn checkpoint_from_bytes(bytes: &[u8], path: &Path) -> Result<Params> {
    let mut r = Reader {
        bytes,
        pos: 0,
        path,
    };
    if r.take(8)? != MAGIC {
        return Err(Error::format(path, "not a checkpoint file"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let dtype = match r.take(1)?[0] {
        0 => Dtype::F32,
        1 => Dtype::F64,
        other => return Err(Error::format(path, format!("unknown dtype tag {other}"))),
    };
    let seed = r.u64()?;
    let cfg_len = r.u32()? as usize;
    let cfg_text = std::str::from_utf8(r.take(cfg_len)?)
        .map_err(|_| Error::format(path, "config block is not UTF-8"))?;
    let cfg = ModelConfig::from_kv(cfg_text)?;

    let mut params = zero_params(&cfg, seed)?;
    let n_tensors = r.u32()? as usize;
    let mut expected = 0usize;
    params.visit(&mut |_, _, _| expected += 1);
    if n_tensors != expected {
        return Err(Error::format(
            path,
            format!("checkpoint has {n_tensors} tensors, model needs {expected}"),
        ));
    }

    let mut err: Option<Error> = None;
    params.visit_mut(&mut |name, data| {
        if err.is_some() {
            return;
        }
        let inner = (|| -> Result<()> {
            let name_len = r.u32()? as usize;
            let stored = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::format(path, "tensor name is not UTF-8"))?;
            if stored != name {
                return Err(Error::format(
                    path,
                    format!("tensor order mismatch: found `{stored}`, expected `{name}`"),
                ));
            }
            let ndim = r.u32()? as usize;
            let mut numel = 1usize;
            for _ in 0..ndim {
                numel *= r.u32()? as usize;
            }
            if numel != data.len() {
                return Err(Error::format(
                    path,
                    format!("tensor `{name}` holds {numel} values, model needs {}", data.len()),
                ));
            }
            match dtype {
                Dtype::F32 => {
                    let raw = r.take(numel * 4)?;
                    for (i, v) in data.iter_mut().enumerate() {
                        *v = f32::from_le_bytes(raw[i * 4..i * 4 + 4].try_into().unwrap()) as f64;
                    }
                }
                Dtype::F64 => {
                    let raw = r.take(numel * 8)?;
                    for (i, v) in data.iter_mut().enumerate() {
                        *v = f64::from_le_bytes(raw[i * 8..i * 8 + 8].try_into().unwrap());
                    }
                }
            }
            Ok(())
        })();
        if let Err(e) = inner {
            err = Some(e);
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if r.pos != bytes.len() {
        return Err(Error::format(path, "trailing bytes after tensor payload"));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::{ModelConfig, Variant};
    use crate::model::params::init_params;

    #[test]
    fn f64_round_trip_is_bit_identical() {
        let cfg = ModelConfig::with_scale(Variant::Lf, 16);
        let p = init_params(&cfg, 21).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&p, Dtype::F64, &path).unwrap();
        let q = load_checkpoint(&path).unwrap();
        assert_eq!(p.flatten(), q.flatten());
        assert_eq!(q.seed, 21);
        assert_eq!(q.cfg, cfg);
    }

    #[test]
    fn f32_round_trip_quantizes_to_f32() {
        let cfg = ModelConfig::with_scale(Variant::Ef, 16);
        let p = init_params(&cfg, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&p, Dtype::F32, &path).unwrap();
        let q = load_checkpoint(&path).unwrap();
        for (a, b) in p.flatten().iter().zip(q.flatten().iter()) {
            assert_eq!(*a as f32, *b as f32);
            assert!((a - b).abs() <= a.abs() * 1e-6 + 1e-9);
        }
    }

    #[test]
    fn rejects_corrupted_files() {
        let cfg = ModelConfig::with_scale(Variant::PureEpg, 16);
        let p = init_params(&cfg, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&p, Dtype::F32, &path).unwrap();

        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() / 2);
        let trunc = dir.path().join("trunc.ckpt");
        fs::write(&trunc, &bytes).unwrap();
        assert!(load_checkpoint(&trunc).is_err());

        let bad_magic = dir.path().join("bad.ckpt");
        fs::write(&bad_magic, b"NOTACKPTxxxxxxxxxxxx").unwrap();
        assert!(load_checkpoint(&bad_magic).is_err());
    }
}
