//! Checkpoint container: "VXDA" magic, format version, the network config as
//! canonical JSON, then named little-endian f32 tensor records
//! (name length, name bytes, rank, extents, payload), sorted by name so the
//! byte stream is a pure function of the parameter store.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{ModelParams, NetworkConfig, Param, Submodule};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"VXDA";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, params: &ModelParams<f32>, config: &NetworkConfig) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let config_json = serde_json::to_string(config)?;
    buf.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(config_json.as_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, param) in params.iter() {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(param.shape.len() as u32).to_le_bytes());
        for &e in &param.shape {
            buf.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for &v in &param.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Malformed {
                path: self.path.to_path_buf(),
                msg: format!("unexpected end of file at offset {}", self.pos),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams<f32>, NetworkConfig)> {
    let mut raw = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        buf: &raw,
        pos: 0,
        path,
    };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            msg: "bad magic, not a checkpoint".into(),
        });
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            found: version.to_string(),
            expected: CHECKPOINT_VERSION.to_string(),
        });
    }
    let json_len = r.u32()? as usize;
    let config: NetworkConfig = serde_json::from_slice(r.take(json_len)?)?;
    config.validate()?;
    let count = r.u32()? as usize;
    let mut params = ModelParams::default();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| Error::Malformed {
            path: path.to_path_buf(),
            msg: "tensor name is not UTF-8".into(),
        })?;
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let n: usize = shape.iter().product();
        let payload = r.take(n * 4)?;
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let submodule = Submodule::from_name(&name)?;
        let trainable = !name.contains("running_");
        params.insert(
            &name,
            Param {
                shape,
                data,
                submodule,
                trainable,
            },
        )?;
    }
    if r.pos != raw.len() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            msg: format!("{} trailing bytes", raw.len() - r.pos),
        });
    }
    Ok((params, config))
}
