//! On-disk dataset layout "vxds-1": `manifest.json` (canonical JSON) plus
//! `blobs/NNNN.bin` tensor blobs — little-endian f32 payloads, row-major,
//! each tensor carrying rank, extents and a CRC32 of its payload bytes.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "vxds-1";

pub(crate) fn write_blob(path: &Path, tensors: &[(&[usize], &[f32])]) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (shape, data) in tensors {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &e in *shape {
            buf.extend_from_slice(&(e as u32).to_le_bytes());
        }
        let start = buf.len();
        for &v in *data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&buf[start..]);
        buf.extend_from_slice(&crc.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn read_blob(path: &Path) -> Result<Vec<(Vec<usize>, Vec<f32>)>> {
    let mut raw = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    let mut pos = 0usize;
    let u32_at = |pos: &mut usize| -> Result<u32> {
        if *pos + 4 > raw.len() {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
            });
        }
        let b = [raw[*pos], raw[*pos + 1], raw[*pos + 2], raw[*pos + 3]];
        *pos += 4;
        Ok(u32::from_le_bytes(b))
    };
    let count = u32_at(&mut pos)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = u32_at(&mut pos)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u32_at(&mut pos)? as usize);
        }
        let n: usize = shape.iter().product();
        if pos + n * 4 > raw.len() {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
            });
        }
        let payload = &raw[pos..pos + n * 4];
        pos += n * 4;
        let stored_crc = u32_at(&mut pos)?;
        if crc32fast::hash(payload) != stored_crc {
            return Err(Error::Checksum {
                path: path.to_path_buf(),
            });
        }
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        out.push((shape, data));
    }
    if pos != raw.len() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            msg: format!("{} trailing bytes", raw.len() - pos),
        });
    }
    Ok(out)
}
