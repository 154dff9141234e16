//! SEGD container: `"SEGD"` | version u32 | header length u32 | JSON header | f32 payload.
//!
//! All integers and floats are little-endian. The payload is segment-major, then time, then channel.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::segments::{SegmentMeta, SegmentSet};
use crate::error::{Error, Result};

pub const SEGD_MAGIC: &[u8; 4] = b"SEGD";
pub const SEGD_VERSION: u32 = 1;

pub fn encode_segments(set: &SegmentSet) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&set.meta())?;
    let mut out = Vec::with_capacity(12 + header.len() + set.data().len() * 4);
    out.extend_from_slice(SEGD_MAGIC);
    out.extend_from_slice(&SEGD_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in set.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_segments(bytes: &[u8]) -> Result<SegmentSet> {
    let err = |offset: usize, reason: String| Error::format("SEGD", offset as u64, reason);
    if bytes.len() < 12 {
        return Err(err(bytes.len(), format!("file is {} bytes, shorter than the 12-byte preamble", bytes.len())));
    }
    if &bytes[0..4] != SEGD_MAGIC {
        return Err(err(0, format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SEGD_VERSION {
        return Err(err(4, format!("unsupported version {version}")));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload_start = 12usize
        .checked_add(header_len)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| err(8, format!("header length {header_len} runs past end of file")))?;
    let meta: SegmentMeta = serde_json::from_slice(&bytes[12..payload_start])
        .map_err(|e| err(12, format!("invalid header JSON: {e}")))?;
    let payload = &bytes[payload_start..];
    let expected = meta
        .n
        .checked_mul(meta.t)
        .and_then(|v| v.checked_mul(meta.c))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| err(12, "header dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(err(
            payload_start,
            format!(
                "payload is {} bytes but header {}x{}x{} needs {expected}",
                payload.len(),
                meta.n,
                meta.t,
                meta.c
            ),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    SegmentSet::new(meta, data).map_err(|e| err(12, e.to_string()))
}

pub fn save_segments(set: &SegmentSet, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_segments(set)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_segments(path: impl AsRef<Path>) -> Result<SegmentSet> {
    decode_segments(&fs::read(path)?)
}
