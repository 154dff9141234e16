//! Checkpoint file: `"CKPT"` | version u32 | header length u32 | JSON header | f32 payload (little-endian).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ClassifierConfig, EncoderConfig};
use super::model::Model;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

pub const CKPT_MAGIC: &[u8; 4] = b"CKPT";
pub const CKPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset of the first element within the payload.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub encoder: EncoderConfig,
    pub classifier: ClassifierConfig,
    pub params: Vec<ParamEntry>,
}

pub fn encode_checkpoint(model: &Model) -> Result<Vec<u8>> {
    let mut offset = 0;
    let entries = model
        .params()
        .iter()
        .map(|p| {
            let e = ParamEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                offset,
            };
            offset += p.value.len() * 4;
            e
        })
        .collect();
    let header = serde_json::to_vec(&CheckpointHeader {
        encoder: model.encoder.clone(),
        classifier: model.classifier.clone(),
        params: entries,
    })?;
    let mut out = Vec::with_capacity(12 + header.len() + offset);
    out.extend_from_slice(CKPT_MAGIC);
    out.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for p in model.params() {
        for &v in p.value.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Model> {
    let err = |offset: usize, reason: String| Error::format("CKPT", offset as u64, reason);
    if bytes.len() < 12 {
        return Err(err(bytes.len(), "file shorter than the 12-byte preamble".into()));
    }
    if &bytes[0..4] != CKPT_MAGIC {
        return Err(err(0, format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CKPT_VERSION {
        return Err(err(4, format!("unsupported version {version}")));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let start = 12usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| err(8, format!("header length {header_len} runs past end of file")))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[12..start]).map_err(|e| err(12, format!("invalid header JSON: {e}")))?;
    let payload = &bytes[start..];
    let mut values = Vec::with_capacity(header.params.len());
    for entry in &header.params {
        let n: usize = entry.shape.iter().product();
        let end = entry.offset + n * 4;
        if end > payload.len() {
            return Err(err(start + entry.offset, format!("parameter {} runs past end of payload", entry.name)));
        }
        let data = payload[entry.offset..end]
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
            .collect();
        values.push(Tensor::new(&entry.shape, data).map_err(|e| err(start + entry.offset, e.to_string()))?);
    }
    let model = Model::from_params(header.encoder, header.classifier, values).map_err(|e| err(12, e.to_string()))?;
    for (p, entry) in model.params().iter().zip(&header.params) {
        if p.name != entry.name {
            return Err(err(12, format!("parameter {} where {} was expected", entry.name, p.name)));
        }
    }
    Ok(model)
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(model)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    decode_checkpoint(&fs::read(path)?)
}
