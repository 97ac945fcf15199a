//! Binary checkpoint: magic, JSON header, little-endian f64 payload.
//!
//! ```text
//! offset 0   8 bytes   magic "EVLSTMCK"
//! offset 8   u64 LE    header length N
//! offset 16  N bytes   UTF-8 JSON header (CheckpointHeader)
//! offset 16+N          param_count f64 values, little-endian, in `layout` order
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{BlockLayout, ModelParams, INPUT_SIZE, OUTPUT_SIZE};
use super::train::TrainConfig;
use super::Normalization;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"EVLSTMCK";
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Free-form training provenance stored alongside the weights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub strategy: Option<String>,
    pub seed: u64,
    pub lr0: f64,
    pub train: Option<TrainConfig>,
    pub best_epoch: Option<usize>,
    pub best_val_loss: Option<f64>,
    pub n_conv: Option<usize>,
    pub gamma_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub schema_version: u32,
    pub hidden: usize,
    pub input_size: usize,
    pub output_size: usize,
    pub param_count: usize,
    pub byte_order: String,
    pub layout: Vec<BlockLayout>,
    pub normalization: Normalization,
    pub meta: CheckpointMeta,
}

pub fn save_checkpoint(
    path: &Path,
    params: &ModelParams,
    norm: &Normalization,
    meta: &CheckpointMeta,
) -> Result<()> {
    let header = CheckpointHeader {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        hidden: params.hidden(),
        input_size: INPUT_SIZE,
        output_size: OUTPUT_SIZE,
        param_count: params.as_slice().len(),
        byte_order: "little-endian f64".to_string(),
        layout: params.layout(),
        normalization: *norm,
        meta: meta.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(16 + json.len() + 8 * header.param_count);
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for v in params.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a checkpoint; with `expected_hidden` set, a model of a different
/// width is rejected.
pub fn load_checkpoint(
    path: &Path,
    expected_hidden: Option<usize>,
) -> Result<(ModelParams, CheckpointHeader)> {
    let fail = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let bytes = fs::read(path).map_err(|e| fail(e.to_string()))?;
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(fail("not a checkpoint file".into()));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let payload_start = 16usize
        .checked_add(header_len)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| fail("truncated header".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..payload_start])?;
    if header.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(Error::SchemaMismatch {
            found: header.schema_version,
            expected: CHECKPOINT_SCHEMA_VERSION,
        });
    }
    if let Some(h) = expected_hidden {
        if h != header.hidden {
            return Err(fail(format!("hidden size {} does not match expected {h}", header.hidden)));
        }
    }
    if header.input_size != INPUT_SIZE || header.output_size != OUTPUT_SIZE {
        return Err(fail("unsupported input/output size".into()));
    }
    let payload = &bytes[payload_start..];
    if header.param_count != ModelParams::param_count(header.hidden)
        || payload.len() != 8 * header.param_count
    {
        return Err(fail("payload size does not match header".into()));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let params = ModelParams::from_raw(header.hidden, data)
        .ok_or_else(|| fail("inconsistent parameter count".into()))?;
    if params.layout() != header.layout {
        return Err(fail("unsupported parameter layout".into()));
    }
    Ok((params, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            strategy: Some("events".into()),
            seed: 4,
            lr0: 0.01,
            train: Some(TrainConfig::default()),
            ..Default::default()
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let mut p = ModelParams::init(9, 7);
        p.as_mut_slice()[0] = -0.0;
        p.as_mut_slice()[1] = f64::MIN_POSITIVE / 3.0;
        save_checkpoint(&path, &p, &Normalization::default(), &meta()).unwrap();
        let (q, header) = load_checkpoint(&path, Some(9)).unwrap();
        let bits = |m: &ModelParams| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p), bits(&q));
        assert_eq!(header.meta.lr0, 0.01);
        assert_eq!(header.meta.train.unwrap().lr0, 0.01);
    }

    #[test]
    fn wrong_hidden_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &ModelParams::init(4, 0), &Normalization::default(), &meta()).unwrap();
        assert!(matches!(
            load_checkpoint(&path, Some(5)),
            Err(Error::Checkpoint { .. })
        ));
    }

    #[test]
    fn schema_version_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &ModelParams::init(2, 0), &Normalization::default(), &meta()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header = String::from_utf8(bytes[16..16 + header_len].to_vec())
            .unwrap()
            .replace("\"schema_version\":1", "\"schema_version\":7");
        let mut out = bytes[..8].to_vec();
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&bytes[16 + header_len..]);
        std::fs::write(&path, out).unwrap();
        assert!(matches!(
            load_checkpoint(&path, None),
            Err(Error::SchemaMismatch { found: 7, .. })
        ));
    }
}
