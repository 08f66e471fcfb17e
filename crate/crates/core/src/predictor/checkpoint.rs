//! Binary model checkpoint.
//!
//! ```text
//! magic        8 bytes  "SINCLSTM"
//! version      u32 LE
//! header_len   u32 LE
//! header       header_len bytes of UTF-8 JSON (CheckpointHeader)
//! parameters   f64 LE, blocks w_x, w_h, b, head_w, head_b, skip, each row-major
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lstm::{LstmParams, ParamBlock, PredictorModel};
use super::{TrainConfig, INPUT_SIZE, OUTPUT_SIZE};
use crate::telemetry::NormalizationStats;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"SINCLSTM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("parameter block sizes do not match header shapes")]
    ShapeMismatch,
    #[error("checkpoint contains non-finite parameters")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointHeader {
    input_size: usize,
    hidden_size: usize,
    output_size: usize,
    param_count: usize,
    stats: Option<NormalizationStats>,
    config: TrainConfig,
}

pub fn write_checkpoint<W: Write>(
    model: &PredictorModel,
    mut out: W,
) -> Result<(), CheckpointError> {
    let header = CheckpointHeader {
        input_size: INPUT_SIZE,
        hidden_size: model.hidden(),
        output_size: OUTPUT_SIZE,
        param_count: model.params.len(),
        stats: model.stats,
        config: model.config,
    };
    let json = serde_json::to_vec(&header).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let header_len = u32::try_from(json.len())
        .map_err(|_| CheckpointError::Header("header too large".into()))?;
    out.write_all(&CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&header_len.to_le_bytes())?;
    out.write_all(&json)?;
    let mut buf = Vec::with_capacity(model.params.len() * 8);
    for block in ParamBlock::ALL {
        for v in model.params.block(block) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<PredictorModel, CheckpointError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    input.read_exact(&mut word)?;
    let header_len = u32::from_le_bytes(word) as usize;
    let mut json = vec![0u8; header_len];
    input.read_exact(&mut json)?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| CheckpointError::Header(e.to_string()))?;
    if header.input_size != INPUT_SIZE
        || header.output_size != OUTPUT_SIZE
        || header.hidden_size == 0
    {
        return Err(CheckpointError::ShapeMismatch);
    }

    let mut params = LstmParams::zeros(header.hidden_size);
    if params.len() != header.param_count {
        return Err(CheckpointError::ShapeMismatch);
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != header.param_count * 8 {
        return Err(CheckpointError::ShapeMismatch);
    }
    let mut values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    for block in ParamBlock::ALL {
        for slot in params.block_mut(block) {
            *slot = values.next().expect("length checked");
        }
    }
    if !params.is_finite() {
        return Err(CheckpointError::NonFinite);
    }
    let mut config = header.config;
    config.hidden_size = header.hidden_size;
    Ok(PredictorModel {
        params,
        stats: header.stats,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> PredictorModel {
        PredictorModel::new(TrainConfig {
            hidden_size: 6,
            seed: 11,
            coord_residual: true,
            ..TrainConfig::default()
        })
        .with_stats(NormalizationStats::new(500.0, 18_000.0))
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let mut buf = Vec::new();
        write_checkpoint(&m, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn layout_prefix_is_stable() {
        let mut buf = Vec::new();
        write_checkpoint(&model(), &mut buf).unwrap();
        assert_eq!(&buf[..8], b"SINCLSTM");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        let header_len = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
        assert_eq!(buf.len(), 16 + header_len + model().params.len() * 8);
        let first = f64::from_le_bytes(buf[16 + header_len..24 + header_len].try_into().unwrap());
        assert_eq!(first, model().params.w_x[[0, 0]]);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let mut buf = Vec::new();
        write_checkpoint(&model(), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad.as_slice()),
            Err(CheckpointError::BadMagic)
        ));
        let mut bad = buf.clone();
        bad[8] = 9;
        assert!(matches!(
            read_checkpoint(bad.as_slice()),
            Err(CheckpointError::UnsupportedVersion(9))
        ));
        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(
            read_checkpoint(truncated),
            Err(CheckpointError::ShapeMismatch)
        ));
    }
}
