//! Binary checkpoint container.
//!
//! Layout:
//!
//! ```text
//! magic       8 bytes   "PPMCKPT" 0x01
//! header_len  u64 LE    byte length of the JSON header
//! header      UTF-8 JSON (see `Header`)
//! payload     f64 LE values of every tensor, in header order
//! ```
//!
//! The header lists each tensor's name, shape and kind (`param`,
//! `running_mean`, `running_var`). Nothing time-dependent is stored, so
//! equal models produce equal bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use ppm_nn::{ParamStore, Tensor};
use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, ModelError, ModelType, Result, RunningStats};
use crate::features::Normalizer;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PPMCKPT\x01";
const FORMAT_VERSION: u32 = 1;

/// A trained model with what is needed to score new data.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub normalizer: Normalizer,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Param,
    RunningMean,
    RunningVar,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    kind: Kind,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    model_type: ModelType,
    config: ModelConfig,
    activity_classes: usize,
    role_classes: usize,
    input_len: usize,
    normalizer: Normalizer,
    seed: u64,
    tensors: Vec<TensorEntry>,
}

pub fn write_checkpoint<W: Write>(mut w: W, ckpt: &Checkpoint) -> Result<()> {
    let m = &ckpt.model;
    let mut tensors = Vec::new();
    let mut payload: Vec<&[f64]> = Vec::new();
    for (name, t) in m.params.iter() {
        tensors.push(TensorEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            kind: Kind::Param,
        });
        payload.push(t.data());
    }
    for (name, r) in &m.running {
        for (kind, values) in [(Kind::RunningMean, &r.mean), (Kind::RunningVar, &r.var)] {
            tensors.push(TensorEntry {
                name: name.clone(),
                shape: vec![values.len()],
                kind,
            });
            payload.push(values);
        }
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        model_type: m.config.model_type,
        config: m.config.clone(),
        activity_classes: m.activity_classes,
        role_classes: m.role_classes,
        input_len: m.input_len,
        normalizer: ckpt.normalizer,
        seed: ckpt.seed,
        tensors,
    };
    let json = serde_json::to_vec(&header).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for values in payload {
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let bad = |msg: &str| ModelError::Checkpoint(msg.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = usize::try_from(u64::from_le_bytes(len)).map_err(|_| bad("header too large"))?;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(bad("unsupported format version"));
    }
    if header.model_type != header.config.model_type {
        return Err(bad("model type disagrees with config"));
    }
    let mut params = ParamStore::new();
    let mut running: IndexMap<String, RunningStats> = IndexMap::new();
    let mut buf = [0u8; 8];
    for entry in header.tensors {
        let n: usize = entry.shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        match entry.kind {
            Kind::Param => params.insert(entry.name, Tensor::new(entry.shape, data)?)?,
            Kind::RunningMean => {
                running
                    .entry(entry.name)
                    .or_insert_with(|| RunningStats {
                        mean: Vec::new(),
                        var: Vec::new(),
                    })
                    .mean = data
            }
            Kind::RunningVar => {
                running
                    .entry(entry.name)
                    .or_insert_with(|| RunningStats {
                        mean: Vec::new(),
                        var: Vec::new(),
                    })
                    .var = data
            }
        }
    }
    if r.read(&mut buf)? != 0 {
        return Err(bad("trailing bytes after payload"));
    }
    Ok(Checkpoint {
        model: Model {
            config: header.config,
            activity_classes: header.activity_classes,
            role_classes: header.role_classes,
            input_len: header.input_len,
            params,
            running,
        },
        normalizer: header.normalizer,
        seed: header.seed,
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), ckpt)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
