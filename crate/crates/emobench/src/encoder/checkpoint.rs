//! Self-describing checkpoint container.
//!
//! Layout: an 8-byte little-endian manifest length, the JSON manifest
//! (format version, free-form metadata, tensor names/shapes/byte offsets),
//! then the tensor data as little-endian f32 arrays in manifest order.
//! Loading and re-saving a container is byte-identical.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{EncoderConfig, EncoderModel};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the data section.
    offset: u64,
    /// Number of f32 values.
    len: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    meta: Value,
    tensors: Vec<TensorEntry>,
}

/// A loaded tensor container: metadata plus named f64 arrays (widened from
/// the stored f32 values).
#[derive(Debug, Clone)]
pub struct TensorFile {
    pub meta: Value,
    pub tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl TensorFile {
    pub fn tensor(&self, name: &str) -> Option<(&[usize], &[f64])> {
        self.tensors
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, shape, data)| (shape.as_slice(), data.as_slice()))
    }
}

/// Write named tensors with free-form metadata.
pub fn save_tensors(
    path: &Path,
    meta: Value,
    tensors: &[(String, Vec<usize>, Vec<f64>)],
) -> Result<()> {
    let mut entries = Vec::with_capacity(tensors.len());
    let mut offset = 0u64;
    for (name, shape, data) in tensors {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Checkpoint(format!(
                "tensor {name} shape {shape:?} does not match {} values",
                data.len()
            )));
        }
        entries.push(TensorEntry {
            name: name.clone(),
            shape: shape.clone(),
            offset,
            len: data.len() as u64,
        });
        offset += (data.len() * 4) as u64;
    }
    let manifest = Manifest {
        format_version: CHECKPOINT_FORMAT_VERSION,
        meta,
        tensors: entries,
    };
    let manifest_bytes = serde_json::to_vec(&manifest)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&(manifest_bytes.len() as u64).to_le_bytes())?;
    f.write_all(&manifest_bytes)?;
    let mut buf = Vec::with_capacity(offset as usize);
    for (_, _, data) in tensors {
        for &v in data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    f.write_all(&buf)?;
    Ok(())
}

/// Read a container written by [`save_tensors`].
pub fn load_tensors(path: &Path) -> Result<TensorFile> {
    let mut f = std::fs::File::open(path)?;
    let mut len_bytes = [0u8; 8];
    f.read_exact(&mut len_bytes)
        .map_err(|_| Error::Checkpoint("truncated manifest length".into()))?;
    let manifest_len = u64::from_le_bytes(len_bytes) as usize;
    let mut manifest_bytes = vec![0u8; manifest_len];
    f.read_exact(&mut manifest_bytes)
        .map_err(|_| Error::Checkpoint("truncated manifest".into()))?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)?;
    if manifest.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint format version {}",
            manifest.format_version
        )));
    }
    let mut data = Vec::new();
    f.read_to_end(&mut data)?;
    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    for entry in &manifest.tensors {
        let start = entry.offset as usize;
        let end = start + entry.len as usize * 4;
        if end > data.len() {
            return Err(Error::Checkpoint(format!("tensor {} out of bounds", entry.name)));
        }
        let mut values = Vec::with_capacity(entry.len as usize);
        for chunk in data[start..end].chunks_exact(4) {
            values.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64);
        }
        tensors.push((entry.name.clone(), entry.shape.clone(), values));
    }
    Ok(TensorFile { meta: manifest.meta, tensors })
}

impl EncoderModel {
    /// Save the model; `extra_meta` fields are merged into the manifest meta.
    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = serde_json::json!({
            "kind": "encoder",
            "config": self.config,
            "mask_id": self.mask_id,
        });
        save_tensors(path, meta, &self.params.tensor_entries())
    }

    pub fn load(path: &Path) -> Result<EncoderModel> {
        let file = load_tensors(path)?;
        Self::from_tensor_file(&file)
    }

    pub(crate) fn from_tensor_file(file: &TensorFile) -> Result<EncoderModel> {
        let config: EncoderConfig =
            serde_json::from_value(file.meta["config"].clone()).map_err(|e| {
                Error::Checkpoint(format!("bad encoder config in checkpoint: {e}"))
            })?;
        let mask_id: Option<u32> =
            serde_json::from_value(file.meta["mask_id"].clone()).unwrap_or(None);
        let mut model = EncoderModel::init(config, 0)?;
        model.mask_id = mask_id;
        let expected = model.params.tensor_entries();
        let mut restored: Vec<f64> = Vec::with_capacity(model.params.num_params());
        for (name, shape, _) in &expected {
            let (got_shape, data) = file.tensor(name).ok_or_else(|| {
                Error::Checkpoint(format!("checkpoint missing tensor {name}"))
            })?;
            if got_shape != shape.as_slice() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} shape {got_shape:?}, expected {shape:?}"
                )));
            }
            restored.extend_from_slice(data);
        }
        for (slot, v) in model.params.flat_mut().into_iter().zip(restored) {
            *slot = v;
        }
        Ok(model)
    }
}

/// Widen an f64 slice pair into ndarray types (head weights live outside
/// [`Params`]).
pub(crate) fn array2_from(shape: &[usize], data: &[f64]) -> Result<Array2<f64>> {
    if shape.len() != 2 || shape[0] * shape[1] != data.len() {
        return Err(Error::Checkpoint("bad 2d tensor shape".into()));
    }
    Array2::from_shape_vec((shape[0], shape[1]), data.to_vec())
        .map_err(|e| Error::Checkpoint(e.to_string()))
}

pub(crate) fn array1_from(shape: &[usize], data: &[f64]) -> Result<Array1<f64>> {
    if shape.len() != 1 || shape[0] != data.len() {
        return Err(Error::Checkpoint("bad 1d tensor shape".into()));
    }
    Ok(Array1::from_vec(data.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_save_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = EncoderConfig::new(19).with_dims(2, 2, 8, 16).with_max_seq_len(6);
        let model = EncoderModel::init(cfg, 7).unwrap().with_mask_id(4);
        let p1 = dir.path().join("a.ckpt");
        let p2 = dir.path().join("b.ckpt");
        model.save(&p1).unwrap();
        let loaded = EncoderModel::load(&p1).unwrap();
        loaded.save(&p2).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(loaded.mask_id, Some(4));
        assert_eq!(loaded.config, model.config);
    }

    #[test]
    fn loaded_model_behaves_like_quantized_original() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = EncoderConfig::new(13).with_dims(1, 2, 8, 16).with_max_seq_len(6);
        let mut model = EncoderModel::init(cfg, 3).unwrap();
        let path = dir.path().join("m.ckpt");
        model.save(&path).unwrap();
        let loaded = EncoderModel::load(&path).unwrap();
        model.params.quantize_f32();
        let a = model.forward(&[1, 2, 3], &[true; 3]).unwrap();
        let b = loaded.forward(&[1, 2, 3], &[true; 3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_tensor_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.ckpt");
        let meta = serde_json::json!({
            "kind": "encoder",
            "config": EncoderConfig::new(13),
            "mask_id": null,
        });
        save_tensors(&path, meta, &[("tok_emb".into(), vec![2, 2], vec![0.0; 4])]).unwrap();
        assert!(EncoderModel::load(&path).is_err());
    }
}
