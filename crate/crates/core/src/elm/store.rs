//! Binary container for datasets and trained models.
//!
//! Layout: 8-byte magic, `u64` little-endian header length, UTF-8 JSON header,
//! then the header's arrays as packed little-endian `f64` in the order listed
//! by the header. Matrices are stored row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ElmModel, ElmParams, RealMatrix, RelayDims};
use super::dataset::{Dataset, DatasetMeta, Sample};
use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 8] = b"FDHBFDS1";
pub const MODEL_MAGIC: &[u8; 8] = b"FDHBFML1";
pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Headers larger than this are rejected as corrupt.
const MAX_HEADER: u64 = 64 << 20;

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    meta: DatasetMeta,
    n_samples: usize,
    n_inputs: usize,
    n_outputs: usize,
    arrays: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    schema_version: u32,
    params: ElmParams,
    dims: RelayDims,
    hidden: usize,
    n_inputs: usize,
    n_outputs: usize,
    provenance: serde_json::Value,
    arrays: Vec<String>,
}

fn write_container<W: Write, H: Serialize>(mut w: W, magic: &[u8; 8], header: &H, arrays: &[&[f64]]) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(magic)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for array in arrays {
        for v in *array {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_header<R: Read, H: for<'de> Deserialize<'de>>(r: &mut R, magic: &[u8; 8]) -> Result<H> {
    let mut found = [0u8; 8];
    r.read_exact(&mut found)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > MAX_HEADER {
        return Err(Error::Format(format!("header length {len} exceeds limit")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json)?;
    Ok(serde_json::from_slice(&json)?)
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated array data (expected {n} values)")),
        _ => Error::Io(e),
    })?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

fn ensure_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes after array data".into())),
    }
}

fn row_major(m: &RealMatrix) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub fn write_dataset_to<W: Write>(w: W, data: &Dataset) -> Result<()> {
    let n_inputs = data.samples.first().map_or(0, |s| s.x.len());
    let n_outputs = data.samples.first().map_or(0, |s| s.t.len());
    if data.samples.iter().any(|s| s.x.len() != n_inputs || s.t.len() != n_outputs) {
        return Err(Error::Format("samples have inconsistent lengths".into()));
    }
    let header = DatasetHeader {
        meta: data.meta.clone(),
        n_samples: data.samples.len(),
        n_inputs,
        n_outputs,
        arrays: vec!["X[n_samples x n_inputs]".into(), "T[n_samples x n_outputs]".into()],
    };
    let x: Vec<f64> = data.samples.iter().flat_map(|s| s.x.iter().copied()).collect();
    let t: Vec<f64> = data.samples.iter().flat_map(|s| s.t.iter().copied()).collect();
    write_container(w, DATASET_MAGIC, &header, &[&x, &t])
}

pub fn read_dataset_from<R: Read>(mut r: R) -> Result<Dataset> {
    let header: DatasetHeader = read_header(&mut r, DATASET_MAGIC)?;
    if header.meta.schema_version != super::dataset::DATASET_SCHEMA_VERSION {
        return Err(Error::Format(format!("unsupported dataset schema {}", header.meta.schema_version)));
    }
    if header.meta.sample_realization.len() != header.n_samples {
        return Err(Error::Format("sample_realization length does not match n_samples".into()));
    }
    let x = read_f64s(&mut r, header.n_samples * header.n_inputs)?;
    let t = read_f64s(&mut r, header.n_samples * header.n_outputs)?;
    ensure_eof(&mut r)?;
    let samples = (0..header.n_samples)
        .map(|i| Sample {
            x: x[i * header.n_inputs..(i + 1) * header.n_inputs].to_vec(),
            t: t[i * header.n_outputs..(i + 1) * header.n_outputs].to_vec(),
        })
        .collect();
    Ok(Dataset { samples, meta: header.meta })
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_dataset_to(BufWriter::new(File::create(path)?), data)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_from(BufReader::new(File::open(path)?))
}

pub fn write_model_to<W: Write>(w: W, model: &ElmModel, provenance: &serde_json::Value) -> Result<()> {
    let header = ModelHeader {
        schema_version: MODEL_SCHEMA_VERSION,
        params: model.params.clone(),
        dims: model.dims,
        hidden: model.w.nrows(),
        n_inputs: model.n_inputs(),
        n_outputs: model.n_outputs(),
        provenance: provenance.clone(),
        arrays: vec![
            "W[hidden x n_inputs]".into(),
            "b[hidden]".into(),
            "beta[hidden x n_outputs]".into(),
            "mean[n_inputs]".into(),
            "std[n_inputs]".into(),
        ],
    };
    let w_rows = row_major(&model.w);
    let beta_rows = row_major(&model.beta);
    write_container(w, MODEL_MAGIC, &header, &[&w_rows, &model.b, &beta_rows, &model.mean, &model.std])
}

/// Returns the model and its provenance record.
pub fn read_model_from<R: Read>(mut r: R) -> Result<(ElmModel, serde_json::Value)> {
    let header: ModelHeader = read_header(&mut r, MODEL_MAGIC)?;
    if header.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::Format(format!("unsupported model schema {}", header.schema_version)));
    }
    if header.n_outputs != header.dims.output_len() {
        return Err(Error::Format("n_outputs disagrees with relay dimensions".into()));
    }
    let (l, ni, no) = (header.hidden, header.n_inputs, header.n_outputs);
    let w = RealMatrix::from_row_slice(l, ni, &read_f64s(&mut r, l * ni)?);
    let b = read_f64s(&mut r, l)?;
    let beta = RealMatrix::from_row_slice(l, no, &read_f64s(&mut r, l * no)?);
    let mean = read_f64s(&mut r, ni)?;
    let std = read_f64s(&mut r, ni)?;
    ensure_eof(&mut r)?;
    let model = ElmModel { params: header.params, dims: header.dims, w, b, beta, mean, std };
    Ok((model, header.provenance))
}

pub fn write_model(path: &Path, model: &ElmModel, provenance: &serde_json::Value) -> Result<()> {
    write_model_to(BufWriter::new(File::create(path)?), model, provenance)
}

pub fn read_model(path: &Path) -> Result<(ElmModel, serde_json::Value)> {
    read_model_from(BufReader::new(File::open(path)?))
}
