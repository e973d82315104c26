//! Binary files.
//!
//! CLMF dump, all integers little-endian:
//!
//! ```text
//! "CLMF" | version u32 | N u32 | k u32 | N·k f32 row-major | N·2 f32 positions | N f32 scales
//! ```
//!
//! Pyramid feature dumps use the same container with `k` replaced by the
//! feature length `D` and without the position and scale arrays; the
//! pyramid layout lives in a JSON sidecar.
//!
//! CLMM model file:
//!
//! ```text
//! "CLMM" | version u32 | header length u64 | JSON header | f64 payload
//! ```
//!
//! The payload stores every projection block `L_b` (`d × r`, row-major),
//! then for each class its weights `w_m` (`B·r`) followed by `b_m`.

use std::io::{Read, Write};
use std::path::Path;

use clm_core::descriptors::DescriptorSet;
use clm_core::lrsvm::{BinarySvm, BlockProjection, IterationRecord, LrsvmModel};
use clm_core::spm::SpmFeature;
use clm_core::symlin::Mat;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"CLMF";
pub const MODEL_MAGIC: &[u8; 4] = b"CLMM";
pub const FORMAT_VERSION: u32 = 1;

fn malformed(path: &Path, reason: impl Into<String>) -> PipelineError {
    PipelineError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

struct Reader<'a> {
    path: &'a Path,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(malformed(self.path, "unexpected end of file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| malformed(self.path, "size overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<()> {
        if self.take(4)? != want {
            return Err(malformed(self.path, "bad magic"));
        }
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(malformed(self.path, format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(malformed(self.path, "trailing bytes"));
        }
        Ok(())
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| PipelineError::io(path, e))?;
    Ok(buf)
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| PipelineError::io(path, e))
}

fn clmf_header(out: &mut Vec<u8>, rows: usize, cols: usize) {
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

impl Reader<'_> {
    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| malformed(self.path, "size overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }

    fn clmf_header(&mut self) -> Result<(usize, usize)> {
        self.magic(MATRIX_MAGIC)?;
        Ok((self.u32()? as usize, self.u32()? as usize))
    }
}

pub fn encode_descriptors(ds: &DescriptorSet<f64>) -> Vec<u8> {
    let (n, k) = (ds.len(), ds.dim());
    let mut out = Vec::with_capacity(16 + 4 * n * (k + 3));
    clmf_header(&mut out, n, k);
    put_f32s(&mut out, (0..n).flat_map(|i| ds.descriptor(i).iter().copied()));
    put_f32s(&mut out, ds.positions().iter().flatten().copied());
    put_f32s(&mut out, ds.scales().iter().copied());
    out
}

pub fn write_descriptors(path: &Path, ds: &DescriptorSet<f64>) -> Result<()> {
    write_all(path, &encode_descriptors(ds))
}

/// Reads a descriptor dump; values come back at f32 precision.
pub fn read_descriptors(path: &Path) -> Result<DescriptorSet<f64>> {
    let buf = read_all(path)?;
    let mut r = Reader { path, buf: &buf, pos: 0 };
    let (n, k) = r.clmf_header()?;
    let len = n.checked_mul(k).ok_or_else(|| malformed(path, "size overflow"))?;
    let data = r.f32s(len)?;
    let positions = r.f32s(2 * n)?.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
    let scales = r.f32s(n)?;
    r.finish()?;
    let data = Mat::from_vec(n, k, data).map_err(|e| malformed(path, e.to_string()))?;
    DescriptorSet::new(data, positions, scales).map_err(|e| malformed(path, e.to_string()))
}

/// One feature per row.
pub fn encode_features(rows: &Mat<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * rows.as_slice().len());
    clmf_header(&mut out, rows.rows(), rows.cols());
    put_f32s(&mut out, rows.as_slice().iter().copied());
    out
}

pub fn write_features(path: &Path, rows: &Mat<f64>) -> Result<()> {
    write_all(path, &encode_features(rows))
}

pub fn read_features(path: &Path) -> Result<Mat<f64>> {
    let buf = read_all(path)?;
    let mut r = Reader { path, buf: &buf, pos: 0 };
    let (n, d) = r.clmf_header()?;
    let data = r.f32s(n.checked_mul(d).ok_or_else(|| malformed(path, "size overflow"))?)?;
    r.finish()?;
    Mat::from_vec(n, d, data).map_err(|e| malformed(path, e.to_string()))
}

/// Pyramid layout written next to feature dumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub pyramid: Vec<[usize; 2]>,
    #[serde(rename = "B")]
    pub block_count: usize,
    pub d: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub beta: f64,
    pub rho: f64,
    pub descriptor: String,
}

impl FeatureLayout {
    pub fn new(f: &SpmFeature<f64>, cfg: &RunConfig) -> Self {
        Self {
            pyramid: cfg.pyramid.clone(),
            block_count: f.block_count(),
            d: f.block_dim(),
            dim: f.block_count() * f.block_dim(),
            beta: cfg.beta,
            rho: cfg.rho,
            descriptor: cfg.descriptor.clone(),
        }
    }
}

/// Serializable mirror of one trajectory point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub dual_objective: f64,
    pub trace_before: Option<f64>,
    pub trace_after: Option<f64>,
}

impl From<&IterationRecord<f64>> for TrajectoryPoint {
    fn from(r: &IterationRecord<f64>) -> Self {
        Self {
            dual_objective: r.dual_objective,
            trace_before: r.trace_before,
            trace_after: r.trace_after,
        }
    }
}

/// JSON header of a model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub version: u32,
    pub classes: Vec<String>,
    #[serde(rename = "M")]
    pub class_count: usize,
    #[serde(rename = "B")]
    pub block_count: usize,
    #[serde(rename = "d")]
    pub block_dim: usize,
    #[serde(rename = "r")]
    pub rank: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub beta: f64,
    pub rho: f64,
    pub pyramid: Vec<[usize; 2]>,
    pub config: RunConfig,
    pub iterations: usize,
    pub converged: bool,
    pub dual_objectives: Vec<f64>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// A trained classifier together with everything needed to featurize new
/// images.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub classes: Vec<String>,
    pub config: RunConfig,
    pub model: LrsvmModel<f64>,
}

impl TrainedModel {
    pub fn header(&self) -> ModelHeader {
        let p = &self.model.projection;
        ModelHeader {
            version: FORMAT_VERSION,
            classes: self.classes.clone(),
            class_count: self.model.class_count(),
            block_count: p.block_count(),
            block_dim: p.block_dim(),
            rank: p.rank(),
            c: self.model.c,
            beta: self.config.beta,
            rho: self.config.rho,
            pyramid: self.config.pyramid.clone(),
            config: self.config.clone(),
            iterations: self.model.iterations,
            converged: self.model.converged,
            dual_objectives: self.model.classifiers.iter().map(|s| s.dual_objective).collect(),
            trajectory: self.model.trajectory.iter().map(TrajectoryPoint::from).collect(),
        }
    }

    pub fn payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.model.storage_len() * 8);
        let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
        for l in self.model.projection.blocks() {
            l.as_slice().iter().for_each(|&v| put(v));
        }
        for s in &self.model.classifiers {
            s.w.iter().for_each(|&v| put(v));
            put(s.b);
        }
        out
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        let payload = self.payload();
        let mut out = Vec::with_capacity(16 + header.len() + payload.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&payload);
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_all(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = read_all(path)?;
        let mut r = Reader { path, buf: &buf, pos: 0 };
        let header = read_header(&mut r)?;
        let (b, d, k, m) = (header.block_count, header.block_dim, header.rank, header.class_count);
        if header.classes.len() != m || header.dual_objectives.len() != m || k == 0 || k > d || b == 0 {
            return Err(malformed(path, "inconsistent header"));
        }
        let blocks = (0..b)
            .map(|_| Ok(Mat::from_vec(d, k, r.f64s(d * k)?).expect("block shape")))
            .collect::<Result<Vec<_>>>()?;
        let projection = BlockProjection::from_blocks_unchecked(blocks).map_err(|e| malformed(path, e.to_string()))?;
        let classifiers = (0..m)
            .map(|c| {
                let w = r.f64s(b * k)?;
                let bias = r.f64s(1)?[0];
                Ok(BinarySvm {
                    alpha: Vec::new(),
                    w,
                    b: bias,
                    dual_objective: header.dual_objectives[c],
                    iterations: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        header
            .config
            .validate()
            .map_err(|e| malformed(path, format!("embedded config: {e}")))?;
        Ok(Self {
            classes: header.classes,
            config: header.config,
            model: LrsvmModel {
                projection,
                classifiers,
                c: header.c,
                trajectory: header
                    .trajectory
                    .iter()
                    .map(|t| IterationRecord {
                        dual_objective: t.dual_objective,
                        trace_before: t.trace_before,
                        trace_after: t.trace_after,
                    })
                    .collect(),
                iterations: header.iterations,
                converged: header.converged,
            },
        })
    }
}

fn read_header(r: &mut Reader<'_>) -> Result<ModelHeader> {
    r.magic(MODEL_MAGIC)?;
    let len = r.u64()? as usize;
    let path = r.path;
    serde_json::from_slice(r.take(len)?).map_err(|e| malformed(path, format!("header: {e}")))
}

/// Reads only the JSON header of a model file.
pub fn read_model_header(path: &Path) -> Result<ModelHeader> {
    let buf = read_all(path)?;
    read_header(&mut Reader { path, buf: &buf, pos: 0 })
}
