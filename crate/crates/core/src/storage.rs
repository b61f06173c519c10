//! On-disk layout. Each stage writes a directory with raw little-endian `f64`
//! arrays (row-major) and a `manifest.json` carrying shapes, SHA-256 digests
//! and the configuration that produced them. The manifest is written last.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiment::{Dataset, Inversion};
use crate::geometry::{RandomSourceSet, Scene};
use crate::inversion::{IndicatorMap, MapMetrics};
use crate::operators::{ImagingOperator, OperatorKind};
use crate::synthesis::{FieldPart, NoiseRecord, PulsedFieldSet, TimeGrid, Weighting};
use ndarray::{Array2, Array3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub file: String,
    pub shape: Vec<usize>,
    pub sha256: String,
}

fn encode(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn write_array(dir: &Path, name: &str, shape: &[usize], values: &[f64]) -> Result<ArrayEntry> {
    debug_assert_eq!(shape.iter().product::<usize>(), values.len());
    let file = format!("{name}.f64");
    let bytes = encode(values);
    let path = dir.join(&file);
    std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    Ok(ArrayEntry {
        file,
        shape: shape.to_vec(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Read an array and check its size and digest.
pub fn read_array(dir: &Path, entry: &ArrayEntry) -> Result<Vec<f64>> {
    let path = dir.join(&entry.file);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let len: usize = entry.shape.iter().product();
    let bad = |message: String| Error::Manifest {
        path: path.clone(),
        message,
    };
    if bytes.len() != 8 * len {
        return Err(bad(format!("expected {} bytes for shape {:?}, found {}", 8 * len, entry.shape, bytes.len())));
    }
    let digest = hex::encode(Sha256::digest(&bytes));
    if digest != entry.sha256 {
        return Err(bad(format!("digest {digest} does not match manifest {}", entry.sha256)));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn read_array3(dir: &Path, entry: &ArrayEntry) -> Result<Array3<f64>> {
    let data = read_array(dir, entry)?;
    let shape: [usize; 3] = entry.shape.as_slice().try_into().map_err(|_| Error::Manifest {
        path: dir.join(&entry.file),
        message: format!("expected a rank-3 array, shape {:?}", entry.shape),
    })?;
    Ok(Array3::from_shape_vec(shape, data).expect("length checked"))
}

fn read_array2(dir: &Path, entry: &ArrayEntry) -> Result<Array2<f64>> {
    let data = read_array(dir, entry)?;
    let shape: [usize; 2] = entry.shape.as_slice().try_into().map_err(|_| Error::Manifest {
        path: dir.join(&entry.file),
        message: format!("expected a rank-2 array, shape {:?}", entry.shape),
    })?;
    Ok(Array2::from_shape_vec(shape, data).expect("length checked"))
}

fn standard(a: &Array3<f64>) -> Vec<f64> {
    a.as_standard_layout().iter().copied().collect()
}

pub fn write_manifest<T: Serialize>(dir: &Path, manifest: &T) -> Result<()> {
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest<T: DeserializeOwned>(dir: &Path) -> Result<T> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path,
        message: e.to_string(),
    })
}

fn check_version(dir: &Path, format: &str, expected: &str, version: u32) -> Result<()> {
    if format != expected || version != FORMAT_VERSION {
        return Err(Error::Manifest {
            path: dir.join(MANIFEST),
            message: format!("expected {expected} v{FORMAT_VERSION}, found {format} v{version}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldEntry {
    pub array: ArrayEntry,
    pub times: Vec<f64>,
    pub weighting: Weighting,
    pub part: FieldPart,
    pub noise: Option<NoiseRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub data_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    pub scene: Scene,
    pub sources: RandomSourceSet,
    pub grid: TimeGrid,
    pub frequencies: usize,
    pub passive_x: FieldEntry,
    pub passive_y: FieldEntry,
    pub active: FieldEntry,
    pub incident: FieldEntry,
}

const DATASET: &str = "tdlsm-dataset";
const OPERATOR: &str = "tdlsm-operator";
const MAP: &str = "tdlsm-map";

fn write_field(dir: &Path, name: &str, f: &PulsedFieldSet) -> Result<FieldEntry> {
    Ok(FieldEntry {
        array: write_array(dir, name, f.values.shape(), &standard(&f.values))?,
        times: f.times.clone(),
        weighting: f.weighting,
        part: f.part,
        noise: f.noise,
    })
}

fn read_field(dir: &Path, e: &FieldEntry) -> Result<PulsedFieldSet> {
    Ok(PulsedFieldSet {
        times: e.times.clone(),
        weighting: e.weighting,
        part: e.part,
        noise: e.noise,
        values: read_array3(dir, &e.array)?,
    })
}

pub fn save_dataset(dir: &Path, cfg: &RunConfig, data: &Dataset) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = DatasetManifest {
        format: DATASET.into(),
        version: FORMAT_VERSION,
        data_hash: cfg.data_hash(),
        seed: data.sources.seed,
        config: cfg.clone(),
        scene: data.scene.clone(),
        sources: data.sources.clone(),
        grid: data.grid,
        frequencies: data.frequencies,
        passive_x: write_field(dir, "passive_x", &data.passive_x)?,
        passive_y: write_field(dir, "passive_y", &data.passive_y)?,
        active: write_field(dir, "active", &data.active)?,
        incident: write_field(dir, "incident", &data.incident)?,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, Dataset)> {
    let m: DatasetManifest = read_manifest(dir)?;
    check_version(dir, &m.format, DATASET, m.version)?;
    let data = Dataset {
        scene: m.scene.clone(),
        sources: m.sources.clone(),
        grid: m.grid,
        frequencies: m.frequencies,
        passive_x: read_field(dir, &m.passive_x)?,
        passive_y: read_field(dir, &m.passive_y)?,
        active: read_field(dir, &m.active)?,
        incident: read_field(dir, &m.incident)?,
    };
    Ok((m, data))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorManifest {
    pub format: String,
    pub version: u32,
    pub kind: OperatorKind,
    pub dt: f64,
    pub dy: f64,
    pub half: usize,
    pub receivers: usize,
    pub sources: usize,
    /// Hash of the configuration that produced the operator.
    pub config_hash: String,
    pub data_hash: String,
    pub noise: f64,
    pub config: RunConfig,
    pub matrix: ArrayEntry,
}

pub fn save_operator(dir: &Path, cfg: &RunConfig, op: &ImagingOperator) -> Result<OperatorManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let values: Vec<f64> = op.matrix.as_standard_layout().iter().copied().collect();
    let manifest = OperatorManifest {
        format: OPERATOR.into(),
        version: FORMAT_VERSION,
        kind: op.kind,
        dt: op.dt,
        dy: op.dy,
        half: op.half,
        receivers: op.receivers,
        sources: op.sources,
        config_hash: operator_hash(cfg, op.kind),
        data_hash: cfg.data_hash(),
        noise: cfg.noise,
        config: cfg.clone(),
        matrix: write_array(dir, "matrix", op.matrix.shape(), &values)?,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn load_operator(dir: &Path) -> Result<(OperatorManifest, ImagingOperator)> {
    let m: OperatorManifest = read_manifest(dir)?;
    check_version(dir, &m.format, OPERATOR, m.version)?;
    let op = ImagingOperator {
        kind: m.kind,
        dt: m.dt,
        dy: m.dy,
        half: m.half,
        receivers: m.receivers,
        sources: m.sources,
        matrix: read_array2(dir, &m.matrix)?,
    };
    Ok((m, op))
}

/// Cache key of an operator: data plus the settings that shape the kernel.
pub fn operator_hash(cfg: &RunConfig, kind: OperatorKind) -> String {
    let key = serde_json::json!({
        "data": cfg.data_hash(),
        "kind": kind,
        "noise": cfg.noise,
        "correlation": cfg.correlation,
    });
    hex::encode(Sha256::digest(key.to_string().as_bytes()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapManifest {
    pub format: String,
    pub version: u32,
    pub kind: OperatorKind,
    pub config_hash: String,
    pub operator_hash: String,
    pub retained: usize,
    /// Full singular spectrum of the operator.
    pub spectrum: Vec<f64>,
    pub metrics: MapMetrics,
    pub max: f64,
    pub degenerate: Vec<usize>,
    pub grid: crate::geometry::SamplingGrid,
    pub scene: Scene,
    pub values: ArrayEntry,
}

pub fn save_map(
    dir: &Path,
    cfg: &RunConfig,
    operator_hash: &str,
    scene: &Scene,
    inv: &Inversion,
) -> Result<MapManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let map = &inv.map;
    let manifest = MapManifest {
        format: MAP.into(),
        version: FORMAT_VERSION,
        kind: map.kind,
        config_hash: cfg.full_hash(),
        operator_hash: operator_hash.to_owned(),
        retained: inv.svd.retained(),
        spectrum: inv.svd.spectrum.clone(),
        metrics: inv.metrics,
        max: map.max,
        degenerate: map.degenerate.clone(),
        grid: map.grid.clone(),
        scene: scene.clone(),
        values: write_array(dir, "indicator", &[map.grid.ny, map.grid.nx], &map.values)?,
    };
    crate::render::write_csv(&dir.join("indicator.csv"), map)?;
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn load_map(dir: &Path) -> Result<(MapManifest, IndicatorMap)> {
    let m: MapManifest = read_manifest(dir)?;
    check_version(dir, &m.format, MAP, m.version)?;
    let map = IndicatorMap {
        grid: m.grid.clone(),
        kind: m.kind,
        values: read_array(dir, &m.values)?,
        max: m.max,
        degenerate: m.degenerate.clone(),
    };
    Ok((m, map))
}

/// Standard locations under an output root.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset")
    }

    pub fn operator(&self, kind: OperatorKind) -> PathBuf {
        self.root.join(format!("operator-{kind}"))
    }

    pub fn map(&self, kind: OperatorKind) -> PathBuf {
        self.root.join(format!("map-{kind}"))
    }

    pub fn validation(&self) -> PathBuf {
        self.root.join("validation.jsonl")
    }
}
