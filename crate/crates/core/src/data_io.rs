//! CSV ingestion, preprocessing, synthetic data and dataset diagnostics.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetSnapshot};
use crate::error::{AuditError, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn is_numeric(&self) -> bool {
        matches!(self.data, ColumnData::Numeric(_))
    }
}

/// Typed feature columns plus the raw label column.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub columns: Vec<Column>,
    pub label_column: String,
    pub labels: Vec<String>,
    /// Rows skipped because a field was empty.
    pub dropped_rows: usize,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }
}

fn data_err(path: &Path, message: impl Into<String>) -> AuditError {
    AuditError::Data {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| data_err(path, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::new(file));
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| data_err(path, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(data_err(path, "missing header row"));
    }
    if header.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(data_err(path, "missing header row (first line is numeric)"));
    }
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| data_err(path, format!("label column {label_column:?} not found")))?;

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    let mut dropped = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            data_err(path, format!("line {line}: {e}"))
        })?;
        if rec.iter().any(|f| f.trim().is_empty()) {
            dropped += 1;
            continue;
        }
        for (c, f) in cells.iter_mut().zip(rec.iter()) {
            c.push(f.trim().to_string());
        }
    }

    let labels = cells[label_idx].clone();
    let columns = header
        .iter()
        .zip(cells)
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, (name, vals))| {
            let parsed: Option<Vec<f64>> = vals.iter().map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite())).collect();
            let data = match parsed {
                Some(nums) => ColumnData::Numeric(nums),
                None => ColumnData::Categorical(vals),
            };
            Column { name: name.clone(), data }
        })
        .collect();
    Ok(RawTable {
        columns,
        label_column: label_column.to_string(),
        labels,
        dropped_rows: dropped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    None,
    #[default]
    MinMax01,
    Standardize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessSpec {
    pub max_rows: usize,
    pub normalize: Normalize,
    /// Drop categorical columns instead of one-hot encoding them.
    pub drop_categorical: bool,
    pub subsample_seed: u64,
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        PreprocessSpec {
            max_rows: 1000,
            normalize: Normalize::MinMax01,
            drop_categorical: false,
            subsample_seed: 0,
        }
    }
}

impl PreprocessSpec {
    /// Random-forest convention: 500 rows, numeric features only.
    pub fn for_random_forest() -> Self {
        PreprocessSpec {
            max_rows: 500,
            drop_categorical: true,
            ..Self::default()
        }
    }
}

/// Maps raw labels to {0, 1}. Numeric labels keep the rows labelled 0 and 1;
/// other labels take the first two distinct values in sorted order.
fn binarize(labels: &[String]) -> Vec<Option<u8>> {
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    match numeric {
        Some(vals) => vals
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    Some(0)
                } else if v == 1.0 {
                    Some(1)
                } else {
                    None
                }
            })
            .collect(),
        None => {
            let distinct: BTreeSet<&str> = labels.iter().map(|s| s.as_str()).collect();
            let classes: Vec<&str> = distinct.into_iter().take(2).collect();
            labels
                .iter()
                .map(|l| classes.iter().position(|c| c == l).map(|p| p as u8))
                .collect()
        }
    }
}

pub fn preprocess(table: &RawTable, spec: &PreprocessSpec) -> Result<Dataset> {
    if spec.max_rows < 2 {
        return Err(AuditError::invalid("max_rows must be at least 2"));
    }
    let bin = binarize(&table.labels);
    let mut keep: Vec<usize> = (0..table.n_rows()).filter(|&i| bin[i].is_some()).collect();
    if keep.len() > spec.max_rows {
        let mut rng = stream_rng(spec.subsample_seed, Stream::Data);
        let mut picked: Vec<usize> = sample_indices(&mut rng, keep.len(), spec.max_rows).into_vec();
        picked.sort_unstable();
        keep = picked.into_iter().map(|j| keep[j]).collect();
    }
    let labels: Vec<u8> = keep.iter().map(|&i| bin[i].unwrap()).collect();
    for y in [0u8, 1] {
        let c = labels.iter().filter(|&&l| l == y).count();
        if c < 2 {
            return Err(AuditError::invalid(format!("class {y} has {c} rows after preprocessing; need at least 2")));
        }
    }

    let mut cols: Vec<Vec<f64>> = Vec::new();
    for col in &table.columns {
        match &col.data {
            ColumnData::Numeric(v) => cols.push(keep.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) if !spec.drop_categorical => {
                let cats: BTreeSet<&str> = keep.iter().map(|&i| v[i].as_str()).collect();
                for cat in cats {
                    cols.push(keep.iter().map(|&i| if v[i] == cat { 1.0 } else { 0.0 }).collect());
                }
            }
            ColumnData::Categorical(_) => {}
        }
    }
    if cols.is_empty() {
        return Err(AuditError::invalid("no feature columns remain after preprocessing"));
    }
    for c in cols.iter_mut() {
        normalize_column(c, spec.normalize);
    }
    let n = keep.len();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    match spec.normalize {
        Normalize::MinMax01 => {
            let radius = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
            Dataset::new(rows, labels, vec![(0.0, 1.0); cols.len()], radius)
        }
        _ => Dataset::from_rows(rows, labels),
    }
}

fn normalize_column(c: &mut [f64], how: Normalize) {
    match how {
        Normalize::None => {}
        Normalize::MinMax01 => {
            let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w = hi - lo;
            for v in c.iter_mut() {
                *v = if w > 0.0 { ((*v - lo) / w).clamp(0.0, 1.0) } else { 0.0 };
            }
        }
        Normalize::Standardize => {
            let n = c.len() as f64;
            let mean = c.iter().sum::<f64>() / n;
            let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            for v in c.iter_mut() {
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
    }
}

impl Dataset {
    /// Numeric table with columns f0.. and labels "0"/"1".
    pub fn to_table(&self) -> RawTable {
        let columns = (0..self.d())
            .map(|f| Column {
                name: format!("f{f}"),
                data: ColumnData::Numeric(self.rows().map(|r| r[f]).collect()),
            })
            .collect();
        RawTable {
            columns,
            label_column: "label".into(),
            labels: self.labels().iter().map(|y| y.to_string()).collect(),
            dropped_rows: 0,
        }
    }
}

/// σ_max/σ_min of the column-centered feature matrix; +∞ when σ_min < 1e−12.
pub fn nonsphericity(data: &Dataset) -> f64 {
    let (n, d) = (data.n(), data.d());
    if n <= d {
        return f64::INFINITY;
    }
    let mut m = DMatrix::from_row_slice(n, d, data.features());
    for mut col in m.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min < 1e-12 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Two unit-variance Gaussian clusters whose means are `separation` apart
/// along the diagonal. Labels alternate 0, 1, 0, ...
pub fn synth_blobs(n: usize, d: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n < 4 || d < 1 {
        return Err(AuditError::invalid("synth_blobs needs n >= 4 and d >= 1"));
    }
    let mut rng = stream_rng(seed, Stream::Data);
    let shift = separation / (d as f64).sqrt();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 2) as u8;
        let row: Vec<f64> = (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + if y == 1 { shift } else { 0.0 }
            })
            .collect();
        rows.push(row);
        labels.push(y);
    }
    Dataset::from_rows(rows, labels)
}

pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let f = File::create(path)?;
    serde_json::to_writer(BufWriter::new(f), &data.to_snapshot())?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| data_err(path, e.to_string()))?;
    let snap: DatasetSnapshot = serde_json::from_reader(BufReader::new(f))?;
    Dataset::from_snapshot(snap)
}
