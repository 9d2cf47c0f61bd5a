//! Dataset CSV with a JSON sidecar, JSON models and reports, CSV tables.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::SnapshotDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub dim: usize,
    pub dt: f64,
    pub seed: Option<u64>,
    pub system: Option<String>,
}

/// `data.csv` -> `data.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

fn io_err(context: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        context: context.display().to_string(),
        source,
    }
}

fn csv_err(context: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        context: context.display().to_string(),
        source,
    }
}

fn json_err(context: &Path) -> impl FnOnce(serde_json::Error) -> Error + '_ {
    move |source| Error::Json {
        context: context.display().to_string(),
        source,
    }
}

pub fn write_dataset(path: &Path, data: &SnapshotDataset, meta: &DatasetMeta) -> Result<()> {
    let n = data.dimension();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = (1..=n)
        .map(|i| format!("x{i}"))
        .chain((1..=n).map(|i| format!("y{i}")))
        .collect();
    w.write_record(&header).map_err(csv_err(path))?;
    let mut row = Vec::with_capacity(2 * n);
    for (x, y) in data.pairs() {
        row.clear();
        row.extend(x.iter().chain(y).map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    write_json(&sidecar_path(path), meta)
}

pub fn read_dataset(path: &Path) -> Result<(SnapshotDataset, DatasetMeta)> {
    let meta: DatasetMeta = read_json(&sidecar_path(path))?;
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.len() != 2 * meta.dim {
        return Err(Error::InvalidInput(format!(
            "{}: {} columns, expected {} for dimension {}",
            path.display(),
            header.len(),
            2 * meta.dim,
            meta.dim
        )));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("{}: row {}: bad number {field:?}", path.display(), line + 2))
            })?;
            if j < meta.dim {
                x.push(v);
            } else {
                y.push(v);
            }
        }
    }
    Ok((SnapshotDataset::new(meta.dim, meta.dt, x, y)?, meta))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(json_err(path))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(f)).map_err(json_err(path))
}

pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}
