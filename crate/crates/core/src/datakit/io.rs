//! CSV formats: header-less `label,f1,...,fd` datasets and
//! `client_id,dataset_index` partition manifests.

use std::{
    fs::File,
    io::{BufWriter, Write},
    path::Path,
};

use super::{ClientPartition, Dataset};
use crate::{Error, Result};

fn load_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn reader(path: &Path, has_headers: bool) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| load_err(path, 0, format!("cannot open: {e}")))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Loads rows `label,f1,...,fd`. The class count is `1 + max label` and the
/// dimension is taken from the first row.
pub fn load_csv_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = reader(path, false)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            load_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 2 {
            return Err(load_err(
                path,
                line,
                "row needs a label and at least one feature",
            ));
        }
        let d = *dim.get_or_insert(record.len() - 1);
        if record.len() - 1 != d {
            return Err(load_err(
                path,
                line,
                format!("expected {} columns, found {}", d + 1, record.len()),
            ));
        }
        let label: usize = record[0].parse().map_err(|_| {
            load_err(
                path,
                line,
                format!("label `{}` is not a nonnegative integer", &record[0]),
            )
        })?;
        labels.push(label);
        for (col, cell) in record.iter().enumerate().skip(1) {
            let x: f64 = cell.parse().map_err(|_| {
                load_err(
                    path,
                    line,
                    format!("column {}: `{cell}` is not a number", col + 1),
                )
            })?;
            if !x.is_finite() {
                return Err(load_err(
                    path,
                    line,
                    format!("column {}: non-finite value", col + 1),
                ));
            }
            features.push(x);
        }
    }
    let Some(dim) = dim else {
        return Err(Error::EmptyFile(path.to_path_buf()));
    };
    let num_classes = 1 + labels.iter().copied().max().unwrap_or(0);
    Dataset::new(features, dim, labels, num_classes)
}

/// Writes `dataset` in the format read by [`load_csv_dataset`]; floats use the
/// shortest representation that round-trips exactly.
pub fn write_csv_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for i in 0..dataset.len() {
        write!(out, "{}", dataset.labels()[i])?;
        for x in dataset.row(i) {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `client_id,dataset_index` with a header row, clients ascending.
pub fn write_partition_manifest(partition: &ClientPartition, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "client_id,dataset_index")?;
    for (k, set) in partition.index_sets().iter().enumerate() {
        for i in set {
            writeln!(out, "{k},{i}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a manifest written by [`write_partition_manifest`] and validates it
/// against a dataset of `dataset_len` examples.
pub fn read_partition_manifest(
    path: impl AsRef<Path>,
    dataset_len: usize,
) -> Result<ClientPartition> {
    let path = path.as_ref();
    let mut rdr = reader(path, true)?;
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for record in rdr.records() {
        let record = record
            .map_err(|e| load_err(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(load_err(
                path,
                line,
                format!("expected 2 columns, found {}", record.len()),
            ));
        }
        let parse = |cell: &str| -> Result<usize> {
            cell.parse()
                .map_err(|_| load_err(path, line, format!("`{cell}` is not a nonnegative integer")))
        };
        let (k, i) = (parse(&record[0])?, parse(&record[1])?);
        if sets.len() <= k {
            sets.resize_with(k + 1, Vec::new);
        }
        sets[k].push(i);
    }
    if sets.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    ClientPartition::new(sets, dataset_len)
}
