use std::fs::File;
use std::path::Path;

use nigmg::nodemodel::{Factor, FactorDesign};
use nigmg::wavelet::Signal;

use crate::error::{CliError, CliResult};

/// Observations plus the location labels from an optional header row.
pub struct DataFile {
    pub labels: Option<Vec<String>>,
    pub signals: Vec<Signal<f64>>,
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// One observation per row. The first row is a header when any of its fields
/// fails to parse as a number.
pub fn read_data(path: &Path) -> CliResult<DataFile> {
    let mut labels: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let record = record?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => labels = Some(record.iter().map(String::from).collect()),
            Err(e) => {
                return Err(CliError::Data(format!("{} row {}: {e}", path.display(), i + 1)));
            }
        }
    }
    let width = rows
        .first()
        .map(Vec::len)
        .ok_or_else(|| CliError::Data(format!("{}: no observations", path.display())))?;
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(CliError::Data(format!(
            "{}: observation {} has {} values, expected {width}",
            path.display(),
            bad + 1,
            rows[bad].len()
        )));
    }
    if let Some(l) = &labels {
        if l.len() != width {
            return Err(CliError::Data(format!(
                "{}: header has {} labels for {width} columns",
                path.display(),
                l.len()
            )));
        }
    }
    let signals = rows
        .into_iter()
        .map(Signal::new)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DataFile { labels, signals })
}

/// Header row of factor names, then one row of group labels per observation.
pub fn read_design(path: &Path, n: usize) -> CliResult<FactorDesign> {
    let mut rows = reader(path)?.into_records();
    let names: Vec<String> = match rows.next() {
        Some(r) => r?.iter().map(String::from).collect(),
        None => return Err(CliError::Data(format!("{}: empty design file", path.display()))),
    };
    let mut columns: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for (i, record) in rows.enumerate() {
        let record = record?;
        if record.len() != names.len() {
            return Err(CliError::Data(format!(
                "{}: row {} has {} labels, expected {}",
                path.display(),
                i + 2,
                record.len(),
                names.len()
            )));
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            col.push(field.to_string());
        }
    }
    if columns.first().map_or(0, Vec::len) != n {
        return Err(CliError::Data(format!(
            "{}: {} design rows for {n} observations",
            path.display(),
            columns.first().map_or(0, Vec::len)
        )));
    }
    let factors = names
        .iter()
        .zip(&columns)
        .map(|(name, labels)| Factor::from_labels(name.clone(), labels))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FactorDesign::new(factors)?)
}

/// Column-oriented CSV: a `location` column, then one column per curve.
pub fn write_curves(path: &Path, locations: &[String], columns: &[(&str, &[f64])]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["location"];
    header.extend(columns.iter().map(|(name, _)| *name));
    w.write_record(&header)?;
    for (i, loc) in locations.iter().enumerate() {
        let mut row = vec![loc.clone()];
        row.extend(columns.iter().map(|(_, v)| v[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn locations(data: &DataFile) -> Vec<String> {
    match &data.labels {
        Some(l) => l.clone(),
        None => (0..data.signals[0].len()).map(|i| i.to_string()).collect(),
    }
}
