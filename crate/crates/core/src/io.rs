//! File formats: ratings CSV, predicted-vector CSV, experiment config JSON and
//! the JSON + CSV report pair.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pipeline::{ExperimentConfig, MetricsReport};
use crate::types::{validate_dataset, CandidateSet, CriteriaVector, Dataset, RatingRecord};

const ID_COLUMNS: [&str; 2] = ["user_id", "item_id"];
const UNKNOWN: &str = "?";

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

struct Table {
    header: Vec<String>,
    /// (1-based line, fields)
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table<R: Read>(
    reader: R,
    source: &Path,
    leading: &[&str],
    min_extra: usize,
) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(parse_err(source, 1, "no header")),
        Some(r) => r.map_err(|e| parse_err(source, 1, e.to_string()))?,
    };
    let header: Vec<String> = header.iter().map(str::to_owned).collect();
    for (i, want) in leading.iter().enumerate() {
        if header.get(i).map(String::as_str) != Some(want) {
            return Err(parse_err(
                source,
                1,
                format!("header must start with {}", leading.join(",")),
            ));
        }
    }
    if header.len() < leading.len() + min_extra {
        return Err(parse_err(source, 1, "header names no criteria columns"));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(source, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(Table { header, rows })
}

fn parse_number(source: &Path, line: usize, column: &str, text: &str) -> Result<f64> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            parse_err(
                source,
                line,
                format!("invalid number {text:?} in column {column}"),
            )
        })
}

/// Parses a ratings CSV (`user_id,item_id,overall,<criteria...>`) without
/// validating it. Rows whose ratings are all `?` are unknowns and skipped.
pub fn read_dataset<R: Read>(reader: R, source: &Path) -> Result<Dataset> {
    let table = read_table(reader, source, &["user_id", "item_id", "overall"], 1)?;
    let criteria_names = table.header[3..].to_vec();
    let mut records = Vec::with_capacity(table.rows.len());
    for (line, fields) in table.rows {
        if fields[2..].iter().all(|f| f == UNKNOWN) {
            continue;
        }
        let numbers = fields[2..]
            .iter()
            .zip(&table.header[2..])
            .map(|(f, col)| parse_number(source, line, col, f))
            .collect::<Result<Vec<_>>>()?;
        let mut fields = fields.into_iter();
        let user = fields.next().expect("user column");
        let item = fields.next().expect("item column");
        records.push(RatingRecord::new(
            user,
            item,
            numbers[0],
            numbers[1..].to_vec(),
        ));
    }
    Ok(Dataset::new(criteria_names, records))
}

/// Reads and validates a ratings CSV; every violation is reported at once.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let d = read_dataset(BufReader::new(File::open(path)?), path)?;
    validate_dataset(&d).map_err(Error::Validation)?;
    Ok(d)
}

pub fn write_dataset<W: Write>(d: &Dataset, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = vec!["user_id", "item_id", "overall"];
    header.extend(d.criteria_names.iter().map(String::as_str));
    wtr.write_record(&header)?;
    for r in &d.records {
        let mut row = vec![r.user_id.clone(), r.item_id.clone(), r.overall.to_string()];
        row.extend(r.criteria.iter().map(f64::to_string));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(d, BufWriter::new(File::create(path)?))
}

/// Predicted criteria vectors, one row per user-item pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub criteria_names: Vec<String>,
    pub rows: Vec<(String, String, CriteriaVector)>,
}

impl Predictions {
    /// One candidate set per user, users sorted by id.
    pub fn candidate_sets(&self) -> Result<Vec<CandidateSet>> {
        let mut by_user: BTreeMap<&str, Vec<(&str, CriteriaVector)>> = BTreeMap::new();
        for (u, i, v) in &self.rows {
            by_user.entry(u).or_default().push((i, v.clone()));
        }
        by_user
            .into_iter()
            .map(|(u, items)| CandidateSet::new(u, items))
            .collect()
    }
}

/// Parses `user_id,item_id,<criteria...>`.
pub fn read_predictions<R: Read>(reader: R, source: &Path) -> Result<Predictions> {
    let table = read_table(reader, source, &ID_COLUMNS, 1)?;
    let criteria_names = table.header[2..].to_vec();
    let rows = table
        .rows
        .into_iter()
        .map(|(line, fields)| {
            let values = fields[2..]
                .iter()
                .zip(&criteria_names)
                .map(|(f, col)| parse_number(source, line, col, f))
                .collect::<Result<Vec<_>>>()?;
            let mut fields = fields.into_iter();
            Ok((
                fields.next().expect("user column"),
                fields.next().expect("item column"),
                CriteriaVector::new(values)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Predictions {
        criteria_names,
        rows,
    })
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Predictions> {
    let path = path.as_ref();
    read_predictions(BufReader::new(File::open(path)?), path)
}

pub fn write_predictions<W: Write>(p: &Predictions, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = ID_COLUMNS.to_vec();
    header.extend(p.criteria_names.iter().map(String::as_str));
    wtr.write_record(&header)?;
    for (u, i, v) in &p.rows {
        let mut row = vec![u.clone(), i.clone()];
        row.extend(v.as_slice().iter().map(f64::to_string));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Candidate sets built from the observed criteria ratings of a dataset.
pub fn dataset_candidate_sets(d: &Dataset) -> Result<Vec<CandidateSet>> {
    Predictions {
        criteria_names: d.criteria_names.clone(),
        rows: d
            .records
            .iter()
            .map(|r| {
                Ok((
                    r.user_id.clone(),
                    r.item_id.clone(),
                    CriteriaVector::new(r.criteria.clone())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
    }
    .candidate_sets()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    cfg.validate()?;
    Ok(cfg)
}

/// The flattened CSV written next to a JSON report.
pub fn report_csv_path(path: &Path) -> PathBuf {
    path.with_extension("csv")
}

/// Writes the report as pretty JSON at `path` and its cells as CSV beside it.
pub fn emit_report(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut json = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut json, report)?;
    json.write_all(b"\n")?;
    json.flush()?;
    write_report_csv(report, BufWriter::new(File::create(report_csv_path(path))?))
}

pub fn write_report_csv<W: Write>(report: &MetricsReport, w: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "method",
        "label",
        "k",
        "sub",
        "N",
        "fold",
        "f1",
        "ndcg",
        "improvement_f1",
        "improvement_ndcg",
    ])?;
    for c in &report.cells {
        wtr.write_record([
            c.method.clone(),
            c.label.clone(),
            opt(c.k),
            c.sub.clone().unwrap_or_default(),
            c.n.to_string(),
            c.fold.to_string(),
            c.f1.to_string(),
            c.ndcg.to_string(),
            opt(c.improvement_f1),
            opt(c.improvement_ndcg),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<MetricsReport> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
