//! The CSV dialect read and written by every command.
//!
//! A header row, then one row per day. The first column may hold ISO-8601
//! dates (`YYYY-MM-DD`); every other column is a series of strictly positive
//! decimal prices. Lines starting with `#` are comments. Values are written
//! with the shortest representation that parses back to the same `f64`.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub dates: Option<Vec<String>>,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}

fn is_date(s: &str) -> bool {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

fn csv_error(path: &Path, err: csv::Error) -> CliError {
    let line = err.position().map(|p| p.line());
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} field(s), found {len}"),
        csv::ErrorKind::Io(io) => return CliError::input(path, io.to_string()),
        _ => err.to_string(),
    };
    match line {
        Some(line) => CliError::parse(path, line, message),
        None => CliError::input(path, message),
    }
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let file = File::open(path).map_err(|e| CliError::input(path, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::input(path, "missing header row"));
    }

    let mut dated: Option<bool> = None;
    let mut dates = Vec::new();
    let mut seen_dates = HashSet::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let has_date = *dated.get_or_insert_with(|| {
            header.len() > 1
                && (header[0].eq_ignore_ascii_case("date") || record[0].parse::<f64>().is_err())
        });
        let first_value = usize::from(has_date);
        if values.is_empty() {
            values = vec![Vec::new(); header.len() - first_value];
        }
        if has_date {
            let date = &record[0];
            if !is_date(date) {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("'{date}' is not an ISO-8601 date (YYYY-MM-DD)"),
                ));
            }
            if !seen_dates.insert(date.to_string()) {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("duplicate date {date}"),
                ));
            }
            dates.push(date.to_string());
        }
        for (k, field) in record.iter().enumerate().skip(first_value) {
            let name = &header[k];
            let v: f64 = field.parse().map_err(|_| {
                CliError::parse(
                    path,
                    line,
                    format!("column '{name}': cannot parse '{field}' as a number"),
                )
            })?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("column '{name}': prices must be positive and finite, got {field}"),
                ));
            }
            values[k - first_value].push(v);
        }
    }

    // With no data rows only the header decides whether a date column exists.
    let has_date =
        dated.unwrap_or_else(|| header.len() > 1 && header[0].eq_ignore_ascii_case("date"));
    let names = &header[usize::from(has_date)..];
    if values.is_empty() {
        values = vec![Vec::new(); names.len()];
    }
    let mut unique = HashSet::new();
    for name in names {
        if name.is_empty() {
            return Err(CliError::input(path, "empty column name in header"));
        }
        if !unique.insert(name) {
            return Err(CliError::input(path, format!("duplicate column '{name}'")));
        }
    }
    Ok(Table {
        path: path.to_path_buf(),
        dates: has_date.then_some(dates),
        columns: names
            .iter()
            .zip(values)
            .map(|(name, values)| Column {
                name: name.clone(),
                values,
            })
            .collect(),
    })
}

/// Shortest text that parses back to exactly `v`, in exponent form when the
/// plain form would be long.
pub fn format_value(v: f64) -> String {
    let magnitude = v.abs();
    if magnitude != 0.0 && !(1e-4..1e16).contains(&magnitude) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Writes `header` and `rows` as CSV, preceded by one `#` comment line per
/// entry of `comments`.
pub fn write_csv<I>(path: &Path, comments: &[String], header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let out_err = |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    };
    let csv_err = |e: csv::Error| CliError::Output {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut file = BufWriter::new(File::create(path).map_err(out_err)?);
    for comment in comments {
        writeln!(file, "# {comment}").map_err(out_err)?;
    }
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush().map_err(out_err)?;
    Ok(())
}

/// Writes price columns in the ingestion dialect.
pub fn write_table(
    path: &Path,
    comments: &[String],
    dates: Option<&[String]>,
    columns: &[(&str, &[f64])],
) -> CliResult<()> {
    let mut header: Vec<&str> = Vec::with_capacity(columns.len() + 1);
    if dates.is_some() {
        header.push("date");
    }
    header.extend(columns.iter().map(|(name, _)| *name));
    let days = columns.first().map_or(0, |(_, v)| v.len());
    let rows = (0..days).map(|t| {
        let mut row = Vec::with_capacity(header.len());
        if let Some(dates) = dates {
            row.push(dates[t].clone());
        }
        row.extend(columns.iter().map(|(_, v)| format_value(v[t])));
        row
    });
    write_csv(path, comments, &header, rows)
}

/// Dates one input had that were missing from some other input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedDates {
    pub file: String,
    pub count: usize,
    pub dates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub dates: Option<Vec<String>>,
    pub columns: Vec<Column>,
    pub dropped: Vec<DroppedDates>,
}

const LISTED_DATES: usize = 20;

fn list_dates(dates: &[String]) -> String {
    let mut s = dates
        .iter()
        .take(LISTED_DATES)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if dates.len() > LISTED_DATES {
        s.push_str(&format!(" (+{} more)", dates.len() - LISTED_DATES));
    }
    s
}

/// Puts the columns of several tables on one day grid.
///
/// Dated tables are intersected on their dates, in the order of the first
/// table; days missing anywhere are dropped and reported, or rejected when
/// `strict`. Undated tables must have equal lengths.
pub fn align(tables: Vec<Table>, strict: bool) -> CliResult<Aligned> {
    let mut names = HashSet::new();
    for table in &tables {
        for column in &table.columns {
            if !names.insert(column.name.clone()) {
                return Err(CliError::Invalid(format!(
                    "column '{}' appears in more than one input",
                    column.name
                )));
            }
        }
    }

    let dated = tables.iter().filter(|t| t.dates.is_some()).count();
    if dated == 0 {
        let lengths: Vec<usize> = tables.iter().map(Table::rows).collect();
        if lengths.windows(2).any(|w| w[0] != w[1]) {
            let listing: Vec<String> = tables
                .iter()
                .map(|t| format!("{} ({} rows)", t.path.display(), t.rows()))
                .collect();
            return Err(CliError::Invalid(format!(
                "inputs without dates must have equal lengths: {}",
                listing.join(", ")
            )));
        }
        return Ok(Aligned {
            dates: None,
            columns: tables.into_iter().flat_map(|t| t.columns).collect(),
            dropped: Vec::new(),
        });
    }
    if dated != tables.len() {
        return Err(CliError::Invalid(
            "either every input has a date column or none does".into(),
        ));
    }

    let sets: Vec<HashSet<&String>> = tables
        .iter()
        .map(|t| t.dates.iter().flatten().collect())
        .collect();
    let common: Vec<String> = tables[0]
        .dates
        .iter()
        .flatten()
        .filter(|d| sets.iter().all(|s| s.contains(d)))
        .cloned()
        .collect();
    let common_set: HashSet<&String> = common.iter().collect();

    let mut dropped = Vec::new();
    for table in &tables {
        let missing: Vec<String> = table
            .dates
            .iter()
            .flatten()
            .filter(|d| !common_set.contains(d))
            .cloned()
            .collect();
        if !missing.is_empty() {
            dropped.push(DroppedDates {
                file: table.path.display().to_string(),
                count: missing.len(),
                dates: missing,
            });
        }
    }
    if strict && !dropped.is_empty() {
        let listing: Vec<String> = dropped
            .iter()
            .map(|d| {
                format!(
                    "{} has {} unmatched: {}",
                    d.file,
                    d.count,
                    list_dates(&d.dates)
                )
            })
            .collect();
        return Err(CliError::Invalid(format!(
            "misaligned inputs; {}",
            listing.join("; ")
        )));
    }

    let mut columns = Vec::new();
    for table in tables {
        let position: HashMap<&String, usize> = table
            .dates
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, d)| (d, i))
            .collect();
        let keep: Vec<usize> = common.iter().map(|d| position[d]).collect();
        for column in &table.columns {
            columns.push(Column {
                name: column.name.clone(),
                values: keep.iter().map(|&i| column.values[i]).collect(),
            });
        }
    }
    Ok(Aligned {
        dates: Some(common),
        columns,
        dropped,
    })
}
