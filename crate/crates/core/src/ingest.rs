//! Loading and rectangularizing raw market data.
//!
//! Each sector arrives as one CSV with header `date,ticker,price,volume`.
//! Malformed rows are collected as [`RejectedRow`]s rather than raised, so
//! one bad line never discards a file; structural problems (wrong header,
//! duplicate records) are hard errors. [`rectangularize`] then restricts
//! every panel to the dates on which **every** company in **every** panel
//! has a positive-volume observation, reporting what was dropped and why.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pipeline::PanelWindow;

/// One accepted observation, with its 1-based CSV line for traceability.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub line: u64,
    pub date: NaiveDate,
    pub ticker: String,
    pub price: f64,
    pub volume: f64,
}

/// A row that failed validation, kept for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// 1-based line number in the source file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

/// The raw contents of one sector file.
#[derive(Debug, Clone)]
pub struct RawPanel {
    /// Sector label: the file stem.
    pub name: String,
    pub path: PathBuf,
    pub records: Vec<RawRecord>,
    pub rejects: Vec<RejectedRow>,
}

const EXPECTED_HEADER: [&str; 4] = ["date", "ticker", "price", "volume"];

/// Reads one sector CSV.
///
/// Per-row validation failures (bad field count, unparsable date or
/// number, nonpositive price, negative volume, empty ticker) become
/// [`RejectedRow`]s. A wrong header is a [`Error::SchemaError`]; a
/// repeated `(ticker, date)` pair within the file is a
/// [`Error::DuplicateRecord`].
pub fn load_panel(path: &Path) -> Result<RawPanel> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let headers = reader.headers().map_err(|e| Error::ParseError {
        path: display.clone(),
        message: format!("unreadable header: {e}"),
    })?;
    let got: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if got != EXPECTED_HEADER {
        return Err(Error::SchemaError {
            path: display.clone(),
            message: format!(
                "expected header `{}`, found `{}`",
                EXPECTED_HEADER.join(","),
                got.join(",")
            ),
        });
    }

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut seen: BTreeMap<(String, NaiveDate), u64> = BTreeMap::new();
    for row in reader.into_records() {
        let record = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(0);
                rejects.push(RejectedRow {
                    line,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let reject = |reason: String| RejectedRow { line, reason };
        if record.len() != 4 {
            rejects.push(reject(format!("expected 4 fields, found {}", record.len())));
            continue;
        }
        let date = match NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                rejects.push(reject(format!("invalid date `{}`", record[0].trim())));
                continue;
            }
        };
        let ticker = record[1].trim().to_string();
        if ticker.is_empty() {
            rejects.push(reject("empty ticker".to_string()));
            continue;
        }
        let price: f64 = match record[2].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                rejects.push(reject(format!("invalid price `{}`", record[2].trim())));
                continue;
            }
        };
        if !price.is_finite() {
            rejects.push(reject(format!("non-finite price `{}`", record[2].trim())));
            continue;
        }
        if price <= 0.0 {
            rejects.push(reject(format!("nonpositive price {price}")));
            continue;
        }
        let volume: f64 = match record[3].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                rejects.push(reject(format!("invalid volume `{}`", record[3].trim())));
                continue;
            }
        };
        if !volume.is_finite() {
            rejects.push(reject(format!("non-finite volume `{}`", record[3].trim())));
            continue;
        }
        if volume < 0.0 {
            rejects.push(reject(format!("negative volume {volume}")));
            continue;
        }
        match seen.entry((ticker.clone(), date)) {
            Entry::Vacant(slot) => {
                slot.insert(line);
            }
            Entry::Occupied(slot) => {
                return Err(Error::DuplicateRecord {
                    ticker,
                    date,
                    first_file: display.clone(),
                    first_row: *slot.get(),
                    second_file: display,
                    second_row: line,
                });
            }
        }
        records.push(RawRecord {
            line,
            date,
            ticker,
            price,
            volume,
        });
    }
    Ok(RawPanel {
        name,
        path: path.to_path_buf(),
        records,
        rejects,
    })
}

/// Why a date was removed during rectangularization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// At least one company (in any panel) has no record on the date.
    Missing,
    /// Every company is present but at least one traded zero volume.
    ZeroVolume,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::Missing => write!(f, "missing"),
            DropReason::ZeroVolume => write!(f, "zero_volume"),
        }
    }
}

/// One removed date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedDate {
    pub date: NaiveDate,
    pub reason: DropReason,
}

/// Output of [`rectangularize`].
#[derive(Debug, Clone)]
pub struct RectangularizeReport {
    /// One rectangular panel per input, same order, all sharing one
    /// strictly increasing date axis with strictly positive volumes.
    pub panels: Vec<PanelWindow>,
    /// Dates removed from the union, ascending.
    pub dropped: Vec<DroppedDate>,
}

/// Restricts all panels to their common fully observed, positive-volume
/// dates.
///
/// The date axis is the intersection over every company of every panel,
/// minus dates on which any company traded zero volume. Dropped dates are
/// reported with a reason. Duplicate `(ticker, date)` pairs *across*
/// files are an error (within-file duplicates were caught at load time).
/// Applying the function to its own output removes nothing.
pub fn rectangularize(panels: &[RawPanel]) -> Result<RectangularizeReport> {
    if panels.is_empty() {
        return Err(Error::EmptySample);
    }
    // Cross-file duplicate scan. Ticker symbols may repeat across sectors
    // (different markets); only a repeat within one panel name is a true
    // duplicate, and load_panel already catches same-file repeats. This
    // guards merged inputs that share a panel name.
    let mut seen: BTreeMap<(String, String, NaiveDate), (String, u64)> = BTreeMap::new();
    for panel in panels {
        let file = panel.path.display().to_string();
        for r in &panel.records {
            let key = (panel.name.clone(), r.ticker.clone(), r.date);
            match seen.entry(key) {
                Entry::Vacant(slot) => {
                    slot.insert((file.clone(), r.line));
                }
                Entry::Occupied(slot) => {
                    let (first_file, first_row) = slot.get().clone();
                    return Err(Error::DuplicateRecord {
                        ticker: r.ticker.clone(),
                        date: r.date,
                        first_file,
                        first_row,
                        second_file: file,
                        second_row: r.line,
                    });
                }
            }
        }
    }

    // Per panel: ticker -> date -> (price, volume).
    let mut tables: Vec<BTreeMap<String, BTreeMap<NaiveDate, (f64, f64)>>> = Vec::new();
    for panel in panels {
        if panel.records.is_empty() {
            return Err(Error::IncompletePanel(format!(
                "panel {} has no valid records",
                panel.name
            )));
        }
        let mut table: BTreeMap<String, BTreeMap<NaiveDate, (f64, f64)>> = BTreeMap::new();
        for r in &panel.records {
            table
                .entry(r.ticker.clone())
                .or_default()
                .insert(r.date, (r.price, r.volume));
        }
        tables.push(table);
    }

    let mut union: BTreeSet<NaiveDate> = BTreeSet::new();
    for table in &tables {
        for dates in table.values() {
            union.extend(dates.keys().copied());
        }
    }
    let mut kept: Vec<NaiveDate> = Vec::new();
    let mut dropped: Vec<DroppedDate> = Vec::new();
    'dates: for &date in &union {
        for table in &tables {
            for dates in table.values() {
                match dates.get(&date) {
                    None => {
                        dropped.push(DroppedDate {
                            date,
                            reason: DropReason::Missing,
                        });
                        continue 'dates;
                    }
                    Some(_) => {}
                }
            }
        }
        for table in &tables {
            for dates in table.values() {
                if dates[&date].1 == 0.0 {
                    dropped.push(DroppedDate {
                        date,
                        reason: DropReason::ZeroVolume,
                    });
                    continue 'dates;
                }
            }
        }
        kept.push(date);
    }
    if kept.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let mut out = Vec::with_capacity(panels.len());
    for (panel, table) in panels.iter().zip(&tables) {
        let tickers: Vec<String> = table.keys().cloned().collect();
        let mut price = DMatrix::zeros(tickers.len(), kept.len());
        let mut volume = DMatrix::zeros(tickers.len(), kept.len());
        for (row, ticker) in tickers.iter().enumerate() {
            for (col, date) in kept.iter().enumerate() {
                let (p, v) = table[ticker][date];
                price[(row, col)] = p;
                volume[(row, col)] = v;
            }
        }
        out.push(PanelWindow::new(
            panel.name.clone(),
            tickers,
            kept.clone(),
            price,
            volume,
        )?);
    }
    Ok(RectangularizeReport {
        panels: out,
        dropped,
    })
}

/// Convenience: load several sector files and rectangularize them.
pub fn load_panels(paths: &[PathBuf]) -> Result<(Vec<RawPanel>, RectangularizeReport)> {
    let raw: Vec<RawPanel> = paths
        .iter()
        .map(|p| load_panel(p))
        .collect::<Result<_>>()?;
    let report = rectangularize(&raw)?;
    Ok((raw, report))
}
