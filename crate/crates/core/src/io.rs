//! On-disk formats and atomic file writing.
//!
//! Every artifact is written by staging the full contents in a temporary
//! file next to the destination and renaming it into place, so a crash or
//! error never leaves a partially written file behind. All writers are
//! byte-deterministic: floats use the shortest representation that parses
//! back to the identical value, and map-like structures serialize in a
//! fixed order.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::depth::{DepthScores, FunctionalSample};
use crate::error::{Error, Result};
use crate::ingest::RejectedRow;
use crate::pipeline::WindowReport;
use crate::shape::ConfigurationMatrix;
use crate::simulate::AlphaSummary;
use crate::tps::DeformedGrid;

static STAGE_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` atomically: stage into a sibling temporary
/// file, then rename over the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let stem = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a writable path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let stage = parent.join(format!(
        ".{stem}.tmp-{}-{}",
        std::process::id(),
        STAGE_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let write_stage = |stage: &Path| -> std::io::Result<()> {
        let mut f = std::fs::File::create(stage)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        Ok(())
    };
    write_stage(&stage).map_err(|e| Error::io(&stage, e))?;
    std::fs::rename(&stage, path).map_err(|e| {
        let _ = std::fs::remove_file(&stage);
        Error::io(path, e)
    })
}

/// [`atomic_write`] for text.
pub fn atomic_write_str(path: &Path, text: &str) -> Result<()> {
    atomic_write(path, text.as_bytes())
}

/// Serializes a value as pretty-printed JSON (with a trailing newline) and
/// writes it atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::ParseError {
        path: path.display().to_string(),
        message: format!("serialization failed: {e}"),
    })?;
    text.push('\n');
    atomic_write_str(path, &text)
}

/// Writes planar points as CSV with header `x,y`.
pub fn write_points_csv(path: &Path, points: &[[f64; 2]]) -> Result<()> {
    let mut out = String::from("x,y\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    atomic_write_str(path, &out)
}

/// Writes a planar configuration as CSV with header `x,y`, one landmark
/// per row.
pub fn write_config_csv(path: &Path, config: &ConfigurationMatrix) -> Result<()> {
    if config.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "x,y CSV holds planar configurations; this one has {} coordinates",
            config.dim()
        )));
    }
    let points: Vec<[f64; 2]> = (0..config.landmarks())
        .map(|i| {
            let p = config.landmark(i);
            [p[0], p[1]]
        })
        .collect();
    write_points_csv(path, &points)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn parse_field(path: &Path, line: u64, name: &str, raw: &str) -> Result<f64> {
    let value: f64 = raw.trim().parse().map_err(|_| Error::ParseError {
        path: path.display().to_string(),
        message: format!("line {line}: invalid {name} `{}`", raw.trim()),
    })?;
    if !value.is_finite() {
        return Err(Error::ParseError {
            path: path.display().to_string(),
            message: format!("line {line}: non-finite {name}"),
        });
    }
    Ok(value)
}

/// Reads a planar configuration from an `x,y` CSV.
pub fn read_config_csv(path: &Path) -> Result<ConfigurationMatrix> {
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            message: format!("unreadable header: {e}"),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers != ["x", "y"] {
        return Err(Error::SchemaError {
            path: path.display().to_string(),
            message: format!("expected header `x,y`, found `{}`", headers.join(",")),
        });
    }
    let mut points = Vec::new();
    for row in reader.into_records() {
        let record = row.map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            message: format!("unreadable row: {e}"),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::ParseError {
                path: path.display().to_string(),
                message: format!("line {line}: expected 2 fields, found {}", record.len()),
            });
        }
        points.push([
            parse_field(path, line, "x", &record[0])?,
            parse_field(path, line, "y", &record[1])?,
        ]);
    }
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    ConfigurationMatrix::from_points(&points)
}

/// Reads a functional sample from CSV. The first column is the evaluation
/// grid; every further column is one curve, identified by its header.
pub fn read_functional_sample(path: &Path) -> Result<FunctionalSample> {
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            message: format!("unreadable header: {e}"),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.len() < 2 {
        return Err(Error::SchemaError {
            path: path.display().to_string(),
            message: "need a grid column plus at least one curve column".into(),
        });
    }
    let ids: Vec<String> = headers[1..].to_vec();
    let mut grid = Vec::new();
    let mut curves: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for row in reader.into_records() {
        let record = row.map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            message: format!("unreadable row: {e}"),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(Error::ParseError {
                path: path.display().to_string(),
                message: format!(
                    "line {line}: expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        grid.push(parse_field(path, line, "grid value", &record[0])?);
        for (c, curve) in curves.iter_mut().enumerate() {
            curve.push(parse_field(path, line, &format!("value of {}", ids[c]), &record[c + 1])?);
        }
    }
    FunctionalSample::new(grid, curves, ids)
}

/// Reads vectors for multivariate depth: a numeric CSV whose header names
/// the coordinates and whose rows are the observations.
pub fn read_vectors_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv_reader(path)?;
    let width = reader
        .headers()
        .map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            message: format!("unreadable header: {e}"),
        })?
        .len();
    if width == 0 {
        return Err(Error::SchemaError {
            path: path.display().to_string(),
            message: "need at least one coordinate column".into(),
        });
    }
    let mut vectors = Vec::new();
    for row in reader.into_records() {
        let record = row.map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            message: format!("unreadable row: {e}"),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != width {
            return Err(Error::ParseError {
                path: path.display().to_string(),
                message: format!("line {line}: expected {width} fields, found {}", record.len()),
            });
        }
        let mut v = Vec::with_capacity(width);
        for (c, raw) in record.iter().enumerate() {
            v.push(parse_field(path, line, &format!("coordinate {c}"), raw)?);
        }
        vectors.push(v);
    }
    if vectors.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(vectors)
}

/// Writes depth scores as CSV with header `id,depth`, in sample order.
pub fn write_depth_csv(path: &Path, ids: &[String], scores: &DepthScores) -> Result<()> {
    atomic_write_str(path, &depth_csv_text(ids, scores)?)
}

/// The `id,depth` CSV as a string (the CLI can also stream it to stdout).
pub fn depth_csv_text(ids: &[String], scores: &DepthScores) -> Result<String> {
    if ids.len() != scores.values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} identifiers for {} depth values",
            ids.len(),
            scores.values.len()
        )));
    }
    let mut out = String::from("id,depth\n");
    for (id, v) in ids.iter().zip(&scores.values) {
        out.push_str(&format!("{id},{v}\n"));
    }
    Ok(out)
}

/// Writes per-window shape variability as CSV `window,start_date,end_date,svar`.
pub fn write_svar_csv(path: &Path, windows: &[WindowReport]) -> Result<()> {
    let mut out = String::from("window,start_date,end_date,svar\n");
    for w in windows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            w.index,
            w.start_date.format("%Y-%m-%d"),
            w.end_date.format("%Y-%m-%d"),
            w.svar
        ));
    }
    atomic_write_str(path, &out)
}

/// Writes the per-date configuration sizes of all windows as CSV
/// `window,date,centroid_size`.
pub fn write_centroid_sizes_csv(path: &Path, windows: &[WindowReport]) -> Result<()> {
    let mut out = String::from("window,date,centroid_size\n");
    for w in windows {
        for e in &w.centroid_sizes {
            out.push_str(&format!(
                "{},{},{}\n",
                w.index,
                e.date.format("%Y-%m-%d"),
                e.size
            ));
        }
    }
    atomic_write_str(path, &out)
}

/// Writes a deformed grid as CSV `i,j,x,y`, row-major, where `(x, y)` is
/// the deformed position of source node `(i, j)`.
pub fn write_grid_csv(path: &Path, grid: &DeformedGrid) -> Result<()> {
    let mut out = String::from("i,j,x,y\n");
    for i in 0..grid.rows {
        for j in 0..grid.cols {
            let p = grid.nodes[grid.index(i, j)];
            out.push_str(&format!("{i},{j},{},{}\n", p[0], p[1]));
        }
    }
    atomic_write_str(path, &out)
}

/// Writes a robustness-study summary as CSV with the fixed header
/// `alpha,mean_err,sd_err,mean_svar,mean_retained`.
pub fn write_summary_csv(path: &Path, summaries: &[AlphaSummary]) -> Result<()> {
    atomic_write_str(path, &summary_csv_text(summaries))
}

/// The summary CSV as a string.
pub fn summary_csv_text(summaries: &[AlphaSummary]) -> String {
    let mut out = String::from("alpha,mean_err,sd_err,mean_svar,mean_retained\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.alpha, s.mean_err, s.sd_err, s.mean_svar, s.mean_retained
        ));
    }
    out
}

/// Writes rejected rows from one or more files as CSV `file,row,reason`.
pub fn write_rejects_csv(path: &Path, rejects: &[(String, RejectedRow)]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["file", "row", "reason"])
        .and_then(|_| {
            rejects.iter().try_for_each(|(file, r)| {
                writer.write_record([file.as_str(), &r.line.to_string(), &r.reason])
            })
        })
        .map_err(|e| Error::ParseError {
            path: path.display().to_string(),
            message: format!("serialization failed: {e}"),
        })?;
    let bytes = writer.into_inner().map_err(|e| Error::ParseError {
        path: path.display().to_string(),
        message: format!("serialization failed: {e}"),
    })?;
    atomic_write(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::DepthMethod;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn config_csv_roundtrips_bit_for_bit() {
        let dir = tmp();
        let path = dir.path().join("config.csv");
        let config = ConfigurationMatrix::from_points(&[
            [0.1 + 0.2, -1.0 / 3.0],
            [std::f64::consts::PI, 2.0f64.sqrt()],
            [1e-17, -4.9e300],
        ])
        .unwrap();
        write_config_csv(&path, &config).unwrap();
        let back = read_config_csv(&path).unwrap();
        assert_eq!(back.data(), config.data());
    }

    #[test]
    fn atomic_write_leaves_no_staging_litter_and_replaces_content() {
        let dir = tmp();
        let path = dir.path().join("out.txt");
        atomic_write_str(&path, "first").unwrap();
        atomic_write_str(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        let names: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["out.txt"]);
    }

    #[test]
    fn functional_sample_csv_reads_columns_as_curves() {
        let dir = tmp();
        let path = dir.path().join("curves.csv");
        atomic_write_str(&path, "t,AAA,BBB\n0,1.0,2.0\n1,1.5,2.5\n2,1.25,2.25\n").unwrap();
        let sample = read_functional_sample(&path).unwrap();
        assert_eq!(sample.ids(), ["AAA", "BBB"]);
        assert_eq!(sample.grid(), [0.0, 1.0, 2.0]);
        assert_eq!(sample.curves()[1], vec![2.0, 2.5, 2.25]);
    }

    #[test]
    fn malformed_numeric_fields_report_their_line() {
        let dir = tmp();
        let path = dir.path().join("curves.csv");
        atomic_write_str(&path, "t,AAA\n0,1.0\n1,oops\n").unwrap();
        match read_functional_sample(&path) {
            Err(Error::ParseError { message, .. }) => assert!(message.contains("line 3")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn config_csv_requires_the_xy_header() {
        let dir = tmp();
        let path = dir.path().join("config.csv");
        atomic_write_str(&path, "a,b\n1,2\n3,4\n5,6\n").unwrap();
        assert!(matches!(read_config_csv(&path), Err(Error::SchemaError { .. })));
    }

    #[test]
    fn summary_csv_uses_the_fixed_header() {
        let text = summary_csv_text(&[AlphaSummary {
            alpha: 0.1,
            mean_err: 0.5,
            sd_err: 0.25,
            mean_svar: 0.125,
            mean_retained: 0.9,
            outlier_removal_rate: 1.0,
        }]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("alpha,mean_err,sd_err,mean_svar,mean_retained"));
        assert_eq!(lines.next(), Some("0.1,0.5,0.25,0.125,0.9"));
    }

    #[test]
    fn depth_csv_pairs_ids_with_values() {
        let scores = DepthScores {
            method: DepthMethod::ModifiedBand,
            values: vec![0.5, 0.75],
        };
        let text = depth_csv_text(&["a".into(), "b".into()], &scores).unwrap();
        assert_eq!(text, "id,depth\na,0.5\nb,0.75\n");
        assert!(depth_csv_text(&["a".into()], &scores).is_err());
    }

    #[test]
    fn grid_csv_is_row_major_with_indices() {
        let grid = DeformedGrid {
            rows: 2,
            cols: 3,
            source_nodes: vec![[0.0, 0.0]; 6],
            nodes: (0..6).map(|i| [i as f64, -(i as f64)]).collect(),
        };
        let dir = tmp();
        let path = dir.path().join("grid.csv");
        write_grid_csv(&path, &grid).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "i,j,x,y");
        assert_eq!(lines[1], "0,0,0,-0");
        assert_eq!(lines[6], "1,2,5,-5");
    }

    #[test]
    fn vectors_csv_reads_rows() {
        let dir = tmp();
        let path = dir.path().join("v.csv");
        atomic_write_str(&path, "p,q,r\n1,2,3\n4,5,6\n").unwrap();
        let vs = read_vectors_csv(&path).unwrap();
        assert_eq!(vs, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
    }
}
