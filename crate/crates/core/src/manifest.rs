//! Plain-text manifests that describe a full analysis run or a synthetic
//! study.
//!
//! Both formats are `key = value` lines with `#` comments; unknown or
//! repeated scalar keys are schema errors so typos fail loudly. Relative
//! paths inside a manifest resolve against the manifest's own directory,
//! making a fixture directory self-contained.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::read_config_csv;
use crate::simulate::{NoiseFamily, Scenario};

/// Configuration of a full stress-analysis run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    /// Sector CSV paths, one landmark each, in manifest order.
    pub sectors: Vec<PathBuf>,
    pub window_count: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Artifact directory; the CLI's `--output` overrides it.
    pub output_dir: Option<PathBuf>,
    /// Deformation grid resolution.
    pub grid_rows: usize,
    pub grid_cols: usize,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            sectors: Vec::new(),
            window_count: 7,
            alpha: 0.1,
            seed: 0,
            output_dir: None,
            grid_rows: 20,
            grid_cols: 20,
        }
    }
}

/// Configuration of a synthetic robustness study.
#[derive(Debug, Clone)]
pub struct ScenarioManifest {
    pub family: NoiseFamily,
    /// Optional base-shape CSV; a regular octagon when absent.
    pub base_shape: Option<PathBuf>,
    pub noise_scale: f64,
    pub sample_size: usize,
    pub outlier_fraction: f64,
    pub outlier_magnitude: f64,
    pub seed: u64,
    pub replications: usize,
}

impl Default for ScenarioManifest {
    fn default() -> Self {
        Self {
            family: NoiseFamily::Normal,
            base_shape: None,
            noise_scale: 0.05,
            sample_size: 100,
            outlier_fraction: 0.0,
            outlier_magnitude: 50.0,
            seed: 0,
            replications: 50,
        }
    }
}

impl ScenarioManifest {
    /// Loads the base shape (or builds the default octagon) and validates
    /// the scenario.
    pub fn build(&self) -> Result<Scenario> {
        let base = match &self.base_shape {
            Some(path) => read_config_csv(path)?,
            None => Scenario::default_base_shape(),
        };
        Scenario::new(
            self.family,
            base,
            self.noise_scale,
            self.sample_size,
            self.outlier_fraction,
            self.outlier_magnitude,
            self.seed,
        )
    }
}

fn read_manifest(path: &Path) -> Result<(String, PathBuf)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((text, dir))
}

fn schema(path: &Path, message: String) -> Error {
    Error::SchemaError {
        path: path.display().to_string(),
        message,
    }
}

/// `key = value` pairs with 1-based line numbers; `#` starts a comment.
fn parse_pairs(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(schema(
                path,
                format!("line {line}: expected `key = value`, found `{content}`"),
            ));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(schema(path, format!("line {line}: empty key or value")));
        }
        pairs.push((line, key, value));
    }
    Ok(pairs)
}

struct Scalar<'a, T> {
    slot: &'a mut T,
    set_on: Option<usize>,
}

fn parse_value<T: std::str::FromStr>(path: &Path, line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| schema(path, format!("line {line}: invalid {key} `{value}`")))
}

impl<'a, T> Scalar<'a, T> {
    fn new(slot: &'a mut T) -> Self {
        Self { slot, set_on: None }
    }

    fn set(&mut self, path: &Path, line: usize, key: &str, value: T) -> Result<()> {
        if let Some(first) = self.set_on {
            return Err(schema(
                path,
                format!("line {line}: `{key}` already set on line {first}"),
            ));
        }
        *self.slot = value;
        self.set_on = Some(line);
        Ok(())
    }
}

/// Parses a run manifest.
///
/// Keys: `sector` (repeatable, at least one required), `window_count`,
/// `alpha`, `seed`, `output_dir`, `grid_rows`, `grid_cols`.
pub fn parse_run_manifest(path: &Path) -> Result<RunManifest> {
    let (text, dir) = read_manifest(path)?;
    let mut m = RunManifest::default();
    {
        let mut window_count = Scalar::new(&mut m.window_count);
        let mut alpha = Scalar::new(&mut m.alpha);
        let mut seed = Scalar::new(&mut m.seed);
        let mut output_dir = Scalar::new(&mut m.output_dir);
        let mut grid_rows = Scalar::new(&mut m.grid_rows);
        let mut grid_cols = Scalar::new(&mut m.grid_cols);
        for (line, key, value) in parse_pairs(path, &text)? {
            match key.as_str() {
                "sector" => m.sectors.push(dir.join(&value)),
                "window_count" => {
                    let v = parse_value(path, line, &key, &value)?;
                    window_count.set(path, line, &key, v)?;
                }
                "alpha" => {
                    let v = parse_value(path, line, &key, &value)?;
                    alpha.set(path, line, &key, v)?;
                }
                "seed" => {
                    let v = parse_value(path, line, &key, &value)?;
                    seed.set(path, line, &key, v)?;
                }
                "output_dir" => output_dir.set(path, line, &key, Some(dir.join(&value)))?,
                "grid_rows" => {
                    let v = parse_value(path, line, &key, &value)?;
                    grid_rows.set(path, line, &key, v)?;
                }
                "grid_cols" => {
                    let v = parse_value(path, line, &key, &value)?;
                    grid_cols.set(path, line, &key, v)?;
                }
                other => {
                    return Err(schema(path, format!("line {line}: unknown key `{other}`")));
                }
            }
        }
    }
    if m.sectors.is_empty() {
        return Err(schema(path, "no `sector` entries".into()));
    }
    Ok(m)
}

/// Parses a scenario manifest.
///
/// Keys: `family` (`normal`, `student`, `uniform`), `df` (student only),
/// `base_shape` (CSV path), `noise_scale`, `sample_size`,
/// `outlier_fraction`, `outlier_magnitude`, `seed`, `replications`.
pub fn parse_scenario_manifest(path: &Path) -> Result<ScenarioManifest> {
    let (text, dir) = read_manifest(path)?;
    let mut m = ScenarioManifest::default();
    let mut family: Option<(usize, String)> = None;
    let mut df: Option<(usize, f64)> = None;
    {
        let mut base_shape = Scalar::new(&mut m.base_shape);
        let mut noise_scale = Scalar::new(&mut m.noise_scale);
        let mut sample_size = Scalar::new(&mut m.sample_size);
        let mut outlier_fraction = Scalar::new(&mut m.outlier_fraction);
        let mut outlier_magnitude = Scalar::new(&mut m.outlier_magnitude);
        let mut seed = Scalar::new(&mut m.seed);
        let mut replications = Scalar::new(&mut m.replications);
        for (line, key, value) in parse_pairs(path, &text)? {
            match key.as_str() {
                "family" => {
                    if let Some((first, _)) = family {
                        return Err(schema(
                            path,
                            format!("line {line}: `family` already set on line {first}"),
                        ));
                    }
                    family = Some((line, value));
                }
                "df" => {
                    if let Some((first, _)) = df {
                        return Err(schema(
                            path,
                            format!("line {line}: `df` already set on line {first}"),
                        ));
                    }
                    df = Some((line, parse_value(path, line, &key, &value)?));
                }
                "base_shape" => base_shape.set(path, line, &key, Some(dir.join(&value)))?,
                "noise_scale" => {
                    let v = parse_value(path, line, &key, &value)?;
                    noise_scale.set(path, line, &key, v)?;
                }
                "sample_size" => {
                    let v = parse_value(path, line, &key, &value)?;
                    sample_size.set(path, line, &key, v)?;
                }
                "outlier_fraction" => {
                    let v = parse_value(path, line, &key, &value)?;
                    outlier_fraction.set(path, line, &key, v)?;
                }
                "outlier_magnitude" => {
                    let v = parse_value(path, line, &key, &value)?;
                    outlier_magnitude.set(path, line, &key, v)?;
                }
                "seed" => {
                    let v = parse_value(path, line, &key, &value)?;
                    seed.set(path, line, &key, v)?;
                }
                "replications" => {
                    let v = parse_value(path, line, &key, &value)?;
                    replications.set(path, line, &key, v)?;
                }
                other => {
                    return Err(schema(path, format!("line {line}: unknown key `{other}`")));
                }
            }
        }
    }
    m.family = match family.as_ref().map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "normal")) => {
            if let Some((line, _)) = df {
                return Err(schema(
                    path,
                    format!("line {line}: `df` applies only to the student family"),
                ));
            }
            NoiseFamily::Normal
        }
        Some((_, "student")) => NoiseFamily::Student {
            df: df.map(|(_, v)| v).unwrap_or(3.0),
        },
        Some((line, "uniform")) => {
            if let Some((df_line, _)) = df {
                return Err(schema(
                    path,
                    format!("line {df_line}: `df` applies only to the student family"),
                ));
            }
            let _ = line;
            NoiseFamily::Uniform
        }
        Some((line, other)) => {
            return Err(schema(
                path,
                format!("line {line}: unknown family `{other}` (normal, student, uniform)"),
            ));
        }
    };
    Ok(m)
}
