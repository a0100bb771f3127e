//! Command-line interface.
//!
//! Subcommands wrap the library end to end: `stress` runs the full panel
//! analysis from a manifest, `depth`/`align`/`gpa`/`tps` expose the
//! individual estimators on CSV inputs, `simulate` runs the synthetic
//! robustness study, and `ingest-check` validates raw data without
//! computing anything.
//!
//! Failures print a single JSON object on stderr and exit with a code
//! determined by the error category (see the help footer or
//! `docs/FORMATS.md`). All artifact writes are atomic, and every command
//! is deterministic for fixed inputs and seed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shapestress::depth::{self, DepthScores, DEFAULT_DIRECTIONS};
use shapestress::error::{Error, ErrorClass, Result};
use shapestress::ingest;
use shapestress::io;
use shapestress::manifest;
use shapestress::pipeline::{stress_report, StressOptions, StressReport};
use shapestress::procrustes::{align, gpa_mean, GpaOptions};
use shapestress::shape::ConfigurationMatrix;
use shapestress::simulate;
use shapestress::svg;
use shapestress::tps;

const EXIT_CODE_HELP: &str = "\
Exit codes:
  0   success
  2   usage error (bad arguments or parameters outside their domain)
  3   input file not found
  4   unparsable input or wrong schema
  5   duplicate records in the input data
  6   incomplete panel, empty date intersection, or too few dates
  7   invalid or degenerate data
  8   collinear or duplicate source landmarks
  9   too few survivors after depth trimming
  10  other i/o failure";

#[derive(Parser)]
#[command(
    name = "shapestress",
    version,
    about = "Shape-based stress measurement for multi-sector market panels",
    after_help = EXIT_CODE_HELP
)]
struct Cli {
    /// Random seed; overrides any seed found in a manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path (a directory for `stress`, a file elsewhere). Commands
    /// that produce a single artifact stream it to stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Suppress informational messages (data and errors still print).
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full stress analysis described by a run manifest.
    Stress {
        /// Run manifest (`key = value`; see docs/FORMATS.md).
        manifest: PathBuf,
    },

    /// Compute depth scores for curves or vectors in a CSV file.
    Depth {
        /// Depth notion to use.
        #[arg(long, value_enum)]
        method: DepthMethodArg,
        /// Input CSV: for `mbd` a grid column plus one column per curve,
        /// for `projection` one numeric row per observation.
        #[arg(long)]
        input: PathBuf,
        /// Random projection directions (projection depth only).
        #[arg(long)]
        directions: Option<usize>,
    },

    /// Align a source configuration onto a target and report the fit.
    Align {
        /// Source configuration CSV (`x,y`).
        source: PathBuf,
        /// Target configuration CSV (`x,y`).
        target: PathBuf,
        /// Fit rotation and translation only, keeping the source scale.
        #[arg(long)]
        no_scale: bool,
    },

    /// Estimate the mean shape of two or more configurations.
    Gpa {
        /// Configuration CSVs (`x,y`), at least two.
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        /// Convergence tolerance on the objective decrease.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Iteration cap.
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },

    /// Fit a thin-plate-spline deformation between two configurations.
    Tps {
        /// Source configuration CSV (`x,y`).
        source: PathBuf,
        /// Target configuration CSV (`x,y`).
        target: PathBuf,
        /// Deformation grid rows.
        #[arg(long, default_value_t = 20)]
        rows: usize,
        /// Deformation grid columns.
        #[arg(long, default_value_t = 20)]
        cols: usize,
        /// Grid margin around the source, as a fraction of its diameter.
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        /// Also write the deformed grid as CSV (`i,j,x,y`).
        #[arg(long)]
        grid_csv: Option<PathBuf>,
    },

    /// Run the synthetic robustness study described by a scenario manifest.
    Simulate {
        /// Scenario manifest (`key = value`; see docs/FORMATS.md).
        scenario: PathBuf,
        /// Override the manifest's replication count.
        #[arg(long)]
        replications: Option<usize>,
    },

    /// Validate raw sector CSVs and report what a run would keep and drop.
    IngestCheck {
        /// Sector CSVs with header `date,ticker,price,volume`.
        #[arg(required = true, num_args = 1..)]
        files: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DepthMethodArg {
    /// Modified band depth for curves.
    Mbd,
    /// Projection depth for vectors.
    Projection,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": {
                        "kind": err.kind_name(),
                        "message": err.to_string(),
                        "exit_code": code,
                    }
                })
            );
            ExitCode::from(code)
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err.class() {
        ErrorClass::Usage => 2,
        ErrorClass::NotFound => 3,
        ErrorClass::Schema => 4,
        ErrorClass::Duplicate => 5,
        ErrorClass::Incomplete => 6,
        ErrorClass::Data => 7,
        ErrorClass::Landmarks => 8,
        ErrorClass::Survivors => 9,
        ErrorClass::Io => 10,
    }
}

struct Ui {
    quiet: bool,
}

impl Ui {
    fn info(&self, message: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", message.as_ref());
        }
    }

    fn warn(&self, message: impl AsRef<str>) {
        eprintln!("warning: {}", message.as_ref());
    }
}

fn run(cli: Cli) -> Result<()> {
    let ui = Ui { quiet: cli.quiet };
    match cli.command {
        Command::Stress { manifest } => cmd_stress(&ui, &manifest, cli.seed, cli.output),
        Command::Depth {
            method,
            input,
            directions,
        } => cmd_depth(&ui, method, &input, directions, cli.seed, cli.output),
        Command::Align {
            source,
            target,
            no_scale,
        } => cmd_align(&ui, &source, &target, !no_scale, cli.output),
        Command::Gpa {
            configs,
            tol,
            max_iter,
        } => cmd_gpa(&ui, &configs, tol, max_iter, cli.output),
        Command::Tps {
            source,
            target,
            rows,
            cols,
            margin,
            grid_csv,
        } => cmd_tps(&ui, &source, &target, rows, cols, margin, grid_csv, cli.output),
        Command::Simulate {
            scenario,
            replications,
        } => cmd_simulate(&ui, &scenario, replications, cli.seed, cli.output),
        Command::IngestCheck { files } => cmd_ingest_check(&ui, &files, cli.output),
    }
}

/// Zero-padded artifact index, at least two digits wide.
fn pad(index: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(2);
    format!("{index:0width$}")
}

fn cmd_stress(
    ui: &Ui,
    manifest_path: &Path,
    seed: Option<u64>,
    output: Option<PathBuf>,
) -> Result<()> {
    let run = manifest::parse_run_manifest(manifest_path)?;
    let out_dir = output
        .or(run.output_dir.clone())
        .ok_or_else(|| Error::InvalidParameter(
            "no output directory: pass --output or set output_dir in the manifest".into(),
        ))?;

    let mut raw = Vec::with_capacity(run.sectors.len());
    for path in &run.sectors {
        let panel = ingest::load_panel(path)?;
        ui.info(format!(
            "{}: {} records, {} rejected",
            path.display(),
            panel.records.len(),
            panel.rejects.len()
        ));
        raw.push(panel);
    }
    let rect = ingest::rectangularize(&raw)?;
    let missing = rect
        .dropped
        .iter()
        .filter(|d| d.reason == ingest::DropReason::Missing)
        .count();
    ui.info(format!(
        "rectangular: {} dates kept, {} dropped ({} missing, {} zero_volume)",
        rect.panels[0].len(),
        rect.dropped.len(),
        missing,
        rect.dropped.len() - missing
    ));

    let opts = StressOptions {
        window_count: run.window_count,
        alpha: run.alpha,
        seed: seed.unwrap_or(run.seed),
        ..StressOptions::default()
    };
    let report = stress_report(&rect.panels, &opts)?;
    for (sector, ticker) in &report.median_tickers {
        ui.info(format!("representative of {sector}: {ticker}"));
    }
    for w in &report.windows {
        ui.info(format!(
            "window {}: {}..{}, svar {:.6}, retained {:.1}%",
            w.index,
            w.start_date,
            w.end_date,
            w.svar,
            100.0 * w.retained_fraction
        ));
    }
    for d in &report.deformations {
        ui.info(format!(
            "deformation {} -> {}: bending energy {:.6e}",
            d.from_window, d.to_window, d.bending_energy
        ));
    }

    let artifacts = render_stress_artifacts(&report, run.grid_rows, run.grid_cols)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    for (name, bytes) in &artifacts {
        io::atomic_write(&out_dir.join(name), bytes)?;
    }
    ui.info(format!(
        "wrote {} artifacts to {}",
        artifacts.len(),
        out_dir.display()
    ));
    Ok(())
}

/// Renders every artifact of a stress run in memory, so nothing touches
/// the output directory until the whole analysis has succeeded.
fn render_stress_artifacts(
    report: &StressReport,
    grid_rows: usize,
    grid_cols: usize,
) -> Result<Vec<(String, Vec<u8>)>> {
    /// Grid margin around the source landmarks, as a fraction of their
    /// diameter.
    const GRID_MARGIN: f64 = 0.1;

    let mut artifacts: Vec<(String, Vec<u8>)> = Vec::new();
    let mut json = serde_json::to_string_pretty(report).map_err(|e| Error::ParseError {
        path: "stress_report.json".into(),
        message: format!("serialization failed: {e}"),
    })?;
    json.push('\n');
    artifacts.push(("stress_report.json".into(), json.into_bytes()));

    let n = report.windows.len();
    for w in &report.windows {
        let mut text = String::from("x,y\n");
        for p in &w.mean_shape {
            text.push_str(&format!("{},{}\n", p[0], p[1]));
        }
        artifacts.push((format!("mean_shape_{}.csv", pad(w.index, n)), text.into_bytes()));
    }

    let mut svar = String::from("window,start_date,end_date,svar\n");
    let mut sizes = String::from("window,date,centroid_size\n");
    for w in &report.windows {
        svar.push_str(&format!(
            "{},{},{},{}\n",
            w.index, w.start_date, w.end_date, w.svar
        ));
        for e in &w.centroid_sizes {
            sizes.push_str(&format!("{},{},{}\n", w.index, e.date, e.size));
        }
    }
    artifacts.push(("svar_series.csv".into(), svar.into_bytes()));
    artifacts.push(("centroid_sizes.csv".into(), sizes.into_bytes()));

    for d in &report.deformations {
        let source = ConfigurationMatrix::from_points(&report.windows[d.from_window].mean_shape)?;
        let target_points = &report.windows[d.to_window].mean_shape;
        let target = ConfigurationMatrix::from_points(target_points)?;
        let fit = tps::fit(&source, &target)?;
        let grid = fit.grid(grid_rows, grid_cols, GRID_MARGIN)?;
        let stem = format!(
            "deformation_{}_{}",
            pad(d.from_window, n),
            pad(d.to_window, n)
        );
        let image = svg::deformation_svg(
            &grid,
            &report.windows[d.from_window].mean_shape,
            target_points,
        );
        artifacts.push((format!("{stem}.svg"), image.into_bytes()));

        let mut text = String::from("i,j,x,y\n");
        for i in 0..grid.rows {
            for j in 0..grid.cols {
                let p = grid.nodes[grid.index(i, j)];
                text.push_str(&format!("{i},{j},{},{}\n", p[0], p[1]));
            }
        }
        artifacts.push((format!("{stem}.csv"), text.into_bytes()));
    }
    Ok(artifacts)
}

fn write_or_stdout(ui: &Ui, output: Option<PathBuf>, text: &str, described: &str) -> Result<()> {
    match output {
        Some(path) => {
            io::atomic_write_str(&path, text)?;
            ui.info(format!("wrote {described} to {}", path.display()));
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_depth(
    ui: &Ui,
    method: DepthMethodArg,
    input: &Path,
    directions: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
) -> Result<()> {
    let (ids, scores): (Vec<String>, DepthScores) = match method {
        DepthMethodArg::Mbd => {
            if directions.is_some() {
                return Err(Error::InvalidParameter(
                    "--directions applies only to projection depth".into(),
                ));
            }
            let sample = io::read_functional_sample(input)?;
            let scores = depth::mbd(&sample)?;
            (sample.ids().to_vec(), scores)
        }
        DepthMethodArg::Projection => {
            let vectors = io::read_vectors_csv(input)?;
            let scores = depth::projection_depths(
                &vectors,
                directions.unwrap_or(DEFAULT_DIRECTIONS),
                seed.unwrap_or(0),
            )?;
            let ids = (0..vectors.len()).map(|i| i.to_string()).collect();
            (ids, scores)
        }
    };
    let text = io::depth_csv_text(&ids, &scores)?;
    write_or_stdout(ui, output, &text, "depth scores")
}

fn cmd_align(
    ui: &Ui,
    source: &Path,
    target: &Path,
    with_scale: bool,
    output: Option<PathBuf>,
) -> Result<()> {
    let src = io::read_config_csv(source)?;
    let tgt = io::read_config_csv(target)?;
    let fit = align(&src, &tgt, with_scale)?;
    let r = fit.rotation.clone();
    println!("scale: {}", fit.scale);
    println!(
        "rotation: [[{}, {}], [{}, {}]] (determinant {})",
        r[(0, 0)],
        r[(0, 1)],
        r[(1, 0)],
        r[(1, 1)],
        r.determinant()
    );
    println!("translation: [{}, {}]", fit.translation[0], fit.translation[1]);
    println!("residual: {}", fit.residual);
    if let Some(path) = output {
        io::write_config_csv(&path, &fit.apply(&src))?;
        ui.info(format!("wrote aligned source to {}", path.display()));
    }
    Ok(())
}

fn cmd_gpa(
    ui: &Ui,
    configs: &[PathBuf],
    tol: f64,
    max_iter: usize,
    output: Option<PathBuf>,
) -> Result<()> {
    let sample: Vec<ConfigurationMatrix> = configs
        .iter()
        .map(|p| io::read_config_csv(p))
        .collect::<Result<_>>()?;
    let result = gpa_mean(&sample, GpaOptions { tol, max_iter })?;
    println!("configurations: {}", sample.len());
    println!("objective: {}", result.objective);
    println!("svar: {}", result.svar);
    println!(
        "iterations: {} ({})",
        result.iterations,
        if result.converged { "converged" } else { "iteration cap reached" }
    );
    if let Some(path) = output {
        io::write_config_csv(&path, &result.mean)?;
        ui.info(format!("wrote mean shape to {}", path.display()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tps(
    ui: &Ui,
    source: &Path,
    target: &Path,
    rows: usize,
    cols: usize,
    margin: f64,
    grid_csv: Option<PathBuf>,
    output: Option<PathBuf>,
) -> Result<()> {
    let src = io::read_config_csv(source)?;
    let tgt = io::read_config_csv(target)?;
    let fit = tps::fit(&src, &tgt)?;
    println!("bending energy: {}", fit.bending_energy());
    let a = fit.affine_part();
    println!(
        "affine part: [[{}, {}], [{}, {}]]",
        a[(0, 0)],
        a[(0, 1)],
        a[(1, 0)],
        a[(1, 1)]
    );
    if output.is_some() || grid_csv.is_some() {
        let grid = fit.grid(rows, cols, margin)?;
        let src_points: Vec<[f64; 2]> = (0..src.landmarks())
            .map(|i| {
                let p = src.landmark(i);
                [p[0], p[1]]
            })
            .collect();
        let tgt_points: Vec<[f64; 2]> = (0..tgt.landmarks())
            .map(|i| {
                let p = tgt.landmark(i);
                [p[0], p[1]]
            })
            .collect();
        if let Some(path) = output {
            io::atomic_write_str(&path, &svg::deformation_svg(&grid, &src_points, &tgt_points))?;
            ui.info(format!("wrote deformation image to {}", path.display()));
        }
        if let Some(path) = grid_csv {
            io::write_grid_csv(&path, &grid)?;
            ui.info(format!("wrote deformed grid to {}", path.display()));
        }
    }
    Ok(())
}

fn cmd_simulate(
    ui: &Ui,
    scenario_path: &Path,
    replications: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
) -> Result<()> {
    let mut m = manifest::parse_scenario_manifest(scenario_path)?;
    if let Some(seed) = seed {
        m.seed = seed;
    }
    let scenario = m.build()?;
    for warning in scenario.warnings() {
        ui.warn(warning);
    }
    let reps = replications.unwrap_or(m.replications);
    let summaries = simulate::evaluate(&scenario, reps)?;
    for s in &summaries {
        ui.info(format!(
            "alpha {}: mean_err {:.6}, outlier removal {:.1}%",
            s.alpha,
            s.mean_err,
            100.0 * s.outlier_removal_rate
        ));
    }
    let text = io::summary_csv_text(&summaries);
    write_or_stdout(ui, output, &text, "study summary")
}

fn cmd_ingest_check(ui: &Ui, files: &[PathBuf], output: Option<PathBuf>) -> Result<()> {
    let mut raw = Vec::with_capacity(files.len());
    let mut all_rejects: Vec<(String, ingest::RejectedRow)> = Vec::new();
    for path in files {
        let panel = ingest::load_panel(path)?;
        println!(
            "{}: {} accepted, {} rejected",
            path.display(),
            panel.records.len(),
            panel.rejects.len()
        );
        for r in &panel.rejects {
            println!("  line {}: {}", r.line, r.reason);
        }
        for r in &panel.rejects {
            all_rejects.push((path.display().to_string(), r.clone()));
        }
        raw.push(panel);
    }
    let rect = ingest::rectangularize(&raw)?;
    let missing = rect
        .dropped
        .iter()
        .filter(|d| d.reason == ingest::DropReason::Missing)
        .count();
    println!(
        "rectangular: {} panels x {} dates, {} dates dropped ({} missing, {} zero_volume)",
        rect.panels.len(),
        rect.panels[0].len(),
        rect.dropped.len(),
        missing,
        rect.dropped.len() - missing
    );
    if let Some(path) = output {
        io::write_rejects_csv(&path, &all_rejects)?;
        ui.info(format!("wrote reject report to {}", path.display()));
    }
    Ok(())
}
