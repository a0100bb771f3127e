//! The end-to-end stress analysis.
//!
//! Input: one rectangular price/volume panel per sector, all sharing a
//! common date axis. The analysis
//!
//! 1. compresses every company into a relative price-to-volume curve and
//!    picks each sector's most central company by modified band depth,
//! 2. turns the chosen companies' relative prices and volumes into one
//!    planar configuration per date (one landmark per sector),
//! 3. splits the period into contiguous windows and estimates a
//!    depth-trimmed mean shape and shape variability per window, and
//! 4. fits thin-plate-spline deformations between consecutive window
//!    means, whose bending energy localizes nonlinear regime change.
//!
//! [`trimmed_mean_shape`] is also useful on its own as a robust mean-shape
//! estimator for any configuration sample.

use std::collections::BTreeMap;
use std::ops::Range;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::depth::{self, FunctionalSample, DEFAULT_DIRECTIONS};
use crate::error::{Error, Result};
use crate::procrustes::{gpa_mean, GpaOptions, MeanShapeResult};
use crate::shape::{centroid_size, ConfigurationMatrix};
use crate::tps::{self, TpsDeformation};

/// A rectangular per-sector panel: every ticker observed on every date.
#[derive(Debug, Clone)]
pub struct PanelWindow {
    /// Sector label (the source file stem when loaded from disk).
    pub name: String,
    /// Sorted, unique ticker symbols; one matrix row each.
    pub tickers: Vec<String>,
    /// Strictly increasing dates; one matrix column each.
    pub dates: Vec<NaiveDate>,
    /// Close prices, strictly positive.
    pub price: DMatrix<f64>,
    /// Traded volumes, nonnegative.
    pub volume: DMatrix<f64>,
}

impl PanelWindow {
    pub fn new(
        name: String,
        tickers: Vec<String>,
        dates: Vec<NaiveDate>,
        price: DMatrix<f64>,
        volume: DMatrix<f64>,
    ) -> Result<Self> {
        if tickers.is_empty() || dates.is_empty() {
            return Err(Error::IncompletePanel(format!(
                "panel {name} has {} tickers and {} dates",
                tickers.len(),
                dates.len()
            )));
        }
        if tickers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(format!(
                "panel {name}: tickers must be sorted and unique"
            )));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(format!(
                "panel {name}: dates must be strictly increasing"
            )));
        }
        let shape_ok = |m: &DMatrix<f64>| m.nrows() == tickers.len() && m.ncols() == dates.len();
        if !shape_ok(&price) || !shape_ok(&volume) {
            return Err(Error::DimensionMismatch(format!(
                "panel {name}: matrices must be tickers x dates ({} x {})",
                tickers.len(),
                dates.len()
            )));
        }
        if price.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidData(format!(
                "panel {name}: prices must be finite and strictly positive"
            )));
        }
        if volume.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidData(format!(
                "panel {name}: volumes must be finite and nonnegative"
            )));
        }
        Ok(Self {
            name,
            tickers,
            dates,
            price,
            volume,
        })
    }

    /// Number of companies in the panel.
    pub fn companies(&self) -> usize {
        self.tickers.len()
    }

    /// Number of observation dates.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// A company's relative price-to-volume curve over the full period:
/// `(price / median(price)) / (volume / median(volume))`, medians taken
/// per company over all dates. Dimensionless and positive, so companies
/// with different price levels or share counts become comparable.
#[derive(Debug, Clone)]
pub struct RelativeSeries {
    pub ticker: String,
    pub values: Vec<f64>,
}

/// Relative series for every company of a panel. Requires strictly
/// positive volumes (rectangularization removes zero-volume dates).
pub fn relative_series(panel: &PanelWindow) -> Result<Vec<RelativeSeries>> {
    let mut out = Vec::with_capacity(panel.companies());
    for (row, ticker) in panel.tickers.iter().enumerate() {
        let prices: Vec<f64> = panel.price.row(row).iter().copied().collect();
        let volumes: Vec<f64> = panel.volume.row(row).iter().copied().collect();
        if volumes.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidData(format!(
                "panel {}: {ticker} has non-positive volume; drop zero-volume dates first",
                panel.name
            )));
        }
        let med_p = crate::depth::median(&prices);
        let med_v = crate::depth::median(&volumes);
        if med_p <= 0.0 || med_v <= 0.0 {
            return Err(Error::InvalidData(format!(
                "panel {}: {ticker} has a non-positive median level",
                panel.name
            )));
        }
        let values = prices
            .iter()
            .zip(&volumes)
            .map(|(p, v)| (p / med_p) / (v / med_v))
            .collect();
        out.push(RelativeSeries {
            ticker: ticker.clone(),
            values,
        });
    }
    Ok(out)
}

/// The company chosen to represent a sector, with the evidence behind the
/// choice.
#[derive(Debug, Clone)]
pub struct MedianCompany {
    pub sector: String,
    pub ticker: String,
    /// Row of the ticker inside its panel.
    pub row: usize,
    /// Band-depth scores of all companies in the sector, panel order.
    pub scores: Vec<f64>,
    /// Indices tied for maximal depth (a single element when unique).
    pub tied: Vec<usize>,
}

/// Picks each sector's deepest company under modified band depth applied
/// to the relative price-to-volume curves.
///
/// Ties within [`crate::depth::MEDIAN_TIE_TOL`] of the maximum are broken by smallest
/// squared distance to the pointwise average of the tied curves, then by
/// lexicographically smallest ticker, so the choice is deterministic.
pub fn select_median_companies(panels: &[PanelWindow]) -> Result<Vec<MedianCompany>> {
    if panels.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut out = Vec::with_capacity(panels.len());
    for panel in panels {
        if panel.companies() < 2 {
            return Err(Error::IncompletePanel(format!(
                "sector {} has a single company; band-depth selection needs at least two",
                panel.name
            )));
        }
        let series = relative_series(panel)?;
        let curves: Vec<Vec<f64>> = series.iter().map(|s| s.values.clone()).collect();
        let ids: Vec<String> = series.iter().map(|s| s.ticker.clone()).collect();
        let sample = FunctionalSample::on_index_grid(curves.clone(), ids)?;
        let median = depth::functional_median(&sample)?;

        let row = if median.indices.len() == 1 {
            median.indices[0]
        } else {
            // Tie: prefer the member closest to the tied-average curve,
            // then the smallest ticker.
            let ssd = |i: usize| -> f64 {
                curves[i]
                    .iter()
                    .zip(&median.curve)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            };
            *median
                .indices
                .iter()
                .min_by(|&&a, &&b| {
                    ssd(a)
                        .partial_cmp(&ssd(b))
                        .expect("finite distances")
                        .then_with(|| panel.tickers[a].cmp(&panel.tickers[b]))
                })
                .expect("tie set is nonempty")
        };
        out.push(MedianCompany {
            sector: panel.name.clone(),
            ticker: panel.tickers[row].clone(),
            row,
            scores: median.scores,
            tied: median.indices,
        });
    }
    Ok(out)
}

/// Splits `n_dates` consecutive observations into `count` contiguous
/// windows whose lengths differ by at most one day, earlier windows taking
/// the extras. Requires at least two dates per window.
pub fn split_windows(n_dates: usize, count: usize) -> Result<Vec<Range<usize>>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 windows, got {count}"
        )));
    }
    if n_dates < 2 * count {
        return Err(Error::TooFewDates {
            dates: n_dates,
            windows: count,
            min_per_window: 2,
        });
    }
    let base = n_dates / count;
    let extra = n_dates % count;
    let mut ranges = Vec::with_capacity(count);
    let mut start = 0;
    for w in 0..count {
        let len = base + usize::from(w < extra);
        ranges.push(start..start + len);
        start += len;
    }
    Ok(ranges)
}

/// Knobs for the depth-trimming step of [`trimmed_mean_shape`].
#[derive(Debug, Clone, Copy)]
pub struct TrimParams {
    /// Random projection directions (the canonical axes are always added).
    pub directions: usize,
    /// Seed for the direction draw.
    pub seed: u64,
}

impl Default for TrimParams {
    fn default() -> Self {
        Self {
            directions: DEFAULT_DIRECTIONS,
            seed: 0,
        }
    }
}

/// A robust mean shape together with the trimming evidence.
#[derive(Debug, Clone)]
pub struct TrimmedMeanShape {
    /// Mean shape, aligned sample, and variability over the retained
    /// configurations.
    pub shape: MeanShapeResult,
    /// Ascending indices of the retained configurations.
    pub retained: Vec<usize>,
    /// `retained.len() / sample size`.
    pub retained_fraction: f64,
    /// Projection depths of all configurations (empty when `alpha = 0`,
    /// which skips the depth pass entirely).
    pub depths: Vec<f64>,
}

/// Depth-trimmed mean shape: vectorize the configurations by
/// column-stacking, discard those with projection depth below `alpha`,
/// and estimate the mean shape from the survivors.
///
/// `alpha = 0` reproduces the untrimmed estimator exactly — the depth pass
/// is skipped and every configuration is kept. For `alpha > 0` the sample
/// must have at least 10 configurations for the trim to be meaningful, and
/// at least 3 must survive.
pub fn trimmed_mean_shape(
    configs: &[ConfigurationMatrix],
    alpha: f64,
    trim: TrimParams,
    gpa: GpaOptions,
) -> Result<TrimmedMeanShape> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "trimming level must lie in [0, 1), got {alpha}"
        )));
    }
    if alpha == 0.0 {
        let shape = gpa_mean(configs, gpa)?;
        return Ok(TrimmedMeanShape {
            shape,
            retained: (0..configs.len()).collect(),
            retained_fraction: 1.0,
            depths: Vec::new(),
        });
    }
    if configs.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "trimmed estimation needs at least 10 configurations, got {}",
            configs.len()
        )));
    }
    let vectors: Vec<Vec<f64>> = configs.iter().map(|c| c.column_stacked()).collect();
    let depths = depth::projection_depths(&vectors, trim.directions, trim.seed)?.values;
    let retained: Vec<usize> = depths
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= alpha)
        .map(|(i, _)| i)
        .collect();
    if retained.len() < 3 {
        return Err(Error::TooFewSurvivors {
            survivors: retained.len(),
            required: 3,
        });
    }
    let survivors: Vec<ConfigurationMatrix> =
        retained.iter().map(|&i| configs[i].clone()).collect();
    let shape = gpa_mean(&survivors, gpa)?;
    let retained_fraction = retained.len() as f64 / configs.len() as f64;
    Ok(TrimmedMeanShape {
        shape,
        retained,
        retained_fraction,
        depths,
    })
}

/// Options for the full analysis.
#[derive(Debug, Clone, Copy)]
pub struct StressOptions {
    /// Number of contiguous sub-period windows.
    pub window_count: usize,
    /// Depth-trimming level applied to each window's daily configurations;
    /// 0 disables trimming.
    pub alpha: f64,
    /// Seed for the projection-direction draw.
    pub seed: u64,
    /// Random projection directions for the trim.
    pub directions: usize,
    /// Mean-shape iteration controls.
    pub gpa: GpaOptions,
}

impl Default for StressOptions {
    fn default() -> Self {
        Self {
            window_count: 7,
            alpha: 0.1,
            seed: 0,
            directions: DEFAULT_DIRECTIONS,
            gpa: GpaOptions::default(),
        }
    }
}

/// Per-date size of the raw configuration, reported alongside the
/// size-free shape statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentroidSizeEntry {
    pub date: NaiveDate,
    pub size: f64,
}

/// One analysis window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowReport {
    pub index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Canonical unit-size mean shape, one `[x, y]` row per sector.
    pub mean_shape: Vec<[f64; 2]>,
    /// Shape variability of the retained daily configurations around the
    /// mean.
    pub svar: f64,
    /// Fraction of the window's dates that survived depth trimming
    /// (1.0 when `alpha = 0`).
    pub retained_fraction: f64,
    /// Whether the mean-shape iteration met its tolerance.
    pub converged: bool,
    /// Raw configuration size per date, over all dates in the window.
    pub centroid_sizes: Vec<CentroidSizeEntry>,
}

/// A fitted deformation between consecutive window means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeformationReport {
    pub from_window: usize,
    pub to_window: usize,
    /// Constant term of the deformation.
    pub constant: [f64; 2],
    /// Affine term, row-major.
    pub affine: [[f64; 2]; 2],
    /// Kernel weights, one `[x, y]` row per source landmark.
    pub weights: Vec<[f64; 2]>,
    /// `trace(W' S W)`; near zero for affine inter-window movement.
    pub bending_energy: f64,
}

impl DeformationReport {
    fn from_fit(fit: &TpsDeformation, from_window: usize, to_window: usize) -> Self {
        let a = fit.affine_part();
        Self {
            from_window,
            to_window,
            constant: [fit.constant()[0], fit.constant()[1]],
            affine: [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]],
            weights: (0..fit.weights().nrows())
                .map(|i| [fit.weights()[(i, 0)], fit.weights()[(i, 1)]])
                .collect(),
            bending_energy: fit.bending_energy(),
        }
    }
}

/// The complete result of a stress analysis run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StressReport {
    pub alpha: f64,
    pub seed: u64,
    pub window_count: usize,
    /// Sector labels in input order; landmark `i` of every shape belongs
    /// to `sectors[i]`.
    pub sectors: Vec<String>,
    /// Sector -> representative ticker.
    pub median_tickers: BTreeMap<String, String>,
    pub windows: Vec<WindowReport>,
    pub deformations: Vec<DeformationReport>,
}

/// Runs the full analysis over per-sector panels sharing one date axis.
///
/// Each date contributes one configuration whose landmark `i` is sector
/// `i`'s representative company at `(relative price, relative volume)`.
/// Windows are estimated independently; deformations connect consecutive
/// window means. Deterministic: rerunning with identical inputs and
/// options reproduces the report bit for bit.
pub fn stress_report(panels: &[PanelWindow], opts: &StressOptions) -> Result<StressReport> {
    if panels.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "stress analysis needs at least 2 sector panels, got {}",
            panels.len()
        )));
    }
    let dates = &panels[0].dates;
    for p in &panels[1..] {
        if p.dates != *dates {
            return Err(Error::IncompletePanel(format!(
                "panel {} covers a different date set than {}; rectangularize first",
                p.name, panels[0].name
            )));
        }
    }
    let ranges = split_windows(dates.len(), opts.window_count)?;

    let medians = select_median_companies(panels)?;

    // Relative price and volume of each sector's representative, over the
    // full period (medians are full-period, taken once).
    let mut rel_price: Vec<Vec<f64>> = Vec::with_capacity(panels.len());
    let mut rel_volume: Vec<Vec<f64>> = Vec::with_capacity(panels.len());
    for (panel, median) in panels.iter().zip(&medians) {
        let prices: Vec<f64> = panel.price.row(median.row).iter().copied().collect();
        let volumes: Vec<f64> = panel.volume.row(median.row).iter().copied().collect();
        if volumes.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidData(format!(
                "panel {}: {} has non-positive volume; drop zero-volume dates first",
                panel.name, median.ticker
            )));
        }
        let med_p = crate::depth::median(&prices);
        let med_v = crate::depth::median(&volumes);
        rel_price.push(prices.iter().map(|p| p / med_p).collect());
        rel_volume.push(volumes.iter().map(|v| v / med_v).collect());
    }

    let configs: Vec<ConfigurationMatrix> = (0..dates.len())
        .map(|t| {
            let pts: Vec<[f64; 2]> = (0..panels.len())
                .map(|s| [rel_price[s][t], rel_volume[s][t]])
                .collect();
            ConfigurationMatrix::from_points(&pts)
        })
        .collect::<Result<_>>()?;

    let trim = TrimParams {
        directions: opts.directions,
        seed: opts.seed,
    };
    let mut windows = Vec::with_capacity(ranges.len());
    let mut means: Vec<ConfigurationMatrix> = Vec::with_capacity(ranges.len());
    for (w, range) in ranges.iter().enumerate() {
        let slice = &configs[range.clone()];
        let estimate = trimmed_mean_shape(slice, opts.alpha, trim, opts.gpa)?;
        let mean_shape: Vec<[f64; 2]> = (0..panels.len())
            .map(|i| {
                let row = estimate.shape.mean.data();
                [row[(i, 0)], row[(i, 1)]]
            })
            .collect();
        let centroid_sizes: Vec<CentroidSizeEntry> = range
            .clone()
            .map(|t| CentroidSizeEntry {
                date: dates[t],
                size: centroid_size(&configs[t]),
            })
            .collect();
        windows.push(WindowReport {
            index: w,
            start_date: dates[range.start],
            end_date: dates[range.end - 1],
            mean_shape,
            svar: estimate.shape.svar,
            retained_fraction: estimate.retained_fraction,
            converged: estimate.shape.converged,
            centroid_sizes,
        });
        means.push(estimate.shape.mean);
    }

    // Deformations between consecutive window means; the source landmarks
    // are the earlier window's mean exactly as reported.
    let mut deformations = Vec::with_capacity(means.len().saturating_sub(1));
    for w in 0..means.len() - 1 {
        let fit = tps::fit(&means[w], &means[w + 1])?;
        deformations.push(DeformationReport::from_fit(&fit, w, w + 1));
    }

    Ok(StressReport {
        alpha: opts.alpha,
        seed: opts.seed,
        window_count: opts.window_count,
        sectors: panels.iter().map(|p| p.name.clone()).collect(),
        median_tickers: medians
            .iter()
            .map(|m| (m.sector.clone(), m.ticker.clone()))
            .collect(),
        windows,
        deformations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procrustes::procrustes_distance;
    use chrono::Days;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2006, 1, 2).unwrap();
        (0..n)
            .map(|i| start.checked_add_days(Days::new(i as u64)).unwrap())
            .collect()
    }

    fn panel(name: &str, tickers: &[&str], price_rows: &[Vec<f64>], volume_rows: &[Vec<f64>]) -> PanelWindow {
        let n = price_rows[0].len();
        let flat_p: Vec<f64> = price_rows.iter().flatten().copied().collect();
        let flat_v: Vec<f64> = volume_rows.iter().flatten().copied().collect();
        PanelWindow::new(
            name.to_string(),
            tickers.iter().map(|t| t.to_string()).collect(),
            dates(n),
            DMatrix::from_row_slice(tickers.len(), n, &flat_p),
            DMatrix::from_row_slice(tickers.len(), n, &flat_v),
        )
        .unwrap()
    }

    // --- window splitting ---------------------------------------------

    #[test]
    fn window_lengths_for_the_reference_period() {
        let ranges = split_windows(1474, 7).unwrap();
        let lengths: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
        assert_eq!(lengths, vec![211, 211, 211, 211, 210, 210, 210]);
        // Contiguous cover.
        assert_eq!(ranges[0].start, 0);
        for w in ranges.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        assert_eq!(ranges.last().unwrap().end, 1474);
    }

    #[test]
    fn window_lengths_differ_by_at_most_one_with_earlier_extras() {
        for n in [14, 29, 100, 731] {
            for count in [2, 3, 7] {
                let ranges = split_windows(n, count).unwrap();
                let lengths: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
                let max = *lengths.iter().max().unwrap();
                let min = *lengths.iter().min().unwrap();
                assert!(max - min <= 1, "n={n} count={count}");
                // The long windows all precede the short ones.
                let first_short = lengths.iter().position(|&l| l == min).unwrap();
                assert!(lengths[first_short..].iter().all(|&l| l == min));
                assert_eq!(lengths.iter().sum::<usize>(), n);
            }
        }
    }

    #[test]
    fn too_few_dates_is_an_error() {
        assert!(matches!(
            split_windows(13, 7),
            Err(Error::TooFewDates { dates: 13, windows: 7, .. })
        ));
        assert!(matches!(split_windows(100, 1), Err(Error::InvalidParameter(_))));
    }

    // --- trimmed mean shape ---------------------------------------------

    fn random_config(rng: &mut ChaCha8Rng, base: &ConfigurationMatrix, noise: f64) -> ConfigurationMatrix {
        let pts: Vec<[f64; 2]> = (0..base.landmarks())
            .map(|i| {
                let p = base.landmark(i);
                [
                    p[0] + noise * rng.random_range(-1.0..1.0),
                    p[1] + noise * rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        ConfigurationMatrix::from_points(&pts).unwrap()
    }

    fn octagon() -> ConfigurationMatrix {
        let pts: Vec<[f64; 2]> = (0..8)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 8.0;
                [a.cos(), a.sin()]
            })
            .collect();
        ConfigurationMatrix::from_points(&pts).unwrap()
    }

    #[test]
    fn zero_alpha_reproduces_plain_estimation_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let base = octagon();
        let sample: Vec<ConfigurationMatrix> =
            (0..12).map(|_| random_config(&mut rng, &base, 0.05)).collect();
        let plain = gpa_mean(&sample, GpaOptions::default()).unwrap();
        let trimmed =
            trimmed_mean_shape(&sample, 0.0, TrimParams::default(), GpaOptions::default()).unwrap();
        assert_eq!(trimmed.retained, (0..12).collect::<Vec<_>>());
        assert_eq!(trimmed.retained_fraction, 1.0);
        // Same code path underneath: results agree bit for bit.
        assert_eq!(trimmed.shape.mean.data(), plain.mean.data());
        assert_eq!(trimmed.shape.objective, plain.objective);
    }

    #[test]
    fn clean_rotated_copies_keep_everything() {
        let base = octagon();
        let sample: Vec<ConfigurationMatrix> = (0..20)
            .map(|i| {
                let theta = std::f64::consts::TAU * i as f64 / 20.0;
                let (s, c) = theta.sin_cos();
                let q = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
                ConfigurationMatrix::from_matrix_unchecked(base.data() * q)
            })
            .collect();
        let result =
            trimmed_mean_shape(&sample, 0.1, TrimParams::default(), GpaOptions::default()).unwrap();
        assert_eq!(result.retained_fraction, 1.0);
        assert!(result.shape.svar < 1e-6);
    }

    #[test]
    fn gross_outliers_are_discarded_and_the_mean_stays_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let base = octagon();
        let clean: Vec<ConfigurationMatrix> =
            (0..100).map(|_| random_config(&mut rng, &base, 0.002)).collect();
        let mut contaminated = clean.clone();
        let diameter = base.diameter();
        // 5% of the sample gets one landmark thrown 50 diameters away.
        let outliers = [7usize, 23, 48, 66, 91];
        for &i in &outliers {
            let mut data = contaminated[i].data().clone();
            data[(3, 0)] += 50.0 * diameter;
            data[(3, 1)] -= 20.0 * diameter;
            contaminated[i] = ConfigurationMatrix::from_matrix_unchecked(data);
        }
        let robust = trimmed_mean_shape(
            &contaminated,
            0.1,
            TrimParams::default(),
            GpaOptions::default(),
        )
        .unwrap();
        for &i in &outliers {
            assert!(!robust.retained.contains(&i), "outlier {i} survived");
        }
        let reference = gpa_mean(&clean, GpaOptions::default()).unwrap();
        let dist = procrustes_distance(&robust.shape.mean, &reference.mean).unwrap();
        assert!(dist < 1e-3, "robust mean drifted {dist} from clean mean");
    }

    #[test]
    fn surviving_fewer_than_three_is_an_error() {
        // One tight cluster of three repeated points plus wild spread:
        // a high threshold keeps only the deepest few.
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let base = octagon();
        let mut sample: Vec<ConfigurationMatrix> = Vec::new();
        for _ in 0..10 {
            sample.push(random_config(&mut rng, &base, 3.0));
        }
        let result = trimmed_mean_shape(
            &sample,
            0.9,
            TrimParams::default(),
            GpaOptions::default(),
        );
        match result {
            Err(Error::TooFewSurvivors { survivors, required: 3 }) => {
                assert!(survivors < 3);
            }
            Ok(r) => assert!(r.retained.len() >= 3),
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn small_samples_cannot_be_trimmed() {
        let base = octagon();
        let sample = vec![base.clone(), base.clone(), base];
        assert!(matches!(
            trimmed_mean_shape(&sample, 0.1, TrimParams::default(), GpaOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    // --- relative series and median selection ----------------------------

    #[test]
    fn relative_series_is_scale_free_in_price_and_volume() {
        let p = panel(
            "s",
            &["AAA", "BBB"],
            &[vec![10.0, 12.0, 8.0, 11.0, 9.0], vec![100.0, 90.0, 110.0, 95.0, 105.0]],
            &[vec![5.0, 4.0, 6.0, 5.5, 4.5], vec![1000.0; 5]],
        );
        let series = relative_series(&p).unwrap();
        // Rescale AAA's prices by a power of two and BBB's volumes by one:
        // the ratios are unchanged bit for bit.
        let p2 = panel(
            "s",
            &["AAA", "BBB"],
            &[
                vec![40.0, 48.0, 32.0, 44.0, 36.0],
                vec![100.0, 90.0, 110.0, 95.0, 105.0],
            ],
            &[vec![5.0, 4.0, 6.0, 5.5, 4.5], vec![8000.0; 5]],
        );
        let series2 = relative_series(&p2).unwrap();
        for (a, b) in series.iter().zip(&series2) {
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn planted_central_companies_are_selected_in_two_sectors() {
        let n = 31;
        let trend: Vec<f64> = (0..n).map(|t| 1.0 + 0.3 * (t as f64 / 5.0).sin()).collect();
        let make_sector = |name: &str, amp: &[f64]| -> PanelWindow {
            let tickers: Vec<String> =
                (0..amp.len()).map(|i| format!("{}{}", name.to_uppercase(), i)).collect();
            let ticker_refs: Vec<&str> = tickers.iter().map(|s| s.as_str()).collect();
            let prices: Vec<Vec<f64>> = amp
                .iter()
                .enumerate()
                .map(|(c, &a)| {
                    (0..n)
                        .map(|t| trend[t] * (1.0 + a * ((t as f64) * 0.9 + c as f64).sin()))
                        .collect()
                })
                .collect();
            let volumes: Vec<Vec<f64>> = vec![vec![1000.0; n]; amp.len()];
            panel(name, &ticker_refs, &prices, &volumes)
        };
        // Company 1 of each sector has no idiosyncratic swing: its relative
        // curve is the pure trend, inside every band.
        let a = make_sector("fin", &[0.25, 0.0, 0.2, 0.3]);
        let b = make_sector("tech", &[0.15, 0.0, 0.35]);
        let medians = select_median_companies(&[a, b]).unwrap();
        assert_eq!(medians[0].ticker, "FIN1");
        assert_eq!(medians[1].ticker, "TECH1");
        for m in &medians {
            let best = m.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(m.scores[m.row], best);
        }
    }

    #[test]
    fn exact_ties_resolve_by_distance_then_ticker() {
        // Two identical constant-ratio companies tie at depth 1; both sit
        // at zero distance from the tied average, so the ticker decides.
        let p = panel(
            "s",
            &["AAA", "BBB", "CCC"],
            &[vec![10.0; 5], vec![10.0; 5], vec![7.0, 9.0, 11.0, 13.0, 8.0]],
            &[vec![100.0; 5], vec![50.0; 5], vec![100.0; 5]],
        );
        let medians = select_median_companies(std::slice::from_ref(&p)).unwrap();
        assert_eq!(medians[0].ticker, "AAA");
        assert!(medians[0].tied.len() >= 2);
    }

    // --- full report ------------------------------------------------------

    /// Builds sector panels whose representative companies produce exactly
    /// similar configurations on every date: relative price/volume of
    /// sector s at date t is `alpha(t) * base_s + 1`, a scaled translate
    /// of one base shape. The central company of each sector carries that
    /// series exactly; a flanker oscillates around it.
    fn similar_shape_panels(k: usize, n: usize) -> Vec<PanelWindow> {
        assert!(n % 2 == 0, "even date count keeps alpha away from zero");
        let base: Vec<[f64; 2]> = (0..k)
            .map(|s| {
                let a = std::f64::consts::TAU * s as f64 / k as f64;
                [a.cos(), 0.7 * a.sin() + 0.2 * a.cos()]
            })
            .collect();
        // alpha runs linearly from -0.2 to 0.2 skipping zero (even count),
        // so the median of a monotone series is the average of the two
        // central values: exactly the midpoint, cancelling the base term.
        let alpha: Vec<f64> = (0..n)
            .map(|t| -0.2 + 0.4 * (t as f64 + 0.5) / n as f64)
            .collect();
        (0..k)
            .map(|s| {
                let name = format!("sec{s}");
                let central_p: Vec<f64> = alpha.iter().map(|a| a * base[s][0] + 1.0).collect();
                let central_v: Vec<f64> = alpha.iter().map(|a| a * base[s][1] + 1.0).collect();
                let flank_p: Vec<f64> = central_p
                    .iter()
                    .enumerate()
                    .map(|(t, p)| p * (1.0 + 0.3 * ((t as f64) * 1.3).sin()))
                    .collect();
                let flank2_p: Vec<f64> = central_p
                    .iter()
                    .enumerate()
                    .map(|(t, p)| p * (1.0 - 0.3 * ((t as f64) * 0.7).cos()))
                    .collect();
                let tickers = [format!("S{s}A"), format!("S{s}B"), format!("S{s}C")];
                let ticker_refs: Vec<&str> = tickers.iter().map(|s| s.as_str()).collect();
                panel(
                    &name,
                    &ticker_refs,
                    &[central_p.clone(), flank_p, flank2_p],
                    &[central_v.clone(), central_v.clone(), central_v],
                )
            })
            .collect()
    }

    #[test]
    fn shared_shape_panels_produce_negligible_svar_and_affine_deformations() {
        let panels = similar_shape_panels(5, 60);
        let report = stress_report(
            &panels,
            &StressOptions {
                window_count: 3,
                alpha: 0.0,
                ..StressOptions::default()
            },
        )
        .unwrap();
        assert_eq!(report.windows.len(), 3);
        assert_eq!(report.deformations.len(), 2);
        for w in &report.windows {
            assert!(w.svar < 1e-6, "window {} svar {}", w.index, w.svar);
            assert!(w.converged);
        }
        for d in &report.deformations {
            assert!(d.bending_energy < 1e-8, "bending {}", d.bending_energy);
        }
        // The central companies carry the planted series.
        for s in 0..5 {
            assert_eq!(report.median_tickers[&format!("sec{s}")], format!("S{s}A"));
        }
    }

    #[test]
    fn report_is_deterministic_and_deformations_source_from_window_means() {
        let panels = similar_shape_panels(4, 44);
        let opts = StressOptions {
            window_count: 2,
            alpha: 0.1,
            ..StressOptions::default()
        };
        let a = stress_report(&panels, &opts).unwrap();
        let b = stress_report(&panels, &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );

        // Refitting from the reported means reproduces the deformation bit
        // for bit: the fit's source really is the earlier window's mean.
        let source = ConfigurationMatrix::from_points(&a.windows[0].mean_shape).unwrap();
        let target = ConfigurationMatrix::from_points(&a.windows[1].mean_shape).unwrap();
        let refit = tps::fit(&source, &target).unwrap();
        let reported = &a.deformations[0];
        assert_eq!(reported.bending_energy, refit.bending_energy());
        for (i, w) in reported.weights.iter().enumerate() {
            assert_eq!(w[0], refit.weights()[(i, 0)]);
            assert_eq!(w[1], refit.weights()[(i, 1)]);
        }
    }

    #[test]
    fn mismatched_date_axes_are_rejected() {
        let mut panels = similar_shape_panels(4, 44);
        let extra = panels[1].clone();
        panels[1] = PanelWindow::new(
            extra.name,
            extra.tickers,
            dates(43),
            extra.price.columns(0, 43).into_owned(),
            extra.volume.columns(0, 43).into_owned(),
        )
        .unwrap();
        assert!(matches!(
            stress_report(&panels, &StressOptions::default()),
            Err(Error::IncompletePanel(_))
        ));
    }

    #[test]
    fn two_sector_full_run_cannot_build_configurations() {
        let panels = similar_shape_panels(2, 44);
        let result = stress_report(
            &panels,
            &StressOptions {
                window_count: 2,
                alpha: 0.0,
                ..StressOptions::default()
            },
        );
        assert!(matches!(result, Err(Error::DegenerateConfiguration(_))));
    }
}
