//! Data depth: centrality rankings for curves and for vectors.
//!
//! Curves are ranked by modified band depth — for every pair of sample
//! curves, measure the fraction of the time axis a curve spends inside the
//! band the pair spans, then average over all pairs. Vectors are ranked by
//! projection depth — the worst-case robustly standardized distance from
//! the sample over many directions, mapped through `1 / (1 + outlyingness)`.
//! Both feed the trimming step that discards low-depth observations before
//! mean-shape estimation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default number of random projection directions.
pub const DEFAULT_DIRECTIONS: usize = 1000;

/// Score ties closer than this are treated as exact when picking medians.
pub const MEDIAN_TIE_TOL: f64 = 1e-12;

/// A sample of curves observed on a shared, strictly increasing grid.
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    grid: Vec<f64>,
    curves: Vec<Vec<f64>>,
    ids: Vec<String>,
}

impl FunctionalSample {
    /// Validates grid monotonicity and row lengths. Curve identifiers are
    /// optional; pass an empty vector to have positional names generated.
    pub fn new(grid: Vec<f64>, curves: Vec<Vec<f64>>, ids: Vec<String>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::EmptySample);
        }
        if grid.len() < 2 {
            return Err(Error::GridMismatch(
                "evaluation grid needs at least two points".into(),
            ));
        }
        if grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidData("grid points must be finite".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch(
                "evaluation grid must be strictly increasing".into(),
            ));
        }
        for (i, c) in curves.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "curve {i} has {} values on a grid of {}",
                    c.len(),
                    grid.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("curve {i} has non-finite values")));
            }
        }
        let ids = if ids.is_empty() {
            (0..curves.len()).map(|i| format!("c{i}")).collect()
        } else if ids.len() == curves.len() {
            ids
        } else {
            return Err(Error::DimensionMismatch(format!(
                "{} identifiers for {} curves",
                ids.len(),
                curves.len()
            )));
        };
        Ok(Self { grid, curves, ids })
    }

    /// Uniform grid 0, 1, ..., n-1 — the natural time axis for equally
    /// spaced observations.
    pub fn on_index_grid(curves: Vec<Vec<f64>>, ids: Vec<String>) -> Result<Self> {
        let n = curves.first().map(|c| c.len()).unwrap_or(0);
        Self::new((0..n).map(|i| i as f64).collect(), curves, ids)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Trapezoid quadrature weights for the grid: half the neighboring gap
    /// sum at interior points, half the single gap at the ends. They sum to
    /// the grid span.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let g = &self.grid;
        let n = g.len();
        let mut w = vec![0.0; n];
        w[0] = (g[1] - g[0]) / 2.0;
        w[n - 1] = (g[n - 1] - g[n - 2]) / 2.0;
        for i in 1..n - 1 {
            w[i] = (g[i + 1] - g[i - 1]) / 2.0;
        }
        w
    }
}

/// How a depth score was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMethod {
    ModifiedBand,
    Projection,
}

/// Depth values for the members of a sample, in sample order.
#[derive(Debug, Clone)]
pub struct DepthScores {
    pub method: DepthMethod,
    pub values: Vec<f64>,
}

/// Modified band depth of one curve with respect to a sample.
///
/// For each unordered pair of sample curves, the band at time `t` spans
/// `[min, max]` of the pair's values; membership is inclusive on both ends.
/// The time spent inside the band is measured with trapezoid weights and
/// normalized by the grid span; the score averages these fractions over all
/// `n (n - 1) / 2` pairs. Always in `[0, 1]`.
pub fn mbd_of(curve: &[f64], sample: &FunctionalSample) -> Result<f64> {
    if curve.len() != sample.grid().len() {
        return Err(Error::GridMismatch(format!(
            "curve has {} values on a grid of {}",
            curve.len(),
            sample.grid().len()
        )));
    }
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "band depth needs at least two sample curves".into(),
        ));
    }
    let weights = sample.quadrature_weights();
    let total: f64 = weights.iter().sum();
    let curves = sample.curves();

    let mut sum = 0.0;
    for i1 in 0..n {
        for i2 in (i1 + 1)..n {
            let mut inside = 0.0;
            for (t, w) in weights.iter().enumerate() {
                let (lo, hi) = if curves[i1][t] <= curves[i2][t] {
                    (curves[i1][t], curves[i2][t])
                } else {
                    (curves[i2][t], curves[i1][t])
                };
                if lo <= curve[t] && curve[t] <= hi {
                    inside += w;
                }
            }
            sum += inside / total;
        }
    }
    Ok(2.0 / (n as f64 * (n as f64 - 1.0)) * sum)
}

/// Modified band depth of every member of the sample.
pub fn mbd(sample: &FunctionalSample) -> Result<DepthScores> {
    let values = sample
        .curves()
        .iter()
        .map(|c| mbd_of(c, sample))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DepthScores {
        method: DepthMethod::ModifiedBand,
        values,
    })
}

/// The deepest curve of a sample, with tie handling.
#[derive(Debug, Clone)]
pub struct FunctionalMedian {
    /// The median curve: a sample member when the maximum is unique, the
    /// pointwise average of the tied members otherwise.
    pub curve: Vec<f64>,
    /// Indices of the members attaining the maximal depth (within
    /// [`MEDIAN_TIE_TOL`]); a single element when the maximum is unique.
    pub indices: Vec<usize>,
    /// The scores the decision was based on.
    pub scores: Vec<f64>,
}

/// Deepest-curve functional median under modified band depth.
pub fn functional_median(sample: &FunctionalSample) -> Result<FunctionalMedian> {
    let scores = mbd(sample)?.values;
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let indices: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| max - s <= MEDIAN_TIE_TOL)
        .map(|(i, _)| i)
        .collect();
    let g = sample.grid().len();
    let curve = if indices.len() == 1 {
        sample.curves()[indices[0]].clone()
    } else {
        let mut avg = vec![0.0; g];
        for &i in &indices {
            for (a, v) in avg.iter_mut().zip(&sample.curves()[i]) {
                *a += v;
            }
        }
        for a in &mut avg {
            *a /= indices.len() as f64;
        }
        avg
    };
    Ok(FunctionalMedian {
        curve,
        indices,
        scores,
    })
}

/// Median of a slice: middle order statistic, or the average of the two
/// central ones for even lengths.
pub(crate) fn median(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in median input"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Median absolute deviation about the median, unscaled (no consistency
/// constant).
pub(crate) fn mad(values: &[f64]) -> f64 {
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    median(&deviations)
}

/// The direction set used by projection depth: the canonical axes first
/// (so one-dimensional data is handled exactly), then `directions` seeded
/// pseudo-random unit vectors.
fn direction_set(dim: usize, directions: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = Vec::with_capacity(dim + directions);
    for axis in 0..dim {
        let mut u = vec![0.0; dim];
        u[axis] = 1.0;
        set.push(u);
    }
    while set.len() < dim + directions {
        let u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            set.push(u.into_iter().map(|v| v / norm).collect());
        }
    }
    set
}

/// Worst-case outlyingness of `point` over the given directions; infinite
/// when some direction has zero spread but the point deviates.
fn max_outlyingness(point: &[f64], sample: &[Vec<f64>], dirs: &[Vec<f64>]) -> f64 {
    let project = |x: &[f64], u: &[f64]| -> f64 { x.iter().zip(u).map(|(a, b)| a * b).sum() };
    let mut worst = 0.0f64;
    let mut projections = vec![0.0; sample.len()];
    for u in dirs {
        for (p, x) in projections.iter_mut().zip(sample) {
            *p = project(x, u);
        }
        let med = median(&projections);
        let spread = mad(&projections);
        let dev = (project(point, u) - med).abs();
        let out = if spread > 0.0 {
            dev / spread
        } else if dev > 0.0 {
            // Zero spread away from the mass point: maximal outlyingness.
            f64::INFINITY
        } else {
            0.0
        };
        if out > worst {
            worst = out;
            if worst.is_infinite() {
                break;
            }
        }
    }
    worst
}

/// Projection depth of a point with respect to a sample of d-vectors:
/// `1 / (1 + sup_u |u' x - Med(u' X)| / MAD(u' X))`, the supremum taken
/// over the canonical axes plus `directions` seeded random unit vectors.
/// Exact in one dimension; a from-below approximation of the supremum
/// otherwise. Values lie in `(0, 1]`, or exactly 0 when the sample has zero
/// spread in some direction where the point deviates.
pub fn projection_depth(
    point: &[f64],
    sample: &[Vec<f64>],
    directions: usize,
    seed: u64,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let dim = sample[0].len();
    if dim == 0 {
        return Err(Error::InvalidData("zero-dimensional points".into()));
    }
    if point.len() != dim || sample.iter().any(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch(
            "point and sample vectors must share a dimension".into(),
        ));
    }
    if point.iter().any(|v| !v.is_finite())
        || sample.iter().any(|x| x.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::InvalidData("depth inputs must be finite".into()));
    }
    let dirs = direction_set(dim, directions, seed);
    Ok(1.0 / (1.0 + max_outlyingness(point, sample, &dirs)))
}

/// Projection depth of every sample member with respect to the whole
/// sample, sharing one direction set across members — identical to calling
/// [`projection_depth`] per member with the same `directions` and `seed`.
pub fn projection_depths(sample: &[Vec<f64>], directions: usize, seed: u64) -> Result<DepthScores> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let dim = sample[0].len();
    if dim == 0 {
        return Err(Error::InvalidData("zero-dimensional points".into()));
    }
    if sample.iter().any(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch(
            "sample vectors must share a dimension".into(),
        ));
    }
    if sample.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidData("depth inputs must be finite".into()));
    }
    let dirs = direction_set(dim, directions, seed);

    // One pass per direction: the sample statistics are shared by all
    // members, so compute them once and update every member's running sup.
    let mut worst = vec![0.0f64; sample.len()];
    let mut projections = vec![0.0; sample.len()];
    for u in &dirs {
        for (p, x) in projections.iter_mut().zip(sample) {
            *p = x.iter().zip(u).map(|(a, b)| a * b).sum();
        }
        let med = median(&projections);
        let spread = mad(&projections);
        for (w, p) in worst.iter_mut().zip(&projections) {
            let dev = (p - med).abs();
            let out = if spread > 0.0 {
                dev / spread
            } else if dev > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if out > *w {
                *w = out;
            }
        }
    }
    Ok(DepthScores {
        method: DepthMethod::Projection,
        values: worst.into_iter().map(|w| 1.0 / (1.0 + w)).collect(),
    })
}

/// Indices (ascending) of the sample members whose projection depth is at
/// least `alpha`. Never empty: if the threshold would discard everything,
/// the deepest members are retained.
pub fn depth_trim(
    sample: &[Vec<f64>],
    alpha: f64,
    directions: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "trimming level must lie in [0, 1), got {alpha}"
        )));
    }
    let depths = projection_depths(sample, directions, seed)?.values;
    let retained: Vec<usize> = depths
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= alpha)
        .map(|(i, _)| i)
        .collect();
    if !retained.is_empty() {
        return Ok(retained);
    }
    // alpha sits above every depth (possible since the maximal projection
    // depth of a finite sample is below 1 in general); keep the deepest.
    let max = depths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(depths
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == max)
        .map(|(i, _)| i)
        .collect())
}
