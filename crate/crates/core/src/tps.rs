//! Planar thin-plate splines: the smoothest interpolating deformation
//! between two landmark configurations, plus its bending energy.
//!
//! The deformation has the form `Phi(t) = c + A t + W' s(t)` where `s(t)`
//! stacks the radial kernel `delta(h) = ||h||^2 log ||h||` evaluated at the
//! offsets from every source landmark. Fitting solves one bordered linear
//! system per output coordinate:
//!
//! ```text
//! | S   1  T | |w|   |y|
//! | 1'  0  0 | |c| = |0|
//! | T'  0  0 | |a|   |0|
//! ```
//!
//! with `S[i][j] = delta(t_i - t_j)`. The two zero blocks impose the side
//! conditions `1'W = 0` and `T'W = 0`, which make the kernel part decay fast
//! enough for the bending energy to be finite. That energy is reported as
//! `trace(W' S W)` (no normalizing constant), clamped at zero against
//! round-off.

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::shape::ConfigurationMatrix;

/// Condition-number ceiling beyond which the bordered system is treated as
/// singular; for planar landmarks that means the source points are
/// (near-)collinear.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Two source landmarks closer than this fraction of the configuration
/// diameter are considered duplicates.
pub const DUPLICATE_FRACTION: f64 = 1e-9;

/// Radial kernel `delta(h) = ||h||^2 * log ||h||`, continuously extended by
/// zero at the origin (the limit of r^2 log r as r -> 0).
pub fn kernel(h: [f64; 2]) -> f64 {
    let r2 = h[0] * h[0] + h[1] * h[1];
    if r2 == 0.0 {
        0.0
    } else {
        // r^2 * log r written as r^2 * log(r^2) / 2 to avoid a sqrt.
        0.5 * r2 * r2.ln()
    }
}

/// A fitted planar thin-plate spline deformation.
#[derive(Debug, Clone)]
pub struct TpsDeformation {
    source: ConfigurationMatrix,
    constant: Vector2<f64>,
    affine: Matrix2<f64>,
    weights: DMatrix<f64>,
    bending_energy: f64,
}

/// Fits the thin-plate spline carrying each source landmark exactly onto
/// the corresponding target landmark. Needs at least 4 landmarks in the
/// plane; sources must be distinct and not all collinear.
pub fn fit(source: &ConfigurationMatrix, target: &ConfigurationMatrix) -> Result<TpsDeformation> {
    if source.dim() != 2 || target.dim() != 2 {
        return Err(Error::DimensionMismatch(
            "thin-plate splines are planar: both configurations must be k x 2".into(),
        ));
    }
    if source.landmarks() != target.landmarks() {
        return Err(Error::DimensionMismatch(format!(
            "source has {} landmarks, target has {}",
            source.landmarks(),
            target.landmarks()
        )));
    }
    let k = source.landmarks();
    if k < 4 {
        return Err(Error::InvalidParameter(format!(
            "thin-plate spline fitting needs at least 4 landmarks, got {k}"
        )));
    }

    let diameter = source.diameter();
    let dup_limit = DUPLICATE_FRACTION * diameter;
    for i in 0..k {
        for j in (i + 1)..k {
            let d = (source.data().row(i) - source.data().row(j)).norm();
            if d < dup_limit || diameter == 0.0 {
                return Err(Error::DuplicateLandmarks { i, j });
            }
        }
    }

    // Bordered system: k kernel columns, one constant column, two affine
    // columns; symmetric by construction.
    let n = k + 3;
    let mut l = DMatrix::zeros(n, n);
    for i in 0..k {
        for j in 0..k {
            l[(i, j)] = kernel([
                source.data()[(i, 0)] - source.data()[(j, 0)],
                source.data()[(i, 1)] - source.data()[(j, 1)],
            ]);
        }
        l[(i, k)] = 1.0;
        l[(k, i)] = 1.0;
        l[(i, k + 1)] = source.data()[(i, 0)];
        l[(i, k + 2)] = source.data()[(i, 1)];
        l[(k + 1, i)] = source.data()[(i, 0)];
        l[(k + 2, i)] = source.data()[(i, 1)];
    }

    // Condition estimate from the singular values; the system matrix is
    // small (k + 3 square), so a full SVD is cheap and reliable.
    let sv = l.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::CollinearLandmarks { cond });
    }

    let mut rhs = DMatrix::zeros(n, 2);
    for i in 0..k {
        rhs[(i, 0)] = target.data()[(i, 0)];
        rhs[(i, 1)] = target.data()[(i, 1)];
    }
    let lu = l.clone().lu();
    let solution = lu
        .solve(&rhs)
        .ok_or(Error::CollinearLandmarks { cond })?;

    let weights = solution.rows(0, k).into_owned();
    let constant = Vector2::new(solution[(k, 0)], solution[(k, 1)]);
    // Row r of the affine matrix maps a source point to output coordinate r.
    let affine = Matrix2::new(
        solution[(k + 1, 0)],
        solution[(k + 2, 0)],
        solution[(k + 1, 1)],
        solution[(k + 2, 1)],
    );

    // trace(W' S W); tiny negative values are pure round-off.
    let s_block = l.view((0, 0), (k, k));
    let bending = (weights.transpose() * s_block * &weights).trace().max(0.0);

    Ok(TpsDeformation {
        source: source.clone(),
        constant,
        affine,
        weights,
        bending_energy: bending,
    })
}

impl TpsDeformation {
    /// A purely affine deformation `t -> c + A t` anchored at the given
    /// source landmarks, with all kernel weights exactly zero.
    pub fn affine(source: &ConfigurationMatrix, affine: Matrix2<f64>, constant: Vector2<f64>) -> Result<Self> {
        if source.dim() != 2 {
            return Err(Error::DimensionMismatch(
                "thin-plate splines are planar: source must be k x 2".into(),
            ));
        }
        Ok(Self {
            source: source.clone(),
            constant,
            affine,
            weights: DMatrix::zeros(source.landmarks(), 2),
            bending_energy: 0.0,
        })
    }

    /// The identity deformation anchored at the given source landmarks.
    pub fn identity(source: &ConfigurationMatrix) -> Result<Self> {
        Self::affine(source, Matrix2::identity(), Vector2::zeros())
    }

    /// Source landmarks the deformation was fitted on.
    pub fn source(&self) -> &ConfigurationMatrix {
        &self.source
    }

    /// Constant term `c`.
    pub fn constant(&self) -> Vector2<f64> {
        self.constant
    }

    /// Affine term `A` (acts on source points as column vectors).
    pub fn affine_part(&self) -> Matrix2<f64> {
        self.affine
    }

    /// Kernel weights `W`, one row per source landmark.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// `trace(W' S W)`, clamped at zero; zero exactly for affine maps.
    pub fn bending_energy(&self) -> f64 {
        self.bending_energy
    }

    /// Evaluates the deformation at one point.
    pub fn evaluate(&self, t: [f64; 2]) -> [f64; 2] {
        let mut out = [
            self.constant[0] + self.affine[(0, 0)] * t[0] + self.affine[(0, 1)] * t[1],
            self.constant[1] + self.affine[(1, 0)] * t[0] + self.affine[(1, 1)] * t[1],
        ];
        for i in 0..self.source.landmarks() {
            let d = kernel([
                t[0] - self.source.data()[(i, 0)],
                t[1] - self.source.data()[(i, 1)],
            ]);
            out[0] += self.weights[(i, 0)] * d;
            out[1] += self.weights[(i, 1)] * d;
        }
        out
    }

    /// Evaluates the deformation at many points.
    pub fn evaluate_many(&self, points: &[[f64; 2]]) -> Vec<[f64; 2]> {
        points.iter().map(|&p| self.evaluate(p)).collect()
    }

    /// Pushes a regular grid through the deformation. The grid covers the
    /// source bounding box expanded on every side by `margin` times the
    /// source diameter; nodes are stored row-major.
    pub fn grid(&self, rows: usize, cols: usize, margin: f64) -> Result<DeformedGrid> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidParameter(format!(
                "deformation grid needs at least 2 rows and 2 columns, got {rows}x{cols}"
            )));
        }
        if !margin.is_finite() || margin < 0.0 {
            return Err(Error::InvalidParameter(
                "grid margin must be a nonnegative fraction of the diameter".into(),
            ));
        }
        let data = self.source.data();
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..self.source.landmarks() {
            xmin = xmin.min(data[(i, 0)]);
            xmax = xmax.max(data[(i, 0)]);
            ymin = ymin.min(data[(i, 1)]);
            ymax = ymax.max(data[(i, 1)]);
        }
        let pad = margin * self.source.diameter();
        xmin -= pad;
        xmax += pad;
        ymin -= pad;
        ymax += pad;

        let mut source_nodes = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let y = ymin + (ymax - ymin) * i as f64 / (rows - 1) as f64;
            for j in 0..cols {
                let x = xmin + (xmax - xmin) * j as f64 / (cols - 1) as f64;
                source_nodes.push([x, y]);
            }
        }
        let nodes = self.evaluate_many(&source_nodes);
        Ok(DeformedGrid {
            rows,
            cols,
            source_nodes,
            nodes,
        })
    }
}

/// A regular source grid and its image under a deformation. Nodes are
/// row-major: node `(i, j)` sits at index `i * cols + j`.
#[derive(Debug, Clone)]
pub struct DeformedGrid {
    pub rows: usize,
    pub cols: usize,
    /// Grid nodes before deformation.
    pub source_nodes: Vec<[f64; 2]>,
    /// Grid nodes after deformation, in the same order.
    pub nodes: Vec<[f64; 2]>,
}

impl DeformedGrid {
    /// Index of node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    /// Edges between horizontally and vertically adjacent nodes, as index
    /// pairs. A rows x cols grid has `rows*(cols-1) + cols*(rows-1)` edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j + 1 < self.cols {
                    edges.push((self.index(i, j), self.index(i, j + 1)));
                }
                if i + 1 < self.rows {
                    edges.push((self.index(i, j), self.index(i + 1, j)));
                }
            }
        }
        edges
    }
}
