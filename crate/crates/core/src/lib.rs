//! Shape-theoretic stress analytics for price/volume panels.
//!
//! The crate treats a cross-section of market observables as a planar
//! landmark configuration — one landmark per sector, coordinates built
//! from relative price and relative volume — and quantifies *stress* as
//! movement in shape space:
//!
//! * [`shape`] / [`procrustes`] — landmark configurations, orthogonal
//!   registration, mean shapes, and the shape-variability statistic.
//! * [`tps`] — thin-plate-spline deformations between consecutive mean
//!   shapes, with bending energy as the nonlinearity gauge.
//! * [`depth`] — modified band depth for curves and projection depth for
//!   vectors, plus depth trimming for robust estimation.
//! * [`pipeline`] — the end-to-end analysis: representative-company
//!   selection by band depth, windowed robust mean shapes, shape
//!   variability series, and deformation reports.
//! * [`simulate`] — synthetic configuration samples with controlled
//!   contamination for robustness studies.
//! * [`ingest`] — CSV panel loading and cross-sector rectangularization.
//! * [`io`] / [`svg`] / [`manifest`] — file formats and rendering used by
//!   the command-line driver.

pub mod depth;
pub mod error;
pub mod ingest;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod procrustes;
pub mod shape;
pub mod simulate;
pub mod svg;
pub mod tps;

pub use error::{Error, Result};
