//! Landmark configurations and their location/scale-free forms.
//!
//! A configuration is a k x m matrix with one landmark per row. Two
//! configurations carry the same *shape* when one can be mapped onto the
//! other by translation, scaling, and rotation; the types here strip those
//! nuisances off step by step: [`center`] removes location,
//! [`centroid_size`] measures scale, and [`preshape`] removes both by
//! Helmertizing and normalizing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A k x m landmark configuration (k landmarks in m dimensions, k >= m + 1).
///
/// Entries are validated to be finite at construction; configurations with
/// fewer than m + 1 landmarks are rejected because they cannot span an
/// m-dimensional shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationMatrix {
    data: DMatrix<f64>,
}

impl ConfigurationMatrix {
    /// Validates and wraps a raw matrix.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (k, m) = data.shape();
        if m == 0 || k == 0 {
            return Err(Error::DegenerateConfiguration(
                "configuration must have at least one landmark and one coordinate".into(),
            ));
        }
        if k < m + 1 {
            return Err(Error::DegenerateConfiguration(format!(
                "{k} landmarks cannot span a {m}-dimensional shape (need at least {})",
                m + 1
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "configuration entries must be finite".into(),
            ));
        }
        Ok(Self { data })
    }

    /// Builds a configuration from row slices, one per landmark.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(
                "landmark rows have differing lengths".into(),
            ));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(DMatrix::from_row_slice(rows.len(), m, &flat))
    }

    /// Convenience constructor for planar configurations.
    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        let flat: Vec<f64> = points.iter().flat_map(|p| p.iter().copied()).collect();
        Self::new(DMatrix::from_row_slice(points.len(), 2, &flat))
    }

    /// Number of landmarks k.
    pub fn landmarks(&self) -> usize {
        self.data.nrows()
    }

    /// Coordinate dimension m.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    /// The underlying matrix.
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Landmark `i` as a coordinate vector.
    pub fn landmark(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    /// Column means, i.e. the centroid of the landmarks.
    pub fn centroid(&self) -> DVector<f64> {
        let k = self.landmarks() as f64;
        DVector::from_iterator(self.dim(), self.data.column_iter().map(|c| c.sum() / k))
    }

    /// Largest pairwise landmark distance. Zero only when all landmarks
    /// coincide.
    pub fn diameter(&self) -> f64 {
        let k = self.landmarks();
        let mut best = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                let d = (self.data.row(i) - self.data.row(j)).norm();
                best = best.max(d);
            }
        }
        best
    }

    /// Flattens to a single vector by column-stacking: all first
    /// coordinates, then all second coordinates, and so on. This is the
    /// vectorization used when configurations are fed to vector-valued
    /// depth functions.
    pub fn column_stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.landmarks() * self.dim());
        for c in self.data.column_iter() {
            out.extend(c.iter().copied());
        }
        out
    }

    pub(crate) fn from_matrix_unchecked(data: DMatrix<f64>) -> Self {
        Self { data }
    }
}

/// Subtracts the centroid from every landmark. The result has column means
/// that are zero to machine precision; landmark count and dimension are
/// unchanged.
pub fn center(config: &ConfigurationMatrix) -> ConfigurationMatrix {
    let centroid = config.centroid();
    let mut data = config.data().clone();
    for mut row in data.row_iter_mut() {
        for (v, c) in row.iter_mut().zip(centroid.iter()) {
            *v -= c;
        }
    }
    ConfigurationMatrix::from_matrix_unchecked(data)
}

/// Centroid size: the Frobenius norm of the centered configuration.
///
/// Strictly positive for any configuration whose landmarks do not all
/// coincide; invariant under translation and rotation, and scales linearly
/// under uniform scaling.
pub fn centroid_size(config: &ConfigurationMatrix) -> f64 {
    center(config).data().norm()
}

/// The (k-1) x k Helmert submatrix: orthonormal rows, each orthogonal to
/// the vector of ones. Left-multiplying a configuration by it removes
/// location while preserving the Frobenius norm of the centered matrix.
pub fn helmert_submatrix(k: usize) -> DMatrix<f64> {
    assert!(k >= 2, "Helmert submatrix needs at least two landmarks");
    let mut h = DMatrix::zeros(k - 1, k);
    for j in 1..k {
        // Row j-1 contrasts the (j+1)-th landmark with the mean of the
        // first j landmarks.
        let hj = -1.0 / ((j as f64) * (j as f64 + 1.0)).sqrt();
        for col in 0..j {
            h[(j - 1, col)] = hj;
        }
        h[(j - 1, j)] = -(j as f64) * hj;
    }
    h
}

/// A Helmertized, unit-norm configuration: the (k-1) x m representative of
/// a shape with location and scale removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Preshape {
    data: DMatrix<f64>,
}

impl Preshape {
    /// The underlying (k-1) x m matrix. Its Frobenius norm is 1.
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Number of landmarks k of the configuration this preshape came from.
    pub fn landmarks(&self) -> usize {
        self.data.nrows() + 1
    }

    /// Coordinate dimension m.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }
}

/// Maps a configuration to its preshape: `H * config / centroid_size`.
///
/// Fails with [`Error::DegenerateConfiguration`] when the centroid size is
/// zero (all landmarks coincide), since such a configuration carries no
/// shape information.
pub fn preshape(config: &ConfigurationMatrix) -> Result<Preshape> {
    let size = centroid_size(config);
    if size <= 0.0 {
        return Err(Error::DegenerateConfiguration(
            "zero centroid size: all landmarks coincide".into(),
        ));
    }
    let h = helmert_submatrix(config.landmarks());
    Ok(Preshape {
        data: (h * config.data()) / size,
    })
}

/// Centers a configuration and scales it to unit centroid size, keeping the
/// k x m landmark layout. This is the full-coordinate twin of [`preshape`]
/// (the Helmert map is an isometry between the two representations) and is
/// what the mean-shape iteration works with so that its output stays
/// directly interpretable as landmarks.
pub fn normalized_configuration(config: &ConfigurationMatrix) -> Result<ConfigurationMatrix> {
    let size = centroid_size(config);
    if size <= 0.0 {
        return Err(Error::DegenerateConfiguration(
            "zero centroid size: all landmarks coincide".into(),
        ));
    }
    let centered = center(config);
    Ok(ConfigurationMatrix::from_matrix_unchecked(
        centered.data() / size,
    ))
}
