//! Orthogonal alignment of landmark configurations and mean-shape
//! estimation.
//!
//! [`align`] solves the similarity-registration problem
//! `min ||X2 - beta * X1 * A - 1 m'||_F` over orthogonal `A` (reflections
//! allowed), translation `m`, and optionally scale `beta`, in closed form
//! through the SVD of the crossproduct of the centered operands.
//!
//! [`gpa_mean`] estimates a mean shape from a sample of configurations by
//! alternating rotation-only alignment against the current mean with
//! re-averaging, working on unit-centroid-size centered configurations so
//! the output stays a plain landmark matrix. [`svar`] turns the residual
//! dispersion around a mean into a single shape-variability number.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::shape::{center, normalized_configuration, ConfigurationMatrix};

/// Outcome of a pairwise alignment.
///
/// The transform maps the source onto the target as
/// `scale * source * rotation + 1 * translation'` (row-per-landmark
/// convention, so `rotation` acts on coordinate columns from the right).
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    /// Orthogonal m x m matrix; may include a reflection.
    pub rotation: DMatrix<f64>,
    /// Translation applied after rotation and scaling.
    pub translation: DVector<f64>,
    /// Scale factor; exactly 1.0 when fitted without scaling.
    pub scale: f64,
    /// Frobenius norm of the residual `target - transform(source)`.
    pub residual: f64,
}

impl AlignmentResult {
    /// Applies the fitted transform to a configuration.
    pub fn apply(&self, config: &ConfigurationMatrix) -> ConfigurationMatrix {
        let mut data = self.scale * config.data() * &self.rotation;
        for mut row in data.row_iter_mut() {
            for (v, t) in row.iter_mut().zip(self.translation.iter()) {
                *v += t;
            }
        }
        ConfigurationMatrix::from_matrix_unchecked(data)
    }
}

/// Registers `source` onto `target` over translations, orthogonal maps, and
/// (optionally) scale.
///
/// Both configurations must share dimensions and be nondegenerate. The
/// orthogonal factor is the full O(m) minimizer -- when the best map is a
/// reflection, the returned rotation has determinant -1.
pub fn align(
    source: &ConfigurationMatrix,
    target: &ConfigurationMatrix,
    with_scale: bool,
) -> Result<AlignmentResult> {
    if source.landmarks() != target.landmarks() || source.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source is {}x{}, target is {}x{}",
            source.landmarks(),
            source.dim(),
            target.landmarks(),
            target.dim()
        )));
    }
    let src_centered = center(source);
    let tgt_centered = center(target);
    let src_norm = src_centered.data().norm();
    if src_norm <= 0.0 || tgt_centered.data().norm() <= 0.0 {
        return Err(Error::DegenerateConfiguration(
            "alignment requires nonzero centroid size on both sides".into(),
        ));
    }

    let cross = src_centered.data().transpose() * tgt_centered.data();
    let svd = cross.svd(true, true);
    let u = svd.u.as_ref().expect("SVD with u requested");
    let v_t = svd.v_t.as_ref().expect("SVD with v_t requested");
    let rotation = u * v_t;
    let trace_d: f64 = svd.singular_values.iter().sum();

    let scale = if with_scale {
        trace_d / (src_norm * src_norm)
    } else {
        1.0
    };

    // Optimal translation for the chosen rotation and scale carries the
    // source centroid onto the target centroid.
    let src_centroid = source.centroid();
    let tgt_centroid = target.centroid();
    let translation = &tgt_centroid - scale * rotation.transpose() * &src_centroid;

    let mut residual_mat = scale * source.data() * &rotation - target.data();
    for mut row in residual_mat.row_iter_mut() {
        for (v, t) in row.iter_mut().zip(translation.iter()) {
            *v += t;
        }
    }
    let result = AlignmentResult {
        residual: residual_mat.norm(),
        rotation,
        translation,
        scale,
    };
    Ok(result)
}

/// Full Procrustes distance between the shapes of two configurations:
/// both are reduced to centered unit-size form and registered by an
/// orthogonal map; the residual norm is the distance. Symmetric, zero
/// exactly when the two configurations share a shape.
pub fn procrustes_distance(a: &ConfigurationMatrix, b: &ConfigurationMatrix) -> Result<f64> {
    let pa = normalized_configuration(a)?;
    let pb = normalized_configuration(b)?;
    let fit = align(&pa, &pb, false)?;
    Ok(fit.residual)
}

/// Options for the mean-shape iteration.
#[derive(Debug, Clone, Copy)]
pub struct GpaOptions {
    /// Stop once the objective decreases by less than this between
    /// consecutive iterations.
    pub tol: f64,
    /// Hard iteration cap; the best iterate so far is returned with
    /// `converged = false` when it is hit.
    pub max_iter: usize,
}

impl Default for GpaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

/// Converged (or best-effort) mean shape together with the aligned sample.
#[derive(Debug, Clone)]
pub struct MeanShapeResult {
    /// Unit-centroid-size mean configuration, rotated into the canonical
    /// frame (first principal axis horizontal, first landmark at
    /// nonnegative height).
    pub mean: ConfigurationMatrix,
    /// The input configurations, centered, scaled to unit size, and rotated
    /// onto the mean; same order as the input.
    pub aligned: Vec<ConfigurationMatrix>,
    /// Final value of `sum_l ||X_l - mean||_F^2` over the aligned sample.
    pub objective: f64,
    /// Objective value after each iteration; non-increasing.
    pub objective_trace: Vec<f64>,
    /// Root mean squared residual: `sqrt(objective / L)`.
    pub svar: f64,
    /// Number of alignment sweeps performed.
    pub iterations: usize,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
}

/// Estimates the mean shape of a sample of at least two configurations.
///
/// Every configuration is centered and scaled to unit centroid size; the
/// mean starts at the first of them and is refined by alternating
/// rotation-only alignment of the whole sample against it with landmark-wise
/// averaging, re-normalizing the average to unit size each sweep. For
/// unit-size inputs this loop never increases the objective, so the trace in
/// the result is monotone.
pub fn gpa_mean(configs: &[ConfigurationMatrix], opts: GpaOptions) -> Result<MeanShapeResult> {
    if configs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "mean shape estimation needs at least 2 configurations, got {}",
            configs.len()
        )));
    }
    let k = configs[0].landmarks();
    let m = configs[0].dim();
    for (i, c) in configs.iter().enumerate() {
        if c.landmarks() != k || c.dim() != m {
            return Err(Error::DimensionMismatch(format!(
                "configuration {i} is {}x{}, expected {k}x{m}",
                c.landmarks(),
                c.dim()
            )));
        }
    }
    if opts.tol <= 0.0 || !opts.tol.is_finite() {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }

    let normalized: Vec<ConfigurationMatrix> = configs
        .iter()
        .map(normalized_configuration)
        .collect::<Result<_>>()?;

    let mut mean = normalized[0].clone();
    let mut aligned: Vec<ConfigurationMatrix> = Vec::new();
    let mut objective = f64::INFINITY;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        aligned = normalized
            .iter()
            .map(|c| align(c, &mean, false).map(|fit| fit.apply(c)))
            .collect::<Result<_>>()?;
        let new_objective: f64 = aligned
            .iter()
            .map(|c| (c.data() - mean.data()).norm_squared())
            .sum();
        trace.push(new_objective);
        if objective - new_objective < opts.tol {
            objective = new_objective;
            converged = true;
            break;
        }
        objective = new_objective;

        let mut sum = DMatrix::zeros(k, m);
        for c in &aligned {
            sum += c.data();
        }
        let average = sum / configs.len() as f64;
        let norm = average.norm();
        if norm <= 0.0 {
            return Err(Error::DegenerateConfiguration(
                "aligned configurations average to the zero matrix".into(),
            ));
        }
        mean = ConfigurationMatrix::from_matrix_unchecked(average / norm);
    }

    // Rotate the whole solution into a reproducible frame. A common
    // rotation leaves every residual, and hence the objective, unchanged.
    let canonical_rotation = canonical_frame_rotation(&mean);
    let mean = ConfigurationMatrix::from_matrix_unchecked(mean.data() * &canonical_rotation);
    let aligned: Vec<ConfigurationMatrix> = aligned
        .into_iter()
        .map(|c| ConfigurationMatrix::from_matrix_unchecked(c.data() * &canonical_rotation))
        .collect();

    let svar_value = (objective / configs.len() as f64).sqrt();
    Ok(MeanShapeResult {
        mean,
        aligned,
        objective,
        objective_trace: trace,
        svar: svar_value,
        iterations,
        converged,
    })
}

/// Shape variability: the root mean squared Frobenius residual of a set of
/// aligned configurations around a mean, `sqrt(mean_l ||X_l - M||_F^2)`.
pub fn svar(aligned: &[ConfigurationMatrix], mean: &ConfigurationMatrix) -> Result<f64> {
    if aligned.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut total = 0.0;
    for (i, c) in aligned.iter().enumerate() {
        if c.landmarks() != mean.landmarks() || c.dim() != mean.dim() {
            return Err(Error::DimensionMismatch(format!(
                "configuration {i} is {}x{}, mean is {}x{}",
                c.landmarks(),
                c.dim(),
                mean.landmarks(),
                mean.dim()
            )));
        }
        total += (c.data() - mean.data()).norm_squared();
    }
    Ok((total / aligned.len() as f64).sqrt())
}

/// Rotation (determinant +1) that maps a centered planar configuration into
/// the canonical frame: first principal axis of the landmarks horizontal,
/// first landmark at nonnegative height (falling back to nonnegative
/// abscissa when the first landmark sits on the axis). Identity for
/// non-planar configurations, which have no canonical frame defined here.
fn canonical_frame_rotation(mean: &ConfigurationMatrix) -> DMatrix<f64> {
    if mean.dim() != 2 {
        return DMatrix::identity(mean.dim(), mean.dim());
    }
    let c = mean.data().transpose() * mean.data();
    // Angle of the major eigenvector of the 2x2 scatter matrix.
    let theta = 0.5 * (2.0 * c[(0, 1)]).atan2(c[(0, 0)] - c[(1, 1)]);
    let (s, co) = theta.sin_cos();
    // Right-multiplying row-landmarks by rot(theta) turns each landmark by
    // -theta, bringing the major axis onto the horizontal.
    let mut q = DMatrix::from_row_slice(2, 2, &[co, -s, s, co]);
    let first = mean.data().row(0) * &q;
    let tiny = 1e-12;
    let flip = if first[1] < -tiny {
        true
    } else if first[1].abs() <= tiny {
        first[0] < 0.0
    } else {
        false
    };
    if flip {
        q = -q; // rotation by an extra half turn, still determinant +1
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::centroid_size;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rot2(theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    /// Applies a column-convention rotation to every landmark.
    fn rotate(config: &ConfigurationMatrix, theta: f64) -> ConfigurationMatrix {
        ConfigurationMatrix::from_matrix_unchecked(config.data() * rot2(theta).transpose())
    }

    fn random_config(rng: &mut ChaCha8Rng, k: usize) -> ConfigurationMatrix {
        loop {
            let pts: Vec<[f64; 2]> = (0..k)
                .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                .collect();
            let c = ConfigurationMatrix::from_points(&pts).unwrap();
            if centroid_size(&c) > 0.5 {
                return c;
            }
        }
    }

    #[test]
    fn recovers_rotation_and_translation() {
        let source = ConfigurationMatrix::from_points(&[
            [0.0, 0.0],
            [2.0, 0.5],
            [1.0, 3.0],
            [-1.5, 1.0],
        ])
        .unwrap();
        let theta = std::f64::consts::FRAC_PI_2;
        let shift = [5.0, -2.0];
        let target_pts: Vec<[f64; 2]> = (0..source.landmarks())
            .map(|i| {
                let p = source.landmark(i);
                let (s, c) = theta.sin_cos();
                [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]]
            })
            .collect();
        let target = ConfigurationMatrix::from_points(&target_pts).unwrap();

        let fit = align(&source, &target, false).unwrap();
        assert!(fit.residual < 1e-10);
        assert_relative_eq!(fit.scale, 1.0);
        // Row convention: the fitted matrix is the transpose of the
        // column-acting 90 degree rotation.
        let expected = rot2(theta).transpose();
        assert!((fit.rotation.clone() - expected).norm() < 1e-10);
        assert_relative_eq!(fit.translation[0], shift[0], epsilon = 1e-10);
        assert_relative_eq!(fit.translation[1], shift[1], epsilon = 1e-10);
        // The transform reproduces the target.
        let mapped = fit.apply(&source);
        assert!((mapped.data() - target.data()).norm() < 1e-10);
    }

    #[test]
    fn recovers_pure_scaling() {
        let source = ConfigurationMatrix::from_points(&[
            [0.0, 0.0],
            [1.0, 0.2],
            [0.4, 1.5],
            [-0.9, 0.7],
        ])
        .unwrap();
        let target = ConfigurationMatrix::from_matrix_unchecked(source.data() * 2.0);
        let fit = align(&source, &target, true).unwrap();
        assert_relative_eq!(fit.scale, 2.0, epsilon = 1e-12);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn identical_configurations_align_with_zero_residual() {
        let c = ConfigurationMatrix::from_points(&[[0.1, 0.2], [1.0, -0.4], [0.3, 0.9]]).unwrap();
        let fit = align(&c, &c, false).unwrap();
        assert!(fit.residual < 1e-12);
        assert!((fit.rotation.clone() - DMatrix::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn rotation_factor_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_config(&mut rng, 5);
            let b = random_config(&mut rng, 5);
            let fit = align(&a, &b, true).unwrap();
            let gram = fit.rotation.transpose() * &fit.rotation;
            assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-10);
        }
    }

    #[test]
    fn reflection_is_found_when_it_fits_better() {
        let source = ConfigurationMatrix::from_points(&[
            [0.0, 0.0],
            [2.0, 0.1],
            [1.2, 1.7],
            [-0.5, 0.9],
        ])
        .unwrap();
        // Mirror across the x axis: an orientation-reversing map.
        let mirrored: Vec<[f64; 2]> = (0..source.landmarks())
            .map(|i| {
                let p = source.landmark(i);
                [p[0], -p[1]]
            })
            .collect();
        let target = ConfigurationMatrix::from_points(&mirrored).unwrap();
        let fit = align(&source, &target, false).unwrap();
        assert!(fit.residual < 1e-10);
        assert_relative_eq!(fit.rotation.determinant(), -1.0, epsilon = 1e-10);
    }

    #[test]
    fn residual_is_symmetric_for_centered_unit_size_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let a = normalized_configuration(&random_config(&mut rng, 6)).unwrap();
            let b = normalized_configuration(&random_config(&mut rng, 6)).unwrap();
            let ab = align(&a, &b, false).unwrap().residual;
            let ba = align(&b, &a, false).unwrap().residual;
            assert_relative_eq!(ab, ba, epsilon = 1e-10);
        }
    }

    /// Brute-force check of the closed-form solution: sweep the rotation
    /// angle over a grid for both orthogonal branches (rotations and
    /// reflections), computing the residual directly from the centered
    /// matrices. A smaller-scale version of the exhaustive acceptance run.
    #[test]
    fn svd_objective_matches_angle_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let k = rng.random_range(3..=5);
            let a = random_config(&mut rng, k);
            let b = random_config(&mut rng, k);
            let fit = align(&a, &b, false).unwrap();

            let ac = center(&a);
            let bc = center(&b);
            let mut best = f64::INFINITY;
            let steps = 200_000usize;
            for flip in [false, true] {
                for i in 0..steps {
                    let theta = i as f64 * std::f64::consts::TAU / steps as f64;
                    let (s, c) = theta.sin_cos();
                    let mut q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
                    if flip {
                        // Reflection branch: negate the second column.
                        q[(0, 1)] = -q[(0, 1)];
                        q[(1, 1)] = -q[(1, 1)];
                    }
                    let residual = (ac.data() * q - bc.data()).norm();
                    if residual < best {
                        best = residual;
                    }
                }
            }
            assert!(
                fit.residual <= best + 1e-6,
                "SVD residual {} worse than grid {}",
                fit.residual,
                best
            );
            assert!(
                best <= fit.residual + 1e-6,
                "grid found {} clearly below SVD {}",
                best,
                fit.residual
            );
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let a = ConfigurationMatrix::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let b = ConfigurationMatrix::from_points(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(
            align(&a, &b, false),
            Err(Error::DimensionMismatch(_))
        ));
    }

    // --- mean shape -------------------------------------------------------

    #[test]
    fn identical_configs_converge_immediately_with_zero_svar() {
        let c = ConfigurationMatrix::from_points(&[[0.0, 0.0], [1.0, 0.1], [0.4, 1.3]]).unwrap();
        let result = gpa_mean(&[c.clone(), c.clone(), c], GpaOptions::default()).unwrap();
        assert!(result.converged);
        assert!(result.svar < 1e-10);
        assert_relative_eq!(centroid_size(&result.mean), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rotated_copies_share_a_mean_with_negligible_svar() {
        let base = ConfigurationMatrix::from_points(&[
            [1.2, 0.1],
            [-0.3, 0.8],
            [0.5, -1.1],
            [-1.4, 0.2],
        ])
        .unwrap();
        let sample: Vec<ConfigurationMatrix> = [0.0, 0.7, 1.9, 3.1, 4.4, 5.6]
            .iter()
            .map(|&t| rotate(&base, t))
            .collect();
        let result = gpa_mean(&sample, GpaOptions::default()).unwrap();
        assert!(result.converged);
        assert!(result.svar < 1e-6, "svar {}", result.svar);
        assert!(result.objective < 1e-10);
    }

    #[test]
    fn objective_trace_is_monotone_and_svar_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sample: Vec<ConfigurationMatrix> = (0..8).map(|_| random_config(&mut rng, 6)).collect();
        let result = gpa_mean(&sample, GpaOptions::default()).unwrap();
        for w in result.objective_trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "objective increased: {} -> {}",
                w[0],
                w[1]
            );
        }
        // svar is exactly the root mean square of the final residuals.
        let recomputed = svar(&result.aligned, &result.mean).unwrap();
        assert_relative_eq!(result.svar, recomputed, epsilon = 1e-10);
        assert_relative_eq!(
            result.svar,
            (result.objective / sample.len() as f64).sqrt(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn input_order_does_not_change_the_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sample: Vec<ConfigurationMatrix> = (0..7).map(|_| random_config(&mut rng, 5)).collect();
        let forward = gpa_mean(&sample, GpaOptions::default()).unwrap();
        let mut reversed = sample.clone();
        reversed.reverse();
        let backward = gpa_mean(&reversed, GpaOptions::default()).unwrap();
        assert!((forward.objective - backward.objective).abs() < 1e-10);
    }

    #[test]
    fn common_rotation_of_all_inputs_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sample: Vec<ConfigurationMatrix> = (0..6).map(|_| random_config(&mut rng, 5)).collect();
        let rotated: Vec<ConfigurationMatrix> = sample.iter().map(|c| rotate(c, 1.234)).collect();
        let plain = gpa_mean(&sample, GpaOptions::default()).unwrap();
        let turned = gpa_mean(&rotated, GpaOptions::default()).unwrap();
        assert!((plain.objective - turned.objective).abs() < 1e-8);
        assert!((plain.svar - turned.svar).abs() < 1e-8);
    }

    /// Joint brute force for two configurations: minimize the objective over
    /// both orthogonal maps directly (grid plus local refinement), with the
    /// mean constrained to unit norm as in the iterative scheme. The
    /// iterative solver must land on the same value.
    #[test]
    fn two_config_objective_matches_two_angle_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = normalized_configuration(&random_config(&mut rng, 4)).unwrap();
        let b = normalized_configuration(&random_config(&mut rng, 4)).unwrap();

        // Objective for fixed orthogonal maps: with both operands unit-norm
        // and the mean constrained to unit norm, the optimal mean is the
        // normalized average and the objective is 2 * L * (1 - ||avg||).
        let objective = |t1: f64, f1: bool, t2: f64, f2: bool| -> f64 {
            let q = |theta: f64, flip: bool| {
                let (s, c) = theta.sin_cos();
                let mut m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
                if flip {
                    m[(0, 1)] = -m[(0, 1)];
                    m[(1, 1)] = -m[(1, 1)];
                }
                m
            };
            let ra = a.data() * q(t1, f1);
            let rb = b.data() * q(t2, f2);
            let avg = (ra + rb) / 2.0;
            4.0 * (1.0 - avg.norm())
        };

        let mut best = f64::INFINITY;
        let mut best_at = (0.0, false, 0.0, false);
        let coarse = 360;
        for f1 in [false, true] {
            for f2 in [false, true] {
                for i in 0..coarse {
                    let t1 = i as f64 * std::f64::consts::TAU / coarse as f64;
                    for j in 0..coarse {
                        let t2 = j as f64 * std::f64::consts::TAU / coarse as f64;
                        let v = objective(t1, f1, t2, f2);
                        if v < best {
                            best = v;
                            best_at = (t1, f1, t2, f2);
                        }
                    }
                }
            }
        }
        // Local refinement keeps the search independent of any closed form.
        let mut span = std::f64::consts::TAU / coarse as f64;
        let (mut t1, f1, mut t2, f2) = best_at;
        for _ in 0..8 {
            let steps = 20;
            let mut local_best = best;
            let (mut n1, mut n2) = (t1, t2);
            for i in -steps..=steps {
                for j in -steps..=steps {
                    let c1 = t1 + i as f64 * span / steps as f64;
                    let c2 = t2 + j as f64 * span / steps as f64;
                    let v = objective(c1, f1, c2, f2);
                    if v < local_best {
                        local_best = v;
                        n1 = c1;
                        n2 = c2;
                    }
                }
            }
            best = local_best;
            t1 = n1;
            t2 = n2;
            span /= steps as f64;
        }

        let result = gpa_mean(&[a.clone(), b.clone()], GpaOptions::default()).unwrap();
        assert!(
            (result.objective - best).abs() < 1e-5,
            "iterative {} vs grid {}",
            result.objective,
            best
        );
    }

    #[test]
    fn iteration_cap_returns_best_iterate_unconverged() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let sample: Vec<ConfigurationMatrix> = (0..9).map(|_| random_config(&mut rng, 6)).collect();
        let result = gpa_mean(
            &sample,
            GpaOptions {
                tol: 1e-10,
                max_iter: 1,
            },
        )
        .unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations, 1);
        assert!(result.objective.is_finite());
    }

    #[test]
    fn single_config_sample_is_rejected() {
        let c = ConfigurationMatrix::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            gpa_mean(&[c], GpaOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn canonical_frame_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sample: Vec<ConfigurationMatrix> = (0..5).map(|_| random_config(&mut rng, 5)).collect();
        let result = gpa_mean(&sample, GpaOptions::default()).unwrap();
        let mean = &result.mean;
        // Major axis horizontal: the off-diagonal scatter vanishes and the
        // horizontal spread dominates.
        let c = mean.data().transpose() * mean.data();
        assert!(c[(0, 1)].abs() < 1e-9, "off-diagonal scatter {}", c[(0, 1)]);
        assert!(c[(0, 0)] >= c[(1, 1)] - 1e-12);
        assert!(mean.data()[(0, 1)] >= -1e-9, "first landmark below axis");
    }

    // --- svar -------------------------------------------------------------

    #[test]
    fn svar_matches_hand_value() {
        // Residual norms 0, 3, 4 around the mean: svar = sqrt(25 / 3).
        let mean = ConfigurationMatrix::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let with_offset = |d: f64| {
            ConfigurationMatrix::from_points(&[[d, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap()
        };
        let sample = [with_offset(0.0), with_offset(3.0), with_offset(4.0)];
        let s = svar(&sample, &mean).unwrap();
        assert_relative_eq!(s, (25.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn svar_of_single_config_is_plain_residual_norm() {
        let mean = ConfigurationMatrix::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let shifted =
            ConfigurationMatrix::from_points(&[[2.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = svar(std::slice::from_ref(&shifted), &mean).unwrap();
        assert_relative_eq!(s, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn procrustes_distance_is_zero_for_similar_configs_and_symmetric() {
        let a = ConfigurationMatrix::from_points(&[
            [0.0, 0.0],
            [2.0, 0.3],
            [1.0, 2.0],
            [-1.0, 1.0],
        ])
        .unwrap();
        let mut moved = rotate(&a, 0.9);
        moved = ConfigurationMatrix::from_matrix_unchecked(moved.data() * 3.0);
        assert!(procrustes_distance(&a, &moved).unwrap() < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let b = random_config(&mut rng, 4);
        let ab = procrustes_distance(&a, &b).unwrap();
        let ba = procrustes_distance(&b, &a).unwrap();
        assert_relative_eq!(ab, ba, epsilon = 1e-10);
    }
}
