//! Synthetic-sample generation and a robustness study harness.
//!
//! A [`Scenario`] describes perturbed copies of a base shape plus planted
//! gross outliers; [`generate`] draws one such sample deterministically and
//! [`evaluate`] repeats the draw, estimates the mean shape with and
//! without depth trimming, and summarizes estimation error, variability,
//! retention, and how reliably the planted outliers were discarded.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, StudentT, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{trimmed_mean_shape, TrimParams};
use crate::procrustes::{procrustes_distance, GpaOptions};
use crate::shape::ConfigurationMatrix;

/// Distribution of the per-coordinate perturbations, all parameterized to
/// unit scale so [`Scenario::noise_scale`] is comparable across families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum NoiseFamily {
    /// Standard normal draws.
    Normal,
    /// Student t draws with `df` degrees of freedom (raw, not rescaled;
    /// heavy tails are the point).
    Student { df: f64 },
    /// Uniform draws on `[-sqrt(3), sqrt(3))`, which has unit variance.
    Uniform,
}

/// A fully specified generating process for synthetic samples.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub family: NoiseFamily,
    /// The true shape; estimation error is measured against it.
    pub base_shape: ConfigurationMatrix,
    /// Standard-scale multiplier of the per-coordinate noise.
    pub noise_scale: f64,
    /// Configurations per sample.
    pub sample_size: usize,
    /// Fraction of configurations contaminated; the planted count is
    /// `floor(fraction * sample_size)`.
    pub outlier_fraction: f64,
    /// Outlier displacement in units of the base-shape diameter.
    pub outlier_magnitude: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        family: NoiseFamily,
        base_shape: ConfigurationMatrix,
        noise_scale: f64,
        sample_size: usize,
        outlier_fraction: f64,
        outlier_magnitude: f64,
        seed: u64,
    ) -> Result<Self> {
        if let NoiseFamily::Student { df } = family {
            if !df.is_finite() || df <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "student degrees of freedom must be positive, got {df}"
                )));
            }
        }
        if base_shape.dim() != 2 {
            return Err(Error::DimensionMismatch(
                "synthetic scenarios are planar (2 coordinates)".into(),
            ));
        }
        if !noise_scale.is_finite() || noise_scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise scale must be positive, got {noise_scale}"
            )));
        }
        if sample_size < 2 {
            return Err(Error::InvalidParameter(format!(
                "sample size must be at least 2, got {sample_size}"
            )));
        }
        if !(0.0..1.0).contains(&outlier_fraction) {
            return Err(Error::InvalidParameter(format!(
                "outlier fraction must lie in [0, 1), got {outlier_fraction}"
            )));
        }
        if !outlier_magnitude.is_finite() || outlier_magnitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "outlier magnitude must be nonnegative, got {outlier_magnitude}"
            )));
        }
        Ok(Self {
            family,
            base_shape,
            noise_scale,
            sample_size,
            outlier_fraction,
            outlier_magnitude,
            seed,
        })
    }

    /// The default base shape: a regular octagon of unit radius.
    pub fn default_base_shape() -> ConfigurationMatrix {
        let pts: Vec<[f64; 2]> = (0..8)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 8.0;
                [a.cos(), a.sin()]
            })
            .collect();
        ConfigurationMatrix::from_points(&pts).expect("octagon is valid")
    }

    /// Settings outside the envelope the defaults were tuned on. The
    /// scenario still runs; these are caveats for the report.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.outlier_fraction > 0.1 {
            out.push(format!(
                "outlier fraction {} exceeds 0.1; default trimming may break down",
                self.outlier_fraction
            ));
        }
        if !(50..=150).contains(&self.sample_size) {
            out.push(format!(
                "sample size {} lies outside the calibrated 50..=150 range",
                self.sample_size
            ));
        }
        if let NoiseFamily::Student { df } = self.family {
            if df <= 2.0 {
                out.push(format!(
                    "student noise with df = {df} has no finite variance"
                ));
            }
        }
        out
    }

    /// Number of planted outliers per sample.
    pub fn outlier_count(&self) -> usize {
        (self.outlier_fraction * self.sample_size as f64).floor() as usize
    }
}

/// One synthetic sample with the ground truth of its contamination.
#[derive(Debug, Clone)]
pub struct GeneratedSample {
    pub configs: Vec<ConfigurationMatrix>,
    /// Ascending indices of the contaminated configurations.
    pub outliers: Vec<usize>,
}

/// Draws one sample on the scenario's default stream. Identical scenarios
/// produce identical samples.
pub fn generate(scenario: &Scenario) -> Result<GeneratedSample> {
    generate_replication(scenario, 0)
}

/// Draws the sample for one replication of a repeated study. Replications
/// use independent streams of the same generator, so any subset can be
/// reproduced without drawing the others.
///
/// Draw order (fixed for reproducibility): per configuration, one noise
/// value per coordinate in landmark-major order; then the outlier index
/// set; then per outlier (ascending) the displaced landmark and the
/// displacement angle.
pub fn generate_replication(scenario: &Scenario, replication: u64) -> Result<GeneratedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(replication);

    let k = scenario.base_shape.landmarks();
    let base = scenario.base_shape.data();
    let n = scenario.sample_size;

    enum Draw {
        Normal,
        Student(StudentT<f64>),
        Uniform(Uniform<f64>),
    }
    let draw = match scenario.family {
        NoiseFamily::Normal => Draw::Normal,
        NoiseFamily::Student { df } => Draw::Student(
            StudentT::new(df).map_err(|e| Error::InvalidParameter(format!("student noise: {e}")))?,
        ),
        NoiseFamily::Uniform => Draw::Uniform(
            Uniform::new(-3.0f64.sqrt(), 3.0f64.sqrt())
                .map_err(|e| Error::InvalidParameter(format!("uniform noise: {e}")))?,
        ),
    };

    let mut configs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut data = base.clone();
        for i in 0..k {
            for j in 0..2 {
                let noise: f64 = match &draw {
                    Draw::Normal => rng.sample(StandardNormal),
                    Draw::Student(d) => rng.sample(*d),
                    Draw::Uniform(d) => rng.sample(*d),
                };
                data[(i, j)] += scenario.noise_scale * noise;
            }
        }
        configs.push(ConfigurationMatrix::new(data)?);
    }

    let n_out = scenario.outlier_count();
    let mut outliers: Vec<usize> = index_sample(&mut rng, n, n_out).into_vec();
    outliers.sort_unstable();
    let diameter = scenario.base_shape.diameter();
    for &idx in &outliers {
        let landmark = rng.random_range(0..k);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let mut data = configs[idx].data().clone();
        data[(landmark, 0)] += scenario.outlier_magnitude * diameter * angle.cos();
        data[(landmark, 1)] += scenario.outlier_magnitude * diameter * angle.sin();
        configs[idx] = ConfigurationMatrix::new(data)?;
    }

    Ok(GeneratedSample { configs, outliers })
}

/// Aggregate performance of one trimming level over all replications.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    /// Mean full Procrustes distance between the estimated and true shape.
    pub mean_err: f64,
    /// Sample standard deviation of that distance.
    pub sd_err: f64,
    /// Mean shape variability of the retained configurations.
    pub mean_svar: f64,
    /// Mean fraction of the sample retained by the trim.
    pub mean_retained: f64,
    /// Mean fraction of planted outliers that the trim discarded
    /// (1.0 when a replication plants none).
    pub outlier_removal_rate: f64,
}

/// Trimming levels compared by [`evaluate`]: the plain estimator and the
/// default trim.
pub const EVALUATED_ALPHAS: [f64; 2] = [0.0, 0.1];

/// Runs `replications` independent draws of the scenario and estimates the
/// mean shape at each level of [`EVALUATED_ALPHAS`], summarizing accuracy
/// against the scenario's true shape. Replication `r` uses generator
/// stream `r`, so partial reruns match the full study.
pub fn evaluate(scenario: &Scenario, replications: usize) -> Result<Vec<AlphaSummary>> {
    if replications == 0 {
        return Err(Error::InvalidParameter(
            "need at least one replication".into(),
        ));
    }
    let mut errs = vec![Vec::with_capacity(replications); EVALUATED_ALPHAS.len()];
    let mut svars = vec![Vec::with_capacity(replications); EVALUATED_ALPHAS.len()];
    let mut retained = vec![Vec::with_capacity(replications); EVALUATED_ALPHAS.len()];
    let mut removal = vec![Vec::with_capacity(replications); EVALUATED_ALPHAS.len()];

    let trim = TrimParams {
        seed: scenario.seed,
        ..TrimParams::default()
    };
    for rep in 0..replications {
        let sample = generate_replication(scenario, rep as u64)?;
        for (slot, &alpha) in EVALUATED_ALPHAS.iter().enumerate() {
            let estimate = trimmed_mean_shape(&sample.configs, alpha, trim, GpaOptions::default())?;
            errs[slot].push(procrustes_distance(
                &estimate.shape.mean,
                &scenario.base_shape,
            )?);
            svars[slot].push(estimate.shape.svar);
            retained[slot].push(estimate.retained_fraction);
            removal[slot].push(if sample.outliers.is_empty() {
                1.0
            } else {
                let discarded = sample
                    .outliers
                    .iter()
                    .filter(|i| !estimate.retained.contains(i))
                    .count();
                discarded as f64 / sample.outliers.len() as f64
            });
        }
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64]| {
        if v.len() < 2 {
            return 0.0;
        }
        let m = mean(v);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    Ok(EVALUATED_ALPHAS
        .iter()
        .enumerate()
        .map(|(slot, &alpha)| AlphaSummary {
            alpha,
            mean_err: mean(&errs[slot]),
            sd_err: sd(&errs[slot]),
            mean_svar: mean(&svars[slot]),
            mean_retained: mean(&retained[slot]),
            outlier_removal_rate: mean(&removal[slot]),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(family: NoiseFamily, fraction: f64, magnitude: f64) -> Scenario {
        Scenario::new(
            family,
            Scenario::default_base_shape(),
            0.05,
            50,
            fraction,
            magnitude,
            7,
        )
        .unwrap()
    }

    #[test]
    fn generation_is_deterministic_per_stream() {
        let sc = scenario(NoiseFamily::Normal, 0.1, 50.0);
        let a = generate(&sc).unwrap();
        let b = generate_replication(&sc, 0).unwrap();
        assert_eq!(a.outliers, b.outliers);
        for (x, y) in a.configs.iter().zip(&b.configs) {
            assert_eq!(x.data(), y.data());
        }
        let c = generate_replication(&sc, 1).unwrap();
        assert_ne!(a.configs[0].data(), c.configs[0].data());
    }

    #[test]
    fn outlier_count_is_the_floor_of_the_fraction() {
        let sc = scenario(NoiseFamily::Normal, 0.1, 50.0);
        assert_eq!(sc.outlier_count(), 5);
        let sample = generate(&sc).unwrap();
        assert_eq!(sample.outliers.len(), 5);
        assert!(sample.outliers.windows(2).all(|w| w[0] < w[1]));
        assert!(*sample.outliers.last().unwrap() < 50);

        let none = scenario(NoiseFamily::Normal, 0.0, 50.0);
        assert!(generate(&none).unwrap().outliers.is_empty());

        // floor(0.05 * 50) = 2
        let small = scenario(NoiseFamily::Normal, 0.05, 50.0);
        assert_eq!(generate(&small).unwrap().outliers.len(), 2);
    }

    #[test]
    fn planted_outliers_are_far_from_the_base_shape() {
        let sc = scenario(NoiseFamily::Normal, 0.1, 50.0);
        let sample = generate(&sc).unwrap();
        let base = sc.base_shape.data();
        let diameter = sc.base_shape.diameter();
        for (i, config) in sample.configs.iter().enumerate() {
            let max_dev = (config.data() - base)
                .row_iter()
                .map(|r| r.norm())
                .fold(0.0f64, f64::max);
            if sample.outliers.contains(&i) {
                assert!(max_dev > 0.5 * sc.outlier_magnitude * diameter, "outlier {i} too close");
            } else {
                assert!(max_dev < 1.0, "clean config {i} drifted {max_dev}");
            }
        }
    }

    #[test]
    fn uniform_noise_respects_its_bounds() {
        let sc = scenario(NoiseFamily::Uniform, 0.0, 0.0);
        let sample = generate(&sc).unwrap();
        let bound = sc.noise_scale * 3.0f64.sqrt() + 1e-12;
        for config in &sample.configs {
            let dev = (config.data() - sc.base_shape.data())
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(dev <= bound, "uniform deviation {dev} exceeds {bound}");
        }
    }

    #[test]
    fn all_noise_families_produce_finite_samples() {
        for family in [
            NoiseFamily::Normal,
            NoiseFamily::Student { df: 3.0 },
            NoiseFamily::Uniform,
        ] {
            let sc = scenario(family, 0.05, 10.0);
            let sample = generate(&sc).unwrap();
            assert_eq!(sample.configs.len(), 50);
        }
    }

    #[test]
    fn trimming_beats_the_plain_estimator_under_contamination() {
        let sc = scenario(NoiseFamily::Normal, 0.1, 50.0);
        let summaries = evaluate(&sc, 3).unwrap();
        assert_eq!(summaries.len(), 2);
        assert_eq!(summaries[0].alpha, 0.0);
        assert_eq!(summaries[1].alpha, 0.1);
        assert!(
            summaries[1].mean_err < summaries[0].mean_err,
            "trimmed {} vs plain {}",
            summaries[1].mean_err,
            summaries[0].mean_err
        );
        assert!(summaries[1].outlier_removal_rate >= 0.95);
        assert_eq!(summaries[0].outlier_removal_rate, 0.0);
        assert_eq!(summaries[0].mean_retained, 1.0);
        assert!(summaries[1].mean_retained < 1.0);
    }

    #[test]
    fn scenario_validation_rejects_bad_parameters() {
        let base = Scenario::default_base_shape;
        assert!(Scenario::new(NoiseFamily::Student { df: 0.0 }, base(), 0.05, 50, 0.0, 0.0, 0).is_err());
        assert!(Scenario::new(NoiseFamily::Normal, base(), 0.0, 50, 0.0, 0.0, 0).is_err());
        assert!(Scenario::new(NoiseFamily::Normal, base(), 0.05, 1, 0.0, 0.0, 0).is_err());
        assert!(Scenario::new(NoiseFamily::Normal, base(), 0.05, 50, 1.0, 0.0, 0).is_err());
        assert!(Scenario::new(NoiseFamily::Normal, base(), 0.05, 50, 0.0, -1.0, 0).is_err());
    }

    #[test]
    fn extrapolation_warnings_fire_outside_the_envelope() {
        let sc = Scenario::new(
            NoiseFamily::Student { df: 1.5 },
            Scenario::default_base_shape(),
            0.05,
            20,
            0.2,
            50.0,
            0,
        )
        .unwrap();
        let warnings = sc.warnings();
        assert_eq!(warnings.len(), 3);
        assert!(scenario(NoiseFamily::Normal, 0.1, 50.0).warnings().is_empty());
    }
}
