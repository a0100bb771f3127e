//! Shared helpers for the acceptance suite.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use shapestress::shape::ConfigurationMatrix;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A well-spread random planar configuration: a perturbed circle, so it is
/// never degenerate or collinear.
pub fn random_config(rng: &mut ChaCha8Rng, k: usize, wobble: f64) -> ConfigurationMatrix {
    let pts: Vec<[f64; 2]> = (0..k)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / k as f64;
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            [a.cos() + wobble * dx, a.sin() + wobble * dy]
        })
        .collect();
    ConfigurationMatrix::from_points(&pts).expect("perturbed circle is valid")
}

/// Uniform draw range helper so tests read naturally.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Asserts the per-criterion time budget and prints the PASS line.
///
/// The line is written straight to the stdout handle rather than through
/// `println!`, so it survives the test harness's per-test output capture
/// and shows up in a plain `cargo test` run.
pub fn pass(number: usize, name: &str, start: Instant, budget_secs: u64) {
    use std::io::Write;

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < budget_secs,
        "criterion {number} exceeded its {budget_secs}s budget: {elapsed:?}"
    );
    let line = format!("ACCEPTANCE {number} {name}: PASS ({elapsed:.2?})\n");
    let mut out = std::io::stdout();
    out.write_all(line.as_bytes()).expect("stdout is writable");
    out.flush().expect("stdout flushes");
}
