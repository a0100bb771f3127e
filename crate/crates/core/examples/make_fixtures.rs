//! Regenerates the CSV fixtures under `fixtures/`.
//!
//! The fixtures are committed, so this only needs to run when the fixture
//! design changes: `cargo run -p shapestress --example make_fixtures`.
//! Generation is fully deterministic and ends with sanity checks that the
//! committed properties (planted representatives, kept-date count, a clean
//! end-to-end run) actually hold.

use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use shapestress::ingest;
use shapestress::pipeline::{select_median_companies, stress_report, StressOptions};

const DEMO_SECTORS: [(&str, &str); 8] = [
    ("banking", "BNK"),
    ("chemicals", "CHM"),
    ("construction", "CNS"),
    ("energy", "ENR"),
    ("food", "FOD"),
    ("it", "ITC"),
    ("media", "MDA"),
    ("telecom", "TLC"),
];
const DEMO_COMPANIES: usize = 5;
const DEMO_DATES: usize = 160;
/// Company index whose price and volume follow the sector trend without
/// idiosyncratic swings, making it the natural band-depth representative.
const CENTRAL: usize = 2;

fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.checked_add_days(Days::new(1)).unwrap();
    }
    out
}

struct Company {
    ticker: String,
    /// `prices[t]` formatted with two decimals, `volumes[t]` integral.
    prices: Vec<f64>,
    volumes: Vec<u64>,
}

/// One sector: a shared log-trend plus per-company oscillation and noise.
///
/// The central company carries no price oscillation, so its relative
/// price-to-volume curve tracks the trend. The flankers all swing with the
/// same period and amplitude at evenly spaced phases; their oscillations
/// sum to zero, so at every date some flanker sits above the trend and
/// some below, which keeps the central curve inside a band throughout and
/// makes it the band-depth representative by construction, not by luck.
fn make_sector(rng: &mut ChaCha8Rng, prefix: &str, companies: usize, dates: usize) -> Vec<Company> {
    let drift: f64 = 0.002 * rng.sample::<f64, _>(StandardNormal);
    let mut log_trend = vec![0.0f64];
    for _ in 1..dates {
        let step: f64 = rng.sample(StandardNormal);
        log_trend.push(log_trend.last().unwrap() + drift + 0.01 * step);
    }
    let period = rng.random_range(18.0..40.0);
    let sector_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let flankers = (companies - 1) as f64;
    (0..companies)
        .map(|c| {
            let base_price = rng.random_range(5.0..200.0);
            let base_volume = rng.random_range(2e4..2e6);
            let central = c == CENTRAL;
            let flanker_rank = if c < CENTRAL { c } else { c - 1 } as f64;
            let price_amp = if central { 0.0 } else { 0.15 };
            let volume_amp = if central { 0.02 } else { 0.03 };
            let phase = sector_phase + std::f64::consts::TAU * flanker_rank / flankers;
            let volume_period = rng.random_range(20.0..60.0);
            let volume_phase = rng.random_range(0.0..std::f64::consts::TAU);
            let mut prices = Vec::with_capacity(dates);
            let mut volumes = Vec::with_capacity(dates);
            for t in 0..dates {
                let osc = price_amp * (std::f64::consts::TAU * t as f64 / period + phase).sin();
                let eps: f64 = rng.sample(StandardNormal);
                let price = base_price * (log_trend[t] + osc + 0.004 * eps).exp();
                prices.push((price * 100.0).round() / 100.0);
                let vosc = volume_amp
                    * (std::f64::consts::TAU * t as f64 / volume_period + volume_phase).cos();
                let eta: f64 = rng.sample(StandardNormal);
                let volume = base_volume * (vosc + 0.05 * eta).exp();
                volumes.push((volume.round() as u64).max(1));
            }
            Company {
                ticker: format!("{prefix}{c}"),
                prices,
                volumes,
            }
        })
        .collect()
}

/// Date-major CSV body, optionally skipping or transforming rows.
fn sector_csv(
    dates: &[NaiveDate],
    companies: &[Company],
    mut edit: impl FnMut(&NaiveDate, &Company, String) -> Option<String>,
) -> String {
    let mut out = String::from("date,ticker,price,volume\n");
    for (t, date) in dates.iter().enumerate() {
        for company in companies {
            let row = format!(
                "{},{},{:.2},{}",
                date.format("%Y-%m-%d"),
                company.ticker,
                company.prices[t],
                company.volumes[t]
            );
            if let Some(row) = edit(date, company, row) {
                out.push_str(&row);
                out.push('\n');
            }
        }
    }
    out
}

fn write(path: &Path, body: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, body).unwrap();
    println!("wrote {}", path.display());
}

fn make_demo(root: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(20060102);
    let dates = business_days(NaiveDate::from_ymd_opt(2006, 1, 2).unwrap(), DEMO_DATES);
    for (name, prefix) in DEMO_SECTORS {
        let companies = make_sector(&mut rng, prefix, DEMO_COMPANIES, DEMO_DATES);
        let body = sector_csv(&dates, &companies, |date, company, row| {
            let t = dates.iter().position(|d| d == date).unwrap();
            match (name, company.ticker.as_str(), t) {
                // Two malformed rows: an unparsable price and a short row.
                ("banking", "BNK3", 40) => {
                    Some(row.rsplitn(3, ',').collect::<Vec<_>>()[2].to_string() + ",n/a,1000")
                }
                ("banking", "BNK1", 90) => {
                    let mut fields: Vec<&str> = row.split(',').collect();
                    fields.truncate(3);
                    Some(fields.join(","))
                }
                // A short outage for one media company.
                ("media", "MDA3", 70..=72) => None,
                // Two zero-volume days for one telecom company.
                ("telecom", "TLC1", 100 | 101) => {
                    let mut fields: Vec<String> =
                        row.split(',').map(str::to_string).collect();
                    fields[3] = "0".into();
                    Some(fields.join(","))
                }
                _ => Some(row),
            }
        });
        write(&root.join("demo").join(format!("{name}.csv")), &body);
    }

    let manifest = "\
# Demo run over the bundled eight-sector panel.
# Pass --output <dir> (or add output_dir = ...) to choose where artifacts go.
sector = banking.csv
sector = chemicals.csv
sector = construction.csv
sector = energy.csv
sector = food.csv
sector = it.csv
sector = media.csv
sector = telecom.csv
window_count = 7
alpha = 0.1
seed = 0
grid_rows = 20
grid_cols = 20
";
    write(&root.join("demo").join("run.manifest"), manifest);
}

fn make_two_sector(root: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(411);
    let dates = business_days(NaiveDate::from_ymd_opt(2006, 1, 2).unwrap(), 40);
    for (name, prefix) in [("financials", "FIN"), ("technology", "TEC")] {
        let companies = make_sector(&mut rng, prefix, 4, 40);
        let body = sector_csv(&dates, &companies, |_, _, row| Some(row));
        write(&root.join("two_sector").join(format!("{name}.csv")), &body);
    }
}

fn make_study_manifest(root: &Path) {
    let manifest = "\
# Robustness study: octagon base shape, 10% gross outliers at 50 diameters.
family = normal
noise_scale = 0.05
sample_size = 100
outlier_fraction = 0.1
outlier_magnitude = 50
seed = 0
replications = 50
";
    write(&root.join("study.manifest"), manifest);
}

fn verify(root: &Path) {
    // The two-sector plant must hold: company CENTRAL is the band-depth
    // representative of both sectors.
    let (_, rect) = ingest::load_panels(&[
        root.join("two_sector/financials.csv"),
        root.join("two_sector/technology.csv"),
    ])
    .unwrap();
    let medians = select_median_companies(&rect.panels).unwrap();
    assert_eq!(medians[0].ticker, format!("FIN{CENTRAL}"), "financials plant failed");
    assert_eq!(medians[1].ticker, format!("TEC{CENTRAL}"), "technology plant failed");

    // The demo panel must rectangularize to the documented 153 dates
    // (160 minus 5 missing and 2 zero-volume) and run end to end.
    let paths: Vec<PathBuf> = DEMO_SECTORS
        .iter()
        .map(|(name, _)| root.join("demo").join(format!("{name}.csv")))
        .collect();
    let (raw, rect) = ingest::load_panels(&paths).unwrap();
    assert_eq!(raw[0].rejects.len(), 2, "banking should have two rejects");
    assert_eq!(rect.panels[0].len(), 153, "demo kept-date count changed");
    assert_eq!(rect.dropped.len(), 7);
    let report = stress_report(&rect.panels, &StressOptions::default()).unwrap();
    assert_eq!(report.windows.len(), 7);
    for (name, _) in DEMO_SECTORS {
        assert!(report.median_tickers.contains_key(name));
    }
    println!("verification passed");
    for (sector, ticker) in &report.median_tickers {
        println!("  demo representative of {sector}: {ticker}");
    }
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    make_demo(&root);
    make_two_sector(&root);
    make_study_manifest(&root);
    verify(&root);
}
