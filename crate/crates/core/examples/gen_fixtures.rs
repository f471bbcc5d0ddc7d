//! Regenerates the replay fixtures in `tests/data`.
//!
//! The rows are synthetic: they are constructed so that their aggregates
//! equal fixed per-target and per-cell reference figures.
//!
//!     cargo run -p gazekit --example gen_fixtures -- crates/core/tests/data

use std::f64::consts::TAU;
use std::path::PathBuf;

use gazekit::gaze::{ScreenSpec, DEFAULT_MM_PER_PX};
use gazekit::harness::{write_fixture, FixtureRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGET_MEANS: [(f64, f64, f64); 9] = [
    (320.0, 180.0, 189.6),
    (320.0, 360.0, 81.755),
    (320.0, 540.0, 76.7),
    (640.0, 180.0, 50.695),
    (640.0, 360.0, 139.25),
    (640.0, 540.0, 122.08),
    (960.0, 180.0, 55.6),
    (960.0, 360.0, 35.46),
    (960.0, 540.0, 31.98),
];

const ROWS_PER_TARGET: usize = 40;
const ROWS_FIRST_TARGET: usize = 51;

/// (mean mm, std mm) by [row][col].
const CELL_STATS: [[(f64, f64); 3]; 3] = [
    [(12.3, 2.0), (19.7, 3.7), (4.6, 2.5)],
    [(12.9, 4.8), (22.4, 3.5), (5.7, 1.6)],
    [(30.6, 8.1), (8.2, 3.6), (8.9, 1.6)],
];

fn place(rng: &mut ChaCha8Rng, screen: &ScreenSpec, ax: f64, ay: f64, err: f64) -> FixtureRow {
    for _ in 0..1000 {
        let t = rng.random_range(0.0..TAU);
        let (ex, ey) = (ax + err * t.cos(), ay + err * t.sin());
        if (0.0..=screen.width_px).contains(&ex) && (0.0..=screen.height_px).contains(&ey) {
            return FixtureRow { actual_x: ax, actual_y: ay, est_x: ex, est_y: ey };
        }
    }
    panic!("no on-screen estimate at distance {err} from ({ax},{ay})");
}

/// Errors with mean exactly `m`: symmetric pairs m ± s, plus m itself when n is odd.
fn errors_with_mean(rng: &mut ChaCha8Rng, m: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n / 2 {
        let s = rng.random_range(0.0..0.3 * m);
        out.extend([m + s, m - s]);
    }
    if n % 2 == 1 {
        out.push(m);
    }
    out
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/tests/data".into()));
    let screen = ScreenSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2017);

    let mut rows = Vec::new();
    for (i, &(ax, ay, m)) in TARGET_MEANS.iter().enumerate() {
        let n = if i == 0 { ROWS_FIRST_TARGET } else { ROWS_PER_TARGET };
        for e in errors_with_mean(&mut rng, m, n) {
            rows.push(place(&mut rng, &screen, ax, ay, e));
        }
    }
    let path = dir.join("pixel_targets.csv");
    write_fixture(std::fs::File::create(&path).expect("create pixel fixture"), &rows).expect("write");
    println!("{} rows -> {}", rows.len(), path.display());

    let xs = [200.0, 640.0, 1080.0];
    let ys = [120.0, 360.0, 600.0];
    let mut rows = Vec::new();
    for (r, row) in CELL_STATS.iter().enumerate() {
        for (c, &(mu, sigma)) in row.iter().enumerate() {
            for mm in [mu - sigma, mu + sigma, mu + sigma, mu - sigma] {
                rows.push(place(&mut rng, &screen, xs[c], ys[r], mm / DEFAULT_MM_PER_PX));
            }
        }
    }
    let path = dir.join("grid_mm.csv");
    write_fixture(std::fs::File::create(&path).expect("create grid fixture"), &rows).expect("write");
    println!("{} rows -> {}", rows.len(), path.display());
}
