#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use mest_core::rng::{stream, Domain};

/// Stand-in for the NASA airfoil self-noise table: 1503 tab-separated rows of
/// frequency, angle of attack, chord length, velocity, suction-side
/// displacement thickness and sound pressure level, on the original ranges.
pub fn write_synthetic_airfoil(path: &Path, seed: u64) {
    let freqs = [200.0, 250.0, 315.0, 400.0, 500.0, 630.0, 800.0, 1000.0, 1250.0, 1600.0, 2000.0, 2500.0, 3150.0,
        4000.0, 5000.0, 6300.0, 8000.0, 10000.0, 12500.0, 16000.0, 20000.0];
    let chords = [0.0254, 0.0508, 0.1016, 0.1524, 0.2286, 0.3048];
    let speeds = [31.7, 39.6, 55.5, 71.3];
    let mut rng = stream(seed, Domain::Generate, 0);
    let noise = Normal::new(0.0, 3.5).unwrap();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    for _ in 0..1503 {
        let f = freqs[rng.random_range(0..freqs.len())];
        let angle: f64 = (rng.random::<f64>() * 22.2 * 10.0).round() / 10.0;
        let chord = chords[rng.random_range(0..chords.len())];
        let u = speeds[rng.random_range(0..speeds.len())];
        let thick = 0.0004 + 0.0576 * rng.random::<f64>().powi(3);
        let y = 132.0 - 4.0 * (f / 1000.0f64).ln() - 0.3 * angle - 25.0 * chord + 0.08 * u - 120.0 * thick
            - 0.5 * (f / 5000.0).powi(2)
            + noise.sample(&mut rng);
        writeln!(out, "{f}\t{angle}\t{chord}\t{u}\t{thick:.9}\t{y:.3}").unwrap();
    }
}
