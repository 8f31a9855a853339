//! Simulates paired observations and compares empirical sub-distributions
//! with the model.
//!
//! Run with `cargo run --example simulate_pairs`.

use std::path::Path;

use frailtykit::io;
use frailtykit::model::QuadratureConfig;
use frailtykit::simulate::{simulate_dataset, simulate_to_writer, SimConfig};

fn main() -> frailtykit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/models/cause_specific.json");
    let m = io::load_model(&path)?;
    let n = 100_000;
    let data = simulate_dataset(&m, &SimConfig::new(n, 7))?;
    let q = QuadratureConfig::default();
    let band = ((2.0f64 / 1e-3).ln() / (2.0 * n as f64)).sqrt();

    println!("{n} pairs, DKW band {band:.5}");
    for k in 0..2 {
        for j in 0..m.causes(k) {
            let mut worst: f64 = 0.0;
            for t in [0.1, 0.3, 0.6, 1.0, 2.0, 4.0] {
                let emp = data.iter().filter(|o| o.time(k) <= t && o.cause(k) == j + 1).count() as f64 / n as f64;
                worst = worst.max((emp - m.marginal_sub_distribution(k, j, t, &q)?).abs());
            }
            println!("individual {} cause {}: max |empirical - model| = {worst:.5}", k + 1, j + 1);
        }
    }

    let censored = simulate_dataset(&m, &SimConfig::new(10_000, 8).with_censoring(0.5))?;
    let frac = censored.iter().filter(|o| !o.d1).count() as f64 / censored.len() as f64;
    println!("with censoring rate 0.5: {:.1}% of first individuals censored", 100.0 * frac);

    let mut csv = Vec::new();
    simulate_to_writer(&m, &SimConfig::new(3, 7).with_atoms(), &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
