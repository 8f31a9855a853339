//! Without the unit-mean constraint, scaling the frailty by c and the hazard
//! scales by 1/c leaves every sub-distribution unchanged.
//!
//! Run with `cargo run --example scale_confounding`.

use std::path::Path;

use frailtykit::identifiability::{scale_confound, sub_distribution_distance, ProbeGrid};
use frailtykit::io;
use frailtykit::model::QuadratureConfig;

fn main() -> frailtykit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/models/shared_weibull.json");
    let m = io::load_model(&path)?;
    let grid = ProbeGrid::default_for(&m)?;
    let q = QuadratureConfig::default();
    for c in [0.5, 2.0, 5.0] {
        let other = scale_confound(&m, c)?;
        println!(
            "c = {c}: frailty mean {:.2}, first alpha {:.3}, sup distance {:.2e}",
            other.frailty().law().means()[0],
            other.hazard(0, 0)?.alpha(),
            sub_distribution_distance(&m, &other, &grid, &q)?
        );
    }
    Ok(())
}
