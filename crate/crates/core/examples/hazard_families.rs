//! The four baseline hazard families: rates, cumulative hazards, inverses
//! and the structural checks each family must pass.
//!
//! Run with `cargo run --example hazard_families`.

use frailtykit::hazards::{HazardFamily, HazardSpec};

fn main() -> frailtykit::Result<()> {
    let specs = [
        HazardSpec::exponential(0.7)?,
        HazardSpec::weibull(1.5, 0.5)?,
        HazardSpec::gamma_hazard(2.0, 1.0)?,
        HazardSpec::log_logistic(0.5, 3.0)?,
    ];
    println!("{:<12} {:>8} {:>8} {:>12} {:>12} {:>12}", "family", "gamma", "alpha", "h(1)", "H(1)", "H^-1(H(1))");
    for h in &specs {
        let big_h = h.cumulative_hazard(1.0)?;
        println!(
            "{:<12} {:>8} {:>8} {:>12.6} {:>12.6} {:>12.9}",
            h.family().name(),
            h.gamma(),
            h.alpha(),
            h.hazard_rate(1.0)?,
            big_h,
            h.inverse_cumulative_hazard(big_h)?
        );
    }

    println!();
    for h in &specs {
        let report = h.validate_family();
        for c in &report.checks {
            println!("{:<12} {:<28} {:<5} {:.3e}", h.family().name(), c.name, c.passed, c.value);
        }
    }

    println!();
    let d = HazardSpec::new(HazardFamily::GammaHazard, 2.0, 1.0)?.decomposition();
    println!("gamma hazard h(t) = a t^(gamma-1) b(t): a = {}, b(1e-6) = {:.9}, b(5) = {:.6}", d.a_value(), d.b_at(1e-6), d.b_at(5.0));
    Ok(())
}
