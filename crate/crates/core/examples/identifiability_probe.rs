//! Probes whether two models can be told apart from their joint
//! sub-distributions, with the supporting limit and Laplace-transform
//! checks.
//!
//! Run with `cargo run --example identifiability_probe`.

use frailtykit::frailty::{DiscreteFrailty, FrailtyKind, FrailtyStructure};
use frailtykit::hazards::HazardSpec;
use frailtykit::identifiability::{limit_identity_check, lst_sequence_test, probe};
use frailtykit::model::{ModelSpec, PairHazards, QuadratureConfig};

fn main() -> frailtykit::Result<()> {
    let s = FrailtyStructure::new(FrailtyKind::Shared, 2, 2)?;
    let hz = PairHazards::symmetric(vec![HazardSpec::weibull(1.5, 0.5)?, HazardSpec::weibull(0.8, 1.0)?])?;
    let independent = ModelSpec::new(s, hz.clone(), DiscreteFrailty::degenerate(s))?;
    let mixed = ModelSpec::new(s, hz.clone(), DiscreteFrailty::new(s, vec![vec![0.5], vec![1.5]], vec![0.5, 0.5])?)?;
    let q = QuadratureConfig::default();

    let report = probe(&independent, &mixed, None, &q)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    let gap = lst_sequence_test(independent.frailty(), mixed.frailty(), 1, &hz)?;
    println!("Laplace transforms at s = 1 differ by {gap:.6}");

    let limits = limit_identity_check(&mixed)?;
    for e in &limits.entries {
        let r: Vec<String> = e.residuals.iter().map(|x| format!("{x:.2e}")).collect();
        println!("individual {} cause {}: residuals {} monotone {}", e.individual, e.cause, r.join(" "), e.monotone);
    }
    Ok(())
}
