//! Discrete frailty laws: unit-mean normalization, Laplace transforms,
//! tilted means, marginals and canonical forms.
//!
//! Run with `cargo run --example frailty_transforms`.

use frailtykit::frailty::{DiscreteFrailty, DiscreteLaw, FrailtyKind, FrailtyStructure};

fn main() -> frailtykit::Result<()> {
    let raw = DiscreteLaw::new(vec![vec![1.0, 2.0], vec![3.0, 2.0]], vec![0.5, 0.5])?;
    let law = raw.normalize_to_unit_mean()?;
    println!("normalized atoms {:?}, means {:?}", law.atoms(), law.means());

    let s = FrailtyStructure::new(FrailtyKind::Shared, 2, 2)?;
    let g = DiscreteFrailty::new(s, vec![vec![0.5], vec![1.5]], vec![0.5, 0.5])?;
    for x in [0.0, 0.5, 1.0, 2.0, 5.0] {
        println!("L({x}) = {:.6}   E[e e^(-{x} e)] = {:.6}", g.lst(&[x])?, g.tilted_mean(0, &[x])?);
    }

    let ccs = FrailtyStructure::new(FrailtyKind::CorrelatedCauseSpecific, 2, 2)?;
    let g = DiscreteFrailty::new(ccs, vec![vec![0.5, 1.4, 0.7, 1.2], vec![1.5, 0.6, 1.3, 0.8]], vec![0.5, 0.5])?;
    let pair = g.expand_to_pair(1)?;
    println!("atom 2 expands to individual 1 {:?}, individual 2 {:?}", pair.first, pair.second);
    println!("cause-1 marginal of individual 2: {:?}", g.marginal(&[ccs.coord(1, 0)])?.atoms());

    let permuted = DiscreteLaw::new(vec![vec![1.5], vec![0.5], vec![0.5]], vec![0.5, 0.25, 0.25])?;
    let reference = DiscreteLaw::new(vec![vec![0.5], vec![1.5]], vec![0.5, 0.5])?;
    println!("canonical form {:?} / {:?}, equal to reference: {}",
        permuted.canonical().atoms(), permuted.canonical().weights(), permuted.approx_eq(&reference, 1e-12));
    Ok(())
}
