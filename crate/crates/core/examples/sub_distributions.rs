//! Marginal and joint sub-distribution functions, sub-densities and joint
//! survival of a correlated-frailty model with mixed hazard families.
//!
//! Run with `cargo run --example sub_distributions`.

use std::path::Path;

use frailtykit::io;
use frailtykit::model::QuadratureConfig;

fn main() -> frailtykit::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/models/correlated_mixed.json");
    let m = io::load_model(&path)?;
    let q = QuadratureConfig::default();

    for k in 0..2 {
        let tb = m.t_big(k)?;
        let total: f64 = (0..m.causes(k)).map(|j| m.marginal_sub_distribution(k, j, tb, &q)).sum::<frailtykit::Result<f64>>()?;
        println!("individual {}: t_big = {tb:.3}, sum of F_j(t_big) = {total:.9}", k + 1);
        for j in 0..m.causes(k) {
            let f = m.marginal_sub_distribution_grid(k, j, &[0.25, 1.0, 4.0], &q)?;
            println!("  cause {}: F at 0.25, 1, 4 = {:.6?}", j + 1, f);
        }
    }

    let (t1, t2) = (0.8, 1.5);
    println!("joint survival S({t1}, {t2}) = {:.6} (via Laplace transform {:.6})",
        m.joint_survival(t1, t2)?, m.joint_survival_via_lst(t1, t2)?);
    for j1 in 0..2 {
        for j2 in 0..2 {
            println!("F_{}{}({t1}, {t2}) = {:.6}   f_{}{} = {:.6}", j1 + 1, j2 + 1,
                m.joint_sub_distribution(j1, j2, t1, t2, &q)?, j1 + 1, j2 + 1, m.joint_sub_density(j1, j2, t1, t2)?);
        }
    }

    let (b1, b2) = (m.t_big(0)?, m.t_big(1)?);
    let grid = m.joint_sub_distribution_grid(&[b1], &[b2], &q)?;
    println!("sum of F_j1j2(t_big, t_big) = {:.9}", grid.values().iter().sum::<f64>());
    Ok(())
}
