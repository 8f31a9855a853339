#![allow(dead_code)]

use frailtykit::frailty::FrailtyKind;
use frailtykit::hazards::HazardSpec;
use frailtykit::model::{ModelSpec, QuadratureConfig};
use frailtykit::random::{random_model, RandomModelConfig};
use frailtykit::simulate::BivariateObservation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn model(seed: u64, kind: FrailtyKind) -> ModelSpec {
    random_model(&mut rng(seed), kind, &RandomModelConfig::default()).unwrap()
}

pub fn q() -> QuadratureConfig {
    QuadratureConfig::default()
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Nodes `u` and weights for `∫_0^t g(u) du` under `u = t v^p`, with
/// geometric panels in `v` down to 2^-40.
pub fn axis_rule(t: f64, p: f64) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(20);
    let mut edges = vec![0.0];
    edges.extend((0..=40).rev().map(|i| 0.5f64.powi(i)));
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        for &(x, wt) in &gl {
            let v = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let u = t * v.powf(p);
            let jac = t * p * v.powf(p - 1.0);
            out.push((u, 0.5 * (b - a) * wt * jac));
        }
    }
    out
}

fn individual_factor(hz: &[HazardSpec], j: usize, eps: &[f64], u: f64) -> f64 {
    let exponent: f64 = hz.iter().zip(eps).map(|(h, e)| e * h.cumulative_hazard(u).unwrap()).sum();
    eps[j] * hz[j].hazard_rate(u).unwrap() * (-exponent).exp()
}

/// Brute-force `F_{j1 j2}(t1, t2)`: tensor-product quadrature of the
/// frailty-mixed joint density over `[0, t1] × [0, t2]`, built from the
/// public hazard functions only.
pub fn oracle_joint(m: &ModelSpec, j1: usize, j2: usize, t1: f64, t2: f64) -> f64 {
    let power = |k: usize| {
        let g = m.hazards().individual(k).iter().map(|h| h.gamma()).fold(1.0, f64::min);
        1.0 / g
    };
    let r1 = axis_rule(t1, power(0));
    let r2 = axis_rule(t2, power(1));
    let mut total = 0.0;
    for (w, p) in m.frailty().weights().iter().enumerate() {
        let pair = m.pair_frailty(w).unwrap();
        let f1: Vec<f64> = r1.iter().map(|(u, _)| individual_factor(m.hazards().individual(0), j1, &pair.first, *u)).collect();
        let f2: Vec<f64> = r2.iter().map(|(u, _)| individual_factor(m.hazards().individual(1), j2, &pair.second, *u)).collect();
        let mut s = 0.0;
        for (a, (_, wa)) in f1.iter().zip(&r1) {
            for (b, (_, wb)) in f2.iter().zip(&r2) {
                s += wa * wb * a * b;
            }
        }
        total += p * s;
    }
    total
}

pub fn dkw_band(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Evenly spaced levels strictly inside (0, 1) mapped through the diagonal
/// quantile of the model, used as time grids for empirical checks.
pub fn quantile_times(m: &ModelSpec, points: usize) -> Vec<f64> {
    (1..=points)
        .map(|i| frailtykit::identifiability::diagonal_quantile(m, i as f64 / (points as f64 + 1.0)).unwrap())
        .collect()
}

/// Largest deviation of the empirical marginal sub-distributions from the
/// model over `times`, across all `(k, j)`.
pub fn marginal_deviation(m: &ModelSpec, data: &[BivariateObservation], times: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        for j in 0..m.causes(k) {
            let model = m.marginal_sub_distribution_grid(k, j, times, &q()).unwrap();
            for (t, f) in times.iter().zip(model) {
                let emp = data.iter().filter(|o| o.time(k) <= *t && o.cause(k) == j + 1).count() as f64 / n;
                worst = worst.max((emp - f).abs());
            }
        }
    }
    worst
}

/// Largest deviation of the empirical joint sub-distributions from the model
/// on `times × times`.
pub fn joint_deviation(m: &ModelSpec, data: &[BivariateObservation], times: &[f64]) -> f64 {
    let n = data.len() as f64;
    let grid = m.joint_sub_distribution_grid(times, times, &q()).unwrap();
    let mut worst: f64 = 0.0;
    for j1 in 0..m.causes(0) {
        for j2 in 0..m.causes(1) {
            for (i1, t1) in times.iter().enumerate() {
                for (i2, t2) in times.iter().enumerate() {
                    let emp = data
                        .iter()
                        .filter(|o| o.t1 <= *t1 && o.t2 <= *t2 && o.j1 == j1 + 1 && o.j2 == j2 + 1)
                        .count() as f64
                        / n;
                    worst = worst.max((emp - grid.get(j1, j2, i1, i2)).abs());
                }
            }
        }
    }
    worst
}
