//! Derivative-free minimization: Nelder–Mead with dimension-adaptive
//! coefficients, seeded restarts and a final polish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    /// Total objective evaluations across all restarts and the polish.
    pub budget: usize,
    /// Extra starts besides the initial point.
    pub restarts: usize,
    pub seed: u64,
    /// Standard deviation of the Gaussian jitter applied to restart points.
    pub perturbation: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Stop when the simplex is smaller than this in every coordinate.
    pub x_tol: f64,
    /// Stop when the objective spread across the simplex is below
    /// `f_tol · |f_best| + f_abs`.
    pub f_tol: f64,
    pub f_abs: f64,
    /// Return immediately if the starting value is already this small.
    pub target: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            budget: 20_000,
            restarts: 4,
            seed: 0,
            perturbation: 0.3,
            initial_step: 0.2,
            x_tol: 1e-9,
            f_tol: 1e-12,
            f_abs: 1e-18,
            target: 1e-28,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidSpec("optimizer budget must be positive".into()));
        }
        for (name, v) in [
            ("perturbation", self.perturbation),
            ("initial_step", self.initial_step),
            ("x_tol", self.x_tol),
            ("f_tol", self.f_tol),
            ("f_abs", self.f_abs),
            ("target", self.target),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidSpec(format!("optimizer {name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.initial_step <= 0.0 {
            return Err(Error::InvalidSpec("optimizer initial_step must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a single simplex run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub start: Vec<f64>,
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub iterations: usize,
    /// Stopped on a tolerance rather than the evaluation cap.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// One entry per start, in start order, before polishing.
    pub restarts: Vec<RunSummary>,
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// One Nelder–Mead run from `x0` with at most `max_evals` evaluations.
///
/// Reflection, expansion, contraction and shrink use the coefficients
/// `1, 1 + 2/n, 3/4 − 1/(2n), 1 − 1/n`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, max_evals: usize, cfg: &OptimizeConfig) -> RunSummary {
    let n = x0.len();
    let mut evals = 0usize;
    let run = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        eval(f, x)
    };
    let f0 = run(x0, &mut evals);
    if n == 0 || f0 <= cfg.target || max_evals <= 1 {
        return RunSummary {
            start: x0.to_vec(),
            x: x0.to_vec(),
            f: f0,
            evaluations: evals,
            iterations: 0,
            converged: n == 0 || f0 <= cfg.target,
        };
    }
    let nf = n as f64;
    let (rho, chi, psi, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        if evals >= max_evals {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = run(&x, &mut evals);
        simplex.push((x, fx));
    }
    if simplex.len() <= n {
        let best = simplex.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
        return RunSummary { start: x0.to_vec(), x: best.0, f: best.1, evaluations: evals, iterations: 0, converged: false };
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (fb, fw) = (simplex[0].1, simplex[n].1);
        let spread_ok = fw.is_finite() && fw - fb <= cfg.f_tol * fb.abs() + cfg.f_abs;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if fb <= cfg.target || spread_ok || size <= cfg.x_tol {
            converged = true;
            break;
        }
        // an iteration costs up to two evaluations before any shrink
        if evals + 2 > max_evals {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let toward = |coef: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + coef * (c - w)).collect()
        };

        let xr = toward(rho);
        let fr = run(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = toward(rho * chi);
            let fe = run(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = toward(rho * psi);
            let fc = run(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = toward(-psi);
            let fc = run(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            if evals >= max_evals {
                break;
            }
            for (v, b) in x.iter_mut().zip(&best) {
                *v = b + sigma * (*v - b);
            }
            *fx = run(x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    RunSummary { start: x0.to_vec(), x, f: fx, evaluations: evals, iterations, converged }
}

/// Seeded start points: the initial point followed by jittered copies.
pub fn start_points(x0: &[f64], cfg: &OptimizeConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![x0.to_vec()];
    for _ in 0..cfg.restarts {
        let x: Vec<f64> = x0.iter().map(|v| v + cfg.perturbation * standard_normal(&mut rng)).collect();
        starts.push(x);
    }
    starts
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Nelder–Mead from `x0`, restarted with a fresh simplex around each
/// converged point until a restart no longer improves by more than
/// `1e-3 · |f| + f_abs`, or the budget is spent.
pub fn local_search<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], budget: usize, cfg: &OptimizeConfig) -> RunSummary {
    let mut best = nelder_mead(f, x0, cfg.initial_step, budget, cfg);
    let mut used = best.evaluations;
    let mut iterations = best.iterations;
    let mut converged = best.converged && best.f <= cfg.target;
    while best.converged && !converged && used < budget {
        let round = nelder_mead(f, &best.x, cfg.initial_step, budget - used, cfg);
        used += round.evaluations;
        iterations += round.iterations;
        let gain = best.f - round.f;
        if gain > 0.0 {
            best.x = round.x;
            best.f = round.f;
        }
        if !round.converged {
            best.converged = false;
        } else if gain <= 1e-3 * best.f.abs() + cfg.f_abs || best.f <= cfg.target {
            converged = true;
        }
    }
    RunSummary { start: x0.to_vec(), x: best.x, f: best.f, evaluations: used, iterations, converged }
}

/// Minimizes `f` from `x0`.
///
/// The budget is split evenly over the starts, which run concurrently; the
/// best end point (ties broken by start index) is then polished with
/// whatever budget the starts left unused. When the budget runs out the best
/// point so far is returned with `converged = false`.
pub fn minimize<F>(f: &F, x0: &[f64], cfg: &OptimizeConfig) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let f0 = eval(f, x0);
    if f0 <= cfg.target {
        let run = RunSummary { start: x0.to_vec(), x: x0.to_vec(), f: f0, evaluations: 1, iterations: 0, converged: true };
        return Ok(OptimizeResult { x: x0.to_vec(), f: f0, evaluations: 1, iterations: 0, converged: true, restarts: vec![run] });
    }
    let mut used = 1;
    let starts = start_points(x0, cfg);
    let per_start = ((cfg.budget - used) / starts.len()).max(1);
    let runs: Vec<RunSummary> = starts.par_iter().map(|s| local_search(f, s, per_start, cfg)).collect();
    used += runs.iter().map(|r| r.evaluations).sum::<usize>();
    let mut iterations: usize = runs.iter().map(|r| r.iterations).sum();

    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.f < runs[best].f {
            best = i;
        }
    }
    let (mut x, mut fx, mut converged) = (runs[best].x.clone(), runs[best].f, runs[best].converged);
    if f0 < fx {
        (x, fx) = (x0.to_vec(), f0);
    }
    if !converged && used < cfg.budget {
        let polish = local_search(f, &x, cfg.budget - used, cfg);
        used += polish.evaluations;
        iterations += polish.iterations;
        converged = polish.converged;
        if polish.f < fx {
            x = polish.x;
            fx = polish.f;
        }
    }
    Ok(OptimizeResult { x, f: fx, evaluations: used, iterations, converged, restarts: runs })
}
