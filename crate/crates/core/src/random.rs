//! Random models for parameter sweeps.

use rand::Rng;

use crate::error::Result;
use crate::frailty::{DiscreteFrailty, DiscreteLaw, FrailtyKind, FrailtyStructure};
use crate::hazards::{HazardFamily, HazardSpec};
use crate::identifiability::Parametrization;
use crate::model::{ModelSpec, PairHazards};

/// Ranges sampled by [`random_model`]. Shapes, scales and raw atom
/// coordinates are drawn log-uniformly; raw weights uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomModelConfig {
    pub causes: usize,
    pub min_atoms: usize,
    pub max_atoms: usize,
    pub gamma_range: (f64, f64),
    pub alpha_range: (f64, f64),
    pub atom_range: (f64, f64),
    pub weight_range: (f64, f64),
    pub families: Vec<HazardFamily>,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        Self {
            causes: 2,
            min_atoms: 2,
            max_atoms: 4,
            gamma_range: (0.5, 2.5),
            alpha_range: (0.3, 2.0),
            atom_range: (0.3, 3.0),
            weight_range: (0.2, 1.0),
            families: HazardFamily::ALL.to_vec(),
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn random_hazard<R: Rng + ?Sized>(rng: &mut R, family: HazardFamily, cfg: &RandomModelConfig) -> Result<HazardSpec> {
    let alpha = log_uniform(rng, cfg.alpha_range);
    let gamma = if family.has_free_shape() { log_uniform(rng, cfg.gamma_range) } else { 1.0 };
    HazardSpec::new(family, gamma, alpha)
}

/// A unit-mean law with `n` atoms in `dim` coordinates.
pub fn random_law<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize, cfg: &RandomModelConfig) -> Result<DiscreteLaw> {
    let atoms = (0..n).map(|_| (0..dim).map(|_| log_uniform(rng, cfg.atom_range)).collect()).collect();
    let (lo, hi) = cfg.weight_range;
    let raw: Vec<f64> = (0..n).map(|_| lo + rng.random::<f64>() * (hi - lo)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    DiscreteLaw::new(atoms, weights)?.normalize_to_unit_mean()
}

/// A unit-mean model of the given kind with families drawn from
/// `cfg.families`.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, kind: FrailtyKind, cfg: &RandomModelConfig) -> Result<ModelSpec> {
    let structure = FrailtyStructure::new(kind, cfg.causes, cfg.causes)?;
    let mut individual = || -> Result<Vec<HazardSpec>> {
        (0..cfg.causes)
            .map(|_| {
                let family = cfg.families[rng.random_range(0..cfg.families.len())];
                random_hazard(rng, family, cfg)
            })
            .collect()
    };
    let hazards = PairHazards::new(individual()?, individual()?)?;
    let n = rng.random_range(cfg.min_atoms..=cfg.max_atoms);
    let law = random_law(rng, structure.dim(), n, cfg)?;
    ModelSpec::new(structure, hazards, DiscreteFrailty::from_law(structure, law)?)
}

/// A unit-mean neighbour of `m`: every free coordinate of the constrained
/// parametrization moves by at most `max_step` and one of them by at least
/// `min_step`.
pub fn perturb<R: Rng + ?Sized>(rng: &mut R, m: &ModelSpec, min_step: f64, max_step: f64) -> Result<ModelSpec> {
    let p = Parametrization::constrained(m);
    let mut theta = p.encode(m)?;
    for v in theta.iter_mut() {
        *v += (2.0 * rng.random::<f64>() - 1.0) * max_step;
    }
    if !theta.is_empty() {
        let i = rng.random_range(0..theta.len());
        let size = min_step + rng.random::<f64>() * (max_step - min_step);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        theta[i] = p.encode(m)?[i] + sign * size;
    }
    p.decode(&theta)
}
