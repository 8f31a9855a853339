//! Executable identifiability probes.
//!
//! Two models are compared through their joint sub-distribution functions on
//! a finite grid. Around that distance sit the supporting checks: the
//! frailty-scale confounding transform that breaks identifiability once the
//! unit-mean constraint is dropped, the small-time limits of the tilted
//! frailty means, Laplace-transform comparisons along the integer and
//! hazard-composed argument sequences, and parameter recovery by distance
//! minimization or maximum likelihood.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frailty::{DiscreteFrailty, DiscreteLaw, FrailtyKind, FrailtyStructure};
use crate::hazards::{HazardFamily, HazardSpec};
use crate::model::{ModelSpec, PairHazards, QuadratureConfig, SubDistributionGrid};
use crate::optimize::{minimize, OptimizeConfig, RunSummary};
use crate::roots;
use crate::simulate::BivariateObservation;

/// Sup distances above this count as separated.
pub const SEPARATION_THRESHOLD: f64 = 1e-6;

/// Quantile levels of the default grid.
pub const DEFAULT_QUANTILES: [f64; 6] = [0.1, 0.25, 0.5, 0.75, 0.9, 0.99];

/// Times at which the tilted-mean limits are probed, largest first.
pub const LIMIT_TIMES: [f64; 3] = [1e-2, 1e-4, 1e-6];

pub const DEFAULT_LST_TERMS: usize = 20;

const MIN_GRID_POINTS: usize = 5;

/// Finite stand-in for "all `t1, t2 > 0`".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct ProbeGrid {
    t1_points: Vec<f64>,
    t2_points: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    t1_points: Vec<f64>,
    t2_points: Vec<f64>,
}

impl TryFrom<RawGrid> for ProbeGrid {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        Self::new(raw.t1_points, raw.t2_points)
    }
}

impl ProbeGrid {
    pub fn new(t1_points: Vec<f64>, t2_points: Vec<f64>) -> Result<Self> {
        for (name, pts) in [("t1_points", &t1_points), ("t2_points", &t2_points)] {
            if pts.len() < MIN_GRID_POINTS {
                return Err(Error::InvalidSpec(format!(
                    "{name} needs at least {MIN_GRID_POINTS} points, got {}",
                    pts.len()
                )));
            }
            if pts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
                return Err(Error::InvalidSpec(format!("{name} must be positive and finite")));
            }
            if pts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidSpec(format!("{name} must be strictly increasing")));
            }
        }
        Ok(Self { t1_points, t2_points })
    }

    /// Both axes at the [`DEFAULT_QUANTILES`] of `min(T1, T2)`, read off
    /// the joint survival diagonal.
    pub fn default_for(m: &ModelSpec) -> Result<Self> {
        let pts = DEFAULT_QUANTILES
            .iter()
            .map(|&p| diagonal_quantile(m, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts.clone(), pts)
    }

    pub fn t1_points(&self) -> &[f64] {
        &self.t1_points
    }

    pub fn t2_points(&self) -> &[f64] {
        &self.t2_points
    }
}

/// `t` with `P(min(T1, T2) <= t) = p`.
pub fn diagonal_quantile(m: &ModelSpec, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let guess = m.t_big(0)?.min(m.t_big(1)?) / 40.0;
    roots::solve_increasing(|t| 1.0 - m.joint_survival(t, t).unwrap_or(f64::NAN), p, guess, 1e-12)
}

/// The target of a recovery: model outputs on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FGrid {
    pub grid: ProbeGrid,
    pub values: SubDistributionGrid,
}

impl FGrid {
    pub fn from_model(m: &ModelSpec, grid: &ProbeGrid, q: &QuadratureConfig) -> Result<Self> {
        let values = m.joint_sub_distribution_grid(grid.t1_points(), grid.t2_points(), q)?;
        Ok(Self { grid: grid.clone(), values })
    }
}

fn check_same_shape(a: &ModelSpec, b: &ModelSpec) -> Result<()> {
    if a.structure() != b.structure() {
        return Err(Error::StructureMismatch(format!(
            "{:?} vs {:?}",
            a.structure(),
            b.structure()
        )));
    }
    Ok(())
}

/// Sup distance overall and per cause pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDistance {
    pub sup: f64,
    /// Keyed `"j1,j2"` with 1-based causes.
    pub per_pair: BTreeMap<String, f64>,
}

fn grid_distance(a: &SubDistributionGrid, b: &SubDistributionGrid) -> GridDistance {
    let (n1, n2) = (a.t1.len(), a.t2.len());
    let mut per_pair = BTreeMap::new();
    let mut sup: f64 = 0.0;
    for j1 in 0..a.l1 {
        for j2 in 0..a.l2 {
            let mut d: f64 = 0.0;
            for i1 in 0..n1 {
                for i2 in 0..n2 {
                    d = d.max((a.get(j1, j2, i1, i2) - b.get(j1, j2, i1, i2)).abs());
                }
            }
            per_pair.insert(format!("{},{}", j1 + 1, j2 + 1), d);
            sup = sup.max(d);
        }
    }
    GridDistance { sup, per_pair }
}

/// `max |F^A − F^B|` over cause pairs and grid points, with the per-pair
/// breakdown.
pub fn distance_report(a: &ModelSpec, b: &ModelSpec, grid: &ProbeGrid, q: &QuadratureConfig) -> Result<GridDistance> {
    check_same_shape(a, b)?;
    let (fa, fb) = rayon::join(
        || a.joint_sub_distribution_grid(grid.t1_points(), grid.t2_points(), q),
        || b.joint_sub_distribution_grid(grid.t1_points(), grid.t2_points(), q),
    );
    Ok(grid_distance(&fa?, &fb?))
}

pub fn sub_distribution_distance(a: &ModelSpec, b: &ModelSpec, grid: &ProbeGrid, q: &QuadratureConfig) -> Result<f64> {
    Ok(distance_report(a, b, grid, q)?.sup)
}

/// Multiplies every frailty coordinate by `c` and divides every hazard scale
/// by `c`.
///
/// For families with `b ≡ 1` (Weibull, exponential) the cumulative hazard is
/// linear in `α`, so the model outputs are unchanged while the frailty mean
/// becomes `c`.
pub fn scale_confound(m: &ModelSpec, c: f64) -> Result<ModelSpec> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("scale factor must be positive, got {c}")));
    }
    let rescale = |hz: &[HazardSpec]| -> Result<Vec<HazardSpec>> {
        hz.iter()
            .map(|h| match h.family() {
                HazardFamily::Weibull | HazardFamily::Exponential => h.with_alpha(h.alpha() / c),
                other => Err(Error::Domain(format!(
                    "scale confounding needs b ≡ 1, {} hazards do not qualify",
                    other.name()
                ))),
            })
            .collect()
    };
    let hazards = PairHazards::new(rescale(m.hazards().individual(0))?, rescale(m.hazards().individual(1))?)?;
    ModelSpec::unconstrained(m.structure(), hazards, m.frailty().scaled(c)?)
}

/// One tilted-mean limit per `(k, j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEntry {
    /// 1-based individual and cause.
    pub individual: usize,
    pub cause: usize,
    pub coordinate: usize,
    /// `|E[ε_c exp(−⟨s(t), ε⟩)] − 1|` at each of [`LIMIT_TIMES`].
    pub residuals: Vec<f64>,
    /// Residuals shrink (or stay put) as `t` decreases.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub times: Vec<f64>,
    pub entries: Vec<LimitEntry>,
}

impl LimitReport {
    /// Largest residual at the smallest probe time.
    pub fn max_final_residual(&self) -> f64 {
        self.entries.iter().map(|e| *e.residuals.last().expect("non-empty")).fold(0.0, f64::max)
    }

    pub fn all_monotone(&self) -> bool {
        self.entries.iter().all(|e| e.monotone)
    }
}

/// Tilted frailty means `E[ε_c exp(−⟨s(t), ε⟩)]` at `s(t)` built from the
/// cumulative hazards of both individuals at `t`; under unit means they tend
/// to 1 as `t → 0`.
pub fn limit_identity_check(m: &ModelSpec) -> Result<LimitReport> {
    let structure = m.structure();
    let args: Vec<Vec<f64>> = LIMIT_TIMES
        .iter()
        .map(|&t| structure.laplace_argument(&m.cumulative_hazards(0, t), &m.cumulative_hazards(1, t)))
        .collect();
    let mut entries = Vec::new();
    for k in 0..2 {
        for j in 0..m.causes(k) {
            let coordinate = structure.coord(k, j);
            let residuals = args
                .iter()
                .map(|s| Ok((m.frailty().tilted_mean(coordinate, s)? - 1.0).abs()))
                .collect::<Result<Vec<f64>>>()?;
            let monotone = residuals.windows(2).all(|w| w[1] <= w[0]);
            entries.push(LimitEntry { individual: k + 1, cause: j + 1, coordinate, residuals, monotone });
        }
    }
    Ok(LimitReport { times: LIMIT_TIMES.to_vec(), entries })
}

/// Laplace-transform arguments probed for `n_max` terms.
///
/// Shared frailty uses `s = n`; correlated frailty the integer grid
/// `(n1, n2)`. Cause-specific structures use `m_n = n/(n+1)` as the level of
/// cause 1 and carry it to cause `j` through `H_j(H_1⁻¹(m_n))`, per
/// individual; correlated cause-specific frailty crosses the two
/// individuals' sequences.
pub fn lst_arguments(structure: FrailtyStructure, hazards: &PairHazards, n_max: usize) -> Result<Vec<Vec<f64>>> {
    let composed = |k: usize, n: usize| -> Result<Vec<f64>> {
        let m = n as f64 / (n as f64 + 1.0);
        let hz = hazards.individual(k);
        let t = hz[0].inverse_cumulative_hazard(m)?;
        let mut s: Vec<f64> = hz.iter().map(|h| h.cumulative(t)).collect();
        s[0] = m;
        Ok(s)
    };
    let mut out = Vec::new();
    match structure.kind() {
        FrailtyKind::Shared => out.extend((1..=n_max).map(|n| vec![n as f64])),
        FrailtyKind::Correlated => {
            for n1 in 1..=n_max {
                out.extend((1..=n_max).map(|n2| vec![n1 as f64, n2 as f64]));
            }
        }
        FrailtyKind::SharedCauseSpecific => {
            for n in 1..=n_max {
                let (a, b) = (composed(0, n)?, composed(1, n)?);
                out.push(a.iter().zip(&b).map(|(x, y)| x + y).collect());
            }
        }
        FrailtyKind::CorrelatedCauseSpecific => {
            let first = (1..=n_max).map(|n| composed(0, n)).collect::<Result<Vec<_>>>()?;
            let second = (1..=n_max).map(|n| composed(1, n)).collect::<Result<Vec<_>>>()?;
            for a in &first {
                for b in &second {
                    out.push(a.iter().chain(b).copied().collect());
                }
            }
        }
    }
    Ok(out)
}

/// Largest `|L_A(s) − L_B(s)|` over [`lst_arguments`]. Both laws are put in
/// canonical form first, so relabelled copies of one law give exactly zero.
pub fn lst_sequence_test(a: &DiscreteFrailty, b: &DiscreteFrailty, n_max: usize, hazards: &PairHazards) -> Result<f64> {
    if a.structure() != b.structure() {
        return Err(Error::StructureMismatch(format!("{:?} vs {:?}", a.structure(), b.structure())));
    }
    let (la, lb) = (a.law().canonical(), b.law().canonical());
    let mut gap: f64 = 0.0;
    for s in lst_arguments(a.structure(), hazards, n_max)? {
        gap = gap.max((la.lst(&s)? - lb.lst(&s)?).abs());
    }
    Ok(gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Indistinguishable,
    Separated,
}

/// Side-by-side comparison of two models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub sup_distance: f64,
    pub per_pair: BTreeMap<String, f64>,
    /// `|E ε_c − 1|` per frailty coordinate (1-based), for each model.
    pub limit_residuals: BTreeMap<String, BTreeMap<String, f64>>,
    pub lst_gap: f64,
    pub verdict: Verdict,
}

fn mean_residuals(g: &DiscreteFrailty) -> Result<BTreeMap<String, f64>> {
    let zero = vec![0.0; g.dim()];
    (0..g.dim()).map(|c| Ok(((c + 1).to_string(), (g.tilted_mean(c, &zero)? - 1.0).abs()))).collect()
}

/// Compares `a` and `b` on `grid` (default: the grid of `a`).
pub fn probe(a: &ModelSpec, b: &ModelSpec, grid: Option<&ProbeGrid>, q: &QuadratureConfig) -> Result<ProbeReport> {
    check_same_shape(a, b)?;
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = ProbeGrid::default_for(a)?;
            &owned
        }
    };
    let d = distance_report(a, b, grid, q)?;
    let mut limit_residuals = BTreeMap::new();
    limit_residuals.insert("a".to_string(), mean_residuals(a.frailty())?);
    limit_residuals.insert("b".to_string(), mean_residuals(b.frailty())?);
    let lst_gap = lst_sequence_test(a.frailty(), b.frailty(), DEFAULT_LST_TERMS, a.hazards())?;
    let verdict = if d.sup > SEPARATION_THRESHOLD { Verdict::Separated } else { Verdict::Indistinguishable };
    Ok(ProbeReport { sup_distance: d.sup, per_pair: d.per_pair, limit_residuals, lst_gap, verdict })
}

/// Whether the frailty is held on the unit-mean manifold during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanConstraint {
    /// Atom 0 is the reference (raw coordinates 1), the others are free log
    /// ratios, and the law is rescaled to unit means after every step.
    Enforced,
    /// Every atom coordinate is a free logarithm; no rescaling.
    Dropped,
}

/// Map between a model and an unconstrained real vector:
/// `ln γ` (free-shape families only) and `ln α` per hazard, then atom
/// log-coordinates, then weight logits of atoms `1..K` against atom 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Parametrization {
    structure: FrailtyStructure,
    families: PairFamilies,
    atoms: usize,
    mode: MeanConstraint,
}

type PairFamilies = [Vec<HazardFamily>; 2];

impl Parametrization {
    pub fn new(template: &ModelSpec, mode: MeanConstraint) -> Self {
        let families = [0, 1].map(|k| template.hazards().individual(k).iter().map(|h| h.family()).collect());
        Self { structure: template.structure(), families, atoms: template.frailty().len(), mode }
    }

    pub fn constrained(template: &ModelSpec) -> Self {
        Self::new(template, MeanConstraint::Enforced)
    }

    pub fn mode(&self) -> MeanConstraint {
        self.mode
    }

    fn hazard_len(&self) -> usize {
        self.families.iter().flatten().map(|f| if f.has_free_shape() { 2 } else { 1 }).sum()
    }

    fn free_atoms(&self) -> usize {
        match self.mode {
            MeanConstraint::Enforced => self.atoms - 1,
            MeanConstraint::Dropped => self.atoms,
        }
    }

    pub fn len(&self) -> usize {
        self.hazard_len() + self.free_atoms() * self.structure.dim() + self.atoms - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, m: &ModelSpec) -> Result<()> {
        let families: PairFamilies =
            [0, 1].map(|k| m.hazards().individual(k).iter().map(|h| h.family()).collect());
        if m.structure() != self.structure || families != self.families || m.frailty().len() != self.atoms {
            return Err(Error::StructureMismatch("model does not match the parametrization".into()));
        }
        Ok(())
    }

    pub fn encode(&self, m: &ModelSpec) -> Result<Vec<f64>> {
        self.check(m)?;
        let mut theta = Vec::with_capacity(self.len());
        for k in 0..2 {
            for h in m.hazards().individual(k) {
                if h.family().has_free_shape() {
                    theta.push(h.gamma().ln());
                }
                theta.push(h.alpha().ln());
            }
        }
        let atoms = m.frailty().atoms();
        match self.mode {
            MeanConstraint::Enforced => {
                for atom in &atoms[1..] {
                    theta.extend(atom.iter().zip(&atoms[0]).map(|(x, r)| (x / r).ln()));
                }
            }
            MeanConstraint::Dropped => {
                for atom in atoms {
                    theta.extend(atom.iter().map(|x| x.ln()));
                }
            }
        }
        let w = m.frailty().weights();
        theta.extend(w[1..].iter().map(|p| (p / w[0]).ln()));
        Ok(theta)
    }

    pub fn decode(&self, theta: &[f64]) -> Result<ModelSpec> {
        if theta.len() != self.len() {
            return Err(Error::Index(format!("parameter vector has length {}, expected {}", theta.len(), self.len())));
        }
        let mut it = theta.iter().copied();
        let mut next = || it.next().expect("length checked");
        let mut individual = |fams: &[HazardFamily]| -> Result<Vec<HazardSpec>> {
            fams.iter()
                .map(|&f| {
                    let gamma = if f.has_free_shape() { next().exp() } else { 1.0 };
                    HazardSpec::new(f, gamma, next().exp())
                })
                .collect()
        };
        let first = individual(&self.families[0])?;
        let second = individual(&self.families[1])?;
        let hazards = PairHazards::new(first, second)?;

        let d = self.structure.dim();
        let mut atoms: Vec<Vec<f64>> = Vec::with_capacity(self.atoms);
        if self.mode == MeanConstraint::Enforced {
            atoms.push(vec![1.0; d]);
        }
        for _ in 0..self.free_atoms() {
            atoms.push((0..d).map(|_| next().exp()).collect());
        }
        let mut logits = vec![0.0];
        logits.extend((1..self.atoms).map(|_| next()));
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|r| r / total).collect();

        let law = DiscreteLaw::new(atoms, weights)?;
        match self.mode {
            MeanConstraint::Enforced => {
                let g = DiscreteFrailty::from_law(self.structure, law.normalize_to_unit_mean()?)?;
                ModelSpec::new(self.structure, hazards, g)
            }
            MeanConstraint::Dropped => {
                ModelSpec::unconstrained(self.structure, hazards, DiscreteFrailty::from_law(self.structure, law)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverConfig {
    pub mode: MeanConstraint,
    pub optimizer: OptimizeConfig,
    pub quadrature: QuadratureConfig,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self {
            mode: MeanConstraint::Enforced,
            optimizer: OptimizeConfig::default(),
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// Where one optimizer start ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartEndpoint {
    pub model: ModelSpec,
    pub objective: f64,
    pub sup_distance: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverResult {
    pub model: ModelSpec,
    /// Sup distance to the target grid.
    pub distance: f64,
    /// Sum of squared grid differences at the returned point.
    pub objective: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: Vec<RestartEndpoint>,
}

fn squared_distance(m: &ModelSpec, target: &FGrid, q: &QuadratureConfig) -> Result<(f64, f64)> {
    let values = m.joint_sub_distribution_grid(target.grid.t1_points(), target.grid.t2_points(), q)?;
    let mut sq = 0.0;
    let mut sup: f64 = 0.0;
    for (a, b) in values.values().iter().zip(target.values.values()) {
        sq += (a - b) * (a - b);
        sup = sup.max((a - b).abs());
    }
    Ok((sq, sup))
}

/// Fits model parameters to a target grid of joint sub-distributions by
/// minimizing the squared grid distance from `init`.
pub fn recover_parameters(target: &FGrid, init: &ModelSpec, cfg: &RecoverConfig) -> Result<RecoverResult> {
    if target.values.l1 != init.causes(0) || target.values.l2 != init.causes(1) {
        return Err(Error::StructureMismatch("target grid and initial model have different cause counts".into()));
    }
    let p = Parametrization::new(init, cfg.mode);
    let q = cfg.quadrature;
    let objective = |theta: &[f64]| -> f64 {
        p.decode(theta).and_then(|m| squared_distance(&m, target, &q)).map_or(f64::INFINITY, |(sq, _)| sq)
    };
    let x0 = p.encode(init)?;
    let result = minimize(&objective, &x0, &cfg.optimizer)?;
    let endpoint = |r: &RunSummary| -> Result<RestartEndpoint> {
        let model = p.decode(&r.x)?;
        let (objective, sup_distance) = squared_distance(&model, target, &q)?;
        Ok(RestartEndpoint { model, objective, sup_distance, evaluations: r.evaluations, converged: r.converged })
    };
    let restarts = result.restarts.iter().map(endpoint).collect::<Result<Vec<_>>>()?;
    let model = p.decode(&result.x)?;
    let (objective, distance) = squared_distance(&model, target, &q)?;
    Ok(RecoverResult {
        model,
        distance,
        objective,
        evaluations: result.evaluations,
        iterations: result.iterations,
        converged: result.converged,
        restarts,
    })
}

/// Total `Σ ln f_{J1 J2}(T1, T2)` over complete pairs.
pub fn log_likelihood(m: &ModelSpec, data: &[BivariateObservation]) -> Result<f64> {
    const CHUNK: usize = 512;
    let parts: Vec<f64> = data
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|o| m.ln_joint_sub_density(o.j1 - 1, o.j2 - 1, o.t1, o.t2))
                .sum::<Result<f64>>()
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

fn check_complete(data: &[BivariateObservation], m: &ModelSpec) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidSpec("dataset is empty".into()));
    }
    for (i, o) in data.iter().enumerate() {
        if !o.is_complete() {
            return Err(Error::InvalidSpec(format!("pair {} is censored; likelihood fitting needs complete data", i + 1)));
        }
        if o.j1 > m.causes(0) || o.j2 > m.causes(1) {
            return Err(Error::Index(format!("pair {} has a cause label outside the model", i + 1)));
        }
    }
    Ok(())
}

/// A starting model for likelihood fitting: crude event rates per cause
/// (events over total time) as hazard scales with unit shapes, and
/// `num_atoms` equally weighted atoms spread over `[0.5, 1.5]`.
pub fn default_mle_init(
    data: &[BivariateObservation],
    structure: FrailtyStructure,
    num_atoms: usize,
    family: HazardFamily,
) -> Result<ModelSpec> {
    if num_atoms == 0 {
        return Err(Error::InvalidSpec("at least one atom is needed".into()));
    }
    if data.is_empty() {
        return Err(Error::InvalidSpec("dataset is empty".into()));
    }
    let individual = |k: usize| -> Result<Vec<HazardSpec>> {
        let total: f64 = data.iter().map(|o| o.time(k)).sum();
        (1..=structure.causes(k))
            .map(|j| {
                let events = data.iter().filter(|o| o.cause(k) == j).count().max(1);
                HazardSpec::new(family, 1.0, events as f64 / total)
            })
            .collect()
    };
    let hazards = PairHazards::new(individual(0)?, individual(1)?)?;
    let d = structure.dim();
    let atoms = (0..num_atoms)
        .map(|w| {
            let x = if num_atoms == 1 { 1.0 } else { 0.5 + w as f64 / (num_atoms - 1) as f64 };
            vec![x; d]
        })
        .collect();
    let law = DiscreteLaw::new(atoms, vec![1.0 / num_atoms as f64; num_atoms])?.normalize_to_unit_mean()?;
    ModelSpec::new(structure, hazards, DiscreteFrailty::from_law(structure, law)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleResult {
    pub model: ModelSpec,
    pub log_likelihood: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes the complete-data log-likelihood over the unit-mean
/// parametrization of `init`.
pub fn fit_mle(data: &[BivariateObservation], init: &ModelSpec, optimizer: &OptimizeConfig) -> Result<MleResult> {
    check_complete(data, init)?;
    let start = log_likelihood(init, data)?;
    if !start.is_finite() {
        return Err(Error::Domain("log-likelihood is not finite at the initial model".into()));
    }
    let p = Parametrization::constrained(init);
    let n = data.len() as f64;
    let objective = |theta: &[f64]| -> f64 {
        p.decode(theta).and_then(|m| log_likelihood(&m, data)).map_or(f64::INFINITY, |ll| -ll / n)
    };
    let result = minimize(&objective, &p.encode(init)?, optimizer)?;
    let model = p.decode(&result.x)?;
    let log_likelihood = log_likelihood(&model, data)?;
    Ok(MleResult {
        model,
        log_likelihood,
        evaluations: result.evaluations,
        iterations: result.iterations,
        converged: result.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_dataset, SimConfig};

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn weibull_benchmark() -> ModelSpec {
        let s = FrailtyStructure::new(FrailtyKind::Shared, 2, 2).unwrap();
        let hz = vec![HazardSpec::weibull(1.5, 0.5).unwrap(), HazardSpec::weibull(0.8, 1.0).unwrap()];
        let g = DiscreteFrailty::new(s, vec![vec![0.6], vec![1.4]], vec![0.5, 0.5]).unwrap();
        ModelSpec::new(s, PairHazards::symmetric(hz).unwrap(), g).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(ProbeGrid::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
        assert!(ProbeGrid::new(vec![1.0, 2.0, 2.0, 4.0, 5.0], vec![1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
        assert!(ProbeGrid::new(vec![0.0, 2.0, 3.0, 4.0, 5.0], vec![1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
        let g: std::result::Result<ProbeGrid, _> =
            serde_json::from_str(r#"{"t1_points":[1,2,3,4,5],"t2_points":[1,2,3,4,3]}"#);
        assert!(g.is_err());
    }

    #[test]
    fn default_grid_hits_quantiles() {
        let m = weibull_benchmark();
        let g = ProbeGrid::default_for(&m).unwrap();
        for (t, p) in g.t1_points().iter().zip(DEFAULT_QUANTILES) {
            assert!((1.0 - m.joint_survival(*t, *t).unwrap() - p).abs() < 1e-10);
        }
        assert_eq!(g.t1_points(), g.t2_points());
    }

    #[test]
    fn distance_examples() {
        let m = weibull_benchmark();
        let grid = ProbeGrid::default_for(&m).unwrap();
        assert!(sub_distribution_distance(&m, &m, &grid, &q()).unwrap() < 1e-12);

        let confounded = scale_confound(&m, 2.0).unwrap();
        assert!(sub_distribution_distance(&m, &confounded, &grid, &q()).unwrap() < 1e-9);

        let s = m.structure();
        let unit = m.with_frailty(DiscreteFrailty::degenerate(s)).unwrap();
        let two = m.with_frailty(DiscreteFrailty::new(s, vec![vec![0.5], vec![1.5]], vec![0.5, 0.5]).unwrap()).unwrap();
        let grid = ProbeGrid::default_for(&unit).unwrap();
        assert!(sub_distribution_distance(&unit, &two, &grid, &q()).unwrap() > 1e-4);

        let other = FrailtyStructure::new(FrailtyKind::Correlated, 2, 2).unwrap();
        let mismatched = ModelSpec::new(other, m.hazards().clone(), DiscreteFrailty::degenerate(other)).unwrap();
        assert!(matches!(
            sub_distribution_distance(&m, &mismatched, &grid, &q()),
            Err(Error::StructureMismatch(_))
        ));
    }

    #[test]
    fn confounding_rejects_shape_dependent_b() {
        let s = FrailtyStructure::new(FrailtyKind::Shared, 1, 1).unwrap();
        let hz = PairHazards::symmetric(vec![HazardSpec::gamma_hazard(2.0, 1.0).unwrap()]).unwrap();
        let m = ModelSpec::new(s, hz, DiscreteFrailty::degenerate(s)).unwrap();
        assert!(scale_confound(&m, 2.0).is_err());
    }

    #[test]
    fn limit_examples() {
        let m = weibull_benchmark();
        let degenerate = m.with_frailty(DiscreteFrailty::degenerate(m.structure())).unwrap();
        let r = limit_identity_check(&degenerate).unwrap();
        for (i, &t) in LIMIT_TIMES.iter().enumerate() {
            let h: f64 = degenerate.cumulative_hazards(0, t).iter().sum::<f64>()
                + degenerate.cumulative_hazards(1, t).iter().sum::<f64>();
            let expect = -(-h).exp_m1();
            for e in &r.entries {
                assert!((e.residuals[i] - expect).abs() < 1e-15);
            }
        }

        let s = FrailtyStructure::new(FrailtyKind::Shared, 2, 2).unwrap();
        let hz = PairHazards::symmetric(vec![HazardSpec::weibull(1.0, 0.5).unwrap(), HazardSpec::weibull(2.0, 1.0).unwrap()]).unwrap();
        let g = DiscreteFrailty::new(s, vec![vec![0.4], vec![1.6]], vec![0.5, 0.5]).unwrap();
        let m = ModelSpec::new(s, hz.clone(), g).unwrap();
        let r = limit_identity_check(&m).unwrap();
        assert!(r.max_final_residual() < 1e-5);
        assert!(r.all_monotone());

        let doubled = ModelSpec::unconstrained(s, hz, DiscreteFrailty::new(s, vec![vec![2.0]], vec![1.0]).unwrap()).unwrap();
        let r = limit_identity_check(&doubled).unwrap();
        assert!((r.max_final_residual() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn lst_sequence_examples() {
        let s = FrailtyStructure::new(FrailtyKind::Shared, 1, 1).unwrap();
        let hz = PairHazards::symmetric(vec![HazardSpec::exponential(1.0).unwrap()]).unwrap();
        let a = DiscreteFrailty::degenerate(s);
        let b = DiscreteFrailty::new(s, vec![vec![0.5], vec![1.5]], vec![0.5, 0.5]).unwrap();
        assert_eq!(lst_sequence_test(&b, &b, 20, &hz).unwrap(), 0.0);
        let gap1 = lst_sequence_test(&a, &b, 1, &hz).unwrap();
        assert!((gap1 - 0.046_951).abs() < 1e-6, "{gap1}");

        let permuted = DiscreteFrailty::new(s, vec![vec![1.5], vec![0.5]], vec![0.5, 0.5]).unwrap();
        assert_eq!(lst_sequence_test(&b, &permuted, 20, &hz).unwrap(), 0.0);
    }

    #[test]
    fn cause_specific_arguments_follow_composition() {
        let s = FrailtyStructure::new(FrailtyKind::SharedCauseSpecific, 2, 2).unwrap();
        let hz = PairHazards::new(
            vec![HazardSpec::weibull(1.5, 0.5).unwrap(), HazardSpec::exponential(2.0).unwrap()],
            vec![HazardSpec::weibull(0.7, 1.0).unwrap(), HazardSpec::log_logistic(1.2, 0.8).unwrap()],
        )
        .unwrap();
        let args = lst_arguments(s, &hz, 3).unwrap();
        assert_eq!(args.len(), 3);
        let m = 2.0 / 3.0;
        assert!((args[1][0] - 2.0 * m).abs() < 1e-12);
        let t1 = hz.individual(0)[0].inverse_cumulative_hazard(m).unwrap();
        let t2 = hz.individual(1)[0].inverse_cumulative_hazard(m).unwrap();
        let expect = hz.individual(0)[1].cumulative(t1) + hz.individual(1)[1].cumulative(t2);
        assert!((args[1][1] - expect).abs() < 1e-12);

        let c = FrailtyStructure::new(FrailtyKind::CorrelatedCauseSpecific, 2, 2).unwrap();
        assert_eq!(lst_arguments(c, &hz, 4).unwrap().len(), 16);
    }

    #[test]
    fn probe_against_itself() {
        let m = weibull_benchmark();
        let r = probe(&m, &m, None, &q()).unwrap();
        assert!(r.sup_distance < 1e-12);
        assert_eq!(r.verdict, Verdict::Indistinguishable);
        assert_eq!(r.lst_gap, 0.0);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["sup_distance", "per_pair", "limit_residuals", "lst_gap", "verdict"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["verdict"], "Indistinguishable");
        assert_eq!(json["per_pair"].as_object().unwrap().len(), 4);
    }

    #[test]
    fn parametrization_round_trip() {
        let m = weibull_benchmark();
        for mode in [MeanConstraint::Enforced, MeanConstraint::Dropped] {
            let p = Parametrization::new(&m, mode);
            let theta = p.encode(&m).unwrap();
            assert_eq!(theta.len(), p.len());
            let back = p.decode(&theta).unwrap();
            for (a, b) in back.frailty().atoms().iter().flatten().zip(m.frailty().atoms().iter().flatten()) {
                assert!((a - b).abs() < 1e-14);
            }
            for ((_, _, a), (_, _, b)) in back.hazards().iter().zip(m.hazards().iter()) {
                assert!((a.gamma() - b.gamma()).abs() < 1e-14 && (a.alpha() - b.alpha()).abs() < 1e-14);
            }
        }
        assert_eq!(Parametrization::constrained(&m).len(), 8 + 1 + 1);
        assert_eq!(Parametrization::new(&m, MeanConstraint::Dropped).len(), 8 + 2 + 1);
    }

    #[test]
    fn recovery_from_truth_needs_no_iterations() {
        let m = weibull_benchmark();
        let target = FGrid::from_model(&m, &ProbeGrid::default_for(&m).unwrap(), &q()).unwrap();
        let r = recover_parameters(&target, &m, &RecoverConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.distance < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn exponential_mle_matches_closed_form() {
        let s = FrailtyStructure::new(FrailtyKind::Shared, 2, 2).unwrap();
        let hz = PairHazards::symmetric(vec![HazardSpec::exponential(0.4).unwrap(), HazardSpec::exponential(0.9).unwrap()]).unwrap();
        let truth = ModelSpec::new(s, hz, DiscreteFrailty::degenerate(s)).unwrap();
        let data = simulate_dataset(&truth, &SimConfig::new(2000, 17)).unwrap();
        let init = default_mle_init(&data, s, 1, HazardFamily::Exponential).unwrap();
        let fit = fit_mle(&data, &init, &OptimizeConfig { budget: 4000, ..Default::default() }).unwrap();
        for k in 0..2 {
            let total: f64 = data.iter().map(|o| o.time(k)).sum();
            for j in 0..2 {
                let events = data.iter().filter(|o| o.cause(k) == j + 1).count() as f64;
                let oracle = events / total;
                let fitted = fit.model.hazard(k, j).unwrap().alpha();
                assert!((fitted - oracle).abs() < 1e-6 * oracle, "{fitted} vs {oracle}");
                let truth_alpha = truth.hazard(k, j).unwrap().alpha();
                assert!((fitted - truth_alpha).abs() < 3.0 * fitted / events.sqrt());
            }
        }
    }

    #[test]
    fn mle_rejects_censored_data() {
        let s = FrailtyStructure::new(FrailtyKind::Shared, 1, 1).unwrap();
        let hz = PairHazards::symmetric(vec![HazardSpec::exponential(1.0).unwrap()]).unwrap();
        let m = ModelSpec::new(s, hz, DiscreteFrailty::degenerate(s)).unwrap();
        let data = simulate_dataset(&m, &SimConfig::new(200, 1).with_censoring(1.0)).unwrap();
        assert!(fit_mle(&data, &m, &OptimizeConfig::default()).is_err());
    }
}
