//! Finite discrete frailty laws for the four dependence structures.
//!
//! Atom layouts by structure (`L` = number of causes when both individuals
//! share the cause set):
//!
//! - `Shared`: `(ε)`
//! - `Correlated`: `(ε⁽¹⁾, ε⁽²⁾)`
//! - `SharedCauseSpecific`: `(ε_1, …, ε_L)`
//! - `CorrelatedCauseSpecific`: `(ε⁽¹⁾_1, …, ε⁽¹⁾_L, ε⁽²⁾_1, …, ε⁽²⁾_L)`

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-12;
pub const UNIT_MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrailtyKind {
    Shared,
    Correlated,
    SharedCauseSpecific,
    CorrelatedCauseSpecific,
}

impl FrailtyKind {
    pub const ALL: [FrailtyKind; 4] = [
        FrailtyKind::Shared,
        FrailtyKind::Correlated,
        FrailtyKind::SharedCauseSpecific,
        FrailtyKind::CorrelatedCauseSpecific,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrailtyKind::Shared => "shared",
            FrailtyKind::Correlated => "correlated",
            FrailtyKind::SharedCauseSpecific => "shared_cause_specific",
            FrailtyKind::CorrelatedCauseSpecific => "correlated_cause_specific",
        }
    }

    pub fn is_cause_specific(self) -> bool {
        matches!(
            self,
            FrailtyKind::SharedCauseSpecific | FrailtyKind::CorrelatedCauseSpecific
        )
    }
}

impl std::str::FromStr for FrailtyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FrailtyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown frailty structure `{s}`")))
    }
}

#[derive(Deserialize)]
struct RawStructure {
    kind: FrailtyKind,
    l1: usize,
    l2: usize,
}

/// Frailty kind plus the number of competing causes for each individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStructure")]
pub struct FrailtyStructure {
    kind: FrailtyKind,
    l1: usize,
    l2: usize,
}

impl TryFrom<RawStructure> for FrailtyStructure {
    type Error = Error;

    fn try_from(raw: RawStructure) -> Result<Self> {
        FrailtyStructure::new(raw.kind, raw.l1, raw.l2)
    }
}

impl FrailtyStructure {
    pub fn new(kind: FrailtyKind, l1: usize, l2: usize) -> Result<Self> {
        if l1 == 0 || l2 == 0 {
            return Err(Error::InvalidSpec("each individual needs at least one cause".into()));
        }
        if kind.is_cause_specific() && l1 != l2 {
            return Err(Error::InvalidSpec(format!(
                "{} frailty needs the same cause set for both individuals (got {l1} and {l2})",
                kind.name()
            )));
        }
        Ok(Self { kind, l1, l2 })
    }

    pub fn kind(&self) -> FrailtyKind {
        self.kind
    }

    /// Number of causes for individual `k` (0-based).
    pub fn causes(&self, k: usize) -> usize {
        if k == 0 {
            self.l1
        } else {
            self.l2
        }
    }

    pub fn l1(&self) -> usize {
        self.l1
    }

    pub fn l2(&self) -> usize {
        self.l2
    }

    /// Dimension of the frailty vector.
    pub fn dim(&self) -> usize {
        match self.kind {
            FrailtyKind::Shared => 1,
            FrailtyKind::Correlated => 2,
            FrailtyKind::SharedCauseSpecific => self.l1,
            FrailtyKind::CorrelatedCauseSpecific => 2 * self.l1,
        }
    }

    /// Frailty coordinate multiplying the hazard of cause `j` for individual `k`.
    pub fn coord(&self, k: usize, j: usize) -> usize {
        match self.kind {
            FrailtyKind::Shared => 0,
            FrailtyKind::Correlated => k,
            FrailtyKind::SharedCauseSpecific => j,
            FrailtyKind::CorrelatedCauseSpecific => k * self.l1 + j,
        }
    }

    /// Maps per-cause cumulative hazards of both individuals onto the
    /// Laplace argument `s` such that `Π_k S_k(t_k | ε) = exp(-⟨s, ε⟩)`.
    pub fn laplace_argument(&self, h1: &[f64], h2: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.dim()];
        for (k, hs) in [h1, h2].into_iter().enumerate() {
            for (j, h) in hs.iter().enumerate() {
                s[self.coord(k, j)] += h;
            }
        }
        s
    }

    /// Expands one frailty atom into per-cause multipliers for both individuals.
    pub fn expand_atom(&self, atom: &[f64]) -> PairFrailty {
        let per = |k: usize| (0..self.causes(k)).map(|j| atom[self.coord(k, j)]).collect();
        PairFrailty {
            first: per(0),
            second: per(1),
        }
    }
}

/// Per-cause frailty multipliers `(ε⁽¹⁾_j)` and `(ε⁽²⁾_j)` for one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFrailty {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl PairFrailty {
    /// Unit frailty for the given cause counts.
    pub fn unit(l1: usize, l2: usize) -> Self {
        Self {
            first: vec![1.0; l1],
            second: vec![1.0; l2],
        }
    }

    pub fn individual(&self, k: usize) -> &[f64] {
        if k == 0 {
            &self.first
        } else {
            &self.second
        }
    }
}

/// A finite mixture of point masses on the positive orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpec("frailty law needs at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidSpec(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let d = atoms[0].len();
        if d == 0 {
            return Err(Error::InvalidSpec("atoms must have at least one coordinate".into()));
        }
        for atom in &atoms {
            if atom.len() != d {
                return Err(Error::InvalidSpec("atoms have inconsistent dimensions".into()));
            }
            if atom.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidSpec(format!("atom coordinates must be positive: {atom:?}")));
            }
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidSpec("weights must be positive".into()));
        }
        // summed in sorted order so relabelling an atom list cannot change the weights
        let mut sorted = weights.clone();
        sorted.sort_by(f64::total_cmp);
        let total: f64 = sorted.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidSpec(format!("weights sum to {total}, expected 1")));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { atoms, weights })
    }

    /// Point mass at `atom`.
    pub fn point_mass(atom: Vec<f64>) -> Result<Self> {
        Self::new(vec![atom], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (atom, w) in self.atoms.iter().zip(&self.weights) {
            for (mi, x) in m.iter_mut().zip(atom) {
                *mi += w * x;
            }
        }
        m
    }

    pub fn is_unit_mean(&self, tol: f64) -> bool {
        self.means().iter().all(|m| (m - 1.0).abs() <= tol)
    }

    /// Divides each coordinate by its mean.
    pub fn normalize_to_unit_mean(&self) -> Result<Self> {
        let means = self.means();
        if means.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Domain("frailty coordinate has zero mean".into()));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| a.iter().zip(&means).map(|(x, m)| x / m).collect())
            .collect();
        Ok(Self {
            atoms,
            weights: self.weights.clone(),
        })
    }

    fn check_argument(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.dim() {
            return Err(Error::Index(format!(
                "argument has length {}, law has dimension {}",
                s.len(),
                self.dim()
            )));
        }
        if s.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Domain(format!("Laplace argument must be nonnegative: {s:?}")));
        }
        Ok(())
    }

    /// Laplace–Stieltjes transform `E[exp(-⟨s, ε⟩)]`.
    pub fn lst(&self, s: &[f64]) -> Result<f64> {
        self.check_argument(s)?;
        Ok(self
            .atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| w * (-dot(s, a)).exp())
            .sum())
    }

    /// `E[ε_coord · exp(-⟨s, ε⟩)]`.
    pub fn tilted_mean(&self, coord: usize, s: &[f64]) -> Result<f64> {
        if coord >= self.dim() {
            return Err(Error::Index(format!(
                "coordinate {coord} out of range for dimension {}",
                self.dim()
            )));
        }
        self.check_argument(s)?;
        Ok(self
            .atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| w * a[coord] * (-dot(s, a)).exp())
            .sum())
    }

    /// Law of the projection onto `coords`, merging coincident atoms.
    pub fn marginal(&self, coords: &[usize]) -> Result<DiscreteLaw> {
        if coords.is_empty() {
            return Err(Error::InvalidSpec("marginal needs at least one coordinate".into()));
        }
        if let Some(&c) = coords.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::Index(format!("coordinate {c} out of range for dimension {}", self.dim())));
        }
        let mut atoms: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (atom, w) in self.atoms.iter().zip(&self.weights) {
            let proj: Vec<f64> = coords.iter().map(|&c| atom[c]).collect();
            match atoms.iter().position(|a| same_atom(a, &proj, MERGE_TOL)) {
                Some(i) => weights[i] += w,
                None => {
                    atoms.push(proj);
                    weights.push(*w);
                }
            }
        }
        Ok(DiscreteLaw { atoms, weights })
    }

    /// Atoms sorted lexicographically with duplicates merged.
    pub fn canonical(&self) -> DiscreteLaw {
        let mut pairs: Vec<(Vec<f64>, f64)> = self
            .atoms
            .iter()
            .cloned()
            .zip(self.weights.iter().copied())
            .collect();
        // weight breaks ties so duplicates always merge in the same order
        pairs.sort_by(|a, b| lex_cmp(&a.0, &b.0).then(a.1.total_cmp(&b.1)));
        let mut atoms: Vec<Vec<f64>> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (atom, w) in pairs {
            match atoms.last() {
                Some(last) if same_atom(last, &atom, MERGE_TOL) => *weights.last_mut().unwrap() += w,
                _ => {
                    atoms.push(atom);
                    weights.push(w);
                }
            }
        }
        DiscreteLaw { atoms, weights }
    }

    /// Equality of canonical forms, coordinatewise within `tol`.
    pub fn approx_eq(&self, other: &DiscreteLaw, tol: f64) -> bool {
        let (a, b) = (self.canonical(), other.canonical());
        a.len() == b.len()
            && a.atoms.iter().zip(&b.atoms).all(|(x, y)| same_atom(x, y, tol))
            && a.weights.iter().zip(&b.weights).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// `n` i.i.d. atom indices drawn by weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        let dist = WeightedIndex::new(&self.weights).expect("weights validated at construction");
        (0..n).map(|_| dist.sample(rng)).collect()
    }

    pub(crate) fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.weights).expect("weights validated at construction")
    }
}

#[derive(Serialize, Deserialize)]
struct RawFrailty {
    structure: FrailtyStructure,
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    assert_mean_one: bool,
}

/// A discrete frailty law attached to a dependence structure.
///
/// Deserialization rescales to unit means unless the document sets
/// `"assert_mean_one": true`, in which case off-mean input is rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFrailty", into = "RawFrailty")]
pub struct DiscreteFrailty {
    structure: FrailtyStructure,
    law: DiscreteLaw,
}

impl TryFrom<RawFrailty> for DiscreteFrailty {
    type Error = Error;

    fn try_from(raw: RawFrailty) -> Result<Self> {
        let g = DiscreteFrailty::new(raw.structure, raw.atoms, raw.weights)?;
        if raw.assert_mean_one {
            if !g.law.is_unit_mean(UNIT_MEAN_TOL) {
                return Err(Error::InvalidSpec(format!(
                    "frailty means are {:?}, expected all 1",
                    g.law.means()
                )));
            }
            Ok(g)
        } else {
            g.normalize_to_unit_mean()
        }
    }
}

impl From<DiscreteFrailty> for RawFrailty {
    fn from(g: DiscreteFrailty) -> Self {
        RawFrailty {
            structure: g.structure,
            atoms: g.law.atoms,
            weights: g.law.weights,
            assert_mean_one: false,
        }
    }
}

impl DiscreteFrailty {
    /// Builds a frailty law as given (no mean rescaling).
    pub fn new(structure: FrailtyStructure, atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let law = DiscreteLaw::new(atoms, weights)?;
        Self::from_law(structure, law)
    }

    pub fn from_law(structure: FrailtyStructure, law: DiscreteLaw) -> Result<Self> {
        if law.dim() != structure.dim() {
            return Err(Error::StructureMismatch(format!(
                "{} structure needs {}-dimensional atoms, got {}",
                structure.kind().name(),
                structure.dim(),
                law.dim()
            )));
        }
        Ok(Self { structure, law })
    }

    /// Point mass at `(1, …, 1)`: no heterogeneity and no dependence.
    pub fn degenerate(structure: FrailtyStructure) -> Self {
        let law = DiscreteLaw::point_mass(vec![1.0; structure.dim()]).expect("unit atom is valid");
        Self { structure, law }
    }

    pub fn structure(&self) -> FrailtyStructure {
        self.structure
    }

    pub fn law(&self) -> &DiscreteLaw {
        &self.law
    }

    pub fn into_law(self) -> DiscreteLaw {
        self.law
    }

    pub fn dim(&self) -> usize {
        self.law.dim()
    }

    pub fn len(&self) -> usize {
        self.law.len()
    }

    pub fn is_empty(&self) -> bool {
        self.law.is_empty()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        self.law.atoms()
    }

    pub fn weights(&self) -> &[f64] {
        self.law.weights()
    }

    pub fn is_unit_mean(&self) -> bool {
        self.law.is_unit_mean(UNIT_MEAN_TOL)
    }

    pub fn normalize_to_unit_mean(&self) -> Result<Self> {
        Ok(Self {
            structure: self.structure,
            law: self.law.normalize_to_unit_mean()?,
        })
    }

    pub fn lst(&self, s: &[f64]) -> Result<f64> {
        self.law.lst(s)
    }

    pub fn tilted_mean(&self, coord: usize, s: &[f64]) -> Result<f64> {
        self.law.tilted_mean(coord, s)
    }

    pub fn marginal(&self, coords: &[usize]) -> Result<DiscreteLaw> {
        self.law.marginal(coords)
    }

    /// Per-cause multipliers of both individuals at atom `w`.
    pub fn expand_to_pair(&self, w: usize) -> Result<PairFrailty> {
        let atom = self
            .law
            .atoms
            .get(w)
            .ok_or_else(|| Error::Index(format!("atom {w} out of range ({} atoms)", self.len())))?;
        Ok(self.structure.expand_atom(atom))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        self.law.sample(rng, n)
    }

    /// Multiplies every atom coordinate by `c` (leaves the unit-mean manifold).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let atoms = self
            .law
            .atoms
            .iter()
            .map(|a| a.iter().map(|x| x * c).collect())
            .collect();
        Self::new(self.structure, atoms, self.law.weights.clone())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn same_atom(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}
