//! Conditional and unconditional survival, sub-density and sub-distribution
//! functions of a bivariate competing-risks frailty model.
//!
//! Individuals are indexed `k ∈ {0, 1}` and causes `j ∈ 0..L_k` throughout
//! the library API. File formats use 1-based cause labels.
//!
//! Unconditional quantities are finite mixtures over the frailty atoms. Joint
//! sub-distributions are evaluated factor-then-mix: one-dimensional integrals
//! per atom and individual, multiplied inside the mixture (the two failure
//! processes are independent given the frailty).

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::frailty::{DiscreteFrailty, FrailtyStructure, PairFrailty};
use crate::hazards::HazardSpec;
use crate::quadrature::integrate;
use crate::roots;

pub use crate::quadrature::QuadratureConfig;

/// Conditional cumulative hazard every atom must exceed at `t_big`.
pub const TAIL_CUMULATIVE_HAZARD: f64 = 40.0;

/// Baseline hazards of both individuals, one per cause.
#[derive(Debug, Clone, PartialEq)]
pub struct PairHazards {
    first: Vec<HazardSpec>,
    second: Vec<HazardSpec>,
}

impl PairHazards {
    pub fn new(first: Vec<HazardSpec>, second: Vec<HazardSpec>) -> Result<Self> {
        if first.is_empty() || second.is_empty() {
            return Err(Error::InvalidSpec("each individual needs at least one cause hazard".into()));
        }
        Ok(Self { first, second })
    }

    /// Same hazards for both individuals.
    pub fn symmetric(hazards: Vec<HazardSpec>) -> Result<Self> {
        Self::new(hazards.clone(), hazards)
    }

    pub fn individual(&self, k: usize) -> &[HazardSpec] {
        if k == 0 {
            &self.first
        } else {
            &self.second
        }
    }

    pub fn individual_mut(&mut self, k: usize) -> &mut Vec<HazardSpec> {
        if k == 0 {
            &mut self.first
        } else {
            &mut self.second
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &HazardSpec)> {
        self.first
            .iter()
            .enumerate()
            .map(|(j, h)| (0, j, h))
            .chain(self.second.iter().enumerate().map(|(j, h)| (1, j, h)))
    }
}

impl Serialize for PairHazards {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = BTreeMap::new();
        map.insert("1", &self.first);
        map.insert("2", &self.second);
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PairHazards {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let mut map: BTreeMap<String, Vec<HazardSpec>> = BTreeMap::deserialize(deserializer)?;
        let first = map.remove("1").ok_or_else(|| serde::de::Error::missing_field("1"))?;
        let second = map.remove("2").ok_or_else(|| serde::de::Error::missing_field("2"))?;
        if let Some(extra) = map.keys().next() {
            return Err(serde::de::Error::custom(format!("unexpected individual key `{extra}`")));
        }
        PairHazards::new(first, second).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    structure: FrailtyStructure,
    hazards: PairHazards,
    frailty: DiscreteFrailty,
}

/// A full model point: structure, baseline hazards and frailty law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ModelSpec {
    structure: FrailtyStructure,
    hazards: PairHazards,
    frailty: DiscreteFrailty,
}

impl TryFrom<RawModel> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        ModelSpec::new(raw.structure, raw.hazards, raw.frailty)
    }
}

impl From<ModelSpec> for RawModel {
    fn from(m: ModelSpec) -> Self {
        RawModel {
            structure: m.structure,
            hazards: m.hazards,
            frailty: m.frailty,
        }
    }
}

impl ModelSpec {
    /// Builds a model whose frailty coordinates all have mean one.
    pub fn new(structure: FrailtyStructure, hazards: PairHazards, frailty: DiscreteFrailty) -> Result<Self> {
        let m = Self::unconstrained(structure, hazards, frailty)?;
        if !m.frailty.is_unit_mean() {
            return Err(Error::InvalidSpec(format!(
                "frailty means are {:?}, expected all 1",
                m.frailty.law().means()
            )));
        }
        Ok(m)
    }

    /// Builds a model without the unit-mean requirement on the frailty.
    pub fn unconstrained(structure: FrailtyStructure, hazards: PairHazards, frailty: DiscreteFrailty) -> Result<Self> {
        if frailty.structure() != structure {
            return Err(Error::StructureMismatch(format!(
                "model structure {structure:?} but frailty structure {:?}",
                frailty.structure()
            )));
        }
        for k in 0..2 {
            let got = hazards.individual(k).len();
            if got != structure.causes(k) {
                return Err(Error::InvalidSpec(format!(
                    "individual {} has {} causes but {got} hazards",
                    k + 1,
                    structure.causes(k)
                )));
            }
        }
        Ok(Self {
            structure,
            hazards,
            frailty,
        })
    }

    pub fn structure(&self) -> FrailtyStructure {
        self.structure
    }

    pub fn hazards(&self) -> &PairHazards {
        &self.hazards
    }

    pub fn frailty(&self) -> &DiscreteFrailty {
        &self.frailty
    }

    pub fn hazard(&self, k: usize, j: usize) -> Result<&HazardSpec> {
        self.check_index(k, j)?;
        Ok(&self.hazards.individual(k)[j])
    }

    pub fn causes(&self, k: usize) -> usize {
        self.structure.causes(k)
    }

    /// Same structure and hazards with a different frailty law (unit mean
    /// not enforced).
    pub fn with_frailty(&self, frailty: DiscreteFrailty) -> Result<Self> {
        Self::unconstrained(self.structure, self.hazards.clone(), frailty)
    }

    pub fn with_hazards(&self, hazards: PairHazards) -> Result<Self> {
        Self::unconstrained(self.structure, hazards, self.frailty.clone())
    }

    pub fn pair_frailty(&self, w: usize) -> Result<PairFrailty> {
        self.frailty.expand_to_pair(w)
    }

    fn check_index(&self, k: usize, j: usize) -> Result<()> {
        if k > 1 {
            return Err(Error::Index(format!("individual {k} (expected 0 or 1)")));
        }
        if j >= self.causes(k) {
            return Err(Error::Index(format!(
                "cause {j} for individual {k} ({} causes)",
                self.causes(k)
            )));
        }
        Ok(())
    }

    fn check_pair(&self, pair: &PairFrailty) -> Result<()> {
        if pair.first.len() != self.causes(0) || pair.second.len() != self.causes(1) {
            return Err(Error::Index("pair frailty does not match the cause counts".into()));
        }
        Ok(())
    }

    /// Per-cause baseline cumulative hazards of individual `k` at `t`.
    pub fn cumulative_hazards(&self, k: usize, t: f64) -> Vec<f64> {
        self.hazards.individual(k).iter().map(|h| h.cumulative(t)).collect()
    }

    fn exponent(&self, k: usize, t: f64, eps: &[f64]) -> f64 {
        self.hazards
            .individual(k)
            .iter()
            .zip(eps)
            .map(|(h, e)| e * h.cumulative(t))
            .sum()
    }

    /// `h_kj(t) · ε_kj`.
    pub fn conditional_hazard(&self, k: usize, j: usize, t: f64, pair: &PairFrailty) -> Result<f64> {
        self.check_index(k, j)?;
        self.check_pair(pair)?;
        Ok(self.hazards.individual(k)[j].hazard_rate(t)? * pair.individual(k)[j])
    }

    /// `exp(-Σ_j ε_kj H_kj(t))`.
    pub fn conditional_survival(&self, k: usize, t: f64, pair: &PairFrailty) -> Result<f64> {
        self.check_index(k, 0)?;
        self.check_pair(pair)?;
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        Ok((-self.exponent(k, t, pair.individual(k))).exp())
    }

    /// `P(T_k <= t, J_k = j | ε)` by adaptive quadrature.
    pub fn conditional_sub_distribution(
        &self,
        k: usize,
        j: usize,
        t: f64,
        pair: &PairFrailty,
        q: &QuadratureConfig,
    ) -> Result<f64> {
        self.check_index(k, j)?;
        self.check_pair(pair)?;
        Ok(self.sub_distribution_path(k, j, pair.individual(k), &[t], q)?[0])
    }

    /// Conditional sub-distribution at every time in `ts` (any order).
    pub fn conditional_sub_distribution_grid(
        &self,
        k: usize,
        j: usize,
        ts: &[f64],
        pair: &PairFrailty,
        q: &QuadratureConfig,
    ) -> Result<Vec<f64>> {
        self.check_index(k, j)?;
        self.check_pair(pair)?;
        self.sub_distribution_path(k, j, pair.individual(k), ts, q)
    }

    fn sub_distribution_path(&self, k: usize, j: usize, eps: &[f64], ts: &[f64], q: &QuadratureConfig) -> Result<Vec<f64>> {
        q.validate()?;
        if let Some(t) = ts.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        let mut order: Vec<usize> = (0..ts.len()).collect();
        order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));

        let hazards = self.hazards.individual(k);
        let target = &hazards[j];
        let ln_eps = eps[j].ln();
        let scale = self.time_scale(k);
        let power = 1.0 / target.gamma().min(1.0);

        let ln_integrand = |ln_u: f64| -> f64 {
            let u = ln_u.exp();
            let expo: f64 = hazards.iter().zip(eps).map(|(h, e)| e * h.cumulative(u)).sum();
            ln_eps + target.ln_rate_log(ln_u) - expo
        };

        let mut out = vec![0.0; ts.len()];
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &i in &order {
            let t = ts[i];
            if t > prev {
                acc += integrate_time(&ln_integrand, prev, t, scale, power, q)?;
                prev = t;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Boundary between the power-substituted and log-substituted pieces
    /// of a time integral for individual `k`.
    fn time_scale(&self, k: usize) -> f64 {
        self.hazards
            .individual(k)
            .iter()
            .filter_map(|h| h.inverse_cumulative_hazard(1.0).ok())
            .fold(f64::INFINITY, f64::min)
    }

    /// Unconditional sub-density `f_kj(t)` as an exact atom sum.
    pub fn marginal_sub_density(&self, k: usize, j: usize, t: f64) -> Result<f64> {
        self.check_index(k, j)?;
        let h = self.hazards.individual(k)[j].hazard_rate(t)?;
        let mut total = 0.0;
        for (w, p) in self.frailty.weights().iter().enumerate() {
            let pair = self.frailty.expand_to_pair(w)?;
            let eps = pair.individual(k);
            total += p * h * eps[j] * (-self.exponent(k, t, eps)).exp();
        }
        Ok(total)
    }

    /// The same sub-density through the frailty law's tilted mean:
    /// `h_kj(t) · E[ε_coord exp(-⟨s(t), ε⟩)]`.
    pub fn marginal_sub_density_via_tilted_mean(&self, k: usize, j: usize, t: f64) -> Result<f64> {
        self.check_index(k, j)?;
        let h = self.hazards.individual(k)[j].hazard_rate(t)?;
        let s = self.marginal_laplace_argument(k, t);
        Ok(h * self.frailty.tilted_mean(self.structure.coord(k, j), &s)?)
    }

    /// Laplace argument of individual `k` alone at time `t`.
    pub fn marginal_laplace_argument(&self, k: usize, t: f64) -> Vec<f64> {
        let hk = self.cumulative_hazards(k, t);
        let zeros = vec![0.0; self.causes(1 - k)];
        if k == 0 {
            self.structure.laplace_argument(&hk, &zeros)
        } else {
            self.structure.laplace_argument(&zeros, &hk)
        }
    }

    /// Unconditional `P(T_k <= t, J_k = j)`.
    pub fn marginal_sub_distribution(&self, k: usize, j: usize, t: f64, q: &QuadratureConfig) -> Result<f64> {
        Ok(self.marginal_sub_distribution_grid(k, j, &[t], q)?[0])
    }

    pub fn marginal_sub_distribution_grid(&self, k: usize, j: usize, ts: &[f64], q: &QuadratureConfig) -> Result<Vec<f64>> {
        self.check_index(k, j)?;
        let mut out = vec![0.0; ts.len()];
        for (w, p) in self.frailty.weights().iter().enumerate() {
            let pair = self.frailty.expand_to_pair(w)?;
            let f = self.sub_distribution_path(k, j, pair.individual(k), ts, q)?;
            for (o, v) in out.iter_mut().zip(f) {
                *o += p * v;
            }
        }
        Ok(out)
    }

    /// Unconditional marginal survival `P(T_k > t)`.
    pub fn marginal_survival(&self, k: usize, t: f64) -> Result<f64> {
        self.check_index(k, 0)?;
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        let mut total = 0.0;
        for (w, p) in self.frailty.weights().iter().enumerate() {
            let pair = self.frailty.expand_to_pair(w)?;
            total += p * (-self.exponent(k, t, pair.individual(k))).exp();
        }
        Ok(total)
    }

    /// `F_{j1 j2}(t1, t2) = P(T_1 <= t1, T_2 <= t2, J_1 = j1, J_2 = j2)`.
    pub fn joint_sub_distribution(&self, j1: usize, j2: usize, t1: f64, t2: f64, q: &QuadratureConfig) -> Result<f64> {
        self.check_index(0, j1)?;
        self.check_index(1, j2)?;
        let mut total = 0.0;
        for (w, p) in self.frailty.weights().iter().enumerate() {
            let pair = self.frailty.expand_to_pair(w)?;
            let f1 = self.sub_distribution_path(0, j1, &pair.first, &[t1], q)?[0];
            let f2 = self.sub_distribution_path(1, j2, &pair.second, &[t2], q)?[0];
            total += p * f1 * f2;
        }
        Ok(total)
    }

    /// All joint sub-distributions on the product grid `t1s × t2s`.
    pub fn joint_sub_distribution_grid(&self, t1s: &[f64], t2s: &[f64], q: &QuadratureConfig) -> Result<SubDistributionGrid> {
        let (l1, l2) = (self.causes(0), self.causes(1));
        let (n1, n2) = (t1s.len(), t2s.len());
        let mut values = vec![0.0; l1 * l2 * n1 * n2];
        for (w, p) in self.frailty.weights().iter().enumerate() {
            let pair = self.frailty.expand_to_pair(w)?;
            let f1: Vec<Vec<f64>> = (0..l1)
                .map(|j| self.sub_distribution_path(0, j, &pair.first, t1s, q))
                .collect::<Result<_>>()?;
            let f2: Vec<Vec<f64>> = (0..l2)
                .map(|j| self.sub_distribution_path(1, j, &pair.second, t2s, q))
                .collect::<Result<_>>()?;
            for j1 in 0..l1 {
                for j2 in 0..l2 {
                    let base = (j1 * l2 + j2) * n1 * n2;
                    for i1 in 0..n1 {
                        let a = p * f1[j1][i1];
                        for i2 in 0..n2 {
                            values[base + i1 * n2 + i2] += a * f2[j2][i2];
                        }
                    }
                }
            }
        }
        Ok(SubDistributionGrid {
            t1: t1s.to_vec(),
            t2: t2s.to_vec(),
            l1,
            l2,
            values,
        })
    }

    /// `ln f_{j1 j2}(t1, t2)` via log-sum-exp over atoms.
    pub fn ln_joint_sub_density(&self, j1: usize, j2: usize, t1: f64, t2: f64) -> Result<f64> {
        self.check_index(0, j1)?;
        self.check_index(1, j2)?;
        if !(t1 > 0.0 && t2 > 0.0) {
            return Err(Error::Domain(format!("joint sub-density needs positive times, got ({t1}, {t2})")));
        }
        let h1 = &self.hazards.individual(0)[j1];
        let h2 = &self.hazards.individual(1)[j2];
        let base = h1.ln_rate(t1) + h2.ln_rate(t2);
        let terms: Vec<f64> = self
            .frailty
            .weights()
            .iter()
            .enumerate()
            .map(|(w, p)| {
                let pair = self.frailty.expand_to_pair(w).expect("index in range");
                p.ln() + pair.first[j1].ln() + pair.second[j2].ln()
                    - self.exponent(0, t1, &pair.first)
                    - self.exponent(1, t2, &pair.second)
            })
            .collect();
        Ok(base + log_sum_exp(&terms))
    }

    /// Unconditional joint sub-density as an exact atom sum.
    pub fn joint_sub_density(&self, j1: usize, j2: usize, t1: f64, t2: f64) -> Result<f64> {
        Ok(self.ln_joint_sub_density(j1, j2, t1, t2)?.exp())
    }

    /// `P(T_1 > t1, T_2 > t2)` as an atom sum of conditional survival products.
    pub fn joint_survival(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t1 >= 0.0 && t2 >= 0.0) {
            return Err(Error::Domain(format!("times must be nonnegative, got ({t1}, {t2})")));
        }
        let mut total = 0.0;
        for (w, p) in self.frailty.weights().iter().enumerate() {
            let pair = self.frailty.expand_to_pair(w)?;
            total += p * (-self.exponent(0, t1, &pair.first) - self.exponent(1, t2, &pair.second)).exp();
        }
        Ok(total)
    }

    /// Joint survival through the frailty Laplace transform.
    pub fn joint_survival_via_lst(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t1 >= 0.0 && t2 >= 0.0) {
            return Err(Error::Domain(format!("times must be nonnegative, got ({t1}, {t2})")));
        }
        let s = self
            .structure
            .laplace_argument(&self.cumulative_hazards(0, t1), &self.cumulative_hazards(1, t2));
        self.frailty.lst(&s)
    }

    /// Smallest time at which every atom's conditional cumulative hazard
    /// for individual `k` reaches [`TAIL_CUMULATIVE_HAZARD`].
    pub fn t_big(&self, k: usize) -> Result<f64> {
        self.check_index(k, 0)?;
        let pairs: Vec<PairFrailty> = (0..self.frailty.len())
            .map(|w| self.frailty.expand_to_pair(w))
            .collect::<Result<_>>()?;
        let g = |t: f64| {
            pairs
                .iter()
                .map(|p| self.exponent(k, t, p.individual(k)))
                .fold(f64::INFINITY, f64::min)
        };
        let guess = self
            .hazards
            .individual(k)
            .iter()
            .filter_map(|h| h.inverse_cumulative_hazard(TAIL_CUMULATIVE_HAZARD).ok())
            .fold(f64::INFINITY, f64::min);
        let t = roots::solve_increasing(g, TAIL_CUMULATIVE_HAZARD, guess, 1e-12)?;
        // land on the far side of the threshold
        Ok(t * (1.0 + 1e-9))
    }
}

/// Joint sub-distribution values on a product grid, for every cause pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDistributionGrid {
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub l1: usize,
    pub l2: usize,
    values: Vec<f64>,
}

impl SubDistributionGrid {
    pub fn get(&self, j1: usize, j2: usize, i1: usize, i2: usize) -> f64 {
        let (n1, n2) = (self.t1.len(), self.t2.len());
        self.values[(j1 * self.l2 + j2) * n1 * n2 + i1 * n2 + i2]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_shape(&self, other: &SubDistributionGrid) -> bool {
        self.l1 == other.l1 && self.l2 == other.l2 && self.t1 == other.t1 && self.t2 == other.t2
    }
}

/// `∫_a^b exp(ln_f(ln u)) du` split at `scale`: power substitution
/// `u = v^power` below it (absorbs `u^(γ-1)` singularities), log-time
/// substitution above it when the range is wide.
fn integrate_time<F: Fn(f64) -> f64>(
    ln_f: &F,
    a: f64,
    b: f64,
    scale: f64,
    power: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    let mut total = 0.0;
    let split = scale.clamp(a, b);
    if split > a {
        let (va, vb) = (a.powf(1.0 / power), split.powf(1.0 / power));
        let ln_power = power.ln();
        let r = integrate(
            |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                let ln_v = v.ln();
                (ln_f(power * ln_v) + ln_power + (power - 1.0) * ln_v).exp()
            },
            va,
            vb,
            q,
        )?;
        total += r.value;
    }
    if b > split {
        let lo = split.max(a);
        if lo > 0.0 && b / lo > 2.0 {
            let r = integrate(|x: f64| (ln_f(x) + x).exp(), lo.ln(), b.ln(), q)?;
            total += r.value;
        } else {
            let r = integrate(|u: f64| if u > 0.0 { ln_f(u.ln()).exp() } else { 0.0 }, lo, b, q)?;
            total += r.value;
        }
    }
    Ok(total)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frailty::FrailtyKind;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn structure(kind: FrailtyKind, l1: usize, l2: usize) -> FrailtyStructure {
        FrailtyStructure::new(kind, l1, l2).unwrap()
    }

    fn exp_model(alphas: &[f64], atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> ModelSpec {
        let l = alphas.len();
        let s = structure(FrailtyKind::Shared, l, l);
        let hz: Vec<HazardSpec> = alphas.iter().map(|&a| HazardSpec::exponential(a).unwrap()).collect();
        let g = DiscreteFrailty::new(s, atoms, weights).unwrap();
        ModelSpec::new(s, PairHazards::symmetric(hz).unwrap(), g).unwrap()
    }

    fn two_atom_weibull() -> ModelSpec {
        let s = structure(FrailtyKind::Shared, 2, 2);
        let hz = vec![HazardSpec::weibull(1.5, 0.5).unwrap(), HazardSpec::weibull(0.8, 1.0).unwrap()];
        let g = DiscreteFrailty::new(s, vec![vec![0.6], vec![1.4]], vec![0.5, 0.5]).unwrap();
        ModelSpec::new(s, PairHazards::symmetric(hz).unwrap(), g).unwrap()
    }

    #[test]
    fn construction_checks() {
        let s = structure(FrailtyKind::Shared, 2, 2);
        let hz = PairHazards::symmetric(vec![HazardSpec::exponential(1.0).unwrap()]).unwrap();
        assert!(ModelSpec::new(s, hz, DiscreteFrailty::degenerate(s)).is_err());
        let hz = PairHazards::symmetric(vec![HazardSpec::exponential(1.0).unwrap(); 2]).unwrap();
        let off = DiscreteFrailty::new(s, vec![vec![2.0]], vec![1.0]).unwrap();
        assert!(ModelSpec::new(s, hz.clone(), off.clone()).is_err());
        assert!(ModelSpec::unconstrained(s, hz.clone(), off).is_ok());
        let other = structure(FrailtyKind::Correlated, 2, 2);
        assert!(matches!(
            ModelSpec::new(s, hz, DiscreteFrailty::degenerate(other)),
            Err(Error::StructureMismatch(_))
        ));
    }

    #[test]
    fn conditional_hazard_examples() {
        let m = two_atom_weibull();
        let unit = PairFrailty::unit(2, 2);
        for j in 0..2 {
            let expect = m.hazard(0, j).unwrap().hazard_rate(0.7).unwrap();
            assert_eq!(m.conditional_hazard(0, j, 0.7, &unit).unwrap(), expect);
        }

        let s = structure(FrailtyKind::Shared, 1, 1);
        let hz = PairHazards::symmetric(vec![HazardSpec::weibull(2.0, 1.0).unwrap()]).unwrap();
        let g = DiscreteFrailty::new(s, vec![vec![2.0]], vec![1.0]).unwrap();
        let m = ModelSpec::unconstrained(s, hz, g).unwrap();
        let pair = m.pair_frailty(0).unwrap();
        assert!((m.conditional_hazard(0, 0, 1.0, &pair).unwrap() - 4.0).abs() < 1e-14);

        let s = structure(FrailtyKind::CorrelatedCauseSpecific, 2, 2);
        let hz = PairHazards::symmetric(vec![HazardSpec::exponential(0.4).unwrap(), HazardSpec::weibull(2.0, 1.0).unwrap()]).unwrap();
        let g = DiscreteFrailty::new(s, vec![vec![1.0, 1.0, 0.5, 1.0]], vec![1.0]).unwrap();
        let m = ModelSpec::unconstrained(s, hz, g).unwrap();
        let pair = m.pair_frailty(0).unwrap();
        for t in [0.1, 1.0, 9.0] {
            assert!((m.conditional_hazard(1, 0, t, &pair).unwrap() - 0.2).abs() < 1e-15);
        }
        assert!(matches!(m.conditional_hazard(2, 0, 1.0, &pair), Err(Error::Index(_))));
        assert!(matches!(m.conditional_hazard(0, 2, 1.0, &pair), Err(Error::Index(_))));
    }

    #[test]
    fn conditional_survival_examples() {
        let m = exp_model(&[0.3, 0.7], vec![vec![1.0]], vec![1.0]);
        let unit = PairFrailty::unit(2, 2);
        assert_eq!(m.conditional_survival(0, 0.0, &unit).unwrap(), 1.0);
        let s1 = m.conditional_survival(0, 2.0, &unit).unwrap();
        assert!((s1 - (-2f64).exp()).abs() < 1e-15);
        let double = PairFrailty { first: vec![2.0, 2.0], second: vec![2.0, 2.0] };
        let s2 = m.conditional_survival(0, 2.0, &double).unwrap();
        assert!((s2.ln() - 2.0 * s1.ln()).abs() < 1e-13);
    }

    #[test]
    fn conditional_sub_distribution_examples() {
        let m = exp_model(&[0.3, 0.7], vec![vec![1.0]], vec![1.0]);
        let unit = PairFrailty::unit(2, 2);
        assert_eq!(m.conditional_sub_distribution(0, 0, 0.0, &unit, &q()).unwrap(), 0.0);
        for t in [0.5, 2.0, 10.0, 200.0] {
            let f = m.conditional_sub_distribution(0, 0, t, &unit, &q()).unwrap();
            let expect = 0.3 * (1.0 - (-t).exp());
            assert!((f - expect).abs() < 1e-11, "t={t}: {f} vs {expect}");
        }

        // single cause: F = 1 - exp(-H)
        for spec in [
            HazardSpec::weibull(0.4, 1.3).unwrap(),
            HazardSpec::gamma_hazard(0.6, 2.0).unwrap(),
            HazardSpec::gamma_hazard(3.0, 0.5).unwrap(),
            HazardSpec::log_logistic(0.7, 0.9).unwrap(),
            HazardSpec::log_logistic(2.5, 0.3).unwrap(),
        ] {
            let s = structure(FrailtyKind::Shared, 1, 1);
            let m = ModelSpec::new(s, PairHazards::symmetric(vec![spec]).unwrap(), DiscreteFrailty::degenerate(s)).unwrap();
            let unit = PairFrailty::unit(1, 1);
            for t in [1e-3, 0.2, 1.0, 4.0, 50.0] {
                let f = m.conditional_sub_distribution(0, 0, t, &unit, &q()).unwrap();
                let expect = -(-spec.cumulative(t)).exp_m1();
                assert!((f - expect).abs() < 1e-9 * expect.max(1e-3), "{spec:?} t={t}: {f} vs {expect}");
            }
        }
    }

    #[test]
    fn grid_path_matches_pointwise() {
        let m = two_atom_weibull();
        let pair = m.pair_frailty(1).unwrap();
        let ts = [3.0, 0.1, 1.0, 0.0, 1.0];
        let grid = m.conditional_sub_distribution_grid(1, 1, &ts, &pair, &q()).unwrap();
        for (t, g) in ts.iter().zip(&grid) {
            let p = m.conditional_sub_distribution(1, 1, *t, &pair, &q()).unwrap();
            assert!((g - p).abs() < 1e-10);
        }
        assert!(m.conditional_sub_distribution_grid(0, 0, &[-1.0], &pair, &q()).is_err());
    }

    #[test]
    fn marginal_sub_density_examples() {
        let m = exp_model(&[1.0], vec![vec![1.0]], vec![1.0]);
        assert!((m.marginal_sub_density(0, 0, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-16);

        let m = exp_model(&[1.0], vec![vec![0.5], vec![1.5]], vec![0.5, 0.5]);
        let f = m.marginal_sub_density(0, 0, 1.0).unwrap();
        assert!((f - 0.5 * (0.5 * (-0.5f64).exp() + 1.5 * (-1.5f64).exp())).abs() < 1e-16);
        assert!((f - 0.318_980).abs() < 1e-6);
    }

    #[test]
    fn sub_density_routes_agree() {
        let m = two_atom_weibull();
        for k in 0..2 {
            for j in 0..2 {
                for t in [0.01, 0.3, 1.0, 5.0] {
                    let a = m.marginal_sub_density(k, j, t).unwrap();
                    let b = m.marginal_sub_density_via_tilted_mean(k, j, t).unwrap();
                    assert!((a - b).abs() <= 1e-14 * a.max(1e-300));
                }
            }
        }
    }

    #[test]
    fn marginal_sub_distribution_examples() {
        let m = two_atom_weibull();
        assert_eq!(m.marginal_sub_distribution(0, 0, 0.0, &q()).unwrap(), 0.0);
        let tb = m.t_big(0).unwrap();
        let total: f64 = (0..2).map(|j| m.marginal_sub_distribution(0, j, tb, &q()).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-6);

        let s = m.structure();
        let degenerate = m.with_frailty(DiscreteFrailty::degenerate(s)).unwrap();
        let unit = PairFrailty::unit(2, 2);
        let a = degenerate.marginal_sub_distribution(1, 1, 0.8, &q()).unwrap();
        let b = degenerate.conditional_sub_distribution(1, 1, 0.8, &unit, &q()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn joint_sub_distribution_examples() {
        let m = two_atom_weibull();
        assert_eq!(m.joint_sub_distribution(0, 1, 0.0, 2.0, &q()).unwrap(), 0.0);
        assert_eq!(m.joint_sub_distribution(1, 0, 2.0, 0.0, &q()).unwrap(), 0.0);

        let degenerate = m.with_frailty(DiscreteFrailty::degenerate(m.structure())).unwrap();
        let f = degenerate.joint_sub_distribution(0, 1, 0.7, 1.9, &q()).unwrap();
        let f1 = degenerate.marginal_sub_distribution(0, 0, 0.7, &q()).unwrap();
        let f2 = degenerate.marginal_sub_distribution(1, 1, 1.9, &q()).unwrap();
        assert!((f - f1 * f2).abs() < 1e-15);

        let grid = m.joint_sub_distribution_grid(&[0.3, 1.0], &[0.5, 2.0, 4.0], &q()).unwrap();
        let direct = m.joint_sub_distribution(1, 0, 1.0, 4.0, &q()).unwrap();
        assert!((grid.get(1, 0, 1, 2) - direct).abs() < 1e-12);
    }

    #[test]
    fn joint_sub_density_examples() {
        let m = two_atom_weibull();
        let degenerate = m.with_frailty(DiscreteFrailty::degenerate(m.structure())).unwrap();
        let f = degenerate.joint_sub_density(1, 0, 0.4, 1.2).unwrap();
        let g = degenerate.marginal_sub_density(0, 1, 0.4).unwrap() * degenerate.marginal_sub_density(1, 0, 1.2).unwrap();
        assert!((f - g).abs() < 1e-14 * g);

        for (j1, j2, t1, t2) in [(0, 1, 0.3, 1.7), (1, 1, 2.0, 0.5), (0, 0, 1.0, 1.0)] {
            let a = m.joint_sub_density(j1, j2, t1, t2).unwrap();
            let b = m.joint_sub_density(j2, j1, t2, t1).unwrap();
            assert!((a - b).abs() < 1e-14 * a);
        }

        // mixed second difference of F over a small rectangle
        let (t1, t2, d) = (0.8, 1.3, 1e-3);
        let f = |a, b| m.joint_sub_distribution(0, 1, a, b, &q()).unwrap();
        let diff = f(t1 + d, t2 + d) - f(t1, t2 + d) - f(t1 + d, t2) + f(t1, t2);
        let dens = m.joint_sub_density(0, 1, t1 + d / 2.0, t2 + d / 2.0).unwrap() * d * d;
        assert!((diff - dens).abs() < 0.02 * dens, "{diff} vs {dens}");
        assert!(m.joint_sub_density(0, 0, 0.0, 1.0).is_err());
    }

    #[test]
    fn joint_survival_examples() {
        let m = two_atom_weibull();
        assert_eq!(m.joint_survival(0.0, 0.0).unwrap(), 1.0);
        let (t1, t2) = (0.6, 1.1);
        let h: f64 = m.cumulative_hazards(0, t1).iter().sum::<f64>() + m.cumulative_hazards(1, t2).iter().sum::<f64>();
        let via = m.frailty().lst(&[h]).unwrap();
        assert!((m.joint_survival(t1, t2).unwrap() - via).abs() < 1e-15);

        let s = structure(FrailtyKind::Correlated, 2, 1);
        let hz = PairHazards::new(
            vec![HazardSpec::weibull(1.2, 0.5).unwrap(), HazardSpec::gamma_hazard(2.0, 1.0).unwrap()],
            vec![HazardSpec::log_logistic(1.5, 2.0).unwrap()],
        )
        .unwrap();
        let g = DiscreteFrailty::new(s, vec![vec![0.5, 1.5], vec![1.5, 0.5]], vec![0.5, 0.5]).unwrap();
        let m = ModelSpec::new(s, hz, g).unwrap();
        let s_arg = [m.cumulative_hazards(0, t1).iter().sum(), m.cumulative_hazards(1, t2).iter().sum()];
        let via = m.frailty().lst(&s_arg).unwrap();
        assert!((m.joint_survival(t1, t2).unwrap() - via).abs() < 1e-15);
        assert!((m.joint_survival_via_lst(t1, t2).unwrap() - via).abs() < 1e-15);
    }

    #[test]
    fn t_big_reaches_tail() {
        let m = two_atom_weibull();
        for k in 0..2 {
            let tb = m.t_big(k).unwrap();
            for w in 0..2 {
                let pair = m.pair_frailty(w).unwrap();
                let s = m.conditional_survival(k, tb, &pair).unwrap();
                assert!(s <= (-TAIL_CUMULATIVE_HAZARD).exp() * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let m = two_atom_weibull();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains(r#""hazards":{"1":["#));
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
