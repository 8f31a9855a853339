//! Sampling paired competing-risks observations from a model.
//!
//! Each pair draws a frailty atom, then each individual draws its failure
//! time by inverting the conditional cumulative hazard at an Exp(1) level
//! and its cause in proportion to the conditional cause-specific hazards.
//! Work is cut into fixed-size shards, each with its own ChaCha stream keyed
//! by `(seed, shard)`, so output never depends on the worker count.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frailty::PairFrailty;
use crate::model::ModelSpec;
use crate::roots::brent;

/// Pairs generated per RNG stream.
pub const SHARD_SIZE: usize = 4096;

/// Shards generated between two flushes of the output sink.
const SHARDS_PER_BATCH: usize = 64;

const ROOT_LOG_TOL: f64 = 1e-12;

/// One pair `(T1, J1, T2, J2)` with event indicators.
///
/// Cause labels are 1-based; `0` marks a censored time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateObservation {
    pub t1: f64,
    pub j1: usize,
    pub d1: bool,
    pub t2: f64,
    pub j2: usize,
    pub d2: bool,
    /// Frailty atom (0-based) behind this pair, kept only in debug runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<usize>,
}

impl BivariateObservation {
    pub fn time(&self, k: usize) -> f64 {
        if k == 0 {
            self.t1
        } else {
            self.t2
        }
    }

    /// 1-based cause, or 0 when censored.
    pub fn cause(&self, k: usize) -> usize {
        if k == 0 {
            self.j1
        } else {
            self.j2
        }
    }

    pub fn is_complete(&self) -> bool {
        self.d1 && self.d2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_pairs: usize,
    pub seed: u64,
    /// Rate of an independent exponential censoring time per individual;
    /// zero disables censoring.
    #[serde(default)]
    pub censoring_rate: f64,
    /// Record the frailty atom of each pair.
    #[serde(default)]
    pub record_atom: bool,
}

impl SimConfig {
    pub fn new(n_pairs: usize, seed: u64) -> Self {
        Self { n_pairs, seed, censoring_rate: 0.0, record_atom: false }
    }

    pub fn with_censoring(mut self, rate: f64) -> Self {
        self.censoring_rate = rate;
        self
    }

    pub fn with_atoms(mut self) -> Self {
        self.record_atom = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.censoring_rate >= 0.0 && self.censoring_rate.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "censoring rate must be finite and nonnegative, got {}",
                self.censoring_rate
            )));
        }
        Ok(())
    }
}

/// Precomputed atom sampler and per-atom pair frailties.
struct Sampler<'a> {
    model: &'a ModelSpec,
    atoms: WeightedIndex<f64>,
    pairs: Vec<PairFrailty>,
}

impl<'a> Sampler<'a> {
    fn new(model: &'a ModelSpec) -> Result<Self> {
        let pairs = (0..model.frailty().len())
            .map(|w| model.pair_frailty(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, atoms: model.frailty().law().sampler(), pairs })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, censoring_rate: f64, record_atom: bool) -> Result<BivariateObservation> {
        let w = self.atoms.sample(rng);
        let pair = &self.pairs[w];
        let (t1, j1, d1) = self.individual(rng, 0, pair.individual(0), censoring_rate)?;
        let (t2, j2, d2) = self.individual(rng, 1, pair.individual(1), censoring_rate)?;
        Ok(BivariateObservation { t1, j1, d1, t2, j2, d2, atom: record_atom.then_some(w) })
    }

    fn individual<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        k: usize,
        eps: &[f64],
        censoring_rate: f64,
    ) -> Result<(f64, usize, bool)> {
        let level = exp1(rng);
        let t = failure_time(self.model, k, eps, level)?;
        let j = draw_cause(self.model, k, eps, t, rng.random::<f64>());
        if censoring_rate > 0.0 {
            let c = exp1(rng) / censoring_rate;
            if c < t {
                return Ok((c, 0, false));
            }
        }
        Ok((t, j + 1, true))
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // random() lies in [0, 1), so 1 - u is in (0, 1]
    -(1.0 - rng.random::<f64>()).ln()
}

/// Solves `Σ_j ε_j H_j(t) = level`.
///
/// Each term alone reaches `level / L` no later than the smallest
/// `H_j⁻¹(level / (L ε_j))`, and reaches `level` by `H_j⁻¹(level / ε_j)`,
/// which brackets the root without search.
fn failure_time(model: &ModelSpec, k: usize, eps: &[f64], level: f64) -> Result<f64> {
    let hz = model.hazards().individual(k);
    let l = hz.len() as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::INFINITY;
    for (h, &e) in hz.iter().zip(eps) {
        lo = lo.min(h.inverse_cumulative_hazard(level / (l * e))?);
        hi = hi.min(h.inverse_cumulative_hazard(level / e)?);
    }
    if hz.len() == 1 || lo >= hi {
        return Ok(hi);
    }
    let g = |u: f64| {
        let t = u.exp();
        hz.iter().zip(eps).map(|(h, e)| e * h.cumulative(t)).sum::<f64>() - level
    };
    let u = brent(g, lo.ln(), hi.ln(), ROOT_LOG_TOL, 200).map_err(|_| Error::RootFinding { lo, hi })?;
    Ok(u.exp())
}

/// 0-based cause drawn with probability `ε_j h_j(t) / Σ ε h(t)`.
fn draw_cause(model: &ModelSpec, k: usize, eps: &[f64], t: f64, u: f64) -> usize {
    let hz = model.hazards().individual(k);
    if hz.len() == 1 {
        return 0;
    }
    let logs: Vec<f64> = hz.iter().zip(eps).map(|(h, e)| e.ln() + h.ln_rate(t)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let probs: Vec<f64> = logs.iter().map(|x| (x - top).exp()).collect();
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p / total;
        if u < acc {
            return j;
        }
    }
    probs.len() - 1
}

/// One observation from `model` using `rng`.
pub fn simulate_pair<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R, censoring_rate: f64) -> Result<BivariateObservation> {
    Sampler::new(model)?.draw(rng, censoring_rate, false)
}

fn shard(sampler: &Sampler<'_>, cfg: &SimConfig, index: usize) -> Result<Vec<BivariateObservation>> {
    let start = index * SHARD_SIZE;
    let len = SHARD_SIZE.min(cfg.n_pairs - start);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    (0..len).map(|_| sampler.draw(&mut rng, cfg.censoring_rate, cfg.record_atom)).collect()
}

/// Generates the dataset in batches of shards and hands each batch to `sink`
/// in pair order.
pub fn simulate_batches<F>(model: &ModelSpec, cfg: &SimConfig, mut sink: F) -> Result<()>
where
    F: FnMut(&[BivariateObservation]) -> Result<()>,
{
    cfg.validate()?;
    let sampler = Sampler::new(model)?;
    let shards = cfg.n_pairs.div_ceil(SHARD_SIZE);
    let mut first = 0;
    while first < shards {
        let last = (first + SHARDS_PER_BATCH).min(shards);
        let batch: Vec<Vec<BivariateObservation>> =
            (first..last).into_par_iter().map(|s| shard(&sampler, cfg, s)).collect::<Result<_>>()?;
        for chunk in &batch {
            sink(chunk)?;
        }
        first = last;
    }
    Ok(())
}

/// The whole dataset in memory.
pub fn simulate_dataset(model: &ModelSpec, cfg: &SimConfig) -> Result<Vec<BivariateObservation>> {
    let mut out = Vec::with_capacity(cfg.n_pairs);
    simulate_batches(model, cfg, |chunk| {
        out.extend_from_slice(chunk);
        Ok(())
    })?;
    Ok(out)
}

/// Streams a simulated dataset to `writer` as CSV.
pub fn simulate_to_writer<W: Write>(model: &ModelSpec, cfg: &SimConfig, writer: W) -> Result<()> {
    let mut out = DatasetWriter::new(writer, cfg.record_atom)?;
    simulate_batches(model, cfg, |chunk| chunk.iter().try_for_each(|o| out.write(o)))?;
    out.finish()
}

/// CSV sink with header `pair_id,t1,j1,d1,t2,j2,d2[,atom_id]`.
///
/// Pair and atom ids are 1-based; times use 17 significant digits.
pub struct DatasetWriter<W: Write> {
    inner: csv::Writer<W>,
    record_atom: bool,
    next_id: usize,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(writer: W, record_atom: bool) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        let mut header = vec!["pair_id", "t1", "j1", "d1", "t2", "j2", "d2"];
        if record_atom {
            header.push("atom_id");
        }
        inner.write_record(&header)?;
        Ok(Self { inner, record_atom, next_id: 1 })
    }

    pub fn write(&mut self, obs: &BivariateObservation) -> Result<()> {
        let mut row = vec![
            self.next_id.to_string(),
            format_time(obs.t1),
            obs.j1.to_string(),
            u8::from(obs.d1).to_string(),
            format_time(obs.t2),
            obs.j2.to_string(),
            u8::from(obs.d2).to_string(),
        ];
        if self.record_atom {
            row.push(obs.atom.map_or_else(String::new, |w| (w + 1).to_string()));
        }
        self.inner.write_record(&row)?;
        self.next_id += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn format_time(t: f64) -> String {
    format!("{t:.16e}")
}
