//! Monte Carlo sampling of compound Poisson totals.
//!
//! Samples are produced in fixed-size chunks; chunk `c` of stream `tag` draws
//! from ChaCha8 seeded with `seed` on stream `(tag << 48) | c`. The output is
//! therefore identical for any number of rayon workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Diagnostics, EngineConfig, EngineError, EngineKind, VarEstimate};
use crate::dependence::{Dependence, RiskPair};
use crate::dist::CompoundCell;

const CHUNK: usize = 1 << 14;
/// Inversion is used for the event count up to this intensity.
const INVERSION_MAX_LAMBDA: f64 = 30.0;

pub(crate) const TAG_L: u64 = 1;
pub(crate) const TAG_S: u64 = 2;

fn chunk_rng(seed: u64, tag: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 48) | chunk as u64);
    rng
}

fn poisson_count(rng: &mut ChaCha8Rng, lambda: f64, sampler: Option<&Poisson<f64>>) -> u64 {
    match sampler {
        Some(p) => p.sample(rng) as u64,
        None => {
            let u: f64 = rng.random();
            let mut p = (-lambda).exp();
            let mut cdf = p;
            let mut k = 0u64;
            while u > cdf && p > 0.0 {
                k += 1;
                p *= lambda / k as f64;
                cdf += p;
            }
            k
        }
    }
}

fn draw_total(rng: &mut ChaCha8Rng, cell: &CompoundCell, sampler: Option<&Poisson<f64>>) -> f64 {
    let n = poisson_count(rng, cell.lambda(), sampler);
    let mut total = 0.0;
    for _ in 0..n {
        let u: f64 = rng.random();
        total += cell.severity.quantile_unchecked(u);
    }
    total
}

fn sampler_for(cell: &CompoundCell) -> Option<Poisson<f64>> {
    if cell.lambda() > INVERSION_MAX_LAMBDA {
        Poisson::new(cell.lambda()).ok()
    } else {
        None
    }
}

fn sample_stream(cell: &CompoundCell, n: usize, seed: u64, tag: u64) -> Vec<f64> {
    let sampler = sampler_for(cell);
    let chunks = n.div_ceil(CHUNK);
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK)
        .zip(0..chunks)
        .for_each(|(slot, c)| {
            let mut rng = chunk_rng(seed, tag, c);
            for v in slot.iter_mut() {
                *v = draw_total(&mut rng, cell, sampler.as_ref());
            }
        });
    out
}

/// `n` independent draws of the cell's total loss.
pub fn sample_compound(cell: &CompoundCell, n: usize, seed: u64) -> Vec<f64> {
    sample_stream(cell, n, seed, TAG_L)
}

/// `n` draws of the sum of independent cells. Cell `i` uses stream `i + 1`,
/// so `sample_total(&[l, s])` is the pathwise sum of an independent
/// [`sample_pair`] with the same seed.
pub fn sample_total(cells: &[CompoundCell], n: usize, seed: u64) -> Vec<f64> {
    let mut total = vec![0.0; n];
    for (i, c) in cells.iter().enumerate() {
        let part = sample_stream(c, n, seed, i as u64 + 1);
        total.par_iter_mut().zip(part.par_iter()).for_each(|(t, p)| *t += p);
    }
    total
}

/// `n` draws of `(L, S)`. Under a scale mixture the prior cell supplies the
/// factor `U` and `L = g(S) U`.
pub fn sample_pair(pair: &RiskPair, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let first = sample_stream(&pair.cell_l, n, seed, TAG_L);
    let s = sample_stream(&pair.cell_s, n, seed, TAG_S);
    match &pair.dependence {
        Dependence::Independent => first.into_iter().zip(s).collect(),
        Dependence::ScaleMixture(g) => first.into_iter().zip(s).map(|(u, s)| (g.eval(s) * u, s)).collect(),
    }
}

/// Order-statistic quantile with a distribution-free 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileCi {
    pub value: f64,
    pub low: f64,
    pub high: f64,
    /// 1-based rank of `value`.
    pub rank: usize,
}

impl QuantileCi {
    pub fn covers(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn halfwidth(&self) -> f64 {
        (self.value - self.low).max(self.high - self.value)
    }
}

/// The `ceil(alpha n)`-th order statistic of `sample` (which is reordered in
/// place) with ranks `alpha n ± 1.96 sqrt(n alpha (1 - alpha))` as the 95%
/// interval.
pub fn empirical_quantile(sample: &mut [f64], alpha: f64) -> Result<QuantileCi, EngineError> {
    let n = sample.len();
    if n == 0 {
        return Err(EngineError::Domain {
            what: "sample",
            detail: "empty sample".into(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EngineError::Domain {
            what: "alpha",
            detail: format!("confidence level must lie in (0, 1), got {alpha}"),
        });
    }
    let nf = n as f64;
    let rank_of = |r: f64| (r.ceil() as usize).clamp(1, n);
    let rank = rank_of(alpha * nf);
    let spread = 1.96 * (nf * alpha * (1.0 - alpha)).sqrt();
    let lo_rank = rank_of(alpha * nf - spread);
    let hi_rank = rank_of(alpha * nf + spread);

    let cmp = |a: &f64, b: &f64| a.total_cmp(b);
    let (_, &mut value, upper) = sample.select_nth_unstable_by(rank - 1, cmp);
    let high = if hi_rank > rank {
        let (_, &mut v, _) = upper.select_nth_unstable_by(hi_rank - rank - 1, cmp);
        v
    } else {
        value
    };
    let low = if lo_rank < rank {
        let (_, &mut v, _) = sample[..rank - 1].select_nth_unstable_by(lo_rank - 1, cmp);
        v
    } else {
        value
    };
    Ok(QuantileCi { value, low, high, rank })
}

pub(super) fn var_monte_carlo(alpha: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<VarEstimate, EngineError> {
    let mut sample = sample_total(cells, cfg.mc_samples, cfg.mc_seed);
    let q = empirical_quantile(&mut sample, alpha)?;
    Ok(VarEstimate {
        value: q.value,
        ci_halfwidth: q.halfwidth(),
        engine: EngineKind::MonteCarlo,
        diagnostics: Diagnostics {
            samples: cfg.mc_samples,
            evaluations: cfg.mc_samples,
            ci_low: Some(q.low),
            ci_high: Some(q.high),
            ..Diagnostics::default()
        },
    })
}
