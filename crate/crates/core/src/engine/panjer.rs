//! Panjer recursion for compound Poisson totals on a lattice of width `h`.
//!
//! Severities are discretized by local moment matching: the mass of
//! `(jh, (j+1)h]` is split between `jh` and `(j+1)h` so that both the mass
//! and the mean of the interval are preserved. The first interval is sent
//! to `h` entirely, which keeps the lattice atom at zero equal to the true
//! zero-event probability `exp(-lambda)`.

use super::{single_loss_guess, zero_atom, Diagnostics, EngineConfig, EngineError, EngineKind, VarEstimate};
use crate::dist::CompoundCell;

/// Lattice points used when no cutoff is configured.
const DEFAULT_MAX_POINTS: usize = 4_000_000;
/// Lattice width relative to the quantity of interest when no step is configured.
const DEFAULT_RELATIVE_STEP: f64 = 1e-4;

/// Generic Poisson Panjer recursion for a lattice severity `pmf` (index =
/// multiple of the step), returning the first `len` aggregate masses.
pub fn panjer_recursion(lambda: f64, pmf: &[f64], len: usize) -> Vec<f64> {
    let f0 = pmf.first().copied().unwrap_or(0.0);
    let mut agg = Vec::with_capacity(len);
    if len == 0 {
        return agg;
    }
    agg.push((-lambda * (1.0 - f0)).exp());
    let weights: Vec<f64> = (0..len).map(|j| lambda * j as f64 * pmf.get(j).copied().unwrap_or(0.0)).collect();
    let rev = reversed_weights(&weights);
    for k in 1..len {
        let v = dot(&agg[..k], &rev[len - 1 - k..len - 1]) / k as f64;
        agg.push(v);
    }
    agg
}

/// `rev[t] = weights[n - 1 - t]`, so the recursion term
/// `sum_{m<k} agg[m] weights[k-m]` is a forward dot with `rev[n-1-k..n-1]`.
fn reversed_weights(weights: &[f64]) -> Vec<f64> {
    weights.iter().rev().copied().collect()
}

/// Dot product with eight independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let mut ac = a.chunks_exact(8);
    let mut bc = b.chunks_exact(8);
    for (x, y) in (&mut ac).zip(&mut bc) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ac.remainder().iter().zip(bc.remainder()).map(|(x, y)| x * y).sum();
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Aggregate distribution of a sum of independent cells on a growing lattice.
#[derive(Debug, Clone)]
pub struct PanjerLattice {
    cells: Vec<CompoundCell>,
    step: f64,
    lambda: f64,
    /// `lambda * j * f_j` for the mixture severity.
    weights: Vec<f64>,
    /// `weights` reversed; rebuilt whenever `weights` grows.
    rev: Vec<f64>,
    agg: Vec<f64>,
    cum: Vec<f64>,
}

impl PanjerLattice {
    pub fn new(cells: &[CompoundCell], step: f64) -> Result<Self, EngineError> {
        super::check_cells(cells)?;
        if !(step.is_finite() && step > 0.0) {
            return Err(EngineError::InvalidConfig(format!("panjer_step must be > 0, got {step}")));
        }
        let lambda = cells.iter().map(|c| c.lambda()).sum();
        let p0 = zero_atom(cells);
        Ok(Self {
            cells: cells.to_vec(),
            step,
            lambda,
            weights: vec![0.0],
            rev: vec![0.0],
            agg: vec![p0],
            cum: vec![p0],
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of lattice points computed so far.
    pub fn len(&self) -> usize {
        self.agg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agg.is_empty()
    }

    /// Aggregate masses at `0, h, 2h, ...`.
    pub fn pmf(&self) -> &[f64] {
        &self.agg
    }

    /// Cumulative masses `P(total <= k h)` on the lattice.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// Mixture severity mass at lattice point `j >= 1`.
    fn severity_mass(&self, j: usize) -> f64 {
        let h = self.step;
        let mut m = 0.0;
        for c in &self.cells {
            let d = &c.severity;
            let w = c.lambda() / self.lambda;
            // from the interval below: ((j-1)h, jh]
            let (a, b) = ((j - 1) as f64 * h, j as f64 * h);
            let below = if j == 1 {
                1.0 - d.sf_unchecked(b)
            } else {
                upper_share(d, a, b, h)
            };
            // from the interval above: (jh, (j+1)h]
            let (a2, b2) = (b, (j + 1) as f64 * h);
            let mass = d.sf_unchecked(a2) - d.sf_unchecked(b2);
            let above = mass - upper_share(d, a2, b2, h);
            m += w * (below + above.max(0.0));
        }
        m
    }

    /// Extends the recursion to `len` lattice points.
    pub fn extend_to(&mut self, len: usize) {
        if self.weights.len() < len {
            while self.weights.len() < len {
                let j = self.weights.len();
                self.weights.push(self.lambda * j as f64 * self.severity_mass(j));
            }
            self.rev = reversed_weights(&self.weights);
        }
        let n = self.rev.len();
        let mut acc = *self.cum.last().unwrap_or(&0.0);
        for k in self.agg.len()..len {
            let v = dot(&self.agg[..k], &self.rev[n - 1 - k..n - 1]) / k as f64;
            self.agg.push(v);
            acc += v;
            self.cum.push(acc.min(1.0));
        }
    }

    /// Continuous-scale CDF at `x`: lattice mass `k` stands for the band
    /// around `kh`, so `F_k` is placed at `(k + 1/2) h` and interpolated.
    pub fn cdf_at(&mut self, x: f64) -> f64 {
        let pos = x / self.step - 0.5;
        if pos < 0.0 {
            return self.cum[0];
        }
        let k = pos.floor() as usize;
        self.extend_to(k + 2);
        let frac = pos - k as f64;
        self.cum[k] + frac * (self.cum[k + 1] - self.cum[k])
    }
}

/// Share of the mass of `(a, b]` sent to `b` under moment matching:
/// `(1/h) ∫_a^b (x - a) dF(x) = (1/h) ∫_a^b (sf(x) - sf(b)) dx`.
fn upper_share(d: &crate::dist::GpdSeverity, a: f64, b: f64, h: f64) -> f64 {
    let sf_b = d.sf_unchecked(b);
    let rule = super::quad::GaussLegendre::shared();
    let (v, _) = rule.apply(&mut |x: f64| d.sf_unchecked(x) - sf_b, a, b);
    (v / h).max(0.0)
}

fn resolve_step(cfg: &EngineConfig, scale: f64) -> f64 {
    cfg.panjer_step.unwrap_or(DEFAULT_RELATIVE_STEP * scale)
}

fn resolve_cutoff(cfg: &EngineConfig, step: f64) -> f64 {
    cfg.panjer_cutoff.unwrap_or(step * DEFAULT_MAX_POINTS as f64)
}

/// `P(total <= x)` by Panjer recursion. Without a configured step the lattice
/// width is `1e-4` of `max(x, smallest sigma)`.
pub fn panjer_cdf(x: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<f64, EngineError> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(EngineError::Domain {
            what: "x",
            detail: format!("loss amount must be finite and >= 0, got {x}"),
        });
    }
    super::check_cells(cells)?;
    let sigma_min = cells.iter().map(|c| c.severity.sigma()).fold(f64::INFINITY, f64::min);
    let step = resolve_step(cfg, x.max(sigma_min));
    let cutoff = resolve_cutoff(cfg, step);
    let mut lattice = PanjerLattice::new(cells, step)?;
    if x > cutoff {
        let at_cut = lattice.cdf_at(cutoff);
        return Err(EngineError::Truncation { cutoff, cdf_at_cutoff: at_cut });
    }
    Ok(lattice.cdf_at(x))
}

pub(super) fn var_panjer(alpha: f64, cells: &[CompoundCell], cfg: &EngineConfig) -> Result<VarEstimate, EngineError> {
    let guess = single_loss_guess(alpha, cells);
    let step = resolve_step(cfg, guess);
    let cutoff = resolve_cutoff(cfg, step);
    let max_points = (cutoff / step).floor() as usize + 1;
    let mut lattice = PanjerLattice::new(cells, step)?;
    let mut len = ((guess / step) as usize).clamp(64, max_points.max(64));
    let mut searched = 0;
    loop {
        lattice.extend_to(len.min(max_points));
        let cum = lattice.cumulative();
        if let Some(k) = cum[searched..].iter().position(|&f| f >= alpha).map(|i| i + searched) {
            // F_k sits at (k + 1/2) h; interpolate against F_{k-1}.
            let value = if k == 0 {
                0.0
            } else {
                let (f0, f1) = (cum[k - 1], cum[k]);
                (k as f64 - 0.5 + (alpha - f0) / (f1 - f0)) * step
            };
            return Ok(VarEstimate {
                value: value.max(0.0),
                ci_halfwidth: 0.0,
                engine: EngineKind::Panjer,
                diagnostics: Diagnostics {
                    lattice_points: lattice.len(),
                    evaluations: lattice.len(),
                    ..Diagnostics::default()
                },
            });
        }
        searched = cum.len();
        if lattice.len() >= max_points {
            return Err(EngineError::Truncation {
                cutoff,
                cdf_at_cutoff: *cum.last().unwrap_or(&0.0),
            });
        }
        // small blocks: the recursion cost is quadratic in the last point reached
        len = (len + (len / 16).max(1024)).min(max_points);
    }
}
