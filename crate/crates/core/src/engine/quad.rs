//! Gauss-Legendre quadrature, adaptive bisection, compensated summation and
//! Euler acceleration of half-period segment sums.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

/// Values that can be integrated: reals and complex numbers.
pub(crate) trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Default
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    #[inline]
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    #[inline]
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Kahan-Babuška (Neumaier) compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum<T> {
    sum: T,
    comp: T,
}

impl<T: QuadValue> KahanSum<T> {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub(crate) fn add(&mut self, v: T) {
        let t = self.sum + v;
        // Neumaier's variant, applied component-wise through magnitude order.
        if self.sum.magnitude() >= v.magnitude() {
            self.comp = self.comp + ((self.sum - t) + v);
        } else {
            self.comp = self.comp + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug)]
pub(crate) struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 12-point rule used for segment integration.
    pub(crate) fn shared() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(12))
    }

    /// Returns (integral of f, integral of |f|) over [a, b].
    #[inline]
    pub(crate) fn apply<T: QuadValue>(&self, f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> (T, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = T::default();
        let mut acc_abs = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(c + h * x);
            acc = acc + v * *w;
            acc_abs += w * v.magnitude();
        }
        (acc * h, acc_abs * h.abs())
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Piece<T> {
    a: f64,
    b: f64,
    coarse: T,
    left: T,
    right: T,
    abs: f64,
    err: f64,
}

fn piece<T: QuadValue>(rule: &GaussLegendre, f: &mut impl FnMut(f64) -> T, a: f64, b: f64, coarse: T) -> Piece<T> {
    let m = 0.5 * (a + b);
    let (left, la) = rule.apply(f, a, m);
    let (right, ra) = rule.apply(f, m, b);
    let err = (coarse - (left + right)).magnitude();
    Piece {
        a,
        b,
        coarse,
        left,
        right,
        abs: la + ra,
        err,
    }
}

/// Globally adaptive bisection. The error of each piece is estimated by
/// comparing the rule on the whole piece with the rule on its two halves;
/// the halves are reported.
pub(crate) fn integrate_adaptive<T: QuadValue>(
    mut f: impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_pieces: usize,
) -> QuadResult<T> {
    let rule = GaussLegendre::shared();
    let n = rule.nodes.len();
    let (whole, _) = rule.apply(&mut f, a, b);
    let mut pieces = vec![piece(rule, &mut f, a, b, whole)];
    let mut evaluations = 3 * n;
    loop {
        let mut total = KahanSum::new();
        let mut total_abs = 0.0;
        let mut total_err = 0.0;
        let mut worst = 0;
        for (i, p) in pieces.iter().enumerate() {
            total.add(p.left + p.right);
            total_abs += p.abs;
            total_err += p.err;
            if p.err > pieces[worst].err {
                worst = i;
            }
        }
        let tol = abs_tol.max(rel_tol * total_abs);
        let done = total_err <= tol;
        let exhausted = pieces.len() >= max_pieces
            || (pieces[worst].b - pieces[worst].a).abs()
                <= 4.0 * f64::EPSILON * pieces[worst].a.abs().max(pieces[worst].b.abs());
        if done || exhausted {
            return QuadResult {
                value: total.value(),
                error: total_err,
                evaluations,
                converged: done,
            };
        }
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        pieces.push(piece(rule, &mut f, p.a, m, p.left));
        pieces.push(piece(rule, &mut f, m, p.b, p.right));
        evaluations += 4 * n;
        let _ = p.coarse;
    }
}

/// Euler transform of an alternating series by repeated averaging of its
/// partial sums.
pub(crate) fn euler_sum<T: QuadValue>(terms: &[T]) -> T {
    if terms.is_empty() {
        return T::default();
    }
    let mut row: Vec<T> = Vec::with_capacity(terms.len());
    let mut acc = KahanSum::new();
    for t in terms {
        acc.add(*t);
        row.push(acc.value());
    }
    while row.len() > 1 {
        for i in 0..row.len() - 1 {
            row[i] = (row[i] + row[i + 1]) * 0.5;
        }
        row.pop();
    }
    row[0]
}

/// Controls for [`sum_segments`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct SeriesControl {
    pub direct: usize,
    pub euler_terms: usize,
    pub max_segments: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SeriesResult<T> {
    pub value: T,
    /// Acceleration error plus accumulated segment quadrature error.
    pub error: f64,
    pub segments: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Sums `sum_k segment(k)` for a sequence of alternating half-period
/// integrals. The first `direct` segments are summed with compensation and
/// the remainder is extrapolated by the Euler transform of the next
/// `euler_terms` segments. When the two tail estimates disagree by more than
/// `tol(total)` the direct range is doubled, up to `max_segments`.
pub(crate) fn sum_segments<T: QuadValue>(
    mut segment: impl FnMut(usize) -> QuadResult<T>,
    tol: impl Fn(T) -> f64,
    ctl: SeriesControl,
) -> SeriesResult<T> {
    let m = ctl.euler_terms.max(4);
    let mut direct = ctl.direct.max(1);
    let mut terms: Vec<T> = Vec::new();
    let mut errs: Vec<f64> = Vec::new();
    let mut evaluations = 0;
    let mut best: Option<SeriesResult<T>> = None;
    let mut stalls = 0;
    loop {
        let need = (direct + m).min(ctl.max_segments.max(m + 1));
        while terms.len() < need {
            let r = segment(terms.len());
            evaluations += r.evaluations;
            terms.push(r.value);
            errs.push(r.error);
        }
        let direct_now = need - m;
        let mut head = KahanSum::new();
        for t in &terms[..direct_now] {
            head.add(*t);
        }
        let tail_full = euler_sum(&terms[direct_now..need]);
        let tail_short = euler_sum(&terms[direct_now..need - 1]);
        let tail_shift = euler_sum(&terms[direct_now + 1..need]) + terms[direct_now];
        let accel_err = (tail_full - tail_short)
            .magnitude()
            .max((tail_full - tail_shift).magnitude());
        let quad_err: f64 = errs[..need].iter().sum();
        let value = head.value() + tail_full;
        let error = accel_err + quad_err;
        let converged = error <= tol(value);
        let current = SeriesResult {
            value,
            error,
            segments: need,
            evaluations,
            converged,
        };
        if converged || need >= ctl.max_segments {
            return current;
        }
        // Once the quadrature error floor dominates, more segments only add
        // error. Give up after two doublings without halving the estimate.
        match best {
            Some(b) if error > 0.5 * b.error => {
                stalls += 1;
                if error < b.error {
                    best = Some(current);
                }
                if stalls >= 2 {
                    let b = best.unwrap_or(b);
                    return SeriesResult { evaluations, ..b };
                }
            }
            _ => {
                stalls = 0;
                best = Some(current);
            }
        }
        direct *= 2;
    }
}
