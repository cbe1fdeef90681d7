//! Generalized exponential integral `E_p(z) = ∫_1^∞ e^{-z y} y^{-p} dy`
//! for complex `z` with `Re z >= 0`, `z != 0`, and real `p > 0`.
//!
//! Small `|z|` uses the ascending series; large `|z|` the continued fraction
//! evaluated with the modified Lentz method. Integer orders use the
//! logarithmic series.

use num_complex::Complex64;

const SERIES_RADIUS: f64 = 2.0;
/// Above this order the continued fraction converges quickly for every `z`.
const LARGE_ORDER: f64 = 10.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Outcome of an evaluation; `None` signals that the order is too close to an
/// integer for the non-integer series to keep precision at this `z`.
pub(crate) fn expint(p: f64, z: Complex64) -> Option<Complex64> {
    debug_assert!(p > 0.0);
    if z.norm() > SERIES_RADIUS || p > LARGE_ORDER {
        return Some(continued_fraction(p, z));
    }
    let n = p.round();
    let delta = (p - n).abs();
    if delta <= 1e-12 && n >= 1.0 {
        Some(integer_series(n as u32, z))
    } else if delta < 1e-7 {
        None
    } else {
        Some(fractional_series(p, z))
    }
}

/// `E_p(z) = Γ(1-p) z^{p-1} - Σ_k (-z)^k / (k! (1-p+k))`.
fn fractional_series(p: f64, z: Complex64) -> Complex64 {
    let lead = z.ln().scale(p - 1.0).exp() * libm::tgamma(1.0 - p);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0); // (-z)^k / k!
    for k in 0..200 {
        let term = pow / (1.0 - p + k as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
        pow = -pow * z / (k as f64 + 1.0);
    }
    lead - sum
}

/// `E_n(z) = (-z)^{n-1}/(n-1)! (ψ(n) - ln z) - Σ_{k≠n-1} (-z)^k/((k-n+1) k!)`.
fn integer_series(n: u32, z: Complex64) -> Complex64 {
    let nm1 = (n - 1) as usize;
    let digamma = -EULER_GAMMA + (1..n).map(|m| 1.0 / m as f64).sum::<f64>();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    let mut special = Complex64::new(0.0, 0.0);
    for k in 0..200usize {
        if k == nm1 {
            special = pow * (Complex64::new(digamma, 0.0) - z.ln());
        } else {
            let term = pow / (k as f64 - nm1 as f64);
            sum += term;
            if k > nm1 && term.norm() <= 1e-17 * sum.norm().max(special.norm()) {
                break;
            }
        }
        pow = -pow * z / (k as f64 + 1.0);
    }
    special - sum
}

fn continued_fraction(p: f64, z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = z + p;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..100_000 {
        let fi = i as f64;
        let an = -fi * (p - 1.0 + fi);
        b += 2.0;
        d = (d * an + b).inv();
        c = b + c.inv() * an;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}
