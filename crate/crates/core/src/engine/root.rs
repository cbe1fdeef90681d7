//! Brent's method for bracketed scalar roots.

/// Root located by [`brent_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    /// Function value at `root`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Finds a zero of `f` in `[a, b]`, which must bracket a sign change.
///
/// Stops when the bracket is narrower than `x_tol` (absolute) plus
/// `4 eps |x|`, or when `f` vanishes exactly. Errors from `f` are propagated.
pub fn brent_root<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<Option<RootResult>, E> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Some(RootResult { root: a, residual: 0.0, iterations: 0, converged: true }));
    }
    if fb == 0.0 {
        return Ok(Some(RootResult { root: b, residual: 0.0, iterations: 0, converged: true }));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for it in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(Some(RootResult { root: b, residual: fb, iterations: it, converged: true }));
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(Some(RootResult { root: b, residual: fb, iterations: max_iter, converged: false }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(x: f64) -> Result<f64, ()> {
        Ok(x)
    }

    #[test]
    fn finds_cube_root_of_two() {
        let r = brent_root(|x| ok(x * x * x - 2.0), 0.0, 2.0, 1e-15, 100).unwrap().unwrap();
        assert!(r.converged);
        assert!((r.root - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_bracket() {
        assert!(brent_root(|x| ok(x * x + 1.0), -1.0, 1.0, 1e-12, 50).unwrap().is_none());
    }

    #[test]
    fn relative_precision_at_large_scale() {
        let target = 3.141_592_653_589_793e17;
        let r = brent_root(|x| ok((x / target).ln()), 1e16, 1e19, 0.0, 200).unwrap().unwrap();
        assert!((r.root / target - 1.0).abs() < 1e-15);
    }

    #[test]
    fn propagates_errors() {
        let r: Result<Option<RootResult>, &str> = brent_root(|_| Err("boom"), 0.0, 1.0, 1e-9, 10);
        assert_eq!(r, Err("boom"));
    }
}
