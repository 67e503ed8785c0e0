//! Adaptive one-dimensional quadrature.
//!
//! Adaptive Simpson with Richardson extrapolation. All integrands in this
//! crate are smooth except for isolated kinks (|x − c|^r at a reconstruction
//! point, absolute differences in total-variation integrals); callers split at
//! known kinks via [`integrate_with_knots`] and the adaptive refinement deals
//! with the rest.

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol.max(f64::MIN_POSITIVE), MAX_DEPTH)
}

/// Integrates `f` over `[a, b]`, forcing subdivision at the interior `knots`.
///
/// The per-segment tolerance is split proportionally to segment length.
pub fn integrate_with_knots<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    knots: &[f64],
) -> f64 {
    if a >= b {
        return 0.0;
    }
    let mut cuts: Vec<f64> = knots.iter().copied().filter(|&k| k > a && k < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    let mut lo = a;
    let span = b - a;
    for &k in cuts.iter().chain(std::iter::once(&b)) {
        total += integrate(f, lo, k, tol * ((k - lo) / span).max(1e-3));
        lo = k;
    }
    total
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // Simpson is exact for cubics; the adaptive wrapper must not spoil it.
        let v = integrate(&|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-13, "got {v}");
    }

    #[test]
    fn gaussian_mass() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = integrate(&f, -10.0, 10.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-11, "got {v}");
    }

    #[test]
    fn kink_with_knot() {
        // ∫_{-1}^{1} |x| dx = 1
        let v = integrate_with_knots(&|x: f64| x.abs(), -1.0, 1.0, 1e-12, &[0.0]);
        assert!((v - 1.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(&|_| 1.0, 1.0, 1.0, 1e-9), 0.0);
        assert_eq!(integrate(&|_| 1.0, 2.0, 1.0, 1e-9), 0.0);
    }
}
