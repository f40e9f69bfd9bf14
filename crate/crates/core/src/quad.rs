//! Quadrature helpers: composite tanh-sinh on split intervals, trapezoid rules
//! and tail cut-off search.

/// Integrates `f` over `[a, b]` split into `pieces` equal sub-intervals, each
/// handled by double-exponential quadrature with an even share of `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, pieces: usize) -> f64 {
    let pieces = pieces.max(1);
    let w = (b - a) / pieces as f64;
    let share = tol / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + k as f64 * w;
            let hi = if k + 1 == pieces { b } else { lo + w };
            quadrature::integrate(&f, lo, hi, share).integral
        })
        .sum()
}

/// Trapezoid rule on tabulated, possibly non-uniform nodes.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Trapezoid rule for a function on `n` uniform intervals.
pub fn trapezoid_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let dx = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * dx)).sum();
    dx * (inner + 0.5 * (f(a) + f(b)))
}

/// Symmetric cut-off `[lo, hi]` outside of which the unnormalised log-density
/// `log_p` falls more than `ln(1 / rel)` below its maximum.
///
/// The maximum is located on a coarse scan of `[-span, span]`, then the
/// boundaries are walked outward in steps of `step`.
pub fn tail_cutoffs(log_p: impl Fn(f64) -> f64, span: f64, step: f64, rel: f64) -> (f64, f64) {
    let n = (2.0 * span / step).ceil() as usize;
    let (mut x_peak, mut lp_peak) = (0.0, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = -span + i as f64 * step;
        let v = log_p(x);
        if v > lp_peak {
            lp_peak = v;
            x_peak = x;
        }
    }
    let floor = lp_peak + rel.ln();
    let walk = |dir: f64| {
        let mut x = x_peak;
        // keep walking while either we're above the floor or the density has
        // not yet started falling monotonically
        loop {
            x += dir * step;
            if log_p(x) < floor && log_p(x + dir * step) < log_p(x) {
                return x;
            }
        }
    };
    (walk(-1.0), walk(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_integral() {
        let v = integrate(|x| (-x * x / 2.0).exp(), -12.0, 12.0, 1e-12, 4);
        assert_abs_diff_eq!(v, (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn trapezoid_exact_for_lines() {
        assert_abs_diff_eq!(trapezoid(&[0.0, 0.5, 2.0], &[0.0, 0.5, 2.0]), 2.0);
        assert_abs_diff_eq!(trapezoid_fn(|x| 3.0 * x, 0.0, 1.0, 7), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn cutoffs_bracket_gaussian_tails() {
        let (lo, hi) = tail_cutoffs(|x| -(x - 1.0) * (x - 1.0) / 2.0, 10.0, 1e-3, 1e-12);
        let expect = (2.0 * 1e12f64.ln()).sqrt();
        assert!((hi - 1.0 - expect).abs() < 2e-3);
        assert!((1.0 - lo - expect).abs() < 2e-3);
    }
}
