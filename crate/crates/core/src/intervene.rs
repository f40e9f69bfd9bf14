//! Asymmetric interventions `G(x) = F(x) + c x`: the relative effort `r(c)` an
//! intervention adds on top of the existing forces, and how it shifts the
//! equilibrium occupancy of the attractors.
//!
//! With `p` the equilibrium density, `F' = dF/dx` and `t` the horizon,
//!
//! ```text
//! r^2 = int p(x) (2 c F'(x) + c^2) / (F'(x)^2 + sigma^2 / t) dx
//! ```
//!
//! which for the Landau potential `F = -a x^2 + b x^4` reads
//! `int p (-4 a x c + 8 b x^3 c + c^2) / ((2 a x - 4 b x^3)^2 + sigma^2 / t) dx`.

use crate::error::{Error, Result};
use crate::landscape::{EnergyLandscape, Potential};
use crate::quad;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Tails where the density is below this fraction of its peak are dropped.
pub const TAIL_CUTOFF: f64 = 1e-12;
const SCAN_STEP: f64 = 1e-3;
const PIECES: usize = 16;
const NEGATIVE_SLACK: f64 = 1e-12;

/// Landau potential `F(x) = -a x^2 + b x^4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landau {
    pub a: f64,
    pub b: f64,
}

impl Landau {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Landau potential needs finite a and b > 0, got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }

    fn span(&self, c: f64) -> f64 {
        2.0 * (1.0 + (self.a.abs() / self.b).sqrt() + (c.abs() / self.b).cbrt())
    }

    /// Region holding all but `TAIL_CUTOFF` of the peak density of
    /// `exp(-F(x) - c x)`.
    pub fn support(&self, c: f64) -> (f64, f64) {
        quad::tail_cutoffs(|x| -self.energy(x) - c * x, self.span(c), SCAN_STEP, TAIL_CUTOFF)
    }
}

impl Potential for Landau {
    fn energy(&self, x: f64) -> f64 {
        let x2 = x * x;
        -self.a * x2 + self.b * x2 * x2
    }

    fn force(&self, x: f64) -> f64 {
        2.0 * self.a * x - 4.0 * self.b * x * x * x
    }
}

/// `G(x) = F(x) + c x`; the force is the base force minus `c`.
#[derive(Debug, Clone)]
pub struct Tilted<P> {
    pub base: P,
    pub c: f64,
}

impl<P: Potential> Potential for Tilted<P> {
    fn energy(&self, x: f64) -> f64 {
        self.base.energy(x) + self.c * x
    }

    fn force(&self, x: f64) -> f64 {
        self.base.force(x) - self.c
    }
}

pub fn tilted_landscape(landscape: &EnergyLandscape, c: f64) -> Tilted<&EnergyLandscape> {
    Tilted { base: landscape, c }
}

fn finish_radicand(r2: f64) -> Result<f64> {
    if r2 < -NEGATIVE_SLACK || !r2.is_finite() {
        return Err(Error::NegativeRadicand(r2));
    }
    Ok(r2.max(0.0).sqrt())
}

fn check_horizon(t: f64, sigma: f64) -> Result<()> {
    if !(t > 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("t and sigma must be positive, got t={t}, sigma={sigma}")));
    }
    Ok(())
}

/// Relative effort `r(c)` for the Landau density `exp(a x^2 - b x^4) / Z`.
pub fn relative_effort(a: f64, b: f64, c: f64, t: f64, sigma: f64) -> Result<f64> {
    relative_effort_with_tol(a, b, c, t, sigma, DEFAULT_TOLERANCE)
}

pub fn relative_effort_with_tol(a: f64, b: f64, c: f64, t: f64, sigma: f64, tol: f64) -> Result<f64> {
    let landau = Landau::new(a, b)?;
    check_horizon(t, sigma)?;
    let (lo, hi) = landau.support(0.0);
    let peak = log_peak(|x| -landau.energy(x), lo, hi);
    let w = |x: f64| (-landau.energy(x) - peak).exp();
    let z = quad::integrate(w, lo, hi, tol, PIECES);
    let noise = sigma * sigma / t;
    let integrand = |x: f64| {
        let numerator = -4.0 * a * x * c + 8.0 * b * x * x * x * c + c * c;
        let slope = 2.0 * a * x - 4.0 * b * x * x * x;
        w(x) * numerator / (slope * slope + noise)
    };
    let r2 = quad::integrate(integrand, lo, hi, tol * z, PIECES) / z;
    finish_radicand(r2)
}

/// Relative effort with the KDE density and its analytic slope.
pub fn relative_effort_landscape(landscape: &EnergyLandscape, c: f64, t: f64, sigma: f64) -> Result<f64> {
    check_horizon(t, sigma)?;
    let d = landscape.density();
    let (lo, hi) = kde_support(landscape);
    let noise = sigma * sigma / t;
    let integrand = |x: f64| {
        let slope = -landscape.force(x);
        d.pdf(x) * (2.0 * c * slope + c * c) / (slope * slope + noise)
    };
    let r2 = quad::integrate(integrand, lo, hi, DEFAULT_TOLERANCE, PIECES);
    finish_radicand(r2)
}

fn kde_support(landscape: &EnergyLandscape) -> (f64, f64) {
    let d = landscape.density();
    let pad = 8.0 * d.bandwidth();
    (d.min_sample() - pad, d.max_sample() + pad)
}

fn log_peak(log_w: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = ((hi - lo) / SCAN_STEP).ceil() as usize;
    (0..=n).map(|i| log_w(lo + (hi - lo) * i as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max)
}

fn split_fraction(log_w: impl Fn(f64) -> f64, lo: f64, hi: f64, threshold: f64, tol: f64) -> f64 {
    if threshold <= lo {
        return 0.0;
    }
    if threshold >= hi {
        return 1.0;
    }
    let peak = log_peak(&log_w, lo, hi);
    let w = |x: f64| (log_w(x) - peak).exp();
    let left = quad::integrate(w, lo, threshold, tol, PIECES);
    let right = quad::integrate(w, threshold, hi, tol, PIECES);
    left / (left + right)
}

/// Equilibrium share of `exp(-G)` below `threshold` for the tilted Landau
/// potential `G(x) = -a x^2 + b x^4 + c x`.
pub fn occupancy_fraction(a: f64, b: f64, c: f64, threshold: f64) -> Result<f64> {
    occupancy_fraction_with_tol(a, b, c, threshold, DEFAULT_TOLERANCE)
}

pub fn occupancy_fraction_with_tol(a: f64, b: f64, c: f64, threshold: f64, tol: f64) -> Result<f64> {
    let landau = Landau::new(a, b)?;
    let (lo, hi) = landau.support(c);
    let g = Tilted { base: landau, c };
    Ok(split_fraction(|x| -g.energy(x), lo, hi, threshold, tol))
}

/// Equilibrium share below `threshold` for a KDE landscape tilted by `c`.
pub fn occupancy_fraction_landscape(landscape: &EnergyLandscape, c: f64, threshold: f64) -> f64 {
    let (lo, hi) = kde_support(landscape);
    let g = tilted_landscape(landscape, c);
    split_fraction(|x| -g.energy(x), lo, hi, threshold, DEFAULT_TOLERANCE)
}
