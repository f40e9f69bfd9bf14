//! Discretised Langevin dynamics.
//!
//! The state space `[x_min, x_max]` is cut into a uniform grid with spacing
//! `dx = sqrt(dt) / f`, where `dt` is chosen so that free diffusion with
//! strength `sigma` needs about 1000 steps to cross half the range. One step of
//! the chain moves a state `x` to a Gaussian around `x + force(x) dt` with
//! standard deviation `sigma sqrt(dt)`, cut at four standard deviations and
//! renormalised per row. The stationary vector of that chain, turned back into
//! a density by cubic-spline interpolation, is compared against the observed
//! density with the Hellinger distance to pick `sigma`.

use crate::error::{Error, Result};
use crate::kde::DensityModel;
use crate::landscape::{EnergyLandscape, Potential};
use crate::quad;
use crate::spline::CubicSpline;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Number of diffusion steps needed to cover half of the data range.
pub const DIFFUSION_STEPS: f64 = 1000.0;
/// Half-width of the transition window, in standard deviations.
pub const WINDOW_SIGMAS: f64 = 4.0;
pub const DEFAULT_FINENESS: u32 = 10;
pub const STATIONARY_TOLERANCE: f64 = 1e-10;
pub const MAX_POWER_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub x_min: f64,
    pub x_max: f64,
    pub fineness: u32,
    pub dt: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    params: GridParams,
    points: Vec<f64>,
}

/// `[floor(min), ceil(max)]` of the data.
pub fn data_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    if lo == hi {
        (lo, lo + 1.0)
    } else {
        (lo, hi)
    }
}

impl Grid {
    /// `dt = ((x_max - x_min) / 2)^2 / (1000 sigma^2)`, `dx = sqrt(dt) / f`.
    pub fn build(x_min: f64, x_max: f64, sigma: f64, fineness: u32) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidArgument(format!("grid range [{x_min}, {x_max}] is empty")));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        if fineness == 0 {
            return Err(Error::InvalidArgument("fineness must be positive".into()));
        }
        let half = 0.5 * (x_max - x_min);
        let dt = half * half / (DIFFUSION_STEPS * sigma * sigma);
        let dx = dt.sqrt() / fineness as f64;
        Self::from_params(GridParams { x_min, x_max, fineness, dt, dx })
    }

    pub fn from_params(params: GridParams) -> Result<Self> {
        let GridParams { x_min, x_max, dx, .. } = params;
        if !(dx > 0.0) || !(x_max > x_min) {
            return Err(Error::InvalidArgument("invalid grid parameters".into()));
        }
        let count = ((x_max - x_min) / dx).floor() as usize + 1;
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid spacing {dx} too coarse for range [{x_min}, {x_max}]"
            )));
        }
        let mut points: Vec<f64> = (0..count).map(|i| x_min + i as f64 * dx).collect();
        points[count - 1] = x_max;
        Ok(Self { params, points })
    }

    pub fn params(&self) -> GridParams {
        self.params
    }
    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn dt(&self) -> f64 {
        self.params.dt
    }
    pub fn dx(&self) -> f64 {
        self.params.dx
    }
    pub fn x_min(&self) -> f64 {
        self.params.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.params.x_max
    }
}

/// Row-stochastic matrix whose nonzeros in each row form one contiguous run.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    dim: usize,
    starts: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl BandMatrix {
    /// Builds from one `(first column, entries)` pair per row.
    pub fn from_rows(dim: usize, rows: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        if rows.len() != dim {
            return Err(Error::InvalidArgument(format!("expected {dim} rows, got {}", rows.len())));
        }
        let mut starts = Vec::with_capacity(dim);
        let mut offsets = Vec::with_capacity(dim + 1);
        let mut values = Vec::new();
        offsets.push(0);
        for (start, row) in rows {
            if start + row.len() > dim {
                return Err(Error::InvalidArgument("row runs past the matrix".into()));
            }
            starts.push(start);
            values.extend(row);
            offsets.push(values.len());
        }
        Ok(Self { dim, starts, offsets, values })
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let dim = dense.len();
        let rows = dense
            .iter()
            .map(|r| {
                let first = r.iter().position(|&v| v != 0.0).unwrap_or(0);
                let last = r.iter().rposition(|&v| v != 0.0).unwrap_or(0);
                (first, r[first..=last.max(first)].to_vec())
            })
            .collect();
        Self::from_rows(dim, rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(first column, entries)` of row `i`.
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (self.starts[i], &self.values[self.offsets[i]..self.offsets[i + 1]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (start, r) = self.row(i);
        if j >= start && j < start + r.len() {
            r[j - start]
        } else {
            0.0
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `out = v^T W`.
    pub fn left_multiply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let (start, r) = self.row(i);
            for (o, w) in out[start..start + r.len()].iter_mut().zip(r) {
                *o += vi * w;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteChain {
    pub grid: Grid,
    pub transition: BandMatrix,
    pub stationary: Option<Vec<f64>>,
}

/// Gaussian transition kernel of one Euler step on the grid, rows normalised.
pub fn transition_matrix<P: Potential>(potential: &P, grid: &Grid, sigma: f64) -> Result<DiscreteChain> {
    let dt = grid.dt();
    let pts = grid.points();
    let s = sigma * dt.sqrt();
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let half = WINDOW_SIGMAS * s;
    let norm = 1.0 / (s * (2.0 * PI).sqrt());
    let mut rows = Vec::with_capacity(pts.len());
    for (i, &x) in pts.iter().enumerate() {
        let mean = x + potential.force(x) * dt;
        let first = pts.partition_point(|&y| y < mean - half);
        let end = pts.partition_point(|&y| y <= mean + half);
        if first >= end {
            return Err(Error::EmptyRow { source_index: i });
        }
        let mut row: Vec<f64> = pts[first..end]
            .iter()
            .map(|&y| {
                let z = (y - mean) / s;
                norm * (-0.5 * z * z).exp()
            })
            .collect();
        let total: f64 = row.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyRow { source_index: i });
        }
        row.iter_mut().for_each(|w| *w /= total);
        rows.push((first, row));
    }
    Ok(DiscreteChain {
        grid: grid.clone(),
        transition: BandMatrix::from_rows(pts.len(), rows)?,
        stationary: None,
    })
}

/// Probability mass of the density in each grid cell `[x - dx/2, x + dx/2]`,
/// normalised to sum to one.
pub fn initial_from_density(grid: &Grid, density: &DensityModel) -> Vec<f64> {
    let half = 0.5 * grid.dx();
    let mut v: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| (density.cdf(x + half) - density.cdf(x - half)).max(0.0))
        .collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|p| *p /= total);
    } else {
        let n = v.len() as f64;
        v.iter_mut().for_each(|p| *p = 1.0 / n);
    }
    v
}

/// Stationary vector `pi^T W = pi^T` by power iteration from `initial`.
pub fn stationary_distribution(chain: &DiscreteChain, initial: &[f64]) -> Result<Vec<f64>> {
    let w = &chain.transition;
    if initial.len() != w.dim() {
        return Err(Error::InvalidArgument(format!(
            "initial vector has length {}, chain has {} states",
            initial.len(),
            w.dim()
        )));
    }
    let total: f64 = initial.iter().sum();
    if !(total > 0.0) || initial.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidArgument("initial vector must be a nonnegative nonzero measure".into()));
    }
    let mut pi: Vec<f64> = initial.iter().map(|p| p / total).collect();
    let mut next = vec![0.0; pi.len()];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_POWER_ITERATIONS {
        w.left_multiply(&pi, &mut next);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= s);
        residual = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if residual < STATIONARY_TOLERANCE {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence { iterations: MAX_POWER_ITERATIONS, residual })
}

/// `max |pi^T W - pi^T|`.
pub fn stationarity_residual(w: &BandMatrix, pi: &[f64]) -> f64 {
    let mut out = vec![0.0; pi.len()];
    w.left_multiply(pi, &mut out);
    out.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Continuous stationary density: cubic spline through `(x_i, pi_i / dx)`,
/// clamped at zero and renormalised on the grid range.
#[derive(Debug, Clone)]
pub struct StationaryDensity {
    spline: CubicSpline,
    norm: f64,
    x_min: f64,
    x_max: f64,
}

const SIMPSON_PANELS: usize = 8;

impl StationaryDensity {
    pub fn new(grid: &Grid, pi: &[f64]) -> Result<Self> {
        let dx = grid.dx();
        let y: Vec<f64> = pi.iter().map(|p| p / dx).collect();
        let spline = CubicSpline::new(grid.points().to_vec(), y)?;
        let mut out = Self { spline, norm: 1.0, x_min: grid.x_min(), x_max: grid.x_max() };
        let mass = out.clamped_integral();
        if !(mass > 0.0) {
            return Err(Error::DegenerateData("stationary vector has no mass".into()));
        }
        out.norm = mass;
        Ok(out)
    }

    fn clamped_integral(&self) -> f64 {
        // composite Simpson on each knot interval
        let knots = self.spline.knots();
        let mut total = 0.0;
        for w in knots.windows(2) {
            let h = (w[1] - w[0]) / SIMPSON_PANELS as f64;
            let mut acc = 0.0;
            for k in 0..=SIMPSON_PANELS {
                let x = if k == SIMPSON_PANELS { w[1] } else { w[0] + k as f64 * h };
                let c = if k == 0 || k == SIMPSON_PANELS { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += c * self.spline.eval(x).max(0.0);
            }
            total += acc * h / 3.0;
        }
        total
    }

    /// Spline value before clamping and renormalisation.
    pub fn raw(&self, x: f64) -> f64 {
        self.spline.eval(x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.x_min || x > self.x_max {
            return 0.0;
        }
        self.spline.eval(x).max(0.0) / self.norm
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }
}

pub fn continuous_density(chain: &DiscreteChain) -> Result<StationaryDensity> {
    let pi = chain
        .stationary
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("chain has no stationary vector".into()))?;
    StationaryDensity::new(&chain.grid, pi)
}

/// Squared Hellinger distance `1/2 int (sqrt p - sqrt q)^2` by the trapezoid
/// rule on the nodes `x`.
pub fn hellinger(x: &[f64], p: &[f64], q: &[f64]) -> f64 {
    let d: Vec<f64> = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let r = a.max(0.0).sqrt() - b.max(0.0).sqrt();
            r * r
        })
        .collect();
    0.5 * quad::trapezoid(x, &d)
}

/// Density values at `x`, rescaled to unit trapezoid mass.
pub fn normalized_on(x: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().map(|&t| f(t)).collect();
    let mass = quad::trapezoid(x, &v);
    if mass > 0.0 {
        v.iter_mut().for_each(|p| *p /= mass);
    }
    v
}

/// Fitted overdamped Langevin model `dx/dt = force(x) + sigma dW/dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinModel {
    pub landscape: EnergyLandscape,
    pub sigma: f64,
    pub grid: GridParams,
}

impl LangevinModel {
    pub const BETA: f64 = 1.0;

    pub fn new(landscape: EnergyLandscape, sigma: f64, grid: GridParams) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { landscape, sigma, grid })
    }

    pub fn force(&self, x: f64) -> f64 {
        self.landscape.force(x)
    }

    /// Chain on the model grid with its stationary vector.
    pub fn chain(&self) -> Result<DiscreteChain> {
        let grid = Grid::from_params(self.grid)?;
        let mut chain = transition_matrix(&self.landscape, &grid, self.sigma)?;
        let init = initial_from_density(&grid, self.landscape.density());
        chain.stationary = Some(stationary_distribution(&chain, &init)?);
        Ok(chain)
    }
}

/// How the grid follows sigma during the fit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum GridMode {
    /// Rebuild `dt` and `dx` for every candidate sigma.
    #[default]
    PerSigma,
    /// Keep the grid built for `reference_sigma` throughout.
    Fixed { reference_sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSearch {
    pub lo: f64,
    pub hi: f64,
    pub fineness: u32,
    /// Stop once the bracket is narrower than `rel_tol * (hi - lo)`.
    pub rel_tol: f64,
    pub grid_mode: GridMode,
}

impl Default for SigmaSearch {
    fn default() -> Self {
        Self { lo: 0.05, hi: 10.0, fineness: DEFAULT_FINENESS, rel_tol: 1e-3, grid_mode: GridMode::PerSigma }
    }
}

#[derive(Debug, Clone)]
pub struct SigmaFit {
    pub model: LangevinModel,
    /// Squared Hellinger distance at the returned sigma.
    pub cost: f64,
    /// Final golden-section bracket.
    pub bracket: (f64, f64),
    /// Every `(sigma, cost)` pair evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
    /// Optimum within 1% of either bound.
    pub at_boundary: bool,
}

/// Squared Hellinger distance between the chain's stationary density at
/// `sigma` and the data density, both on the chain grid.
pub fn sigma_cost(landscape: &EnergyLandscape, range: (f64, f64), sigma: f64, search: &SigmaSearch) -> Result<(f64, Grid)> {
    let grid = match search.grid_mode {
        GridMode::PerSigma => Grid::build(range.0, range.1, sigma, search.fineness)?,
        GridMode::Fixed { reference_sigma } => Grid::build(range.0, range.1, reference_sigma, search.fineness)?,
    };
    let mut chain = transition_matrix(landscape, &grid, sigma)?;
    let init = initial_from_density(&grid, landscape.density());
    chain.stationary = Some(stationary_distribution(&chain, &init)?);
    let model_density = continuous_density(&chain)?;
    let x = grid.points();
    let p = normalized_on(x, |t| model_density.eval(t));
    let q = normalized_on(x, |t| landscape.density().pdf(t));
    Ok((hellinger(x, &p, &q), grid))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the sigma minimising [`sigma_cost`].
///
/// Candidates whose grid is too coarse for the drift (`EmptyRow`) score the
/// maximal distance 1.
pub fn fit_sigma(landscape: &EnergyLandscape, range: (f64, f64), search: &SigmaSearch) -> Result<SigmaFit> {
    let (lo, hi) = (search.lo, search.hi);
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("sigma bounds ({lo}, {hi}) must satisfy 0 < lo < hi")));
    }
    let mut evaluations = Vec::new();
    let mut best: Option<(f64, f64, Grid)> = None;
    let mut eval = |sigma: f64| -> Result<f64> {
        let (cost, grid) = match sigma_cost(landscape, range, sigma, search) {
            Ok(v) => v,
            Err(Error::EmptyRow { .. }) => (1.0, Grid::build(range.0, range.1, sigma, search.fineness)?),
            Err(e) => return Err(e),
        };
        evaluations.push((sigma, cost));
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((sigma, cost, grid));
        }
        Ok(cost)
    };

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let width = search.rel_tol * (hi - lo);
    while b - a > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    let (sigma, cost, grid) = best.expect("at least two evaluations");
    let margin = 0.01 * (hi - lo);
    let at_boundary = sigma - lo < margin || hi - sigma < margin;
    Ok(SigmaFit {
        model: LangevinModel::new(landscape.clone(), sigma, grid.params())?,
        cost,
        bracket: (a, b),
        evaluations,
        at_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Flat;
    impl Potential for Flat {
        fn energy(&self, _x: f64) -> f64 {
            0.0
        }
        fn force(&self, _x: f64) -> f64 {
            0.0
        }
    }

    struct Constant(f64);
    impl Potential for Constant {
        fn energy(&self, x: f64) -> f64 {
            -self.0 * x
        }
        fn force(&self, _x: f64) -> f64 {
            self.0
        }
    }

    #[test]
    fn grid_formulas() {
        let g = Grid::build(-3.0, 3.0, 1.0, 10).unwrap();
        assert_abs_diff_eq!(g.dt(), 0.009, epsilon = 1e-15);
        assert_abs_diff_eq!(g.dx(), 0.009f64.sqrt() / 10.0, epsilon = 1e-15);
        assert_eq!(g.len(), (6.0 / g.dx()).floor() as usize + 1);
        assert_eq!(g.len(), 633);
        assert_eq!(*g.points().last().unwrap(), 3.0);
        assert_eq!(g.points()[0], -3.0);
    }

    #[test]
    fn doubling_fineness_halves_dx() {
        let a = Grid::build(-3.0, 3.0, 1.0, 10).unwrap();
        let b = Grid::build(-3.0, 3.0, 1.0, 20).unwrap();
        assert_abs_diff_eq!(b.dx(), a.dx() / 2.0, epsilon = 1e-15);
        assert!((b.len() as f64 / a.len() as f64 - 2.0).abs() < 0.01);
    }

    #[test]
    fn diffusion_relation_holds() {
        let g = Grid::build(-2.0, 5.0, 1.7, 10).unwrap();
        assert_abs_diff_eq!(1.7 * (1000.0 * g.dt()).sqrt(), 3.5, epsilon = 1e-12);
    }

    #[test]
    fn data_range_uses_floor_and_ceil() {
        assert_eq!(data_range(&[-2.3, 0.1, 2.7]), (-3.0, 3.0));
        assert_eq!(data_range(&[1.0, 1.0]), (1.0, 2.0));
    }

    #[test]
    fn flat_rows_are_symmetric() {
        let g = Grid::build(-3.0, 3.0, 1.0, 10).unwrap();
        let chain = transition_matrix(&Flat, &g, 1.0).unwrap();
        let w = &chain.transition;
        let i = g.len() / 2;
        // the window edge sits exactly on +-40 dx, so only test strictly inside it
        for k in 1..40 {
            assert_abs_diff_eq!(w.get(i, i - k), w.get(i, i + k), epsilon = 1e-15);
            assert!(w.get(i, i) > w.get(i, i + k));
        }
    }

    #[test]
    fn rows_sum_to_one_and_stay_banded() {
        let g = Grid::build(-3.0, 3.0, 1.3, 10).unwrap();
        let l = EnergyLandscape::new(DensityModel::with_bandwidth(vec![-1.0, -0.8, 0.5, 1.2], 0.4).unwrap());
        let chain = transition_matrix(&l, &g, 1.3).unwrap();
        let limit = (8.0 * 1.3 * g.dt().sqrt() / g.dx()).ceil() as usize + 1;
        for i in 0..g.len() {
            let (_, row) = chain.transition.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&w| w >= 0.0));
            assert!(row.len() <= limit);
        }
    }

    #[test]
    fn drift_moves_row_mode() {
        let g = Grid::build(-3.0, 3.0, 1.0, 10).unwrap();
        // force * dt = -2 dx exactly
        let force = -2.0 * g.dx() / g.dt();
        let chain = transition_matrix(&Constant(force), &g, 1.0).unwrap();
        let i = g.len() / 2;
        let (start, row) = chain.transition.row(i);
        let argmax = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k + start)
            .unwrap();
        assert_eq!(argmax, i - 2);
    }

    #[test]
    fn empty_row_when_drift_leaves_grid() {
        let g = Grid::build(-1.0, 1.0, 1.0, 10).unwrap();
        assert!(matches!(
            transition_matrix(&Constant(1e6), &g, 1.0),
            Err(Error::EmptyRow { .. })
        ));
    }

    fn chain_from_dense(w: &[Vec<f64>]) -> DiscreteChain {
        DiscreteChain {
            grid: Grid::build(0.0, 1.0, 1.0, 1).unwrap(),
            transition: BandMatrix::from_dense(w).unwrap(),
            stationary: None,
        }
    }

    #[test]
    fn two_state_symmetric_chain() {
        let c = chain_from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let pi = stationary_distribution(&c, &[0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn identity_returns_start() {
        let c = chain_from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let pi = stationary_distribution(&c, &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(pi, vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn asymmetric_chain_left_eigenvector() {
        // pi = (q, p) / (p + q) for [[1-p, p], [q, 1-q]]
        let c = chain_from_dense(&[vec![0.9, 0.1], vec![0.3, 0.7]]);
        let pi = stationary_distribution(&c, &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(pi[0], 0.75, epsilon = 1e-9);
        assert!(stationarity_residual(&c.transition, &pi) < 1e-10);
    }

    #[test]
    fn periodic_chain_does_not_converge() {
        let c = chain_from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(
            stationary_distribution(&c, &[1.0, 0.0]),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn uniform_pi_gives_flat_density() {
        let g = Grid::build(-2.0, 2.0, 1.0, 10).unwrap();
        let n = g.len();
        let mut chain = transition_matrix(&Flat, &g, 1.0).unwrap();
        chain.stationary = Some(vec![1.0 / n as f64; n]);
        let d = continuous_density(&chain).unwrap();
        for x in [-2.0, -1.234, 0.0, 0.7, 1.999] {
            assert_abs_diff_eq!(d.eval(x), 0.25, epsilon = 1e-9);
        }
        let pts = g.points();
        assert_abs_diff_eq!(d.raw(pts[17]), 1.0 / n as f64 / g.dx(), epsilon = 1e-15);
    }

    #[test]
    fn stationary_density_normalised() {
        let g = Grid::build(-3.0, 3.0, 1.4, 10).unwrap();
        let l = EnergyLandscape::new(DensityModel::with_bandwidth(vec![-1.2, -1.0, 0.9, 1.3], 0.35).unwrap());
        let mut chain = transition_matrix(&l, &g, 1.4).unwrap();
        let init = initial_from_density(&g, l.density());
        let pi = stationary_distribution(&chain, &init).unwrap();
        chain.stationary = Some(pi.clone());
        let d = continuous_density(&chain).unwrap();
        for (k, &x) in g.points().iter().enumerate().step_by(37) {
            assert_abs_diff_eq!(d.raw(x), pi[k] / g.dx(), epsilon = 1e-12);
        }
        let total = quad::trapezoid_fn(|x| d.eval(x), -3.0, 3.0, 200_000);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn stationary_independent_of_start() {
        let g = Grid::build(-3.0, 3.0, 1.4, 10).unwrap();
        let l = EnergyLandscape::new(DensityModel::with_bandwidth(vec![-1.2, -1.0, 0.9, 1.3], 0.35).unwrap());
        let chain = transition_matrix(&l, &g, 1.4).unwrap();
        let a = stationary_distribution(&chain, &initial_from_density(&g, l.density())).unwrap();
        let b = stationary_distribution(&chain, &vec![1.0; g.len()]).unwrap();
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
        assert!(stationarity_residual(&chain.transition, &a) < 1e-8);
    }

    #[test]
    fn hellinger_cases() {
        let x: Vec<f64> = (0..=4000).map(|i| -10.0 + i as f64 * 0.005).collect();
        let gauss = |m: f64| move |t: f64| (-(t - m) * (t - m) / 2.0).exp() / (2.0 * PI).sqrt();
        let p: Vec<f64> = x.iter().map(|&t| gauss(0.0)(t)).collect();
        let q: Vec<f64> = x.iter().map(|&t| gauss(1.0)(t)).collect();
        assert_abs_diff_eq!(hellinger(&x, &p, &p), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hellinger(&x, &p, &q), 1.0 - (-1.0f64 / 8.0).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(hellinger(&x, &p, &q), 0.1175, epsilon = 1e-4);
        assert_abs_diff_eq!(hellinger(&x, &p, &q), hellinger(&x, &q, &p), epsilon = 1e-15);

        let left: Vec<f64> = x.iter().map(|&t| if t < -0.0025 { 1.0 } else { 0.0 }).collect();
        let right: Vec<f64> = x.iter().map(|&t| if t > 0.0025 { 1.0 } else { 0.0 }).collect();
        let lp = normalized_on(&x, |t| left[((t + 10.0) / 0.005).round() as usize]);
        let rp = normalized_on(&x, |t| right[((t + 10.0) / 0.005).round() as usize]);
        assert_abs_diff_eq!(hellinger(&x, &lp, &rp), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn band_matrix_left_multiply() {
        let w = BandMatrix::from_dense(&[vec![0.2, 0.8, 0.0], vec![0.0, 0.5, 0.5], vec![0.0, 0.0, 1.0]]).unwrap();
        let mut out = vec![0.0; 3];
        w.left_multiply(&[1.0, 1.0, 1.0], &mut out);
        assert_eq!(out, vec![0.2, 1.3, 1.5]);
        assert_eq!(w.get(0, 2), 0.0);
        assert_eq!(w.get(1, 2), 0.5);
    }

    #[test]
    fn fit_bounds_validated() {
        let l = EnergyLandscape::new(DensityModel::with_bandwidth(vec![-1.0, 1.0], 0.5).unwrap());
        let s = SigmaSearch { lo: 2.0, hi: 1.0, ..SigmaSearch::default() };
        assert!(fit_sigma(&l, (-3.0, 3.0), &s).is_err());
    }
}
