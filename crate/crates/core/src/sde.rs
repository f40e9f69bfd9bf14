//! Euler-Maruyama integration of `dx/dt = force(x) + sigma dW/dt` and
//! tipping-point transition counting.

use crate::error::{Error, Result};
use crate::landscape::Potential;
use crate::spline::CubicSpline;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|k| self.time(k))
    }

    pub fn total_time(&self) -> f64 {
        self.time(self.states.len().saturating_sub(1))
    }

    /// Drops the first `steps` states, re-zeroing the time axis.
    pub fn after(&self, steps: usize) -> Trajectory {
        Trajectory { dt: self.dt, states: self.states[steps.min(self.states.len())..].to_vec(), seed: self.seed }
    }
}

/// One Euler-Maruyama step.
#[inline]
pub fn em_step<P: Potential>(potential: &P, sigma: f64, x: f64, dt: f64, z: f64) -> f64 {
    x + potential.force(x) * dt + sigma * dt.sqrt() * z
}

/// `x_{k+1} = x_k + force(x_k) dt + sigma sqrt(dt) z_k` with `z_k` drawn from
/// a ChaCha8 generator seeded by `seed`. `sigma = 0` gives gradient descent.
pub fn simulate<P: Potential>(
    potential: &P,
    sigma: f64,
    x0: f64,
    dt: f64,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be >= 1".into()));
    }
    if !(sigma >= 0.0) || !x0.is_finite() {
        return Err(Error::InvalidArgument("sigma must be >= 0 and x0 finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0;
    states.push(x);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        x = em_step(potential, sigma, x, dt, z);
        states.push(x);
    }
    Ok(Trajectory { dt, states, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionStats {
    pub transition_count: u64,
    /// Model time per transition; absent when nothing crossed.
    pub mean_time_between: Option<f64>,
    pub total_time: f64,
}

impl TransitionStats {
    pub fn mean_time(&self) -> Result<f64> {
        self.mean_time_between.ok_or(Error::NoTransitions)
    }
}

/// Counts consecutive state pairs on strictly opposite sides of
/// `tipping_point`. A state exactly at the tipping point keeps the side of the
/// previous state.
pub fn count_transitions(traj: &Trajectory, tipping_point: f64) -> Result<TransitionStats> {
    if traj.len() < 2 {
        return Err(Error::InvalidArgument("trajectory needs at least 2 states".into()));
    }
    let mut side = 0.0f64;
    let mut count = 0u64;
    for &x in &traj.states {
        let s = (x - tipping_point).signum() * ((x != tipping_point) as u8 as f64);
        if s == 0.0 {
            continue;
        }
        if side != 0.0 && s != side {
            count += 1;
        }
        side = s;
    }
    let total_time = traj.total_time();
    Ok(TransitionStats {
        transition_count: count,
        mean_time_between: (count > 0).then(|| total_time / count as f64),
        total_time,
    })
}

/// Force of `inner` interpolated by a cubic spline on uniform nodes over
/// `[lo, hi]`; outside the table the exact force is used.
#[derive(Debug, Clone)]
pub struct ForceTable<P> {
    inner: P,
    spline: CubicSpline,
    lo: f64,
    hi: f64,
}

impl<P: Potential> ForceTable<P> {
    pub fn new(inner: P, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(hi > lo) || nodes < 4 {
            return Err(Error::InvalidArgument("force table needs hi > lo and >= 4 nodes".into()));
        }
        let step = (hi - lo) / (nodes - 1) as f64;
        let x: Vec<f64> = (0..nodes).map(|i| if i + 1 == nodes { hi } else { lo + i as f64 * step }).collect();
        let y: Vec<f64> = x.iter().map(|&t| inner.force(t)).collect();
        Ok(Self { spline: CubicSpline::new(x, y)?, inner, lo, hi })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Potential> Potential for ForceTable<P> {
    fn energy(&self, x: f64) -> f64 {
        self.inner.energy(x)
    }

    fn force(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            self.spline.eval(x)
        } else {
            self.inner.force(x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kde::DensityModel;
    use crate::landscape::EnergyLandscape;
    use approx::assert_abs_diff_eq;

    fn traj(states: Vec<f64>) -> Trajectory {
        Trajectory { dt: 0.5, states, seed: 0 }
    }

    fn two_point() -> EnergyLandscape {
        EnergyLandscape::new(DensityModel::with_bandwidth(vec![-1.0, 1.0], 1.0).unwrap())
    }

    fn single_well() -> EnergyLandscape {
        EnergyLandscape::new(DensityModel::with_bandwidth(vec![-0.2, 0.1, 0.4], 0.8).unwrap())
    }

    #[test]
    fn noiseless_at_symmetry_centre_is_constant() {
        let t = simulate(&two_point(), 0.0, 0.0, 0.01, 1000, 1).unwrap();
        assert!(t.states.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn noiseless_descends_to_attractor() {
        let l = single_well();
        let target = crate::landscape::find_features(&l, -3.0, 3.0, 2001).unwrap().attractors[0];
        let t = simulate(&l, 0.0, 2.5, 1e-2, 20_000, 1).unwrap();
        assert!(t.states.windows(2).all(|w| w[1] <= w[0]));
        assert_abs_diff_eq!(*t.states.last().unwrap(), target, epsilon = 1e-3);
        let e: Vec<f64> = t.states.iter().map(|&x| l.energy(x)).collect();
        assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let l = two_point();
        let a = simulate(&l, 1.3, 0.2, 1e-3, 5000, 42).unwrap();
        let b = simulate(&l, 1.3, 0.2, 1e-3, 5000, 42).unwrap();
        let c = simulate(&l, 1.3, 0.2, 1e-3, 5000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn rejects_bad_arguments() {
        let l = two_point();
        assert!(simulate(&l, 1.0, 0.0, 0.0, 10, 0).is_err());
        assert!(simulate(&l, 1.0, 0.0, 0.1, 0, 0).is_err());
    }

    #[test]
    fn counts_sign_flips() {
        let s = count_transitions(&traj(vec![-1.0, 1.0, -0.5]), 0.0).unwrap();
        assert_eq!(s.transition_count, 2);
        assert_abs_diff_eq!(s.mean_time_between.unwrap(), 0.5);
        assert_abs_diff_eq!(s.total_time, 1.0);
    }

    #[test]
    fn no_flips_reported_absent() {
        let s = count_transitions(&traj(vec![0.5, 1.0, 2.0]), 0.0).unwrap();
        assert_eq!(s.transition_count, 0);
        assert!(s.mean_time_between.is_none());
        assert!(matches!(s.mean_time(), Err(Error::NoTransitions)));
    }

    #[test]
    fn exact_hits_inherit_previous_side() {
        let s = count_transitions(&traj(vec![-1.0, 0.0, -1.0, 0.0, 1.0]), 0.0).unwrap();
        assert_eq!(s.transition_count, 1);
        let s = count_transitions(&traj(vec![2.0, 1.0, 3.0]), 1.0).unwrap();
        assert_eq!(s.transition_count, 0);
    }

    #[test]
    fn constant_tail_adds_nothing() {
        let mut states = vec![-1.0, 0.5, -0.2, 0.3];
        let before = count_transitions(&traj(states.clone()), 0.0).unwrap().transition_count;
        states.extend(std::iter::repeat_n(0.3, 10));
        assert_eq!(count_transitions(&traj(states), 0.0).unwrap().transition_count, before);
    }

    #[test]
    fn force_table_tracks_exact_force() {
        let l = EnergyLandscape::new(DensityModel::with_bandwidth(vec![-1.1, -0.9, 0.2, 1.0, 1.3], 0.3).unwrap());
        let t = ForceTable::new(&l, -3.0, 3.0, 4001).unwrap();
        for k in 0..=600 {
            let x = -3.5 + k as f64 * 0.01166;
            assert_abs_diff_eq!(t.force(x), l.force(x), epsilon = 1e-6 * (1.0 + l.force(x).abs()));
        }
    }
}
