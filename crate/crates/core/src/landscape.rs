//! Free-energy landscape `F(x) = -log p(x)` (with `beta = 1`) and detection of
//! its attractors and tipping points.

use crate::error::{Error, Result};
use crate::kde::DensityModel;
use serde::{Deserialize, Serialize};

/// A one-dimensional potential with its drift.
///
/// `force` is `-dF/dx`: a positive value pushes the state upward.
pub trait Potential {
    fn energy(&self, x: f64) -> f64;
    fn force(&self, x: f64) -> f64;
}

impl<P: Potential + ?Sized> Potential for &P {
    fn energy(&self, x: f64) -> f64 {
        (**self).energy(x)
    }
    fn force(&self, x: f64) -> f64 {
        (**self).force(x)
    }
}

/// Boltzmann landscape of a KDE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLandscape {
    density: DensityModel,
}

impl EnergyLandscape {
    pub const BETA: f64 = 1.0;

    pub fn new(density: DensityModel) -> Self {
        Self { density }
    }

    pub fn density(&self) -> &DensityModel {
        &self.density
    }

    pub fn energy(&self, x: f64) -> f64 {
        -self.density.log_pdf(x)
    }

    pub fn force(&self, x: f64) -> f64 {
        self.density.log_pdf_derivative(x)
    }
}

impl Potential for EnergyLandscape {
    fn energy(&self, x: f64) -> f64 {
        EnergyLandscape::energy(self, x)
    }
    fn force(&self, x: f64) -> f64 {
        EnergyLandscape::force(self, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeFeatures {
    /// Local minima of the energy, ascending.
    pub attractors: Vec<f64>,
    /// Local maxima of the energy, ascending.
    pub tipping_points: Vec<f64>,
}

pub const DEFAULT_SCAN_POINTS: usize = 2001;
const ROOT_TOLERANCE: f64 = 1e-8;

/// Locates zeros of the force on `[x_min, x_max]`.
///
/// A `+ -> -` sign change of the force is an attractor, `- -> +` a tipping
/// point. Brackets from a uniform scan are refined by bisection.
pub fn find_features<P: Potential>(
    potential: &P,
    x_min: f64,
    x_max: f64,
    scan_points: usize,
) -> Result<LandscapeFeatures> {
    if !(x_min < x_max) {
        return Err(Error::InvalidArgument(format!(
            "scan range [{x_min}, {x_max}] is empty"
        )));
    }
    if scan_points < 100 {
        return Err(Error::InvalidArgument(format!(
            "scan_points must be >= 100, got {scan_points}"
        )));
    }
    let step = (x_max - x_min) / (scan_points - 1) as f64;
    let mut attractors = Vec::new();
    let mut tipping_points = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for j in 0..scan_points {
        let x = if j + 1 == scan_points { x_max } else { x_min + j as f64 * step };
        let f = potential.force(x);
        if f == 0.0 {
            continue;
        }
        if let Some((xl, fl)) = last {
            if fl.signum() != f.signum() {
                let root = bisect(potential, xl, x, fl);
                if fl > 0.0 {
                    attractors.push(root);
                } else {
                    tipping_points.push(root);
                }
            }
        }
        last = Some((x, f));
    }
    if attractors.is_empty() {
        return Err(Error::NoAttractorFound { x_min, x_max });
    }
    Ok(LandscapeFeatures { attractors, tipping_points })
}

fn bisect<P: Potential>(potential: &P, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let sign_lo = f_lo.signum();
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let fm = potential.force(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl LandscapeFeatures {
    /// Removes tipping points whose barrier, measured from the shallower
    /// neighbouring attractor, is below `min_barrier`; the shallower
    /// attractor is merged away with it.
    pub fn prune<P: Potential>(&self, potential: &P, min_barrier: f64) -> Self {
        if min_barrier <= 0.0 {
            return self.clone();
        }
        let mut attractors = self.attractors.clone();
        let mut tips = self.tipping_points.clone();
        loop {
            let mut weakest: Option<(usize, f64)> = None;
            for (k, &tp) in tips.iter().enumerate() {
                let left = attractors.iter().copied().rfind(|&a| a < tp);
                let right = attractors.iter().copied().find(|&a| a > tp);
                let (Some(l), Some(r)) = (left, right) else { continue };
                let barrier = potential.energy(tp) - potential.energy(l).max(potential.energy(r));
                if barrier < min_barrier && weakest.is_none_or(|(_, b)| barrier < b) {
                    weakest = Some((k, barrier));
                }
            }
            let Some((k, _)) = weakest else { break };
            let tp = tips.remove(k);
            let l = attractors.iter().rposition(|&a| a < tp).unwrap();
            let r = l + 1;
            let drop = if potential.energy(attractors[l]) > potential.energy(attractors[r]) { l } else { r };
            attractors.remove(drop);
        }
        Self { attractors, tipping_points: tips }
    }
}
