//! End-to-end fit: standardise, estimate the density, fit sigma, locate the
//! landscape features.

use crate::error::{Error, Result};
use crate::kde::{silverman_bandwidth_with, CrossSection, DensityModel, StdConvention};
use crate::landscape::{find_features, EnergyLandscape, LandscapeFeatures, DEFAULT_SCAN_POINTS};
use crate::markov::{data_range, fit_sigma, LangevinModel, SigmaSearch};
use crate::validate::{standardize, Standardization};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub standardize: bool,
    pub std_convention: StdConvention,
    pub sigma: SigmaSearch,
    pub scan_points: usize,
    /// Minimum barrier height for reported tipping points; 0 keeps all.
    pub min_barrier: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            standardize: true,
            std_convention: StdConvention::Sample,
            sigma: SigmaSearch::default(),
            scan_points: DEFAULT_SCAN_POINTS,
            min_barrier: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub transform: Standardization,
    pub model: LangevinModel,
    pub cost: f64,
    pub bracket: (f64, f64),
    pub at_boundary: bool,
    pub evaluations: Vec<(f64, f64)>,
}

impl FittedModel {
    /// Attractors and tipping points in model coordinates over the grid range.
    pub fn features(&self, config: &FitConfig) -> Result<LandscapeFeatures> {
        let f = find_features(&self.model.landscape, self.model.grid.x_min, self.model.grid.x_max, config.scan_points)?;
        Ok(f.prune(&self.model.landscape, config.min_barrier))
    }

    /// Features mapped back to the units of the input data.
    pub fn features_original_units(&self, config: &FitConfig) -> Result<LandscapeFeatures> {
        let f = self.features(config)?;
        Ok(LandscapeFeatures {
            attractors: f.attractors.iter().map(|&y| self.transform.invert(y)).collect(),
            tipping_points: f.tipping_points.iter().map(|&y| self.transform.invert(y)).collect(),
        })
    }
}

pub fn fit(data: &CrossSection, config: &FitConfig) -> Result<FittedModel> {
    if data.len() < 2 {
        return Err(Error::DegenerateData("need at least 2 observations".into()));
    }
    let (working, transform) = if config.standardize {
        standardize(data)?
    } else {
        (data.clone(), Standardization::identity())
    };
    let h = silverman_bandwidth_with(&working, config.std_convention)?;
    let density = DensityModel::with_bandwidth(working.values().to_vec(), h)?;
    let landscape = EnergyLandscape::new(density);
    let range = data_range(working.values());
    let sf = fit_sigma(&landscape, range, &config.sigma)?;
    Ok(FittedModel {
        transform,
        model: sf.model,
        cost: sf.cost,
        bracket: sf.bracket,
        at_boundary: sf.at_boundary,
        evaluations: sf.evaluations,
    })
}
