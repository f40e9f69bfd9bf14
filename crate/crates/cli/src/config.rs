use crossdyn::markov::{GridMode, SigmaSearch, DEFAULT_FINENESS};
use crossdyn::validate::{DEFAULT_MIN_CLUSTER, DEFAULT_REPETITIONS};
use crossdyn::{Error, FitConfig, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// What to do with individuals whose follow-up equals their baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZeroDisplacement {
    #[default]
    Exclude,
}

/// Settings shared by all commands; read from `--config` and overridden by
/// flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub fineness: u32,
    pub sigma_bounds: (f64, f64),
    pub sigma_rel_tol: f64,
    pub fixed_grid: bool,
    pub quadrature_tol: f64,
    pub min_cluster_size: usize,
    pub delta_t_scan: (u32, u32),
    pub delta_t_unit: Option<f64>,
    pub null_repetitions: usize,
    pub bootstrap_repetitions: usize,
    pub zero_displacement: ZeroDisplacement,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            fineness: DEFAULT_FINENESS,
            sigma_bounds: (0.05, 10.0),
            sigma_rel_tol: 1e-3,
            fixed_grid: false,
            quadrature_tol: crossdyn::intervene::DEFAULT_TOLERANCE,
            min_cluster_size: DEFAULT_MIN_CLUSTER,
            delta_t_scan: (1, 100),
            delta_t_unit: None,
            null_repetitions: DEFAULT_REPETITIONS,
            bootstrap_repetitions: DEFAULT_REPETITIONS,
            zero_displacement: ZeroDisplacement::Exclude,
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let (lo, hi) = self.sigma_bounds;
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid(format!("sigma bounds ({lo}, {hi}) must satisfy 0 < lo < hi")));
        }
        if self.fineness == 0 {
            return Err(invalid("fineness must be positive".into()));
        }
        if !(self.sigma_rel_tol > 0.0 && self.sigma_rel_tol < 1.0) {
            return Err(invalid(format!("sigma_rel_tol must lie in (0, 1), got {}", self.sigma_rel_tol)));
        }
        if !(self.quadrature_tol > 0.0) {
            return Err(invalid("quadrature_tol must be positive".into()));
        }
        let (a, b) = self.delta_t_scan;
        if a == 0 || b < a {
            return Err(invalid(format!("delta_t_scan ({a}, {b}) must satisfy 1 <= lo <= hi")));
        }
        if self.delta_t_unit.is_some_and(|u| !(u > 0.0)) {
            return Err(invalid("delta_t_unit must be positive".into()));
        }
        if self.null_repetitions == 0 || self.bootstrap_repetitions == 0 {
            return Err(invalid("repetition counts must be positive".into()));
        }
        Ok(())
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            sigma: SigmaSearch {
                lo: self.sigma_bounds.0,
                hi: self.sigma_bounds.1,
                fineness: self.fineness,
                rel_tol: self.sigma_rel_tol,
                grid_mode: if self.fixed_grid { GridMode::Fixed { reference_sigma: 1.0 } } else { GridMode::PerSigma },
            },
            ..FitConfig::default()
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| invalid("this command is stochastic; pass --seed".into()))
    }
}
