//! Gaussian kernel density estimate of a one-dimensional cross-section.
//!
//! All kernel sums are exact `O(n)` loops. Sums are shifted by the largest
//! exponent before exponentiation, so `log_pdf` and the log-density slope stay
//! finite even where every kernel underflows.

use crate::error::{Error, Result};
use crate::stats;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Observed values of one variable for many individuals at a single time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl CrossSection {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::DegenerateData(format!(
                "cross-section needs at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateData(format!(
                "value {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { values, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::new(self.values.iter().map(|&v| f(v)).collect())?;
        out.label = self.label.clone();
        Ok(out)
    }
}

/// Denominator used for the standard deviation in the bandwidth rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdConvention {
    /// `n - 1`
    #[default]
    Sample,
    /// `n`
    Population,
}

/// Silverman's rule of thumb `0.9 min(std, IQR / 1.34) n^(-1/5)` with the
/// sample standard deviation and linearly interpolated quartiles.
pub fn silverman_bandwidth(data: &CrossSection) -> Result<f64> {
    silverman_bandwidth_with(data, StdConvention::Sample)
}

pub fn silverman_bandwidth_with(data: &CrossSection, convention: StdConvention) -> Result<f64> {
    let v = data.values();
    let std = match convention {
        StdConvention::Sample => stats::sample_std(v),
        StdConvention::Population => stats::population_std(v),
    };
    let spread = stats::iqr(v) / 1.34;
    let scale = match (std > 0.0, spread > 0.0) {
        (true, true) => std.min(spread),
        (true, false) => std,
        (false, true) => spread,
        (false, false) => {
            return Err(Error::DegenerateData(
                "both standard deviation and IQR are zero".into(),
            ))
        }
    };
    Ok(0.9 * scale * (v.len() as f64).powf(-0.2))
}

/// Gaussian KDE `p(x) = (n h sqrt(2 pi))^-1 sum_i exp(-(x - x_i)^2 / (2 h^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl DensityModel {
    /// Fits the bandwidth with Silverman's rule.
    pub fn fit(data: &CrossSection) -> Result<Self> {
        let h = silverman_bandwidth(data)?;
        Self::with_bandwidth(data.values().to_vec(), h)
    }

    /// Builds a model from raw kernel centres. A single centre is accepted.
    pub fn with_bandwidth(samples: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::DegenerateData("no kernel centres".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateData("non-finite kernel centre".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Self { samples, bandwidth })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn min_sample(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_sample(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn inv_two_h2(&self) -> f64 {
        1.0 / (2.0 * self.bandwidth * self.bandwidth)
    }

    fn min_sq_dist(&self, x: f64) -> f64 {
        self.samples
            .iter()
            .map(|&s| (x - s) * (x - s))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let c = self.inv_two_h2();
        let d0 = self.min_sq_dist(x);
        let sum: f64 = self
            .samples
            .iter()
            .map(|&s| (-((x - s) * (x - s) - d0) * c).exp())
            .sum();
        let norm = self.samples.len() as f64 * self.bandwidth * (2.0 * PI).sqrt();
        sum.ln() - d0 * c - norm.ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    /// `d log p / dx` as the ratio of kernel-weighted offsets to kernel sum.
    pub fn log_pdf_derivative(&self, x: f64) -> f64 {
        let c = self.inv_two_h2();
        let d0 = self.min_sq_dist(x);
        let (mut num, mut den) = (0.0, 0.0);
        for &s in &self.samples {
            let k = (-((x - s) * (x - s) - d0) * c).exp();
            num += (s - x) * k;
            den += k;
        }
        num / (den * self.bandwidth * self.bandwidth)
    }

    /// Mixture CDF, the mean of `Phi((x - x_i) / h)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        self.samples
            .iter()
            .map(|&s| stats::normal_cdf((x - s) / h))
            .sum::<f64>()
            / self.samples.len() as f64
    }
}
