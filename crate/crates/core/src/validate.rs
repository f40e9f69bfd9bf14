//! Checks a fitted model's directional predictions against follow-up
//! observations.
//!
//! Each individual's displacement over `dt` is modelled as a normal with mean
//! `force(x) dt` and standard deviation `sigma sqrt(dt)`. The probability the
//! model assigns to the observed direction is that individual's accuracy. The
//! cohort mean is compared with a random-choice null (upper 97.5% quantile,
//! `U_CI`) and with the per-individual ceiling `max(P_PD, P_ND)`, then
//! rescaled so that `U_CI -> 0` and the ceiling `-> 1`.

use crate::error::{Error, Result};
use crate::kde::CrossSection;
use crate::markov::LangevinModel;
use crate::stats;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_REPETITIONS: usize = 1000;
pub const DEFAULT_MIN_CLUSTER: usize = 20;

/// `y = (x - median) / std` with the sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub median: f64,
    pub std: f64,
}

impl Standardization {
    pub fn identity() -> Self {
        Self { median: 0.0, std: 1.0 }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.median) / self.std
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.median + self.std * y
    }
}

pub fn standardize(data: &CrossSection) -> Result<(CrossSection, Standardization)> {
    let std = stats::sample_std(data.values());
    if !(std > 0.0) {
        return Err(Error::DegenerateData("standard deviation is zero".into()));
    }
    let t = Standardization { median: stats::median(data.values()), std };
    Ok((data.map(|x| t.apply(x))?, t))
}

/// One individual's baseline and labelled follow-up measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalPair {
    pub id: String,
    pub baseline: f64,
    pub followups: Vec<(String, f64)>,
}

/// `(P_PD, P_ND)` for a normal displacement with mean `force dt` and standard
/// deviation `sigma sqrt(dt)`.
pub fn probabilities_from(force: f64, sigma: f64, dt: f64) -> (f64, f64) {
    let mu = force * dt;
    let s = sigma * dt.sqrt();
    let p_pd = if s > 0.0 {
        stats::normal_cdf(mu / s)
    } else if mu > 0.0 {
        1.0
    } else if mu < 0.0 {
        0.0
    } else {
        0.5
    };
    (p_pd, 1.0 - p_pd)
}

pub fn displacement_probabilities(model: &LangevinModel, x: f64, dt: f64) -> (f64, f64) {
    probabilities_from(model.force(x), model.sigma, dt)
}

/// Model probability of a positive move paired with the observed displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub p_pd: f64,
    pub displacement: f64,
}

impl Outcome {
    /// `A_i`, or `None` for a zero displacement.
    pub fn accuracy(&self) -> Option<f64> {
        if self.displacement > 0.0 {
            Some(self.p_pd)
        } else if self.displacement < 0.0 {
            Some(1.0 - self.p_pd)
        } else {
            None
        }
    }

    pub fn max_accuracy(&self) -> f64 {
        self.p_pd.max(1.0 - self.p_pd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub a_average: f64,
    pub a_average_max: f64,
    pub included: usize,
    pub excluded_zero: usize,
}

/// Mean accuracy and mean ceiling over individuals with a nonzero observed
/// displacement.
pub fn accuracy(outcomes: &[Outcome]) -> Result<Accuracy> {
    let (mut sum, mut sum_max, mut included) = (0.0, 0.0, 0usize);
    for o in outcomes {
        if let Some(a) = o.accuracy() {
            sum += a;
            sum_max += o.max_accuracy();
            included += 1;
        }
    }
    if included == 0 {
        return Err(Error::EmptyCohort);
    }
    Ok(Accuracy {
        a_average: sum / included as f64,
        a_average_max: sum_max / included as f64,
        included,
        excluded_zero: outcomes.len() - included,
    })
}

/// Multiplier `k` in `scan` minimising `|| force_i k unit - d_i ||`; ties go
/// to the smaller `k`.
pub fn select_delta_t(forces: &[f64], observed: &[f64], scan: (u32, u32), unit: f64) -> Result<u32> {
    if forces.is_empty() || forces.len() != observed.len() {
        return Err(Error::EmptyCohort);
    }
    if scan.0 == 0 || scan.1 < scan.0 || !(unit > 0.0) {
        return Err(Error::InvalidArgument(format!("bad delta-t scan {scan:?} with unit {unit}")));
    }
    let mut best = (scan.0, f64::INFINITY);
    for k in scan.0..=scan.1 {
        let dt = k as f64 * unit;
        let dist: f64 = forces.iter().zip(observed).map(|(f, d)| (f * dt - d).powi(2)).sum();
        if dist < best.1 {
            best = (k, dist);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    pub means: Vec<f64>,
    pub u_ci: f64,
}

fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn random_choice_mean(p_pd: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    let mut sum = 0.0;
    for chunk in p_pd.chunks(64) {
        let bits = rng.next_u64();
        for (k, &p) in chunk.iter().enumerate() {
            sum += if bits >> k & 1 == 1 { p } else { 1.0 - p };
        }
    }
    sum / p_pd.len() as f64
}

/// Distribution of cohort means when each individual's accuracy is picked
/// from `(P_PD, P_ND)` by a fair coin; `U_CI` is its 97.5% quantile.
pub fn random_choice_null(p_pd: &[f64], repetitions: usize, seed: u64) -> Result<NullDistribution> {
    if p_pd.is_empty() {
        return Err(Error::EmptyCohort);
    }
    if repetitions == 0 {
        return Err(Error::InvalidArgument("need at least one repetition".into()));
    }
    let means: Vec<f64> = (0..repetitions as u64)
        .into_par_iter()
        .map(|rep| random_choice_mean(p_pd, &mut rep_rng(seed, rep)))
        .collect();
    let u_ci = stats::quantile(&means, 0.975);
    Ok(NullDistribution { means, u_ci })
}

/// `(A - U_CI) / (A_max - U_CI)`.
pub fn scaled_accuracy(a_average: f64, u_ci: f64, a_average_max: f64) -> Result<f64> {
    if !(a_average_max > u_ci) {
        return Err(Error::DegenerateScale { a_max: a_average_max, u_ci });
    }
    Ok((a_average - u_ci) / (a_average_max - u_ci))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredAccuracy {
    pub a_average: f64,
    pub a_average_max: f64,
    pub u_ci: f64,
    pub a_scaled: Option<f64>,
    pub included: usize,
    pub excluded_zero: usize,
}

/// Accuracy, random-choice null and rescaling for one set of outcomes.
pub fn score(outcomes: &[Outcome], repetitions: usize, seed: u64) -> Result<ScoredAccuracy> {
    let acc = accuracy(outcomes)?;
    let p: Vec<f64> = outcomes.iter().filter(|o| o.accuracy().is_some()).map(|o| o.p_pd).collect();
    let null = random_choice_null(&p, repetitions, seed)?;
    Ok(ScoredAccuracy {
        a_average: acc.a_average,
        a_average_max: acc.a_average_max,
        u_ci: null.u_ci,
        a_scaled: scaled_accuracy(acc.a_average, null.u_ci, acc.a_average_max).ok(),
        included: acc.included,
        excluded_zero: acc.excluded_zero,
    })
}

/// Ceiling case: every individual moves toward the median, `d_i = -y_i`.
pub fn ideal_case_accuracy(model: &LangevinModel, standardized: &[f64], dt: f64, repetitions: usize, seed: u64) -> Result<ScoredAccuracy> {
    let outcomes: Vec<Outcome> = standardized
        .iter()
        .map(|&y| Outcome { p_pd: displacement_probabilities(model, y, dt).0, displacement: -y })
        .collect();
    score(&outcomes, repetitions, seed)
}

/// 2.5% and 97.5% quantiles of the scaled accuracy over resampled cohorts.
/// Resamples whose scaling is degenerate are skipped; `None` if all are.
pub fn bootstrap_accuracy(outcomes: &[Outcome], repetitions: usize, null_repetitions: usize, seed: u64) -> Result<Option<(f64, f64)>> {
    if outcomes.len() < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least 2 individuals".into()));
    }
    let kept: Vec<Outcome> = outcomes.iter().copied().filter(|o| o.accuracy().is_some()).collect();
    if kept.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let n = kept.len();
    let scaled: Vec<f64> = (0..repetitions as u64)
        .into_par_iter()
        .filter_map(|rep| {
            let mut rng = rep_rng(seed, rep);
            let sample: Vec<Outcome> = (0..n).map(|_| kept[rng.gen_range(0..n)]).collect();
            let acc = accuracy(&sample).ok()?;
            let p: Vec<f64> = sample.iter().map(|o| o.p_pd).collect();
            let mut null_rng_seed = rng.next_u64();
            if null_rng_seed == seed {
                null_rng_seed ^= 1;
            }
            let mut means: Vec<f64> = (0..null_repetitions as u64)
                .map(|k| random_choice_mean(&p, &mut rep_rng(null_rng_seed, k)))
                .collect();
            means.sort_by(f64::total_cmp);
            let u = stats::quantile_sorted(&means, 0.975);
            scaled_accuracy(acc.a_average, u, acc.a_average_max).ok()
        })
        .collect();
    if scaled.is_empty() {
        return Ok(None);
    }
    let s = stats::sorted(&scaled);
    Ok(Some((stats::quantile_sorted(&s, 0.025), stats::quantile_sorted(&s, 0.975))))
}

/// Half-open category bins `(-inf, b_0), [b_0, b_1), ..., [b_last, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Categories {
    pub boundaries: Vec<f64>,
    pub labels: Vec<String>,
}

impl Categories {
    pub fn new(boundaries: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("category boundaries must be strictly increasing".into()));
        }
        if labels.len() != boundaries.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} boundaries need {} labels, got {}",
                boundaries.len(),
                boundaries.len() + 1,
                labels.len()
            )));
        }
        Ok(Self { boundaries, labels })
    }

    /// Underweight < 18.5 <= normal < 25 <= overweight < 30 <= obese.
    pub fn bmi() -> Self {
        Self {
            boundaries: vec![18.5, 25.0, 30.0],
            labels: ["underweight", "normal weight", "overweight", "obese"].map(String::from).to_vec(),
        }
    }

    pub fn index_of(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= x)
    }

    pub fn bounds(&self, k: usize) -> (f64, f64) {
        let lo = if k == 0 { f64::NEG_INFINITY } else { self.boundaries[k - 1] };
        let hi = self.boundaries.get(k).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub members: Vec<usize>,
    pub disregarded: bool,
}

/// Assigns every value to exactly one category; clusters smaller than
/// `min_size` are flagged as disregarded.
pub fn cluster_by_category(values: &[f64], categories: &Categories, min_size: usize) -> Vec<Cluster> {
    let mut members = vec![Vec::new(); categories.labels.len()];
    for (i, &x) in values.iter().enumerate() {
        members[categories.index_of(x)].push(i);
    }
    members
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let (lo, hi) = categories.bounds(k);
            Cluster { label: categories.labels[k].clone(), lo, hi, disregarded: m.len() < min_size, members: m }
        })
        .collect()
}

/// Indices with `lo <= x < hi`.
pub fn filter_range(values: &[f64], lo: f64, hi: f64) -> Vec<usize> {
    values.iter().enumerate().filter(|(_, &x)| lo <= x && x < hi).map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub positive: usize,
    pub negative: usize,
    /// `(pos - neg) / (pos + neg)`
    pub relative: f64,
}

/// Relative balance of positive and negative displacements per baseline bin
/// `[origin + k w, origin + (k + 1) w)`. Zero displacements are not counted;
/// bins without any counted displacement are omitted.
pub fn displacement_histogram(baselines: &[f64], displacements: &[f64], bin_width: f64, origin: f64) -> Result<Vec<HistogramBin>> {
    if baselines.is_empty() || baselines.len() != displacements.len() {
        return Err(Error::EmptyCohort);
    }
    if !(bin_width > 0.0) {
        return Err(Error::InvalidArgument(format!("bin width must be positive, got {bin_width}")));
    }
    let mut bins: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    for (&x, &d) in baselines.iter().zip(displacements) {
        if d == 0.0 {
            continue;
        }
        let k = ((x - origin) / bin_width).floor() as i64;
        let e = bins.entry(k).or_default();
        if d > 0.0 {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    Ok(bins
        .into_iter()
        .map(|(k, (pos, neg))| HistogramBin {
            lo: origin + k as f64 * bin_width,
            hi: origin + (k + 1) as f64 * bin_width,
            positive: pos,
            negative: neg,
            relative: (pos as f64 - neg as f64) / (pos + neg) as f64,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub null_repetitions: usize,
    pub bootstrap_repetitions: usize,
    /// Inclusive range of delta-t multipliers to scan.
    pub delta_t_scan: (u32, u32),
    /// Time per multiplier; the model's grid `dt` when absent.
    pub delta_t_unit: Option<f64>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            null_repetitions: DEFAULT_REPETITIONS,
            bootstrap_repetitions: DEFAULT_REPETITIONS,
            delta_t_scan: (1, 100),
            delta_t_unit: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualResult {
    pub id: String,
    pub p_pd: f64,
    pub p_nd: f64,
    /// Absent for a zero observed displacement.
    pub a_i: Option<f64>,
    pub a_i_max: f64,
    pub observed_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub label: String,
    pub n_total: usize,
    pub n_excluded_zero: usize,
    pub delta_t_multiplier: u32,
    pub delta_t_used: f64,
    pub a_average: f64,
    pub a_average_max: f64,
    pub u_ci: f64,
    pub a_scaled: Option<f64>,
    pub ideal: ScoredAccuracy,
    pub bootstrap_ci: Option<(f64, f64)>,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub per_individual: Vec<IndividualResult>,
}

/// Validates `model` against a cohort given in raw units.
///
/// Baselines and displacements are mapped through `transform` into the
/// model's coordinates before delta-t selection and scoring.
pub fn validate_cohort(
    label: &str,
    model: &LangevinModel,
    transform: &Standardization,
    ids: &[String],
    baselines: &[f64],
    followups: &[f64],
    config: &ValidationConfig,
) -> Result<ValidationReport> {
    if baselines.is_empty() || baselines.len() != followups.len() || ids.len() != baselines.len() {
        return Err(Error::EmptyCohort);
    }
    let y: Vec<f64> = baselines.iter().map(|&x| transform.apply(x)).collect();
    let d: Vec<f64> = baselines.iter().zip(followups).map(|(b, f)| (f - b) / transform.std).collect();
    let forces: Vec<f64> = y.iter().map(|&v| model.force(v)).collect();
    let unit = config.delta_t_unit.unwrap_or(model.grid.dt);
    let k = select_delta_t(&forces, &d, config.delta_t_scan, unit)?;
    let dt = k as f64 * unit;

    let outcomes: Vec<Outcome> = forces
        .iter()
        .zip(&d)
        .map(|(&f, &disp)| Outcome { p_pd: probabilities_from(f, model.sigma, dt).0, displacement: disp })
        .collect();
    let measured = score(&outcomes, config.null_repetitions, config.seed)?;
    let ideal_outcomes: Vec<Outcome> = outcomes
        .iter()
        .zip(&y)
        .map(|(o, &yi)| Outcome { p_pd: o.p_pd, displacement: -yi })
        .collect();
    let ideal = score(&ideal_outcomes, config.null_repetitions, config.seed.wrapping_add(1))?;
    let bootstrap_ci = if config.bootstrap {
        bootstrap_accuracy(&outcomes, config.bootstrap_repetitions, config.null_repetitions, config.seed.wrapping_add(2))
            .unwrap_or(None)
    } else {
        None
    };

    let mut warnings = Vec::new();
    if measured.a_scaled.is_none() {
        warnings.push(format!(
            "DegenerateScale: A_max {} <= U_CI {}",
            measured.a_average_max, measured.u_ci
        ));
    }
    if ideal.a_scaled.is_none() {
        warnings.push("DegenerateScale: ideal case".to_string());
    }

    let per_individual = outcomes
        .iter()
        .zip(ids)
        .map(|(o, id)| IndividualResult {
            id: id.clone(),
            p_pd: o.p_pd,
            p_nd: 1.0 - o.p_pd,
            a_i: o.accuracy(),
            a_i_max: o.max_accuracy(),
            observed_sign: if o.displacement > 0.0 { 1 } else if o.displacement < 0.0 { -1 } else { 0 },
        })
        .collect();

    Ok(ValidationReport {
        label: label.to_string(),
        n_total: baselines.len(),
        n_excluded_zero: measured.excluded_zero,
        delta_t_multiplier: k,
        delta_t_used: dt,
        a_average: measured.a_average,
        a_average_max: measured.a_average_max,
        u_ci: measured.u_ci,
        a_scaled: measured.a_scaled,
        ideal,
        bootstrap_ci,
        seed: config.seed,
        warnings,
        per_individual,
    })
}
