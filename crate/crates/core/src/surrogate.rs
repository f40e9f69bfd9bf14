//! Synthetic data with a known landscape: Landau cross-sections drawn by
//! inverse-transform sampling, and one-step longitudinal follow-ups drawn from
//! a fitted model.

use crate::error::{Error, Result};
use crate::intervene::Landau;
use crate::kde::CrossSection;
use crate::landscape::Potential;
use crate::markov::LangevinModel;
use crate::quad;
use crate::sde::em_step;
use crate::spline::MonotoneCubic;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const CDF_NODES: usize = 100_000;

/// Landau density `p(x) = exp(a x^2 - b x^4) / Z` and a sampling request.
#[derive(Debug, Clone)]
pub struct LandauSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub seed: u64,
    potential: Landau,
    support: (f64, f64),
    /// `ln Z`
    log_z: f64,
}

impl LandauSpec {
    pub fn new(a: f64, b: f64, n: usize, seed: u64) -> Result<Self> {
        let potential = Landau::new(a, b)?;
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        let support = potential.support(0.0);
        let peak = grid(support, 20_001).map(|x| -potential.energy(x)).fold(f64::NEG_INFINITY, f64::max);
        let z = quad::integrate(|x| (-potential.energy(x) - peak).exp(), support.0, support.1, 1e-12, 16);
        Ok(Self { a, b, n, seed, potential, support, log_z: z.ln() + peak })
    }

    pub fn potential(&self) -> Landau {
        self.potential
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (-self.potential.energy(x) - self.log_z).exp()
    }

    pub fn has_two_attractors(&self) -> bool {
        self.a > 0.0
    }

    /// `int x^k p(x) dx` by quadrature.
    pub fn moment(&self, k: i32) -> f64 {
        quad::integrate(|x| x.powi(k) * self.pdf(x), self.support.0, self.support.1, 1e-12, 16)
    }

    /// Tabulated CDF on `CDF_NODES` uniform nodes over the truncated support.
    pub fn cdf_table(&self) -> CdfTable {
        let x: Vec<f64> = grid(self.support, CDF_NODES).collect();
        let w: Vec<f64> = x.iter().map(|&t| self.pdf(t)).collect();
        let mut cdf = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..x.len() {
            acc += 0.5 * (x[i] - x[i - 1]) * (w[i] + w[i - 1]);
            cdf.push(acc);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        // tail increments can fall below one ulp near 1; keep strict growth
        let (mut xs, mut cs) = (vec![x[0]], vec![cdf[0]]);
        for (xi, ci) in x.into_iter().zip(cdf).skip(1) {
            if ci > *cs.last().unwrap() {
                xs.push(xi);
                cs.push(ci);
            }
        }
        CdfTable { x: xs, cdf: cs }
    }
}

fn grid(range: (f64, f64), n: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = range;
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + i as f64 * step })
}

#[derive(Debug, Clone)]
pub struct CdfTable {
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl CdfTable {
    pub fn is_strictly_increasing(&self) -> bool {
        self.cdf.windows(2).all(|w| w[1] > w[0]) && self.x.windows(2).all(|w| w[1] > w[0])
    }

    pub fn inverse(&self) -> Result<MonotoneCubic> {
        MonotoneCubic::new(self.cdf.clone(), self.x.clone())
    }

    pub fn forward(&self) -> Result<MonotoneCubic> {
        MonotoneCubic::new(self.x.clone(), self.cdf.clone())
    }
}

/// `n` i.i.d. Landau draws by inverting the tabulated CDF at seeded uniforms.
pub fn sample_landau(spec: &LandauSpec) -> Result<CrossSection> {
    let inverse = spec.cdf_table().inverse()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values: Vec<f64> = (0..spec.n).map(|_| inverse.eval(rng.gen::<f64>())).collect();
    Ok(CrossSection::new(values)?.with_label(format!("landau(a={}, b={})", spec.a, spec.b)))
}

/// One Euler-Maruyama displacement per individual.
pub fn synth_followups<P: Potential>(potential: &P, sigma: f64, baseline: &[f64], dt: f64, seed: u64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and sigma >= 0, got dt={dt}, sigma={sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(baseline
        .iter()
        .map(|&x| {
            let z: f64 = rng.sample(StandardNormal);
            em_step(potential, sigma, x, dt, z)
        })
        .collect())
}

/// `(baseline, follow-up)` pairs drawn from `model`, in model coordinates.
pub fn synth_longitudinal(model: &LangevinModel, baseline: &CrossSection, dt: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let follow = synth_followups(&model.landscape, model.sigma, baseline.values(), dt, seed)?;
    Ok(baseline.values().iter().copied().zip(follow).collect())
}
