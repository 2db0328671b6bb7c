//! The four concrete dominated models and their priors.

pub mod linreg;
pub mod logistic;
pub mod multinomial;
pub mod prior;

pub use linreg::{linreg_stat_posterior, linreg_suff_posterior, DesignDensity, GaussianPosterior, LinRegModel};
pub use logistic::{apply_istar, h1star_basis, hess_m, hess_quadratic_form, LogisticBasis, LogisticModel};
pub use multinomial::{multinomial_kl, MultinomialModel};
pub use prior::{
    kl_prior_sample, multinomial_prior_density, DirichletShapePrior, GaussianPrior, KlPrior, PointMassPrior, Prior,
};

use crate::error::Result;

/// Where observations live.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSpace {
    /// Categories `0..N`.
    Finite(usize),
    /// A bounded interval of the line.
    Interval(f64, f64),
    /// Pairs `(u, v)`; no generic quadrature.
    Plane,
}

/// A dominated statistical model.
pub trait StatModel: Send + Sync {
    type Sample: Clone + Send + Sync + std::fmt::Debug;

    /// Parameter dimension (coefficient count).
    fn dim(&self) -> usize;
    fn sample_space(&self) -> SampleSpace;
    fn in_domain(&self, theta: &[f64]) -> bool;
    /// `log f(x|θ)` against the dominating measure.
    fn log_density(&self, x: &Self::Sample, theta: &[f64]) -> Result<f64>;
    /// `n` independent draws under `θ0`; deterministic in `seed`.
    fn sample(&self, theta0: &[f64], n: usize, seed: u64) -> Result<Vec<Self::Sample>>;
    /// Closed-form Kullback–Leibler divergence `K(θ|θ0)` when available.
    fn kl_analytic(&self, _theta: &[f64], _theta0: &[f64]) -> Option<Result<f64>> {
        None
    }
    /// Sample-space point for category `i` or real value `x`.
    fn point_from_index(&self, _i: usize) -> Option<Self::Sample> {
        None
    }
    fn point_from_real(&self, _x: f64) -> Option<Self::Sample> {
        None
    }
    /// Real coordinate of a one-dimensional observation.
    fn as_real(&self, _x: &Self::Sample) -> Option<f64> {
        None
    }
}

/// Inverse-CDF sampler built from density values on a uniform grid.
#[derive(Debug, Clone)]
pub(crate) struct GridSampler {
    lo: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl GridSampler {
    pub(crate) fn new(lo: f64, hi: f64, density: &[f64]) -> Result<Self> {
        let step = (hi - lo) / (density.len() - 1) as f64;
        let mut cdf = crate::quad::cumulative_trapezoid(density, step);
        let total = *cdf.last().expect("nonempty grid");
        if !(total > 0.0) || !total.is_finite() {
            return Err(crate::error::PcrError::NumericFailure("sampling density does not normalize".into()));
        }
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Ok(Self { lo, step, cdf })
    }

    /// Quantile at `u` by linear interpolation of the tabulated CDF.
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.lo + self.step * ((i - 1) as f64 + frac.clamp(0.0, 1.0))
    }
}
