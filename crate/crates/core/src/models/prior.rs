//! Prior distributions on coefficient vectors.

use crate::error::{PcrError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

/// A prior on a finite coefficient vector.
pub trait Prior: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;
    /// Normalized log-density; `-inf` outside the support.
    fn log_density(&self, theta: &[f64]) -> f64;
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    fn mean(&self) -> Vec<f64>;
    /// Marginal standard deviations, used to scale proposals and grids.
    fn marginal_sd(&self) -> Vec<f64>;
    /// The atom of a degenerate prior.
    fn point_mass(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Independent Gaussian coefficients `Z_k ~ N(m_k, λ_k)`; with an orthonormal
/// basis this is a Karhunen–Loève prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mean: Vec<f64>,
    variances: Vec<f64>,
}

/// Karhunen–Loève prior in an orthonormal basis.
pub type KlPrior = GaussianPrior;

impl GaussianPrior {
    pub fn new(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if mean.len() != variances.len() || mean.is_empty() {
            return Err(PcrError::InvalidParameter("mean and variances must be nonempty and equal length".into()));
        }
        if variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || mean.iter().any(|m| !m.is_finite()) {
            return Err(PcrError::InvalidParameter("variances must be positive and finite".into()));
        }
        Ok(Self { mean, variances })
    }

    /// `N(0, I_dim)`.
    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    /// Power-law variances `λ_k = scale·k^{-(1+a)}` around `mean`.
    pub fn power_law(mean: Vec<f64>, scale: f64, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(PcrError::InvalidParameter("decay exponent a must be positive (trace class)".into()));
        }
        let variances = (1..=mean.len()).map(|k| scale * (k as f64).powf(-(1.0 + a))).collect();
        Self::new(mean, variances)
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn trace(&self) -> f64 {
        self.variances.iter().sum()
    }
}

impl Prior for GaussianPrior {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((t, m), v) in theta.iter().zip(&self.mean).zip(&self.variances) {
            let d = t - m;
            acc -= 0.5 * (d * d / v + (2.0 * std::f64::consts::PI * v).ln());
        }
        acc
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.variances)
            .map(|(m, v)| {
                let z: f64 = StandardNormal.sample(rng);
                m + v.sqrt() * z
            })
            .collect()
    }

    fn mean(&self) -> Vec<f64> {
        self.mean.clone()
    }

    fn marginal_sd(&self) -> Vec<f64> {
        self.variances.iter().map(|v| v.sqrt()).collect()
    }
}

/// Deterministic draw from a Karhunen–Loève prior.
pub fn kl_prior_sample(prior: &KlPrior, seed: u64) -> Vec<f64> {
    prior.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Dirichlet-shaped prior `∝ Π θ_i^{α−1}` on the open simplex, in the first
/// `N − 1` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletShapePrior {
    categories: usize,
    alpha: f64,
    log_norm: f64,
}

impl DirichletShapePrior {
    pub fn new(categories: usize, alpha: f64) -> Result<Self> {
        if categories < 2 {
            return Err(PcrError::InvalidParameter("need at least two categories".into()));
        }
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(PcrError::InvalidParameter(format!(
                "alpha must exceed 1 so the density vanishes on the boundary, got {alpha}"
            )));
        }
        let nf = categories as f64;
        let log_norm = ln_gamma(nf * alpha) - nf * ln_gamma(alpha);
        Ok(Self { categories, alpha, log_norm })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Prior for DirichletShapePrior {
    fn dim(&self) -> usize {
        self.categories - 1
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let last = 1.0 - theta.iter().sum::<f64>();
        if theta.iter().any(|t| !(*t > 0.0)) || !(last > 0.0) {
            return f64::NEG_INFINITY;
        }
        let s: f64 = theta.iter().map(|t| t.ln()).sum::<f64>() + last.ln();
        self.log_norm + (self.alpha - 1.0) * s
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let g = Gamma::new(self.alpha, 1.0).expect("alpha > 1");
        let draws: Vec<f64> = (0..self.categories).map(|_| g.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        draws[..self.categories - 1].iter().map(|d| d / total).collect()
    }

    fn mean(&self) -> Vec<f64> {
        vec![1.0 / self.categories as f64; self.categories - 1]
    }

    fn marginal_sd(&self) -> Vec<f64> {
        let a0 = self.alpha * self.categories as f64;
        let m = 1.0 / self.categories as f64;
        vec![(m * (1.0 - m) / (a0 + 1.0)).sqrt(); self.categories - 1]
    }
}

/// Normalized Dirichlet-shape density at a point of the closed simplex,
/// given by its first `N − 1` coordinates.
pub fn multinomial_prior_density(theta: &[f64], alpha: f64) -> Result<f64> {
    let prior = DirichletShapePrior::new(theta.len() + 1, alpha)?;
    let last = 1.0 - theta.iter().sum::<f64>();
    let tol = 1e-12;
    if theta.iter().any(|t| *t < -tol || !t.is_finite()) || last < -tol {
        return Err(PcrError::InvalidInput("point lies outside the closed simplex".into()));
    }
    Ok(prior.log_density(theta).exp())
}

/// Point mass at a fixed parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMassPrior {
    at: Vec<f64>,
}

impl PointMassPrior {
    pub fn new(at: Vec<f64>) -> Self {
        Self { at }
    }
}

impl Prior for PointMassPrior {
    fn dim(&self) -> usize {
        self.at.len()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if theta == self.at.as_slice() {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.at.clone()
    }

    fn mean(&self) -> Vec<f64> {
        self.at.clone()
    }

    fn marginal_sd(&self) -> Vec<f64> {
        vec![0.0; self.at.len()]
    }

    fn point_mass(&self) -> Option<Vec<f64>> {
        Some(self.at.clone())
    }
}

/// Uniform draw in `(0, 1)`, shared by the samplers.
pub(crate) fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
