//! Exponential-family machinery: sufficient statistics, the posterior kernel
//! `exp{n[⟨g(θ),b⟩ − M(θ)]}` and Kullback–Leibler divergences.
//!
//! Statistic and parameter spaces are coefficient vectors in a fixed
//! orthonormal basis, and the pairing is the Euclidean dot product.

use crate::error::{PcrError, Result};
use crate::models::{Prior, SampleSpace, StatModel};
use crate::quad;
use nalgebra::DMatrix;

/// Parameters with a larger Euclidean norm are outside the admissible box.
pub const ADMISSIBLE_RADIUS: f64 = 50.0;
/// Absolute tolerance used for quadrature of `S0` (per coefficient).
pub const S_ZERO_TOL: f64 = 1e-12;
/// Absolute tolerance used for quadrature of Kullback–Leibler divergences.
pub const KL_TOL: f64 = 1e-11;

/// Model written as `f(x|θ) = exp{⟨g(θ), β_x⟩ − M(θ)}` against a base measure.
pub trait ExponentialFamily: StatModel {
    /// Length of `β_x`.
    fn stat_dim(&self) -> usize;
    /// Coefficients of `β_x`.
    fn beta(&self, x: &Self::Sample) -> Vec<f64>;
    /// Coefficients of `g(θ)`.
    fn natural(&self, theta: &[f64]) -> Result<Vec<f64>>;
    /// Log-partition `M(θ)`.
    fn log_partition(&self, theta: &[f64]) -> Result<f64>;
    /// `⟨g(θ), b⟩ − M(θ)`.
    fn kernel_exponent(&self, theta: &[f64], b: &[f64]) -> Result<f64> {
        let g = self.natural(theta)?;
        Ok(dot(&g, b) - self.log_partition(theta)?)
    }
    /// Jacobian of `g` at `θ` (rows: statistic coordinates), by central
    /// differences unless overridden.
    fn natural_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let rows = self.stat_dim();
        let mut jac = DMatrix::zeros(rows, theta.len());
        let mut t = theta.to_vec();
        for k in 0..theta.len() {
            let h = 1e-6 * theta[k].abs().max(1.0);
            t[k] = theta[k] + h;
            let up = self.natural(&t)?;
            t[k] = theta[k] - h;
            let down = self.natural(&t)?;
            t[k] = theta[k];
            for r in 0..rows {
                jac[(r, k)] = (up[r] - down[r]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
    /// `S0 = E_θ0[β_X]` in closed form when the model has one.
    fn s_zero_closed_form(&self, _theta0: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Operator norm of the Jacobian of `g` at `θ`.
pub fn natural_jacobian_norm<F: ExponentialFamily>(family: &F, theta: &[f64]) -> Result<f64> {
    let jac = family.natural_jacobian(theta)?;
    Ok(jac.singular_values().iter().copied().fold(0.0, f64::max))
}

/// A sufficient statistic value together with its sample count (`n = 0`
/// marks a population quantity).
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStat {
    pub value: Vec<f64>,
    pub n: usize,
}

impl SuffStat {
    /// Euclidean distance between two statistics.
    pub fn distance(&self, other: &SuffStat) -> f64 {
        self.value.iter().zip(&other.value).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }
}

/// `Ŝ_n = (1/n) Σ β_{x_i}`.
pub fn suff_stat_mean<F: ExponentialFamily>(samples: &[F::Sample], family: &F) -> Result<SuffStat> {
    if samples.is_empty() {
        return Err(PcrError::InvalidInput("empty sample set".into()));
    }
    let mut acc = vec![0.0; family.stat_dim()];
    for x in samples {
        for (a, b) in acc.iter_mut().zip(family.beta(x)) {
            *a += b;
        }
    }
    let n = samples.len();
    for a in acc.iter_mut() {
        *a /= n as f64;
    }
    Ok(SuffStat { value: acc, n })
}

/// `S0 = ∫ β_x f(x|θ0) dx`.
pub fn s_zero<F: ExponentialFamily>(family: &F, theta0: &[f64]) -> Result<SuffStat> {
    if let Some(v) = family.s_zero_closed_form(theta0) {
        return Ok(SuffStat { value: v?, n: 0 });
    }
    let dim = family.stat_dim();
    let value = match family.sample_space() {
        SampleSpace::Finite(k) => {
            let mut acc = vec![0.0; dim];
            for i in 0..k {
                let x = family.point_from_index(i).expect("finite model enumerates its points");
                let w = family.log_density(&x, theta0)?.exp();
                for (a, b) in acc.iter_mut().zip(family.beta(&x)) {
                    *a += w * b;
                }
            }
            acc
        }
        SampleSpace::Interval(lo, hi) => {
            let ld = |x: f64| -> Vec<f64> {
                let p = family.point_from_real(x).expect("interval model maps reals");
                let w = family.log_density(&p, theta0).map(f64::exp).unwrap_or(f64::NAN);
                family.beta(&p).into_iter().map(|b| w * b).collect()
            };
            quad::adaptive_vec(ld, lo, hi, dim, S_ZERO_TOL)?
        }
        SampleSpace::Plane => {
            return Err(PcrError::UnsupportedSpec("S0 on a plane needs a closed form".into()));
        }
    };
    Ok(SuffStat { value, n: 0 })
}

/// Everything needed to evaluate the exponential-family posterior kernel.
#[derive(Debug)]
pub struct PosteriorKernelSpec<'a, F> {
    pub family: &'a F,
    pub prior: &'a dyn Prior,
    pub n: usize,
    pub b: Vec<f64>,
}

impl<'a, F: ExponentialFamily> PosteriorKernelSpec<'a, F> {
    pub fn new(family: &'a F, prior: &'a dyn Prior, n: usize, b: Vec<f64>) -> Result<Self> {
        if b.len() != family.stat_dim() {
            return Err(PcrError::InvalidInput("statistic has the wrong dimension".into()));
        }
        if prior.dim() != family.dim() {
            return Err(PcrError::InvalidInput("prior and model dimensions differ".into()));
        }
        Ok(Self { family, prior, n, b })
    }

    /// `n(⟨g(θ), b⟩ − M(θ))`; `-inf` outside the admissible domain.
    pub fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        if self.n == 0 {
            return Ok(0.0);
        }
        if !self.family.in_domain(theta) || norm(theta) > ADMISSIBLE_RADIUS {
            return Ok(f64::NEG_INFINITY);
        }
        let e = self.family.kernel_exponent(theta, &self.b)?;
        if !e.is_finite() {
            return Err(PcrError::NumericFailure("log-partition overflow".into()));
        }
        Ok(self.n as f64 * e)
    }
}

/// `n(⟨g(θ), b⟩ − M(θ)) + log π(θ)`, unnormalized.
pub fn log_posterior_unnorm<F: ExponentialFamily>(theta: &[f64], kernel: &PosteriorKernelSpec<'_, F>) -> Result<f64> {
    let prior = kernel.prior.log_density(theta);
    if kernel.n == 0 {
        return Ok(prior);
    }
    if prior == f64::NEG_INFINITY {
        return Ok(prior);
    }
    Ok(kernel.log_likelihood(theta)? + prior)
}

/// `K(θ|θ0)`, analytic when the model provides it and quadrature otherwise.
pub fn kl_divergence<M: StatModel>(theta: &[f64], theta0: &[f64], model: &M) -> Result<f64> {
    if !model.in_domain(theta) || !model.in_domain(theta0) {
        return Err(PcrError::InvalidInput("parameter outside the model domain".into()));
    }
    if let Some(v) = model.kl_analytic(theta, theta0) {
        return v.map(|k| k.max(0.0));
    }
    kl_divergence_quadrature(theta, theta0, model)
}

/// `∫ log(f(x|θ0)/f(x|θ)) f(x|θ0) dx` by summation or adaptive quadrature.
pub fn kl_divergence_quadrature<M: StatModel>(theta: &[f64], theta0: &[f64], model: &M) -> Result<f64> {
    let v = match model.sample_space() {
        SampleSpace::Finite(k) => {
            let mut acc = 0.0;
            for i in 0..k {
                let x = model.point_from_index(i).expect("finite model enumerates its points");
                let l0 = model.log_density(&x, theta0)?;
                let l = model.log_density(&x, theta)?;
                acc += l0.exp() * (l0 - l);
            }
            acc
        }
        SampleSpace::Interval(lo, hi) => quad::adaptive(
            |x| {
                let p = model.point_from_real(x).expect("interval model maps reals");
                match (model.log_density(&p, theta0), model.log_density(&p, theta)) {
                    (Ok(l0), Ok(l)) => l0.exp() * (l0 - l),
                    _ => f64::NAN,
                }
            },
            lo,
            hi,
            KL_TOL,
        )?,
        SampleSpace::Plane => {
            return Err(PcrError::UnsupportedSpec("two-dimensional observations need an analytic KL".into()));
        }
    };
    Ok(v.max(0.0))
}

/// `n(⟨g(θ),b⟩ − M(θ)) + n·K(θ|θ_b)` minus its value at `θ_b`, which vanishes
/// identically when `b = S(θ_b)`.
pub fn kl_representation_residual<F: ExponentialFamily>(
    theta: &[f64],
    kernel: &PosteriorKernelSpec<'_, F>,
    theta_b: &[f64],
) -> Result<f64> {
    representation_residual_with(theta, kernel, theta_b, |t, t0| kl_divergence(t, t0, kernel.family))
}

/// As [`kl_representation_residual`] with a caller-supplied divergence.
pub fn representation_residual_with<F: ExponentialFamily>(
    theta: &[f64],
    kernel: &PosteriorKernelSpec<'_, F>,
    theta_b: &[f64],
    kl: impl Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<f64> {
    let n = kernel.n as f64;
    let at = |t: &[f64]| -> Result<f64> {
        Ok(n * kernel.family.kernel_exponent(t, &kernel.b)? + n * kl(t, theta_b)?)
    };
    Ok(at(theta)? - at(theta_b)?)
}
