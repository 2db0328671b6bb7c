//! Nonparametric regression `V = θ(U) + E`, `E ~ N(0, σ²)`, `U ~ h` on `[a, b]`,
//! with `θ` expanded in the sine basis `ψ_k(u) = √(2/(b−a)) sin(kπ(u−a)/(b−a))`.

use super::prior::{open_unit, GaussianPrior, Prior};
use super::{GridSampler, SampleSpace, StatModel};
use crate::error::{PcrError, Result};
use crate::expfam::{dot, ExponentialFamily};
use crate::posterior::{Diagnostics, Method, PosteriorEstimate};
use crate::quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Density of the design variable `U`.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignDensity {
    Uniform,
    /// Values on a uniform grid over `[a, b]`, linearly interpolated and
    /// normalized on construction of the model.
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct LinRegModel {
    a: f64,
    b: f64,
    sigma2: f64,
    k: usize,
    design: DesignDensity,
    /// Normalizing constant of a tabulated design.
    design_norm: f64,
    /// `G_h = ∫ ψψᵀ h`.
    gram: DMatrix<f64>,
}

impl LinRegModel {
    pub fn new(a: f64, b: f64, sigma2: f64, k: usize, design: DesignDensity) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(PcrError::InvalidParameter("interval must satisfy a < b".into()));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(PcrError::InvalidParameter("noise variance must be positive".into()));
        }
        if k == 0 {
            return Err(PcrError::InvalidParameter("need at least one basis function".into()));
        }
        let mut model = Self { a, b, sigma2, k, design, design_norm: 1.0, gram: DMatrix::zeros(k, k) };
        if let DesignDensity::Tabulated(v) = &model.design {
            if v.len() < 2 || v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(PcrError::InvalidParameter("tabulated design density must be positive".into()));
            }
            let step = (b - a) / (v.len() - 1) as f64;
            model.design_norm = *crate::quad::cumulative_trapezoid(v, step).last().expect("nonempty");
        }
        let rule = GaussLegendre::standard();
        let mut gram = DMatrix::zeros(k, k);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = a + (b - a) * t;
            let psi = model.features(u);
            let wh = w * (b - a) * model.design_value(u);
            for i in 0..k {
                for j in 0..k {
                    gram[(i, j)] += wh * psi[i] * psi[j];
                }
            }
        }
        model.gram = gram;
        Ok(model)
    }

    /// Uniform design on `[0, 1]`.
    pub fn uniform(sigma2: f64, k: usize) -> Result<Self> {
        Self::new(0.0, 1.0, sigma2, k, DesignDensity::Uniform)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `ψ(u)`.
    pub fn features(&self, u: f64) -> Vec<f64> {
        let len = self.b - self.a;
        let c = (2.0 / len).sqrt();
        (1..=self.k).map(|j| c * (j as f64 * PI * (u - self.a) / len).sin()).collect()
    }

    /// `h(u)`.
    pub fn design_value(&self, u: f64) -> f64 {
        if u < self.a || u > self.b {
            return 0.0;
        }
        match &self.design {
            DesignDensity::Uniform => 1.0 / (self.b - self.a),
            DesignDensity::Tabulated(v) => {
                let pos = (u - self.a) / (self.b - self.a) * (v.len() - 1) as f64;
                let i = (pos.floor() as usize).min(v.len() - 2);
                let frac = pos - i as f64;
                (v[i] * (1.0 - frac) + v[i + 1] * frac) / self.design_norm
            }
        }
    }

    /// `θ(u) = ⟨θ, ψ(u)⟩`.
    pub fn regression_function(&self, theta: &[f64], u: f64) -> f64 {
        dot(theta, &self.features(u))
    }

    fn pair_count(&self) -> usize {
        self.k * (self.k + 1) / 2
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.k {
            return Err(PcrError::InvalidInput(format!("expected {} coefficients, got {}", self.k, theta.len())));
        }
        Ok(())
    }
}

impl StatModel for LinRegModel {
    type Sample = (f64, f64);

    fn dim(&self) -> usize {
        self.k
    }

    fn sample_space(&self) -> SampleSpace {
        SampleSpace::Plane
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.k && theta.iter().all(|t| t.is_finite())
    }

    fn log_density(&self, x: &(f64, f64), theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        let h = self.design_value(x.0);
        if h <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let r = x.1 - self.regression_function(theta, x.0);
        Ok(h.ln() - 0.5 * (r * r / self.sigma2 + (2.0 * PI * self.sigma2).ln()))
    }

    fn sample(&self, theta0: &[f64], n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        self.check(theta0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sampler = match &self.design {
            DesignDensity::Uniform => None,
            DesignDensity::Tabulated(v) => Some(GridSampler::new(self.a, self.b, v)?),
        };
        let sd = self.sigma2.sqrt();
        Ok((0..n)
            .map(|_| {
                let w = open_unit(&mut rng);
                let u = match &sampler {
                    None => self.a + (self.b - self.a) * w,
                    Some(s) => s.quantile(w),
                };
                let z: f64 = StandardNormal.sample(&mut rng);
                (u, self.regression_function(theta0, u) + sd * z)
            })
            .collect())
    }

    fn kl_analytic(&self, theta: &[f64], theta0: &[f64]) -> Option<Result<f64>> {
        if let Err(e) = self.check(theta).and_then(|_| self.check(theta0)) {
            return Some(Err(e));
        }
        let d = DVector::from_iterator(self.k, theta.iter().zip(theta0).map(|(a, b)| a - b));
        Some(Ok((d.transpose() * &self.gram * &d)[(0, 0)] / (2.0 * self.sigma2)))
    }
}

impl ExponentialFamily for LinRegModel {
    fn stat_dim(&self) -> usize {
        self.k + self.pair_count()
    }

    /// `[v ψ(u), (ψ_i(u) ψ_j(u))_{i ≤ j}]`.
    fn beta(&self, x: &(f64, f64)) -> Vec<f64> {
        let psi = self.features(x.0);
        let mut out: Vec<f64> = psi.iter().map(|p| x.1 * p).collect();
        for i in 0..self.k {
            for j in i..self.k {
                out.push(psi[i] * psi[j]);
            }
        }
        out
    }

    fn natural(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(theta)?;
        let s = 1.0 / self.sigma2;
        let mut out: Vec<f64> = theta.iter().map(|t| t * s).collect();
        for i in 0..self.k {
            for j in i..self.k {
                let c = if i == j { 1.0 } else { 2.0 };
                out.push(-0.5 * s * c * theta[i] * theta[j]);
            }
        }
        Ok(out)
    }

    /// Zero: the Gaussian normalizer and `h` are absorbed into the base measure.
    fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        Ok(0.0)
    }

    fn s_zero_closed_form(&self, theta0: &[f64]) -> Option<Result<Vec<f64>>> {
        if let Err(e) = self.check(theta0) {
            return Some(Err(e));
        }
        let t0 = DVector::from_column_slice(theta0);
        let mut out: Vec<f64> = (&self.gram * t0).iter().copied().collect();
        for i in 0..self.k {
            for j in i..self.k {
                out.push(self.gram[(i, j)]);
            }
        }
        Some(Ok(out))
    }
}

/// Exact Gaussian posterior in coefficient space.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianPosterior {
    /// `(tr Σ + ‖m − θ0‖²)^{1/2}`, the 2-Wasserstein distance to `δ_θ0`.
    pub fn w2_to_point(&self, theta0: &[f64]) -> f64 {
        let d: f64 = self.mean.iter().zip(theta0).map(|(m, t)| (m - t).powi(2)).sum();
        (self.cov.trace() + d).sqrt()
    }
}

impl GaussianPosterior {
    /// Moments about `θ0` for `p = 2`, with the raw moment `E‖θ‖^{ap}` in
    /// closed form for `ap ∈ {2, 4}`.
    pub fn to_estimate(&self, theta0: &[f64], p: f64, raw_exponent: f64) -> Result<PosteriorEstimate> {
        if p != 2.0 {
            return Err(PcrError::UnsupportedSpec("closed-form Gaussian moments need p = 2".into()));
        }
        let tr = self.cov.trace();
        let m2 = self.mean.norm_squared();
        let raw = if raw_exponent == 2.0 {
            tr + m2
        } else if raw_exponent == 4.0 {
            let cm = &self.cov * &self.mean;
            (tr + m2).powi(2) + 2.0 * (&self.cov * &self.cov).trace() + 4.0 * self.mean.dot(&cm)
        } else {
            return Err(PcrError::UnsupportedSpec("closed-form raw moments need ap = 2 or 4".into()));
        };
        let w = self.w2_to_point(theta0);
        let mut diagnostics = Diagnostics::new(Method::Grid);
        diagnostics.grid_size = Some(0);
        Ok(PosteriorEstimate {
            mean: self.mean.iter().copied().collect(),
            mean_se: vec![0.0; self.mean.len()],
            cov: self.cov.clone(),
            p,
            central_moment: w * w,
            central_moment_se: 0.0,
            raw_exponent,
            raw_moment: raw,
            diagnostics,
        })
    }
}

fn gaussian_update(
    prior: &GaussianPrior,
    k: usize,
    sigma2: f64,
    gram_sum: DMatrix<f64>,
    cross_sum: DVector<f64>,
) -> Result<GaussianPosterior> {
    if prior.dim() != k {
        return Err(PcrError::InvalidInput("prior and model dimensions differ".into()));
    }
    let m0 = prior.mean();
    let mut precision = DMatrix::from_diagonal(&DVector::from_iterator(k, prior.variances().iter().map(|v| 1.0 / v)));
    precision += gram_sum / sigma2;
    let rhs = DVector::from_iterator(k, m0.iter().zip(prior.variances()).map(|(m, v)| m / v)) + cross_sum / sigma2;
    let chol = precision
        .cholesky()
        .ok_or_else(|| PcrError::NumericFailure("posterior precision is not positive definite".into()))?;
    let mean = chol.solve(&rhs);
    let cov = chol.inverse();
    Ok(GaussianPosterior { mean, cov })
}

/// Conjugate posterior from the sufficient statistic `b` of `n` observations.
pub fn linreg_stat_posterior(
    b: &[f64],
    n: usize,
    prior: &GaussianPrior,
    model: &LinRegModel,
) -> Result<GaussianPosterior> {
    let k = model.k;
    if b.len() != model.stat_dim() {
        return Err(PcrError::InvalidInput("statistic has the wrong dimension".into()));
    }
    let nf = n as f64;
    let cross = DVector::from_iterator(k, b[..k].iter().map(|v| nf * v));
    let mut gram = DMatrix::zeros(k, k);
    let mut idx = k;
    for i in 0..k {
        for j in i..k {
            gram[(i, j)] = nf * b[idx];
            gram[(j, i)] = nf * b[idx];
            idx += 1;
        }
    }
    gaussian_update(prior, k, model.sigma2, gram, cross)
}

/// Conjugate update of a Gaussian prior by regression data.
pub fn linreg_suff_posterior(
    data: &[(f64, f64)],
    prior: &GaussianPrior,
    model: &LinRegModel,
) -> Result<GaussianPosterior> {
    let k = model.k;
    let mut gram = DMatrix::zeros(k, k);
    let mut cross = DVector::zeros(k);
    for &(u, v) in data {
        let psi = DVector::from_vec(model.features(u));
        gram.ger(1.0, &psi, &psi, 1.0);
        cross.axpy(v, &psi, 1.0);
    }
    gaussian_update(prior, k, model.sigma2, gram, cross)
}
