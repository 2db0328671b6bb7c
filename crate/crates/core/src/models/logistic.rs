//! Logistic density models on `[0, 1]`: `f(x|θ) = exp{θ(x) − M(θ)}` with
//! `θ(x) = Σ_k θ_k φ_k(x)`.
//!
//! Two bases are provided. `Sine` uses `φ_k(x) = sin(kπx)` (finite Fourier
//! polynomial). `H1Star` uses `e_k(x) = (√2/(kπ))(1 − cos kπx)`, which is
//! orthonormal for `⟨φ, ψ⟩ = ∫φ′ψ′` on functions vanishing at 0; there the
//! statistic coefficients of an observation `x` are `e_k(x)` by the
//! reproducing property of `min(·, x)`.

use super::prior::open_unit;
use super::{GridSampler, SampleSpace, StatModel};
use crate::error::{PcrError, Result};
use crate::expfam::{dot, ExponentialFamily};
use crate::quad::{cumulative_integral, unit_grid, GaussLegendre};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, SQRT_2};

/// Intervals of the tabulated CDF used by the sampler.
pub const SAMPLER_INTERVALS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogisticBasis {
    Sine,
    H1Star,
}

/// `e_k(x) = (√2/(kπ))(1 − cos kπx)`.
pub fn h1star_basis(k: usize, x: f64) -> f64 {
    let kp = k as f64 * PI;
    SQRT_2 / kp * (1.0 - (kp * x).cos())
}

/// `e_k′(x) = √2 sin(kπx)`.
pub fn h1star_basis_derivative(k: usize, x: f64) -> f64 {
    SQRT_2 * (k as f64 * PI * x).sin()
}

impl LogisticBasis {
    pub fn eval(self, k: usize, x: f64) -> f64 {
        match self {
            LogisticBasis::Sine => (k as f64 * PI * x).sin(),
            LogisticBasis::H1Star => h1star_basis(k, x),
        }
    }

    pub fn derivative(self, k: usize, x: f64) -> f64 {
        match self {
            LogisticBasis::Sine => k as f64 * PI * (k as f64 * PI * x).cos(),
            LogisticBasis::H1Star => h1star_basis_derivative(k, x),
        }
    }

    /// `Σ_k c_k φ_k` on the uniform grid with `intervals` cells.
    pub fn grid_values(self, coeffs: &[f64], intervals: usize) -> Vec<f64> {
        unit_grid(intervals)
            .into_iter()
            .map(|x| coeffs.iter().enumerate().map(|(i, c)| c * self.eval(i + 1, x)).sum())
            .collect()
    }

    /// `Σ_k c_k φ_k′` on the uniform grid with `intervals` cells.
    pub fn grid_derivative(self, coeffs: &[f64], intervals: usize) -> Vec<f64> {
        unit_grid(intervals)
            .into_iter()
            .map(|x| coeffs.iter().enumerate().map(|(i, c)| c * self.derivative(i + 1, x)).sum())
            .collect()
    }
}

/// Logistic model with `k` basis functions.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    basis: LogisticBasis,
    k: usize,
    rule: &'static GaussLegendre,
    /// Basis values at the quadrature nodes, node-major.
    at_nodes: Vec<f64>,
}

impl LogisticModel {
    pub fn new(basis: LogisticBasis, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(PcrError::InvalidParameter("need at least one basis function".into()));
        }
        let rule = GaussLegendre::standard();
        let mut at_nodes = Vec::with_capacity(rule.nodes.len() * k);
        for &x in &rule.nodes {
            for j in 1..=k {
                at_nodes.push(basis.eval(j, x));
            }
        }
        Ok(Self { basis, k, rule, at_nodes })
    }

    /// Finite Fourier model with `sin(kπx)`, `k ≤ n`.
    pub fn finite(n: usize) -> Result<Self> {
        Self::new(LogisticBasis::Sine, n)
    }

    /// Truncated `H¹*` model with `K` modes.
    pub fn infinite(k: usize) -> Result<Self> {
        Self::new(LogisticBasis::H1Star, k)
    }

    pub fn basis(&self) -> LogisticBasis {
        self.basis
    }

    pub fn features(&self, x: f64) -> Vec<f64> {
        (1..=self.k).map(|j| self.basis.eval(j, x)).collect()
    }

    /// `θ(x)`.
    pub fn eval(&self, theta: &[f64], x: f64) -> f64 {
        theta.iter().enumerate().map(|(i, t)| t * self.basis.eval(i + 1, x)).sum()
    }

    /// `θ(x_j)` at the quadrature nodes.
    fn node_values(&self, theta: &[f64]) -> Vec<f64> {
        self.at_nodes
            .chunks_exact(self.k)
            .map(|row| row.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `M(θ) = log ∫₀¹ e^{θ(x)} dx` by 2048-node Gauss–Legendre.
    pub fn log_partition_value(&self, theta: &[f64]) -> Result<f64> {
        let v = self.node_values(theta);
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(PcrError::NumericFailure("non-finite log-density".into()));
        }
        let s: f64 = v.iter().zip(&self.rule.weights).map(|(x, w)| w * (x - top).exp()).sum();
        let m = top + s.ln();
        if !m.is_finite() {
            return Err(PcrError::NumericFailure("log-partition overflow".into()));
        }
        Ok(m)
    }

    /// `∇M(θ) = E_θ[φ(X)]` by the same quadrature.
    pub fn mean_features(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let v = self.node_values(theta);
        let m = self.log_partition_value(theta)?;
        let mut out = vec![0.0; self.k];
        for ((row, x), w) in self.at_nodes.chunks_exact(self.k).zip(&v).zip(&self.rule.weights) {
            let p = w * (x - m).exp();
            for (o, r) in out.iter_mut().zip(row) {
                *o += p * r;
            }
        }
        Ok(out)
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.k {
            return Err(PcrError::InvalidInput(format!("expected {} coefficients, got {}", self.k, theta.len())));
        }
        Ok(())
    }
}

impl StatModel for LogisticModel {
    type Sample = f64;

    fn dim(&self) -> usize {
        self.k
    }

    fn sample_space(&self) -> SampleSpace {
        SampleSpace::Interval(0.0, 1.0)
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.k && theta.iter().all(|t| t.is_finite())
    }

    fn log_density(&self, x: &f64, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        if !(0.0..=1.0).contains(x) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.eval(theta, *x) - self.log_partition_value(theta)?)
    }

    fn sample(&self, theta0: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
        self.check(theta0)?;
        let grid = self.basis.grid_values(theta0, SAMPLER_INTERVALS);
        let top = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = grid.iter().map(|v| (v - top).exp()).collect();
        let sampler = GridSampler::new(0.0, 1.0, &dens)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n).map(|_| sampler.quantile(open_unit(&mut rng))).collect())
    }

    fn kl_analytic(&self, theta: &[f64], theta0: &[f64]) -> Option<Result<f64>> {
        let run = || -> Result<f64> {
            let m = self.log_partition_value(theta)?;
            let m0 = self.log_partition_value(theta0)?;
            let s0 = self.mean_features(theta0)?;
            let diff: Vec<f64> = theta.iter().zip(theta0).map(|(a, b)| a - b).collect();
            Ok(m - m0 - dot(&diff, &s0))
        };
        Some(run())
    }

    fn point_from_real(&self, x: f64) -> Option<f64> {
        Some(x)
    }

    fn as_real(&self, x: &f64) -> Option<f64> {
        Some(*x)
    }
}

impl ExponentialFamily for LogisticModel {
    fn stat_dim(&self) -> usize {
        self.k
    }

    fn beta(&self, x: &f64) -> Vec<f64> {
        self.features(*x)
    }

    fn natural(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(theta.to_vec())
    }

    fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        self.log_partition_value(theta)
    }

    fn kernel_exponent(&self, theta: &[f64], b: &[f64]) -> Result<f64> {
        Ok(dot(theta, b) - self.log_partition(theta)?)
    }

    fn natural_jacobian(&self, theta: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        Ok(nalgebra::DMatrix::identity(self.k, theta.len()))
    }
}

fn grid_step(len: usize) -> Result<f64> {
    if len < 5 {
        return Err(PcrError::InvalidInput("grid functions need at least 5 nodes".into()));
    }
    Ok(1.0 / (len - 1) as f64)
}

/// `exp{−osc(θ0)} {∫₀¹ min(x,y) h(y) dy − (x − x²/2) ∫₀¹ h}` on the uniform grid
/// carrying `h` and `θ0`.
pub fn apply_istar(h: &[f64], theta0: &[f64]) -> Result<Vec<f64>> {
    if h.len() != theta0.len() {
        return Err(PcrError::InvalidInput("h and theta0 must share the grid".into()));
    }
    let step = grid_step(h.len())?;
    let xs = unit_grid(h.len() - 1);
    let hi = theta0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = theta0.iter().copied().fold(f64::INFINITY, f64::min);
    let factor = (-(hi - lo)).exp();
    let yh: Vec<f64> = xs.iter().zip(h).map(|(y, v)| y * v).collect();
    let a = cumulative_integral(&yh, step);
    let b = cumulative_integral(h, step);
    let total = *b.last().expect("nonempty");
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, x)| factor * (a[i] + x * (total - b[i]) - (x - x * x / 2.0) * total))
        .collect())
}

/// `1 − F0` and `∫ h dμ0` for the logistic law with log-density `θ0` on the grid.
fn survival_and_mean(h: &[f64], theta0: &[f64], step: f64) -> (Vec<f64>, f64) {
    let top = theta0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = theta0.iter().map(|v| (v - top).exp()).collect();
    let cdf = cumulative_integral(&dens, step);
    let z = *cdf.last().expect("nonempty");
    let surv = cdf.iter().map(|c| 1.0 - c / z).collect();
    let hd: Vec<f64> = h.iter().zip(&dens).map(|(a, b)| a * b / z).collect();
    let mean = *cumulative_integral(&hd, step).last().expect("nonempty");
    (surv, mean)
}

/// Hessian of the log-partition at `θ0` applied to `h`:
/// `2∫₀^y h(1 − F0) − ⟨h, Φ0⟩ Φ0(y)` with `Φ0(y) = ∫₀^y (1 − F0)`.
pub fn hess_m(h: &[f64], theta0: &[f64]) -> Result<Vec<f64>> {
    if h.len() != theta0.len() {
        return Err(PcrError::InvalidInput("h and theta0 must share the grid".into()));
    }
    let step = grid_step(h.len())?;
    let (surv, mean) = survival_and_mean(h, theta0, step);
    let phi = cumulative_integral(&surv, step);
    let hs: Vec<f64> = h.iter().zip(&surv).map(|(a, b)| a * b).collect();
    let int = cumulative_integral(&hs, step);
    Ok(int.iter().zip(&phi).map(|(a, p)| 2.0 * a - mean * p).collect())
}

/// `⟨h, Hess M[h]⟩ = ∫ h′ (Hess M[h])′`, given `h` and `h′` on the grid.
pub fn hess_quadratic_form(h: &[f64], h_prime: &[f64], theta0: &[f64]) -> Result<f64> {
    if h.len() != theta0.len() || h_prime.len() != h.len() {
        return Err(PcrError::InvalidInput("h, h' and theta0 must share the grid".into()));
    }
    let step = grid_step(h.len())?;
    let (surv, mean) = survival_and_mean(h, theta0, step);
    let integrand: Vec<f64> = (0..h.len()).map(|i| h_prime[i] * surv[i] * (2.0 * h[i] - mean)).collect();
    Ok(*cumulative_integral(&integrand, step).last().expect("nonempty"))
}

/// `∫₀¹ u′ v′` from derivative values on the grid.
pub fn h1star_inner(u_prime: &[f64], v_prime: &[f64]) -> Result<f64> {
    let step = grid_step(u_prime.len())?;
    let prod: Vec<f64> = u_prime.iter().zip(v_prime).map(|(a, b)| a * b).collect();
    Ok(*cumulative_integral(&prod, step).last().expect("nonempty"))
}
