//! Weighted Poincaré–Wirtinger constants.
//!
//! The grid solver discretizes the weighted Neumann problem
//! `−(ρu′)′ = μρu` with a conservative finite-volume scheme, symmetrizes it
//! into a tridiagonal matrix and extracts the first nonzero eigenvalue by
//! Sturm-sequence bisection. The closed-form bounds cover finite-dimensional
//! Gibbs measures and Gaussian-reference Gibbs measures in coefficient space.

use crate::error::{PcrError, Result};
use crate::laplace::{maxterm_rate, SpectralDecay};
use crate::scalar::{from_usize, lit, Scalar};

/// Minimum number of grid nodes.
pub const MIN_NODES: usize = 128;
/// Default number of grid nodes for the builders.
pub const DEFAULT_NODES: usize = 2048;
/// Half-width of the truncation window in standard deviations.
pub const WINDOW_SDS: f64 = 8.0;

/// Unnormalized log-density sampled on a uniform grid of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity1D<T> {
    lo: T,
    hi: T,
    log_density: Vec<T>,
}

impl<T: Scalar> GridDensity1D<T> {
    pub fn new(lo: T, hi: T, log_density: Vec<T>) -> Result<Self> {
        if log_density.len() < MIN_NODES {
            return Err(PcrError::InvalidInput(format!("grid needs at least {MIN_NODES} nodes")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(PcrError::InvalidInput("grid needs finite lo < hi".into()));
        }
        if log_density.iter().any(|v| !v.is_finite()) {
            return Err(PcrError::InvalidInput("log-density must be finite at every node".into()));
        }
        Ok(Self { lo, hi, log_density })
    }

    /// Samples `log_density(x)` at `nodes` equispaced points.
    pub fn from_fn(lo: T, hi: T, nodes: usize, log_density: impl Fn(T) -> T) -> Result<Self> {
        if nodes < 2 {
            return Err(PcrError::InvalidInput(format!("grid needs at least {MIN_NODES} nodes")));
        }
        let h = (hi - lo) / from_usize(nodes - 1);
        let values = (0..nodes).map(|i| log_density(lo + h * from_usize(i))).collect();
        Self::new(lo, hi, values)
    }

    pub fn uniform(lo: T, hi: T, nodes: usize) -> Result<Self> {
        Self::from_fn(lo, hi, nodes, |_| T::zero())
    }

    /// `N(mean, sd²)` restricted to `mean ± 8 sd`.
    pub fn gaussian(mean: T, sd: T, nodes: usize) -> Result<Self> {
        if !(sd > T::zero()) {
            return Err(PcrError::InvalidParameter("standard deviation must be positive".into()));
        }
        let w = lit::<T>(WINDOW_SDS) * sd;
        Self::from_fn(mean - w, mean + w, nodes, |x| {
            let z = (x - mean) / sd;
            -z * z / lit(2.0)
        })
    }

    /// Gibbs density `exp(−nγθ²/2)` against the prior `N(0, λ)`.
    pub fn gibbs_gaussian(n: T, gamma: T, lambda: T, nodes: usize) -> Result<Self> {
        if !(lambda > T::zero()) || !(gamma >= T::zero()) || !(n >= T::zero()) {
            return Err(PcrError::InvalidParameter("need lambda > 0, gamma >= 0, n >= 0".into()));
        }
        let precision = n * gamma + T::one() / lambda;
        Self::gaussian(T::zero(), (T::one() / precision).sqrt(), nodes)
    }

    pub fn nodes(&self) -> usize {
        self.log_density.len()
    }

    pub fn bounds(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    pub fn step(&self) -> T {
        (self.hi - self.lo) / from_usize(self.nodes() - 1)
    }

    /// Stiffness (tridiagonal: diagonal, off-diagonal) and lumped mass diagonal
    /// of the discrete generalized eigenproblem `K u = μ M u`, with the density
    /// rescaled so its maximum is one.
    pub fn assemble(&self) -> (Vec<T>, Vec<T>, Vec<T>) {
        let n = self.nodes();
        let h = self.step();
        let top = self.log_density.iter().copied().fold(T::neg_infinity(), T::max);
        let rho: Vec<T> = self.log_density.iter().map(|v| (*v - top).exp()).collect();
        let half = lit::<T>(0.5);
        let edge: Vec<T> = (0..n - 1)
            .map(|i| ((self.log_density[i] + self.log_density[i + 1]) * half - top).exp() / h)
            .collect();
        let mut diag = vec![T::zero(); n];
        let mut off = vec![T::zero(); n - 1];
        for i in 0..n - 1 {
            diag[i] = diag[i] + edge[i];
            diag[i + 1] = diag[i + 1] + edge[i];
            off[i] = -edge[i];
        }
        let mass = (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 { half } else { T::one() };
                w * h * rho[i]
            })
            .collect();
        (diag, off, mass)
    }

    /// Symmetric tridiagonal `M^{-1/2} K M^{-1/2}`.
    pub fn symmetric_operator(&self) -> Result<(Vec<T>, Vec<T>)> {
        let (diag, off, mass) = self.assemble();
        if mass.iter().any(|m| !(*m > T::zero())) {
            return Err(PcrError::NumericFailure("density underflows on the grid".into()));
        }
        let inv_sqrt: Vec<T> = mass.iter().map(|m| T::one() / m.sqrt()).collect();
        let a_diag = diag.iter().zip(&inv_sqrt).map(|(d, s)| *d * *s * *s).collect();
        let a_off = off
            .iter()
            .enumerate()
            .map(|(i, o)| *o * inv_sqrt[i] * inv_sqrt[i + 1])
            .collect();
        Ok((a_diag, a_off))
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count<T: Scalar>(diag: &[T], off: &[T], x: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < T::zero() {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q.abs() < tiny { tiny } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// The `index`-th smallest eigenvalue (0-based) by bisection.
fn tridiagonal_eigenvalue<T: Scalar>(diag: &[T], off: &[T], index: usize) -> T {
    // Gershgorin interval.
    let n = diag.len();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { T::zero() } + if i + 1 < n { off[i].abs() } else { T::zero() };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let two = lit::<T>(2.0);
    for _ in 0..400 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) / two
}

/// First nonzero eigenvalue `μ₁` of the weighted Neumann problem.
pub fn spectral_gap<T: Scalar>(density: &GridDensity1D<T>) -> Result<T> {
    let (diag, off) = density.symmetric_operator()?;
    let mu1 = tridiagonal_eigenvalue(&diag, &off, 1);
    if !(mu1 > T::zero()) || !mu1.is_finite() {
        return Err(PcrError::NumericFailure(format!("first nonzero eigenvalue is not positive: {mu1}")));
    }
    Ok(mu1)
}

/// `𝔠₂ = 1/√μ₁`.
pub fn poincare_grid_1d<T: Scalar>(density: &GridDensity1D<T>) -> Result<T> {
    Ok(T::one() / spectral_gap(density)?.sqrt())
}

/// Constants of the finite-dimensional bound. `variant2` is required for the
/// second form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrancesiParams<T> {
    pub alpha: T,
    pub h: T,
    pub c: T,
    pub ell: T,
    pub r: T,
    pub d: usize,
    pub g_r: T,
    pub u_r: T,
    pub c_r: T,
    pub d_r: T,
    pub variant2: Option<FrancesiVariant2<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrancesiVariant2<T> {
    pub c1: T,
    pub c2: T,
    pub g_r_star: T,
    pub w_r: T,
    pub omega_r: T,
}

impl<T: Scalar> FrancesiParams<T> {
    /// Sets `d_R = (d − 1)/R`.
    pub fn with_default_d_r(mut self) -> Self {
        self.d_r = from_usize::<T>(self.d.saturating_sub(1)) / self.r;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    One,
    Two,
}

fn below<T: Scalar>(n: T, threshold: T) -> PcrError {
    PcrError::BelowThreshold { n: n.to_f64().unwrap_or(f64::NAN), threshold: threshold.to_f64().unwrap_or(f64::NAN) }
}

/// Validity threshold on `n` for the chosen variant.
pub fn francesi_threshold<T: Scalar>(params: &FrancesiParams<T>, variant: BoundVariant) -> Result<T> {
    let neg_h = -params.h / params.alpha;
    match variant {
        BoundVariant::One => Ok(neg_h.max((params.d_r + T::one() - params.ell) / params.c)),
        BoundVariant::Two => {
            let v2 = params
                .variant2
                .ok_or_else(|| PcrError::InvalidParameter("variant 2 constants missing".into()))?;
            Ok((T::one() + T::one() / v2.c2).max(neg_h))
        }
    }
}

/// Upper bound on `𝔠₂²` of the finite-dimensional Gibbs posterior.
pub fn francesi_bound<T: Scalar>(n: T, params: &FrancesiParams<T>, variant: BoundVariant) -> Result<T> {
    if !(params.alpha > T::zero()) || !(params.c > T::zero()) || !(params.r > T::zero()) || params.d == 0 {
        return Err(PcrError::InvalidParameter("need alpha > 0, c > 0, R > 0, d >= 1".into()));
    }
    let threshold = francesi_threshold(params, variant)?;
    if !(n > threshold) {
        return Err(below(n, threshold));
    }
    let base = params.alpha * n + params.h;
    match variant {
        BoundVariant::One => {
            let p = params;
            let growth = p.c * n + p.ell - p.d_r;
            Ok((base + (growth + n * p.g_r + p.u_r) * p.c_r) / (base * (growth - T::one())))
        }
        BoundVariant::Two => {
            let v2 = params.variant2.expect("checked by threshold");
            if !(v2.c1 > T::zero()) || !(v2.c2 > T::zero()) {
                return Err(PcrError::InvalidParameter("need c1 > 0 and c2 > 0".into()));
            }
            Ok((base + v2.omega_r.exp() * (v2.c1 * n + v2.g_r_star + v2.w_r)) / (base * v2.c1 * n))
        }
    }
}

/// Constants of the Gaussian-reference bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfiniteConsts<T> {
    /// Linear growth `θ·DG ≥ c‖θ‖` outside the ball of radius `R`.
    Variant1 { c: T, r: T, trace_q: T, c_r: T, g_r: T },
    /// Gradient-dominance growth with constants `c₁`, `c₂`.
    Variant2 { c1: T, c2: T, c1_big: T, g_r_star: T, omega_r: T },
}

impl<T: Scalar> InfiniteConsts<T> {
    /// All constants one, with the given prior trace.
    pub fn unit(trace_q: T) -> Self {
        InfiniteConsts::Variant1 { c: T::one(), r: T::one(), trace_q, c_r: T::one(), g_r: T::one() }
    }

    pub fn threshold(&self) -> T {
        match *self {
            InfiniteConsts::Variant1 { c, r, trace_q, .. } => trace_q * (T::one() + T::one() / r) / c,
            InfiniteConsts::Variant2 { c2, .. } => T::one() + T::one() / c2,
        }
    }
}

/// Upper bound on the squared Poincaré constant of `e^{−nG}π` with
/// Gaussian `π`, driven by `max_k λ_k/(nλ_kη_k+1)`.
pub fn infinite_bound<T: Scalar>(n: T, spec: &SpectralDecay<T>, consts: &InfiniteConsts<T>) -> Result<T> {
    let threshold = consts.threshold();
    if !(n > threshold) {
        return Err(below(n, threshold));
    }
    let maxterm = maxterm_rate(n, spec);
    match *consts {
        InfiniteConsts::Variant1 { c, r, trace_q, c_r, g_r } => {
            if !(c > T::zero()) || !(r > T::zero()) {
                return Err(PcrError::InvalidParameter("need c > 0 and R > 0".into()));
            }
            let tau = c * n - trace_q * (T::one() + T::one() / r);
            Ok((T::one() + c_r * (T::one() + tau + n * g_r) * maxterm) / tau)
        }
        InfiniteConsts::Variant2 { c1, c1_big, g_r_star, omega_r, .. } => {
            if !(c1 > T::zero()) {
                return Err(PcrError::InvalidParameter("need c1 > 0".into()));
            }
            Ok((T::one() + omega_r.exp() * (c1_big * n + g_r_star) * maxterm) / (c1 * n))
        }
    }
}

/// `L₀⁽ⁿ⁾ = n · 𝔠₂² · √(∫‖Dg‖²)`.
pub fn l0n_estimate<T: Scalar>(n: T, poincare_sq: T, grad_g_moment: T) -> Result<T> {
    if !(n >= T::zero()) || !(poincare_sq >= T::zero()) || !(grad_g_moment >= T::zero()) {
        return Err(PcrError::InvalidInput("inputs must be nonnegative".into()));
    }
    Ok(n * poincare_sq * grad_g_moment.sqrt())
}
