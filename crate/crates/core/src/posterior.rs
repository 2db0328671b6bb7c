//! Posterior moments by grid quadrature (dimension ≤ 2), self-normalized
//! importance sampling from the prior, or random-walk Metropolis.
//!
//! Every method works in coefficient space, so `‖θ − θ0‖` is the Euclidean
//! norm of coefficient differences.

use crate::error::{PcrError, Result};
use crate::expfam::{ExponentialFamily, PosteriorKernelSpec};
use crate::models::{Prior, StatModel};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Importance and MCMC runs with fewer effective draws are flagged.
pub const MIN_ESS: f64 = 50.0;
/// MCMC runs with a larger potential scale reduction are flagged.
pub const MAX_RHAT: f64 = 1.1;
const ADAPT_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    Importance,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub method: Method,
    /// Nodes per dimension for the grid method.
    pub grid_nodes: usize,
    /// Maximum zoom passes for the grid method.
    pub grid_passes: usize,
    /// Importance draws, or total MCMC draws across chains (burn-in included).
    pub draws: usize,
    pub chains: usize,
    pub burn_in: f64,
    pub target_acceptance: f64,
    /// Exponent of the raw moment `∫‖θ‖^{ap}`.
    pub raw_exponent: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            method: Method::Grid,
            grid_nodes: 256,
            grid_passes: 8,
            draws: 20_000,
            chains: 4,
            burn_in: 0.5,
            target_acceptance: 0.234,
            raw_exponent: 4.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn with_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Grid && self.grid_nodes < crate::poincare::MIN_NODES {
            return Err(PcrError::InvalidSpec("grid needs at least 128 nodes per dimension".into()));
        }
        if self.method == Method::Mcmc {
            if self.draws < 10_000 {
                return Err(PcrError::InvalidSpec("MCMC needs at least 10^4 total draws".into()));
            }
            if self.chains < 2 {
                return Err(PcrError::InvalidSpec("MCMC needs at least two chains".into()));
            }
            if !(0.0..1.0).contains(&self.burn_in) {
                return Err(PcrError::InvalidSpec("burn-in fraction must lie in [0, 1)".into()));
            }
        }
        if self.method == Method::Importance && self.draws < 2 {
            return Err(PcrError::InvalidSpec("importance sampling needs draws".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(PcrError::InvalidSpec("target acceptance must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    DegenerateWeights,
    NonConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: Method,
    pub grid_size: Option<usize>,
    pub ess: Option<f64>,
    pub acceptance: Option<f64>,
    pub rhat: Option<f64>,
    pub proposal_sd: Option<Vec<f64>>,
    pub flags: Vec<Flag>,
}

impl Diagnostics {
    pub(crate) fn new(method: Method) -> Self {
        Self { method, grid_size: None, ess: None, acceptance: None, rhat: None, proposal_sd: None, flags: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorEstimate {
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    #[serde(skip)]
    pub cov: DMatrix<f64>,
    pub p: f64,
    /// `∫‖θ − θ0‖^p dπ_n`.
    pub central_moment: f64,
    pub central_moment_se: f64,
    pub raw_exponent: f64,
    /// `∫‖θ‖^{ap} dπ_n`.
    pub raw_moment: f64,
    pub diagnostics: Diagnostics,
}

impl PosteriorEstimate {
    /// `W_p(π_n, δ_θ0)`.
    pub fn wasserstein_to_point(&self) -> f64 {
        self.central_moment.max(0.0).powf(1.0 / self.p)
    }

    /// Largest eigenvalue of the posterior covariance.
    pub fn cov_max_eigenvalue(&self) -> f64 {
        if self.cov.nrows() == 0 {
            return 0.0;
        }
        self.cov.clone().symmetric_eigenvalues().iter().copied().fold(0.0, f64::max)
    }

    pub fn flagged(&self) -> bool {
        !self.diagnostics.flags.is_empty()
    }
}

type LogLik<'a> = Box<dyn Fn(&[f64]) -> Result<f64> + Send + Sync + 'a>;

/// Unnormalized posterior: prior plus a log-likelihood.
pub struct PosteriorProblem<'a> {
    prior: &'a dyn Prior,
    log_lik: LogLik<'a>,
}

impl std::fmt::Debug for PosteriorProblem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PosteriorProblem").field("prior", &self.prior).finish_non_exhaustive()
    }
}

impl<'a> PosteriorProblem<'a> {
    pub fn new(prior: &'a dyn Prior, log_lik: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'a) -> Self {
        Self { prior, log_lik: Box::new(log_lik) }
    }

    /// Exponential-family kernel `n(⟨g(θ), b⟩ − M(θ))`.
    pub fn from_kernel<F: ExponentialFamily>(kernel: &'a PosteriorKernelSpec<'a, F>) -> Self {
        Self::new(kernel.prior, move |t| kernel.log_likelihood(t))
    }

    /// Full-data likelihood `Σ log f(x_i|θ)`.
    pub fn from_data<M: StatModel>(model: &'a M, prior: &'a dyn Prior, data: &'a [M::Sample]) -> Self {
        Self::new(prior, move |t| {
            if !model.in_domain(t) {
                return Ok(f64::NEG_INFINITY);
            }
            let mut acc = 0.0;
            for x in data {
                acc += model.log_density(x, t)?;
            }
            Ok(acc)
        })
    }

    pub fn prior(&self) -> &dyn Prior {
        self.prior
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        (self.log_lik)(theta)
    }

    /// Unnormalized log posterior; `-inf` outside the support.
    pub fn log_posterior(&self, theta: &[f64]) -> Result<f64> {
        let lp = self.prior.log_density(theta);
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        let ll = self.log_likelihood(theta)?;
        if ll.is_nan() {
            return Err(PcrError::NumericFailure("log-likelihood is NaN".into()));
        }
        Ok(lp + ll)
    }
}

/// Moments of a weighted point set.
struct Accumulator<'a> {
    theta0: &'a [f64],
    p: f64,
    raw_exponent: f64,
    total: f64,
    sum: Vec<f64>,
    outer: DMatrix<f64>,
    central: f64,
    raw: f64,
}

impl<'a> Accumulator<'a> {
    fn new(theta0: &'a [f64], p: f64, raw_exponent: f64) -> Self {
        let d = theta0.len();
        Self {
            theta0,
            p,
            raw_exponent,
            total: 0.0,
            sum: vec![0.0; d],
            outer: DMatrix::zeros(d, d),
            central: 0.0,
            raw: 0.0,
        }
    }

    fn central_term(&self, theta: &[f64]) -> f64 {
        let d2: f64 = theta.iter().zip(self.theta0).map(|(a, b)| (a - b).powi(2)).sum();
        d2.powf(self.p / 2.0)
    }

    fn add(&mut self, theta: &[f64], w: f64) {
        if w == 0.0 {
            return;
        }
        self.total += w;
        for (i, t) in theta.iter().enumerate() {
            self.sum[i] += w * t;
            for (j, u) in theta.iter().enumerate().skip(i) {
                self.outer[(i, j)] += w * t * u;
            }
        }
        self.central += w * self.central_term(theta);
        let r2: f64 = theta.iter().map(|t| t * t).sum();
        self.raw += w * r2.powf(self.raw_exponent / 2.0);
    }

    fn finish(self, diagnostics: Diagnostics) -> Result<PosteriorEstimate> {
        if !(self.total > 0.0) || !self.total.is_finite() {
            return Err(PcrError::NumericFailure("all posterior weights underflow".into()));
        }
        let d = self.sum.len();
        let mean: Vec<f64> = self.sum.iter().map(|s| s / self.total).collect();
        let mut cov = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let c = self.outer[(i, j)] / self.total - mean[i] * mean[j];
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        Ok(PosteriorEstimate {
            mean,
            mean_se: vec![0.0; d],
            cov,
            p: self.p,
            central_moment: self.central / self.total,
            central_moment_se: 0.0,
            raw_exponent: self.raw_exponent,
            raw_moment: self.raw / self.total,
            diagnostics,
        })
    }
}

fn check_inputs(problem: &PosteriorProblem<'_>, p: f64, theta0: &[f64], cfg: &SamplerConfig) -> Result<()> {
    cfg.validate()?;
    if !(p >= 1.0) {
        return Err(PcrError::InvalidParameter("moment order p must be at least 1".into()));
    }
    if theta0.len() != problem.dim() {
        return Err(PcrError::InvalidInput("theta0 has the wrong dimension".into()));
    }
    Ok(())
}

/// A degenerate prior yields a degenerate posterior.
fn point_mass_estimate(at: &[f64], p: f64, theta0: &[f64], cfg: &SamplerConfig) -> Result<PosteriorEstimate> {
    let mut acc = Accumulator::new(theta0, p, cfg.raw_exponent);
    acc.add(at, 1.0);
    acc.finish(Diagnostics::new(cfg.method))
}

/// Estimate with the method selected in `cfg`.
pub fn posterior_estimate(
    problem: &PosteriorProblem<'_>,
    p: f64,
    theta0: &[f64],
    cfg: &SamplerConfig,
) -> Result<PosteriorEstimate> {
    match cfg.method {
        Method::Grid => posterior_grid(problem, p, theta0, cfg),
        Method::Importance => posterior_importance(problem, p, theta0, cfg),
        Method::Mcmc => posterior_mcmc(problem, p, theta0, cfg),
    }
}

/// Tensor trapezoid quadrature on a box that zooms onto the posterior mass.
pub fn posterior_grid(
    problem: &PosteriorProblem<'_>,
    p: f64,
    theta0: &[f64],
    cfg: &SamplerConfig,
) -> Result<PosteriorEstimate> {
    check_inputs(problem, p, theta0, cfg)?;
    let d = problem.dim();
    if d == 0 || d > 2 {
        return Err(PcrError::UnsupportedSpec(format!("grid method supports dimension 1 or 2, got {d}")));
    }
    if let Some(at) = problem.prior().point_mass() {
        return point_mass_estimate(&at, p, theta0, cfg);
    }
    let m = cfg.grid_nodes;
    let prior_mean = problem.prior().mean();
    let prior_sd = problem.prior().marginal_sd();
    let mut lo: Vec<f64> = prior_mean.iter().zip(&prior_sd).map(|(m, s)| m - 12.0 * s).collect();
    let mut hi: Vec<f64> = prior_mean.iter().zip(&prior_sd).map(|(m, s)| m + 12.0 * s).collect();
    let (outer_lo, outer_hi) = (lo.clone(), hi.clone());
    let mut result = None;
    let mut lp = vec![0.0; m.pow(d as u32)];
    let mut point = vec![0.0; d];
    for _ in 0..cfg.grid_passes.max(1) {
        let step: Vec<f64> = (0..d).map(|k| (hi[k] - lo[k]) / (m - 1) as f64).collect();
        let coord = |k: usize, i: usize| lo[k] + step[k] * i as f64;
        let index = |flat: usize, k: usize| if k == 0 { flat % m } else { flat / m };
        let mut top = f64::NEG_INFINITY;
        for (flat, slot) in lp.iter_mut().enumerate() {
            for (k, x) in point.iter_mut().enumerate() {
                *x = coord(k, index(flat, k));
            }
            *slot = problem.log_posterior(&point)?;
            top = top.max(*slot);
        }
        if !top.is_finite() {
            return Err(PcrError::NumericFailure("all grid weights underflow".into()));
        }
        let mut acc = Accumulator::new(theta0, p, cfg.raw_exponent);
        let mut support_lo = vec![f64::INFINITY; d];
        let mut support_hi = vec![f64::NEG_INFINITY; d];
        for (flat, l) in lp.iter().enumerate() {
            let rel = (l - top).exp();
            if rel == 0.0 {
                continue;
            }
            let mut w = rel;
            for (k, x) in point.iter_mut().enumerate() {
                let i = index(flat, k);
                *x = coord(k, i);
                if i == 0 || i == m - 1 {
                    w *= 0.5;
                }
                if rel > 1e-30 {
                    support_lo[k] = support_lo[k].min(*x);
                    support_hi[k] = support_hi[k].max(*x);
                }
            }
            acc.add(&point, w);
        }
        let mut diag = Diagnostics::new(Method::Grid);
        diag.grid_size = Some(lp.len());
        let est = acc.finish(diag)?;
        // Next box: posterior mean ± 12 sd, trimmed to the visible support and
        // never wider than the initial box. The sd is floored at the grid step
        // so an under-resolved pass cannot collapse the box.
        let mut moved = false;
        for k in 0..d {
            let sd = est.cov[(k, k)].max(0.0).sqrt().max(step[k]);
            let new_lo = (support_lo[k] - 2.0 * step[k]).max(est.mean[k] - 12.0 * sd).max(outer_lo[k]);
            let new_hi = (support_hi[k] + 2.0 * step[k]).min(est.mean[k] + 12.0 * sd).min(outer_hi[k]);
            let (old_w, new_w) = (hi[k] - lo[k], new_hi - new_lo);
            if new_w > 0.0 && ((new_w - old_w).abs() > 0.1 * old_w || (new_lo - lo[k]).abs() > 0.1 * old_w) {
                moved = true;
                lo[k] = new_lo;
                hi[k] = new_hi;
            }
        }
        result = Some(est);
        if !moved {
            break;
        }
    }
    Ok(result.expect("at least one pass"))
}

/// Effective sample size `(Σw)²/Σw²`.
pub fn importance_ess(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// Self-normalized importance sampling with the prior as proposal.
pub fn posterior_importance(
    problem: &PosteriorProblem<'_>,
    p: f64,
    theta0: &[f64],
    cfg: &SamplerConfig,
) -> Result<PosteriorEstimate> {
    check_inputs(problem, p, theta0, cfg)?;
    if let Some(at) = problem.prior().point_mass() {
        return point_mass_estimate(&at, p, theta0, cfg);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws: Vec<Vec<f64>> = (0..cfg.draws).map(|_| problem.prior().sample(&mut rng)).collect();
    let ll = draws.iter().map(|t| problem.log_likelihood(t)).collect::<Result<Vec<f64>>>()?;
    let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(PcrError::NumericFailure("all importance weights underflow".into()));
    }
    let w: Vec<f64> = ll.iter().map(|l| (l - top).exp()).collect();
    let mut acc = Accumulator::new(theta0, p, cfg.raw_exponent);
    for (t, wi) in draws.iter().zip(&w) {
        acc.add(t, *wi);
    }
    let ess = importance_ess(&w);
    let mut diag = Diagnostics::new(Method::Importance);
    diag.ess = Some(ess);
    if ess < MIN_ESS {
        diag.flags.push(Flag::DegenerateWeights);
    }
    let terms: Vec<f64> = draws.iter().map(|t| acc.central_term(t)).collect();
    let mut est = acc.finish(diag)?;
    // Delta-method standard errors of ratio estimators.
    let total: f64 = w.iter().sum();
    let se = |f: &dyn Fn(usize) -> f64, centre: f64| -> f64 {
        (w.iter().enumerate().map(|(i, wi)| wi * wi * (f(i) - centre).powi(2)).sum::<f64>()).sqrt() / total
    };
    est.central_moment_se = se(&|i| terms[i], est.central_moment);
    est.mean_se = (0..est.mean.len()).map(|k| se(&|i| draws[i][k], est.mean[k])).collect();
    Ok(est)
}

/// Derives an independent stream seed from a base seed and indices.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    let mut x = base ^ 0x9E37_79B9_7F4A_7C15;
    for i in indices {
        x = splitmix(x ^ splitmix(i.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Chain {
    draws: Vec<Vec<f64>>,
    accepted: usize,
    proposal_sd: Vec<f64>,
}

fn run_chain(problem: &PosteriorProblem<'_>, cfg: &SamplerConfig, chain: usize, per_chain: usize) -> Result<Chain> {
    let d = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[chain as u64]));
    let prior_sd = problem.prior().marginal_sd();
    let mut state = problem.prior().mean();
    let mut lp = problem.log_posterior(&state)?;
    if !lp.is_finite() {
        return Err(PcrError::NumericFailure("log posterior is not finite at the prior mean".into()));
    }
    // Jittered start so the chains are distinguishable.
    let jittered: Vec<f64> = state
        .iter()
        .zip(&prior_sd)
        .map(|(s, sd)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s + 0.1 * sd * z
        })
        .collect();
    let jlp = problem.log_posterior(&jittered)?;
    if jlp.is_finite() {
        state = jittered;
        lp = jlp;
    }
    let burn = (per_chain as f64 * cfg.burn_in).round() as usize;
    let base = 2.38 / (d as f64).sqrt();
    let mut scale_ref = prior_sd.clone();
    let mut log_scale = 0.0f64;
    let mut proposal: Vec<f64> = scale_ref.iter().map(|s| base * s).collect();
    let mut window_accepted = 0usize;
    let mut window_index = 0usize;
    let mut welford_n = 0usize;
    let mut welford_mean = vec![0.0; d];
    let mut welford_m2 = vec![0.0; d];
    let mut draws = Vec::with_capacity(per_chain - burn);
    let mut accepted = 0usize;
    let mut candidate = vec![0.0; d];
    for it in 0..per_chain {
        for k in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            candidate[k] = state[k] + proposal[k] * z;
        }
        let clp = problem.log_posterior(&candidate)?;
        let u: f64 = crate::models::prior::open_unit(&mut rng);
        let accept = clp.is_finite() && u.ln() < clp - lp;
        if accept {
            state.copy_from_slice(&candidate);
            lp = clp;
        }
        if it < burn {
            window_accepted += accept as usize;
            if it >= burn / 2 {
                welford_n += 1;
                for k in 0..d {
                    let delta = state[k] - welford_mean[k];
                    welford_mean[k] += delta / welford_n as f64;
                    welford_m2[k] += delta * (state[k] - welford_mean[k]);
                }
            }
            if (it + 1) % ADAPT_WINDOW == 0 {
                let rate = window_accepted as f64 / ADAPT_WINDOW as f64;
                let gain = 3.0 / (1.0 + window_index as f64 / 10.0).sqrt();
                log_scale += gain * (rate - cfg.target_acceptance);
                window_accepted = 0;
                window_index += 1;
                if welford_n >= 200 {
                    for k in 0..d {
                        let sd = (welford_m2[k] / (welford_n - 1) as f64).sqrt();
                        scale_ref[k] = sd.max(1e-12 * prior_sd[k]).max(f64::MIN_POSITIVE);
                    }
                }
                for k in 0..d {
                    proposal[k] = log_scale.exp() * base * scale_ref[k];
                }
            }
        } else {
            accepted += accept as usize;
            draws.push(state.clone());
        }
    }
    Ok(Chain { draws, accepted, proposal_sd: proposal })
}

/// Gelman–Rubin potential scale reduction for one coordinate.
pub fn rhat(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 2 || chains.len() < 2 {
        return f64::NAN;
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c[..n].iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = nf / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..n].iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((nf - 1.0) / nf * w + b / nf) / w).sqrt()
}

/// Effective sample size across chains by Geyer's initial positive sequence
/// applied to the chain-averaged autocorrelation.
pub fn multichain_ess(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 4 || m == 0 {
        return 0.0;
    }
    let centred: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| {
            let mu = c[..n].iter().sum::<f64>() / n as f64;
            c[..n].iter().map(|x| x - mu).collect()
        })
        .collect();
    let acov = |lag: usize| -> f64 {
        centred.iter().map(|c| (0..n - lag).map(|i| c[i] * c[i + lag]).sum::<f64>() / n as f64).sum::<f64>()
            / m as f64
    };
    let var0 = acov(0);
    if var0 <= 0.0 {
        return (m * n) as f64;
    }
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (acov(lag) + acov(lag + 1)) / var0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (m * n) as f64 / tau.max(1e-12)
}

/// Standard error of a pooled mean by batch means, 20 batches per chain.
fn batch_means_se(series: &[Vec<f64>]) -> f64 {
    let mut batches = Vec::new();
    for s in series {
        let size = (s.len() / 20).max(1);
        for chunk in s.chunks_exact(size) {
            batches.push(chunk.iter().sum::<f64>() / size as f64);
        }
    }
    let k = batches.len() as f64;
    if k < 2.0 {
        return f64::NAN;
    }
    let mu = batches.iter().sum::<f64>() / k;
    (batches.iter().map(|b| (b - mu).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
}

/// Random-walk Metropolis with diagonal Gaussian proposals adapted during
/// burn-in and frozen afterwards.
pub fn posterior_mcmc(
    problem: &PosteriorProblem<'_>,
    p: f64,
    theta0: &[f64],
    cfg: &SamplerConfig,
) -> Result<PosteriorEstimate> {
    check_inputs(problem, p, theta0, cfg)?;
    if let Some(at) = problem.prior().point_mass() {
        return point_mass_estimate(&at, p, theta0, cfg);
    }
    let d = problem.dim();
    let per_chain = cfg.draws / cfg.chains;
    let chains =
        (0..cfg.chains).map(|c| run_chain(problem, cfg, c, per_chain)).collect::<Result<Vec<Chain>>>()?;
    let mut acc = Accumulator::new(theta0, p, cfg.raw_exponent);
    for c in &chains {
        for t in &c.draws {
            acc.add(t, 1.0);
        }
    }
    let kept: usize = chains.iter().map(|c| c.draws.len()).sum();
    let accepted: usize = chains.iter().map(|c| c.accepted).sum();
    let coord_series = |k: usize| -> Vec<Vec<f64>> { chains.iter().map(|c| c.draws.iter().map(|t| t[k]).collect()).collect() };
    let mut worst_rhat: f64 = 1.0;
    let mut min_ess = f64::INFINITY;
    let mut ess_per_coord = Vec::with_capacity(d);
    for k in 0..d {
        let s = coord_series(k);
        let r = rhat(&s);
        worst_rhat = if r.is_nan() { f64::NAN } else { worst_rhat.max(r) };
        let e = multichain_ess(&s);
        min_ess = min_ess.min(e);
        ess_per_coord.push(e);
    }
    let central_series: Vec<Vec<f64>> =
        chains.iter().map(|c| c.draws.iter().map(|t| acc.central_term(t)).collect()).collect();
    let mut diag = Diagnostics::new(Method::Mcmc);
    diag.ess = Some(min_ess);
    diag.acceptance = Some(accepted as f64 / kept.max(1) as f64);
    diag.rhat = Some(worst_rhat);
    diag.proposal_sd = Some(chains[0].proposal_sd.clone());
    if !(worst_rhat <= MAX_RHAT) {
        diag.flags.push(Flag::NonConvergence);
    }
    if min_ess < MIN_ESS {
        diag.flags.push(Flag::DegenerateWeights);
    }
    let mut est = acc.finish(diag)?;
    est.mean_se = (0..d).map(|k| (est.cov[(k, k)].max(0.0) / ess_per_coord[k].max(1.0)).sqrt()).collect();
    est.central_moment_se = batch_means_se(&central_series);
    Ok(est)
}
