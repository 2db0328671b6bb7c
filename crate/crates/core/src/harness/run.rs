//! Monte Carlo estimation of `ε_n`, tail probabilities and the four-term
//! decomposition over an `n` ladder.

use super::config::{BoundPath, BuiltModel, ExperimentConfig, ModelSpec};
use super::rate::{fit_rate, RateFit};
use crate::error::{PcrError, Result};
use crate::expfam::{natural_jacobian_norm, norm, s_zero, suff_stat_mean, ExponentialFamily, PosteriorKernelSpec};
use crate::laplace::{assemble_general_bound, assemble_pcr_bound, BoundComponents, GeneralBoundComponents, SpectralDecay};
use crate::measure::{wasserstein_1d, EmpiricalMeasure, QuantileMeasure};
use crate::models::{linreg_stat_posterior, GaussianPrior, LinRegModel, Prior, SampleSpace, StatModel};
use crate::poincare::{infinite_bound, l0n_estimate, InfiniteConsts};
use crate::posterior::{derive_seed, posterior_estimate, Flag, PosteriorEstimate, PosteriorProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Replications flagged non-convergent beyond this fraction fail the run.
pub const MAX_FLAGGED_FRACTION: f64 = 0.2;
/// Perturbed statistics used to maximize the Lipschitz factor.
const PERTURBATIONS: usize = 8;
/// Seed-stream tags.
const STREAM_POSTERIOR: u64 = 1;
const STREAM_SHRINKAGE: u64 = u64::MAX;
const STREAM_PERTURB: u64 = u64::MAX - 1;

/// One `(n, replication)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    /// `W_p(π_n, δ_θ0)`.
    pub eps: f64,
    /// `‖Ŝ_n − S0‖`.
    pub stat_dev: f64,
    /// `W_2(e_n, μ0)` for one-dimensional observations, else `‖Ŝ_n − S0‖`.
    pub gc: f64,
    /// `∫‖θ‖^{ap} dπ_n`.
    pub raw_moment: f64,
    /// `∫‖θ‖² dπ_n`.
    pub second_moment: f64,
    pub nonconvergent: bool,
    pub term4: f64,
    pub bound_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermSummary {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub term4: f64,
    pub total: f64,
}

impl TermSummary {
    /// `(term2 + term3)/(term1 + term4)`.
    pub fn tail_ratio(&self) -> f64 {
        (self.term2 + self.term3) / (self.term1 + self.term4)
    }
}

/// Results at one ladder point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub n: usize,
    pub delta_n: f64,
    pub eps_hat: f64,
    pub eps_se: f64,
    pub jn: f64,
    pub gc_mean: f64,
    pub mean_stat_dev: f64,
    pub shrinkage: f64,
    pub l0n: f64,
    pub terms: TermSummary,
    pub flagged_fraction: f64,
    /// Fraction of cells with `eps ≤ bound_total`.
    pub dominance_fraction: f64,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcrRunResult {
    pub config: ExperimentConfig,
    pub levels: Vec<LevelResult>,
    pub eps_fit: Option<RateFit>,
    pub bound_fit: Option<RateFit>,
    pub run_failure: Option<String>,
}

impl PcrRunResult {
    pub fn seeds(&self) -> Vec<u64> {
        self.levels.iter().flat_map(|l| l.cells.iter().map(|c| c.seed)).collect()
    }

    pub fn dominance_fraction(&self) -> f64 {
        let cells: Vec<&Cell> = self.levels.iter().flat_map(|l| &l.cells).collect();
        cells.iter().filter(|c| c.eps <= c.bound_total).count() as f64 / cells.len().max(1) as f64
    }
}

/// How the Lipschitz factor `L₀⁽ⁿ⁾` is obtained.
#[derive(Debug, Clone)]
enum LipschitzMode {
    /// `n · max λmax(Cov π_n(·|b)) · ‖Dg‖` over `b` near `S0`.
    PosteriorCovariance,
    /// `n · (Gaussian-reference Poincaré bound) · ‖Dg‖`.
    Spectral { spec: SpectralDecay<f64>, consts: InfiniteConsts<f64> },
}

/// Model-independent run context.
struct Ctx<'a, F: ExponentialFamily> {
    cfg: &'a ExperimentConfig,
    family: &'a F,
    prior: &'a dyn Prior,
    theta0: Vec<f64>,
    s0: Vec<f64>,
    exact: Option<(&'a LinRegModel, GaussianPrior)>,
    lipschitz: LipschitzMode,
    mu0: Option<QuantileMeasure<f64>>,
}

/// A configured experiment with its model and prior built.
#[derive(Debug)]
pub struct Experiment {
    cfg: ExperimentConfig,
    model: BuiltModel,
    prior: Box<dyn Prior>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.build_model()?;
        let prior = cfg.build_prior()?;
        Ok(Self { cfg, model, prior })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// `(ε̂_n, standard error)` over the configured replications.
    pub fn estimate_epsilon_n(&self, n: usize) -> Result<(f64, f64)> {
        self.dispatch(|ctx| {
            let cells = ctx.cells(n)?;
            let flagged = cells.iter().filter(|c| c.nonconvergent).count() as f64 / cells.len() as f64;
            if flagged > MAX_FLAGGED_FRACTION {
                return Err(PcrError::RunFailure(format!("{:.0}% of replications non-convergent at n = {n}", 100.0 * flagged)));
            }
            Ok(mean_se(&cells.iter().map(|c| c.eps).collect::<Vec<_>>()))
        })
    }

    /// Monte Carlo `P(‖Ŝ_n − S0‖ ≥ δ_n)`.
    pub fn tail_probability(&self, n: usize, delta_n: f64) -> Result<f64> {
        self.dispatch(|ctx| {
            let devs = ctx.tail_devs(n, &[])?;
            Ok(fraction_at_least(&devs, delta_n))
        })
    }

    /// The full decomposition over the ladder.
    pub fn run(&self) -> Result<PcrRunResult> {
        self.dispatch(|ctx| ctx.run())
    }

    fn dispatch<R>(&self, f: impl FnOnce(&dyn Runner) -> Result<R>) -> Result<R> {
        let theta0 = self.cfg.theta0()?;
        match &self.model {
            BuiltModel::Multinomial(m) => f(&Ctx::new(&self.cfg, m, self.prior.as_ref(), theta0, None)?),
            BuiltModel::Logistic(m) => f(&Ctx::new(&self.cfg, m, self.prior.as_ref(), theta0, None)?),
            BuiltModel::LinReg(m) => {
                let exact = match self.cfg.model {
                    ModelSpec::LinearRegression { exact: true, .. } => {
                        Some((m, self.cfg.gaussian_prior()?.expect("validated Gaussian prior")))
                    }
                    _ => None,
                };
                f(&Ctx::new(&self.cfg, m, self.prior.as_ref(), theta0, exact)?)
            }
        }
    }
}

/// Object-safe view of a context, so `dispatch` can hand out one type.
trait Runner {
    fn cells(&self, n: usize) -> Result<Vec<Cell>>;
    fn tail_devs(&self, n: usize, known: &[f64]) -> Result<Vec<f64>>;
    fn run(&self) -> Result<PcrRunResult>;
}

/// Convenience wrapper: `(ε̂_n, se)` for a configuration.
pub fn estimate_epsilon_n(cfg: &ExperimentConfig, n: usize) -> Result<(f64, f64)> {
    Experiment::new(cfg.clone())?.estimate_epsilon_n(n)
}

/// Convenience wrapper: Monte Carlo tail probability for a configuration.
pub fn tail_probability(cfg: &ExperimentConfig, n: usize, delta_n: f64) -> Result<f64> {
    Experiment::new(cfg.clone())?.tail_probability(n, delta_n)
}

/// Convenience wrapper: the full decomposition for a configuration.
pub fn run_decomposition(cfg: &ExperimentConfig) -> Result<PcrRunResult> {
    Experiment::new(cfg.clone())?.run()
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn fraction_at_least(devs: &[f64], delta: f64) -> f64 {
    if devs.is_empty() {
        return 0.0;
    }
    devs.iter().filter(|d| **d >= delta).count() as f64 / devs.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Quantile measure of a one-dimensional `μ0` from its tabulated density.
fn interval_law<M: StatModel>(model: &M, theta0: &[f64], lo: f64, hi: f64) -> Result<QuantileMeasure<f64>> {
    let nodes = crate::models::logistic::SAMPLER_INTERVALS + 1;
    let step = (hi - lo) / (nodes - 1) as f64;
    let log_dens = (0..nodes)
        .map(|i| {
            let x = model.point_from_real(lo + step * i as f64).expect("interval model maps reals");
            model.log_density(&x, theta0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let top = log_dens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = log_dens.iter().map(|l| (l - top).exp()).collect();
    let sampler = crate::models::GridSampler::new(lo, hi, &dens)?;
    Ok(QuantileMeasure::from_fn(move |u| sampler.quantile(u)))
}

impl<'a, F: ExponentialFamily> Ctx<'a, F> {
    fn new(
        cfg: &'a ExperimentConfig,
        family: &'a F,
        prior: &'a dyn Prior,
        theta0: Vec<f64>,
        exact: Option<(&'a LinRegModel, GaussianPrior)>,
    ) -> Result<Self> {
        if !family.in_domain(&theta0) {
            return Err(PcrError::Config("theta0 lies outside the model domain".into()));
        }
        let s0 = s_zero(family, &theta0)?.value;
        let lipschitz = match (&cfg.model, cfg.gaussian_prior()?) {
            (ModelSpec::InfiniteLogistic { .. }, Some(g)) => {
                let grid = crate::models::LogisticBasis::H1Star.grid_values(&theta0, 4096);
                let osc = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    - grid.iter().copied().fold(f64::INFINITY, f64::min);
                let gamma: Vec<f64> =
                    (1..=g.dim()).map(|k| (-osc).exp() / (k as f64 * PI).powi(2)).collect();
                let spec = SpectralDecay::from_arrays(g.variances().to_vec(), gamma);
                LipschitzMode::Spectral { spec, consts: InfiniteConsts::unit(g.trace()) }
            }
            _ => LipschitzMode::PosteriorCovariance,
        };
        let mu0 = match family.sample_space() {
            SampleSpace::Interval(lo, hi) => Some(interval_law(family, &theta0, lo, hi)?),
            _ => None,
        };
        Ok(Self { cfg, family, prior, theta0, s0, exact, lipschitz, mu0 })
    }

    fn sampler_seeded(&self, seed: u64) -> crate::posterior::SamplerConfig {
        let mut s = self.cfg.sampler.clone();
        s.seed = seed;
        s.raw_exponent = self.cfg.a * self.cfg.p;
        s
    }

    /// Posterior given a statistic value `b` for `n` observations.
    fn posterior_at_stat(&self, b: &[f64], n: usize, seed: u64) -> Result<PosteriorEstimate> {
        if let Some((model, prior)) = &self.exact {
            let post = linreg_stat_posterior(b, n, prior, model)?;
            return post.to_estimate(&self.theta0, self.cfg.p, self.cfg.a * self.cfg.p);
        }
        let kernel = PosteriorKernelSpec::new(self.family, self.prior, n, b.to_vec())?;
        let problem = PosteriorProblem::from_kernel(&kernel);
        posterior_estimate(&problem, self.cfg.p, &self.theta0, &self.sampler_seeded(seed))
    }

    /// Posterior from raw observations; the general path uses the full
    /// likelihood rather than the statistic.
    fn posterior_from_samples(&self, xs: &[F::Sample], b: &[f64], seed: u64) -> Result<PosteriorEstimate> {
        match self.cfg.path {
            BoundPath::General { .. } if self.exact.is_none() => {
                let problem = PosteriorProblem::from_data(self.family, self.prior, xs);
                posterior_estimate(&problem, self.cfg.p, &self.theta0, &self.sampler_seeded(seed))
            }
            _ => self.posterior_at_stat(b, xs.len(), seed),
        }
    }

    fn gc_distance(&self, xs: &[F::Sample], dev: f64) -> Result<f64> {
        match &self.mu0 {
            Some(mu0) => {
                let reals: Vec<f64> = xs.iter().map(|x| self.family.as_real(x).expect("real-valued samples")).collect();
                let e = EmpiricalMeasure::new(reals)?;
                wasserstein_1d(&e, mu0, 2.0)
            }
            None => Ok(dev),
        }
    }

    fn cell(&self, n: usize, r: usize) -> Result<Cell> {
        let seed = derive_seed(self.cfg.seed, &[n as u64, r as u64]);
        let xs = self.family.sample(&self.theta0, n, seed)?;
        let s = suff_stat_mean(&xs, self.family)?;
        let est = self.posterior_from_samples(&xs, &s.value, derive_seed(seed, &[STREAM_POSTERIOR]))?;
        let dev = distance(&s.value, &self.s0);
        let second = est.cov.trace() + est.mean.iter().map(|m| m * m).sum::<f64>();
        Ok(Cell {
            n,
            replication: r,
            seed,
            eps: est.wasserstein_to_point(),
            stat_dev: dev,
            gc: self.gc_distance(&xs, dev)?,
            raw_moment: est.raw_moment,
            second_moment: second,
            nonconvergent: est.diagnostics.flags.contains(&Flag::NonConvergence),
            term4: 0.0,
            bound_total: 0.0,
        })
    }

    /// Lipschitz factor `L₀⁽ⁿ⁾`.
    fn lipschitz(&self, n: usize, delta_n: f64) -> Result<f64> {
        let nf = n as f64;
        match &self.lipschitz {
            LipschitzMode::Spectral { spec, consts } => {
                let c2 = infinite_bound(nf, spec, consts)?;
                let dg = natural_jacobian_norm(self.family, &self.theta0)?;
                l0n_estimate(nf, c2, dg * dg)
            }
            LipschitzMode::PosteriorCovariance => {
                let mut points = vec![self.s0.clone()];
                let d = self.s0.len();
                let radius = if delta_n.is_finite() { delta_n } else { 0.0 };
                if radius > 0.0 {
                    if 2 * d <= PERTURBATIONS {
                        for k in 0..d {
                            for sign in [1.0, -1.0] {
                                let mut b = self.s0.clone();
                                b[k] += sign * radius;
                                points.push(b);
                            }
                        }
                    } else {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, &[n as u64, STREAM_PERTURB]));
                        for _ in 0..PERTURBATIONS {
                            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                            let zn = norm(&z);
                            points.push(self.s0.iter().zip(&z).map(|(s, v)| s + radius * v / zn).collect());
                        }
                    }
                }
                let mut best = 0.0f64;
                for (i, b) in points.iter().enumerate() {
                    let seed = derive_seed(self.cfg.seed, &[n as u64, STREAM_PERTURB, i as u64]);
                    // Perturbed statistics may leave the mean space; those are skipped.
                    let est = match self.posterior_at_stat(b, n, seed) {
                        Ok(e) => e,
                        Err(_) if i > 0 => continue,
                        Err(e) => return Err(e),
                    };
                    let dg = natural_jacobian_norm(self.family, &est.mean)?;
                    best = best.max(l0n_estimate(nf, est.cov_max_eigenvalue(), dg * dg)?);
                }
                Ok(best)
            }
        }
    }

    fn level(&self, n: usize, delta_scale: &mut Option<f64>) -> Result<LevelResult> {
        let mut cells = self.cells(n)?;
        let devs: Vec<f64> = cells.iter().map(|c| c.stat_dev).collect();
        let tail = self.tail_devs(n, &devs)?;
        let q = self.cfg.delta.q;
        let scale = *delta_scale.get_or_insert_with(|| median(&tail) * (n as f64).powf(q));
        let delta_n = scale * (n as f64).powf(-q);
        let jn = fraction_at_least(&tail, delta_n);
        let shrinkage_est = self.posterior_at_stat(&self.s0, n, derive_seed(self.cfg.seed, &[n as u64, STREAM_SHRINKAGE]))?;
        let shrinkage = shrinkage_est.wasserstein_to_point();
        let l0n = self.lipschitz(n, delta_n)?;
        let reps = cells.len() as f64;
        let mean_dev = devs.iter().sum::<f64>() / reps;
        let gc_mean = cells.iter().map(|c| c.gc).sum::<f64>() / reps;
        let norm_theta0 = norm(&self.theta0);
        let (terms, per_cell_dev): (_, Vec<f64>) = match self.cfg.path {
            BoundPath::ExponentialFamily => {
                let raw = cells.iter().map(|c| c.raw_moment).sum::<f64>() / reps;
                let t = assemble_pcr_bound(&BoundComponents {
                    shrinkage,
                    l0n,
                    mean_stat_dev: mean_dev,
                    tail_prob: jn,
                    posterior_moment_ap: raw,
                    a: self.cfg.a,
                    p: self.cfg.p,
                    norm_theta0,
                })?;
                (t, devs.clone())
            }
            BoundPath::General { radius, exponent } => {
                let r_n = radius * (n as f64).powf(-exponent);
                let outside: Vec<bool> = cells.iter().map(|c| c.gc > r_n).collect();
                let outside_prob = outside.iter().filter(|o| **o).count() as f64 / reps;
                let outside_moment = cells
                    .iter()
                    .zip(&outside)
                    .map(|(c, o)| if *o { (2.0 * c.second_moment).sqrt() } else { 0.0 })
                    .sum::<f64>()
                    / reps;
                let t = assemble_general_bound(&GeneralBoundComponents {
                    shrinkage,
                    l0n,
                    gc_rate: gc_mean,
                    outside_prob,
                    outside_moment,
                    norm_theta0,
                })?;
                (t, cells.iter().map(|c| c.gc).collect())
            }
        };
        for (c, d) in cells.iter_mut().zip(&per_cell_dev) {
            c.term4 = l0n * d;
            c.bound_total = terms.term1_shrinkage + terms.term2_tail_scaled + terms.term3_posterior_tail + c.term4;
        }
        let eps: Vec<f64> = cells.iter().map(|c| c.eps).collect();
        let (eps_hat, eps_se) = mean_se(&eps);
        let flagged_fraction = cells.iter().filter(|c| c.nonconvergent).count() as f64 / reps;
        let dominance_fraction = cells.iter().filter(|c| c.eps <= c.bound_total).count() as f64 / reps;
        Ok(LevelResult {
            n,
            delta_n,
            eps_hat,
            eps_se,
            jn,
            gc_mean,
            mean_stat_dev: mean_dev,
            shrinkage,
            l0n,
            terms: TermSummary {
                term1: terms.term1_shrinkage,
                term2: terms.term2_tail_scaled,
                term3: terms.term3_posterior_tail,
                term4: terms.term4_lipschitz,
                total: terms.total,
            },
            flagged_fraction,
            dominance_fraction,
            cells,
        })
    }
}

impl<F: ExponentialFamily> Runner for Ctx<'_, F> {
    fn cells(&self, n: usize) -> Result<Vec<Cell>> {
        (0..self.cfg.replications).into_par_iter().map(|r| self.cell(n, r)).collect()
    }

    /// Statistic deviations for the tail estimate; `known` holds those of
    /// the first replications, which share seeds with the posterior cells.
    fn tail_devs(&self, n: usize, known: &[f64]) -> Result<Vec<f64>> {
        let total = self.cfg.tail_replications.max(self.cfg.replications);
        let extra: Vec<f64> = (known.len()..total)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(self.cfg.seed, &[n as u64, r as u64]);
                let xs = self.family.sample(&self.theta0, n, seed)?;
                let s = suff_stat_mean(&xs, self.family)?;
                Ok(distance(&s.value, &self.s0))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(known.iter().copied().chain(extra).collect())
    }

    fn run(&self) -> Result<PcrRunResult> {
        let mut delta_scale = self.cfg.delta.scale;
        let mut levels = Vec::with_capacity(self.cfg.n_ladder.len());
        let mut run_failure = None;
        for &n in &self.cfg.n_ladder {
            let level = self.level(n, &mut delta_scale)?;
            if level.flagged_fraction > MAX_FLAGGED_FRACTION && run_failure.is_none() {
                run_failure = Some(format!(
                    "{:.0}% of replications non-convergent at n = {n}",
                    100.0 * level.flagged_fraction
                ));
            }
            levels.push(level);
        }
        let fit = |key: fn(&Cell) -> f64, tag: u64| -> Option<RateFit> {
            if levels.len() < 4 {
                return None;
            }
            let pts: Vec<(f64, f64)> = levels.iter().flat_map(|l| l.cells.iter().map(|c| (c.n as f64, key(c)))).collect();
            fit_rate(&pts, self.cfg.bootstrap, derive_seed(self.cfg.seed, &[tag])).ok()
        };
        let eps_fit = fit(|c| c.eps, 0xE95);
        let bound_fit = fit(|c| c.bound_total, 0xB0D);
        Ok(PcrRunResult { config: self.cfg.clone(), levels, eps_fit, bound_fit, run_failure })
    }
}
