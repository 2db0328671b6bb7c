use approx::assert_relative_eq;
use pcrlab::expfam::{suff_stat_mean, PosteriorKernelSpec};
use pcrlab::models::{
    linreg_suff_posterior, DirichletShapePrior, GaussianPrior, LinRegModel, LogisticModel, MultinomialModel,
    StatModel,
};
use pcrlab::posterior::{
    importance_ess, posterior_estimate, posterior_grid, posterior_importance, posterior_mcmc, Method,
    PosteriorEstimate, PosteriorProblem, SamplerConfig,
};

fn cfg(method: Method, seed: u64) -> SamplerConfig {
    SamplerConfig { seed, ..SamplerConfig::with_method(method) }
}

/// Unit-variance Gaussian location likelihood with `n` observations of mean `b`.
fn location_problem(prior: &GaussianPrior, n: f64, b: f64) -> PosteriorProblem<'_> {
    PosteriorProblem::new(prior, move |t: &[f64]| Ok(-0.5 * n * (t[0] - b).powi(2)))
}

/// Closed-form `(mean, variance)` under a `N(m, v)` prior.
fn location_posterior(m: f64, v: f64, n: f64, b: f64) -> (f64, f64) {
    let prec = 1.0 / v + n;
    ((m / v + n * b) / prec, 1.0 / prec)
}

/// Logistic likelihoods go through the sufficient statistic, so the log
/// partition is evaluated once per `θ` rather than once per observation.
fn logistic_kernel<'a>(model: &'a LogisticModel, prior: &'a GaussianPrior, data: &[f64]) -> PosteriorKernelSpec<'a, LogisticModel> {
    let stat = suff_stat_mean(data, model).unwrap();
    PosteriorKernelSpec::new(model, prior, stat.n, stat.value).unwrap()
}

fn within(a: f64, b: f64, se: f64, k: f64) -> bool {
    (a - b).abs() <= k * se
}

#[test]
fn grid_without_data_returns_prior_moments() {
    let prior = GaussianPrior::new(vec![0.2], vec![0.5]).unwrap();
    let problem = PosteriorProblem::new(&prior, |_: &[f64]| Ok(0.0));
    let est = posterior_grid(&problem, 2.0, &[1.0], &cfg(Method::Grid, 0)).unwrap();
    assert_relative_eq!(est.mean[0], 0.2, epsilon = 1e-8);
    assert_relative_eq!(est.central_moment, 0.5 + 0.64, max_relative = 1e-6);
}

#[test]
fn grid_matches_conjugate_gaussian() {
    let prior = GaussianPrior::new(vec![0.0], vec![2.0]).unwrap();
    let (n, b) = (40.0, 0.7);
    let (mean, var) = location_posterior(0.0, 2.0, n, b);
    let theta0 = [0.5];
    let est = posterior_grid(&location_problem(&prior, n, b), 2.0, &theta0, &cfg(Method::Grid, 0)).unwrap();
    assert_relative_eq!(est.mean[0], mean, max_relative = 1e-6);
    assert_relative_eq!(est.central_moment, var + (mean - 0.5).powi(2), max_relative = 1e-6);
}

#[test]
fn grid_matches_beta_moments() {
    let model = MultinomialModel::new(2).unwrap();
    let prior = DirichletShapePrior::new(2, 2.0).unwrap();
    let data: Vec<usize> = [vec![0; 7], vec![1; 3]].concat();
    let problem = PosteriorProblem::from_data(&model, &prior, &data);
    let theta0 = [0.6];
    let est = posterior_grid(&problem, 2.0, &theta0, &cfg(Method::Grid, 0)).unwrap();
    let (a, b) = (9.0f64, 5.0f64);
    let mean = a / (a + b);
    let var = a * b / ((a + b).powi(2) * (a + b + 1.0));
    assert_relative_eq!(est.mean[0], mean, max_relative = 1e-8);
    assert_relative_eq!(est.central_moment, var + (mean - 0.6f64).powi(2), max_relative = 1e-8);
}

#[test]
fn importance_without_data_is_prior_monte_carlo() {
    let prior = GaussianPrior::new(vec![0.2, -0.1], vec![0.5, 0.25]).unwrap();
    let problem = PosteriorProblem::new(&prior, |_: &[f64]| Ok(0.0));
    let est = posterior_importance(&problem, 2.0, &[0.0, 0.0], &cfg(Method::Importance, 3)).unwrap();
    assert_relative_eq!(est.diagnostics.ess.unwrap(), 20_000.0, max_relative = 1e-9);
    assert!(within(est.mean[0], 0.2, est.mean_se[0], 4.0));
    assert!(within(est.central_moment, 0.75 + 0.05, est.central_moment_se, 4.0));
    assert_eq!(importance_ess(&[1.0, 1.0, 1.0, 1.0]), 4.0);
}

#[test]
fn importance_agrees_with_grid() {
    let prior = GaussianPrior::standard(1).unwrap();
    let problem = location_problem(&prior, 5.0, 0.4);
    let theta0 = [0.0];
    let g = posterior_grid(&problem, 2.0, &theta0, &cfg(Method::Grid, 0)).unwrap();
    let i = posterior_importance(&problem, 2.0, &theta0, &cfg(Method::Importance, 11)).unwrap();
    assert!(within(i.mean[0], g.mean[0], i.mean_se[0], 3.0));
    assert!(within(i.central_moment, g.central_moment, i.central_moment_se, 3.0));
}

#[test]
fn importance_ess_falls_with_n() {
    let model = LogisticModel::finite(2).unwrap();
    let prior = GaussianPrior::standard(2).unwrap();
    let theta0 = [1.0, -0.5];
    let median_ess = |n: usize| {
        let mut ess: Vec<f64> = (0..20)
            .map(|s| {
                let data = model.sample(&theta0, n, 100 + s).unwrap();
                let kernel = logistic_kernel(&model, &prior, &data);
                let problem = PosteriorProblem::from_kernel(&kernel);
                let c = SamplerConfig { draws: 4000, ..cfg(Method::Importance, s) };
                posterior_importance(&problem, 2.0, &theta0, &c).unwrap().diagnostics.ess.unwrap()
            })
            .collect();
        ess.sort_by(f64::total_cmp);
        (ess[9] + ess[10]) / 2.0
    };
    let ladder: Vec<f64> = [10, 100, 1000].iter().map(|n| median_ess(*n)).collect();
    assert!(ladder.windows(2).all(|w| w[1] < w[0]), "{ladder:?}");
}

#[test]
fn mcmc_samples_prior_without_data() {
    let prior = GaussianPrior::new(vec![0.5, -0.3, 0.1], vec![1.0, 0.5, 0.2]).unwrap();
    let problem = PosteriorProblem::new(&prior, |_: &[f64]| Ok(0.0));
    let est = posterior_mcmc(&problem, 2.0, &[0.0; 3], &cfg(Method::Mcmc, 9)).unwrap();
    for (k, m) in [0.5, -0.3, 0.1].iter().enumerate() {
        assert!(within(est.mean[k], *m, est.mean_se[k], 4.0), "coordinate {k}: {} vs {m}", est.mean[k]);
    }
}

#[test]
fn mcmc_matches_conjugate_gaussian() {
    let prior = GaussianPrior::standard(1).unwrap();
    let (n, b) = (30.0, -0.2);
    let (mean, var) = location_posterior(0.0, 1.0, n, b);
    let est = posterior_mcmc(&location_problem(&prior, n, b), 2.0, &[0.0], &cfg(Method::Mcmc, 2)).unwrap();
    assert!(within(est.mean[0], mean, est.mean_se[0], 3.0));
    assert!(within(est.central_moment, var + mean * mean, est.central_moment_se, 3.0));
    assert!(est.diagnostics.rhat.unwrap() < 1.1);
    let acc = est.diagnostics.acceptance.unwrap();
    assert!((0.1..0.5).contains(&acc), "acceptance {acc}");
}

#[test]
fn mcmc_matches_importance_on_infinite_logistic() {
    let model = LogisticModel::infinite(16).unwrap();
    let prior = GaussianPrior::power_law(vec![0.0; 16], 1.0, 15.0).unwrap();
    let theta0: Vec<f64> = (1..=16).map(|k| (k as f64).powf(-8.5)).collect();
    let data = model.sample(&theta0, 10, 4).unwrap();
    let kernel = logistic_kernel(&model, &prior, &data);
    let problem = PosteriorProblem::from_kernel(&kernel);
    let m = posterior_mcmc(&problem, 2.0, &theta0, &cfg(Method::Mcmc, 5)).unwrap();
    let i = posterior_importance(&problem, 2.0, &theta0, &cfg(Method::Importance, 6)).unwrap();
    let se = (m.central_moment_se.powi(2) + i.central_moment_se.powi(2)).sqrt();
    assert!(within(m.central_moment, i.central_moment, se, 4.0), "{} vs {}", m.central_moment, i.central_moment);
    for k in 0..3 {
        let se = (m.mean_se[k].powi(2) + i.mean_se[k].powi(2)).sqrt();
        assert!(within(m.mean[k], i.mean[k], se, 4.0));
    }
}

#[test]
fn methods_agree_on_finite_logistic() {
    let model = LogisticModel::finite(2).unwrap();
    let prior = GaussianPrior::standard(2).unwrap();
    let theta0 = [1.0, -0.5];
    for seed in 0..10u64 {
        let data = model.sample(&theta0, 200, 50 + seed).unwrap();
        let kernel = logistic_kernel(&model, &prior, &data);
        let problem = PosteriorProblem::from_kernel(&kernel);
        let ests: Vec<PosteriorEstimate> = [Method::Grid, Method::Importance, Method::Mcmc]
            .iter()
            .map(|m| posterior_estimate(&problem, 2.0, &theta0, &cfg(*m, seed)).unwrap())
            .collect();
        for x in 0..3 {
            for y in x + 1..3 {
                let (a, c) = (&ests[x], &ests[y]);
                let se = (a.central_moment_se.powi(2) + c.central_moment_se.powi(2)).sqrt();
                assert!(within(a.central_moment, c.central_moment, se, 4.0), "seed {seed}, methods {x}/{y}");
                for k in 0..2 {
                    let se = (a.mean_se[k].powi(2) + c.mean_se[k].powi(2)).sqrt();
                    assert!(within(a.mean[k], c.mean[k], se, 4.0), "seed {seed}, methods {x}/{y}, coordinate {k}");
                }
            }
        }
    }
}

#[test]
fn estimates_are_deterministic() {
    let model = LogisticModel::finite(2).unwrap();
    let prior = GaussianPrior::standard(2).unwrap();
    let data = model.sample(&[0.3, 0.2], 80, 1).unwrap();
    let kernel = logistic_kernel(&model, &prior, &data);
    let problem = PosteriorProblem::from_kernel(&kernel);
    for method in [Method::Grid, Method::Importance, Method::Mcmc] {
        let a = posterior_estimate(&problem, 2.0, &[0.3, 0.2], &cfg(method, 77)).unwrap();
        let b = posterior_estimate(&problem, 2.0, &[0.3, 0.2], &cfg(method, 77)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn mcmc_mean_matches_exact_linreg() {
    let model = LinRegModel::uniform(0.25, 3).unwrap();
    let prior = GaussianPrior::standard(3).unwrap();
    let theta0 = [0.8, -0.4, 0.2];
    let data = model.sample(&theta0, 100, 12).unwrap();
    let exact = linreg_suff_posterior(&data, &prior, &model).unwrap();
    let problem = PosteriorProblem::from_data(&model, &prior, &data);
    let est = posterior_mcmc(&problem, 2.0, &theta0, &cfg(Method::Mcmc, 13)).unwrap();
    for k in 0..3 {
        assert!(within(est.mean[k], exact.mean[k], est.mean_se[k], 3.0), "coordinate {k}");
    }
}

#[test]
fn median_shrinkage_is_monotone() {
    let model = MultinomialModel::new(3).unwrap();
    let prior = DirichletShapePrior::new(3, 2.0).unwrap();
    let theta0 = [0.5, 0.3];
    let medians: Vec<f64> = [10usize, 100, 1000]
        .iter()
        .map(|&n| {
            let mut m: Vec<f64> = (0..50)
                .map(|r| {
                    let data = model.sample(&theta0, n, 7 * n as u64 + r).unwrap();
                    let stat = suff_stat_mean(&data, &model).unwrap();
                    let kernel = PosteriorKernelSpec::new(&model, &prior, stat.n, stat.value).unwrap();
                    let problem = PosteriorProblem::from_kernel(&kernel);
                    posterior_grid(&problem, 2.0, &theta0, &cfg(Method::Grid, 0)).unwrap().central_moment
                })
                .collect();
            m.sort_by(f64::total_cmp);
            (m[24] + m[25]) / 2.0
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(SamplerConfig { grid_nodes: 64, ..SamplerConfig::default() }.validate().is_err());
    assert!(SamplerConfig { draws: 5000, ..SamplerConfig::with_method(Method::Mcmc) }.validate().is_err());
    let prior = GaussianPrior::standard(3).unwrap();
    let problem = PosteriorProblem::new(&prior, |_: &[f64]| Ok(0.0));
    assert!(posterior_grid(&problem, 2.0, &[0.0; 3], &cfg(Method::Grid, 0)).is_err());
}
