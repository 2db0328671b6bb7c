use approx::assert_relative_eq;
use pcrlab::expfam::{
    kl_divergence, kl_divergence_quadrature, kl_representation_residual, log_posterior_unnorm,
    representation_residual_with, s_zero, suff_stat_mean, ExponentialFamily, PosteriorKernelSpec,
};
use pcrlab::models::{
    h1star_basis, GaussianPrior, LinRegModel, LogisticModel, MultinomialModel, Prior, SampleSpace, StatModel,
};
use pcrlab::quad::GaussLegendre;
use pcrlab::Result;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unit-variance Gaussian location family: `β_x = x`, `g(θ) = θ`, `M(θ) = θ²/2`.
struct GaussianLocation;

impl StatModel for GaussianLocation {
    type Sample = f64;
    fn dim(&self) -> usize {
        1
    }
    fn sample_space(&self) -> SampleSpace {
        SampleSpace::Interval(-40.0, 40.0)
    }
    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 1
    }
    fn log_density(&self, x: &f64, theta: &[f64]) -> Result<f64> {
        Ok(-0.5 * (x - theta[0]).powi(2) - 0.5 * (2.0 * std::f64::consts::PI).ln())
    }
    fn sample(&self, _theta0: &[f64], _n: usize, _seed: u64) -> Result<Vec<f64>> {
        unimplemented!("not sampled in these tests")
    }
}

impl ExponentialFamily for GaussianLocation {
    fn stat_dim(&self) -> usize {
        1
    }
    fn beta(&self, x: &f64) -> Vec<f64> {
        vec![*x]
    }
    fn natural(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(theta.to_vec())
    }
    fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        Ok(0.5 * theta[0] * theta[0])
    }
}

#[test]
fn suff_stat_examples() {
    let fin1 = LogisticModel::finite(1).unwrap();
    assert_relative_eq!(suff_stat_mean(&[0.5], &fin1).unwrap().value[0], 1.0, epsilon = 1e-15);
    assert_eq!(suff_stat_mean(&[1.25], &GaussianLocation).unwrap().value, vec![1.25]);

    // Coefficients of β_1 against ∫ e_k′ = e_k(1).
    let inf = LogisticModel::infinite(8).unwrap();
    let s = suff_stat_mean(&[1.0], &inf).unwrap();
    let rule = GaussLegendre::standard();
    for (k, v) in s.value.iter().enumerate() {
        let quad = rule.integrate(|z| pcrlab::models::logistic::h1star_basis_derivative(k + 1, z));
        assert_relative_eq!(*v, quad, epsilon = 1e-12);
        assert_relative_eq!(*v, h1star_basis(k + 1, 1.0), epsilon = 1e-15);
    }
    assert!(suff_stat_mean::<GaussianLocation>(&[], &GaussianLocation).is_err());
}

#[test]
fn suff_stat_is_linear_under_concatenation() {
    let m = LogisticModel::finite(3).unwrap();
    let a = m.sample(&[0.4, -0.2, 0.1], 37, 1).unwrap();
    let b = m.sample(&[0.4, -0.2, 0.1], 63, 2).unwrap();
    let both: Vec<f64> = a.iter().chain(&b).copied().collect();
    let (sa, sb, sab) =
        (suff_stat_mean(&a, &m).unwrap(), suff_stat_mean(&b, &m).unwrap(), suff_stat_mean(&both, &m).unwrap());
    for i in 0..3 {
        assert_relative_eq!(sab.value[i], (37.0 * sa.value[i] + 63.0 * sb.value[i]) / 100.0, epsilon = 1e-14);
    }
}

#[test]
fn s_zero_examples() {
    let fin1 = LogisticModel::finite(1).unwrap();
    assert_relative_eq!(s_zero(&fin1, &[0.0]).unwrap().value[0], 2.0 / std::f64::consts::PI, epsilon = 1e-10);
    let mult = MultinomialModel::new(4).unwrap();
    assert_eq!(s_zero(&mult, &[0.1, 0.2, 0.3]).unwrap().value, vec![0.1, 0.2, 0.3]);
}

#[test]
fn s_zero_is_mean_of_statistic() {
    let m = LogisticModel::finite(2).unwrap();
    let theta0 = [1.0, -0.5];
    let s0 = s_zero(&m, &theta0).unwrap().value;
    let reps = 10_000;
    let stats: Vec<Vec<f64>> =
        (0..reps).map(|r| suff_stat_mean(&m.sample(&theta0, 20, r).unwrap(), &m).unwrap().value).collect();
    for i in 0..2 {
        let mean = stats.iter().map(|s| s[i]).sum::<f64>() / reps as f64;
        let var = stats.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean - s0[i]).abs() < 4.0 * se, "coordinate {i}: {mean} vs {}", s0[i]);
    }
}

#[test]
fn kernel_examples() {
    let m = LogisticModel::finite(1).unwrap();
    let prior = GaussianPrior::standard(1).unwrap();
    let k0 = PosteriorKernelSpec::new(&m, &prior, 0, vec![0.3]).unwrap();
    assert_eq!(log_posterior_unnorm(&[0.7], &k0).unwrap(), prior.log_density(&[0.7]));
    let k = PosteriorKernelSpec::new(&m, &prior, 50, vec![0.3]).unwrap();
    assert_relative_eq!(log_posterior_unnorm(&[0.0], &k).unwrap(), prior.log_density(&[0.0]), epsilon = 1e-11);
}

#[test]
fn conjugate_gaussian_kernel_matches_closed_form() {
    let prior = GaussianPrior::standard(1).unwrap();
    let (n, b) = (25usize, 0.8);
    let kernel = PosteriorKernelSpec::new(&GaussianLocation, &prior, n, vec![b]).unwrap();
    let prec = n as f64 + 1.0;
    let mean = n as f64 * b / prec;
    let closed = |t: f64| -0.5 * prec * (t - mean).powi(2);
    let offset = log_posterior_unnorm(&[mean], &kernel).unwrap() - closed(mean);
    for i in 0..=200 {
        let t = mean - 1.0 + i as f64 / 100.0;
        let diff = log_posterior_unnorm(&[t], &kernel).unwrap() - closed(t) - offset;
        assert!(diff.abs() < 1e-10, "t = {t}: {diff}");
    }
}

#[test]
fn kl_examples() {
    let mult = MultinomialModel::new(2).unwrap();
    assert_eq!(kl_divergence(&[0.4], &[0.4], &mult).unwrap(), 0.0);
    assert_relative_eq!(kl_divergence(&[0.25], &[0.5], &mult).unwrap(), 0.14384, epsilon = 5e-6);
    let lin = LinRegModel::uniform(1.0, 1).unwrap();
    let c = 0.6;
    assert_relative_eq!(kl_divergence(&[0.2 + c], &[0.2], &lin).unwrap(), c * c / 2.0, epsilon = 1e-12);
    assert!(kl_divergence(&[1.2], &[0.5], &mult).is_err());
}

#[test]
fn analytic_kl_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 1..=3 {
        let m = LogisticModel::finite(k).unwrap();
        for _ in 0..5 {
            let t: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let t0: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = kl_divergence(&t, &t0, &m).unwrap();
            let q = kl_divergence_quadrature(&t, &t0, &m).unwrap();
            assert!((a - q).abs() < 1e-7, "k = {k}: {a} vs {q}");
        }
    }
}

#[test]
fn representation_residual_examples() {
    let m = LogisticModel::finite(2).unwrap();
    let prior = GaussianPrior::standard(2).unwrap();
    let theta_b = [0.0, 0.0];
    let b = s_zero(&m, &theta_b).unwrap().value;
    let kernel = PosteriorKernelSpec::new(&m, &prior, 10, b).unwrap();
    assert_eq!(kl_representation_residual(&theta_b, &kernel, &theta_b).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let t = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let r = representation_residual_with(&t, &kernel, &theta_b, |a, b| kl_divergence_quadrature(a, b, &m)).unwrap();
        assert!(r.abs() < 1e-9, "residual {r}");
    }
}

proptest! {
    #[test]
    fn kl_is_nonnegative_and_identifies(t in 0.02f64..0.48, s in 0.02f64..0.48, u in 0.02f64..0.48, v in 0.02f64..0.48) {
        let mult = MultinomialModel::new(3).unwrap();
        let k = kl_divergence(&[t, s], &[u, v], &mult).unwrap();
        prop_assert!(k >= 0.0);
        if (t - u).abs() + (s - v).abs() > 1e-3 {
            prop_assert!(k > 1e-9);
        }
        prop_assert!(kl_divergence(&[u, v], &[u, v], &mult).unwrap() < 1e-9);
    }

    #[test]
    fn logistic_kl_nonnegative(t in prop::array::uniform2(-3.0f64..3.0), t0 in prop::array::uniform2(-3.0f64..3.0)) {
        let m = LogisticModel::finite(2).unwrap();
        let k = kl_divergence(&t, &t0, &m).unwrap();
        prop_assert!(k >= 0.0);
        prop_assert!(kl_divergence(&t0, &t0, &m).unwrap() < 1e-9);
    }
}
