mod common;

use approx::assert_relative_eq;
use common::linreg_conjugate_oracle;
use pcrlab::harness::{
    fit_rate, empirical_rate_envelope, gc_distance, gc_rate, write_replications_csv, write_summary_csv, BoundPath,
    Experiment, ExperimentConfig, REPLICATION_HEADER, SUMMARY_HEADER,
};
use pcrlab::measure::QuantileMeasure;
use pcrlab::posterior::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

fn config(value: serde_json::Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&value.to_string()).unwrap()
}

fn multinomial(ladder: &[usize], replications: usize, seed: u64) -> ExperimentConfig {
    config(json!({
        "model": { "kind": "multinomial", "categories": 3 },
        "prior": { "kind": "dirichlet", "alpha": 2.0 },
        "theta0": [0.5, 0.3],
        "n_ladder": ladder,
        "replications": replications,
        "delta": { "q": 0.0 },
        "seed": seed
    }))
}

#[test]
fn point_mass_prior_gives_zero_eps() {
    let cfg = config(json!({
        "model": { "kind": "multinomial", "categories": 3 },
        "prior": { "kind": "point_mass", "at": [0.5, 0.3] },
        "theta0": [0.5, 0.3],
        "n_ladder": [10, 100],
        "replications": 20
    }));
    let exp = Experiment::new(cfg).unwrap();
    for n in [10, 100] {
        assert_eq!(exp.estimate_epsilon_n(n).unwrap(), (0.0, 0.0));
    }
}

#[test]
fn linreg_eps_matches_conjugate_oracle() {
    let cfg = config(json!({
        "model": { "kind": "linear_regression", "modes": 8, "sigma": 0.5 },
        "prior": { "kind": "power_law", "scale": 1.0, "a": 1.0 },
        "theta0": { "scale": 1.0, "exponent": 1.5 },
        "n_ladder": [100, 1000],
        "replications": 400,
        "delta": { "q": 0.0 },
        "seed": 5
    }));
    let theta0 = cfg.theta0().unwrap();
    let lambda: Vec<f64> = (1..=8).map(|k| (k as f64).powi(-2)).collect();
    let exp = Experiment::new(cfg).unwrap();
    for n in [100, 1000] {
        let (eps, se) = exp.estimate_epsilon_n(n).unwrap();
        let (oracle, oracle_se) = linreg_conjugate_oracle(n, &lambda, &theta0, 0.25, 4000);
        let combined = (se * se + oracle_se * oracle_se).sqrt();
        assert!((eps - oracle).abs() <= 3.0 * combined, "n = {n}: {eps} ± {se} vs {oracle} ± {oracle_se}");
    }
}

#[test]
fn tail_probability_limits() {
    let exp = Experiment::new(multinomial(&[50], 20, 3)).unwrap();
    assert_eq!(exp.tail_probability(50, 0.0).unwrap(), 1.0);
    assert_eq!(exp.tail_probability(50, f64::INFINITY).unwrap(), 0.0);
}

#[test]
fn tail_probability_obeys_hoeffding() {
    // β_x = sin(πx) takes values in [−1, 1].
    let cfg = config(json!({
        "model": { "kind": "finite_logistic", "basis_size": 1 },
        "prior": { "kind": "standard_gaussian" },
        "theta0": [0.7],
        "n_ladder": [50, 100, 200, 400],
        "replications": 20,
        "tail_replications": 2000,
        "seed": 8
    }));
    let exp = Experiment::new(cfg).unwrap();
    for n in [50usize, 100, 200, 400] {
        let prob = exp.tail_probability(n, 0.1).unwrap();
        let hoeffding = 2.0 * (-2.0 * n as f64 * 0.01 / 4.0).exp();
        assert!(prob <= hoeffding, "n = {n}: {prob} > {hoeffding}");
    }
}

/// Simpson's rule on `[0, 1]`.
fn simpson(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    let inner: f64 = (1..intervals).map(|i| f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(0.0) + f(1.0) + inner) * h / 3.0
}

#[test]
fn single_sample_gc_distance() {
    // W_2(δ_x, U[0, 1])² = x² − x + 1/3.
    let mu0 = QuantileMeasure::uniform(0.0, 1.0).unwrap();
    assert!(gc_distance(&mu0, 1, 2.0, 0).unwrap().powi(2) >= 1.0 / 12.0 - 1e-12);
    let oracle = simpson(|x| (x * x - x + 1.0 / 3.0).sqrt(), 2000);
    let reps = 20_000u64;
    let d: Vec<f64> = (0..reps).map(|r| gc_distance(&mu0, 1, 2.0, derive_seed(4, &[r])).unwrap()).collect();
    let mean = d.iter().sum::<f64>() / reps as f64;
    let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    assert!((mean - oracle).abs() < 4.0 * sd / (reps as f64).sqrt(), "{mean} vs {oracle}");
}

#[test]
fn gc_rate_within_envelope() {
    let mu0 = QuantileMeasure::uniform(0.0, 1.0).unwrap();
    let ladder = [100, 316, 1000, 3162, 10_000];
    let result = gc_rate(&mu0, &ladder, 200, 2.0, 7).unwrap();
    assert!((result.fit.slope + 0.5).abs() < 0.05, "slope {}", result.fit.slope);
    // Uniform law: q = 8, E|X|^8 = 1/9.
    let ratios: Vec<f64> = result
        .levels
        .iter()
        .map(|l| l.mean / empirical_rate_envelope(l.n as f64, 1, 8.0, 1.0 / 9.0).unwrap())
        .collect();
    let constant = ratios[0];
    assert!(ratios.iter().all(|r| *r <= 1.05 * constant), "{ratios:?}");
}

#[test]
fn rate_fit_examples() {
    let ns: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];
    let exact: Vec<(f64, f64)> = ns.iter().map(|n| (*n, 3.0 * n.powf(-0.5))).collect();
    let fit = fit_rate(&exact, 200, 1).unwrap();
    assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-12);
    assert_relative_eq!(fit.intercept, 3.0f64.ln(), epsilon = 1e-10);
    assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    assert!(fit.bootstrap_ci90.0 <= fit.slope && fit.slope <= fit.bootstrap_ci90.1);

    let flat: Vec<(f64, f64)> = ns.iter().map(|n| (*n, 0.4)).collect();
    assert!(fit_rate(&flat, 50, 1).unwrap().slope.abs() < 1e-12);

    assert!(fit_rate(&exact[..3], 50, 1).is_err());
    assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)], 50, 1).is_err());
}

#[test]
fn rate_fit_recovers_noisy_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let ns: Vec<f64> = (0..11).map(|i| 10f64.powf(1.0 + 0.5 * i as f64)).collect();
    let points: Vec<(f64, f64)> = ns
        .iter()
        .flat_map(|n| (0..20).map(move |_| *n))
        .map(|n| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (n, 2.0 * n.powf(-0.5) * (0.1 * z).exp())
        })
        .collect();
    let fit = fit_rate(&points, 500, 2).unwrap();
    assert!((fit.slope + 0.5).abs() < 0.03, "slope {}", fit.slope);
    assert!(fit.bootstrap_ci90.0 < -0.5 && -0.5 < fit.bootstrap_ci90.1, "{:?}", fit.bootstrap_ci90);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = json!({
        "model": { "kind": "multinomial", "categories": 3 },
        "prior": { "kind": "dirichlet" },
        "theta0": [0.5, 0.3],
        "n_ladder": [10, 100]
    });
    assert!(ExperimentConfig::from_json(&base.to_string()).is_ok());
    let with = |key: &str, value: serde_json::Value| {
        let mut v = base.clone();
        v[key] = value;
        ExperimentConfig::from_json(&v.to_string())
    };
    assert!(with("surplus", json!(1)).is_err());
    assert!(with("replications", json!(10)).is_err());
    assert!(with("n_ladder", json!([100, 10])).is_err());
    assert!(with("theta0", json!([0.5])).is_err());
    assert!(with("delta", json!({ "q": 0.5 })).is_err());
    assert!(with("a", json!(1.0)).is_err());
    assert!(with("model", json!({ "kind": "multinomial", "categories": 3, "extra": true })).is_err());
}

#[test]
fn runs_are_reproducible_to_the_byte() {
    let cfg = multinomial(&[20, 40, 80, 160], 20, 21);
    let render = || {
        let result = Experiment::new(cfg.clone()).unwrap().run().unwrap();
        let (mut reps, mut summary) = (Vec::new(), Vec::new());
        write_replications_csv(&result, &mut reps).unwrap();
        write_summary_csv(&result, &mut summary).unwrap();
        (String::from_utf8(reps).unwrap(), String::from_utf8(summary).unwrap(), result)
    };
    let (reps_a, summary_a, result) = render();
    let (reps_b, summary_b, _) = render();
    assert_eq!(reps_a, reps_b);
    assert_eq!(summary_a, summary_b);
    assert_eq!(reps_a.lines().next().unwrap(), REPLICATION_HEADER.join(","));
    assert_eq!(summary_a.lines().next().unwrap(), SUMMARY_HEADER.join(","));
    assert_eq!(reps_a.lines().count(), 1 + 4 * 20);
    assert_eq!(summary_a.lines().count(), 1 + 4);
    assert!(result.run_failure.is_none());
    let mut seeds = result.seeds();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 80);
}

#[test]
fn bound_paths_share_the_posterior() {
    let family = multinomial(&[20, 40, 80, 160], 20, 30);
    let general = ExperimentConfig { path: BoundPath::General { radius: 1.0, exponent: 0.125 }, ..family.clone() };
    let a = Experiment::new(family).unwrap().run().unwrap();
    let b = Experiment::new(general).unwrap().run().unwrap();
    for (la, lb) in a.levels.iter().zip(&b.levels) {
        assert_relative_eq!(la.eps_hat, lb.eps_hat, max_relative = 1e-6);
    }
}
