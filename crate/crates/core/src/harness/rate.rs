//! Log–log rate fits with a replication-level bootstrap.

use crate::error::{PcrError, Result};
use crate::laplace::ols;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Default bootstrap resample count.
pub const DEFAULT_BOOTSTRAP: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 90% percentile interval, widened if needed to contain `slope`.
    pub bootstrap_ci90: (f64, f64),
    /// `(log n, log ε̂_n)` pairs used by the fit.
    pub points: Vec<(f64, f64)>,
}

fn fit_means(groups: &[(f64, Vec<f64>)]) -> (f64, f64, f64) {
    let x: Vec<f64> = groups.iter().map(|(n, _)| n.ln()).collect();
    let y: Vec<f64> = groups.iter().map(|(_, v)| (v.iter().sum::<f64>() / v.len() as f64).ln()).collect();
    let (slope, intercept) = ols(&x, &y);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

/// OLS of `log ε` on `log n`. Points sharing an `n` are replications: the
/// fit uses their mean and the bootstrap resamples them within each `n`.
/// With one point per `n` the bootstrap resamples residuals instead.
pub fn fit_rate(points: &[(f64, f64)], bootstrap: usize, seed: u64) -> Result<RateFit> {
    if points.iter().any(|(n, e)| !(*n > 0.0) || !(*e > 0.0) || !e.is_finite()) {
        return Err(PcrError::InvalidInput("rate fit needs positive n and positive finite eps".into()));
    }
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for &(n, e) in points {
        match groups.iter_mut().find(|(m, _)| *m == n) {
            Some((_, v)) => v.push(e),
            None => groups.push((n, vec![e])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    if groups.len() < 4 {
        return Err(PcrError::InvalidInput(format!("rate fit needs at least 4 ladder points, got {}", groups.len())));
    }
    let (slope, intercept, r_squared) = fit_means(&groups);
    let fitted_points: Vec<(f64, f64)> = groups
        .iter()
        .map(|(n, v)| (n.ln(), (v.iter().sum::<f64>() / v.len() as f64).ln()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let replicated = groups.iter().any(|(_, v)| v.len() > 1);
    let mut slopes = Vec::with_capacity(bootstrap);
    for _ in 0..bootstrap {
        let resampled: Vec<(f64, Vec<f64>)> = if replicated {
            groups
                .iter()
                .map(|(n, v)| (*n, (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect()))
                .collect()
        } else {
            let residuals: Vec<f64> =
                fitted_points.iter().map(|(x, y)| y - intercept - slope * x).collect();
            fitted_points
                .iter()
                .map(|(x, _)| {
                    let r = residuals[rng.random_range(0..residuals.len())];
                    (x.exp(), vec![(intercept + slope * x + r).exp()])
                })
                .collect()
        };
        slopes.push(fit_means(&resampled).0);
    }
    let ci = if slopes.is_empty() {
        (slope, slope)
    } else {
        slopes.sort_by(f64::total_cmp);
        let q = |f: f64| slopes[((f * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
        (q(0.05).min(slope), q(0.95).max(slope))
    };
    Ok(RateFit { slope, intercept, r_squared, bootstrap_ci90: ci, points: fitted_points })
}
