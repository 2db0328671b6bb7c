//! Glivenko–Cantelli rates `E[W_p(e_n, μ0)]` for laws on the line.

use super::rate::{fit_rate, RateFit};
use crate::error::{PcrError, Result};
use crate::measure::{wasserstein_1d, EmpiricalMeasure, QuantileMeasure};
use crate::models::prior::open_unit;
use crate::posterior::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcLevel {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcRateResult {
    pub levels: Vec<GcLevel>,
    pub fit: RateFit,
}

/// `W_p(e_n, μ0)` for one seeded sample of size `n`.
pub fn gc_distance(mu0: &QuantileMeasure<f64>, n: usize, p: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| mu0.quantile(open_unit(&mut rng))).collect();
    wasserstein_1d(&EmpiricalMeasure::new(xs)?, mu0, p)
}

/// Monte Carlo `ε_{n,p} = E[W_p(μ0, e_n)]` over the ladder, with a rate fit.
pub fn gc_rate(
    mu0: &QuantileMeasure<f64>,
    n_ladder: &[usize],
    replications: usize,
    p: f64,
    seed: u64,
) -> Result<GcRateResult> {
    if replications < 2 {
        return Err(PcrError::InvalidInput("need at least two replications".into()));
    }
    let mut levels = Vec::with_capacity(n_ladder.len());
    let mut points = Vec::new();
    for &n in n_ladder {
        let d: Vec<f64> = (0..replications)
            .into_par_iter()
            .map(|r| gc_distance(mu0, n, p, derive_seed(seed, &[n as u64, r as u64])))
            .collect::<Result<Vec<f64>>>()?;
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        levels.push(GcLevel { n, mean: m, se: (var / d.len() as f64).sqrt() });
        points.extend(d.into_iter().map(|x| (n as f64, x)));
    }
    let fit = fit_rate(&points, super::rate::DEFAULT_BOOTSTRAP, derive_seed(seed, &[0x6C]))?;
    Ok(GcRateResult { levels, fit })
}

/// Shape of the `W_2` envelope for a law on `R^m` with finite `q`-th moment
/// `moment_q`: `moment_q^{1/q} · rate(n)`, constant omitted.
pub fn empirical_rate_envelope(n: f64, m: usize, q: f64, moment_q: f64) -> Result<f64> {
    if m == 0 || !(q > 2.0) || !(n > 0.0) || !(moment_q >= 0.0) {
        return Err(PcrError::InvalidParameter("need m ≥ 1, q > 2, n > 0".into()));
    }
    let tail = n.powf(-(q - 2.0) / (2.0 * q));
    let lead = match m {
        1..=3 if q != 4.0 => n.powf(-0.25),
        4 if q != 4.0 => n.powf(-0.25) * (1.0 + n).ln().sqrt(),
        m if m > 4 && q != m as f64 / (m as f64 - 2.0) => n.powf(-1.0 / m as f64),
        _ => return Err(PcrError::UnsupportedSpec("critical moment order excluded".into())),
    };
    Ok(moment_q.powf(1.0 / q) * (lead + tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_decays() {
        let a = empirical_rate_envelope(10.0, 1, 8.0, 1.0 / 9.0).unwrap();
        let b = empirical_rate_envelope(1000.0, 1, 8.0, 1.0 / 9.0).unwrap();
        assert!(b < a);
        assert!(empirical_rate_envelope(10.0, 2, 4.0, 1.0).is_err());
    }
}
