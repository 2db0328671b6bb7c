//! Multinomial (categorical) model on the open simplex.
//!
//! The parameter is the vector of the first `N − 1` cell probabilities; the
//! last one is implied. The sufficient statistic is the vector of empirical
//! frequencies of the first `N − 1` cells.

use super::prior::open_unit;
use super::{SampleSpace, StatModel};
use crate::error::{PcrError, Result};
use crate::expfam::ExponentialFamily;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialModel {
    categories: usize,
}

impl MultinomialModel {
    pub fn new(categories: usize) -> Result<Self> {
        if categories < 2 {
            return Err(PcrError::InvalidParameter("need at least two categories".into()));
        }
        Ok(Self { categories })
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    fn full(theta: &[f64]) -> Vec<f64> {
        let mut p = theta.to_vec();
        p.push(1.0 - theta.iter().sum::<f64>());
        p
    }
}

fn interior(theta: &[f64]) -> bool {
    theta.iter().all(|t| *t > 0.0) && theta.iter().sum::<f64>() < 1.0
}

/// `Σ_i θ0_i log(θ0_i/θ_i)` over all `N` cells; both arguments give the first
/// `N − 1` probabilities.
pub fn multinomial_kl(theta: &[f64], theta0: &[f64]) -> Result<f64> {
    if theta.len() != theta0.len() {
        return Err(PcrError::InvalidInput("parameters differ in dimension".into()));
    }
    if !interior(theta) || !interior(theta0) {
        return Err(PcrError::InvalidInput("parameters must be interior points of the simplex".into()));
    }
    let p = MultinomialModel::full(theta);
    let p0 = MultinomialModel::full(theta0);
    Ok(p0.iter().zip(&p).map(|(a, b)| a * (a / b).ln()).sum())
}

impl StatModel for MultinomialModel {
    type Sample = usize;

    fn dim(&self) -> usize {
        self.categories - 1
    }

    fn sample_space(&self) -> SampleSpace {
        SampleSpace::Finite(self.categories)
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.categories - 1 && interior(theta)
    }

    fn log_density(&self, x: &usize, theta: &[f64]) -> Result<f64> {
        if *x >= self.categories {
            return Err(PcrError::InvalidInput(format!("category {x} out of range")));
        }
        let p = if *x + 1 == self.categories { 1.0 - theta.iter().sum::<f64>() } else { theta[*x] };
        Ok(p.ln())
    }

    fn sample(&self, theta0: &[f64], n: usize, seed: u64) -> Result<Vec<usize>> {
        if !self.in_domain(theta0) {
            return Err(PcrError::InvalidInput("theta0 must be an interior point".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cum = Vec::with_capacity(self.categories);
        let mut acc = 0.0;
        for t in theta0 {
            acc += t;
            cum.push(acc);
        }
        Ok((0..n)
            .map(|_| {
                let u = open_unit(&mut rng);
                cum.partition_point(|c| *c < u)
            })
            .collect())
    }

    fn kl_analytic(&self, theta: &[f64], theta0: &[f64]) -> Option<Result<f64>> {
        Some(multinomial_kl(theta, theta0))
    }

    fn point_from_index(&self, i: usize) -> Option<usize> {
        (i < self.categories).then_some(i)
    }
}

impl ExponentialFamily for MultinomialModel {
    fn stat_dim(&self) -> usize {
        self.categories - 1
    }

    fn beta(&self, x: &usize) -> Vec<f64> {
        let mut v = vec![0.0; self.categories - 1];
        if *x + 1 < self.categories {
            v[*x] = 1.0;
        }
        v
    }

    fn natural(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let last = (1.0 - theta.iter().sum::<f64>()).ln();
        Ok(theta.iter().map(|t| t.ln() - last).collect())
    }

    fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        Ok(-(1.0 - theta.iter().sum::<f64>()).ln())
    }

    fn kernel_exponent(&self, theta: &[f64], b: &[f64]) -> Result<f64> {
        let last = 1.0 - theta.iter().sum::<f64>();
        let rest = 1.0 - b.iter().sum::<f64>();
        let mut acc = 0.0;
        for (t, w) in theta.iter().zip(b) {
            if *w != 0.0 {
                acc += w * t.ln();
            }
        }
        if rest != 0.0 {
            acc += rest * last.ln();
        }
        Ok(acc)
    }

    /// `∂g_i/∂θ_j = δ_ij/θ_i + 1/θ_N`.
    fn natural_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let last = 1.0 - theta.iter().sum::<f64>();
        let d = theta.len();
        Ok(DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 / theta[i] + 1.0 / last } else { 1.0 / last }))
    }

    fn s_zero_closed_form(&self, theta0: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(Ok(theta0.to_vec()))
    }
}
