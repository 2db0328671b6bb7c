//! Oracles shared by the integration test targets.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::{PI, SQRT_2};

/// `E[(tr Σ + ‖m − θ0‖²)^{1/2}]` for the conjugate sine-basis regression on
/// a uniform design, averaged over independently simulated designs and noise.
pub fn linreg_conjugate_oracle(n: usize, lambda: &[f64], theta0: &[f64], sigma2: f64, designs: usize) -> (f64, f64) {
    let k = lambda.len();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let th = DVector::from_column_slice(theta0);
    let w: Vec<f64> = (0..designs)
        .map(|_| {
            let mut gram = DMatrix::<f64>::from_diagonal(&DVector::from_iterator(k, lambda.iter().map(|l| 1.0 / l)));
            let mut rhs = DVector::<f64>::zeros(k);
            for _ in 0..n {
                let x: f64 = rng.random();
                let psi = DVector::from_iterator(k, (1..=k).map(|j| SQRT_2 * (j as f64 * PI * x).sin()));
                let z: f64 = StandardNormal.sample(&mut rng);
                let y = psi.dot(&th) + sigma2.sqrt() * z;
                gram += &psi * psi.transpose() / sigma2;
                rhs += &psi * (y / sigma2);
            }
            let cov = gram.try_inverse().unwrap();
            let mean = &cov * rhs;
            (cov.trace() + (mean - &th).norm_squared()).sqrt()
        })
        .collect();
    let m = w.iter().sum::<f64>() / designs as f64;
    let sd = (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (designs - 1) as f64).sqrt();
    (m, sd / (designs as f64).sqrt())
}
