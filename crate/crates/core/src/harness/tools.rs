//! Deterministic side computations exposed as CLI subcommands: Laplace-type
//! series rates, one-dimensional Poincaré constants, Glivenko–Cantelli rates
//! and the `I*` eigen-system check.

use super::gc::{gc_rate, GcRateResult};
use crate::error::{PcrError, Result};
use crate::laplace::{
    exponents_from_parameters, gaussian_ratio_series, loglog_slope, maxterm_rate, PredictedExponents,
    SpectralDecay,
};
use crate::measure::QuantileMeasure;
use crate::models::logistic::{apply_istar, h1star_basis, h1star_basis_derivative};
use crate::poincare::{poincare_grid_1d, GridDensity1D, DEFAULT_NODES};
use crate::quad::{unit_grid, GaussLegendre};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Power families `λ_k = k^{-(1+a)}`, `γ_k = k^{-b}` and optionally
/// `ω_k = k^{-(1+c)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceRatesConfig {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub c: Option<f64>,
    pub n_ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceRow {
    pub n: f64,
    pub series1: f64,
    pub series2: f64,
    pub maxterm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceRatesResult {
    pub rows: Vec<LaplaceRow>,
    pub series1_slope: f64,
    pub maxterm_slope: f64,
    /// `−a/(1+a+b)`.
    pub series1_predicted: f64,
    /// `−(a+1)/(1+a+b)`.
    pub maxterm_predicted: f64,
    pub exponents: PredictedExponents<f64>,
}

impl LaplaceRatesConfig {
    pub fn spec(&self) -> SpectralDecay<f64> {
        let spec = SpectralDecay::power(self.a, self.b);
        match self.c {
            Some(c) => spec.with_omega_power(c),
            None => spec,
        }
    }

    pub fn run(&self) -> Result<LaplaceRatesResult> {
        if self.n_ladder.len() < 2 {
            return Err(PcrError::Config("n_ladder needs at least two points".into()));
        }
        let spec = self.spec();
        let rows = self
            .n_ladder
            .iter()
            .map(|&n| {
                let (series1, series2) = gaussian_ratio_series(n, &spec)?;
                Ok(LaplaceRow { n, series1, series2, maxterm: maxterm_rate(n, &spec) })
            })
            .collect::<Result<Vec<_>>>()?;
        let ns: Vec<f64> = rows.iter().map(|r| r.n).collect();
        let s1: Vec<f64> = rows.iter().map(|r| r.series1).collect();
        let mt: Vec<f64> = rows.iter().map(|r| r.maxterm).collect();
        let denom = 1.0 + self.a + self.b;
        Ok(LaplaceRatesResult {
            series1_slope: loglog_slope(&ns, &s1)?,
            maxterm_slope: loglog_slope(&ns, &mt)?,
            series1_predicted: -self.a / denom,
            maxterm_predicted: -(self.a + 1.0) / denom,
            exponents: exponents_from_parameters(self.a, self.b, self.c),
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sd: f64 },
    GibbsGaussian { n: f64, gamma: f64, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareConfig {
    pub densities: Vec<DensitySpec>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareRow {
    pub density: DensitySpec,
    pub constant: f64,
    pub constant_sq: f64,
}

impl DensitySpec {
    pub fn build(&self, nodes: usize) -> Result<GridDensity1D<f64>> {
        match *self {
            DensitySpec::Uniform { lo, hi } => GridDensity1D::uniform(lo, hi, nodes),
            DensitySpec::Gaussian { mean, sd } => GridDensity1D::gaussian(mean, sd, nodes),
            DensitySpec::GibbsGaussian { n, gamma, lambda } => GridDensity1D::gibbs_gaussian(n, gamma, lambda, nodes),
        }
    }
}

impl PoincareConfig {
    pub fn run(&self) -> Result<Vec<PoincareRow>> {
        self.densities
            .iter()
            .map(|d| {
                let c = poincare_grid_1d(&d.build(self.nodes)?)?;
                Ok(PoincareRow { density: d.clone(), constant: c, constant_sq: c * c })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
}

impl LawSpec {
    pub fn build(&self) -> Result<QuantileMeasure<f64>> {
        match *self {
            LawSpec::Uniform { lo, hi } => QuantileMeasure::uniform(lo, hi),
            LawSpec::Exponential { rate } => QuantileMeasure::exponential(rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcRateConfig {
    pub law: LawSpec,
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_gc_replications")]
    pub replications: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_gc_replications() -> usize {
    200
}
fn default_p() -> f64 {
    2.0
}

impl GcRateConfig {
    pub fn run(&self) -> Result<GcRateResult> {
        gc_rate(&self.law.build()?, &self.n_ladder, self.replications, self.p, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigencheckConfig {
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Grid intervals for the operator check.
    #[serde(default = "default_intervals")]
    pub intervals: usize,
}

fn default_modes() -> usize {
    16
}
fn default_intervals() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRow {
    pub k: usize,
    pub eigenvalue: f64,
    /// `sup|I*[e_k] − e_k/(kπ)²| / sup|e_k/(kπ)²|` on the grid.
    pub sup_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigencheckResult {
    pub rows: Vec<EigenRow>,
    /// `max_{j,k} |⟨e_j, e_k⟩ − δ_jk|` in the `∫u′v′` inner product.
    pub orthonormality_error: f64,
}

impl EigencheckConfig {
    pub fn run(&self) -> Result<EigencheckResult> {
        if self.modes == 0 || self.intervals < 4 {
            return Err(PcrError::Config("need modes ≥ 1 and intervals ≥ 4".into()));
        }
        let xs = unit_grid(self.intervals);
        let zero = vec![0.0; xs.len()];
        let rows = (1..=self.modes)
            .map(|k| {
                let ek: Vec<f64> = xs.iter().map(|x| h1star_basis(k, *x)).collect();
                let out = apply_istar(&ek, &zero)?;
                let eigenvalue = 1.0 / (k as f64 * PI).powi(2);
                let scale = ek.iter().fold(0.0f64, |m, v| m.max(v.abs())) * eigenvalue;
                let err = out.iter().zip(&ek).fold(0.0f64, |m, (o, e)| m.max((o - eigenvalue * e).abs()));
                Ok(EigenRow { k, eigenvalue, sup_relative_error: err / scale })
            })
            .collect::<Result<Vec<_>>>()?;
        let rule = GaussLegendre::standard();
        let mut worst = 0.0f64;
        for j in 1..=self.modes {
            for k in j..=self.modes {
                let ip = rule.integrate(|x| h1star_basis_derivative(j, x) * h1star_basis_derivative(k, x));
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        Ok(EigencheckResult { rows, orthonormality_error: worst })
    }
}
