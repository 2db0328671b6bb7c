//! Experiment configuration, read from JSON with unknown keys rejected.

use crate::error::{PcrError, Result};
use crate::models::{
    DesignDensity, DirichletShapePrior, GaussianPrior, LinRegModel, LogisticModel, MultinomialModel, PointMassPrior,
    Prior,
};
use crate::posterior::SamplerConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Multinomial {
        categories: usize,
    },
    /// Logistic model with `sin(kπx)`, `k = 1..=basis_size`.
    FiniteLogistic {
        basis_size: usize,
    },
    /// Logistic model in the `H¹*` eigenbasis truncated at `modes`.
    InfiniteLogistic {
        #[serde(default = "default_modes")]
        modes: usize,
    },
    LinearRegression {
        modes: usize,
        sigma: f64,
        #[serde(default = "unit_interval")]
        interval: (f64, f64),
        /// Tabulated design density on a uniform grid; uniform when absent.
        #[serde(default)]
        design: Option<Vec<f64>>,
        /// Use the conjugate closed form instead of the sampler.
        #[serde(default = "yes")]
        exact: bool,
    },
}

fn default_modes() -> usize {
    16
}
fn unit_interval() -> (f64, f64) {
    (0.0, 1.0)
}
fn yes() -> bool {
    true
}
fn default_alpha() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Dirichlet {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Gaussian {
        mean: Vec<f64>,
        variances: Vec<f64>,
    },
    StandardGaussian,
    /// Variances `scale·k^{-(1+a)}` around `mean` (zero when absent).
    PowerLaw {
        scale: f64,
        a: f64,
        #[serde(default)]
        mean: Option<Vec<f64>>,
    },
    PointMass {
        at: Vec<f64>,
    },
}

/// True parameter: explicit coefficients or `scale·k^{-exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta0Spec {
    Coefficients(Vec<f64>),
    Decay { scale: f64, exponent: f64 },
}

/// `δ_n = scale·n^{−q}`; the scale is calibrated when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeltaRule {
    pub scale: Option<f64>,
    pub q: f64,
}

impl Default for DeltaRule {
    fn default() -> Self {
        Self { scale: None, q: 0.25 }
    }
}

/// Which bound the decomposition assembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundPath {
    /// Sufficient-statistic bound with tail probability and moment terms.
    ExponentialFamily,
    /// Empirical-measure bound with neighbourhood radius `radius·n^{−exponent}`.
    General {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "eighth")]
        exponent: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn eighth() -> f64 {
    0.125
}

impl Default for BoundPath {
    fn default() -> Self {
        BoundPath::ExponentialFamily
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub prior: PriorSpec,
    pub theta0: Theta0Spec,
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Replications used for the tail probability; at least `replications`.
    #[serde(default = "default_tail_replications")]
    pub tail_replications: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub delta: DeltaRule,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub path: BoundPath,
}

fn default_replications() -> usize {
    200
}
fn default_tail_replications() -> usize {
    200
}
fn default_p() -> f64 {
    2.0
}
fn default_a() -> f64 {
    2.0
}
fn default_bootstrap() -> usize {
    super::rate::DEFAULT_BOOTSTRAP
}

/// A constructed model.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    Multinomial(MultinomialModel),
    Logistic(LogisticModel),
    LinReg(LinRegModel),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PcrError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            ModelSpec::Multinomial { categories } => categories.saturating_sub(1),
            ModelSpec::FiniteLogistic { basis_size } => *basis_size,
            ModelSpec::InfiniteLogistic { modes } => *modes,
            ModelSpec::LinearRegression { modes, .. } => *modes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PcrError::Config(m.to_string()));
        if self.n_ladder.is_empty() || self.n_ladder.iter().any(|n| *n == 0) {
            return bad("n_ladder must hold positive integers");
        }
        if self.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_ladder must be strictly ascending");
        }
        if self.replications < 20 {
            return bad("replications must be at least 20");
        }
        if !(0.0..0.5).contains(&self.delta.q) {
            return bad("delta.q must lie in [0, 1/2)");
        }
        if let Some(s) = self.delta.scale {
            if !(s >= 0.0) {
                return bad("delta.scale must be nonnegative");
            }
        }
        if !(self.p >= 1.0) {
            return bad("p must be at least 1");
        }
        if !(self.a > 1.0) {
            return bad("a must exceed 1");
        }
        if let BoundPath::General { radius, exponent } = self.path {
            if !(radius > 0.0) || !(0.0..0.25).contains(&exponent) {
                return bad("general path needs radius > 0 and exponent in [0, 1/4)");
            }
        }
        if let ModelSpec::LinearRegression { exact: true, .. } = self.model {
            if self.p != 2.0 {
                return bad("the exact regression posterior supports p = 2 only");
            }
            if !matches!(self.prior, PriorSpec::Gaussian { .. } | PriorSpec::StandardGaussian | PriorSpec::PowerLaw { .. })
            {
                return bad("the exact regression posterior needs a Gaussian prior");
            }
        }
        let theta0 = self.theta0()?;
        if theta0.len() != self.dim() {
            return Err(PcrError::Config(format!(
                "theta0 has {} coefficients, model has {}",
                theta0.len(),
                self.dim()
            )));
        }
        self.sampler.validate()
    }

    pub fn theta0(&self) -> Result<Vec<f64>> {
        Ok(match &self.theta0 {
            Theta0Spec::Coefficients(v) => v.clone(),
            Theta0Spec::Decay { scale, exponent } => {
                (1..=self.dim()).map(|k| scale * (k as f64).powf(-exponent)).collect()
            }
        })
    }

    pub fn build_model(&self) -> Result<BuiltModel> {
        Ok(match &self.model {
            ModelSpec::Multinomial { categories } => BuiltModel::Multinomial(MultinomialModel::new(*categories)?),
            ModelSpec::FiniteLogistic { basis_size } => BuiltModel::Logistic(LogisticModel::finite(*basis_size)?),
            ModelSpec::InfiniteLogistic { modes } => BuiltModel::Logistic(LogisticModel::infinite(*modes)?),
            ModelSpec::LinearRegression { modes, sigma, interval, design, .. } => {
                let design = design.clone().map_or(DesignDensity::Uniform, DesignDensity::Tabulated);
                BuiltModel::LinReg(LinRegModel::new(interval.0, interval.1, sigma * sigma, *modes, design)?)
            }
        })
    }

    /// The prior as a Gaussian, when it is one.
    pub fn gaussian_prior(&self) -> Result<Option<GaussianPrior>> {
        let d = self.dim();
        Ok(match &self.prior {
            PriorSpec::Gaussian { mean, variances } => Some(GaussianPrior::new(mean.clone(), variances.clone())?),
            PriorSpec::StandardGaussian => Some(GaussianPrior::standard(d)?),
            PriorSpec::PowerLaw { scale, a, mean } => {
                Some(GaussianPrior::power_law(mean.clone().unwrap_or_else(|| vec![0.0; d]), *scale, *a)?)
            }
            _ => None,
        })
    }

    pub fn build_prior(&self) -> Result<Box<dyn Prior>> {
        if let Some(g) = self.gaussian_prior()? {
            if g.dim() != self.dim() {
                return Err(PcrError::Config("prior and model dimensions differ".into()));
            }
            return Ok(Box::new(g));
        }
        Ok(match &self.prior {
            PriorSpec::Dirichlet { alpha } => match self.model {
                ModelSpec::Multinomial { categories } => Box::new(DirichletShapePrior::new(categories, *alpha)?),
                _ => return Err(PcrError::Config("Dirichlet prior requires the multinomial model".into())),
            },
            PriorSpec::PointMass { at } => {
                if at.len() != self.dim() {
                    return Err(PcrError::Config("prior and model dimensions differ".into()));
                }
                Box::new(PointMassPrior::new(at.clone()))
            }
            _ => unreachable!("Gaussian priors handled above"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"model":{"kind":"multinomial","categories":3},"prior":{"kind":"dirichlet"},
            "theta0":[0.5,0.3],"n_ladder":[10,20],"bogus":1}"#;
        assert!(matches!(ExperimentConfig::from_json(text), Err(PcrError::Config(_))));
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let text = r#"{"model":{"kind":"multinomial","categories":3},"prior":{"kind":"dirichlet"},
            "theta0":[0.5,0.3],"n_ladder":[10,20]}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.replications, 200);
        assert_eq!(cfg.delta.q, 0.25);
        assert_eq!(cfg.path, BoundPath::ExponentialFamily);
    }

    #[test]
    fn decreasing_ladder_is_rejected() {
        let text = r#"{"model":{"kind":"finite_logistic","basis_size":1},"prior":{"kind":"standard_gaussian"},
            "theta0":[1.0],"n_ladder":[20,10]}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }
}
