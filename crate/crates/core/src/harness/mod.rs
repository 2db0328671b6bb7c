//! Experiment orchestration: configuration, Monte Carlo runs, rate fits and
//! file output.

pub mod config;
pub mod gc;
pub mod output;
pub mod rate;
pub mod run;
pub mod tools;

pub use config::{BoundPath, BuiltModel, DeltaRule, ExperimentConfig, ModelSpec, PriorSpec, Theta0Spec};
pub use gc::{empirical_rate_envelope, gc_distance, gc_rate, GcLevel, GcRateResult};
pub use output::{write_replications_csv, write_summary_csv, REPLICATION_HEADER, SUMMARY_HEADER};
pub use rate::{fit_rate, RateFit};
pub use run::{
    estimate_epsilon_n, run_decomposition, tail_probability, Cell, Experiment, LevelResult, PcrRunResult, TermSummary,
};
pub use tools::{DensitySpec, EigencheckConfig, GcRateConfig, LaplaceRatesConfig, LawSpec, PoincareConfig};
