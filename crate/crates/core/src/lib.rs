//! Goodness-of-fit testing for logistic regression with Monte-Carlo
//! (parametric bootstrap) P-values.
//!
//! The numeric core ([`data`], [`glm`], [`stats`], [`mc`], [`oracle`]) is
//! generic over a [`Scalar`] (`f32` or `f64`); the `*F64` / `*F32` aliases
//! below name the concrete instantiations. File input, experiment
//! configuration and reports ([`io`], [`experiment`], [`report`]) work in
//! `f64`.

pub mod data;
pub mod error;
pub mod experiment;
pub mod glm;
pub mod io;
mod linalg;
pub mod mc;
pub mod oracle;
pub mod order;
pub mod report;
pub mod scalar;
pub mod stats;
pub mod sum;

pub use data::{default_grouping, embedded_finney, validate, Dataset, GroupingScheme, ModelSpec};
pub use error::{DatasetViolation, GofError, Result};
pub use experiment::{load_config, parse_config, parse_statistic, run_experiment, run_experiment_with, ExperimentConfig};
pub use glm::{fit, residuals, Design, FitConfig, FittedModel, ResidualVector};
pub use io::{export_csv, inject_uniform_covariates, load_csv, read_csv, write_csv};
pub use mc::{
    estimate_pvalues, observed_statistics, run_one_simulation, OutcomeScorer, PValueEstimate, RunOptions,
    SimulationPlan, Simulator,
};
pub use oracle::{exact_pvalue, ExactPValue};
pub use order::{make_ordering, ObservationOrder, OrderingPolicy};
pub use report::{emit_report, emit_reports, parse_report_json, Report, ReportFormat, ReportMetadata, ReportRow};
pub use scalar::Scalar;
pub use stats::{
    deviance, deviance_from_means, euclidean_sq, evaluate_all, freeman_tukey, half_abs_sum, hosmer_lemeshow,
    ks_statistic, kuiper_statistic, pearson_chi2, MeanSource, StatisticKind,
};

pub type DatasetF64 = Dataset<f64>;
pub type DatasetF32 = Dataset<f32>;
pub type FitConfigF64 = FitConfig<f64>;
pub type FitConfigF32 = FitConfig<f32>;
pub type FittedModelF64 = FittedModel<f64>;
pub type FittedModelF32 = FittedModel<f32>;
pub type ResidualVectorF64 = ResidualVector<f64>;
pub type ResidualVectorF32 = ResidualVector<f32>;
pub type SimulationPlanF64 = SimulationPlan<f64>;
pub type SimulationPlanF32 = SimulationPlan<f32>;
pub type PValueEstimateF64 = PValueEstimate<f64>;
pub type PValueEstimateF32 = PValueEstimate<f32>;
