//! Declarative experiments: dataset, tested/full variable lists, injected
//! covariates, statistics, and simulation settings.
//!
//! A config file is TOML. Top-level keys describe one experiment; an
//! optional `[[experiment]]` array describes several, each inheriting the
//! top-level keys it does not set.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{default_grouping, embedded_finney, Dataset, ModelSpec};
use crate::error::{GofError, Result};
use crate::io::{inject_uniform_covariates, load_csv};
use crate::mc::{RunOptions, SimulationPlan, Simulator};
use crate::order::OrderingPolicy;
use crate::report::{Report, ReportMetadata, ReportRow};
use crate::stats::{MeanSource, StatisticKind};

/// Dataset name that selects the embedded Finney data.
pub const FINNEY: &str = "finney";

pub const DEFAULT_NUM_SIMULATIONS: u64 = 100_000;

/// Table-style row set: three KS orderings, the four ordering-free
/// statistics, then HL grouped by full and tested means for each group count.
pub const DEFAULT_STATISTICS: &[&str] = &[
    "ks:full",
    "ks:tested",
    "ks:residual",
    "deviance",
    "freeman-tukey",
    "pearson",
    "euclidean",
    "hl:full",
    "hl:tested",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Column heading in reports.
    #[serde(default)]
    pub label: Option<String>,
    /// `"finney"` or a CSV path.
    #[serde(default = "default_dataset")]
    pub dataset: String,
    #[serde(default = "default_dependent")]
    pub dependent: String,
    /// Tested-model covariates; defaults to the full list.
    #[serde(default)]
    pub tested: Option<Vec<String>>,
    /// Full-model covariates; defaults to every covariate, injected ones
    /// included.
    #[serde(default)]
    pub full: Option<Vec<String>>,
    #[serde(default)]
    pub inject_uniform: usize,
    #[serde(default)]
    pub inject_seed: u64,
    /// Statistic tokens; see [`parse_statistic`].
    #[serde(default)]
    pub statistics: Option<Vec<String>>,
    /// Group counts for `hl:full` / `hl:tested` tokens.
    #[serde(default = "default_hl_groups")]
    pub hl_groups: Vec<usize>,
    #[serde(default = "default_num_simulations")]
    pub num_simulations: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_dataset() -> String {
    FINNEY.into()
}
fn default_dependent() -> String {
    "y".into()
}
fn default_hl_groups() -> Vec<usize> {
    vec![10]
}
fn default_num_simulations() -> u64 {
    DEFAULT_NUM_SIMULATIONS
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            label: None,
            dataset: default_dataset(),
            dependent: default_dependent(),
            tested: None,
            full: None,
            inject_uniform: 0,
            inject_seed: 0,
            statistics: None,
            hl_groups: default_hl_groups(),
            num_simulations: DEFAULT_NUM_SIMULATIONS,
            master_seed: 0,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    /// Checks that need no data: counts, group sizes, token syntax,
    /// tested ⊆ full, dependent not a covariate.
    pub fn check(&self) -> Result<()> {
        if self.num_simulations == 0 {
            return Err(GofError::Config("num_simulations must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(GofError::Config("workers must be at least 1".into()));
        }
        if let Some(&g) = self.hl_groups.iter().find(|&&g| g < 2) {
            return Err(GofError::Config(format!("HL group count {g} is below 2")));
        }
        for tok in self.statistic_tokens() {
            parse_token(&tok)?;
        }
        for list in [&self.tested, &self.full].into_iter().flatten() {
            if list.iter().any(|v| *v == self.dependent) {
                return Err(GofError::Config(format!(
                    "dependent variable {:?} listed as a covariate",
                    self.dependent
                )));
            }
            let mut seen = std::collections::HashSet::new();
            if let Some(dup) = list.iter().find(|v| !seen.insert(v.as_str())) {
                return Err(GofError::Config(format!("variable {dup:?} listed twice")));
            }
        }
        if let (Some(tested), Some(full)) = (&self.tested, &self.full) {
            if let Some(v) = tested.iter().find(|v| !full.contains(v)) {
                return Err(GofError::Config(format!(
                    "tested variable {v:?} is not among the full-model variables"
                )));
            }
        }
        Ok(())
    }

    /// Expanded statistic tokens, bare `hl:<source>` repeated per group count.
    pub fn statistic_tokens(&self) -> Vec<String> {
        let raw: Vec<String> = match &self.statistics {
            Some(s) => s.clone(),
            None => DEFAULT_STATISTICS.iter().map(|s| s.to_string()).collect(),
        };
        // a run of consecutive bare HL tokens expands group-major, matching
        // the table layout (3 full, 3 tested, 5 full, 5 tested, ...)
        let mut out = Vec::new();
        let mut i = 0;
        while i < raw.len() {
            if is_bare_hl(&raw[i]) {
                let start = i;
                while i < raw.len() && is_bare_hl(&raw[i]) {
                    i += 1;
                }
                for g in &self.hl_groups {
                    for tok in &raw[start..i] {
                        out.push(format!("hl:{g}:{}", &tok.trim()[3..]));
                    }
                }
            } else {
                out.push(raw[i].trim().to_string());
                i += 1;
            }
        }
        out
    }
}

fn is_bare_hl(tok: &str) -> bool {
    matches!(tok.trim(), "hl:full" | "hl:tested")
}

/// Parsed token, before the grouping is sized to a dataset.
#[derive(Debug, Clone, PartialEq)]
enum Token {
    Kind(StatisticKind),
    Hl { groups: usize, source: MeanSource },
}

fn parse_token(tok: &str) -> Result<Token> {
    let t = tok.trim().to_ascii_lowercase();
    let order = |s: &str| match s {
        "full" => Some(OrderingPolicy::ByFullMu),
        "tested" => Some(OrderingPolicy::ByTestedMu),
        "residual" => Some(OrderingPolicy::ByResidual),
        _ => None,
    };
    let source = |s: &str| match s {
        "full" => Some(MeanSource::Full),
        "tested" => Some(MeanSource::Tested),
        _ => None,
    };
    let parts: Vec<&str> = t.split(':').collect();
    let kind = match parts.as_slice() {
        ["ks", o] => order(o).map(StatisticKind::KolmogorovSmirnov),
        ["kuiper", o] => order(o).map(StatisticKind::Kuiper),
        ["half-abs"] => Some(StatisticKind::HalfAbsSum),
        ["deviance"] | ["g2"] => Some(StatisticKind::Deviance),
        ["freeman-tukey"] | ["ft"] => Some(StatisticKind::FreemanTukey),
        ["pearson"] | ["chi2"] => Some(StatisticKind::PearsonChi2),
        ["euclidean"] => Some(StatisticKind::Euclidean),
        ["hl", g, s] => {
            let groups: usize = g.parse().map_err(|_| GofError::UnknownStatistic(tok.into()))?;
            if groups < 2 {
                return Err(GofError::Config(format!("HL group count {groups} is below 2")));
            }
            return source(s)
                .map(|source| Token::Hl { groups, source })
                .ok_or_else(|| GofError::UnknownStatistic(tok.into()));
        }
        _ => None,
    };
    kind.map(Token::Kind).ok_or_else(|| GofError::UnknownStatistic(tok.into()))
}

/// Resolves one token against a dataset of `n` observations. Tokens:
/// `ks:{full,tested,residual}`, `kuiper:{...}`, `half-abs`, `deviance`
/// (`g2`), `freeman-tukey` (`ft`), `pearson` (`chi2`), `euclidean`,
/// `hl:<groups>:{full,tested}`.
pub fn parse_statistic(tok: &str, n: usize) -> Result<StatisticKind> {
    match parse_token(tok)? {
        Token::Kind(k) => Ok(k),
        Token::Hl { groups, source } => Ok(StatisticKind::HosmerLemeshow {
            grouping: default_grouping(n, groups)?,
            source,
        }),
    }
}

/// Parses a TOML config into one or more experiments.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    let mut base: toml::Table = text.parse().map_err(|e: toml::de::Error| GofError::Config(e.to_string()))?;
    let list = base.remove("experiment");
    let to_cfg = |t: toml::Table| -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = t.try_into().map_err(|e: toml::de::Error| GofError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    };
    match list {
        None => Ok(vec![to_cfg(base)?]),
        Some(toml::Value::Array(items)) => {
            if items.is_empty() {
                return Err(GofError::Config("empty [[experiment]] list".into()));
            }
            items
                .into_iter()
                .map(|item| match item {
                    toml::Value::Table(t) => {
                        let mut merged = base.clone();
                        merged.extend(t);
                        to_cfg(merged)
                    }
                    _ => Err(GofError::Config("[[experiment]] entries must be tables".into())),
                })
                .collect()
        }
        Some(_) => Err(GofError::Config("`experiment` must be an array of tables".into())),
    }
}

/// Reads and parses a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<ExperimentConfig>> {
    parse_config(&std::fs::read_to_string(path.as_ref())?)
}

/// Loads the dataset, appends injected covariates, and keeps the full-model
/// columns. Returns the dataset with the tested model's column indices.
pub fn prepare(cfg: &ExperimentConfig) -> Result<(Dataset<f64>, ModelSpec)> {
    cfg.check()?;
    let raw = if cfg.dataset == FINNEY {
        if cfg.dependent != default_dependent() {
            return Err(GofError::Config(format!(
                "the embedded Finney data has dependent variable \"y\", not {:?}",
                cfg.dependent
            )));
        }
        embedded_finney::<f64>()
    } else {
        load_csv(&cfg.dataset, &cfg.dependent)?
    };
    let d = if cfg.inject_uniform > 0 {
        inject_uniform_covariates(&raw, cfg.inject_uniform, cfg.inject_seed)?
    } else {
        raw
    };
    let index = |name: &String| {
        d.column_index(name)
            .ok_or_else(|| GofError::Config(format!("unknown variable {name:?}")))
    };
    let full_cols: Vec<usize> = match &cfg.full {
        Some(names) => names.iter().map(index).collect::<Result<_>>()?,
        None => (0..d.m()).collect(),
    };
    let d = d.select_columns(&full_cols)?;
    let tested_cols: Vec<usize> = match &cfg.tested {
        Some(names) => names
            .iter()
            .map(|name| {
                d.column_index(name).ok_or_else(|| {
                    GofError::Config(format!("tested variable {name:?} is not among the full-model variables"))
                })
            })
            .collect::<Result<_>>()?,
        None => (0..d.m()).collect(),
    };
    let tested = ModelSpec::new(tested_cols, d.m())?;
    Ok((d, tested))
}

/// Builds the simulation plan for `cfg`; statistic tokens come back
/// alongside, in plan order.
pub fn build_plan(cfg: &ExperimentConfig) -> Result<(SimulationPlan<f64>, Vec<String>)> {
    let (d, tested) = prepare(cfg)?;
    let tokens = cfg.statistic_tokens();
    let stats = tokens
        .iter()
        .map(|t| parse_statistic(t, d.n()))
        .collect::<Result<Vec<_>>>()?;
    let plan = SimulationPlan::new(d, tested, stats, cfg.num_simulations, cfg.master_seed)?;
    Ok((plan, tokens))
}

/// Runs `cfg` to completion.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    run_experiment_with(cfg, &RunOptions::default())
}

/// [`run_experiment`] with progress/cancellation hooks. `cfg.workers`
/// applies unless `opts` sets its own worker count.
pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions<'_>) -> Result<Report> {
    let start = Instant::now();
    let (plan, tokens) = build_plan(cfg)?;
    let sim = Simulator::new(&plan)?;
    let opts = RunOptions {
        workers: opts.workers.or(cfg.workers),
        ..*opts
    };
    let estimates = sim.estimate(&opts)?;
    let rows = tokens
        .into_iter()
        .zip(estimates)
        .map(|(token, e)| ReportRow {
            label: e.statistic.label(),
            statistic: token,
            observed: e.observed_value,
            exceed_count: e.exceed_count,
            p_hat: e.p_hat,
            std_error: e.std_error,
            at_most_bound: e.exceed_count == 0,
        })
        .collect();
    let names = plan.dataset.names();
    let metadata = ReportMetadata {
        label: cfg.label.clone(),
        dataset: cfg.dataset.clone(),
        dependent: cfg.dependent.clone(),
        n: plan.dataset.n(),
        l: plan.tested.len(),
        m: plan.dataset.m(),
        tested: plan.tested.included().iter().map(|&j| names[j].clone()).collect(),
        full: names.to_vec(),
        inject_uniform: cfg.inject_uniform,
        inject_seed: cfg.inject_seed,
        master_seed: cfg.master_seed,
        num_simulations: cfg.num_simulations,
        wall_time_seconds: Some(start.elapsed().as_secs_f64()),
    };
    Ok(Report { metadata, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tokens_expand_group_major() {
        let cfg = ExperimentConfig {
            hl_groups: vec![3, 5],
            ..Default::default()
        };
        let t = cfg.statistic_tokens();
        assert_eq!(
            &t[7..],
            &["hl:3:full", "hl:3:tested", "hl:5:full", "hl:5:tested"].map(String::from)
        );
        assert_eq!(t.len(), 11);
    }

    #[test]
    fn token_parsing() {
        assert_eq!(
            parse_statistic("ks:full", 39).unwrap(),
            StatisticKind::KolmogorovSmirnov(OrderingPolicy::ByFullMu)
        );
        assert_eq!(parse_statistic("G2", 39).unwrap(), StatisticKind::Deviance);
        match parse_statistic("hl:5:tested", 39).unwrap() {
            StatisticKind::HosmerLemeshow { grouping, source } => {
                assert_eq!(grouping.sizes(), &[8, 8, 8, 8, 7]);
                assert_eq!(source, MeanSource::Tested);
            }
            k => panic!("{k:?}"),
        }
        assert!(matches!(parse_statistic("ks:sideways", 39), Err(GofError::UnknownStatistic(_))));
        assert!(parse_statistic("hl:1:full", 39).is_err());
        assert!(matches!(parse_statistic("hl:3:tested", 4), Err(GofError::Grouping(_))));
    }

    #[test]
    fn config_validation() {
        let bad = ExperimentConfig {
            tested: Some(vec!["x1".into(), "x2".into()]),
            full: Some(vec!["x1".into()]),
            ..Default::default()
        };
        assert!(matches!(bad.check(), Err(GofError::Config(_))));
        let bad = ExperimentConfig {
            full: Some(vec!["y".into()]),
            ..Default::default()
        };
        assert!(bad.check().is_err());
        let bad = ExperimentConfig {
            hl_groups: vec![1],
            ..Default::default()
        };
        assert!(bad.check().is_err());
        let bad = ExperimentConfig {
            tested: Some(vec!["nope".into()]),
            ..Default::default()
        };
        assert!(matches!(prepare(&bad), Err(GofError::Config(_))));
    }

    #[test]
    fn multi_experiment_file_inherits_top_level() {
        let text = r#"
            hl_groups = [3, 5]
            num_simulations = 1000
            [[experiment]]
            tested = []
            [[experiment]]
            tested = []
            full = ["x1", "x2", "u1"]
            inject_uniform = 1
            inject_seed = 9
        "#;
        let cfgs = parse_config(text).unwrap();
        assert_eq!(cfgs.len(), 2);
        assert_eq!(cfgs[1].hl_groups, vec![3, 5]);
        assert_eq!(cfgs[1].num_simulations, 1000);
        let (d, tested) = prepare(&cfgs[1]).unwrap();
        assert_eq!((d.m(), tested.len()), (3, 0));
        assert!(parse_config("bogus_key = 1").is_err());
        assert!(parse_config("experiment = 3").is_err());
    }

    #[test]
    fn injected_column_can_be_left_out_of_full() {
        let cfg = ExperimentConfig {
            inject_uniform: 1,
            full: Some(vec!["x1".into(), "x2".into()]),
            ..Default::default()
        };
        let (d, tested) = prepare(&cfg).unwrap();
        assert_eq!(d.m(), 2);
        assert_eq!(tested.len(), 2);
    }
}
