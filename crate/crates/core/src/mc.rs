//! Parametric-bootstrap P-values.
//!
//! Each simulation draws new responses from the tested model fitted to the
//! observed data, refits the tested and full models to the draw, and
//! recomputes every statistic. The P-value estimate is the fraction of
//! simulations whose statistic is at least the observed one.
//!
//! Simulation `k` takes its random numbers from ChaCha stream `k` keyed by
//! the master seed, so results do not depend on how simulations are spread
//! over worker threads.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, ModelSpec};
use crate::error::{GofError, Result};
use crate::glm::{Design, FitConfig};
use crate::stats::{evaluate_all, StatisticKind};
use crate::Scalar;

/// Simulations per scheduling unit; progress and cancellation are checked
/// between chunks.
const CHUNK: u64 = 512;

#[derive(Debug, Clone)]
pub struct SimulationPlan<T> {
    pub dataset: Dataset<T>,
    pub tested: ModelSpec,
    /// Must include every covariate of `dataset`.
    pub full: ModelSpec,
    pub statistics: Vec<StatisticKind>,
    pub num_simulations: u64,
    pub master_seed: u64,
    pub fit_config: FitConfig<T>,
}

impl<T: Scalar> SimulationPlan<T> {
    /// Plan whose full model uses every covariate of `dataset`.
    pub fn new(
        dataset: Dataset<T>,
        tested: ModelSpec,
        statistics: Vec<StatisticKind>,
        num_simulations: u64,
        master_seed: u64,
    ) -> Result<Self> {
        let plan = Self {
            full: ModelSpec::all(dataset.m()),
            dataset,
            tested,
            statistics,
            num_simulations,
            master_seed,
            fit_config: FitConfig::default(),
        };
        plan.check()?;
        Ok(plan)
    }

    pub fn check(&self) -> Result<()> {
        crate::data::validate(&self.dataset)?;
        self.fit_config.check()?;
        let m = self.dataset.m();
        self.tested.check(m)?;
        self.full.check(m)?;
        if self.num_simulations == 0 {
            return Err(GofError::Plan("need at least one simulation".into()));
        }
        if self.full.len() != m {
            return Err(GofError::Plan(format!(
                "full model has {} covariates but the dataset has {m}",
                self.full.len()
            )));
        }
        if !self.tested.is_subset_of(&self.full) {
            return Err(GofError::Plan("tested model is not contained in the full model".into()));
        }
        if self.statistics.is_empty() {
            return Err(GofError::Plan("no statistics requested".into()));
        }
        for s in &self.statistics {
            if let StatisticKind::HosmerLemeshow { grouping, .. } = s {
                if grouping.total() != self.dataset.n() {
                    return Err(GofError::Grouping(format!(
                        "group sizes sum to {}, expected n = {}",
                        grouping.total(),
                        self.dataset.n()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Estimated P-value `b / i` with its binomial standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueEstimate<T> {
    pub statistic: StatisticKind,
    pub observed_value: T,
    /// Simulations whose statistic was at least `observed_value`.
    pub exceed_count: u64,
    pub num_simulations: u64,
    pub p_hat: f64,
    pub std_error: f64,
}

impl<T: Scalar> PValueEstimate<T> {
    pub fn new(statistic: StatisticKind, observed_value: T, exceed_count: u64, num_simulations: u64) -> Self {
        let (p_hat, std_error) = p_value_and_error(exceed_count, num_simulations);
        Self {
            statistic,
            observed_value,
            exceed_count,
            num_simulations,
            p_hat,
            std_error,
        }
    }

    /// When no simulation reached the observed value, the estimate is only
    /// known to be below `1 / i`.
    pub fn upper_bound(&self) -> Option<f64> {
        (self.exceed_count == 0).then(|| 1.0 / self.num_simulations as f64)
    }
}

/// Relative slack within which a simulated statistic ties the observed one.
///
/// Outcomes that are equivalent (permuted responses, mirror-image counts)
/// produce statistics that agree only up to rounding; without the slack they
/// would be counted or not depending on the last bits.
pub fn tie_tolerance<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// The exceedance test: `simulated >= observed`, ties within
/// [`tie_tolerance`] included.
#[inline]
pub fn at_least<T: Scalar>(simulated: T, observed: T) -> bool {
    if observed.is_infinite() {
        return simulated >= observed;
    }
    simulated >= observed - tie_tolerance::<T>() * observed.abs()
}

/// `(b / i, sqrt(p (1 - p)) / sqrt(i))`.
pub fn p_value_and_error(exceed_count: u64, num_simulations: u64) -> (f64, f64) {
    let i = num_simulations as f64;
    let p = exceed_count as f64 / i;
    (p, (p * (1.0 - p)).sqrt() / i.sqrt())
}

/// Fits the tested model (and the full model when a statistic needs it) to a
/// response vector and evaluates the requested statistics.
///
/// Shared by observed-data scoring, simulation, and exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct OutcomeScorer<T> {
    tested: Design<T>,
    /// `None` when no statistic uses the full model or it coincides with
    /// the tested model.
    full: Option<Design<T>>,
    full_is_tested: bool,
    needs_full: bool,
    statistics: Vec<StatisticKind>,
    cfg: FitConfig<T>,
}

impl<T: Scalar> OutcomeScorer<T> {
    pub fn new(
        dataset: &Dataset<T>,
        tested: &ModelSpec,
        full: &ModelSpec,
        statistics: Vec<StatisticKind>,
        cfg: FitConfig<T>,
    ) -> Result<Self> {
        let needs_full = statistics.iter().any(StatisticKind::needs_full_fit);
        let full_is_tested = tested == full;
        let full = if needs_full && !full_is_tested {
            Some(Design::new(dataset, full)?)
        } else {
            full.check(dataset.m())?;
            None
        };
        Ok(Self {
            tested: Design::new(dataset, tested)?,
            full,
            full_is_tested,
            needs_full,
            statistics,
            cfg,
        })
    }

    pub fn statistics(&self) -> &[StatisticKind] {
        &self.statistics
    }

    /// Tested-model fitted means for `y`.
    pub fn tested_means(&self, y: &[u8]) -> Result<Vec<T>> {
        Ok(self.tested.fit(y, &self.cfg)?.mu)
    }

    pub fn score(&self, y: &[u8]) -> Result<Vec<T>> {
        let tested = self.tested.fit(y, &self.cfg)?;
        let full_mu = match (&self.full, self.needs_full && self.full_is_tested) {
            (Some(design), _) => Some(design.fit(y, &self.cfg)?.mu),
            (None, true) => Some(tested.mu.clone()),
            (None, false) => None,
        };
        evaluate_all(&self.statistics, y, &tested.mu, full_mu.as_deref())
    }
}

/// Progress, cancellation and thread-count controls for a run.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Called with (completed, total) after each chunk of simulations.
    pub progress: Option<&'a (dyn Fn(u64, u64) + Sync)>,
    /// When set, the run stops and returns [`GofError::Cancelled`].
    pub cancel: Option<&'a AtomicBool>,
}

/// A plan with its observed-data fits done, ready to simulate.
#[derive(Debug, Clone)]
pub struct Simulator<'a, T> {
    plan: &'a SimulationPlan<T>,
    scorer: OutcomeScorer<T>,
    null_means: Vec<f64>,
    observed: Vec<T>,
    base_rng: ChaCha8Rng,
}

impl<'a, T: Scalar> Simulator<'a, T> {
    pub fn new(plan: &'a SimulationPlan<T>) -> Result<Self> {
        plan.check()?;
        let scorer = OutcomeScorer::new(
            &plan.dataset,
            &plan.tested,
            &plan.full,
            plan.statistics.clone(),
            plan.fit_config,
        )?;
        let y = plan.dataset.y();
        let null_means = scorer.tested_means(y)?.into_iter().map(Scalar::as_f64).collect();
        let observed = scorer.score(y)?;
        if let Some(k) = observed.iter().position(|v| v.is_nan()) {
            return Err(GofError::Numerical(format!(
                "observed {} is not a number",
                plan.statistics[k].label()
            )));
        }
        Ok(Self {
            plan,
            scorer,
            null_means,
            observed,
            base_rng: ChaCha8Rng::seed_from_u64(plan.master_seed),
        })
    }

    /// Observed statistics, in plan order.
    pub fn observed(&self) -> &[T] {
        &self.observed
    }

    /// Tested-model means of the observed data, which generate the draws.
    pub fn null_means(&self) -> &[f64] {
        &self.null_means
    }

    /// Bernoulli draws for simulation `sim_index`.
    pub fn draw(&self, sim_index: u64) -> Vec<u8> {
        let mut rng = self.base_rng.clone();
        rng.set_stream(sim_index);
        rng.set_word_pos(0);
        self.null_means
            .iter()
            .map(|&mu| u8::from(rng.random::<f64>() < mu))
            .collect()
    }

    /// Statistics of simulation `sim_index`, in plan order.
    pub fn run_one(&self, sim_index: u64) -> Result<Vec<T>> {
        self.scorer.score(&self.draw(sim_index))
    }

    /// Exceedance counts over simulations `range`.
    fn count_range(&self, range: std::ops::Range<u64>) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.observed.len()];
        for k in range {
            let sim = self.run_one(k)?;
            for ((c, s), o) in counts.iter_mut().zip(&sim).zip(&self.observed) {
                if at_least(*s, *o) {
                    *c += 1;
                }
            }
        }
        Ok(counts)
    }

    pub fn estimate(&self, opts: &RunOptions<'_>) -> Result<Vec<PValueEstimate<T>>> {
        let total = self.plan.num_simulations;
        let chunks = total.div_ceil(CHUNK);
        let done = AtomicU64::new(0);
        let work = || -> Result<Vec<u64>> {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    if opts.cancel.is_some_and(|f| f.load(AtomicOrdering::Relaxed)) {
                        return Err(GofError::Cancelled);
                    }
                    let lo = c * CHUNK;
                    let hi = (lo + CHUNK).min(total);
                    let counts = self.count_range(lo..hi)?;
                    let finished = done.fetch_add(hi - lo, AtomicOrdering::Relaxed) + (hi - lo);
                    if let Some(progress) = opts.progress {
                        progress(finished, total);
                    }
                    Ok(counts)
                })
                .try_reduce(
                    || vec![0u64; self.observed.len()],
                    |mut a, b| {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                        Ok(a)
                    },
                )
        };
        let counts = match opts.workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| GofError::Plan(format!("cannot start worker pool: {e}")))?
                .install(work)?,
            None => work()?,
        };
        if opts.cancel.is_some_and(|f| f.load(AtomicOrdering::Relaxed)) {
            return Err(GofError::Cancelled);
        }
        Ok(self
            .plan
            .statistics
            .iter()
            .zip(&self.observed)
            .zip(counts)
            .map(|((s, &o), b)| PValueEstimate::new(s.clone(), o, b, total))
            .collect())
    }
}

/// Statistics of the observed data, paired with their kinds.
pub fn observed_statistics<T: Scalar>(plan: &SimulationPlan<T>) -> Result<Vec<(StatisticKind, T)>> {
    let sim = Simulator::new(plan)?;
    Ok(plan.statistics.iter().cloned().zip(sim.observed().iter().copied()).collect())
}

/// Statistics of one simulated draw, paired with their kinds.
pub fn run_one_simulation<T: Scalar>(plan: &SimulationPlan<T>, sim_index: u64) -> Result<Vec<(StatisticKind, T)>> {
    if sim_index >= plan.num_simulations {
        return Err(GofError::Plan(format!(
            "simulation index {sim_index} out of range for {} simulations",
            plan.num_simulations
        )));
    }
    let sim = Simulator::new(plan)?;
    Ok(plan.statistics.iter().cloned().zip(sim.run_one(sim_index)?).collect())
}

/// Runs every simulation of `plan` on the global thread pool.
pub fn estimate_pvalues<T: Scalar>(plan: &SimulationPlan<T>) -> Result<Vec<PValueEstimate<T>>> {
    Simulator::new(plan)?.estimate(&RunOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{default_grouping, embedded_finney};
    use crate::order::OrderingPolicy;
    use crate::stats::{half_abs_sum, MeanSource};

    fn finney_plan(tested: ModelSpec, statistics: Vec<StatisticKind>, i: u64) -> SimulationPlan<f64> {
        SimulationPlan::new(embedded_finney(), tested, statistics, i, 7).unwrap()
    }

    #[test]
    fn residual_order_ks_is_half_abs_sum() {
        let plan = finney_plan(
            ModelSpec::all(2),
            vec![StatisticKind::KolmogorovSmirnov(OrderingPolicy::ByResidual)],
            10,
        );
        let obs = observed_statistics(&plan).unwrap();
        let f = crate::glm::fit(&plan.dataset, &plan.tested, &plan.fit_config).unwrap();
        let r = crate::glm::residuals(&f, &plan.dataset).unwrap();
        assert!((obs[0].1 - half_abs_sum(&r)).abs() < 1e-12);
    }

    #[test]
    fn equal_models_give_equal_orderings() {
        let plan = finney_plan(
            ModelSpec::all(2),
            vec![
                StatisticKind::KolmogorovSmirnov(OrderingPolicy::ByFullMu),
                StatisticKind::KolmogorovSmirnov(OrderingPolicy::ByTestedMu),
            ],
            10,
        );
        let obs = observed_statistics(&plan).unwrap();
        assert_eq!(obs[0].1, obs[1].1);
    }

    #[test]
    fn plan_validation() {
        let d = embedded_finney::<f64>();
        let stats = vec![StatisticKind::Deviance];
        assert!(SimulationPlan::new(d.clone(), ModelSpec::all(2), stats.clone(), 0, 1).is_err());
        assert!(SimulationPlan::new(d.clone(), ModelSpec::all(2), vec![], 5, 1).is_err());
        let mut plan = SimulationPlan::new(d.clone(), ModelSpec::all(2), stats.clone(), 5, 1).unwrap();
        plan.full = ModelSpec::new(vec![0], 2).unwrap();
        assert!(plan.check().is_err());
        let bad_hl = vec![StatisticKind::HosmerLemeshow {
            grouping: default_grouping(40, 4).unwrap(),
            source: MeanSource::Tested,
        }];
        assert!(SimulationPlan::new(d, ModelSpec::all(2), bad_hl, 5, 1).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let plan = finney_plan(
            ModelSpec::new(vec![0], 2).unwrap(),
            vec![StatisticKind::KolmogorovSmirnov(OrderingPolicy::ByFullMu), StatisticKind::PearsonChi2],
            100,
        );
        let a = run_one_simulation(&plan, 17).unwrap();
        let b = run_one_simulation(&plan, 17).unwrap();
        assert_eq!(a, b);
        let c = run_one_simulation(&plan, 18).unwrap();
        assert_ne!(a, c);
        assert!(run_one_simulation(&plan, 100).is_err());
    }

    #[test]
    fn standard_error_formula() {
        let (p, se) = p_value_and_error(2_000_000, 4_000_000);
        assert_eq!(p, 0.5);
        assert!((se - 0.00025).abs() < 1e-18);
        let (p, se) = p_value_and_error(0, 10);
        assert_eq!((p, se), (0.0, 0.0));
        let est = PValueEstimate::new(StatisticKind::Deviance, 1.0f64, 0, 4_000_000);
        assert_eq!(est.upper_bound(), Some(2.5e-7));
    }

    #[test]
    fn exceedance_test_counts_rounding_ties() {
        assert!(at_least(1.0, 1.0));
        assert!(at_least(1.0 - 1e-13, 1.0));
        assert!(!at_least(1.0 - 1e-6, 1.0));
        assert!(at_least(0.0, 0.0));
        assert!(!at_least(-1e-300, 0.0));
        assert!(at_least(f64::INFINITY, f64::INFINITY));
        assert!(!at_least(1e300, f64::INFINITY));
    }

    #[test]
    fn cancellation_returns_error() {
        let plan = finney_plan(ModelSpec::all(2), vec![StatisticKind::Deviance], 5000);
        let sim = Simulator::new(&plan).unwrap();
        let flag = AtomicBool::new(true);
        let opts = RunOptions {
            cancel: Some(&flag),
            ..Default::default()
        };
        assert!(matches!(sim.estimate(&opts), Err(GofError::Cancelled)));
    }

    #[test]
    fn progress_reaches_total() {
        let plan = finney_plan(ModelSpec::all(2), vec![StatisticKind::Deviance], 1500);
        let sim = Simulator::new(&plan).unwrap();
        let last = AtomicU64::new(0);
        let report = |done: u64, total: u64| {
            assert_eq!(total, 1500);
            last.fetch_max(done, AtomicOrdering::Relaxed);
        };
        let opts = RunOptions {
            progress: Some(&report),
            workers: Some(2),
            ..Default::default()
        };
        let est = sim.estimate(&opts).unwrap();
        assert_eq!(last.load(AtomicOrdering::Relaxed), 1500);
        assert_eq!(est[0].num_simulations, 1500);
    }
}
