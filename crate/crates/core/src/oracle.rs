//! Exact P-values by enumerating every response vector of a small dataset.

use rayon::prelude::*;

use crate::data::{Dataset, ModelSpec};
use crate::error::{GofError, Result};
use crate::glm::FitConfig;
use crate::mc::{at_least, OutcomeScorer};
use crate::stats::StatisticKind;
use crate::sum::NeumaierSum;
use crate::Scalar;

/// Largest `n` accepted for enumeration (about a million outcomes).
pub const MAX_ENUMERATION_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactPValue {
    pub p_exact: f64,
    /// `2^n`.
    pub outcomes_enumerated: u64,
    /// Sum of all outcome probabilities; one up to rounding.
    pub total_weight: f64,
}

/// Probability, under the tested model fitted to `d`, that a fresh draw
/// yields a statistic at least as large as the observed one.
///
/// Every outcome is scored through the same [`OutcomeScorer`] the
/// Monte-Carlo engine uses.
pub fn exact_pvalue<T: Scalar>(
    d: &Dataset<T>,
    tested: &ModelSpec,
    full: &ModelSpec,
    stat: &StatisticKind,
    cfg: &FitConfig<T>,
) -> Result<ExactPValue> {
    let n = d.n();
    if n > MAX_ENUMERATION_N {
        return Err(GofError::TooLarge {
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    crate::data::validate(d)?;
    let scorer = OutcomeScorer::new(d, tested, full, vec![stat.clone()], *cfg)?;
    let mu: Vec<f64> = scorer.tested_means(d.y())?.into_iter().map(Scalar::as_f64).collect();
    let log_p: Vec<f64> = mu.iter().map(|m| m.ln()).collect();
    let log_q: Vec<f64> = mu.iter().map(|m| (-m).ln_1p()).collect();
    let observed = scorer.score(d.y())?[0];

    let outcomes = 1u64 << n;
    let per_outcome: Vec<(f64, bool)> = (0..outcomes)
        .into_par_iter()
        .map(|bits| {
            let y: Vec<u8> = (0..n).map(|k| ((bits >> k) & 1) as u8).collect();
            let log_w: f64 = y
                .iter()
                .enumerate()
                .map(|(k, &v)| if v == 1 { log_p[k] } else { log_q[k] })
                .sum();
            let value = scorer.score(&y)?[0];
            Ok((log_w.exp(), at_least(value, observed)))
        })
        .collect::<Result<_>>()?;

    let mut total = NeumaierSum::new();
    let mut hit = NeumaierSum::new();
    for &(w, exceeds) in &per_outcome {
        total.add(w);
        if exceeds {
            hit.add(w);
        }
    }
    Ok(ExactPValue {
        p_exact: hit.value().min(1.0),
        outcomes_enumerated: outcomes,
        total_weight: total.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::OrderingPolicy;

    fn cfg() -> FitConfig<f64> {
        FitConfig::default()
    }

    #[test]
    fn rejects_large_n() {
        let d = Dataset::new(vec![0; 21], vec![], vec![]).unwrap();
        let s = StatisticKind::Deviance;
        assert!(matches!(
            exact_pvalue(&d, &ModelSpec::intercept_only(), &ModelSpec::all(0), &s, &cfg()),
            Err(GofError::TooLarge { n: 21, .. })
        ));
    }

    #[test]
    fn single_observation() {
        // a fitted single observation is reproduced exactly, every statistic
        // is (numerically) zero for both outcomes
        let d = Dataset::new(vec![1], vec![], vec![]).unwrap();
        let s = StatisticKind::Euclidean;
        let e = exact_pvalue(&d, &ModelSpec::intercept_only(), &ModelSpec::all(0), &s, &cfg()).unwrap();
        assert_eq!(e.outcomes_enumerated, 2);
        assert!((e.total_weight - 1.0).abs() < 1e-10);
        assert!((e.p_exact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn three_observations_by_hand() {
        // Intercept-only fit of y = (1, 0, 0): mu = 1/3 for every row, so an
        // outcome with s ones has probability (1/3)^s (2/3)^(3-s) and refits
        // to mean s/3. Residual-ordered KS equals half the absolute residual
        // sum, s (3 - s) / 3:
        //   s = 0: 0      prob 8/27 (1 outcome)
        //   s = 1: 2/3    prob 4/27 each (3 outcomes), observed
        //   s = 2: 2/3    prob 2/27 each (3 outcomes)
        //   s = 3: 0      prob 1/27 (1 outcome)
        // Every s = 1 or s = 2 outcome ties the observed value:
        //   3 * 4/27 + 3 * 2/27 = 18/27.
        let d = Dataset::new(vec![1, 0, 0], vec![], vec![]).unwrap();
        let s = StatisticKind::KolmogorovSmirnov(OrderingPolicy::ByResidual);
        let e = exact_pvalue(&d, &ModelSpec::intercept_only(), &ModelSpec::all(0), &s, &cfg()).unwrap();
        assert_eq!(e.outcomes_enumerated, 8);
        assert!((e.total_weight - 1.0).abs() < 1e-12);
        assert!((e.p_exact - 18.0 / 27.0).abs() < 1e-9, "{}", e.p_exact);
    }

    #[test]
    fn weights_sum_to_one() {
        let d = Dataset::from_rows(
            vec![1, 0, 0, 1, 1, 0, 1, 0],
            &[
                vec![0.1],
                vec![0.5],
                vec![0.9],
                vec![0.3],
                vec![0.7],
                vec![0.2],
                vec![0.6],
                vec![0.4],
            ],
        )
        .unwrap();
        let s = StatisticKind::KolmogorovSmirnov(OrderingPolicy::ByFullMu);
        let e = exact_pvalue(&d, &ModelSpec::intercept_only(), &ModelSpec::all(1), &s, &cfg()).unwrap();
        assert!((e.total_weight - 1.0).abs() < 1e-10);
        assert!(e.p_exact > 0.0 && e.p_exact <= 1.0);
    }
}
