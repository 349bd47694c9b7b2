//! Goodness-of-fit statistics for fitted Bernoulli means.
//!
//! The cumulative statistics (Kolmogorov-Smirnov, Kuiper) depend on an
//! ordering of the observations; Hosmer-Lemeshow depends on a grouping; the
//! rest are sums over observations.

use crate::data::GroupingScheme;
use crate::error::{GofError, Result};
use crate::glm::{response, ResidualVector};
use crate::order::{make_ordering, stable_argsort, ObservationOrder, OrderingPolicy};
use crate::sum::NeumaierSum;
use crate::Scalar;

/// Which fitted means drive a Hosmer-Lemeshow grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeanSource {
    /// Full model, all covariates.
    Full,
    /// Tested model.
    Tested,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StatisticKind {
    KolmogorovSmirnov(OrderingPolicy),
    Kuiper(OrderingPolicy),
    /// Half the sum of absolute residuals.
    HalfAbsSum,
    Deviance,
    FreemanTukey,
    PearsonChi2,
    /// Sum of squared residuals.
    Euclidean,
    HosmerLemeshow {
        grouping: GroupingScheme,
        source: MeanSource,
    },
}

impl StatisticKind {
    /// True when evaluating needs the full-model means.
    pub fn needs_full_fit(&self) -> bool {
        matches!(
            self,
            StatisticKind::KolmogorovSmirnov(OrderingPolicy::ByFullMu)
                | StatisticKind::Kuiper(OrderingPolicy::ByFullMu)
                | StatisticKind::HosmerLemeshow {
                    source: MeanSource::Full,
                    ..
                }
        )
    }

    /// Human-readable row label.
    pub fn label(&self) -> String {
        fn order(p: &OrderingPolicy) -> &'static str {
            match p {
                OrderingPolicy::ByFullMu => "ordered by full-model means",
                OrderingPolicy::ByTestedMu => "ordered by tested-model means",
                OrderingPolicy::ByResidual => "ordered by residuals",
                OrderingPolicy::Given(_) => "given ordering",
            }
        }
        match self {
            StatisticKind::KolmogorovSmirnov(p) => format!("Kolmogorov-Smirnov ({})", order(p)),
            StatisticKind::Kuiper(p) => format!("Kuiper ({})", order(p)),
            StatisticKind::HalfAbsSum => "Half absolute residual sum".into(),
            StatisticKind::Deviance => "G^2 (deviance)".into(),
            StatisticKind::FreemanTukey => "Freeman-Tukey (Hellinger distance)".into(),
            StatisticKind::PearsonChi2 => "chi^2 (Pearson residuals squared)".into(),
            StatisticKind::Euclidean => "Euclidean distance (unweighted chi^2)".into(),
            StatisticKind::HosmerLemeshow { grouping, source } => format!(
                "Hosmer-Lemeshow ({} groups from {} means)",
                grouping.groups(),
                match source {
                    MeanSource::Full => "full-model",
                    MeanSource::Tested => "tested-model",
                }
            ),
        }
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(GofError::LengthMismatch { expected, actual })
    }
}

/// Running partial sums of `r` along `o`, reported as (max, min, max |.|).
fn partial_sum_extremes<T: Scalar>(r: &ResidualVector<T>, o: &ObservationOrder) -> Result<(T, T, T)> {
    check_len(r.len(), o.len())?;
    if o.is_empty() {
        return Ok((T::zero(), T::zero(), T::zero()));
    }
    let r = r.as_slice();
    let mut acc = NeumaierSum::new();
    let mut hi = T::neg_infinity();
    let mut lo = T::infinity();
    let mut abs_hi = T::zero();
    for &k in o.sigma() {
        acc.add(r[k]);
        let s = acc.value();
        hi = hi.max(s);
        lo = lo.min(s);
        abs_hi = abs_hi.max(s.abs());
    }
    Ok((hi, lo, abs_hi))
}

/// Largest absolute partial sum of the residuals along `o`.
pub fn ks_statistic<T: Scalar>(r: &ResidualVector<T>, o: &ObservationOrder) -> Result<T> {
    partial_sum_extremes(r, o).map(|(_, _, abs_hi)| abs_hi)
}

/// Largest minus smallest partial sum along `o`.
pub fn kuiper_statistic<T: Scalar>(r: &ResidualVector<T>, o: &ObservationOrder) -> Result<T> {
    partial_sum_extremes(r, o).map(|(hi, lo, _)| hi - lo)
}

/// `sum |r_k| / 2`.
pub fn half_abs_sum<T: Scalar>(r: &ResidualVector<T>) -> T {
    let mut acc = NeumaierSum::new();
    for &v in r.as_slice() {
        acc.add(v.abs());
    }
    acc.value() * T::lit(0.5)
}

fn check_open_unit<T: Scalar>(mu: &[T]) -> Result<()> {
    match mu.iter().position(|&m| !(m > T::zero() && m < T::one())) {
        None => Ok(()),
        Some(k) => Err(GofError::Numerical(format!("fitted mean at row {} is not inside (0, 1)", k + 1))),
    }
}

/// `-2 sum [y ln mu + (1 - y) ln(1 - mu)]`.
pub fn deviance<T: Scalar>(y: &[u8], mu: &[T]) -> Result<T> {
    check_len(y.len(), mu.len())?;
    check_open_unit(mu)?;
    let mut acc = NeumaierSum::new();
    for (&yk, &m) in y.iter().zip(mu) {
        acc.add(if yk == 1 { m.ln() } else { (-m).ln_1p() });
    }
    Ok(acc.value() * T::lit(-2.0))
}

/// The deviance written without the responses,
/// `2 sum mu ln((1 - mu) / mu) - 2 sum ln(1 - mu)`.
///
/// Equal to [`deviance`] whenever `mu` solves the likelihood equations of a
/// logistic model with intercept.
pub fn deviance_from_means<T: Scalar>(mu: &[T]) -> Result<T> {
    check_open_unit(mu)?;
    let mut acc = NeumaierSum::new();
    for &m in mu {
        let l1 = (-m).ln_1p();
        acc.add(m * (l1 - m.ln()) - l1);
    }
    Ok(acc.value() * T::lit(2.0))
}

/// `4 sum (sqrt y - sqrt mu)^2`, the squared Hellinger distance between
/// the observed and fitted values, scaled like a chi^2.
pub fn freeman_tukey<T: Scalar>(y: &[u8], mu: &[T]) -> Result<T> {
    check_len(y.len(), mu.len())?;
    check_open_unit(mu)?;
    let mut acc = NeumaierSum::new();
    for (&yk, &m) in y.iter().zip(mu) {
        let a = response::<T>(yk).sqrt() - m.sqrt();
        acc.add(a * a);
    }
    Ok(acc.value() * T::lit(4.0))
}

/// Sum of squared Pearson residuals.
pub fn pearson_chi2<T: Scalar>(y: &[u8], mu: &[T]) -> Result<T> {
    check_len(y.len(), mu.len())?;
    check_open_unit(mu)?;
    let mut acc = NeumaierSum::new();
    for (&yk, &m) in y.iter().zip(mu) {
        let r = response::<T>(yk) - m;
        acc.add(r * r / (m * (T::one() - m)));
    }
    Ok(acc.value())
}

/// `sum (y - mu)^2`.
pub fn euclidean_sq<T: Scalar>(y: &[u8], mu: &[T]) -> Result<T> {
    check_len(y.len(), mu.len())?;
    let mut acc = NeumaierSum::new();
    for (&yk, &m) in y.iter().zip(mu) {
        let r = response::<T>(yk) - m;
        acc.add(r * r);
    }
    Ok(acc.value())
}

/// Hosmer-Lemeshow statistic over consecutive groups of observations sorted
/// by `mu_for_grouping`.
///
/// Group `k` of size `s` contributes `(n_k - eta_k)^2 / (eta_k (1 - eta_k / s))`
/// where `n_k` counts ones and `eta_k` sums `mu_for_value` over the group.
/// A group whose denominator vanishes contributes zero if `n_k == eta_k` and
/// `+inf` otherwise.
pub fn hosmer_lemeshow<T: Scalar>(
    y: &[u8],
    mu_for_value: &[T],
    mu_for_grouping: &[T],
    grouping: &GroupingScheme,
) -> Result<T> {
    let n = y.len();
    check_len(n, mu_for_value.len())?;
    check_len(n, mu_for_grouping.len())?;
    if grouping.total() != n {
        return Err(GofError::Grouping(format!("group sizes sum to {}, expected {n}", grouping.total())));
    }
    let order = stable_argsort(mu_for_grouping);
    let mut total = NeumaierSum::new();
    let mut start = 0;
    for &size in grouping.sizes() {
        let members = &order[start..start + size];
        start += size;
        let observed = T::from_count(members.iter().filter(|&&k| y[k] == 1).count());
        let mut eta = NeumaierSum::new();
        for &k in members {
            eta.add(mu_for_value[k]);
        }
        let eta = eta.value();
        let s = T::from_count(size);
        let denom = eta * (T::one() - eta / s);
        let diff = observed - eta;
        if denom > T::zero() {
            total.add(diff * diff / denom);
        } else if diff != T::zero() {
            return Ok(T::infinity());
        }
    }
    Ok(total.value())
}

/// Evaluates every statistic in `kinds` for one response vector.
///
/// `mu_full` is required only when some statistic orders or groups by the
/// full-model means. This is the single evaluation path used for observed
/// data, simulations, and exhaustive enumeration.
pub fn evaluate_all<T: Scalar>(
    kinds: &[StatisticKind],
    y: &[u8],
    mu_tested: &[T],
    mu_full: Option<&[T]>,
) -> Result<Vec<T>> {
    let r = ResidualVector::from_response(y, mu_tested)?;
    if let Some(f) = mu_full {
        check_len(y.len(), f.len())?;
    }
    kinds
        .iter()
        .map(|kind| match kind {
            StatisticKind::KolmogorovSmirnov(p) => {
                let o = make_ordering(p, mu_full, Some(mu_tested), Some(r.as_slice()))?;
                ks_statistic(&r, &o)
            }
            StatisticKind::Kuiper(p) => {
                let o = make_ordering(p, mu_full, Some(mu_tested), Some(r.as_slice()))?;
                kuiper_statistic(&r, &o)
            }
            StatisticKind::HalfAbsSum => Ok(half_abs_sum(&r)),
            StatisticKind::Deviance => deviance(y, mu_tested),
            StatisticKind::FreemanTukey => freeman_tukey(y, mu_tested),
            StatisticKind::PearsonChi2 => pearson_chi2(y, mu_tested),
            StatisticKind::Euclidean => euclidean_sq(y, mu_tested),
            StatisticKind::HosmerLemeshow { grouping, source } => {
                let keys = match source {
                    MeanSource::Tested => mu_tested,
                    MeanSource::Full => {
                        mu_full.ok_or_else(|| GofError::Ordering("grouping needs full-model means".into()))?
                    }
                };
                hosmer_lemeshow(y, mu_tested, keys, grouping)
            }
        })
        .collect()
}
