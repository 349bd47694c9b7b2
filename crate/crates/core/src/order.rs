//! Observation orderings for the cumulative statistics.

use std::cmp::Ordering;

use crate::error::{GofError, Result};
use crate::Scalar;

/// How observations are ordered before accumulating residuals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OrderingPolicy {
    /// Ascending full-model fitted means.
    ByFullMu,
    /// Ascending tested-model fitted means.
    ByTestedMu,
    /// Ascending residuals.
    ByResidual,
    /// A fixed permutation (0-based observation indices).
    Given(Vec<usize>),
}

/// A permutation `sigma` of `0..n` together with the policy that made it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationOrder {
    sigma: Vec<usize>,
    policy: OrderingPolicy,
}

impl ObservationOrder {
    pub fn identity(n: usize) -> Self {
        Self {
            sigma: (0..n).collect(),
            policy: OrderingPolicy::Given((0..n).collect()),
        }
    }

    /// Checks that `sigma` is a bijection on `0..n`.
    pub fn given(sigma: Vec<usize>) -> Result<Self> {
        check_permutation(&sigma)?;
        Ok(Self {
            policy: OrderingPolicy::Given(sigma.clone()),
            sigma,
        })
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn policy(&self) -> &OrderingPolicy {
        &self.policy
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.sigma.len()];
        for (pos, &k) in self.sigma.iter().enumerate() {
            inv[k] = pos;
        }
        inv
    }

    /// The order starting at position `shift`, wrapping around.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut sigma = self.sigma.clone();
        if !sigma.is_empty() {
            let len = sigma.len();
            sigma.rotate_left(shift % len);
        }
        Self {
            policy: OrderingPolicy::Given(sigma.clone()),
            sigma,
        }
    }
}

fn check_permutation(sigma: &[usize]) -> Result<()> {
    let mut seen = vec![false; sigma.len()];
    for &k in sigma {
        if k >= sigma.len() || std::mem::replace(&mut seen[k], true) {
            return Err(GofError::Ordering(format!("not a permutation of 0..{}", sigma.len())));
        }
    }
    Ok(())
}

/// Indices of `key` in ascending key order; ties keep index order.
pub fn stable_argsort<T: Scalar>(key: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by(|&a, &b| key[a].partial_cmp(&key[b]).unwrap_or(Ordering::Equal));
    idx
}

/// Builds the ordering for `policy` from whichever key it sorts on.
pub fn make_ordering<T: Scalar>(
    policy: &OrderingPolicy,
    mu_full: Option<&[T]>,
    mu_tested: Option<&[T]>,
    residuals: Option<&[T]>,
) -> Result<ObservationOrder> {
    let key = match policy {
        OrderingPolicy::ByFullMu => mu_full.ok_or_else(|| missing("full-model means"))?,
        OrderingPolicy::ByTestedMu => mu_tested.ok_or_else(|| missing("tested-model means"))?,
        OrderingPolicy::ByResidual => residuals.ok_or_else(|| missing("residuals"))?,
        OrderingPolicy::Given(sigma) => {
            check_permutation(sigma)?;
            return Ok(ObservationOrder {
                sigma: sigma.clone(),
                policy: policy.clone(),
            });
        }
    };
    Ok(ObservationOrder {
        sigma: stable_argsort(key),
        policy: policy.clone(),
    })
}

fn missing(what: &str) -> GofError {
    GofError::Ordering(format!("ordering policy needs {what}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sorts_by_full_mu() {
        let o = make_ordering(&OrderingPolicy::ByFullMu, Some(&[0.3, 0.1, 0.2]), None, None).unwrap();
        assert_eq!(o.sigma(), &[1, 2, 0]);
    }

    #[test]
    fn ties_keep_index_order() {
        let o = make_ordering(&OrderingPolicy::ByTestedMu, None, Some(&[0.4; 5]), None).unwrap();
        assert_eq!(o.sigma(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn by_residual() {
        let o = make_ordering(&OrderingPolicy::ByResidual, None, None, Some(&[0.5, -0.5])).unwrap();
        assert_eq!(o.sigma(), &[1, 0]);
    }

    #[test]
    fn missing_key_and_bad_permutation() {
        assert!(make_ordering::<f64>(&OrderingPolicy::ByFullMu, None, Some(&[0.1]), None).is_err());
        assert!(make_ordering::<f64>(&OrderingPolicy::Given(vec![0, 0]), None, None, None).is_err());
        assert!(ObservationOrder::given(vec![2, 0]).is_err());
        assert!(ObservationOrder::given(vec![1, 0]).is_ok());
    }

    proptest! {
        #[test]
        fn sigma_composed_with_inverse_is_identity(key in proptest::collection::vec(-1.0f64..1.0, 1..60)) {
            let o = make_ordering(&OrderingPolicy::ByResidual, None, None, Some(&key)).unwrap();
            let inv = o.inverse();
            for k in 0..key.len() {
                prop_assert_eq!(o.sigma()[inv[k]], k);
                prop_assert_eq!(inv[o.sigma()[k]], k);
            }
            prop_assert!(o.sigma().windows(2).all(|w| key[w[0]] <= key[w[1]]));
        }
    }
}
