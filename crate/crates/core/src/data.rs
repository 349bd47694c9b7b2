//! Domain types shared by every other module.

use std::collections::HashSet;

use crate::error::{DatasetViolation, GofError, Result};
use crate::Scalar;

/// Binary responses plus a row-major covariate matrix with named columns.
///
/// The intercept is implicit and never stored as a column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    y: Vec<u8>,
    x: Vec<T>,
    names: Vec<String>,
    n: usize,
    m: usize,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset and checks every invariant.
    pub fn new(y: Vec<u8>, x: Vec<T>, names: Vec<String>) -> Result<Self> {
        let d = Self::from_parts(y, x, names);
        validate(&d)?;
        Ok(d)
    }

    /// Builds a dataset without validation. `m` is taken from `names`.
    pub fn from_parts(y: Vec<u8>, x: Vec<T>, names: Vec<String>) -> Self {
        let n = y.len();
        let m = names.len();
        Self { y, x, names, n, m }
    }

    /// Builds a dataset from row vectors, synthesizing `x1..xm` names.
    pub fn from_rows(y: Vec<u8>, rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(k) = rows.iter().position(|r| r.len() != m) {
            return Err(DatasetViolation::Shape(format!("row {} has {} values, expected {m}", k + 1, rows[k].len())).into());
        }
        let x = rows.iter().flatten().copied().collect();
        Self::new(y, x, synthesized_names(m))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    /// Row-major covariate storage, `n * m` values.
    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.x[k * self.m..(k + 1) * self.m]
    }

    #[inline]
    pub fn value(&self, k: usize, j: usize) -> T {
        self.x[k * self.m + j]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|k| self.value(k, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    /// Number of observations with `y = 1`.
    pub fn ones(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    /// Same covariates, different responses.
    pub fn with_response(&self, y: Vec<u8>) -> Result<Self> {
        if y.len() != self.n {
            return Err(GofError::LengthMismatch {
                expected: self.n,
                actual: y.len(),
            });
        }
        let d = Self {
            y,
            ..self.clone()
        };
        validate(&d)?;
        Ok(d)
    }

    /// Keeps the listed columns, in the listed order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&j| j >= self.m) {
            return Err(GofError::ModelSpec(format!("column {bad} out of range for m = {}", self.m)));
        }
        let mut x = Vec::with_capacity(self.n * columns.len());
        for k in 0..self.n {
            x.extend(columns.iter().map(|&j| self.value(k, j)));
        }
        let names = columns.iter().map(|&j| self.names[j].clone()).collect();
        Self::new(self.y.clone(), x, names)
    }

    /// Appends covariate columns given column-wise.
    pub fn append_columns(&self, names: Vec<String>, columns: Vec<Vec<T>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(DatasetViolation::Shape("column names and columns differ in count".into()).into());
        }
        if let Some(c) = columns.iter().find(|c| c.len() != self.n) {
            return Err(GofError::LengthMismatch {
                expected: self.n,
                actual: c.len(),
            });
        }
        let m = self.m + columns.len();
        let mut x = Vec::with_capacity(self.n * m);
        for k in 0..self.n {
            x.extend_from_slice(self.row(k));
            x.extend(columns.iter().map(|c| c[k]));
        }
        let mut all_names = self.names.clone();
        all_names.extend(names);
        Self::new(self.y.clone(), x, all_names)
    }
}

/// `x1, x2, ..., xm`.
pub fn synthesized_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("x{j}")).collect()
}

/// Returns the first violated invariant of `d`, if any.
pub fn validate<T: Scalar>(d: &Dataset<T>) -> Result<(), DatasetViolation> {
    if d.n == 0 {
        return Err(DatasetViolation::Empty);
    }
    if d.names.len() != d.m {
        return Err(DatasetViolation::Shape(format!("{} names for {} columns", d.names.len(), d.m)));
    }
    if d.x.len() != d.n * d.m {
        return Err(DatasetViolation::Shape(format!(
            "covariate matrix has {} values, expected {} x {}",
            d.x.len(),
            d.n,
            d.m
        )));
    }
    if let Some(k) = d.y.iter().position(|&v| v > 1) {
        return Err(DatasetViolation::NonBinary { row: k + 1 });
    }
    if let Some(i) = d.x.iter().position(|v| !v.is_finite()) {
        return Err(DatasetViolation::NonFinite {
            row: i / d.m + 1,
            column: i % d.m + 1,
        });
    }
    let mut seen = HashSet::with_capacity(d.m);
    for name in &d.names {
        if !seen.insert(name.as_str()) {
            return Err(DatasetViolation::DuplicateName(name.clone()));
        }
    }
    Ok(())
}

/// Which covariates enter a logistic model, by column index. The intercept
/// is always present and not listed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    included: Vec<usize>,
}

impl ModelSpec {
    pub fn new(included: Vec<usize>, m: usize) -> Result<Self> {
        let spec = Self { included };
        spec.check(m)?;
        Ok(spec)
    }

    /// Intercept-only model.
    pub fn intercept_only() -> Self {
        Self { included: Vec::new() }
    }

    /// Every covariate `0..m`.
    pub fn all(m: usize) -> Self {
        Self {
            included: (0..m).collect(),
        }
    }

    pub fn included(&self) -> &[usize] {
        &self.included
    }

    /// Number of covariate terms (not counting the intercept).
    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    pub fn is_subset_of(&self, other: &ModelSpec) -> bool {
        self.included.iter().all(|j| other.included.contains(j))
    }

    pub fn check(&self, m: usize) -> Result<()> {
        let mut seen = HashSet::new();
        for &j in &self.included {
            if j >= m {
                return Err(GofError::ModelSpec(format!("column index {j} out of range for m = {m}")));
            }
            if !seen.insert(j) {
                return Err(GofError::ModelSpec(format!("column index {j} listed twice")));
            }
        }
        Ok(())
    }
}

/// Consecutive group sizes used by the Hosmer-Lemeshow statistic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupingScheme {
    sizes: Vec<usize>,
}

impl GroupingScheme {
    pub fn new(sizes: Vec<usize>, n: usize) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(GofError::Grouping("group sizes must be positive".into()));
        }
        let total: usize = sizes.iter().sum();
        if total != n {
            return Err(GofError::Grouping(format!("group sizes sum to {total}, expected {n}")));
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }
}

/// `g - 1` groups of `ceil(n / g)` observations, remainder in the last.
pub fn default_grouping(n: usize, g: usize) -> Result<GroupingScheme> {
    if g == 0 || g > n {
        return Err(GofError::Grouping(format!("need 1 <= g <= n, got g = {g}, n = {n}")));
    }
    let size = n.div_ceil(g);
    let used = (g - 1) * size;
    if used >= n {
        return Err(GofError::Grouping(format!(
            "{g} groups of {size} leave no observations for the last group (n = {n})"
        )));
    }
    let mut sizes = vec![size; g - 1];
    sizes.push(n - used);
    GroupingScheme::new(sizes, n)
}

const FINNEY: [(f64, f64, u8); 39] = [
    (1.57, 0.92, 1),
    (1.54, 1.04, 1),
    (1.10, 1.40, 1),
    (0.88, 1.18, 1),
    (0.90, 1.51, 1),
    (0.85, 1.54, 1),
    (0.78, 0.88, 0),
    (1.04, 1.23, 0),
    (0.95, 0.88, 0),
    (0.95, 0.65, 0),
    (0.90, 0.76, 0),
    (0.74, 1.44, 0),
    (0.78, 1.48, 0),
    (1.15, 1.37, 1),
    (0.88, 1.57, 1),
    (1.36, 1.21, 1),
    (1.51, 1.20, 1),
    (0.93, 1.15, 1),
    (1.23, 1.03, 0),
    (1.26, 1.26, 1),
    (0.60, 1.30, 0),
    (0.98, 1.13, 0),
    (1.13, 1.13, 0),
    (1.18, 1.13, 0),
    (1.20, 1.25, 1),
    (0.78, 1.18, 0),
    (1.26, 1.18, 1),
    (0.98, 1.28, 0),
    (1.28, 0.98, 1),
    (1.20, 0.60, 0),
    (1.43, 0.88, 1),
    (1.37, 0.48, 0),
    (1.04, 1.26, 0),
    (1.04, 1.34, 1),
    (1.08, 1.30, 1),
    (0.90, 1.52, 1),
    (0.98, 1.28, 0),
    (0.88, 1.28, 0),
    (1.11, 1.21, 1),
];

/// Finney's 39-observation vasoconstriction data: two covariates `x1`,
/// `x2` and a binary response.
pub fn embedded_finney<T: Scalar>() -> Dataset<T> {
    let y = FINNEY.iter().map(|r| r.2).collect();
    let x = FINNEY.iter().flat_map(|r| [T::lit(r.0), T::lit(r.1)]).collect();
    Dataset::from_parts(y, x, synthesized_names(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn finney_rows() {
        let d = embedded_finney::<f64>();
        assert_eq!((d.n(), d.m()), (39, 2));
        assert_eq!(d.row(0), &[1.57, 0.92]);
        assert_eq!(d.y()[0], 1);
        assert_eq!(d.row(38), &[1.11, 1.21]);
        assert_eq!(d.y()[38], 1);
        // counted by hand from the printed table
        let hand_count = [1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1]
            .iter()
            .sum::<usize>();
        assert_eq!(hand_count, 20);
        assert_eq!(d.ones(), 20);
        assert_eq!(validate(&d), Ok(()));
    }

    #[test]
    fn validation_reports() {
        let d = Dataset::from_parts(vec![0, 2, 1], vec![0.0f64, 1.0, 2.0], vec!["a".into()]);
        assert_eq!(validate(&d), Err(DatasetViolation::NonBinary { row: 2 }));
        assert_eq!(validate(&d).unwrap_err().to_string(), "non-binary dependent value at row 2");

        let d = Dataset::from_parts(vec![0, 1], vec![0.0f64, f64::NAN], vec!["a".into()]);
        assert!(matches!(validate(&d), Err(DatasetViolation::NonFinite { row: 2, column: 1 })));
        assert!(validate(&d).unwrap_err().to_string().starts_with("non-finite covariate"));

        let d = Dataset::from_parts(vec![0, 1], vec![0.0f64], vec!["a".into()]);
        assert!(matches!(validate(&d), Err(DatasetViolation::Shape(_))));

        let d = Dataset::from_parts(vec![0], vec![0.0f64, 1.0], vec!["a".into(), "a".into()]);
        assert_eq!(validate(&d), Err(DatasetViolation::DuplicateName("a".into())));

        let d = Dataset::<f64>::from_parts(vec![], vec![], vec![]);
        assert_eq!(validate(&d), Err(DatasetViolation::Empty));
    }

    #[test]
    fn grouping_examples() {
        let g = default_grouping(575, 10).unwrap();
        assert_eq!(g.sizes()[..9], [58; 9]);
        assert_eq!(g.sizes()[9], 53);
        assert_eq!(default_grouping(39, 5).unwrap().sizes(), &[8, 8, 8, 8, 7]);
        assert_eq!(default_grouping(39, 3).unwrap().sizes(), &[13, 13, 13]);
        assert_eq!(default_grouping(609, 10).unwrap().sizes().last(), Some(&60));
        assert!(default_grouping(5, 6).is_err());
        assert!(default_grouping(5, 0).is_err());
        // ceil(10/6) = 2, five groups of 2 use everything
        assert!(default_grouping(10, 6).is_err());
    }

    #[test]
    fn model_spec_checks() {
        assert!(ModelSpec::new(vec![0, 1], 2).is_ok());
        assert!(ModelSpec::new(vec![2], 2).is_err());
        assert!(ModelSpec::new(vec![1, 1], 2).is_err());
        assert!(ModelSpec::intercept_only().is_subset_of(&ModelSpec::all(3)));
        assert!(!ModelSpec::all(3).is_subset_of(&ModelSpec::new(vec![0], 3).unwrap()));
    }

    #[test]
    fn column_operations() {
        let d = embedded_finney::<f64>();
        let swapped = d.select_columns(&[1, 0]).unwrap();
        assert_eq!(swapped.names(), &["x2", "x1"]);
        assert_eq!(swapped.row(0), &[0.92, 1.57]);
        let grown = d.append_columns(vec!["u1".into()], vec![vec![0.5; 39]]).unwrap();
        assert_eq!(grown.m(), 3);
        assert_eq!(grown.row(1), &[1.54, 1.04, 0.5]);
        assert!(d.append_columns(vec!["x1".into()], vec![vec![0.5; 39]]).is_err());
        assert!(d.with_response(vec![0; 38]).is_err());
    }

    proptest! {
        #[test]
        fn default_grouping_sums_and_is_nonincreasing(n in 1usize..2000, g in 1usize..40) {
            if let Ok(scheme) = default_grouping(n, g) {
                prop_assert_eq!(scheme.total(), n);
                prop_assert_eq!(scheme.groups(), g);
                prop_assert!(scheme.sizes().windows(2).all(|w| w[0] >= w[1]));
                prop_assert!(scheme.sizes().iter().all(|&s| s >= 1));
            } else {
                let size = n.div_ceil(g.max(1));
                prop_assert!(g > n || (g - 1) * size >= n);
            }
        }
    }
}
