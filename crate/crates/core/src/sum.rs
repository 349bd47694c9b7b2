//! Compensated (Kahan-Babuska-Neumaier) summation.

use std::ops::AddAssign;

use crate::Scalar;

/// Running sum carrying a separate compensation term.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> NeumaierSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp = self.comp + ((self.sum - t) + value);
        } else {
            self.comp = self.comp + ((value - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Scalar> AddAssign<T> for NeumaierSum<T> {
    #[inline]
    fn add_assign(&mut self, rhs: T) {
        self.add(rhs);
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let values = [1.0f64, 1e100, 1.0, -1e100];
        assert_eq!(values.iter().copied().sum::<f64>(), 0.0);
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn many_tenths() {
        let s = compensated_sum(std::iter::repeat(0.1f64).take(1_000_000));
        assert!((s - 100_000.0).abs() < 1e-9);
    }
}
