//! Least squares by Householder QR with column pivoting.

use crate::Scalar;

/// Dense column-major matrix.
#[derive(Debug, Clone)]
pub(crate) struct ColMajor<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> ColMajor<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }
}

/// Relative rank threshold for a column's remaining norm.
pub(crate) fn default_rank_tolerance<T: Scalar>() -> T {
    T::lit(1e-7).max(T::epsilon() * T::lit(10.0))
}

/// Minimizes `||a * beta - b||` in place.
///
/// Column 0 is factored first when `keep_first` is set (the intercept);
/// the remaining columns are pivoted by the fraction of their original
/// norm left after projecting out the columns already chosen. Columns whose
/// fraction falls to `rank_tol` or below are treated as linearly dependent
/// and receive a zero coefficient. `a` and `b` are overwritten.
///
/// Returns the coefficients and the numerical rank.
pub(crate) fn lstsq_pivoted<T: Scalar>(
    a: &mut ColMajor<T>,
    b: &mut [T],
    keep_first: bool,
    rank_tol: T,
) -> (Vec<T>, usize) {
    let (n, p) = (a.rows, a.cols);
    debug_assert_eq!(b.len(), n);
    let orig_norms: Vec<T> = (0..p).map(|j| norm(a.col(j))).collect();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut rank = 0;

    for k in 0..p.min(n) {
        // choose pivot among columns k..p
        let mut best = None;
        let mut best_ratio = T::zero();
        for c in k..p {
            let j = perm[c];
            if orig_norms[j] == T::zero() {
                continue;
            }
            let ratio = norm(&a.col(j)[k..]) / orig_norms[j];
            if k == 0 && keep_first && j == 0 {
                best = Some(c);
                best_ratio = ratio;
                break;
            }
            if ratio > best_ratio {
                best = Some(c);
                best_ratio = ratio;
            }
        }
        let Some(c) = best else { break };
        if best_ratio <= rank_tol {
            break;
        }
        perm.swap(k, c);
        let j = perm[k];

        // Householder reflector zeroing a[k+1.., j]
        let col = a.col(j);
        let alpha = norm(&col[k..]);
        let alpha = if col[k] > T::zero() { -alpha } else { alpha };
        let mut v: Vec<T> = col[k..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |acc, &t| acc + t * t);
        if vnorm2 > T::zero() {
            let two = T::lit(2.0);
            for &other in &perm[k..] {
                let target = &mut a.col_mut(other)[k..];
                let s = dot(&v, target) * two / vnorm2;
                for (t, &vi) in target.iter_mut().zip(&v) {
                    *t = *t - s * vi;
                }
            }
            let s = dot(&v, &b[k..]) * two / vnorm2;
            for (t, &vi) in b[k..].iter_mut().zip(&v) {
                *t = *t - s * vi;
            }
        }
        rank = k + 1;
    }

    // back substitution on the leading rank x rank block of R
    let mut coef_perm = vec![T::zero(); rank];
    for i in (0..rank).rev() {
        let mut acc = b[i];
        for c in (i + 1)..rank {
            acc = acc - a.col(perm[c])[i] * coef_perm[c];
        }
        coef_perm[i] = acc / a.col(perm[i])[i];
    }
    let mut coef = vec![T::zero(); p];
    for (c, value) in coef_perm.into_iter().enumerate() {
        coef[perm[c]] = value;
    }
    (coef, rank)
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm with scaling against overflow.
fn norm<T: Scalar>(v: &[T]) -> T {
    let scale = v.iter().fold(T::zero(), |acc, &t| acc.max(t.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let ss = v.iter().fold(T::zero(), |acc, &t| {
        let u = t / scale;
        acc + u * u
    });
    scale * ss.sqrt()
}
