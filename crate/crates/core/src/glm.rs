//! Maximum-likelihood logistic regression by iteratively reweighted least
//! squares, with step halving and rank-revealing solves.

use crate::data::{Dataset, ModelSpec};
use crate::error::{GofError, Result};
use crate::linalg::{default_rank_tolerance, lstsq_pivoted, ColMajor};
use crate::scalar::{sigmoid, softplus};
use crate::sum::NeumaierSum;
use crate::Scalar;

const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig<T> {
    pub max_iterations: usize,
    /// Convergence threshold on the absolute change in deviance.
    pub tolerance: T,
    /// Fitted means are clamped into `[mu_clamp, 1 - mu_clamp]`.
    pub mu_clamp: T,
}

impl<T: Scalar> Default for FitConfig<T> {
    /// `max_iterations = 100`, `tolerance = 1e-10`, `mu_clamp = 1e-10` in
    /// `f64`; both thresholds are raised to a small multiple of machine
    /// epsilon for narrower types.
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: T::lit(1e-10).max(T::epsilon() * T::lit(1e3)),
            mu_clamp: T::lit(1e-10).max(T::epsilon() * T::lit(16.0)),
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn check(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(GofError::FitConfig("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > T::zero()) {
            return Err(GofError::FitConfig("tolerance must be positive".into()));
        }
        if !(self.mu_clamp > T::zero() && self.mu_clamp < T::lit(0.5)) {
            return Err(GofError::FitConfig("mu_clamp must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel<T> {
    pub intercept: T,
    /// One coefficient per included covariate, in [`ModelSpec`] order.
    /// Covariates found linearly dependent on earlier ones get zero.
    pub coefficients: Vec<T>,
    /// Fitted means, clamped into `[eps, 1 - eps]`.
    pub mu: Vec<T>,
    /// False when the iteration limit was hit or some fitted mean had to be
    /// clamped (separation).
    pub converged: bool,
    pub iterations: usize,
    /// Deviance at the returned coefficients, before clamping.
    pub deviance: T,
    /// Numerical rank of the design including the intercept column.
    pub rank: usize,
}

/// Residuals `y - mu` of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector<T>(Vec<T>);

impl<T: Scalar> ResidualVector<T> {
    pub fn new(r: Vec<T>) -> Self {
        Self(r)
    }

    pub fn from_response(y: &[u8], mu: &[T]) -> Result<Self> {
        if y.len() != mu.len() {
            return Err(GofError::LengthMismatch {
                expected: y.len(),
                actual: mu.len(),
            });
        }
        Ok(Self(y.iter().zip(mu).map(|(&yk, &m)| response::<T>(yk) - m).collect()))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

#[inline]
pub(crate) fn response<T: Scalar>(y: u8) -> T {
    if y == 1 {
        T::one()
    } else {
        T::zero()
    }
}

/// Elementwise `y - mu` for a fit of `d`.
pub fn residuals<T: Scalar>(f: &FittedModel<T>, d: &Dataset<T>) -> Result<ResidualVector<T>> {
    ResidualVector::from_response(d.y(), &f.mu)
}

/// Fits `spec` to the responses of `d`.
pub fn fit<T: Scalar>(d: &Dataset<T>, spec: &ModelSpec, cfg: &FitConfig<T>) -> Result<FittedModel<T>> {
    Design::new(d, spec)?.fit(d.y(), cfg)
}

/// Design matrix (intercept column first) for one [`ModelSpec`], reusable
/// across any number of response vectors.
#[derive(Debug, Clone)]
pub struct Design<T> {
    x: ColMajor<T>,
    rank_tol: T,
}

impl<T: Scalar> Design<T> {
    pub fn new(d: &Dataset<T>, spec: &ModelSpec) -> Result<Self> {
        if d.n() == 0 {
            return Err(GofError::Dataset(crate::error::DatasetViolation::Empty));
        }
        spec.check(d.m())?;
        let n = d.n();
        let mut x = ColMajor::zeros(n, spec.len() + 1);
        x.col_mut(0).fill(T::one());
        for (c, &j) in spec.included().iter().enumerate() {
            let col = x.col_mut(c + 1);
            for (k, v) in col.iter_mut().enumerate() {
                *v = d.value(k, j);
            }
        }
        Ok(Self {
            x,
            rank_tol: default_rank_tolerance(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.rows
    }

    /// Number of coefficients including the intercept.
    pub fn p(&self) -> usize {
        self.x.cols
    }

    pub fn fit(&self, y: &[u8], cfg: &FitConfig<T>) -> Result<FittedModel<T>> {
        self.fit_inner(y, cfg, None, None)
    }

    /// Fits with a fixed additive offset in the linear predictor.
    pub fn fit_with_offset(&self, y: &[u8], cfg: &FitConfig<T>, offset: &[T]) -> Result<FittedModel<T>> {
        if offset.len() != self.n() {
            return Err(GofError::LengthMismatch {
                expected: self.n(),
                actual: offset.len(),
            });
        }
        self.fit_inner(y, cfg, Some(offset), None)
    }

    /// Like [`Design::fit`], also returning the deviance after every
    /// accepted iterate (starting from the all-zero coefficients).
    pub fn fit_traced(&self, y: &[u8], cfg: &FitConfig<T>) -> Result<(FittedModel<T>, Vec<T>)> {
        let mut trace = Vec::new();
        let f = self.fit_inner(y, cfg, None, Some(&mut trace))?;
        Ok((f, trace))
    }

    fn linear_predictor(&self, beta: &[T], offset: Option<&[T]>, out: &mut [T]) {
        match offset {
            Some(o) => out.copy_from_slice(o),
            None => out.fill(T::zero()),
        }
        for (j, &b) in beta.iter().enumerate() {
            if b == T::zero() {
                continue;
            }
            for (e, &xv) in out.iter_mut().zip(self.x.col(j)) {
                *e = *e + b * xv;
            }
        }
    }

    fn fit_inner(
        &self,
        y: &[u8],
        cfg: &FitConfig<T>,
        offset: Option<&[T]>,
        mut trace: Option<&mut Vec<T>>,
    ) -> Result<FittedModel<T>> {
        cfg.check()?;
        let (n, p) = (self.n(), self.p());
        if y.len() != n {
            return Err(GofError::LengthMismatch {
                expected: n,
                actual: y.len(),
            });
        }
        let weight_floor = T::min_positive_value().sqrt();
        let half = T::lit(0.5);

        let mut beta = vec![T::zero(); p];
        let mut eta = vec![T::zero(); n];
        self.linear_predictor(&beta, offset, &mut eta);
        let mut dev = deviance_from_eta(y, &eta);
        if let Some(t) = trace.as_deref_mut() {
            t.push(dev);
        }

        let mut a = ColMajor::zeros(n, p);
        let mut z = vec![T::zero(); n];
        let mut eta_new = vec![T::zero(); n];
        let mut converged = false;
        let mut iterations = 0;
        let mut rank = p;

        for iter in 1..=cfg.max_iterations {
            for k in 0..n {
                let e = eta[k];
                let mu = sigmoid(e);
                let one_minus = sigmoid(-e);
                let w = (mu * one_minus).max(weight_floor);
                let r = if y[k] == 1 { one_minus } else { -mu };
                let off = offset.map_or(T::zero(), |o| o[k]);
                let sw = w.sqrt();
                z[k] = (e - off + r / w) * sw;
                for j in 0..p {
                    a.col_mut(j)[k] = self.x.col(j)[k] * sw;
                }
            }
            let (mut beta_new, r) = lstsq_pivoted(&mut a, &mut z, true, self.rank_tol);
            rank = r;
            self.linear_predictor(&beta_new, offset, &mut eta_new);
            let mut dev_new = deviance_from_eta(y, &eta_new);

            // near the optimum the deviance is flat to rounding; a spurious
            // "increase" there must not trigger halving
            let slack = T::epsilon() * T::lit(64.0) * (T::one() + dev);
            let mut halvings = 0;
            while !(dev_new <= dev + slack) && halvings < MAX_HALVINGS {
                for (bn, &b) in beta_new.iter_mut().zip(&beta) {
                    *bn = (*bn + b) * half;
                }
                self.linear_predictor(&beta_new, offset, &mut eta_new);
                dev_new = deviance_from_eta(y, &eta_new);
                halvings += 1;
            }
            if !(dev_new <= dev + slack) {
                break;
            }

            let change = dev - dev_new;
            // deviance is flat near the optimum; also require a small step so
            // coefficients are settled, not just the deviance. Newton converges
            // quadratically, so a step this small leaves a score at rounding level.
            let scale = beta_new.iter().fold(T::one(), |acc, b| acc.max(b.abs()));
            let step = beta_new.iter().zip(&beta).fold(T::zero(), |acc, (bn, b)| acc.max((*bn - *b).abs()));
            beta = beta_new;
            std::mem::swap(&mut eta, &mut eta_new);
            dev = dev_new;
            iterations = iter;
            if let Some(t) = trace.as_deref_mut() {
                t.push(dev);
            }
            if change < cfg.tolerance && step <= cfg.tolerance.sqrt() * T::lit(1e-2) * scale {
                converged = true;
                break;
            }
        }

        let lo = cfg.mu_clamp;
        let hi = T::one() - cfg.mu_clamp;
        let mut clamped = false;
        let mu = eta
            .iter()
            .map(|&e| {
                let m = sigmoid(e);
                if m < lo {
                    clamped = true;
                    lo
                } else if m > hi {
                    clamped = true;
                    hi
                } else {
                    m
                }
            })
            .collect();

        Ok(FittedModel {
            intercept: beta[0],
            coefficients: beta[1..].to_vec(),
            mu,
            converged: converged && !clamped,
            iterations,
            deviance: dev,
            rank,
        })
    }
}

/// Bernoulli deviance from the linear predictor, `2 * sum softplus(-+eta)`.
fn deviance_from_eta<T: Scalar>(y: &[u8], eta: &[T]) -> T {
    let mut acc = NeumaierSum::new();
    for (&yk, &e) in y.iter().zip(eta) {
        acc.add(if yk == 1 { softplus(-e) } else { softplus(e) });
    }
    acc.value() * T::lit(2.0)
}
