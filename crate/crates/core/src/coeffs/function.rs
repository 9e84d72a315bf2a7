use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::CoeffError;
use crate::scalar::{lit, Scalar};

/// Storage layout of a [`CoefficientFn`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FnKind {
    Constant,
    #[serde(rename = "pwlinear")]
    PiecewiseLinear,
    #[serde(rename = "pwpoly")]
    PiecewisePolynomial,
    Table,
    /// Pointwise composition of other coefficient functions (synthesized
    /// entries, dual coefficients, closures). Not representable in JSON.
    Derived,
}

type FnRef<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

#[derive(Clone)]
enum Repr<S: Scalar> {
    Constant(S),
    Linear { values: Vec<S> },
    Poly { coeffs: Vec<Vec<S>> },
    Table { values: Vec<S>, order: usize },
    Derived(FnRef<S>),
}

/// A continuous scalar function of time on `[0, T]`, extended by its value at
/// `t = 0` for negative times.
#[derive(Clone)]
pub struct CoefficientFn<S: Scalar> {
    knots: Vec<S>,
    repr: Repr<S>,
}

impl<S: Scalar> fmt::Debug for CoefficientFn<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientFn")
            .field("kind", &self.kind())
            .field("knots", &self.knots.len())
            .finish()
    }
}

fn continuity_tol<S: Scalar>() -> S {
    lit::<S>(1e-12).max(S::epsilon() * lit(8.0))
}

fn check_knots<S: Scalar>(knots: &[S], horizon: S) -> Result<(), CoeffError> {
    if !(horizon > S::zero()) || !horizon.is_finite() {
        return Err(CoeffError::InvalidHorizon(horizon.to_f64_lossy()));
    }
    if knots.len() < 2 {
        return Err(CoeffError::InvalidKnots("need at least two knots".into()));
    }
    if knots[0] != S::zero() {
        return Err(CoeffError::InvalidKnots("first knot must be 0".into()));
    }
    let last = *knots.last().unwrap();
    if (last - horizon).abs() > continuity_tol::<S>() * horizon.max(S::one()) {
        return Err(CoeffError::InvalidKnots(format!(
            "last knot {last} must equal horizon {horizon}"
        )));
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CoeffError::InvalidKnots(
            "knots must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn horner<S: Scalar>(coeffs: &[S], x: S) -> S {
    coeffs.iter().rev().fold(S::zero(), |acc, &c| acc * x + c)
}

impl<S: Scalar> CoefficientFn<S> {
    pub fn constant(value: S, horizon: S) -> Self {
        Self {
            knots: vec![S::zero(), horizon],
            repr: Repr::Constant(value),
        }
    }

    pub fn piecewise_linear(knots: Vec<S>, values: Vec<S>) -> Result<Self, CoeffError> {
        let horizon = *knots.last().ok_or_else(|| CoeffError::InvalidKnots("empty".into()))?;
        check_knots(&knots, horizon)?;
        if values.len() != knots.len() {
            return Err(CoeffError::Shape(format!(
                "pwlinear needs one value per knot ({} knots, {} values)",
                knots.len(),
                values.len()
            )));
        }
        Ok(Self {
            knots,
            repr: Repr::Linear { values },
        })
    }

    /// Piecewise polynomial; piece `i` is `sum_j coeffs[i][j] * (t - knots[i])^j`.
    pub fn piecewise_polynomial(knots: Vec<S>, coeffs: Vec<Vec<S>>) -> Result<Self, CoeffError> {
        let horizon = *knots.last().ok_or_else(|| CoeffError::InvalidKnots("empty".into()))?;
        check_knots(&knots, horizon)?;
        if coeffs.len() + 1 != knots.len() || coeffs.iter().any(|c| c.is_empty()) {
            return Err(CoeffError::Shape(format!(
                "pwpoly needs one non-empty coefficient list per piece ({} pieces, {} lists)",
                knots.len() - 1,
                coeffs.len()
            )));
        }
        let tol = continuity_tol::<S>();
        for i in 1..coeffs.len() {
            let left = horner(&coeffs[i - 1], knots[i] - knots[i - 1]);
            let right = coeffs[i][0];
            let scale = left.abs().max(right.abs()).max(S::one());
            if (left - right).abs() > tol * scale {
                return Err(CoeffError::Discontinuous {
                    knot: knots[i].to_f64_lossy(),
                    jump: (left - right).to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            knots,
            repr: Repr::Poly { coeffs },
        })
    }

    /// Tabulated values with local Lagrange interpolation of the given order.
    /// Every interpolation window contains both ends of its interval, so the
    /// assembled function passes through each tabulated value and is continuous.
    pub fn table(knots: Vec<S>, values: Vec<S>, order: usize) -> Result<Self, CoeffError> {
        let horizon = *knots.last().ok_or_else(|| CoeffError::InvalidKnots("empty".into()))?;
        check_knots(&knots, horizon)?;
        if values.len() != knots.len() {
            return Err(CoeffError::Shape("table needs one value per knot".into()));
        }
        if order == 0 || order >= knots.len() {
            return Err(CoeffError::Shape(format!(
                "table interpolation order must be in 1..{}",
                knots.len()
            )));
        }
        Ok(Self {
            knots,
            repr: Repr::Table { values, order },
        })
    }

    /// Wraps an arbitrary continuous function. `knots` mark the points where
    /// the function may have kinks; they are added to validation grids.
    pub fn from_fn<F>(knots: Vec<S>, f: F) -> Result<Self, CoeffError>
    where
        F: Fn(S) -> S + Send + Sync + 'static,
    {
        let horizon = *knots.last().ok_or_else(|| CoeffError::InvalidKnots("empty".into()))?;
        check_knots(&knots, horizon)?;
        Ok(Self {
            knots,
            repr: Repr::Derived(Arc::new(f)),
        })
    }

    /// Pointwise combination of two functions on the union of their knots.
    pub fn combine<F>(a: &Self, b: &Self, f: F) -> Self
    where
        F: Fn(S, S) -> S + Send + Sync + 'static,
    {
        let knots = merge_knots(&a.knots, &b.knots);
        let (a, b) = (a.clone(), b.clone());
        Self {
            knots,
            repr: Repr::Derived(Arc::new(move |t| f(a.value(t), b.value(t)))),
        }
    }

    /// Pointwise map of a single function.
    pub fn map<F>(a: &Self, f: F) -> Self
    where
        F: Fn(S) -> S + Send + Sync + 'static,
    {
        let a = a.clone();
        Self {
            knots: a.knots.clone(),
            repr: Repr::Derived(Arc::new(move |t| f(a.value(t)))),
        }
    }

    pub fn kind(&self) -> FnKind {
        match self.repr {
            Repr::Constant(_) => FnKind::Constant,
            Repr::Linear { .. } => FnKind::PiecewiseLinear,
            Repr::Poly { .. } => FnKind::PiecewisePolynomial,
            Repr::Table { .. } => FnKind::Table,
            Repr::Derived(_) => FnKind::Derived,
        }
    }

    pub fn knots(&self) -> &[S] {
        &self.knots
    }

    pub fn horizon(&self) -> S {
        *self.knots.last().unwrap()
    }

    /// Returns the constant value when the function is of constant kind.
    pub fn as_constant(&self) -> Option<S> {
        match self.repr {
            Repr::Constant(v) => Some(v),
            _ => None,
        }
    }

    /// Evaluates the function. Negative times use the value at `t = 0`.
    pub fn eval(&self, t: S) -> Result<S, CoeffError> {
        let horizon = self.horizon();
        let slack = continuity_tol::<S>() * horizon.max(S::one());
        if t > horizon + slack || t.is_nan() {
            return Err(CoeffError::TimeOutOfRange {
                t: t.to_f64_lossy(),
                horizon: horizon.to_f64_lossy(),
            });
        }
        Ok(self.value(t))
    }

    /// Infallible evaluation with `t` clamped into `[0, T]`.
    pub fn value(&self, t: S) -> S {
        let t = t.max(S::zero()).min(self.horizon());
        match &self.repr {
            Repr::Constant(v) => *v,
            Repr::Linear { values } => {
                let i = self.piece(t);
                let (t0, t1) = (self.knots[i], self.knots[i + 1]);
                let w = (t - t0) / (t1 - t0);
                values[i] + (values[i + 1] - values[i]) * w
            }
            Repr::Poly { coeffs } => {
                let i = self.piece(t);
                horner(&coeffs[i], t - self.knots[i])
            }
            Repr::Table { values, order } => {
                let i = self.piece(t);
                lagrange_window(&self.knots, values, *order, i, t)
            }
            Repr::Derived(f) => f(t),
        }
    }

    /// Index `i` of the piece `[knots[i], knots[i+1]]` holding `t`.
    fn piece(&self, t: S) -> usize {
        let n = self.knots.len();
        match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }
}

fn lagrange_window<S: Scalar>(knots: &[S], values: &[S], order: usize, piece: usize, t: S) -> S {
    let n = knots.len();
    let width = order + 1;
    // window [start, start + width) containing piece and piece + 1
    let mut start = (piece + 1).saturating_sub(width / 2);
    if start + width > n {
        start = n - width;
    }
    let idx = start..start + width;
    let mut sum = S::zero();
    for i in idx.clone() {
        let mut basis = S::one();
        for j in idx.clone() {
            if i != j {
                basis *= (t - knots[j]) / (knots[i] - knots[j]);
            }
        }
        sum += basis * values[i];
    }
    sum
}

pub(crate) fn merge_knots<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out: Vec<S> = a.iter().chain(b.iter()).copied().collect();
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out.dedup_by(|x, y| (*x - *y).abs() <= S::epsilon() * x.abs().max(S::one()));
    out
}
