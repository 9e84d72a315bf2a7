use super::function::{merge_knots, CoefficientFn};
use super::CoeffError;
use crate::scalar::Scalar;

/// The ten time-dependent coefficients of a scalar linear stochastic
/// Hamiltonian system together with its horizon `T`.
///
/// Field `weight` is the function multiplying the eigenvalue parameter in the
/// forward drift (`h22`); the others are the entries `H_ij`.
#[derive(Clone, Debug)]
pub struct CoefficientSet<S: Scalar> {
    pub h11: CoefficientFn<S>,
    pub h12: CoefficientFn<S>,
    pub h13: CoefficientFn<S>,
    pub h21: CoefficientFn<S>,
    pub h22: CoefficientFn<S>,
    pub h23: CoefficientFn<S>,
    pub h31: CoefficientFn<S>,
    pub h32: CoefficientFn<S>,
    pub h33: CoefficientFn<S>,
    pub weight: CoefficientFn<S>,
    horizon: S,
}

/// All coefficients evaluated at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pointwise<S> {
    pub h11: S,
    pub h12: S,
    pub h13: S,
    pub h21: S,
    pub h22: S,
    pub h23: S,
    pub h31: S,
    pub h32: S,
    pub h33: S,
    pub weight: S,
}

impl<S: Scalar> Pointwise<S> {
    /// `2 H21 + H13^2`, the linear coefficient of the reduced Riccati equation.
    pub fn linear(&self) -> S {
        self.h21 + self.h21 + self.h13 * self.h13
    }

    /// `H22 - H33 H13^2 - lambda h22`, the quadratic coefficient of the reduced
    /// Riccati equation.
    pub fn quadratic(&self, lambda: S) -> S {
        self.h22 - self.h33 * self.h13 * self.h13 - lambda * self.weight
    }

    /// Symmetrized monotonicity matrix built from
    /// `[[-H11,-H12,-H13],[H21,H22,H23],[H31,H32,H33]]`.
    pub fn monotonicity_matrix(&self) -> [[S; 3]; 3] {
        let half = S::one() / (S::one() + S::one());
        let m = [
            [-self.h11, -self.h12, -self.h13],
            [self.h21, self.h22, self.h23],
            [self.h31, self.h32, self.h33],
        ];
        let mut s = [[S::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = (m[i][j] + m[j][i]) * half;
            }
        }
        s
    }
}

impl<S: Scalar> CoefficientSet<S> {
    /// Assembles a set. `h23 = None` synthesizes `H23 = -H33 H13` pointwise.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        horizon: S,
        h11: CoefficientFn<S>,
        h12: CoefficientFn<S>,
        h13: CoefficientFn<S>,
        h21: CoefficientFn<S>,
        h22: CoefficientFn<S>,
        h23: Option<CoefficientFn<S>>,
        h31: CoefficientFn<S>,
        h32: CoefficientFn<S>,
        h33: CoefficientFn<S>,
        weight: CoefficientFn<S>,
    ) -> Result<Self, CoeffError> {
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(CoeffError::InvalidHorizon(horizon.to_f64_lossy()));
        }
        let h23 = h23.unwrap_or_else(|| CoefficientFn::combine(&h33, &h13, |a, b| -(a * b)));
        let set = Self {
            h11,
            h12,
            h13,
            h21,
            h22,
            h23,
            h31,
            h32,
            h33,
            weight,
            horizon,
        };
        for f in set.functions() {
            let fh = f.horizon();
            if (fh - horizon).abs() > S::epsilon() * horizon.max(S::one()) * (S::one() + S::one()) {
                return Err(CoeffError::InvalidKnots(format!(
                    "coefficient horizon {fh} differs from T = {horizon}"
                )));
            }
        }
        Ok(set)
    }

    /// Symmetric system (`H12 = H21`, `H31 = H13`, `H32 = H23 = -H33 H13`)
    /// from its independent entries.
    pub fn symmetric(
        horizon: S,
        h11: CoefficientFn<S>,
        h21: CoefficientFn<S>,
        h22: CoefficientFn<S>,
        h13: CoefficientFn<S>,
        h33: CoefficientFn<S>,
        weight: CoefficientFn<S>,
    ) -> Result<Self, CoeffError> {
        let h23 = CoefficientFn::combine(&h33, &h13, |a, b| -(a * b));
        Self::new(
            horizon,
            h11,
            h21.clone(),
            h13.clone(),
            h21,
            h22,
            Some(h23.clone()),
            h13,
            h23,
            h33,
            weight,
        )
    }

    /// Constant-coefficient symmetric system.
    pub fn constant_symmetric(horizon: S, h11: S, h21: S, h22: S, h13: S, h33: S, weight: S) -> Self {
        let c = |v| CoefficientFn::constant(v, horizon);
        let h23 = -(h33 * h13);
        Self::new(
            horizon,
            c(h11),
            c(h21),
            c(h13),
            c(h21),
            c(h22),
            Some(c(h23)),
            c(h13),
            c(h23),
            c(h33),
            c(weight),
        )
        .expect("constant coefficients share the horizon")
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn functions(&self) -> [&CoefficientFn<S>; 10] {
        [
            &self.h11, &self.h12, &self.h13, &self.h21, &self.h22, &self.h23, &self.h31, &self.h32,
            &self.h33, &self.weight,
        ]
    }

    /// Union of all knots.
    pub fn knots(&self) -> Vec<S> {
        self.functions()
            .iter()
            .fold(Vec::new(), |acc, f| merge_knots(&acc, f.knots()))
    }

    /// Every coefficient is of constant kind.
    pub fn is_constant(&self) -> bool {
        self.functions().iter().all(|f| f.as_constant().is_some())
    }

    /// Evaluates every coefficient at `t`; errors when `t > T`.
    pub fn eval(&self, t: S) -> Result<Pointwise<S>, CoeffError> {
        if t > self.horizon * (S::one() + S::epsilon() * S::of(16.0)) || t.is_nan() {
            return Err(CoeffError::TimeOutOfRange {
                t: t.to_f64_lossy(),
                horizon: self.horizon.to_f64_lossy(),
            });
        }
        Ok(self.at(t))
    }

    /// Infallible evaluation (times clamped into `[0, T]`, frozen below 0).
    pub fn at(&self, t: S) -> Pointwise<S> {
        Pointwise {
            h11: self.h11.value(t),
            h12: self.h12.value(t),
            h13: self.h13.value(t),
            h21: self.h21.value(t),
            h22: self.h22.value(t),
            h23: self.h23.value(t),
            h31: self.h31.value(t),
            h32: self.h32.value(t),
            h33: self.h33.value(t),
            weight: self.weight.value(t),
        }
    }

    /// Same coefficients with `h22` multiplied by `factor`.
    pub fn with_scaled_weight(&self, factor: S) -> Self {
        let mut out = self.clone();
        out.weight = CoefficientFn::map(&self.weight, move |v| v * factor);
        out
    }
}
