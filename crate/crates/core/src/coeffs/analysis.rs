//! Grid-based structural constants of a coefficient set.
//!
//! Sup-norms, extrema and the monotonicity margin are approximated on a
//! uniform grid joined with every knot of the set, so kinks are sampled
//! exactly and smooth extrema converge at first order in the grid step.

use serde::{Deserialize, Serialize};

use super::set::{CoefficientSet, Pointwise};
use super::CoeffError;
use crate::scalar::{lit, Scalar};

pub const DEFAULT_GRID: usize = 2048;

/// Absolute tolerance of the structural identity `H23 = -H33 H13` and of the
/// symmetry checks.
pub const STRUCTURAL_TOL: f64 = 1e-10;

const MAX_VIOLATIONS_PER_KIND: usize = 32;

/// Uniform grid of `n` points on `[0, T]` merged with the set's knots.
pub fn validation_grid<S: Scalar>(c: &CoefficientSet<S>, n: usize) -> Vec<S> {
    let n = n.max(2);
    let horizon = c.horizon();
    let denom = S::from_usize(n - 1).unwrap();
    let mut grid: Vec<S> = (0..n)
        .map(|i| horizon * S::from_usize(i).unwrap() / denom)
        .chain(c.knots())
        .filter(|t| *t >= S::zero() && *t <= horizon)
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations, sorted
/// ascending.
pub fn symmetric_eigenvalues<S: Scalar>(mut a: [[S; 3]; 3]) -> [S; 3] {
    let two = S::one() + S::one();
    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= S::epsilon() * S::epsilon() * diag.max(S::min_positive_value()) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == S::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (two * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
            let t = if theta == S::zero() { S::one() } else { t };
            let cos = S::one() / (t * t + S::one()).sqrt();
            let sin = t * cos;
            let r = 3 - p - q;
            let (arp, arq) = (a[r][p], a[r][q]);
            a[r][p] = cos * arp - sin * arq;
            a[p][r] = a[r][p];
            a[r][q] = sin * arp + cos * arq;
            a[q][r] = a[r][q];
            a[p][p] -= t * apq;
            a[q][q] += t * apq;
            a[p][q] = S::zero();
            a[q][p] = S::zero();
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Pointwise monotonicity margin: minus the largest eigenvalue of the
/// symmetrized monotonicity matrix (may be negative).
pub fn pointwise_margin<S: Scalar>(p: &Pointwise<S>) -> S {
    -symmetric_eigenvalues(p.monotonicity_matrix())[2]
}

/// Largest `beta >= 0` such that the monotonicity matrix is `<= -beta I` on
/// the grid; zero when the condition fails.
pub fn monotonicity_beta<S: Scalar>(c: &CoefficientSet<S>, grid_n: usize) -> S {
    validation_grid(c, grid_n)
        .into_iter()
        .map(|t| pointwise_margin(&c.at(t)))
        .fold(S::infinity(), S::min)
        .max(S::zero())
}

/// Threshold above which `H22 - H33 H13^2 - lambda h22` is uniformly positive:
/// `min(H22 - H33 H13^2) / max(h22)` over the grid.
pub fn lambda_b<S: Scalar>(c: &CoefficientSet<S>, grid_n: usize) -> S {
    let grid = validation_grid(c, grid_n);
    let mut num = S::infinity();
    let mut den = S::neg_infinity();
    for t in grid {
        let p = c.at(t);
        num = num.min(p.h22 - p.h33 * p.h13 * p.h13);
        den = den.max(p.weight);
    }
    num / den
}

/// Sup-norms entering the all-eigenvalue sufficient condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllEigenNorms<S> {
    pub h11: S,
    pub quadratic_at_lambda_b: S,
    pub linear: S,
    pub horizon: S,
}

impl<S: Scalar> AllEigenNorms<S> {
    /// `4 |H11| |q_b| <= |2H21 + H13^2|^2 < 4 / T^2`.
    pub fn holds(&self) -> bool {
        let four = S::of(4.0);
        let lin2 = self.linear * self.linear;
        four * self.h11 * self.quadratic_at_lambda_b <= lin2
            && lin2 < four / (self.horizon * self.horizon)
    }
}

pub fn all_eigen_norms<S: Scalar>(c: &CoefficientSet<S>, grid_n: usize) -> AllEigenNorms<S> {
    let lb = lambda_b(c, grid_n);
    let mut out = AllEigenNorms {
        h11: S::zero(),
        quadratic_at_lambda_b: S::zero(),
        linear: S::zero(),
        horizon: c.horizon(),
    };
    for t in validation_grid(c, grid_n) {
        let p = c.at(t);
        out.h11 = out.h11.max(p.h11.abs());
        out.quadratic_at_lambda_b = out.quadratic_at_lambda_b.max(p.quadratic(lb).abs());
        out.linear = out.linear.max(p.linear().abs());
    }
    out
}

/// Whether the sufficient condition certifying that every real eigenvalue is
/// produced by the blow-up chain holds (grid sup-norms).
pub fn check_all_eigen_condition<S: Scalar>(c: &CoefficientSet<S>, grid_n: usize) -> bool {
    all_eigen_norms(c, grid_n).holds()
}

/// Constant lower (`lo`) and upper (`hi`) brackets of the coefficients used by
/// the constant-coefficient comparison systems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelopes<S> {
    pub h11_lo: S,
    pub h11_hi: S,
    pub h22_lo: S,
    pub h22_hi: S,
    pub h33_lo: S,
    pub h33_hi: S,
    pub h21_lo: S,
    pub h21_hi: S,
    pub weight_lo: S,
    pub weight_hi: S,
    pub h13_abs_lo: S,
    pub h13_abs_hi: S,
    /// `-h33_lo * h13_abs_hi`
    pub h23_hi: S,
    /// `-h33_hi * h13_abs_lo`
    pub h23_lo: S,
}

impl<S: Scalar> Envelopes<S> {
    /// Envelopes from explicit constants; derives the `H23` brackets.
    #[allow(clippy::too_many_arguments)]
    pub fn from_constants(
        h11: (S, S),
        h22: (S, S),
        h33: (S, S),
        h21: (S, S),
        weight: (S, S),
        h13_abs: (S, S),
    ) -> Self {
        Self {
            h11_lo: h11.0,
            h11_hi: h11.1,
            h22_lo: h22.0,
            h22_hi: h22.1,
            h33_lo: h33.0,
            h33_hi: h33.1,
            h21_lo: h21.0,
            h21_hi: h21.1,
            weight_lo: weight.0,
            weight_hi: weight.1,
            h13_abs_lo: h13_abs.0,
            h13_abs_hi: h13_abs.1,
            h23_hi: -(h33.0 * h13_abs.1),
            h23_lo: -(h33.1 * h13_abs.0),
        }
    }
}

/// Grid envelopes widened by `margin` on each side.
pub fn envelopes<S: Scalar>(
    c: &CoefficientSet<S>,
    grid_n: usize,
    margin: S,
) -> Result<Envelopes<S>, CoeffError> {
    envelopes_with(c, grid_n, |_| margin)
}

/// Envelopes with a per-function margin of `1e-6 * max(1, sup |f|)`.
pub fn envelopes_default<S: Scalar>(c: &CoefficientSet<S>, grid_n: usize) -> Result<Envelopes<S>, CoeffError> {
    envelopes_with(c, grid_n, |sup| lit::<S>(1e-6) * sup.max(S::one()))
}

fn envelopes_with<S: Scalar>(
    c: &CoefficientSet<S>,
    grid_n: usize,
    margin: impl Fn(S) -> S,
) -> Result<Envelopes<S>, CoeffError> {
    let grid = validation_grid(c, grid_n);
    let extent = |f: &dyn Fn(&Pointwise<S>) -> S| {
        grid.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), &t| {
            let v = f(&c.at(t));
            (lo.min(v), hi.max(v))
        })
    };
    let widen = |(lo, hi): (S, S)| {
        let m = margin(lo.abs().max(hi.abs()));
        if !(m > S::zero()) {
            return Err(CoeffError::EnvelopeInfeasible("margin must be positive".into()));
        }
        Ok((lo - m, hi + m))
    };
    let h11 = widen(extent(&|p| p.h11))?;
    let h22 = widen(extent(&|p| p.h22))?;
    let h33 = widen(extent(&|p| p.h33))?;
    let h21 = widen(extent(&|p| p.h21))?;
    let weight = widen(extent(&|p| p.weight))?;
    let h13 = widen(extent(&|p| p.h13.abs()))?;
    if !(h11.0 > S::zero()) {
        return Err(CoeffError::EnvelopeInfeasible(format!(
            "lower H11 envelope {} is not positive",
            h11.0
        )));
    }
    for (name, hi) in [("H22", h22.1), ("H33", h33.1), ("h22", weight.1)] {
        if !(hi < S::zero()) {
            return Err(CoeffError::EnvelopeInfeasible(format!(
                "upper {name} envelope {hi} is not negative"
            )));
        }
    }
    let h13 = (h13.0.max(S::zero()), h13.1);
    Ok(Envelopes::from_constants(h11, h22, h33, h21, weight, h13))
}

/// Kinds of structural violations reported by [`validate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `H23 = -H33 H13`
    StructuralIdentity,
    /// `H12 = H21`, `H31 = H13`, `H32 = H23`
    Symmetry,
    /// `h22 < 0`
    WeightNegative,
    /// monotonicity margin `> 0`
    Monotonicity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub constraint: Constraint,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport<S> {
    pub beta: S,
    pub lambda_b: S,
    pub structural_ok: bool,
    pub all_eigen_condition_ok: bool,
    pub grid_size: usize,
    /// Total number of grid violations; at most 32 per constraint are listed.
    pub violation_count: usize,
    pub violations: Vec<Violation>,
}

/// Checks every standing hypothesis on the grid and computes `beta`, `lambda_b`
/// and the all-eigenvalue flag.
pub fn validate<S: Scalar>(c: &CoefficientSet<S>, grid_n: usize) -> ValidationReport<S> {
    let grid = validation_grid(c, grid_n);
    let tol = lit::<S>(STRUCTURAL_TOL);
    let mut violations = Vec::new();
    let mut counts = [0usize; 4];
    let mut record = |t: S, constraint: Constraint, magnitude: S, counts: &mut [usize; 4]| {
        let slot = constraint as usize;
        counts[slot] += 1;
        if counts[slot] <= MAX_VIOLATIONS_PER_KIND {
            violations.push(Violation {
                t: t.to_f64_lossy(),
                constraint,
                magnitude: magnitude.to_f64_lossy(),
            });
        }
    };
    let mut beta = S::infinity();
    for &t in &grid {
        let p = c.at(t);
        let identity = (p.h23 + p.h33 * p.h13).abs();
        if !(identity <= tol) {
            record(t, Constraint::StructuralIdentity, identity, &mut counts);
        }
        let asym = (p.h12 - p.h21)
            .abs()
            .max((p.h31 - p.h13).abs())
            .max((p.h32 - p.h23).abs());
        if !(asym <= tol) {
            record(t, Constraint::Symmetry, asym, &mut counts);
        }
        if !(p.weight < S::zero()) {
            record(t, Constraint::WeightNegative, p.weight, &mut counts);
        }
        let m = pointwise_margin(&p);
        if !(m > S::zero()) {
            record(t, Constraint::Monotonicity, m, &mut counts);
        }
        beta = beta.min(m);
    }
    let violation_count = counts.iter().sum();
    ValidationReport {
        beta: beta.max(S::zero()),
        lambda_b: lambda_b(c, grid_n),
        structural_ok: violations.is_empty(),
        all_eigen_condition_ok: check_all_eigen_condition(c, grid_n),
        grid_size: grid.len(),
        violation_count,
        violations,
    }
}
