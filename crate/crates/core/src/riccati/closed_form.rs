//! Exact solution of `-k' = a k + b + cq k^2`, `k(t_bar) = 0`, constant coefficients.

use super::RiccatiError;
use crate::scalar::Scalar;

/// Branch selected by the sign of the discriminant `4 b cq - a^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Tangent,
    Ratio,
    Rational,
    Linear,
}

pub fn branch<S: Scalar>(a: S, b: S, cq: S) -> Branch {
    if cq == S::zero() {
        return Branch::Linear;
    }
    let d = S::of(4.0) * b * cq - a * a;
    if d > S::zero() {
        Branch::Tangent
    } else if d < S::zero() {
        Branch::Ratio
    } else {
        Branch::Rational
    }
}

/// Backward time `s = t_bar - t*` until blow-up, if the solution blows up.
pub fn blowup_distance<S: Scalar>(a: S, b: S, cq: S) -> Option<S> {
    let two = S::of(2.0);
    let u0 = if cq != S::zero() { a / (two * cq) } else { S::zero() };
    match branch(a, b, cq) {
        Branch::Linear => None,
        Branch::Tangent => {
            let omega = (S::of(4.0) * b * cq - a * a).sqrt() / two;
            let phi = (a / (two * omega)).atan();
            // k = (omega/cq) tan(omega s + phi) - a/(2 cq) for either sign of cq
            Some((S::FRAC_PI_2() - phi) / omega)
        }
        Branch::Ratio => {
            let rho = (a * a - S::of(4.0) * b * cq).sqrt() / (two * cq.abs());
            let ratio = (u0 + rho) / (u0 - rho);
            if !(ratio > S::zero()) || !ratio.is_finite() {
                return None;
            }
            let s = ratio.ln() / (two * cq * rho);
            (s > S::zero()).then_some(s)
        }
        Branch::Rational => {
            let s = S::one() / (cq * u0);
            (u0 != S::zero() && s > S::zero()).then_some(s)
        }
    }
}

/// Blow-up time `t*` of the solution started at `t_bar`, if any.
pub fn constant_blowup_time<S: Scalar>(a: S, b: S, cq: S, t_bar: S) -> Option<S> {
    blowup_distance(a, b, cq).map(|s| t_bar - s)
}

/// Value at `t <= t_bar` of the solution of `-k' = a k + b + cq k^2` with
/// `k(t_bar) = 0`. Errors at or beyond the analytic blow-up time.
pub fn closed_form_constant_riccati<S: Scalar>(a: S, b: S, cq: S, t_bar: S, t: S) -> Result<S, RiccatiError> {
    let s = t_bar - t;
    if !(s >= S::zero()) {
        return Err(RiccatiError::DomainError(format!(
            "t = {t} lies after the terminal time {t_bar}"
        )));
    }
    if let Some(s_star) = blowup_distance(a, b, cq) {
        if s >= s_star {
            return Err(RiccatiError::DomainError(format!(
                "t = {t} is at or before the blow-up time {}",
                t_bar - s_star
            )));
        }
    }
    let two = S::of(2.0);
    let value = match branch(a, b, cq) {
        Branch::Linear => {
            if a == S::zero() {
                b * s
            } else {
                b / a * (a * s).exp_m1()
            }
        }
        Branch::Tangent => {
            let omega = (S::of(4.0) * b * cq - a * a).sqrt() / two;
            let phi = (a / (two * omega)).atan();
            omega / cq * (omega * s + phi).tan() - a / (two * cq)
        }
        Branch::Ratio => {
            let rho = (a * a - S::of(4.0) * b * cq).sqrt() / (two * cq.abs());
            let u0 = a / (two * cq);
            let x = two * cq * rho * s;
            let (p, m) = (u0 + rho, u0 - rho);
            let u = if x > S::zero() {
                // divide through by exp(x) to avoid overflow
                let inv = (-x).exp();
                rho * (p * inv + m) / (p * inv - m)
            } else {
                let e = x.exp();
                rho * (p + m * e) / (p - m * e)
            };
            u - u0
        }
        Branch::Rational => {
            let u0 = a / (two * cq);
            u0 / (S::one() - cq * u0 * s) - u0
        }
    };
    Ok(value)
}
