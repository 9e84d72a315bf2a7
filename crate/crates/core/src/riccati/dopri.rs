//! Scalar Dormand-Prince 5(4) stepper with Hairer's continuous extension.

use crate::scalar::{lit, Scalar};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Result of one trial step.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Trial<S> {
    pub y1: S,
    pub f1: S,
    pub err: S,
    pub dense: Dense<S>,
}

/// Continuous extension of an accepted step from `t0` with size `h`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Dense<S> {
    pub t0: S,
    pub h: S,
    r: [S; 5],
}

impl<S: Scalar> Dense<S> {
    pub fn eval(&self, t: S) -> S {
        let theta = (t - self.t0) / self.h;
        let theta1 = S::one() - theta;
        let [r1, r2, r3, r4, r5] = self.r;
        r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)))
    }

    pub fn t1(&self) -> S {
        self.t0 + self.h
    }
}

/// One Dormand-Prince step of `y' = f(t, y)` from `(t0, y0)` with slope
/// `f0 = f(t0, y0)`. Non-finite stage values propagate into the result.
pub(crate) fn step<S: Scalar>(f: &impl Fn(S, S) -> S, t0: S, y0: S, f0: S, h: S) -> Trial<S> {
    let c = lit::<S>;
    let k1 = f0;
    let k2 = f(t0 + c(C2) * h, y0 + h * c(A21) * k1);
    let k3 = f(t0 + c(C3) * h, y0 + h * (c(A31) * k1 + c(A32) * k2));
    let k4 = f(t0 + c(C4) * h, y0 + h * (c(A41) * k1 + c(A42) * k2 + c(A43) * k3));
    let k5 = f(
        t0 + c(C5) * h,
        y0 + h * (c(A51) * k1 + c(A52) * k2 + c(A53) * k3 + c(A54) * k4),
    );
    let k6 = f(
        t0 + h,
        y0 + h * (c(A61) * k1 + c(A62) * k2 + c(A63) * k3 + c(A64) * k4 + c(A65) * k5),
    );
    let y1 = y0 + h * (c(A71) * k1 + c(A73) * k3 + c(A74) * k4 + c(A75) * k5 + c(A76) * k6);
    let k7 = f(t0 + h, y1);
    let err = h * (c(E1) * k1 + c(E3) * k3 + c(E4) * k4 + c(E5) * k5 + c(E6) * k6 + c(E7) * k7);
    let dy = y1 - y0;
    let bspl = h * k1 - dy;
    let r5 = h * (c(D1) * k1 + c(D3) * k3 + c(D4) * k4 + c(D5) * k5 + c(D6) * k6 + c(D7) * k7);
    Trial {
        y1,
        f1: k7,
        err,
        dense: Dense {
            t0,
            h,
            r: [y0, dy, bspl, dy - h * k7 - bspl, r5],
        },
    }
}

/// Scaled error norm; `<= 1` means the step is acceptable.
pub(crate) fn error_ratio<S: Scalar>(trial: &Trial<S>, y0: S, rtol: S, atol: S) -> S {
    let scale = atol + rtol * y0.abs().max(trial.y1.abs());
    (trial.err / scale).abs()
}

/// Step-size factor from an error ratio (safety 0.9, bounded to [0.2, 5]).
pub(crate) fn step_factor<S: Scalar>(ratio: S) -> S {
    if ratio == S::zero() {
        return lit(5.0);
    }
    (lit::<S>(0.9) * ratio.powf(lit(-0.2))).max(lit(0.2)).min(lit(5.0))
}

/// Initial step magnitude heuristic for a scalar problem.
pub(crate) fn initial_step<S: Scalar>(
    f: &impl Fn(S, S) -> S,
    t0: S,
    y0: S,
    f0: S,
    direction: S,
    rtol: S,
    atol: S,
) -> S {
    let scale = atol + rtol * y0.abs();
    let d0 = (y0 / scale).abs();
    let d1 = (f0 / scale).abs();
    let h0 = if d0 < lit(1e-5) || d1 < lit(1e-5) {
        lit(1e-6)
    } else {
        lit::<S>(0.01) * d0 / d1
    };
    let y1 = y0 + direction * h0 * f0;
    let f1 = f(t0 + direction * h0, y1);
    let d2 = ((f1 - f0) / scale).abs() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= lit(1e-15) {
        (h0 * lit(1e-3)).max(lit(1e-6))
    } else {
        (lit::<S>(0.01) / dm).powf(lit(0.2))
    };
    (h0 * lit(100.0)).min(h1)
}
