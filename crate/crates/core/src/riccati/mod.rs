//! Backward integration of the reduced Riccati equation and its dual, with
//! blow-up localized as a zero of the reciprocal variable.

mod closed_form;
mod dopri;
mod dual;
pub mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeffs::{CoefficientSet, Pointwise};
use crate::scalar::{lit, Scalar};
use dopri::{Dense, Trial};

pub use closed_form::{blowup_distance, branch, closed_form_constant_riccati, constant_blowup_time, Branch};
pub use dual::dual_coefficients;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiccatiError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step limit {limit} exhausted at t = {t}")]
    TooManySteps { t: f64, limit: usize },
    #[error("non-finite right-hand side at t = {t}")]
    NonFinite { t: f64 },
    #[error("trajectory still alive at the time floor {floor}")]
    FloorReached { floor: f64 },
    #[error("trajectory returned to zero at {t_star} without blowing up")]
    ReturnedToZero { t_star: f64 },
    #[error("outside the domain of the closed form: {0}")]
    DomainError(String),
    #[error("invalid integration request: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Primal,
    Dual,
}

impl Equation {
    pub fn other(self) -> Self {
        match self {
            Equation::Primal => Equation::Dual,
            Equation::Dual => Equation::Primal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Repr {
    Direct,
    Reciprocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions<S> {
    pub rtol: S,
    pub atol: S,
    /// Switch to the reciprocal variable once `|value| >= switch_threshold`,
    /// back once `|value| <= switch_threshold / 2`.
    pub switch_threshold: S,
    /// Lowest time reached; `None` means `-T`.
    pub floor: Option<S>,
    /// Target `|g| <= root_tol` when refining event times.
    pub root_tol: S,
    /// A dual value has to leave `[-dead_band, dead_band]` before a sign
    /// change counts as a return to zero.
    pub dead_band: S,
    pub stop_on_zero_return: bool,
    pub max_steps: usize,
}

impl<S: Scalar> Default for IntegratorOptions<S> {
    fn default() -> Self {
        Self {
            rtol: lit(1e-10),
            atol: lit(1e-12),
            switch_threshold: S::one(),
            floor: None,
            root_tol: lit(1e-12),
            dead_band: lit(1e-13),
            stop_on_zero_return: true,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminationKind<S> {
    ReachedTimeLimit { t_stop: S, value: S, repr: Repr },
    BlowUpPlusInf { t_star: S },
    BlowUpMinusInf { t_star: S },
    ZeroReturn { t_star: S },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminationEvent<S> {
    pub kind: TerminationKind<S>,
    pub localization_error: S,
}

impl<S: Scalar> TerminationEvent<S> {
    /// Event time for blow-ups and returns to zero.
    pub fn event_time(&self) -> Option<S> {
        match self.kind {
            TerminationKind::BlowUpPlusInf { t_star }
            | TerminationKind::BlowUpMinusInf { t_star }
            | TerminationKind::ZeroReturn { t_star } => Some(t_star),
            TerminationKind::ReachedTimeLimit { .. } => None,
        }
    }

    pub fn is_blowup(&self) -> bool {
        matches!(
            self.kind,
            TerminationKind::BlowUpPlusInf { .. } | TerminationKind::BlowUpMinusInf { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample<S> {
    pub t: S,
    pub value: S,
    pub repr: Repr,
}

#[derive(Clone, Copy, Debug)]
struct StoredStep<S> {
    dense: Dense<S>,
    t_end: S,
    repr: Repr,
}

/// One backward trajectory of the primal or dual Riccati equation.
#[derive(Clone, Debug, Serialize)]
pub struct RiccatiSolution<S: Scalar> {
    pub lambda: S,
    pub t_bar: S,
    pub equation: Equation,
    pub samples: Vec<Sample<S>>,
    pub termination: TerminationEvent<S>,
    /// Interior returns to zero passed over when `stop_on_zero_return` is off.
    pub zero_returns: Vec<S>,
    /// First time a primal trajectory crossed zero from above, if ever.
    pub sign_anomaly: Option<S>,
    #[serde(skip)]
    steps: Vec<StoredStep<S>>,
}

impl<S: Scalar> RiccatiSolution<S> {
    /// Lowest time covered by the trajectory.
    pub fn t_end(&self) -> S {
        self.samples.last().map(|s| s.t).unwrap_or(self.t_bar)
    }

    pub fn blowup_time(&self) -> Result<S, RiccatiError> {
        match self.termination.kind {
            TerminationKind::BlowUpPlusInf { t_star } | TerminationKind::BlowUpMinusInf { t_star } => {
                Ok(t_star)
            }
            TerminationKind::ReachedTimeLimit { t_stop, .. } => Err(RiccatiError::FloorReached {
                floor: t_stop.to_f64_lossy(),
            }),
            TerminationKind::ZeroReturn { t_star } => Err(RiccatiError::ReturnedToZero {
                t_star: t_star.to_f64_lossy(),
            }),
        }
    }

    /// Stored value and its representation at `t` in `[t_end, t_bar]`.
    pub fn value_at(&self, t: S) -> Option<(S, Repr)> {
        if self.steps.is_empty() {
            return (t == self.t_bar).then(|| (self.samples[0].value, self.samples[0].repr));
        }
        if t > self.t_bar || t < self.t_end() {
            return None;
        }
        // events are stored exactly
        if t == self.t_end() {
            let last = self.samples.last().unwrap();
            return Some((last.value, last.repr));
        }
        // steps are ordered by decreasing time
        let idx = self.steps.partition_point(|s| s.t_end > t).min(self.steps.len() - 1);
        let s = &self.steps[idx];
        Some((s.dense.eval(t), s.repr))
    }

    /// Value of the integrated unknown (`k` or `k~`) at `t`; infinite at a blow-up.
    pub fn direct_value_at(&self, t: S) -> Option<S> {
        self.value_at(t).map(|(v, r)| match r {
            Repr::Direct => v,
            Repr::Reciprocal => S::one() / v,
        })
    }

    /// Value in the dual-equation variable: `k~` for a dual trajectory and
    /// `1/k` for a primal one.
    pub fn dual_value_at(&self, t: S) -> Option<S> {
        self.value_at(t).map(|(v, r)| match (self.equation, r) {
            (Equation::Dual, Repr::Direct) | (Equation::Primal, Repr::Reciprocal) => v,
            _ => S::one() / v,
        })
    }

    /// CSV rows `t,value,repr,equation`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,repr,equation\n");
        let eq = match self.equation {
            Equation::Primal => "primal",
            Equation::Dual => "dual",
        };
        for s in &self.samples {
            let repr = match s.repr {
                Repr::Direct => "direct",
                Repr::Reciprocal => "reciprocal",
            };
            out.push_str(&format!(
                "{:.16e},{:.16e},{repr},{eq}\n",
                s.t.to_f64_lossy(),
                s.value.to_f64_lossy()
            ));
        }
        out
    }
}

/// Coefficients `(p0, p1, p2)` of `-v' = p0 + p1 v + p2 v^2` satisfied by the
/// direct variable of `equation`.
pub fn quadratic_form<S: Scalar>(p: &Pointwise<S>, lambda: S, equation: Equation) -> [S; 3] {
    let (h11, lin, quad) = (p.h11, p.linear(), p.quadratic(lambda));
    match equation {
        Equation::Primal => [h11, lin, quad],
        Equation::Dual => [-quad, -lin, -h11],
    }
}

fn reciprocal_form<S: Scalar>([p0, p1, p2]: [S; 3]) -> [S; 3] {
    [-p2, -p1, -p0]
}

fn slope<S: Scalar>([p0, p1, p2]: [S; 3], v: S) -> S {
    -(p0 + v * (p1 + p2 * v))
}

/// `dk/dt` of the primal equation.
pub fn primal_rhs<S: Scalar>(c: &CoefficientSet<S>, lambda: S, t: S, k: S) -> S {
    slope(quadratic_form(&c.at(t), lambda, Equation::Primal), k)
}

/// `dk~/dt` of the dual equation.
pub fn dual_rhs<S: Scalar>(c: &CoefficientSet<S>, lambda: S, t: S, kt: S) -> S {
    slope(quadratic_form(&c.at(t), lambda, Equation::Dual), kt)
}

pub fn integrate_primal<S: Scalar>(
    c: &CoefficientSet<S>,
    lambda: S,
    t_bar: S,
    k0: S,
    opts: &IntegratorOptions<S>,
) -> Result<RiccatiSolution<S>, RiccatiError> {
    integrate(c, Equation::Primal, lambda, t_bar, k0, opts)
}

pub fn integrate_dual<S: Scalar>(
    c: &CoefficientSet<S>,
    lambda: S,
    t_bar: S,
    kt0: S,
    opts: &IntegratorOptions<S>,
) -> Result<RiccatiSolution<S>, RiccatiError> {
    integrate(c, Equation::Dual, lambda, t_bar, kt0, opts)
}

/// Integrates `equation` backward from `(t_bar, v0)`.
pub fn integrate<S: Scalar>(
    c: &CoefficientSet<S>,
    equation: Equation,
    lambda: S,
    t_bar: S,
    v0: S,
    opts: &IntegratorOptions<S>,
) -> Result<RiccatiSolution<S>, RiccatiError> {
    if t_bar > c.horizon() * (S::one() + S::epsilon() * lit(16.0)) {
        return Err(RiccatiError::InvalidInput(format!(
            "t_bar = {t_bar} exceeds the horizon {}",
            c.horizon()
        )));
    }
    let floor = opts.floor.unwrap_or(-c.horizon());
    let mut stops: Vec<S> = c.knots();
    stops.push(S::zero());
    integrate_quadratic(
        |t| quadratic_form(&c.at(t), lambda, equation),
        &stops,
        equation,
        lambda,
        t_bar,
        v0,
        floor,
        opts,
    )
}

/// Integrates `-v' = p0(t) + p1(t) v + p2(t) v^2` backward from `t_bar` down to
/// `floor`; `stops` are times the stepper must not step across (kinks).
/// `equation` decides the event semantics: returns to zero are only events
/// for the dual equation.
#[allow(clippy::too_many_arguments)]
pub fn integrate_quadratic<S: Scalar, F>(
    coeffs: F,
    stops: &[S],
    equation: Equation,
    lambda: S,
    t_bar: S,
    v0: S,
    floor: S,
    opts: &IntegratorOptions<S>,
) -> Result<RiccatiSolution<S>, RiccatiError>
where
    F: Fn(S) -> [S; 3],
{
    if !(floor < t_bar) {
        return Err(RiccatiError::InvalidInput(format!(
            "floor {floor} must lie below t_bar {t_bar}"
        )));
    }
    if !v0.is_finite() || !t_bar.is_finite() {
        return Err(RiccatiError::InvalidInput("non-finite initial data".into()));
    }
    let direct = |t: S, v: S| slope(coeffs(t), v);
    let recip = |t: S, w: S| slope(reciprocal_form(coeffs(t)), w);
    let rhs = |repr: Repr, t: S, y: S| match repr {
        Repr::Direct => direct(t, y),
        Repr::Reciprocal => recip(t, y),
    };

    let mut stops: Vec<S> = stops
        .iter()
        .copied()
        .filter(|&s| s < t_bar && s > floor)
        .collect();
    stops.push(floor);
    stops.sort_by(|a, b| b.partial_cmp(a).unwrap());
    stops.dedup();
    let mut next_stop = 0usize;

    let thr = opts.switch_threshold;
    let back = thr / lit(2.0);
    let (mut repr, mut y) = if v0 != S::zero() && v0.abs() >= thr {
        (Repr::Reciprocal, S::one() / v0)
    } else {
        (Repr::Direct, v0)
    };
    let mut t = t_bar;
    let mut f0 = rhs(repr, t, y);
    if !f0.is_finite() {
        return Err(RiccatiError::NonFinite { t: t.to_f64_lossy() });
    }
    let mut h = -dopri::initial_step(
        &|t, y| rhs(repr, t, y),
        t,
        y,
        f0,
        -S::one(),
        opts.rtol,
        opts.atol,
    )
    .min(t_bar - floor);
    let mut armed = repr == Repr::Reciprocal || y.abs() > opts.dead_band;

    let mut samples = vec![Sample { t, value: y, repr }];
    let mut steps: Vec<StoredStep<S>> = Vec::new();
    let mut zero_returns = Vec::new();
    let mut sign_anomaly = None;
    let mut n_steps = 0usize;

    let termination = loop {
        if t <= floor {
            break TerminationEvent {
                kind: TerminationKind::ReachedTimeLimit { t_stop: t, value: y, repr },
                localization_error: S::zero(),
            };
        }
        n_steps += 1;
        if n_steps > opts.max_steps {
            return Err(RiccatiError::TooManySteps {
                t: t.to_f64_lossy(),
                limit: opts.max_steps,
            });
        }
        while stops[next_stop] >= t {
            next_stop += 1;
        }
        let target = stops[next_stop];
        let proposed = h;
        let clipped = t + h <= target;
        let h_try = if clipped { target - t } else { h };
        if h_try.abs() <= lit::<S>(16.0) * S::epsilon() * t.abs().max(S::one()) {
            if clipped {
                // the remaining gap to the stop is below resolution
                t = target;
                continue;
            }
            return Err(RiccatiError::StepSizeUnderflow { t: t.to_f64_lossy() });
        }
        let f = |t: S, y: S| rhs(repr, t, y);
        let trial = dopri::step(&f, t, y, f0, h_try);
        if !trial.y1.is_finite() || !trial.err.is_finite() || !trial.f1.is_finite() {
            h = h_try * lit(0.25);
            continue;
        }
        let ratio = dopri::error_ratio(&trial, y, opts.rtol, opts.atol);
        if ratio > S::one() {
            h = h_try * dopri::step_factor(ratio).min(S::one());
            continue;
        }
        let t1 = if clipped { target } else { t + h_try };
        let y1 = trial.y1;
        let crossed = y != S::zero() && (y1 == S::zero() || y1.signum() != y.signum());

        if crossed && repr == Repr::Reciprocal {
            let (t_star, _, err) = locate_zero(&f, t, y, f0, &trial, opts);
            steps.push(StoredStep { dense: trial.dense, t_end: t_star, repr });
            // signed zero keeps the direct value at the event at the right infinity
            samples.push(Sample { t: t_star, value: S::zero() * y.signum(), repr });
            let kind = if y > S::zero() {
                TerminationKind::BlowUpPlusInf { t_star }
            } else {
                TerminationKind::BlowUpMinusInf { t_star }
            };
            break TerminationEvent { kind, localization_error: err };
        }
        if crossed && repr == Repr::Direct && armed {
            match equation {
                Equation::Dual => {
                    let (t_star, _, err) = locate_zero(&f, t, y, f0, &trial, opts);
                    if opts.stop_on_zero_return {
                        steps.push(StoredStep { dense: trial.dense, t_end: t_star, repr });
                        samples.push(Sample { t: t_star, value: S::zero(), repr });
                        break TerminationEvent {
                            kind: TerminationKind::ZeroReturn { t_star },
                            localization_error: err,
                        };
                    }
                    zero_returns.push(t_star);
                    armed = false;
                }
                Equation::Primal => {
                    if sign_anomaly.is_none() {
                        sign_anomaly = Some(locate_zero(&f, t, y, f0, &trial, opts).0);
                    }
                }
            }
        }
        if !armed && y1.abs() > opts.dead_band {
            armed = true;
        }

        steps.push(StoredStep { dense: trial.dense, t_end: t1, repr });
        t = t1;
        y = y1;
        f0 = trial.f1;
        let switch = match repr {
            Repr::Direct => y.abs() >= thr,
            Repr::Reciprocal => y.abs() * back >= S::one(),
        };
        if switch {
            repr = match repr {
                Repr::Direct => Repr::Reciprocal,
                Repr::Reciprocal => Repr::Direct,
            };
            y = S::one() / y;
            f0 = rhs(repr, t, y);
            armed = true;
        }
        samples.push(Sample { t, value: y, repr });

        let grow = dopri::step_factor(ratio);
        h = if clipped { proposed.min(h_try * grow) } else { h_try * grow };
        if !h.is_finite() || h >= S::zero() {
            h = h_try;
        }
    };

    Ok(RiccatiSolution {
        lambda,
        t_bar,
        equation,
        samples,
        termination,
        zero_returns,
        sign_anomaly,
        steps,
    })
}

/// Zero of the step solution between `t0 + h` and `t0`, refined with exact
/// sub-steps. Returns `(t*, value at t*, localization error estimate)`.
fn locate_zero<S: Scalar>(
    f: &impl Fn(S, S) -> S,
    t0: S,
    y0: S,
    f0: S,
    trial: &Trial<S>,
    opts: &IntegratorOptions<S>,
) -> (S, S, S) {
    let t1 = trial.dense.t1();
    let y1 = trial.y1;
    if y1 == S::zero() {
        return (t1, y1, S::zero());
    }
    // a first estimate from the continuous extension
    let (guess, _) = illinois(|t| trial.dense.eval(t), t1, y1, t0, y0, S::zero(), 60);
    let sub = |t: S| {
        if t == t0 {
            y0
        } else {
            dopri::step(f, t0, y0, f0, t - t0).y1
        }
    };
    let g_guess = sub(guess);
    let (mut a, mut fa, mut b, mut fb) = (t1, y1, t0, y0);
    if g_guess == S::zero() {
        return (guess, g_guess, S::zero());
    }
    if g_guess.signum() == fa.signum() {
        a = guess;
        fa = g_guess;
    } else {
        b = guess;
        fb = g_guess;
    }
    let (root, g) = if g_guess.abs() <= opts.root_tol {
        (guess, g_guess)
    } else {
        illinois(sub, a, fa, b, fb, opts.root_tol, 100)
    };
    let s = f(root, g);
    let err = if s != S::zero() && s.is_finite() {
        (g / s).abs()
    } else {
        (b - a).abs()
    };
    (root, g, err.max(S::epsilon() * root.abs()))
}

/// Illinois regula falsi on a bracket with `fa`, `fb` of opposite signs.
/// Returns `(x, f(x))` once `|f(x)| <= ftol` or the bracket collapses.
fn illinois<S: Scalar>(
    g: impl Fn(S) -> S,
    mut a: S,
    mut fa: S,
    mut b: S,
    mut fb: S,
    ftol: S,
    max_iter: usize,
) -> (S, S) {
    let mut side = 0i8;
    let (mut x, mut fx) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..max_iter {
        let width = (b - a).abs();
        if width <= lit::<S>(4.0) * S::epsilon() * a.abs().max(b.abs()).max(S::one()) {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        let lo = a.min(b);
        let hi = a.max(b);
        if !(c > lo && c < hi) {
            c = (a + b) / lit(2.0);
        }
        let fc = g(c);
        x = c;
        fx = fc;
        if fc == S::zero() || fc.abs() <= ftol {
            break;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa /= lit(2.0);
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb /= lit(2.0);
            }
            side = 1;
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::reference::{diagonal, example8, EXAMPLE8_T1};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn opts() -> IntegratorOptions<f64> {
        IntegratorOptions::default()
    }

    #[test]
    fn rhs_examples() {
        let d = diagonal::<f64>(1.0);
        assert_eq!(primal_rhs(&d, 2.0, 0.3, 0.0), -1.0);
        assert_eq!(primal_rhs(&d, 2.0, 0.3, 1.0), -2.0);
        assert_eq!(dual_rhs(&d, 2.0, 0.3, -1.0), 2.0);
        let e = example8::<f64>(EXAMPLE8_T1);
        assert!((dual_rhs(&e, 3.0, EXAMPLE8_T1, 0.0) - 1.0).abs() < 1e-14);
        let p = e.at(0.01);
        assert!((dual_rhs(&e, 3.0, 0.01, 0.0) - p.quadratic(3.0)).abs() < 1e-15);
    }

    #[test]
    fn diagonal_primal_tan_solution() {
        let d = diagonal::<f64>(1.0);
        let lambda = 5.0;
        let sol = integrate_primal(&d, lambda, 1.0, 0.0, &opts()).unwrap();
        let t_star = sol.blowup_time().unwrap();
        assert!(sol.termination.is_blowup());
        assert!(matches!(sol.termination.kind, TerminationKind::BlowUpPlusInf { .. }));
        assert!((t_star - (1.0 - PI / 4.0)).abs() < 1e-9, "t* = {t_star}");
        for t in [0.9f64, 0.7, 0.5] {
            let exact = (2.0 * (1.0 - t)).tan() / 2.0;
            let k = sol.direct_value_at(t).unwrap();
            assert!((k - exact).abs() < 1e-8 * exact.max(1.0), "t = {t}: {k} vs {exact}");
        }
    }

    #[test]
    fn diagonal_dual_blows_down() {
        let d = diagonal::<f64>(1.0);
        let sol = integrate_dual(&d, 2.0, 1.0, 0.0, &opts()).unwrap();
        assert!(matches!(sol.termination.kind, TerminationKind::BlowUpMinusInf { .. }));
        assert!((sol.blowup_time().unwrap() - (1.0 - FRAC_PI_2)).abs() < 1e-9);
        let v = sol.direct_value_at(0.5).unwrap();
        assert!((v + 0.5f64.tan()).abs() < 1e-9);
        for s in &sol.samples {
            // the event sample stores the reciprocal's zero
            let direct = match s.repr {
                Repr::Direct => s.value,
                Repr::Reciprocal => 1.0 / s.value,
            };
            assert!(direct <= 1e-12 || direct == f64::INFINITY);
        }
    }

    #[test]
    fn samples_strictly_decrease() {
        let d = diagonal::<f64>(1.0);
        let sol = integrate_primal(&d, 30.0, 1.0, 0.0, &opts()).unwrap();
        assert!(sol.samples.windows(2).all(|w| w[1].t < w[0].t));
        assert!(sol.samples.iter().any(|s| s.repr == Repr::Reciprocal));
    }

    #[test]
    fn floor_reached_below_threshold() {
        let d = diagonal::<f64>(1.0);
        // lambda < lambda_b: the quadratic coefficient is negative, k stays bounded
        let sol = integrate_primal(&d, 0.5, 1.0, 0.0, &opts()).unwrap();
        assert!(matches!(
            sol.termination.kind,
            TerminationKind::ReachedTimeLimit { .. }
        ));
        assert!(matches!(sol.blowup_time(), Err(RiccatiError::FloorReached { .. })));
        assert_eq!(sol.t_end(), -1.0);
    }

    #[test]
    fn worked_example_primal_segment() {
        let e = example8::<f64>(EXAMPLE8_T1);
        let t = e.horizon();
        let sol = integrate_primal(&e, 3.0, t, 0.0, &opts()).unwrap();
        let r11 = 11f64.sqrt();
        let t2 = (FRAC_PI_2 - (1.0 / r11).atan()) * 2.0 / r11;
        assert!((sol.blowup_time().unwrap() - (t - t2)).abs() < 1e-9);
        let s = 0.4;
        let exact = r11 / 2.0 * (r11 / 2.0 * (t - s) + (1.0 / r11).atan()).tan() - 0.5;
        assert!((sol.direct_value_at(s).unwrap() - exact).abs() < 1e-8);
    }

    #[test]
    fn worked_example_dual_returns_to_zero() {
        let e = example8::<f64>(EXAMPLE8_T1);
        let sol = integrate_dual(&e, 3.0, EXAMPLE8_T1, 0.0, &opts()).unwrap();
        match sol.termination.kind {
            TerminationKind::ZeroReturn { t_star } => assert!(t_star.abs() < 1e-9, "t* = {t_star}"),
            other => panic!("unexpected termination {other:?}"),
        }
    }

    #[test]
    fn first_step_slope_sign() {
        let d = diagonal::<f64>(1.0);
        let lambda = 3.0;
        let p = d.at(1.0);
        assert_eq!(dual_rhs(&d, lambda, 1.0, 0.0), p.quadratic(lambda));
        assert!(-p.quadratic(lambda) < 0.0);
    }

    #[test]
    fn reciprocal_consistency() {
        let d = diagonal::<f64>(1.0);
        let sol = integrate_primal(&d, 10.0, 1.0, 0.0, &opts()).unwrap();
        let t0 = 0.7;
        let k = sol.direct_value_at(t0).unwrap();
        let w = integrate_dual(&d, 10.0, t0, 1.0 / k, &opts()).unwrap();
        for t in [0.65, 0.6, 0.55] {
            let product = sol.direct_value_at(t).unwrap() * w.direct_value_at(t).unwrap();
            assert!((product - 1.0).abs() < 1e-8, "t = {t}: {product}");
        }
    }
}
