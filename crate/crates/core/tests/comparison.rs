//! Comparison and sign properties for backward Riccati equations.

use proptest::prelude::*;
use riccati_spectrum::coeffs::CoefficientFn;
use riccati_spectrum::riccati::{integrate_quadratic, Equation, IntegratorOptions, RiccatiSolution};

const HORIZON: f64 = 1.0;
const TOL: f64 = 1e-9;

fn opts() -> IntegratorOptions<f64> {
    IntegratorOptions { rtol: 1e-12, atol: 1e-14, ..IntegratorOptions::default() }
}

fn pwl(v: [f64; 3]) -> CoefficientFn<f64> {
    CoefficientFn::piecewise_linear(vec![0.0, HORIZON / 2.0, HORIZON], v.to_vec()).unwrap()
}

fn solve(p0: CoefficientFn<f64>, p1: CoefficientFn<f64>, p2: CoefficientFn<f64>, q: f64) -> RiccatiSolution<f64> {
    integrate_quadratic(
        move |t| [p0.value(t), p1.value(t), p2.value(t)],
        &[HORIZON / 2.0],
        Equation::Primal,
        0.0,
        HORIZON,
        q,
        -1.0,
        &opts(),
    )
    .unwrap()
}

/// `upper >= lower` at every stored sample of either solution where both are alive.
fn assert_ordered(upper: &RiccatiSolution<f64>, lower: &RiccatiSolution<f64>) -> Result<(), TestCaseError> {
    let lo = upper.t_end().max(lower.t_end());
    for t in upper.samples.iter().chain(&lower.samples).map(|s| s.t).filter(|&t| t >= lo) {
        let (Some(u), Some(l)) = (upper.direct_value_at(t), lower.direct_value_at(t)) else {
            continue;
        };
        if u.is_infinite() || l.is_infinite() {
            continue;
        }
        prop_assert!(u >= l - TOL * l.abs().max(1.0), "t = {t}: {u} < {l}");
    }
    Ok(())
}

fn triple(range: std::ops::Range<f64>) -> impl Strategy<Value = [f64; 3]> {
    [range.clone(), range.clone(), range]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    /// Linear equation with nonnegative data stays nonnegative.
    #[test]
    fn nonnegative_data_keeps_solution_nonnegative(
        a in triple(-1.0..1.0), c in triple(-1.0..1.0), r in triple(0.0..2.0), q in 0.0..1.0f64,
    ) {
        let lin = CoefficientFn::combine(&pwl(a), &pwl(c), |a, c| 2.0 * a + c * c);
        let sol = solve(pwl(r), lin, pwl([0.0; 3]), q);
        for s in &sol.samples {
            let v = sol.direct_value_at(s.t).unwrap();
            prop_assert!(v >= -TOL, "t = {}: {v}", s.t);
        }
    }

    /// Ordered data with a monotone quadratic feedback term gives ordered solutions.
    #[test]
    fn ordered_data_orders_solutions(
        a in triple(-1.0..1.0), cc in triple(-1.0..1.0), b in triple(-1.0..1.0), d in triple(-1.0..1.0),
        r2 in triple(-1.0..1.0), dr in triple(0.0..1.0),
        n2 in triple(-1.0..1.0), dn in triple(0.0..1.0),
        f2 in 0.0..1.0f64, df in 0.0..1.0f64,
        q2 in -0.5..0.5f64, dq in 0.0..0.5f64,
    ) {
        let f1 = f2 + df;
        let build = |f: f64, r: [f64; 3], n: [f64; 3]| {
            let (a, cc, b, d) = (pwl(a), pwl(cc), pwl(b), pwl(d));
            let p0 = CoefficientFn::combine(&pwl(r), &b, move |r, b| r + f * b * b);
            let bd = CoefficientFn::combine(&b, &d, |b, d| b * d);
            let ac = CoefficientFn::combine(&a, &cc, |a, c| 2.0 * a + c * c);
            let p1 = CoefficientFn::combine(&ac, &bd, move |ac, bd| ac + 2.0 * f * bd);
            let p2 = CoefficientFn::combine(&pwl(n), &d, move |n, d| n + f * d * d);
            (p0, p1, p2)
        };
        let add = |x: [f64; 3], y: [f64; 3]| [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
        let (p0, p1, p2) = build(f1, add(r2, dr), add(n2, dn));
        let upper = solve(p0, p1, p2, q2 + dq);
        let (p0, p1, p2) = build(f2, r2, n2);
        let lower = solve(p0, p1, p2, q2);
        assert_ordered(&upper, &lower)?;
    }

    /// A constant term bounded away from zero fixes the sign of the solution.
    #[test]
    fn constant_term_fixes_sign(
        c in 0.05..1.0f64, extra in triple(0.0..1.0), p1 in triple(-2.0..2.0), p2 in triple(-2.0..2.0),
        negative in any::<bool>(),
    ) {
        let s = if negative { -1.0 } else { 1.0 };
        let psi1 = CoefficientFn::map(&pwl(extra), move |e| s * (c + e));
        let sol = solve(psi1, pwl(p1), pwl(p2), 0.0);
        for smp in sol.samples.iter().skip(1) {
            let v = sol.direct_value_at(smp.t).unwrap();
            prop_assert!(s * v > 0.0, "t = {}: {v}", smp.t);
        }
    }
}
