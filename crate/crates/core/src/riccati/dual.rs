use crate::coeffs::{CoefficientFn, CoefficientSet, Pointwise};
use crate::scalar::Scalar;

fn derived<S: Scalar>(
    c: &CoefficientSet<S>,
    f: impl Fn(&Pointwise<S>) -> S + Send + Sync + 'static,
) -> CoefficientFn<S> {
    let src = c.clone();
    CoefficientFn::from_fn(c.knots(), move |t| f(&src.at(t))).expect("knots of a valid set")
}

/// Coefficients of the Legendre-dual system at a fixed `lambda`.
///
/// The `lambda h22` term is folded into the dual `H11`, so the returned set
/// has a zero `h22`. Its reduced Riccati equation at any eigenvalue parameter
/// is the dual equation of `c` at `lambda`.
pub fn dual_coefficients<S: Scalar>(c: &CoefficientSet<S>, lambda: S) -> CoefficientSet<S> {
    let h11 = derived(c, move |p| p.h13 * p.h13 * p.h33 - p.h22 + lambda * p.weight);
    let h21 = derived(c, |p| -(p.h13 * p.h13) - p.h21);
    let h13 = derived(c, |p| p.h13);
    let h22 = derived(c, |p| p.h13 * p.h13 / p.h33 - p.h11);
    let h23 = derived(c, |p| -p.h13 / p.h33);
    let h33 = derived(c, |p| S::one() / p.h33);
    let weight = CoefficientFn::constant(S::zero(), c.horizon());
    CoefficientSet::new(
        c.horizon(),
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
    .expect("derived coefficients share the horizon")
}
