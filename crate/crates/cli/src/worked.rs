//! The worked example with a dual return to zero: locates `T1`, builds the
//! system on `[0, T1 + T2]` and refines the eigenvalue near 3.

use anyhow::{bail, Context, Result};
use serde::Serialize;

use riccati_spectrum::chain::{ChainTermination, SegmentKind};
use riccati_spectrum::coeffs::reference::{example8, example8_t2};
use riccati_spectrum::coeffs::{CoefficientFn, CoefficientSet};
use riccati_spectrum::riccati::{integrate_dual, IntegratorOptions, TerminationKind};
use riccati_spectrum::spectrum::{solve_eigenvalue, RootKind, SpectrumOptions};

/// Eigenvalue the construction is built around.
pub const TARGET_LAMBDA: f64 = 3.0;

/// Upper bound on `T1` from the linear minorant of the dual solution.
pub const T1_BOUND: f64 = 15.0 / 28.0;

#[derive(Clone, Debug, Serialize)]
pub struct WorkedReport {
    pub t1: f64,
    pub t2: f64,
    pub horizon: f64,
    pub lambda: f64,
    pub defect: f64,
    pub bracket: (f64, f64),
    pub primal_blowups: usize,
    pub primal_blowup_time: f64,
    pub dual_zero_return_time: f64,
    pub chain: serde_json::Value,
}

/// System with `h22 = -10 (t - anchor) - 1` on `[0, anchor]` and the
/// example's constant entries; the dual started at `anchor` returns to zero
/// at `anchor - T1`.
fn shifted_system(anchor: f64) -> CoefficientSet<f64> {
    let c = |v: f64| CoefficientFn::constant(v, anchor);
    let weight = CoefficientFn::piecewise_linear(vec![0.0, anchor], vec![10.0 * anchor - 1.0, -1.0])
        .expect("two increasing knots");
    CoefficientSet::new(
        anchor,
        c(3.0),
        c(0.0),
        c(1.0),
        c(0.0),
        c(-4.0),
        Some(c(2.0)),
        c(1.0),
        c(2.0),
        c(-2.0),
        weight,
    )
    .expect("consistent horizons")
}

/// First return to zero (backward) of the dual equation started from zero.
pub fn locate_t1(opts: &IntegratorOptions<f64>) -> Result<f64> {
    let anchor = 1.0;
    let c = shifted_system(anchor);
    let mut o = *opts;
    o.floor = Some(0.0);
    o.stop_on_zero_return = true;
    let sol = integrate_dual(&c, TARGET_LAMBDA, anchor, 0.0, &o).context("dual integration for T1")?;
    match sol.termination.kind {
        TerminationKind::ZeroReturn { t_star } => Ok(anchor - t_star),
        other => bail!("dual solution did not return to zero on [0, {anchor}]: {other:?}"),
    }
}

pub fn run(opts: &SpectrumOptions<f64>) -> Result<WorkedReport> {
    let t1 = locate_t1(&opts.integrator)?;
    if !(t1 > 0.0 && t1 <= T1_BOUND) {
        bail!("T1 = {t1} lies outside (0, 15/28]");
    }
    let t2 = example8_t2::<f64>();
    let c = example8::<f64>(t1);
    let bracket = (2.5, 3.5);
    let eig = solve_eigenvalue(&c, bracket, RootKind::Defect, opts.tol, opts)?;
    let chain = &eig.chain;
    let primal_blowups = chain
        .segment_kinds
        .iter()
        .zip(chain.segment_kinds.iter().skip(1))
        .filter(|(a, b)| **a == SegmentKind::PrimalK && **b == SegmentKind::DualK)
        .count();
    let defect = match chain.termination {
        ChainTermination::DefectAtZero { defect, .. } => defect,
        other => bail!("chain at the refined root did not reach 0: {other:?}"),
    };
    if chain.depth() != 1 || chain.final_kind() != SegmentKind::DualK {
        bail!("unexpected chain structure {:?}", chain.structure());
    }
    let primal_blowup_time = chain.breakpoints[1];

    // continue the last dual segment past 0 to pin its return to zero
    let mut o = opts.integrator;
    o.floor = Some(-0.1 * c.horizon());
    o.stop_on_zero_return = true;
    let tail = integrate_dual(&c, eig.lambda, primal_blowup_time, 0.0, &o).context("dual tail")?;
    let dual_zero_return_time = match tail.termination.kind {
        TerminationKind::ZeroReturn { t_star } => t_star,
        other => bail!("dual segment did not return to zero near 0: {other:?}"),
    };
    Ok(WorkedReport {
        t1,
        t2,
        horizon: c.horizon(),
        lambda: eig.lambda,
        defect,
        bracket: eig.bracket,
        primal_blowups,
        primal_blowup_time,
        dual_zero_return_time,
        chain: chain.to_json(),
    })
}
