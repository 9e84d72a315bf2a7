//! Eigenvalues as roots of the chain maps, growth ratios and period bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    compute_chain, compute_chain_snapped, BlowupChain, ChainError, ChainTermination, SegmentKind, DEFAULT_MAX_DEPTH,
    ZERO_SNAP,
};
use crate::coeffs::{
    check_all_eigen_condition, envelopes_default, lambda_b, pointwise_margin, CoeffError, CoefficientSet,
    Envelopes, Pointwise, DEFAULT_GRID,
};
use crate::riccati::IntegratorOptions;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error("invalid bracket: {0}")]
    BracketInvalid(String),
    #[error("chain structure changed inside the bracket [{lo}, {hi}]")]
    StructureChangedInsideBracket { lo: f64, hi: f64 },
    #[error("bracket [{lo}, {hi}] encloses a jump of the chain map, not a root (residual {residual:e})")]
    NotARoot { lo: f64, hi: f64, residual: f64 },
    #[error("auxiliary monotonicity check failed for every tried H22 lower constant")]
    AuxiliaryInfeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootKind {
    /// Zero of `t_j(lambda)`.
    ChainTime(usize),
    /// Zero of the dual value at `t = 0`.
    Defect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ChainRoot,
    DefectRoot,
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigenvalue<S: Scalar> {
    pub order_index: usize,
    pub lambda: S,
    pub bracket: (S, S),
    /// Root-function value at `lambda` (a time for chain roots, a dual value
    /// for defect roots).
    pub defect_residual: S,
    pub chain: BlowupChain<S>,
    pub method: Method,
    pub root_kind: RootKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket<S> {
    pub lo: S,
    pub hi: S,
    pub root_kind: RootKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumOptions<S> {
    pub integrator: IntegratorOptions<S>,
    /// Relative tolerance in `lambda`.
    pub tol: S,
    pub scan_ratio: S,
    /// Start of the scan; `None` means just above `lambda_b`.
    pub lambda_min: Option<S>,
    pub max_depth: usize,
    pub grid_n: usize,
    pub dedupe_rel: S,
    /// Largest accepted `|t_j|` at a converged chain root.
    pub root_acceptance: S,
}

impl<S: Scalar> Default for SpectrumOptions<S> {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::default(),
            tol: lit(1e-10),
            scan_ratio: lit(1.15),
            lambda_min: None,
            max_depth: DEFAULT_MAX_DEPTH,
            grid_n: DEFAULT_GRID,
            dedupe_rel: lit(1e-9),
            root_acceptance: lit(1e-6),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum RootValue<S> {
    Value(S),
    NegInf,
    Undefined,
}

impl<S: Scalar> RootValue<S> {
    fn sign(self) -> Option<S> {
        match self {
            RootValue::Value(v) if v == S::zero() => Some(S::zero()),
            RootValue::Value(v) => Some(v.signum()),
            RootValue::NegInf => Some(-S::one()),
            RootValue::Undefined => None,
        }
    }

    fn finite(self) -> Option<S> {
        match self {
            RootValue::Value(v) => Some(v),
            _ => None,
        }
    }
}

fn root_value<S: Scalar>(chain: &BlowupChain<S>, kind: RootKind) -> RootValue<S> {
    match kind {
        RootKind::ChainTime(j) => match chain.time(j) {
            crate::chain::ChainTime::Time(t) => RootValue::Value(t),
            crate::chain::ChainTime::BelowZero => RootValue::NegInf,
            crate::chain::ChainTime::Undefined => RootValue::Undefined,
        },
        RootKind::Defect => chain.defect().map_or(RootValue::Undefined, RootValue::Value),
    }
}

/// Whether the dual value at 0 varies continuously between chains of these
/// structures: same structure, or one more primal blow-up (the dual variable
/// is the reciprocal continued through the blow-up).
fn defect_compatible(a: (usize, SegmentKind), b: (usize, SegmentKind)) -> bool {
    let (lo, hi) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    lo == hi || (hi.0 == lo.0 + 1 && lo.1 == SegmentKind::PrimalK && hi.1 == SegmentKind::DualK)
}

/// Geometric grid from `lo` to `hi` (inclusive) with the given ratio; when
/// `lo <= 0` the offsets from `lo` are geometric instead.
pub fn scan_grid<S: Scalar>(lo: S, hi: S, ratio: S) -> Vec<S> {
    if !(hi > lo) {
        return vec![lo];
    }
    let mut out = vec![lo];
    if lo > S::zero() {
        let mut x = lo;
        loop {
            x *= ratio;
            if x >= hi {
                break;
            }
            out.push(x);
        }
    } else {
        let mut step = lo.abs().max(S::one()) * (ratio - S::one());
        let mut x = lo;
        loop {
            x += step;
            step *= ratio;
            if x >= hi {
                break;
            }
            out.push(x);
        }
    }
    out.push(hi);
    out
}

fn geometric_points<S: Scalar>(lo: S, hi: S, n: usize) -> Vec<S> {
    let n = n.max(2);
    if lo > S::zero() {
        let r = (hi / lo).ln() / S::from_usize(n - 1).unwrap();
        (0..n).map(|i| lo * (r * S::from_usize(i).unwrap()).exp()).collect()
    } else {
        let step = (hi - lo) / S::from_usize(n - 1).unwrap();
        (0..n).map(|i| lo + step * S::from_usize(i).unwrap()).collect()
    }
}

fn chains_on<S: Scalar>(
    c: &CoefficientSet<S>,
    grid: &[S],
    opts: &SpectrumOptions<S>,
) -> Result<Vec<BlowupChain<S>>, ChainError> {
    grid.par_iter()
        .map(|&l| compute_chain(c, l, opts.max_depth, &opts.integrator))
        .collect()
}

fn brackets_from<S: Scalar>(grid: &[S], chains: &[BlowupChain<S>], kind: RootKind) -> Vec<Bracket<S>> {
    let mut out = Vec::new();
    for i in 0..grid.len().saturating_sub(1) {
        let (a, b) = (&chains[i], &chains[i + 1]);
        let (fa, fb) = (root_value(a, kind), root_value(b, kind));
        let (Some(sa), Some(sb)) = (fa.sign(), fb.sign()) else {
            continue;
        };
        if kind == RootKind::Defect && !defect_compatible(a.structure(), b.structure()) {
            continue;
        }
        if sa == S::zero() {
            out.push(Bracket { lo: grid[i], hi: grid[i], root_kind: kind });
        } else if sa != sb && sb != S::zero() {
            out.push(Bracket { lo: grid[i], hi: grid[i + 1], root_kind: kind });
        }
    }
    if let (Some(last), Some(ch)) = (grid.last(), chains.last()) {
        if root_value(ch, kind).sign() == Some(S::zero()) {
            out.push(Bracket { lo: *last, hi: *last, root_kind: kind });
        }
    }
    out
}

/// Brackets of sign changes of `t_j` (chain roots) on a geometric grid of
/// `n_scan` points in `[lambda_lo, lambda_hi]`.
pub fn bracket_scan<S: Scalar>(
    c: &CoefficientSet<S>,
    j: usize,
    lambda_lo: S,
    lambda_hi: S,
    n_scan: usize,
    opts: &SpectrumOptions<S>,
) -> Result<Vec<Bracket<S>>, SpectrumError> {
    scan(c, RootKind::ChainTime(j), lambda_lo, lambda_hi, n_scan, opts)
}

/// Same as [`bracket_scan`] for an arbitrary root kind.
pub fn scan<S: Scalar>(
    c: &CoefficientSet<S>,
    kind: RootKind,
    lambda_lo: S,
    lambda_hi: S,
    n_scan: usize,
    opts: &SpectrumOptions<S>,
) -> Result<Vec<Bracket<S>>, SpectrumError> {
    if let RootKind::ChainTime(0) = kind {
        return Err(SpectrumError::BracketInvalid("chain depth must be at least 1".into()));
    }
    let grid = geometric_points(lambda_lo, lambda_hi, n_scan);
    let chains = chains_on(c, &grid, opts)?;
    Ok(brackets_from(&grid, &chains, kind))
}

/// Refines a root of `root_kind` inside `bracket` by bisection with
/// Illinois secant steps.
pub fn solve_eigenvalue<S: Scalar>(
    c: &CoefficientSet<S>,
    bracket: (S, S),
    root_kind: RootKind,
    tol: S,
    opts: &SpectrumOptions<S>,
) -> Result<Eigenvalue<S>, SpectrumError> {
    let (mut lo, mut hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let method = match root_kind {
        RootKind::ChainTime(0) => {
            return Err(SpectrumError::BracketInvalid("chain depth must be at least 1".into()))
        }
        RootKind::ChainTime(_) => Method::ChainRoot,
        RootKind::Defect => Method::DefectRoot,
    };
    let eval = |l: S| compute_chain(c, l, opts.max_depth, &opts.integrator);
    let mut ch_lo = eval(lo)?;
    if lo == hi {
        let residual = root_value(&ch_lo, root_kind).finite().unwrap_or(S::zero());
        return Ok(Eigenvalue {
            order_index: 1,
            lambda: lo,
            bracket: (lo, hi),
            defect_residual: residual,
            chain: ch_lo,
            method,
            root_kind,
        });
    }
    let mut ch_hi = eval(hi)?;
    let mut f_lo = root_value(&ch_lo, root_kind);
    let mut f_hi = root_value(&ch_hi, root_kind);
    let (Some(s_lo), Some(s_hi)) = (f_lo.sign(), f_hi.sign()) else {
        return Err(SpectrumError::BracketInvalid(format!(
            "root function undefined at an end of [{lo}, {hi}]"
        )));
    };
    if root_kind == RootKind::Defect && !defect_compatible(ch_lo.structure(), ch_hi.structure()) {
        return Err(SpectrumError::StructureChangedInsideBracket {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    if s_lo == S::zero() || s_hi == S::zero() {
        let (l, ch, f) = if s_lo == S::zero() { (lo, ch_lo, f_lo) } else { (hi, ch_hi, f_hi) };
        return Ok(Eigenvalue {
            order_index: 1,
            lambda: l,
            bracket: (lo, hi),
            defect_residual: f.finite().unwrap_or(S::zero()),
            chain: ch,
            method,
            root_kind,
        });
    }
    if s_lo == s_hi {
        return Err(SpectrumError::BracketInvalid(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }

    // Illinois weights on finite ends; plain bisection otherwise or when stalled
    let (mut w_lo, mut w_hi) = (S::one(), S::one());
    let mut last_side = 0i8;
    let mut best: Option<(S, BlowupChain<S>, RootValue<S>)> = None;
    for iter in 0..300 {
        let scale = lo.abs().max(hi.abs()).max(S::one());
        if hi - lo <= tol * scale {
            break;
        }
        let mid = (lo + hi) / lit(2.0);
        let x = match (f_lo.finite(), f_hi.finite()) {
            (Some(a), Some(b)) if iter % 4 != 3 => {
                let (a, b) = (a * w_lo, b * w_hi);
                let x = (lo * b - hi * a) / (b - a);
                let margin = (hi - lo) * lit(1e-3);
                if x > lo + margin && x < hi - margin {
                    x
                } else {
                    mid
                }
            }
            _ => mid,
        };
        let ch = eval(x)?;
        let fx = root_value(&ch, root_kind);
        let Some(sx) = fx.sign() else {
            return Err(SpectrumError::StructureChangedInsideBracket {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        };
        if sx == S::zero() {
            best = Some((x, ch, fx));
            break;
        }
        if sx == s_lo {
            lo = x;
            f_lo = fx;
            ch_lo = ch;
            w_lo = S::one();
            if last_side == 1 {
                w_hi /= lit(2.0);
            }
            last_side = 1;
        } else {
            hi = x;
            f_hi = fx;
            ch_hi = ch;
            w_hi = S::one();
            if last_side == -1 {
                w_lo /= lit(2.0);
            }
            last_side = -1;
        }
    }

    let (lambda, ch_mid, f_mid) = match best {
        Some(b) => b,
        None => {
            let mid = (lo + hi) / lit(2.0);
            let ch = eval(mid)?;
            let f = root_value(&ch, root_kind);
            (mid, ch, f)
        }
    };

    if root_kind == RootKind::Defect && !defect_compatible(ch_lo.structure(), ch_hi.structure()) {
        return Err(SpectrumError::StructureChangedInsideBracket {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    if let RootKind::ChainTime(_) = root_kind {
        let residual = [f_mid, f_lo, f_hi]
            .iter()
            .filter_map(|f| f.finite())
            .map(|v| v.abs())
            .fold(S::infinity(), S::min);
        if !(residual <= opts.root_acceptance * c.horizon().max(S::one())) {
            return Err(SpectrumError::NotARoot {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                residual: residual.to_f64_lossy(),
            });
        }
    }

    let residual = f_mid
        .finite()
        .or(f_hi.finite())
        .or(f_lo.finite())
        .unwrap_or(S::zero());
    let is_defect_at_zero = |ch: &BlowupChain<S>| matches!(ch.termination, ChainTermination::DefectAtZero { .. });
    // snapshot with the acceptance tolerance, so a breakpoint accepted as
    // a root lands at zero instead of just below it
    let snapped = compute_chain_snapped(
        c,
        lambda,
        opts.max_depth,
        &opts.integrator,
        (opts.root_acceptance * c.horizon().max(S::one())).max(lit(ZERO_SNAP)),
    )?;
    let chain = if is_defect_at_zero(&snapped) {
        snapped
    } else if is_defect_at_zero(&ch_mid) {
        ch_mid
    } else if is_defect_at_zero(&ch_hi) {
        ch_hi
    } else if is_defect_at_zero(&ch_lo) {
        ch_lo
    } else {
        ch_mid
    };
    Ok(Eigenvalue {
        order_index: 1,
        lambda,
        bracket: (lo, hi),
        defect_residual: residual,
        chain,
        method,
        root_kind,
    })
}

/// Structural status of `(0, lambda_b]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BelowThreshold {
    /// The all-eigenvalue condition holds: no eigenvalue lies below `lambda_b`.
    CertifiedEmpty,
    Unknown,
}

pub fn below_threshold_status<S: Scalar>(c: &CoefficientSet<S>, grid_n: usize) -> BelowThreshold {
    if check_all_eigen_condition(c, grid_n) {
        BelowThreshold::CertifiedEmpty
    } else {
        BelowThreshold::Unknown
    }
}

/// All eigenvalues found by chain and defect roots in
/// `[lambda_min, lambda_max]`, sorted and deduplicated.
pub fn enumerate<S: Scalar>(
    c: &CoefficientSet<S>,
    lambda_max: S,
    opts: &SpectrumOptions<S>,
) -> Result<Vec<Eigenvalue<S>>, SpectrumError> {
    let lo = match opts.lambda_min {
        Some(l) => l,
        None => {
            let lb = lambda_b(c, opts.grid_n);
            lb + lb.abs() * lit(1e-6)
        }
    };
    if !(lambda_max > lo) {
        return Ok(Vec::new());
    }
    let grid = scan_grid(lo, lambda_max, opts.scan_ratio);
    let chains = chains_on(c, &grid, opts)?;
    let max_j = chains.iter().map(|ch| ch.depth() + 1).max().unwrap_or(1);

    let mut brackets: Vec<Bracket<S>> = (1..=max_j)
        .step_by(2)
        .flat_map(|j| brackets_from(&grid, &chains, RootKind::ChainTime(j)))
        .collect();
    brackets.extend(brackets_from(&grid, &chains, RootKind::Defect));

    let solved: Vec<Result<Eigenvalue<S>, SpectrumError>> = brackets
        .par_iter()
        .map(|b| solve_eigenvalue(c, (b.lo, b.hi), b.root_kind, opts.tol, opts))
        .collect();
    let mut eigs = Vec::new();
    for r in solved {
        match r {
            Ok(e) => eigs.push(e),
            Err(SpectrumError::NotARoot { .. }) | Err(SpectrumError::StructureChangedInsideBracket { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    eigs.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    let mut out: Vec<Eigenvalue<S>> = Vec::with_capacity(eigs.len());
    for e in eigs {
        if let Some(prev) = out.last() {
            if (e.lambda - prev.lambda).abs() <= opts.dedupe_rel * e.lambda.abs().max(S::one()) {
                continue;
            }
        }
        out.push(e);
    }
    for (i, e) in out.iter_mut().enumerate() {
        e.order_index = i + 1;
    }
    if let Some(first) = out.first_mut() {
        first.chain.offset_n = Some(first.chain.depth() / 2);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport<S> {
    /// `(m, lambda_m / m^2)`
    pub ratios: Vec<(usize, S)>,
    pub tail_min: S,
    pub tail_max: S,
}

/// Ratios `lambda_m / m^2` with `m = order_index`, and their extremes over
/// the tail half.
pub fn growth_ratios<S: Scalar>(eigs: &[Eigenvalue<S>]) -> GrowthReport<S> {
    let ratios: Vec<(usize, S)> = eigs
        .iter()
        .map(|e| {
            let m = S::from_usize(e.order_index).unwrap();
            (e.order_index, e.lambda / (m * m))
        })
        .collect();
    let tail = &ratios[ratios.len() / 2..];
    let tail_min = tail.iter().map(|r| r.1).fold(S::infinity(), S::min);
    let tail_max = tail.iter().map(|r| r.1).fold(S::neg_infinity(), S::max);
    GrowthReport { ratios, tail_min, tail_max }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodBounds<S> {
    pub m: usize,
    pub lower: S,
    pub upper: S,
    pub envelopes_used: Envelopes<S>,
    #[serde(rename = "H_under_22")]
    pub h_under_22: S,
    /// `lower <= upper`; may fail for small `m`.
    pub ordered: bool,
}

/// Monotonicity margin of the constant auxiliary system built from the upper
/// envelopes with `H22` replaced by `h_under_22`.
pub fn auxiliary_beta<S: Scalar>(env: &Envelopes<S>, h_under_22: S) -> S {
    let p = Pointwise {
        h11: env.h11_hi,
        h12: env.h21_hi,
        h13: env.h13_abs_hi,
        h21: env.h21_hi,
        h22: h_under_22,
        h23: env.h23_hi,
        h31: env.h13_abs_hi,
        h32: env.h23_hi,
        h33: env.h33_lo,
        weight: env.weight_hi,
    };
    pointwise_margin(&p)
}

/// Starting from `start` (default: the lower `H22` envelope), doubles the
/// magnitude until the auxiliary system is monotone.
pub fn default_h_under_22<S: Scalar>(env: &Envelopes<S>, start: Option<S>) -> Result<S, SpectrumError> {
    let mut h = start.unwrap_or(env.h22_lo).min(env.h22_hi);
    if !(h < S::zero()) {
        h = env.h22_lo;
    }
    for _ in 0..=20 {
        if auxiliary_beta(env, h) > S::zero() {
            return Ok(h);
        }
        h *= lit(2.0);
    }
    Err(SpectrumError::AuxiliaryInfeasible)
}

/// Period bounds from explicit envelopes.
pub fn period_bounds_from<S: Scalar>(
    env: &Envelopes<S>,
    horizon: S,
    m: usize,
    h_under_22: Option<S>,
) -> Result<PeriodBounds<S>, SpectrumError> {
    let h_under = match h_under_22 {
        Some(h) if h < env.h22_hi && auxiliary_beta(env, h) > S::zero() => h,
        other => default_h_under_22(env, other)?,
    };
    let pi2 = S::PI() * S::PI();
    let mm = S::from_usize(m).unwrap();
    let m2 = mm * mm;
    let t2 = horizon * horizon;
    let lower = (env.h22_hi - h_under) / env.weight_lo + pi2 * m2 / (-lit::<S>(2.0) * env.h11_hi * env.weight_lo * t2);
    let upper = lit::<S>(4.0) * pi2 * m2 / (-env.h11_lo * env.weight_hi * t2);
    Ok(PeriodBounds {
        m,
        lower,
        upper,
        envelopes_used: *env,
        h_under_22: h_under,
        ordered: lower <= upper,
    })
}

/// Period bounds with grid envelopes (default margins).
pub fn period_bounds<S: Scalar>(
    c: &CoefficientSet<S>,
    m: usize,
    h_under_22: Option<S>,
    grid_n: usize,
) -> Result<PeriodBounds<S>, SpectrumError> {
    let env = envelopes_default(c, grid_n)?;
    period_bounds_from(&env, c.horizon(), m, h_under_22)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodClass {
    GreaterThanM,
    LessThanM,
    Inconclusive,
}

pub fn classify_against<S: Scalar>(lambda: S, bounds: &PeriodBounds<S>) -> PeriodClass {
    if lambda > bounds.upper {
        PeriodClass::GreaterThanM
    } else if lambda < bounds.lower {
        PeriodClass::LessThanM
    } else {
        PeriodClass::Inconclusive
    }
}

pub fn classify_period<S: Scalar>(
    c: &CoefficientSet<S>,
    lambda: S,
    m: usize,
    h_under_22: Option<S>,
    grid_n: usize,
) -> Result<PeriodClass, SpectrumError> {
    Ok(classify_against(lambda, &period_bounds(c, m, h_under_22, grid_n)?))
}
