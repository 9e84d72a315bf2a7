//! Blow-up chains: alternating primal and dual Riccati segments restarted
//! from zero at each blow-up time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeffs::CoefficientSet;
use crate::riccati::{integrate, Equation, IntegratorOptions, Repr, RiccatiError, RiccatiSolution, TerminationKind};
use crate::scalar::{lit, Scalar};

pub const DEFAULT_MAX_DEPTH: usize = 256;

/// Slack added to the localization error when deciding whether an event
/// happened at `t = 0`.
pub const ZERO_SNAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
    #[error("chain depth must be at least 1")]
    InvalidDepth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    PrimalK,
    DualK,
}

impl SegmentKind {
    pub fn equation(self) -> Equation {
        match self {
            SegmentKind::PrimalK => Equation::Primal,
            SegmentKind::DualK => Equation::Dual,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            SegmentKind::PrimalK => SegmentKind::DualK,
            SegmentKind::DualK => SegmentKind::PrimalK,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainTermination<S> {
    /// Breakpoint `j` fell below zero, at the raw time `t_raw`.
    CrossedZero { j: usize, t_raw: S },
    /// The last segment reached `t = 0`; `defect` is its dual-variable value there.
    DefectAtZero { defect: S, repr: Repr },
    /// A dual segment returned to zero inside `(0, previous breakpoint)`.
    /// `continued_defect` is the dual value at 0 of the trajectory continued
    /// through the return, when it reaches 0.
    ZeroReturnAtInterior { t_star: S, continued_defect: Option<S> },
    DepthExceeded,
}

/// Breakpoints `T = t_0 > t_1 > ...` with the kind of each segment.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupChain<S: Scalar> {
    pub lambda: S,
    pub breakpoints: Vec<S>,
    #[serde(rename = "kinds")]
    pub segment_kinds: Vec<SegmentKind>,
    pub termination: ChainTermination<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset_n: Option<usize>,
    #[serde(skip)]
    segments: Vec<RiccatiSolution<S>>,
}

/// Value of `t_j(lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainTime<S> {
    /// The breakpoint, or the raw (negative) crossing time when breakpoint `j`
    /// is the one that left `[0, T]`.
    Time(S),
    /// An earlier breakpoint already left `[0, T]`, or the chain reached 0
    /// before depth `j`.
    BelowZero,
    /// The chain stopped for another reason before depth `j`.
    Undefined,
}

impl<S: Scalar> ChainTime<S> {
    /// Sign used for bracketing; `BelowZero` counts as negative.
    pub fn sign(&self) -> Option<S> {
        match *self {
            ChainTime::Time(t) if t == S::zero() => Some(S::zero()),
            ChainTime::Time(t) => Some(t.signum()),
            ChainTime::BelowZero => Some(-S::one()),
            ChainTime::Undefined => None,
        }
    }

    pub fn finite(&self) -> Option<S> {
        match *self {
            ChainTime::Time(t) => Some(t),
            _ => None,
        }
    }
}

impl<S: Scalar> BlowupChain<S> {
    /// Number of interior breakpoints (blow-ups inside `[0, T)`).
    pub fn depth(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Riccati trajectories of the segments, in chain order.
    pub fn segments(&self) -> &[RiccatiSolution<S>] {
        &self.segments
    }

    pub fn final_kind(&self) -> SegmentKind {
        *self.segment_kinds.last().expect("a chain has at least one segment")
    }

    /// `(interior breakpoint count, kind of the final segment)`.
    pub fn structure(&self) -> (usize, SegmentKind) {
        (self.depth(), self.final_kind())
    }

    /// Defect at `t = 0`: defined when the chain ends at zero, and for an
    /// interior return to zero through its continuation.
    pub fn defect(&self) -> Option<S> {
        match self.termination {
            ChainTermination::DefectAtZero { defect, .. } => Some(defect),
            ChainTermination::ZeroReturnAtInterior { continued_defect, .. } => continued_defect,
            _ => None,
        }
    }

    pub fn is_eigen_configuration(&self, tol: S) -> bool {
        matches!(self.termination, ChainTermination::DefectAtZero { defect, .. } if defect.abs() <= tol)
    }

    /// `t_j(lambda)` read off the chain.
    pub fn time(&self, j: usize) -> ChainTime<S> {
        if j < self.breakpoints.len() {
            return ChainTime::Time(self.breakpoints[j]);
        }
        match self.termination {
            ChainTermination::CrossedZero { j: jc, t_raw } if jc == j => ChainTime::Time(t_raw),
            ChainTermination::CrossedZero { .. } | ChainTermination::DefectAtZero { .. } => ChainTime::BelowZero,
            _ => ChainTime::Undefined,
        }
    }

    /// JSON document `{"lambda", "breakpoints", "kinds", "termination"}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("chain serializes")
    }
}

/// Builds the chain at `lambda`, stopping after `max_depth` interior breakpoints.
pub fn compute_chain<S: Scalar>(
    c: &CoefficientSet<S>,
    lambda: S,
    max_depth: usize,
    opts: &IntegratorOptions<S>,
) -> Result<BlowupChain<S>, ChainError> {
    compute_chain_snapped(c, lambda, max_depth, opts, lit(ZERO_SNAP))
}

/// [`compute_chain`] with an explicit snap: events within
/// `localization_error + snap` of 0 count as landing at 0.
pub fn compute_chain_snapped<S: Scalar>(
    c: &CoefficientSet<S>,
    lambda: S,
    max_depth: usize,
    opts: &IntegratorOptions<S>,
    snap: S,
) -> Result<BlowupChain<S>, ChainError> {
    let mut seg_opts = *opts;
    seg_opts.stop_on_zero_return = false;
    let snap_base = snap;

    let mut breakpoints = vec![c.horizon()];
    let mut kinds = vec![SegmentKind::PrimalK];
    let mut segments = Vec::new();

    let termination = loop {
        let kind = *kinds.last().unwrap();
        let start = *breakpoints.last().unwrap();
        let sol = integrate(c, kind.equation(), lambda, start, S::zero(), &seg_opts)?;
        let snap = sol.termination.localization_error + snap_base;
        let at_zero = |sol: &RiccatiSolution<S>| {
            sol.value_at(S::zero()).map(|(v, repr)| {
                let defect = sol.dual_value_at(S::zero()).unwrap_or(v);
                (defect, repr)
            })
        };

        if kind == SegmentKind::DualK {
            if let Some(&t_zero) = sol.zero_returns.first() {
                if t_zero.abs() <= snap {
                    segments.push(sol);
                    break ChainTermination::DefectAtZero {
                        defect: S::zero(),
                        repr: Repr::Direct,
                    };
                }
                if t_zero > snap {
                    let continued_defect = at_zero(&sol).map(|(d, _)| d);
                    segments.push(sol);
                    break ChainTermination::ZeroReturnAtInterior {
                        t_star: t_zero,
                        continued_defect,
                    };
                }
            }
        }

        match sol.termination.kind {
            TerminationKind::BlowUpPlusInf { t_star } | TerminationKind::BlowUpMinusInf { t_star } => {
                if t_star.abs() <= snap {
                    breakpoints.push(t_star.max(S::zero()));
                    segments.push(sol);
                    break ChainTermination::DefectAtZero {
                        defect: S::zero(),
                        repr: Repr::Reciprocal,
                    };
                }
                if t_star < S::zero() {
                    segments.push(sol);
                    break ChainTermination::CrossedZero {
                        j: breakpoints.len(),
                        t_raw: t_star,
                    };
                }
                segments.push(sol);
                breakpoints.push(t_star);
                if breakpoints.len() > max_depth {
                    break ChainTermination::DepthExceeded;
                }
                kinds.push(kind.flip());
            }
            TerminationKind::ReachedTimeLimit { .. } | TerminationKind::ZeroReturn { .. } => {
                let (defect, repr) = at_zero(&sol).expect("segment covers t = 0");
                segments.push(sol);
                break ChainTermination::DefectAtZero { defect, repr };
            }
        }
    };

    Ok(BlowupChain {
        lambda,
        breakpoints,
        segment_kinds: kinds,
        termination,
        offset_n: None,
        segments,
    })
}

/// `t_j(lambda)` for `j >= 1`.
pub fn chain_time<S: Scalar>(
    c: &CoefficientSet<S>,
    lambda: S,
    j: usize,
    opts: &IntegratorOptions<S>,
) -> Result<ChainTime<S>, ChainError> {
    if j == 0 {
        return Err(ChainError::InvalidDepth);
    }
    Ok(compute_chain(c, lambda, j, opts)?.time(j))
}

/// Dual-variable value of the chain at `t = 0`, when defined.
pub fn eigen_defect<S: Scalar>(
    c: &CoefficientSet<S>,
    lambda: S,
    opts: &IntegratorOptions<S>,
) -> Result<Option<S>, ChainError> {
    Ok(compute_chain(c, lambda, DEFAULT_MAX_DEPTH, opts)?.defect())
}
