//! Monte-Carlo assembly of eigenfunctions from the decoupled forward SDEs,
//! alternating primal and dual representations along the blow-up chain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{BlowupChain, ChainTermination, SegmentKind};
use crate::coeffs::{CoefficientSet, STRUCTURAL_TOL};
use crate::riccati::{dual_coefficients, Equation, Repr, RiccatiSolution};
use crate::scalar::{lit, Scalar};
use crate::spectrum::Eigenvalue;

/// Largest `|k~(0)|` accepted as an eigen configuration.
pub const EIGEN_DEFECT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbsdeError {
    #[error("1 - k*H33 vanishes at t = {t} (k = {k})")]
    SingularDenominator { t: f64, k: f64 },
    #[error("chain is not an eigen configuration: {0}")]
    ChainNotEigen(String),
    #[error("Riccati value is not finite at t = {t}")]
    NonFiniteRiccati { t: f64 },
    #[error("path {path} overflowed at step {step}")]
    NonFiniteState { path: usize, step: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// One piece of the time partition with the representation used on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<S> {
    pub start: S,
    pub end: S,
    pub kind: SegmentKind,
}

/// One simulated eigenfunction path.
#[derive(Clone, Debug, Serialize)]
pub struct EigenfunctionPath<S> {
    pub lambda: S,
    pub t: Vec<S>,
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub z: Vec<S>,
    /// Brownian increments, `dw[i]` over `[t[i], t[i+1]]`.
    pub dw: Vec<S>,
    /// Representation in force at each grid point (boundaries belong to the later interval).
    pub kinds: Vec<SegmentKind>,
    /// `k` on primal points, `k~` on dual points.
    pub riccati: Vec<S>,
    pub segments: Vec<Interval<S>>,
    pub brownian_seed: u64,
    pub path_index: usize,
    pub y0: S,
}

impl<S: Scalar> EigenfunctionPath<S> {
    /// CSV with columns `t,x,y,z,segment_kind`.
    pub fn to_csv(&self) -> String {
        rows_csv(&self.t, &self.x, &self.y, &self.z, &self.kinds)
    }
}

fn kind_name(k: SegmentKind) -> &'static str {
    match k {
        SegmentKind::PrimalK => "primal",
        SegmentKind::DualK => "dual",
    }
}

fn rows_csv<S: Scalar>(t: &[S], x: &[S], y: &[S], z: &[S], kinds: &[SegmentKind]) -> String {
    let mut out = String::from("t,x,y,z,segment_kind\n");
    for i in 0..t.len() {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            t[i].to_f64_lossy(),
            x[i].to_f64_lossy(),
            y[i].to_f64_lossy(),
            z[i].to_f64_lossy(),
            kind_name(kinds[i])
        ));
    }
    out
}

/// Pointwise mean over paths sharing one grid, as CSV.
pub fn mean_path_csv<S: Scalar>(paths: &[EigenfunctionPath<S>]) -> String {
    let Some(first) = paths.first() else {
        return String::from("t,x,y,z,segment_kind\n");
    };
    let n = S::from_usize(paths.len()).unwrap();
    let mean = |f: fn(&EigenfunctionPath<S>) -> &Vec<S>| -> Vec<S> {
        (0..first.t.len())
            .map(|i| paths.iter().map(|p| f(p)[i]).fold(S::zero(), |a, b| a + b) / n)
            .collect()
    };
    rows_csv(&first.t, &mean(|p| &p.x), &mean(|p| &p.y), &mean(|p| &p.z), &first.kinds)
}

/// `m = k (H31 + H32 k) / (1 - k H33)`; when the denominator vanishes and
/// the structural identity makes it removable, `m = H31 k`.
pub fn algebraic_m<S: Scalar>(c: &CoefficientSet<S>, t: S, k: S) -> Result<S, FbsdeError> {
    let p = c.at(t);
    let den = S::one() - k * p.h33;
    if den.abs() <= lit::<S>(1e-12) * (k * p.h33).abs().max(S::one()) {
        if (p.h32 + p.h33 * p.h31).abs() <= lit(STRUCTURAL_TOL) {
            return Ok(p.h31 * k);
        }
        return Err(FbsdeError::SingularDenominator {
            t: t.to_f64_lossy(),
            k: k.to_f64_lossy(),
        });
    }
    Ok(k * (p.h31 + p.h32 * k) / den)
}

/// Partition of `[0, T]` at the midpoints between consecutive breakpoints,
/// listed from `t = 0` upwards; the first piece is dual, the last primal.
pub fn segment_intervals<S: Scalar>(chain: &BlowupChain<S>) -> Result<Vec<Interval<S>>, FbsdeError> {
    match chain.termination {
        ChainTermination::DefectAtZero { defect, .. } if defect.abs() <= lit(EIGEN_DEFECT_TOL) => {}
        ref other => {
            return Err(FbsdeError::ChainNotEigen(format!("termination {other:?}")));
        }
    }
    let p = &chain.breakpoints;
    let d = p.len() - 1;
    if d.is_multiple_of(2) {
        return Err(FbsdeError::ChainNotEigen(format!(
            "{d} interior breakpoints leave a primal piece at t = 0"
        )));
    }
    // edges[i] separates the pieces around breakpoint i (index from the top)
    let mut edges: Vec<S> = (0..d).map(|i| (p[i] + p[i + 1]) / lit(2.0)).collect();
    edges.reverse();
    let mut out = Vec::with_capacity(d + 1);
    let mut lo = S::zero();
    for (n, &e) in edges.iter().chain(std::iter::once(&p[0])).enumerate() {
        let from_top = d - n;
        let kind = if from_top.is_multiple_of(2) { SegmentKind::PrimalK } else { SegmentKind::DualK };
        out.push(Interval { start: lo, end: e, kind });
        lo = e;
    }
    Ok(out)
}

/// `1/(2 (max|H13| + 1)^2)`, the weak-uniqueness constant for both the
/// primal and dual decoupled systems.
pub fn uniqueness_constant<S: Scalar>(c: &CoefficientSet<S>, grid_n: usize) -> S {
    let h13 = crate::coeffs::validation_grid(c, grid_n)
        .into_iter()
        .map(|t| c.at(t).h13.abs())
        .fold(S::zero(), S::max);
    S::one() / (lit::<S>(2.0) * (h13 + S::one()) * (h13 + S::one()))
}

fn value_in<S: Scalar>(sol: &RiccatiSolution<S>, eq: Equation, t: S) -> Option<S> {
    sol.value_at(t).map(|(v, r)| {
        if (sol.equation == eq) == (r == Repr::Direct) {
            v
        } else {
            S::one() / v
        }
    })
}

/// Riccati value of equation `eq` at `t` on the piece straddling breakpoint
/// `i` (from the top): the own segment below it, the reciprocal of the
/// previous segment above it.
fn chain_value<S: Scalar>(chain: &BlowupChain<S>, i: usize, eq: Equation, t: S) -> Option<S> {
    let segs = chain.segments();
    let p = chain.breakpoints[i];
    if t <= p {
        if let Some(v) = segs.get(i).and_then(|s| value_in(s, eq, t)) {
            return Some(v);
        }
    }
    if i == 0 {
        return None;
    }
    value_in(&segs[i - 1], eq, t.max(p))
}

/// Coefficients of one grid step shared by every path.
#[derive(Clone, Copy, Debug)]
struct GridPoint<S> {
    t: S,
    kind: SegmentKind,
    riccati: S,
    drift: S,
    diffusion: S,
    m: S,
    /// `H~31, H~32, H~33` on dual points.
    z_map: [S; 3],
}

fn build_grid<S: Scalar>(
    c: &CoefficientSet<S>,
    chain: &BlowupChain<S>,
    intervals: &[Interval<S>],
    n_steps: usize,
) -> Result<Vec<GridPoint<S>>, FbsdeError> {
    let lambda = chain.lambda;
    let dual = dual_coefficients(c, lambda);
    let horizon = c.horizon();
    let d = intervals.len() - 1;
    let mut times: Vec<(S, usize)> = Vec::with_capacity(n_steps + intervals.len() + 1);
    for (n, iv) in intervals.iter().enumerate() {
        let share = ((iv.end - iv.start) / horizon * S::from_usize(n_steps).unwrap())
            .round()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let h = (iv.end - iv.start) / S::from_usize(share).unwrap();
        for s in 0..share {
            let t = if s == 0 { iv.start } else { iv.start + h * S::from_usize(s).unwrap() };
            times.push((t, n));
        }
    }
    times.push((horizon, d));

    let last = times.len() - 1;
    times
        .into_iter()
        .enumerate()
        .map(|(g, (t, n))| {
            let kind = intervals[n].kind;
            let from_top = d - n;
            let mut r = chain_value(chain, from_top, kind.equation(), t)
                .ok_or(FbsdeError::NonFiniteRiccati { t: t.to_f64_lossy() })?;
            // boundary data hold exactly: k~(0) = 0 and k(T) = 0
            if g == 0 || g == last {
                r = S::zero();
            }
            if !r.is_finite() {
                return Err(FbsdeError::NonFiniteRiccati { t: t.to_f64_lossy() });
            }
            Ok(match kind {
                SegmentKind::PrimalK => {
                    let p = c.at(t);
                    let m = algebraic_m(c, t, r)?;
                    GridPoint {
                        t,
                        kind,
                        riccati: r,
                        drift: p.h21 + (p.h22 - lambda * p.weight) * r + p.h23 * m,
                        diffusion: p.h31 + p.h32 * r + p.h33 * m,
                        m,
                        z_map: [S::zero(); 3],
                    }
                }
                SegmentKind::DualK => {
                    let p = dual.at(t);
                    let m = algebraic_m(&dual, t, r)?;
                    GridPoint {
                        t,
                        kind,
                        riccati: r,
                        drift: p.h21 + p.h22 * r + p.h23 * m,
                        diffusion: p.h31 + p.h32 * r + p.h33 * m,
                        m,
                        z_map: [p.h31, p.h32, p.h33],
                    }
                }
            })
        })
        .collect()
}

fn brownian<S: Scalar>(seed: u64, path: usize, dts: impl Iterator<Item = S>) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    dts.map(|dt| {
        let g: f64 = StandardNormal.sample(&mut rng);
        S::of(g) * dt.sqrt()
    })
    .collect()
}

fn simulate_path<S: Scalar>(
    grid: &[GridPoint<S>],
    segments: &[Interval<S>],
    lambda: S,
    seed: u64,
    path: usize,
    y0: S,
) -> Result<EigenfunctionPath<S>, FbsdeError> {
    let n = grid.len();
    let dw = brownian(seed, path, grid.windows(2).map(|w| w[1].t - w[0].t));
    let (mut x, mut y, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));

    // state: x~ on dual points, x on primal points
    let mut state = y0;
    for i in 0..n {
        let g = &grid[i];
        if i > 0 {
            let prev = &grid[i - 1];
            let dt = g.t - prev.t;
            state *= S::one() + prev.drift * dt + prev.diffusion * dw[i - 1];
            if prev.kind != g.kind {
                // hand-off: the new forward state is the old backward value,
                // k~ x~ into the primal piece or k x into the dual piece;
                // both Riccati values come from one segment and k k~ = 1
                state /= g.riccati;
            }
        }
        if !state.is_finite() {
            return Err(FbsdeError::NonFiniteState { path, step: i });
        }
        match g.kind {
            SegmentKind::PrimalK => {
                x.push(state);
                y.push(g.riccati * state);
                z.push(g.m * state);
            }
            SegmentKind::DualK => {
                let yt = g.riccati * state;
                let zt = g.m * state;
                x.push(yt);
                y.push(state);
                z.push(g.z_map[0] * state + g.z_map[1] * yt + g.z_map[2] * zt);
            }
        }
    }
    Ok(EigenfunctionPath {
        lambda,
        t: grid.iter().map(|g| g.t).collect(),
        x,
        y,
        z,
        dw,
        kinds: grid.iter().map(|g| g.kind).collect(),
        riccati: grid.iter().map(|g| g.riccati).collect(),
        segments: segments.to_vec(),
        brownian_seed: seed,
        path_index: path,
        y0,
    })
}

/// Simulates `n_paths` eigenfunction paths for `eig` with `x~(0) = y0`.
pub fn simulate_eigenfunction<S: Scalar>(
    c: &CoefficientSet<S>,
    eig: &Eigenvalue<S>,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    y0: S,
) -> Result<Vec<EigenfunctionPath<S>>, FbsdeError> {
    if n_steps == 0 {
        return Err(FbsdeError::InvalidInput("n_steps must be positive".into()));
    }
    let intervals = segment_intervals(&eig.chain)?;
    let grid = build_grid(c, &eig.chain, &intervals, n_steps)?;
    (0..n_paths)
        .into_par_iter()
        .map(|p| simulate_path(&grid, &intervals, eig.lambda, seed, p, y0))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats<S> {
    /// RMS of the per-step backward-equation residual.
    pub backward_rms: S,
    /// RMS of the per-step forward-equation residual.
    pub forward_rms: S,
    pub steps: usize,
}

/// Per-step Euler residuals of the original Hamiltonian system along the paths.
pub fn bsde_residual<S: Scalar>(paths: &[EigenfunctionPath<S>], c: &CoefficientSet<S>, lambda: S) -> ResidualStats<S> {
    let (mut sb, mut sf, mut count) = (S::zero(), S::zero(), 0usize);
    for path in paths {
        for i in 0..path.t.len().saturating_sub(1) {
            let p = c.at(path.t[i]);
            let dt = path.t[i + 1] - path.t[i];
            let (x, y, z, dw) = (path.x[i], path.y[i], path.z[i], path.dw[i]);
            let rb = (path.y[i + 1] - y) + (p.h11 * x + p.h12 * y + p.h13 * z) * dt - z * dw;
            let rf = (path.x[i + 1] - x)
                - (p.h21 * x + (p.h22 - lambda * p.weight) * y + p.h23 * z) * dt
                - (p.h31 * x + p.h32 * y + p.h33 * z) * dw;
            sb += rb * rb;
            sf += rf * rf;
            count += 1;
        }
    }
    let n = S::from_usize(count.max(1)).unwrap();
    ResidualStats {
        backward_rms: (sb / n).sqrt(),
        forward_rms: (sf / n).sqrt(),
        steps: count,
    }
}
