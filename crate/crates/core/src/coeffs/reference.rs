//! Built-in reference systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::analysis::monotonicity_beta;
use super::function::CoefficientFn;
use super::json::{FunctionSpec, SystemSpec};
use super::set::CoefficientSet;
use crate::scalar::Scalar;

/// First negative root location of the worked example's dual equation,
/// obtained by high-accuracy integration; used only for the embedded JSON.
pub const EXAMPLE8_T1: f64 = 0.06596978467347701;

/// `H11 = 1`, `H22 = H33 = -1`, `h22 = -1`, other entries zero, `T = 1`.
pub const DIAGONAL_JSON: &str = r#"{
  "T": 1.0,
  "H11": {"kind": "constant", "value": 1.0},
  "H22": {"kind": "constant", "value": -1.0},
  "H33": {"kind": "constant", "value": -1.0},
  "h22": {"kind": "constant", "value": -1.0}
}"#;

/// The worked example with `T = T1 + T2`.
pub const EXAMPLE8_JSON: &str = r#"{
  "T": 0.8366047740654361,
  "H11": {"kind": "constant", "value": 3.0},
  "H12": {"kind": "constant", "value": 0.0},
  "H13": {"kind": "constant", "value": 1.0},
  "H21": {"kind": "constant", "value": 0.0},
  "H22": {"kind": "constant", "value": -4.0},
  "H23": {"kind": "constant", "value": 2.0},
  "H31": {"kind": "constant", "value": 1.0},
  "H32": {"kind": "constant", "value": 2.0},
  "H33": {"kind": "constant", "value": -2.0},
  "h22": {"kind": "pwlinear", "knots": [0.0, 0.06596978467347701, 0.8366047740654361],
          "values": [-0.34030215326522983, -1.0, -1.0]}
}"#;

/// Length of the primal segment of the worked example at `lambda = 3`:
/// `(pi/2 - atan(1/sqrt 11)) * 2/sqrt 11`.
pub fn example8_t2<S: Scalar>() -> S {
    let r11 = S::of(11.0).sqrt();
    (S::FRAC_PI_2() - (S::one() / r11).atan()) * (S::of(2.0) / r11)
}

/// Diagonal system on `[0, horizon]`.
pub fn diagonal<S: Scalar>(horizon: S) -> CoefficientSet<S> {
    let one = S::one();
    CoefficientSet::constant_symmetric(horizon, one, S::zero(), -one, S::zero(), -one, -one)
}

/// Worked-example system for a given `T1`; `T = T1 + T2`.
pub fn example8<S: Scalar>(t1: S) -> CoefficientSet<S> {
    let horizon = t1 + example8_t2::<S>();
    let c = |v: f64| CoefficientFn::constant(S::of(v), horizon);
    let slope_start = S::of(10.0) * t1 - S::one();
    let weight = CoefficientFn::piecewise_linear(
        vec![S::zero(), t1, horizon],
        vec![slope_start, -S::one(), -S::one()],
    )
    .expect("0 < T1 < T");
    CoefficientSet::new(
        horizon,
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

/// Spec document of the worked example for a given `T1` (used to emit configs).
pub fn example8_spec(t1: f64) -> SystemSpec {
    let horizon = t1 + example8_t2::<f64>();
    let c = |v| Some(FunctionSpec::constant(v));
    SystemSpec {
        T: horizon,
        H11: FunctionSpec::constant(3.0),
        H12: c(0.0),
        H13: c(1.0),
        H21: c(0.0),
        H22: FunctionSpec::constant(-4.0),
        H23: c(2.0),
        H31: c(1.0),
        H32: c(2.0),
        H33: FunctionSpec::constant(-2.0),
        h22: FunctionSpec::pwlinear(vec![0.0, t1, horizon], vec![10.0 * t1 - 1.0, -1.0, -1.0]),
    }
}

/// Time-dependent test system: `H11 = 1 + 0.1 sin t`, `H22 = -1 - 0.1 cos t`,
/// `H33 = -1`, `h22 = -1 - 0.05 sin t`, other entries zero.
pub fn wavy<S: Scalar>(horizon: S) -> CoefficientSet<S> {
    let knots = vec![S::zero(), horizon];
    let tenth = S::of(0.1);
    let twentieth = S::of(0.05);
    let h11 = CoefficientFn::from_fn(knots.clone(), move |t: S| S::one() + tenth * t.sin())
        .expect("valid knots");
    let h22 = CoefficientFn::from_fn(knots.clone(), move |t: S| -S::one() - tenth * t.cos())
        .expect("valid knots");
    let weight = CoefficientFn::from_fn(knots, move |t: S| -S::one() - twentieth * t.sin())
        .expect("valid knots");
    let zero = CoefficientFn::constant(S::zero(), horizon);
    let h33 = CoefficientFn::constant(-S::one(), horizon);
    CoefficientSet::symmetric(horizon, h11, zero.clone(), h22, zero, h33, weight)
        .expect("consistent horizons")
}

/// Smooth random coefficient set satisfying the structural identity,
/// `h22 < 0` and a monotonicity margin above 0.05; rejection-sampled from `seed`.
pub fn sampled_valid_set(seed: u64) -> CoefficientSet<f64> {
    let base = |salt: u64, lo: f64, hi: f64| {
        ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(salt)).random_range(lo..hi)
    };
    let h11_base = base(1, 0.5, 2.0);
    let h22_base = -base(2, 0.5, 2.0);
    let h33_base = -base(3, 0.5, 2.0);
    let w_base = -base(4, 0.5, 2.0);
    let h21_base = base(5, -0.3, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let horizon: f64 = rng.random_range(0.5..2.0);
        let knots = vec![0.0, horizon];
        let mut wave = |base: f64, rel: f64| {
            let amp = rng.random_range(-rel..rel) * base;
            let freq = rng.random_range(0.5..4.0);
            let shift = rng.random_range(0.0..6.3);
            CoefficientFn::from_fn(knots.clone(), move |t: f64| base + amp * (freq * t + shift).sin())
                .expect("valid knots")
        };
        let h11 = wave(h11_base, 0.3);
        let h22 = wave(h22_base, 0.3);
        let h33 = wave(h33_base, 0.2);
        let weight = wave(w_base, 0.3);
        let h21 = wave(h21_base, 0.5);
        let h13 = CoefficientFn::constant(rng.random_range(-0.4..0.4), horizon);
        let c = CoefficientSet::symmetric(horizon, h11, h21, h22, h13, h33, weight).expect("consistent horizons");
        if monotonicity_beta(&c, 512) > 0.05 {
            return c;
        }
    }
}

/// Embedded JSON of a named built-in system.
pub fn builtin_json(name: &str) -> Option<&'static str> {
    match name {
        "diagonal" => Some(DIAGONAL_JSON),
        "example8" => Some(EXAMPLE8_JSON),
        _ => None,
    }
}
