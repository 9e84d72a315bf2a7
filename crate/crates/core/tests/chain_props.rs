//! Monotonicity and limit behaviour of the blow-up times.

mod common;

use riccati_spectrum::chain::{chain_time, compute_chain, ChainTermination, ChainTime, SegmentKind};
use riccati_spectrum::coeffs::lambda_b;
use riccati_spectrum::riccati::{integrate_primal, IntegratorOptions, TerminationKind};

fn grid_above(lb: f64, n: usize) -> Vec<f64> {
    let start = lb + lb.abs().max(0.1) * 0.05;
    (0..n).map(|i| start * 1.6f64.powi(i as i32)).collect()
}

#[test]
fn first_blowup_time_is_nondecreasing_in_lambda() {
    let o = IntegratorOptions::default();
    for seed in 100..120 {
        let c = common::random_valid_set(seed);
        let mut prev = f64::NEG_INFINITY;
        for lambda in grid_above(lambda_b(&c, 512), 10) {
            let t1 = match chain_time(&c, lambda, 1, &o).unwrap() {
                ChainTime::Time(t) => t,
                ChainTime::BelowZero => f64::NEG_INFINITY,
                ChainTime::Undefined => panic!("undefined t_1 above lambda_b"),
            };
            assert!(t1 >= prev - 1e-9, "seed {seed}, lambda {lambda}: {t1} < {prev}");
            prev = t1;
        }
    }
}

#[test]
fn later_terminal_time_never_gives_earlier_blowup() {
    let o = IntegratorOptions::default();
    for seed in 200..220 {
        let c = common::random_valid_set(seed);
        let lambda = lambda_b(&c, 512).max(0.1) * 10.0;
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=6 {
            let t_bar = c.horizon() * i as f64 / 6.0;
            let sol = integrate_primal(&c, lambda, t_bar, 0.0, &o).unwrap();
            let t_star = match sol.termination.kind {
                TerminationKind::BlowUpPlusInf { t_star } => t_star,
                _ => f64::NEG_INFINITY,
            };
            assert!(t_star >= prev - 1e-9, "seed {seed}, t_bar {t_bar}: {t_star} < {prev}");
            prev = t_star;
        }
    }
}

#[test]
fn first_blowup_time_tends_to_horizon() {
    let o = IntegratorOptions::default();
    let c = common::random_valid_set(7);
    let lb = lambda_b(&c, 512).max(1.0);
    let gaps: Vec<f64> = (2..6)
        .map(|k| {
            let lambda = lb * 10f64.powi(k);
            match chain_time(&c, lambda, 1, &o).unwrap() {
                ChainTime::Time(t) => c.horizon() - t,
                other => panic!("{other:?}"),
            }
        })
        .collect();
    for w in gaps.windows(2) {
        assert!(w[1] < w[0]);
        // gap ~ lambda^(-1/2): a decade in lambda shrinks it by about sqrt(10)
        let r = w[0] / w[1];
        assert!(r > 2.0 && r < 5.0, "{gaps:?}");
    }
}

#[test]
fn segments_alternate_with_matching_events() {
    let o = IntegratorOptions::default();
    for seed in 300..310 {
        let c = common::random_valid_set(seed);
        let lambda = lambda_b(&c, 512).max(0.1) * 60.0;
        let ch = compute_chain(&c, lambda, 64, &o).unwrap();
        for w in ch.breakpoints.windows(2) {
            assert!(w[1] < w[0]);
        }
        for (i, (kind, seg)) in ch.segment_kinds.iter().zip(ch.segments()).enumerate() {
            let expected = if i % 2 == 0 { SegmentKind::PrimalK } else { SegmentKind::DualK };
            assert_eq!(*kind, expected);
            if i + 1 < ch.breakpoints.len() {
                match (kind, seg.termination.kind) {
                    (SegmentKind::PrimalK, TerminationKind::BlowUpPlusInf { .. })
                    | (SegmentKind::DualK, TerminationKind::BlowUpMinusInf { .. }) => {}
                    other => panic!("seed {seed}: segment {i} ended with {other:?}"),
                }
            }
        }
        assert!(!matches!(ch.termination, ChainTermination::DepthExceeded | ChainTermination::ZeroReturnAtInterior { .. }));
    }
}
