//! Integrator-versus-closed-form sweep over constant coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{closed_form_constant_riccati, constant_blowup_time, integrate_quadratic, Equation, IntegratorOptions};
use super::{RiccatiError, TerminationKind};

/// One sampled equation `-k' = a k + b + cq k^2`, `k(t_bar) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub a: f64,
    pub b: f64,
    pub cq: f64,
    pub t_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub cases: usize,
    /// Largest relative value error where the tan phase is at most `pi/2 - 0.1`.
    pub max_rel_error: f64,
    pub max_blowup_error: f64,
    pub compared_points: usize,
    pub worst_case: Option<OracleCase>,
}

impl OracleReport {
    pub fn passes(&self, value_tol: f64, blowup_tol: f64) -> bool {
        self.max_rel_error <= value_tol && self.max_blowup_error <= blowup_tol
    }
}

/// Cases with `b, cq > 0` and a positive discriminant, so every solution
/// follows the tan branch and blows up.
pub fn oracle_cases(n: usize, seed: u64) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let b: f64 = rng.random_range(0.1..3.0);
            let cq: f64 = rng.random_range(0.1..3.0);
            let bound = 2.0 * (b * cq).sqrt();
            let a = rng.random_range(-0.95..0.95) * bound;
            let t_bar = rng.random_range(0.0..2.0);
            OracleCase { a, b, cq, t_bar }
        })
        .collect()
}

fn phase(case: &OracleCase, t: f64) -> f64 {
    let omega = (4.0 * case.b * case.cq - case.a * case.a).sqrt() / 2.0;
    omega * (case.t_bar - t) + (case.a / (2.0 * omega)).atan()
}

/// Runs the comparison for `cases` with the given integrator options.
pub fn run_oracle(cases: &[OracleCase], opts: &IntegratorOptions<f64>) -> Result<OracleReport, RiccatiError> {
    let mut report = OracleReport {
        cases: cases.len(),
        max_rel_error: 0.0,
        max_blowup_error: 0.0,
        compared_points: 0,
        worst_case: None,
    };
    let mut worst = 0.0f64;
    for case in cases {
        let exact_blowup = constant_blowup_time(case.a, case.b, case.cq, case.t_bar)
            .expect("positive discriminant cases blow up");
        let floor = exact_blowup - 1.0;
        let sol = integrate_quadratic(
            |_| [case.b, case.a, case.cq],
            &[],
            Equation::Primal,
            0.0,
            case.t_bar,
            0.0,
            floor,
            opts,
        )?;
        let blowup_err = match sol.termination.kind {
            TerminationKind::BlowUpPlusInf { t_star } => (t_star - exact_blowup).abs(),
            _ => f64::INFINITY,
        };
        report.max_blowup_error = report.max_blowup_error.max(blowup_err);

        // stored samples plus dense-output midpoints
        let mut times: Vec<f64> = sol.samples.iter().map(|s| s.t).collect();
        let mids: Vec<f64> = times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        times.extend(mids);
        let mut case_worst = 0.0f64;
        for t in times {
            if t >= case.t_bar || phase(case, t) > std::f64::consts::FRAC_PI_2 - 0.1 {
                continue;
            }
            let exact = closed_form_constant_riccati(case.a, case.b, case.cq, case.t_bar, t)?;
            let Some(num) = sol.direct_value_at(t) else { continue };
            if exact == 0.0 {
                continue;
            }
            case_worst = case_worst.max(((num - exact) / exact).abs());
            report.compared_points += 1;
        }
        report.max_rel_error = report.max_rel_error.max(case_worst);
        let score = case_worst.max(blowup_err);
        if score > worst || report.worst_case.is_none() {
            worst = score;
            report.worst_case = Some(*case);
        }
    }
    Ok(report)
}
