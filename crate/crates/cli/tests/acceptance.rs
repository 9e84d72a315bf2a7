//! Acceptance gate: one line per criterion, non-zero exit on any failure.
//! Each criterion runs against its runtime budget; the CLI criteria drive
//! the built binary.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riccati_spectrum::chain::{chain_time, ChainTime, SegmentKind};
use riccati_spectrum::coeffs::reference::{example8, sampled_valid_set, wavy};
use riccati_spectrum::coeffs::{lambda_b, CoefficientFn, DEFAULT_GRID};
use riccati_spectrum::fbsde::{bsde_residual, simulate_eigenfunction};
use riccati_spectrum::riccati::oracle::{oracle_cases, run_oracle};
use riccati_spectrum::riccati::{integrate_primal, integrate_quadratic, Equation, IntegratorOptions, RiccatiSolution};
use riccati_spectrum::riccati::TerminationKind;
use riccati_spectrum::spectrum::{enumerate, growth_ratios, period_bounds, solve_eigenvalue, RootKind, SpectrumOptions};

type Outcome = Result<String, String>;

const BIN: &str = env!("CARGO_BIN_EXE_riccati-spectrum");

fn cli(args: &[&str], threads: Option<usize>) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("RICCATI_SPECTRUM_THREADS", n.to_string()),
        None => cmd.env_remove("RICCATI_SPECTRUM_THREADS"),
    };
    let out = cmd.output().map_err(|e| format!("spawn: {e}"))?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_sweep() -> Outcome {
    let cases = oracle_cases(200, 2024);
    let r = run_oracle(&cases, &IntegratorOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.cases >= 100, || format!("only {} cases", r.cases))?;
    ensure(r.compared_points > 0, || "no comparison points".into())?;
    ensure(r.max_rel_error <= 1e-8, || format!("max relative error {:e}", r.max_rel_error))?;
    ensure(r.max_blowup_error <= 1e-8, || format!("max blow-up error {:e}", r.max_blowup_error))?;
    Ok(format!(
        "{} cases, {} points, rel err {:.2e}, blow-up err {:.2e}",
        r.cases, r.compared_points, r.max_rel_error, r.max_blowup_error
    ))
}

fn diagonal_spectrum() -> Outcome {
    let csv = String::from_utf8(cli(&["--builtin", "diagonal", "spectrum", "--lambda-max", "100"], None)?)
        .map_err(|e| e.to_string())?;
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    // 1 + (pi/2)^2, 1 + (3 pi/2)^2, 1 + (5 pi/2)^2 evaluated in 30-digit arithmetic
    let expected = [3.4674011002723397, 23.206609902451057, 62.68502750680849];
    ensure(rows.len() == expected.len(), || format!("{} eigenvalues: {csv}", rows.len()))?;
    let mut found = Vec::new();
    for (row, approx) in rows.iter().zip(expected) {
        let lambda: f64 = row[1].parse().map_err(|_| format!("bad row {row:?}"))?;
        let depth: usize = row[5].parse().map_err(|_| format!("bad row {row:?}"))?;
        // `depth` equal segments of length pi / (2 sqrt(lambda - 1)) fill [0, 1]
        let u = depth as f64 * std::f64::consts::PI / 2.0;
        let exact = 1.0 + u * u;
        ensure((lambda - exact).abs() <= 1e-6, || format!("{lambda} vs {exact}"))?;
        ensure((lambda - approx).abs() <= 1e-6, || format!("{lambda} vs {approx}"))?;
        found.push(format!("{lambda:.7}"));
    }
    Ok(found.join(", "))
}

fn worked_example() -> Outcome {
    let out = cli(&["example8"], None)?;
    let v: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let num = |k: &str| v[k].as_f64().ok_or_else(|| format!("missing {k}"));
    let r11 = 11f64.sqrt();
    let t2_exact = (std::f64::consts::FRAC_PI_2 - (1.0 / r11).atan()) * 2.0 / r11;
    let (t1, t2, lambda) = (num("t1")?, num("t2")?, num("lambda")?);
    let (blowup, zero) = (num("primal_blowup_time")?, num("dual_zero_return_time")?);
    ensure((t2 - t2_exact).abs() <= 1e-10, || format!("T2 = {t2} vs {t2_exact}"))?;
    ensure(t1 > 0.0 && t1 <= 15.0 / 28.0, || format!("T1 = {t1}"))?;
    ensure((lambda - 3.0).abs() <= 1e-6, || format!("lambda = {lambda}"))?;
    ensure(v["primal_blowups"].as_u64() == Some(1), || format!("blow-ups: {}", v["primal_blowups"]))?;
    ensure((blowup - t1).abs() <= 1e-6, || format!("blow-up at {blowup}, T1 = {t1}"))?;
    ensure(zero.abs() <= 1e-6, || format!("dual zero return at {zero}"))?;

    // an independent pass through the library with the reported T1
    let c = example8::<f64>(t1);
    let e = solve_eigenvalue(&c, (2.5, 3.5), RootKind::Defect, 1e-10, &SpectrumOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(e.chain.final_kind() == SegmentKind::DualK, || format!("{:?}", e.chain.structure()))?;
    ensure((e.lambda - 3.0).abs() <= 1e-6, || format!("library lambda {}", e.lambda))?;
    Ok(format!("T1 = {t1:.12}, T2 = {t2:.12}, lambda = {lambda:.10}, zero return at {zero:.1e}"))
}

fn monotonicity() -> Outcome {
    let o = IntegratorOptions::default();
    let mut evaluations = 0;
    for seed in 1000..1020u64 {
        let c = sampled_valid_set(seed);
        let lb = lambda_b(&c, 512);
        let start = lb + lb.abs().max(0.1) * 0.05;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..10 {
            let lambda = start * 1.6f64.powi(i);
            let t1 = match chain_time(&c, lambda, 1, &o).map_err(|e| e.to_string())? {
                ChainTime::Time(t) => t,
                ChainTime::BelowZero => f64::NEG_INFINITY,
                ChainTime::Undefined => return Err(format!("seed {seed}: t_1 undefined at {lambda}")),
            };
            ensure(t1 >= prev - 1e-9, || format!("seed {seed}, lambda {lambda}: t_1 {t1} < {prev}"))?;
            prev = t1;
            evaluations += 1;
        }
        let lambda = lb.max(0.1) * 10.0;
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=8 {
            let t_bar = c.horizon() * i as f64 / 8.0;
            let sol = integrate_primal(&c, lambda, t_bar, 0.0, &o).map_err(|e| e.to_string())?;
            let t_star = match sol.termination.kind {
                TerminationKind::BlowUpPlusInf { t_star } => t_star,
                _ => f64::NEG_INFINITY,
            };
            ensure(t_star >= prev - 1e-9, || format!("seed {seed}, t_bar {t_bar}: {t_star} < {prev}"))?;
            prev = t_star;
            evaluations += 1;
        }
    }
    Ok(format!("20 systems, {evaluations} blow-up times"))
}

fn growth_and_bounds() -> Outcome {
    let c = wavy::<f64>(1.0);
    let eigs = enumerate(&c, 1200.0, &SpectrumOptions::default()).map_err(|e| e.to_string())?;
    let first: Vec<_> = eigs.into_iter().take(10).collect();
    ensure(first.len() == 10, || format!("only {} eigenvalues below 1200", first.len()))?;
    for e in first.iter().filter(|e| e.order_index >= 5) {
        let b = period_bounds(&c, e.order_index, None, DEFAULT_GRID).map_err(|e| e.to_string())?;
        ensure(b.lower <= e.lambda && e.lambda <= b.upper, || {
            format!("m = {}: {} outside [{}, {}]", e.order_index, e.lambda, b.lower, b.upper)
        })?;
    }
    let g = growth_ratios(&first);
    let band: Vec<f64> = g.ratios.iter().filter(|(m, _)| *m >= 5).map(|r| r.1).collect();
    let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = band.iter().copied().fold(0.0, f64::max);
    ensure(hi / lo <= 4.0, || format!("band ratio {}", hi / lo))?;
    Ok(format!("lambda_10 = {:.4}, band ratio {:.4}", first[9].lambda, hi / lo))
}

fn fbsde_construction() -> Outcome {
    let c = example8::<f64>(riccati_spectrum::coeffs::reference::EXAMPLE8_T1);
    let e = solve_eigenvalue(&c, (2.5, 3.5), RootKind::Defect, 1e-12, &SpectrumOptions::default())
        .map_err(|e| e.to_string())?;
    let sim = |steps: usize, y0: f64| simulate_eigenfunction(&c, &e, steps, 64, 31, y0).map_err(|e| e.to_string());
    let base = sim(1 << 12, 1.0)?;
    let scaled = sim(1 << 12, 4.0)?;
    let mut primal_points = 0;
    for (p, q) in base.iter().zip(&scaled) {
        ensure(p.x[0] == 0.0, || format!("path {}: x[0] = {}", p.path_index, p.x[0]))?;
        ensure(*p.y.last().unwrap() == 0.0, || format!("path {}: y[T] = {:?}", p.path_index, p.y.last()))?;
        for i in 0..p.t.len() {
            if p.kinds[i] == SegmentKind::PrimalK {
                ensure(p.y[i].to_bits() == (p.riccati[i] * p.x[i]).to_bits(), || {
                    format!("path {}: y != k x at t = {}", p.path_index, p.t[i])
                })?;
                primal_points += 1;
            }
            let exact = 4.0 * p.x[i] == q.x[i] && 4.0 * p.y[i] == q.y[i] && 4.0 * p.z[i] == q.z[i];
            ensure(exact, || format!("path {}: scaling broken at t = {}", p.path_index, p.t[i]))?;
        }
    }
    let coarse = bsde_residual(&base, &c, e.lambda);
    let fine = bsde_residual(&sim(1 << 14, 1.0)?, &c, e.lambda);
    ensure(coarse.backward_rms > fine.backward_rms, || format!("{coarse:?} vs {fine:?}"))?;
    Ok(format!(
        "{primal_points} primal points bit-exact, residual {:.3e} -> {:.3e}",
        coarse.backward_rms, fine.backward_rms
    ))
}

fn pwl(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> CoefficientFn<f64> {
    let v: Vec<f64> = (0..3).map(|_| rng.random_range(lo..hi)).collect();
    CoefficientFn::piecewise_linear(vec![0.0, 0.5, 1.0], v).unwrap()
}

fn solve_backward(p: [CoefficientFn<f64>; 3], q: f64) -> Result<RiccatiSolution<f64>, String> {
    let opts = IntegratorOptions { rtol: 1e-12, atol: 1e-14, ..IntegratorOptions::default() };
    integrate_quadratic(
        move |t| [p[0].value(t), p[1].value(t), p[2].value(t)],
        &[0.5],
        Equation::Primal,
        0.0,
        1.0,
        q,
        -1.0,
        &opts,
    )
    .map_err(|e| e.to_string())
}

/// Largest violation of `upper >= lower` over the samples where both live.
fn order_violation(upper: &RiccatiSolution<f64>, lower: &RiccatiSolution<f64>) -> f64 {
    let lo = upper.t_end().max(lower.t_end());
    let mut worst = 0.0f64;
    for t in upper.samples.iter().chain(&lower.samples).map(|s| s.t).filter(|&t| t >= lo) {
        if let (Some(u), Some(l)) = (upper.direct_value_at(t), lower.direct_value_at(t)) {
            if u.is_finite() && l.is_finite() {
                worst = worst.max((l - u) / l.abs().max(1.0));
            }
        }
    }
    worst
}

fn comparison_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for i in 0..50 {
        match i % 3 {
            0 => {
                // linear equation with nonnegative data against the zero solution
                let lin = pwl(&mut rng, -2.0, 2.0);
                let r = pwl(&mut rng, 0.0, 2.0);
                let q = rng.random_range(0.0..1.0);
                let zero = CoefficientFn::constant(0.0, 1.0);
                let sol = solve_backward([r, lin, zero.clone()], q)?;
                let base = solve_backward([zero.clone(), zero.clone(), zero], 0.0)?;
                worst = worst.max(order_violation(&sol, &base));
            }
            1 => {
                // larger constant and quadratic terms and terminal value
                let p1 = pwl(&mut rng, -1.0, 1.0);
                let r = pwl(&mut rng, -1.0, 1.0);
                let dr = pwl(&mut rng, 0.0, 1.0);
                let n = pwl(&mut rng, -1.0, 1.0);
                let dn = pwl(&mut rng, 0.0, 1.0);
                let q = rng.random_range(-0.5..0.5);
                let dq = rng.random_range(0.0..0.5);
                let ru = CoefficientFn::combine(&r, &dr, |a, b| a + b);
                let nu = CoefficientFn::combine(&n, &dn, |a, b| a + b);
                let upper = solve_backward([ru, p1.clone(), nu], q + dq)?;
                let lower = solve_backward([r, p1, n], q)?;
                worst = worst.max(order_violation(&upper, &lower));
            }
            _ => {
                // constant term bounded away from zero
                let floor = rng.random_range(0.05..1.0);
                let extra = pwl(&mut rng, 0.0, 1.0);
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let psi = CoefficientFn::map(&extra, move |e| s * (floor + e));
                let sol = solve_backward([psi, pwl(&mut rng, -2.0, 2.0), pwl(&mut rng, -2.0, 2.0)], 0.0)?;
                for smp in sol.samples.iter().skip(1) {
                    let v = sol.direct_value_at(smp.t).unwrap_or(f64::NAN);
                    ensure(s * v > 0.0, || format!("instance {i}: sign lost at t = {}: {v}", smp.t))?;
                }
            }
        }
    }
    ensure(worst <= 1e-9, || format!("ordering violated by {worst:e}"))?;
    Ok(format!("50 instances, worst ordering violation {worst:.1e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |run: usize, name: &str| dir.path().join(format!("{run}_{name}")).display().to_string();
    let commands = |run: usize| -> Vec<Vec<String>> {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        vec![
            s(&["--builtin", "diagonal", "spectrum", "--lambda-max", "200", "--out", &path(run, "spec.csv")]),
            s(&["--builtin", "example8", "spectrum", "--lambda-min", "2", "--lambda-max", "60", "--format", "json"]),
            s(&[
                "--builtin", "example8", "eigenfunction", "--lambda", "3", "--paths", "16", "--steps", "1024",
                "--seed", "9", "--y0", "1.5", "--out", &path(run, "mean.csv"), "--paths-dir", &path(run, "paths"),
            ]),
            s(&["--builtin", "example8", "chain", "--lambda", "40"]),
            s(&["--builtin", "diagonal", "bounds", "--m", "4"]),
            s(&["--builtin", "diagonal", "classify", "--lambda", "50", "--m", "2"]),
            s(&["--builtin", "example8", "validate"]),
            s(&["example8"]),
            s(&["oracle", "--cases", "50", "--seed", "3"]),
        ]
    };
    let mut stdouts = Vec::new();
    for (run, threads) in [(0, Some(1)), (1, Some(4)), (2, None)] {
        let mut outs = Vec::new();
        for args in commands(run) {
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            outs.push(cli(&refs, threads)?);
        }
        stdouts.push(outs);
    }
    let mut files = 0;
    for run in 1..3 {
        for (i, (a, b)) in stdouts[0].iter().zip(&stdouts[run]).enumerate() {
            ensure(a == b, || format!("stdout of command {i} differs in run {run}"))?;
        }
        for name in ["spec.csv", "spec.csv.chains.json", "mean.csv"] {
            let (a, b) = (read(&path(0, name))?, read(&path(run, name))?);
            ensure(a == b, || format!("{name} differs in run {run}"))?;
            files += 1;
        }
        let mut names: Vec<_> = std::fs::read_dir(path(0, "paths")).map_err(|e| e.to_string())?
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for n in names {
            let a = read(&Path::new(&path(0, "paths")).join(&n).display().to_string())?;
            let b = read(&Path::new(&path(run, "paths")).join(&n).display().to_string())?;
            ensure(a == b, || format!("{n:?} differs in run {run}"))?;
            files += 1;
        }
    }
    Ok(format!("9 commands x 3 runs (1, 4, default threads), {files} files byte-identical"))
}

fn read(p: &str) -> Result<Vec<u8>, String> {
    std::fs::read(p).map_err(|e| format!("{p}: {e}"))
}

/// Name, runtime budget in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("constant-coefficient oracle", Some(5), oracle_sweep),
        ("diagonal reference spectrum", Some(10), diagonal_spectrum),
        ("worked example with a dual return to zero", Some(5), worked_example),
        ("blow-up time monotonicity", Some(30), monotonicity),
        ("growth band and period bounds", Some(60), growth_and_bounds),
        ("eigenfunction construction", Some(60), fbsde_construction),
        ("comparison and sign suite", Some(10), comparison_suite),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > Duration::from_secs(b));
        let limit = budget.map_or(String::new(), |b| format!(" / {b} s"));
        match outcome {
            Ok(detail) if !over => {
                println!("[PASS] {}. {name}: {detail} ({:.2} s{limit})", i + 1, elapsed.as_secs_f64());
            }
            Ok(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name}: over budget, {detail} ({:.2} s{limit})", i + 1, elapsed.as_secs_f64());
            }
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {why} ({:.2} s{limit})", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
