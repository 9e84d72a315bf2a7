//! `riccati-spectrum`: eigenvalues, chains, period bounds and eigenfunction
//! paths of scalar stochastic Hamiltonian systems from a JSON description.

mod worked;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use riccati_spectrum::chain::{compute_chain, ChainError, DEFAULT_MAX_DEPTH};
use riccati_spectrum::coeffs::reference::builtin_json;
use riccati_spectrum::coeffs::{parse_coefficient_set, validate, CoeffError, CoefficientSet, DEFAULT_GRID};
use riccati_spectrum::fbsde::{bsde_residual, mean_path_csv, simulate_eigenfunction, FbsdeError};
use riccati_spectrum::riccati::oracle::{oracle_cases, run_oracle};
use riccati_spectrum::riccati::{IntegratorOptions, RiccatiError};
use riccati_spectrum::spectrum::{
    below_threshold_status, classify_against, enumerate, period_bounds, BelowThreshold, Eigenvalue,
    SpectrumError, SpectrumOptions,
};

const THREADS_ENV: &str = "RICCATI_SPECTRUM_THREADS";

/// Oracle tolerance on values and blow-up times.
const ORACLE_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "riccati-spectrum", version, about = "Spectra of scalar stochastic Hamiltonian systems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Coefficient document (JSON).
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "builtin")]
    config: Option<PathBuf>,
    /// Built-in reference system instead of a config file.
    #[arg(long, global = true, value_enum)]
    builtin: Option<Builtin>,
    #[arg(long, global = true, value_parser = finite, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, global = true, value_parser = finite, default_value_t = 1e-12)]
    atol: f64,
    /// Magnitude at which the integrator moves to the reciprocal variable.
    #[arg(long, global = true, value_parser = finite, default_value_t = 1.0)]
    switch_threshold: f64,
    /// Lowest time reached by a single integration (default `-T`).
    #[arg(long, global = true, value_parser = finite)]
    floor: Option<f64>,
    /// Relative tolerance on eigenvalues.
    #[arg(long, global = true, value_parser = finite, default_value_t = 1e-10)]
    tol: f64,
    /// Grid size for envelopes and structural checks.
    #[arg(long, global = true, default_value_t = DEFAULT_GRID)]
    grid_n: usize,
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Builtin {
    Diagonal,
    Example8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural checks, beta, lambda_b and the all-eigenvalue flag.
    Validate,
    /// Blow-up chain at one lambda.
    Chain {
        #[arg(long, value_parser = finite, allow_negative_numbers = true)]
        lambda: f64,
        /// Also report t_j(lambda).
        #[arg(long)]
        j: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
    },
    /// Eigenvalues up to --lambda-max.
    Spectrum {
        #[arg(long, value_parser = finite)]
        lambda_max: f64,
        /// Start of the scan (default: just above lambda_b).
        #[arg(long, value_parser = finite, allow_negative_numbers = true)]
        lambda_min: Option<f64>,
        /// Where to write the chains (default: `<out>.chains.json` when --out is set).
        #[arg(long, value_name = "PATH")]
        sidecar: Option<PathBuf>,
    },
    /// Monte-Carlo eigenfunction paths for the eigenvalue closest to --lambda.
    Eigenfunction {
        #[arg(long, value_parser = finite)]
        lambda: f64,
        #[arg(long, default_value_t = 64)]
        paths: usize,
        #[arg(long, default_value_t = 4096)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = finite, default_value_t = 1.0, allow_negative_numbers = true)]
        y0: f64,
        /// Directory for one CSV per path.
        #[arg(long, value_name = "DIR")]
        paths_dir: Option<PathBuf>,
    },
    /// Lower and upper eigenvalue bounds for period count m.
    Bounds {
        #[arg(long)]
        m: usize,
        /// Constant replacing H22 in the auxiliary system.
        #[arg(long, value_parser = finite, allow_negative_numbers = true)]
        h_under_22: Option<f64>,
    },
    /// Compares lambda against the period bounds for m.
    Classify {
        #[arg(long, value_parser = finite, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, value_parser = finite, allow_negative_numbers = true)]
        h_under_22: Option<f64>,
    },
    /// Worked example whose eigenvalue 3 comes from a dual return to zero.
    Example8,
    /// Integrator against the constant-coefficient closed form.
    Oracle {
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not a finite number"))
    }
}

/// Failure with a fixed exit status.
#[derive(Debug)]
struct Coded {
    code: u8,
    message: String,
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Coded {}

fn coded(code: u8, message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Coded { code, message: message.into() })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Coded>() {
            return c.code;
        }
        if let Some(c) = cause.downcast_ref::<CoeffError>() {
            return match c {
                CoeffError::Parse(_) => 1,
                _ => 2,
            };
        }
        if cause.is::<RiccatiError>()
            || cause.is::<ChainError>()
            || cause.is::<SpectrumError>()
            || cause.is::<FbsdeError>()
        {
            return 4;
        }
        if cause.is::<std::io::Error>() {
            return 1;
        }
    }
    4
}

impl Global {
    fn integrator(&self) -> IntegratorOptions<f64> {
        IntegratorOptions {
            rtol: self.rtol,
            atol: self.atol,
            switch_threshold: self.switch_threshold,
            floor: self.floor,
            ..IntegratorOptions::default()
        }
    }

    fn spectrum(&self) -> SpectrumOptions<f64> {
        SpectrumOptions {
            integrator: self.integrator(),
            tol: self.tol,
            grid_n: self.grid_n,
            ..SpectrumOptions::default()
        }
    }

    fn system(&self) -> Result<CoefficientSet<f64>> {
        let text = match (&self.config, self.builtin) {
            (Some(path), _) => {
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
            }
            (None, Some(b)) => {
                let name = match b {
                    Builtin::Diagonal => "diagonal",
                    Builtin::Example8 => "example8",
                };
                builtin_json(name).expect("known builtin").to_string()
            }
            (None, None) => return Err(coded(1, "one of --config or --builtin is required")),
        };
        Ok(parse_coefficient_set::<f64>(&text)?)
    }

    /// Parses the system and refuses to go on when a standing hypothesis fails.
    fn validated_system(&self) -> Result<CoefficientSet<f64>> {
        let c = self.system()?;
        let report = validate(&c, self.grid_n);
        if !report.structural_ok {
            eprintln!("{}", serde_json::to_string_pretty(&report)?);
            return Err(coded(2, format!("{} structural violations", report.violation_count)));
        }
        Ok(c)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => write_file(path, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn spectrum_csv(eigs: &[Eigenvalue<f64>]) -> String {
    let mut s = String::from("order_index,lambda,bracket_lo,bracket_hi,defect,chain_depth\n");
    for e in eigs {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            e.order_index,
            e.lambda,
            e.bracket.0,
            e.bracket.1,
            e.defect_residual,
            e.chain.depth()
        ));
    }
    s
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".chains.json");
    PathBuf::from(name)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Validate => {
            let c = g.system()?;
            let report = validate(&c, g.grid_n);
            g.emit(&json(&report)?)?;
            if !report.structural_ok {
                return Err(coded(2, format!("{} structural violations", report.violation_count)));
            }
        }
        Command::Chain { lambda, j, max_depth } => {
            let c = g.validated_system()?;
            let chain = compute_chain(&c, lambda, max_depth, &g.integrator())?;
            match g.format {
                Some(Format::Csv) => {
                    let text: String = chain.segments().iter().map(|s| s.to_csv()).collect();
                    g.emit(&text)?;
                }
                _ => {
                    let mut doc = chain.to_json();
                    if let Some(j) = j {
                        doc["t_j"] = serde_json::json!({ "j": j, "value": chain.time(j) });
                    }
                    g.emit(&json(&doc)?)?;
                }
            }
        }
        Command::Spectrum { lambda_max, lambda_min, sidecar } => {
            let c = g.validated_system()?;
            let mut opts = g.spectrum();
            opts.lambda_min = lambda_min;
            if lambda_min.is_none() && below_threshold_status(&c, g.grid_n) == BelowThreshold::Unknown {
                eprintln!("note: eigenvalues below lambda_b are not excluded for this system");
            }
            let eigs = enumerate(&c, lambda_max, &opts)?;
            match g.format {
                Some(Format::Json) => g.emit(&json(&eigs)?)?,
                _ => {
                    g.emit(&spectrum_csv(&eigs))?;
                    let side = sidecar.or_else(|| g.out.as_deref().map(sidecar_path));
                    if let Some(side) = side {
                        let chains: Vec<_> = eigs.iter().map(|e| e.chain.to_json()).collect();
                        write_file(&side, &json(&chains)?)?;
                    }
                }
            }
        }
        Command::Eigenfunction { lambda, paths, steps, seed, y0, paths_dir } => {
            let c = g.validated_system()?;
            let mut opts = g.spectrum();
            let spread = 0.1 * lambda.abs().max(1e-3);
            opts.lambda_min = Some(lambda - spread);
            let eigs = enumerate(&c, lambda + spread, &opts)?;
            let eig = eigs
                .into_iter()
                .min_by(|a, b| (a.lambda - lambda).abs().total_cmp(&(b.lambda - lambda).abs()))
                .ok_or_else(|| coded(4, format!("no eigenvalue within 10% of {lambda}")))?;
            let sims = simulate_eigenfunction(&c, &eig, steps, paths, seed, y0)?;
            if let Some(dir) = &paths_dir {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                for p in &sims {
                    write_file(&dir.join(format!("path_{:05}.csv", p.path_index)), &p.to_csv())?;
                }
            }
            g.emit(&mean_path_csv(&sims))?;
            if g.out.is_some() {
                let residual = bsde_residual(&sims, &c, eig.lambda);
                let summary = serde_json::json!({
                    "lambda": eig.lambda,
                    "paths": paths,
                    "steps": steps,
                    "seed": seed,
                    "y0": y0,
                    "residual": residual,
                });
                print!("{}", json(&summary)?);
            }
        }
        Command::Bounds { m, h_under_22 } => {
            let c = g.validated_system()?;
            let b = period_bounds(&c, m, h_under_22, g.grid_n)?;
            g.emit(&json(&b)?)?;
        }
        Command::Classify { lambda, m, h_under_22 } => {
            let c = g.validated_system()?;
            let b = period_bounds(&c, m, h_under_22, g.grid_n)?;
            let doc = serde_json::json!({
                "lambda": lambda,
                "m": m,
                "class": classify_against(lambda, &b),
                "bounds": b,
            });
            g.emit(&json(&doc)?)?;
        }
        Command::Example8 => {
            let report = worked::run(&g.spectrum())?;
            g.emit(&json(&report)?)?;
        }
        Command::Oracle { cases, seed } => {
            let report = run_oracle(&oracle_cases(cases, seed), &g.integrator())?;
            let ok = report.passes(ORACLE_TOL, ORACLE_TOL);
            let doc = serde_json::json!({
                "seed": seed,
                "tolerance": ORACLE_TOL,
                "passed": ok,
                "report": report,
            });
            g.emit(&json(&doc)?)?;
            if !ok {
                return Err(coded(3, "oracle tolerance exceeded"));
            }
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| coded(1, format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        bail!(coded(1, format!("{THREADS_ENV} must be positive")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| anyhow!("thread pool: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_source() {
        assert_eq!(exit_code(&coded(3, "x")), 3);
        assert_eq!(exit_code(&anyhow::Error::new(CoeffError::Parse("x".into()))), 1);
        assert_eq!(exit_code(&anyhow::Error::new(CoeffError::InvalidHorizon(0.0))), 2);
        let e = anyhow::Error::new(RiccatiError::NonFinite { t: 0.0 }).context("while integrating");
        assert_eq!(exit_code(&e), 4);
    }

    #[test]
    fn finite_parser_rejects_nan_and_inf() {
        assert!(finite("nan").is_err());
        assert!(finite("inf").is_err());
        assert_eq!(finite("-2.5"), Ok(-2.5));
    }

    #[test]
    fn sidecar_is_next_to_the_csv() {
        assert_eq!(sidecar_path(Path::new("a/s.csv")), PathBuf::from("a/s.csv.chains.json"));
    }
}
