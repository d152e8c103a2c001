//! Batch front end: configuration, subcommand dispatch and report files.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::coeffs::certify;
use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::solvers::{beta_sweep, scalar_ground_state, solve_system, SweepRow, SWEEP_HEADER};
use crate::spectrum::principal_eigenpair;

pub use config::{parse_config, serialize_config, CertifyOptions, FamilyKind, FamilySpec, RunConfig, KEYS_HELP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Certify,
    Eigen,
    SolveScalar,
    SolveSystem,
    Sweep,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_INADMISSIBLE: i32 = 3;

/// Exit status for an error raised while running a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } | Error::NoFullyNontrivialCandidate | Error::NotProjectable(_) => EXIT_NO_CONVERGENCE,
        Error::InadmissibleLambda { .. } | Error::HypothesesFail(_) => EXIT_INADMISSIBLE,
        _ => EXIT_USAGE,
    }
}

/// `# config_sha256=… seed=… grid=… tol=…` line heading every CSV.
pub fn provenance(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(serialize_config(cfg).as_bytes());
    let hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let g = &cfg.grid;
    let s = &cfg.solver;
    format!(
        "# config_sha256={hash} seed={} grid={}x{} lx={:?} ly={:?} tol={:e} nehari_tol={:e} eigen_tol={:e}\n",
        s.seed, g.nx, g.ny, g.lx, g.ly, s.tol, s.projection.tol, s.eigen_tol
    )
}

fn problem(cfg: &RunConfig) -> Result<Problem> {
    Problem::new(cfg.grid, cfg.params, cfg.family(0)?, cfg.family(1)?)
}

fn write_csv(cfg: &RunConfig, dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, format!("{}{}", provenance(cfg), body))?;
    Ok(path)
}

fn write_dump(problem: &Problem, dir: &Path, name: &str, f: &ScalarField) -> Result<PathBuf> {
    let path = dir.join(name);
    let file = fs::File::create(&path)?;
    problem.grid.write_field(f, BufWriter::new(file))?;
    Ok(path)
}

/// Runs `command` and writes its outputs under `cfg.output_dir`. Returns the
/// written file paths; the caller maps errors to exit codes with [`exit_code`].
pub fn run(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    match command {
        Command::Certify => {
            let mut failed = Vec::new();
            for i in 0..2 {
                let fam = cfg.family(i)?;
                let c = &cfg.certify;
                let report = certify(&fam, cfg.params.p, (c.s_min, c.s_max), c.samples)?;
                if !report.all_pass() {
                    failed.push(format!("family{}", i + 1));
                }
                written.push(write_csv(cfg, &dir, &format!("certify_family{}.csv", i + 1), &report.to_csv())?);
            }
            if !failed.is_empty() {
                return Err(Error::HypothesesFail(failed.join(", ")));
            }
        }
        Command::Eigen => {
            let pr = problem(cfg)?;
            let e = principal_eigenpair(&pr.grid, cfg.solver.eigen_tol, cfg.solver.eigen_max_iter)?;
            let body = format!("mu1,residual,iterations\n{:.16e},{:.6e},{}\n", e.mu, e.residual, e.iterations);
            written.push(write_csv(cfg, &dir, "eigen.csv", &body)?);
            written.push(write_dump(&pr, &dir, "phi1.field", &e.phi)?);
        }
        Command::SolveScalar => {
            let pr = problem(cfg)?;
            let mut body = String::from("component,level,euler_res,iterations,nonnegative\n");
            let mut fields = Vec::new();
            for i in 0..2 {
                let s = scalar_ground_state(&pr, i, &cfg.solver)?;
                let _ = writeln!(
                    body,
                    "{},{:.16e},{:.6e},{},{}",
                    i + 1,
                    s.level,
                    s.report.euler_residual_norm,
                    s.report.iterations,
                    s.report.nonnegative
                );
                fields.push(s.field);
            }
            written.push(write_csv(cfg, &dir, "scalar.csv", &body)?);
            for (i, f) in fields.iter().enumerate() {
                written.push(write_dump(&pr, &dir, &format!("z{}.field", i + 1), f)?);
            }
        }
        Command::SolveSystem => {
            let pr = problem(cfg)?;
            let sol = solve_system(&pr, &cfg.solver)?;
            for w in &sol.report.warnings {
                eprintln!("warning: {w}");
            }
            let row = SweepRow { beta: cfg.params.beta, outcome: Ok(sol.report) };
            written.push(write_csv(cfg, &dir, "system.csv", &format!("{SWEEP_HEADER}\n{}\n", row.to_csv()))?);
            written.push(write_dump(&pr, &dir, "u1.field", &sol.state.u1)?);
            written.push(write_dump(&pr, &dir, "u2.field", &sol.state.u2)?);
        }
        Command::Sweep => {
            if cfg.betas.is_empty() {
                return Err(Error::Validation { key: "sweep.betas".into(), reason: "empty beta list".into() });
            }
            let pr = problem(cfg)?;
            let rows = beta_sweep(&cfg.betas, &pr, &cfg.solver)?;
            let mut body = format!("{SWEEP_HEADER}\n");
            for r in &rows {
                body.push_str(&r.to_csv());
                body.push('\n');
            }
            written.push(write_csv(cfg, &dir, "sweep.csv", &body)?);
        }
    }
    Ok(written)
}
