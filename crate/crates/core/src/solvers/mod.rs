//! Scalar ground states, least energy solutions of the coupled system in the
//! competitive, decoupled and cooperative regimes, and β-sweeps.
//!
//! Competitive and decoupled solves minimize the reduced functional
//! `v ↦ E(t_v v)` over pairs of unit Dirichlet norm, where `t_v` maximizes the
//! fiber map. Cooperative solves rescale to a fiber critical point instead,
//! since for synchronized states the maximizer escapes to an axis.
//! Every candidate is polished by Newton–GMRES before it is accepted.

mod descent;
pub mod init;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{NehariResidual, Problem};
use crate::error::{Error, Result};
use crate::fiber::ProjectionOptions;
use crate::grid::{ScalarField, StatePair};
use crate::linalg::StiffnessSolver;
use crate::spectrum::{conservative_mu1, lambda_threshold, principal_eigenpair};

use descent::{polish, Descent, Mode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target discrete `L²` norm of the Euler residual.
    pub tol: f64,
    /// Random starts in addition to the structured ones.
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Newton steps of the final polish.
    pub max_refine: usize,
    pub projection: ProjectionOptions,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restarts: 2,
            seed: 0,
            max_iter: 3000,
            max_refine: 30,
            projection: ProjectionOptions::default(),
            eigen_tol: 1e-10,
            eigen_max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Cooperative,
    Competitive,
    Decoupled,
}

impl Regime {
    pub fn of_beta(beta: f64) -> Self {
        if beta > 0.0 {
            Regime::Cooperative
        } else if beta < 0.0 {
            Regime::Competitive
        } else {
            Regime::Decoupled
        }
    }
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Cooperative => "cooperative",
            Regime::Competitive => "competitive",
            Regime::Decoupled => "decoupled",
        }
    }
}

/// Summary of one solve. Levels not computed by a solve are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub energy: f64,
    pub l1: f64,
    pub l2: f64,
    pub e_beta_estimate: f64,
    pub euler_residual_norm: f64,
    pub nehari_residual: NehariResidual,
    pub fully_nontrivial: bool,
    pub nonnegative: bool,
    pub iterations: usize,
    pub regime: Regime,
    pub warnings: Vec<String>,
    /// `∫|w|^p` of the synchronized candidate `(w, w)` (cooperative, symmetric data).
    pub diagonal_power: Option<f64>,
    /// Whether the energy lies strictly below `min{L₁, L₂}` (cooperative).
    pub below_scalar_levels: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ScalarSolution {
    pub field: ScalarField,
    pub level: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub state: StatePair,
    pub report: SolveReport,
}

/// Scalar ground states of both components and their levels `L₁, L₂`.
#[derive(Debug, Clone)]
pub struct Levels {
    pub fields: [ScalarField; 2],
    pub values: [f64; 2],
}

struct Context {
    kinv: StiffnessSolver,
    mu1: f64,
}

impl Context {
    fn new(problem: &Problem, opts: &SolverOptions) -> Result<Self> {
        Ok(Self { kinv: StiffnessSolver::new(&problem.grid), mu1: principal_mu1(problem, opts)? })
    }
}

/// Conservative principal eigenvalue used by every admissibility and floor check.
pub fn principal_mu1(problem: &Problem, opts: &SolverOptions) -> Result<f64> {
    let pair = principal_eigenpair(&problem.grid, opts.eigen_tol, opts.eigen_max_iter)?;
    conservative_mu1(&problem.grid, &pair)
}

fn check_weak(problem: &Problem, i: usize, mu1: f64) -> Result<()> {
    let threshold = problem.family(i).nu * mu1;
    let lambda = problem.params.lambda(i);
    if lambda < threshold {
        Ok(())
    } else {
        Err(Error::InadmissibleLambda { component: i + 1, lambda, threshold })
    }
}

fn check_strong(problem: &Problem, mu1: f64) -> Result<()> {
    for i in 0..2 {
        let threshold = lambda_threshold(problem.params.p, problem.family(i).nu, problem.params.gamma, mu1);
        let lambda = problem.params.lambda(i);
        if lambda >= threshold {
            return Err(Error::InadmissibleLambda { component: i + 1, lambda, threshold });
        }
    }
    Ok(())
}

/// Both `∫|u_i|^p` exceed `10³ · tol`.
pub fn is_fully_nontrivial(problem: &Problem, u: &StatePair, tol: f64) -> Result<bool> {
    let m = problem.moments(u)?;
    Ok(m.power.iter().all(|&p| p > 1e3 * tol))
}

/// Minimum nodal value at least `−10⁻⁸` times the maximum, per component.
pub fn is_nonnegative(u: &StatePair) -> bool {
    [&u.u1, &u.u2].iter().all(|f| f.min() >= -1e-8 * f.max().max(0.0))
}

/// The pairs `(ν(1 − λ_i/(νμ₁))∫|∇u_i|², ∫|u_i|^p)` whose ordering the
/// Nehari lower bounds assert in the competitive regime.
pub fn nehari_floors(problem: &Problem, u: &StatePair, mu1: f64) -> Result<[(f64, f64); 2]> {
    let m = problem.moments(u)?;
    let f = |i: usize| {
        let nu = problem.family(i).nu;
        (nu * (1.0 - problem.params.lambda(i) / (nu * mu1)) * m.dirichlet[i], m.power[i])
    };
    Ok([f(0), f(1)])
}

/// `E(u) − Σ_i c_i ∫|∇u_i|² + Σ_i |r_i|/p` with
/// `c_i = ((p−2−γ)/(2p))ν − ((p−2)λ_i⁺)/(2pμ₁)`; nonnegative on the Nehari set
/// whenever the coefficient bounds hold at the sampled values.
pub fn coercivity_margin(problem: &Problem, u: &StatePair, mu1: f64) -> Result<f64> {
    let m = problem.moments(u)?;
    let e = problem.energy_from(&m, 1.0);
    let r = problem.residual_from(&m, 1.0);
    let p = problem.params.p;
    let g = problem.params.gamma;
    let mut bound = 0.0;
    for i in 0..2 {
        let nu = problem.family(i).nu;
        let c = (p - 2.0 - g) / (2.0 * p) * nu - (p - 2.0) * problem.params.lambda(i).max(0.0) / (2.0 * p * mu1);
        bound += c * m.dirichlet[i];
    }
    Ok(e - bound + (r.r1.abs() + r.r2.abs()) / p)
}

fn sign_normalize(problem: &Problem, u: &mut StatePair) {
    for i in 0..2 {
        if problem.family(i).even && u.component(i).sum() < 0.0 {
            *u.component_mut(i) = u.component(i).scaled(-1.0);
        }
    }
}

fn pair_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5851_F42D_4C95_7F2D)
}

#[derive(Debug, Clone)]
struct Candidate {
    u: StatePair,
    energy: f64,
    residual: f64,
    iterations: usize,
}

fn scalar_candidate(problem: &Problem, ctx: &Context, i: usize, kappa: f64, start: &ScalarField, opts: &SolverOptions) -> Result<Candidate> {
    let mut pair = StatePair::zeros(&problem.grid);
    *pair.component_mut(i) = start.clone();
    let mode = Mode::Scalar { i, kappa };
    let out = Descent { problem, kinv: &ctx.kinv, opts, mode }.run(&pair, None)?;
    let active = [i == 0, i == 1];
    let pol = polish(problem, &ctx.kinv, &out.u, kappa, active, opts);
    Ok(Candidate { u: pol.u, energy: pol.energy, residual: pol.residual, iterations: out.iterations + pol.iterations })
}

/// Minimizes `z ↦ I(t_z z)` over the unit sphere from random positive starts
/// and keeps the lowest converged candidate. `kappa` weights `∫|z|^p`.
fn scalar_solve(problem: &Problem, ctx: &Context, i: usize, kappa: f64, opts: &SolverOptions) -> Result<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<Candidate> = None;
    let mut worst_residual = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..opts.restarts.max(1) {
        let start = init::random_positive(&problem.grid, &mut rng);
        let c = match scalar_candidate(problem, ctx, i, kappa, &start, opts) {
            Ok(c) => c,
            Err(Error::NotProjectable(_)) => continue,
            Err(e) => return Err(e),
        };
        iterations += c.iterations;
        if c.residual > opts.tol {
            worst_residual = worst_residual.min(c.residual);
            continue;
        }
        if best.as_ref().is_none_or(|b| c.energy < b.energy) {
            best = Some(c);
        }
    }
    let mut best = best.ok_or(Error::NoConvergence { iterations, residual: worst_residual })?;
    if best.u.component(i).sum() < 0.0 {
        *best.u.component_mut(i) = best.u.component(i).scaled(-1.0);
    }
    best.iterations = iterations;
    Ok(best)
}

/// Least energy solution of the scalar problem for component `i ∈ {0, 1}`.
pub fn scalar_ground_state(problem: &Problem, i: usize, opts: &SolverOptions) -> Result<ScalarSolution> {
    let ctx = Context::new(problem, opts)?;
    scalar_ground_state_in(problem, &ctx, i, opts)
}

fn scalar_ground_state_in(problem: &Problem, ctx: &Context, i: usize, opts: &SolverOptions) -> Result<ScalarSolution> {
    if i > 1 {
        return Err(Error::InvalidParams(format!("component index {i} out of range")));
    }
    check_weak(problem, i, ctx.mu1)?;
    let c = scalar_solve(problem, ctx, i, 1.0, opts)?;
    let field = c.u.component(i).clone();
    let level = problem.scalar_energy(&field, i)?;
    let (l1, l2) = if i == 0 { (level, f64::NAN) } else { (f64::NAN, level) };
    let mut warnings = Vec::new();
    if field.min() < -1e-8 * field.max() {
        warnings.push("scalar ground state changes sign".to_string());
    }
    let report = SolveReport {
        energy: level,
        l1,
        l2,
        e_beta_estimate: f64::NAN,
        euler_residual_norm: c.residual,
        nehari_residual: problem.nehari_residual(&c.u)?,
        fully_nontrivial: false,
        nonnegative: field.min() >= -1e-8 * field.max(),
        iterations: c.iterations,
        regime: Regime::Decoupled,
        warnings,
        diagonal_power: None,
        below_scalar_levels: None,
    };
    Ok(ScalarSolution { field, level, report })
}

/// Scalar ground states and levels of both components.
pub fn scalar_levels(problem: &Problem, opts: &SolverOptions) -> Result<Levels> {
    let ctx = Context::new(problem, opts)?;
    levels_in(problem, &ctx, opts)
}

fn levels_in(problem: &Problem, ctx: &Context, opts: &SolverOptions) -> Result<Levels> {
    let a = scalar_ground_state_in(problem, ctx, 0, opts)?;
    let b = scalar_ground_state_in(problem, ctx, 1, opts)?;
    Ok(Levels { fields: [a.field, b.field], values: [a.level, b.level] })
}

fn pair_candidate(problem: &Problem, ctx: &Context, mode: Mode, start: &StatePair, opts: &SolverOptions) -> Result<Candidate> {
    let out = Descent { problem, kinv: &ctx.kinv, opts, mode }.run(start, None)?;
    let pol = polish(problem, &ctx.kinv, &out.u, 1.0, [true, true], opts);
    Ok(Candidate { u: pol.u, energy: pol.energy, residual: pol.residual, iterations: out.iterations + pol.iterations })
}

#[allow(clippy::too_many_arguments)]
fn report_for(
    problem: &Problem,
    u: &StatePair,
    c: &Candidate,
    iterations: usize,
    levels: &Levels,
    regime: Regime,
    warnings: Vec<String>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    Ok(SolveReport {
        energy: c.energy,
        l1: levels.values[0],
        l2: levels.values[1],
        e_beta_estimate: c.energy,
        euler_residual_norm: c.residual,
        nehari_residual: problem.nehari_residual(u)?,
        fully_nontrivial: is_fully_nontrivial(problem, u, opts.tol)?,
        nonnegative: is_nonnegative(u),
        iterations,
        regime,
        warnings,
        diagonal_power: None,
        below_scalar_levels: None,
    })
}

/// Keeps the lowest converged, fully nontrivial candidate.
fn select(problem: &Problem, cands: Vec<Candidate>, opts: &SolverOptions) -> Result<(Candidate, usize)> {
    let iterations = cands.iter().map(|c| c.iterations).sum();
    let mut best: Option<Candidate> = None;
    let mut any_converged = false;
    let mut best_residual = f64::INFINITY;
    for c in cands {
        best_residual = best_residual.min(c.residual);
        if c.residual > opts.tol || !c.energy.is_finite() {
            continue;
        }
        any_converged = true;
        if !is_fully_nontrivial(problem, &c.u, opts.tol)? {
            continue;
        }
        if best.as_ref().is_none_or(|b| c.energy < b.energy) {
            best = Some(c);
        }
    }
    match best {
        Some(b) => Ok((b, iterations)),
        None if any_converged => Err(Error::NoFullyNontrivialCandidate),
        None => Err(Error::NoConvergence { iterations, residual: best_residual }),
    }
}

/// Least energy solution for `β < 0` by reduced minimization over the
/// sphere product, from segregated bumps and random positive data.
pub fn competitive_least_energy(problem: &Problem, opts: &SolverOptions) -> Result<Solution> {
    competitive_from(problem, &default_pair_starts(problem, opts), None, opts)
}

fn default_pair_starts(problem: &Problem, opts: &SolverOptions) -> Vec<StatePair> {
    let mut starts = vec![init::segregated_pair(&problem.grid)];
    let mut rng = pair_seed(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(init::random_segregated_pair(&problem.grid, &mut rng));
    }
    starts
}

/// As [`competitive_least_energy`], from the given initial states. Precomputed
/// scalar levels may be supplied to skip the scalar solves. Also accepts
/// `β = 0`, where the reduction decouples.
pub fn competitive_from(problem: &Problem, starts: &[StatePair], levels: Option<&Levels>, opts: &SolverOptions) -> Result<Solution> {
    let beta = problem.params.beta;
    if beta > 0.0 {
        return Err(Error::InvalidParams(format!("competitive solver needs beta <= 0, got {beta}")));
    }
    let ctx = Context::new(problem, opts)?;
    check_strong(problem, ctx.mu1)?;
    let owned;
    let levels = match levels {
        Some(l) => l,
        None => {
            owned = levels_in(problem, &ctx, opts)?;
            &owned
        }
    };
    let mut warnings = Vec::new();
    if (-1.0..0.0).contains(&beta) {
        warnings.push(format!("beta = {beta} lies in [-1, 0): projectability is only guaranteed for beta < -1"));
    }
    let mut cands = Vec::new();
    let mut skipped = 0;
    for s in starts {
        match pair_candidate(problem, &ctx, Mode::Maximize, s, opts) {
            Ok(c) => cands.push(c),
            Err(Error::NotProjectable(_)) | Err(Error::DegenerateInput(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} start(s) not projectable"));
    }
    if cands.is_empty() {
        return Err(Error::NotProjectable("no start admits an interior fiber maximum".into()));
    }
    let (best, iterations) = select(problem, cands, opts)?;
    let mut u = best.u.clone();
    sign_normalize(problem, &mut u);
    if beta < 0.0 {
        let floors = nehari_floors(problem, &u, ctx.mu1)?;
        for (i, (lhs, rhs)) in floors.iter().enumerate() {
            if lhs > rhs {
                warnings.push(format!("Nehari floor violated for component {}: {lhs:.6e} > {rhs:.6e}", i + 1));
            }
        }
    }
    let margin = coercivity_margin(problem, &u, ctx.mu1)?;
    if margin < -1e-10 * (1.0 + best.energy.abs()) {
        return Err(Error::InvalidParams(format!(
            "coercivity bound violated by {:.3e} at energy {:.6e}; the coefficient hypotheses do not hold on this state",
            -margin, best.energy
        )));
    }
    let report = report_for(problem, &u, &best, iterations, levels, Regime::of_beta(beta), warnings, opts)?;
    Ok(Solution { state: u, report })
}

/// Least energy solution for `β > 0` among synchronized, scalar-pair and
/// random candidates.
pub fn cooperative_least_energy(problem: &Problem, opts: &SolverOptions) -> Result<Solution> {
    cooperative_from(problem, &[], None, opts)
}

/// As [`cooperative_least_energy`] with extra starting states.
pub fn cooperative_from(problem: &Problem, extra: &[StatePair], levels: Option<&Levels>, opts: &SolverOptions) -> Result<Solution> {
    let beta = problem.params.beta;
    if beta <= 0.0 {
        return Err(Error::InvalidParams(format!("cooperative solver needs beta > 0, got {beta}")));
    }
    let ctx = Context::new(problem, opts)?;
    check_strong(problem, ctx.mu1)?;
    let owned;
    let levels = match levels {
        Some(l) => l,
        None => {
            owned = levels_in(problem, &ctx, opts)?;
            &owned
        }
    };
    let mut cands = Vec::new();
    let mut warnings = Vec::new();
    let mut diagonal_power = None;
    let symmetric = problem.families[0] == problem.families[1] && problem.params.lambda1 == problem.params.lambda2;
    if symmetric {
        // E(w, w) is twice the scalar energy with self-interaction 1 + β
        match scalar_solve(problem, &ctx, 0, 1.0 + beta, opts) {
            Ok(c) => {
                let w = c.u.u1.clone();
                diagonal_power = Some(problem.moments(&StatePair::new(w.clone(), problem.grid.zeros()))?.power[0]);
                let pair = StatePair::new(w.clone(), w);
                let pol = polish(problem, &ctx.kinv, &pair, 1.0, [true, true], opts);
                cands.push(Candidate { u: pol.u, energy: pol.energy, residual: pol.residual, iterations: c.iterations + pol.iterations });
            }
            Err(e) => warnings.push(format!("synchronized candidate failed: {e}")),
        }
    }
    let mut starts = vec![StatePair::new(levels.fields[0].clone(), levels.fields[1].scaled(1e-2))];
    let mut rng = pair_seed(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(init::random_pair(&problem.grid, &mut rng));
    }
    starts.extend(extra.iter().cloned());
    for s in &starts {
        match pair_candidate(problem, &ctx, Mode::Critical, s, opts) {
            Ok(c) => cands.push(c),
            Err(Error::NotProjectable(_)) | Err(Error::DegenerateInput(_)) => {
                warnings.push("start without a fiber critical point skipped".into())
            }
            Err(e) => return Err(e),
        }
    }
    let (best, iterations) = select(problem, cands, opts)?;
    let mut u = best.u.clone();
    sign_normalize(problem, &mut u);
    let mut report = report_for(problem, &u, &best, iterations, levels, Regime::Cooperative, warnings, opts)?;
    report.diagonal_power = diagonal_power;
    report.below_scalar_levels = Some(best.energy < levels.values[0].min(levels.values[1]));
    Ok(Solution { state: u, report })
}

/// Dispatches on the sign of `β`.
pub fn solve_system(problem: &Problem, opts: &SolverOptions) -> Result<Solution> {
    if problem.params.beta > 0.0 {
        cooperative_least_energy(problem, opts)
    } else {
        competitive_least_energy(problem, opts)
    }
}

/// Newton polish of an arbitrary state. Returns the polished state and its
/// Euler residual norm; the energy never increases beyond round-off.
pub fn refine_solution(problem: &Problem, u: &StatePair, opts: &SolverOptions) -> Result<(StatePair, f64)> {
    problem.grid.check_pair(u)?;
    if !u.is_finite() {
        return Err(Error::DegenerateInput("state has non-finite entries".into()));
    }
    let kinv = StiffnessSolver::new(&problem.grid);
    let pol = polish(problem, &kinv, u, 1.0, [true, true], opts);
    Ok((pol.u, pol.residual))
}

pub const SWEEP_HEADER: &str = "beta,energy,L1,L2,e_beta,euler_res,nehari_r1,nehari_r2,fully_nontrivial,nonnegative,iterations,status";

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub beta: f64,
    pub outcome: std::result::Result<SolveReport, String>,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        match &self.outcome {
            Ok(r) => format!(
                "{:e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6e},{:.6e},{:.6e},{},{},{},ok",
                self.beta,
                r.energy,
                r.l1,
                r.l2,
                r.e_beta_estimate,
                r.euler_residual_norm,
                r.nehari_residual.r1,
                r.nehari_residual.r2,
                r.fully_nontrivial,
                r.nonnegative,
                r.iterations
            ),
            Err(msg) => format!("{:e},NaN,NaN,NaN,NaN,NaN,NaN,NaN,false,false,0,error: {}", self.beta, msg.replace(',', ";")),
        }
    }
}

/// One solve per `β`, each warm-started from the previous solution. Row
/// failures are recorded without aborting the sweep; the scalar levels are
/// computed once.
pub fn beta_sweep(betas: &[f64], problem: &Problem, opts: &SolverOptions) -> Result<Vec<SweepRow>> {
    if let Some(b) = betas.iter().find(|b| !b.is_finite()) {
        return Err(Error::InvalidParams(format!("non-finite beta {b}")));
    }
    let levels = scalar_levels(problem, opts)?;
    let mut rows = Vec::with_capacity(betas.len());
    let mut previous: Option<StatePair> = None;
    for &beta in betas {
        let pb = problem.with_beta(beta);
        let warm: Vec<StatePair> = previous.iter().cloned().collect();
        let out = if beta > 0.0 {
            cooperative_from(&pb, &warm, Some(&levels), opts)
        } else {
            let mut starts = default_pair_starts(&pb, opts);
            starts.extend(warm);
            competitive_from(&pb, &starts, Some(&levels), opts)
        };
        match out {
            Ok(sol) => {
                previous = Some(sol.state);
                rows.push(SweepRow { beta, outcome: Ok(sol.report) });
            }
            Err(e) => rows.push(SweepRow { beta, outcome: Err(e.to_string()) }),
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientFamily;
    use crate::energy::ProblemParams;
    use crate::grid::GridSpec;

    fn problem(beta: f64, lambda: f64) -> Problem {
        Problem::new(
            GridSpec::unit_square(11),
            ProblemParams::new(lambda, lambda, beta, 4.0, 1.0),
            CoefficientFamily::example(1.0),
            CoefficientFamily::example(1.0),
        )
        .unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions { restarts: 1, ..SolverOptions::default() }
    }

    #[test]
    fn regime_of_beta() {
        assert_eq!(Regime::of_beta(0.5), Regime::Cooperative);
        assert_eq!(Regime::of_beta(-0.5), Regime::Competitive);
        assert_eq!(Regime::of_beta(0.0), Regime::Decoupled);
    }

    #[test]
    fn refine_keeps_zero_state() {
        let pr = problem(-1.0, 0.0);
        let (u, res) = refine_solution(&pr, &StatePair::zeros(&pr.grid), &opts()).unwrap();
        assert_eq!(res, 0.0);
        assert_eq!(u.u1.max(), 0.0);
    }

    #[test]
    fn refine_rejects_non_finite() {
        let pr = problem(-1.0, 0.0);
        let mut u = StatePair::zeros(&pr.grid);
        u.u1[0] = f64::NAN;
        assert!(matches!(refine_solution(&pr, &u, &opts()), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn refine_does_not_increase_residual() {
        let pr = problem(-2.0, 0.0);
        let sol = competitive_least_energy(&pr, &opts()).unwrap();
        let mut u = sol.state.clone();
        for (k, v) in u.u1.as_mut_slice().iter_mut().enumerate() {
            *v *= 1.0 + 1e-3 * ((k % 7) as f64 - 3.0);
        }
        let before = pr.euler_residual_norm(&u).unwrap();
        let (v, after) = refine_solution(&pr, &u, &opts()).unwrap();
        assert!(after <= before);
        assert!((pr.euler_residual_norm(&v).unwrap() - after).abs() <= 1e-12 * (1.0 + after));
    }

    #[test]
    fn scalar_levels_are_positive_and_bound_the_decoupled_energy() {
        let pr = problem(0.0, 1.0);
        let o = opts();
        let lv = scalar_levels(&pr, &o).unwrap();
        assert!(lv.values[0] > 0.0 && lv.values[1] > 0.0);
        let sol = solve_system(&pr, &o).unwrap();
        let sum = lv.values[0] + lv.values[1];
        assert!((sol.report.energy - sum).abs() <= 1e-8 * sum);
        assert!(sol.report.fully_nontrivial && sol.report.nonnegative);
    }

    #[test]
    fn wrong_sign_is_rejected() {
        let o = opts();
        assert!(matches!(competitive_least_energy(&problem(0.5, 0.0), &o), Err(Error::InvalidParams(_))));
        assert!(matches!(cooperative_least_energy(&problem(-0.5, 0.0), &o), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn lambda_above_threshold_is_inadmissible() {
        let pr = problem(-1.0, 1e3);
        match scalar_ground_state(&pr, 0, &opts()) {
            Err(Error::InadmissibleLambda { component, threshold, .. }) => {
                assert_eq!(component, 1);
                assert!(threshold > 0.0 && threshold < 1e3);
            }
            other => panic!("expected inadmissible lambda, got {other:?}"),
        }
    }

    #[test]
    fn sweep_rows_match_header() {
        let pr = problem(0.0, 0.0);
        let rows = beta_sweep(&[0.0, -1.0], &pr, &opts()).unwrap();
        assert_eq!(rows.len(), 2);
        let width = SWEEP_HEADER.split(',').count();
        for r in &rows {
            assert!(r.outcome.is_ok(), "{:?}", r.outcome);
            assert_eq!(r.to_csv().split(',').count(), width);
        }
        let failed = SweepRow { beta: 1.0, outcome: Err("a, b".into()) };
        assert_eq!(failed.to_csv().split(',').count(), width);
        assert!(beta_sweep(&[f64::NAN], &pr, &opts()).is_err());
    }
}
