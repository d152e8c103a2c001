//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use coupled_nehari::coeffs::{certify, CoefficientFamily, Condition, Verdict};
use coupled_nehari::energy::{Problem, ProblemParams};
use coupled_nehari::fiber::{fiber_gradient, fiber_value, project_to_nehari, FiberMap, FiberPoint, ProjectionOptions, ProjectionStatus};
use coupled_nehari::grid::{Grid, GridSpec, StatePair};
use coupled_nehari::solvers::{
    self, competitive_from, competitive_least_energy, cooperative_least_energy, init, SolverOptions,
};
use coupled_nehari::spectrum::{principal_eigenpair, stencil_mu1_exact};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, format!("runtime {:.1?} exceeds {:?}", t, limit))
}

fn example_problem(n: usize, beta: f64) -> Problem {
    let fam = CoefficientFamily::example(1.0);
    Problem::new(GridSpec::unit_square(n), ProblemParams::new(0.0, 0.0, beta, 4.0, 1.0), fam.clone(), fam).unwrap()
}

fn identity_problem(n: usize, beta: f64) -> Problem {
    let fam = CoefficientFamily::identity(1.0);
    Problem::new(GridSpec::unit_square(n), ProblemParams::new(0.0, 0.0, beta, 4.0, 1.0), fam.clone(), fam).unwrap()
}

fn eigenvalue_oracle() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut mu63 = 0.0;
    for n in [15, 31, 63] {
        let g = Grid::new(GridSpec::unit_square(n)).unwrap();
        let e = principal_eigenpair(&g, 1e-12, 500).map_err(|e| e.to_string())?;
        let h = 1.0 / (n + 1) as f64;
        let exact = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((stencil_mu1_exact(&g) - exact).abs() <= 1e-12 * exact);
        let rel = (e.mu - exact).abs() / exact;
        ensure(rel <= 1e-10, format!("n = {n}: relative error {rel:.2e}"))?;
        worst = worst.max(rel);
        mu63 = e.mu;
    }
    let cont = 2.0 * PI * PI;
    let rel = (mu63 - cont).abs() / cont;
    ensure(rel <= 1e-3, format!("n = 63: {mu63} is {rel:.2e} from 2π²"))?;
    within(Duration::from_secs(5), start)?;
    Ok(format!("max rel. error {worst:.1e}; n=63 off 2π² by {:.3}%", 100.0 * rel))
}

fn gradient_consistency() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_e, mut worst_f): (f64, f64) = (0.0, 0.0);
    for k in 0..20 {
        let beta = [-2.0, 0.0, 3.0][k % 3];
        let pr = example_problem(31, beta);
        let u = random_pair(&pr.grid, &mut rng, 0.5, 3.0);
        let g = pr.euler_gradient(&u).unwrap();
        let w = pr.grid.cell_area();
        for _ in 0..5 {
            let comp = rng.gen_range(0..2);
            let node = rng.gen_range(0..pr.grid.node_count());
            let fd = energy_partial(&pr, &u, comp, node, 1e-3) / w;
            let rel = rel_err(g.component(comp)[node], fd);
            worst_e = worst_e.max(rel);
            ensure(rel < 1e-6, format!("beta {beta}, node {node}: euler_gradient off by {rel:.2e}"))?;
        }
        let t = FiberPoint::new(rng.gen_range(0.3..3.0), rng.gen_range(0.3..3.0));
        let (g1, g2) = fiber_gradient(&pr, &u, t).unwrap();
        let h = 1e-3;
        let fd1 = diff4(|d| fiber_value(&pr, &u, FiberPoint::new(t.t1 + d, t.t2)).unwrap(), h);
        let fd2 = diff4(|d| fiber_value(&pr, &u, FiberPoint::new(t.t1, t.t2 + d)).unwrap(), h);
        let rel = rel_err(g1, fd1).max(rel_err(g2, fd2));
        worst_f = worst_f.max(rel);
        ensure(rel < 1e-7, format!("beta {beta}: fiber_gradient off by {rel:.2e}"))?;
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("euler_gradient max rel. error {worst_e:.1e}, fiber_gradient {worst_f:.1e}"))
}

fn decoupling_oracle() -> Check {
    let start = Instant::now();
    let n = 63;
    let pr = identity_problem(n, 0.0);
    let opts = SolverOptions::default();
    let sol = competitive_least_energy(&pr, &opts).map_err(|e| e.to_string())?;
    let (oracle, _) = petviashvili_ground_state(n, 500);
    let r = &sol.report;
    let sum = r.l1 + r.l2;
    let rel_sum = rel_err(r.energy, sum);
    ensure(rel_sum <= 1e-2, format!("energy {} vs L1 + L2 = {sum}", r.energy))?;
    for i in 0..2 {
        let e = pr.scalar_energy(sol.state.component(i), i).unwrap();
        let rel = rel_err(e, oracle);
        ensure(rel <= 5e-3, format!("component {}: energy {e} vs independent level {oracle}", i + 1))?;
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("energy {:.6} = L1+L2 {:.6} (rel {rel_sum:.1e}); independent level {oracle:.6}", r.energy, sum))
}

fn competitive_regime() -> Check {
    let start = Instant::now();
    let pr = example_problem(63, -2.0);
    let opts = SolverOptions::default();
    let sol = competitive_least_energy(&pr, &opts).map_err(|e| e.to_string())?;
    let r = &sol.report;
    let u = &sol.state;
    ensure(r.fully_nontrivial, "not fully nontrivial")?;
    ensure(solvers::is_nonnegative(u), "not nonnegative")?;
    let nr = pr.nehari_residual(u).unwrap();
    ensure(nr.max_abs() <= 1e-8, format!("Nehari residuals {:.2e}, {:.2e}", nr.r1, nr.r2))?;
    let res = pr.euler_residual_norm(u).unwrap();
    ensure(res <= 1e-6, format!("Euler residual {res:.2e}"))?;
    let mu1 = solvers::principal_mu1(&pr, &opts).unwrap();
    for (i, (lhs, rhs)) in solvers::nehari_floors(&pr, u, mu1).unwrap().iter().enumerate() {
        ensure(lhs <= rhs, format!("floor {}: {lhs} > {rhs}", i + 1))?;
    }
    let margin = solvers::coercivity_margin(&pr, u, mu1).unwrap();
    ensure(margin >= 0.0, format!("coercivity bound violated by {:.2e}", -margin))?;
    within(Duration::from_secs(300), start)?;
    Ok(format!(
        "energy {:.6}, Euler residual {res:.1e}, Nehari residual {:.1e}, coercivity margin {margin:.3}",
        r.energy,
        nr.max_abs()
    ))
}

fn fiber_uniqueness() -> Check {
    let start = Instant::now();
    let pr = example_problem(31, -2.0);
    let opts = ProjectionOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut accepted = 0;
    let mut drawn = 0;
    let mut worst: f64 = 0.0;
    while accepted < 50 {
        drawn += 1;
        ensure(drawn <= 1000, "too few projectable states")?;
        // alternate overlapping and partially segregated data
        let u = if drawn % 2 == 0 {
            random_pair(&pr.grid, &mut rng, 0.2, 5.0)
        } else {
            random_segregated(&pr.grid, &mut rng, 0.2, 5.0)
        };
        let r = project_to_nehari(&pr, &u, &opts).unwrap();
        if r.status != ProjectionStatus::InteriorMax {
            continue;
        }
        accepted += 1;
        let cells = FiberMap::new(&pr, &u).unwrap().critical_cells(opts.t_min, opts.t_max, 200);
        ensure(cells.len() == 1, format!("state {accepted}: {} critical cells", cells.len()))?;
        let again = project_to_nehari(&pr, &r.projected, &opts).unwrap();
        ensure(again.status == ProjectionStatus::InteriorMax, "projected state not projectable")?;
        let d = (again.t.t1 - 1.0).abs().max((again.t.t2 - 1.0).abs());
        worst = worst.max(d);
        ensure(d <= 1e-8, format!("state {accepted}: re-projection moved t by {d:.2e}"))?;
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("50 states ({drawn} drawn), one critical cell each; re-projection |t-1| <= {worst:.1e}"))
}

fn diagonal_exclusion() -> Check {
    let pr = example_problem(31, -2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..10 {
        let v = init::random_positive(&pr.grid, &mut rng).scaled(rng.gen_range(0.1..10.0));
        let r = project_to_nehari(&pr, &StatePair::new(v.clone(), v), &ProjectionOptions::default()).unwrap();
        ensure(r.status == ProjectionStatus::NotProjectable, format!("diagonal state {k} was projected"))?;
    }
    Ok("10 of 10 diagonal states not projectable".into())
}

fn cooperative_regime() -> Check {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let mut powers = Vec::new();
    let betas = [5.0, 10.0, 20.0, 40.0];
    let mut energies = Vec::new();
    for &beta in &betas {
        let pr = identity_problem(63, beta);
        let sol = cooperative_least_energy(&pr, &opts).map_err(|e| format!("beta {beta}: {e}"))?;
        let r = &sol.report;
        ensure(r.fully_nontrivial, format!("beta {beta}: semi-trivial"))?;
        ensure(r.energy < r.l1.min(r.l2), format!("beta {beta}: {} not below {}", r.energy, r.l1.min(r.l2)))?;
        ensure(r.below_scalar_levels == Some(true), "flag disagrees")?;
        powers.push(r.diagonal_power.ok_or("no diagonal candidate")?);
        energies.push(r.energy);
    }
    for k in 1..powers.len() {
        ensure(powers[k] < powers[k - 1], format!("diagonal power not decreasing: {powers:?}"))?;
    }
    // least-squares slope of log ∫|w_β|^p against log β
    let xs: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
    let ys: Vec<f64> = powers.iter().map(|p| p.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    ensure(slope <= -0.9, format!("log-log slope {slope:.3}"))?;
    within(Duration::from_secs(600), start)?;
    Ok(format!("energies {energies:.4?}, diagonal slope {slope:.3}"))
}

fn certification() -> Check {
    let start = Instant::now();
    let ex = certify(&CoefficientFamily::example(1.0), 4.0, (-10.0, 10.0), 10_000).map_err(|e| e.to_string())?;
    for c in [Condition::Bounded, Condition::Elliptic, Condition::Growth, Condition::GrowthRange, Condition::Monotone] {
        ensure(ex.verdict(c).is_some_and(|v| v.passed()), format!("example family fails {}", c.label()))?;
    }
    ensure(ex.max_growth_ratio <= 0.5 + 1e-6, format!("growth ratio {}", ex.max_growth_ratio))?;
    let planted = CoefficientFamily::even_polynomial(vec![1.0, 1.0], 1.0, 1e3, 1.5);
    let pl = certify(&planted, 4.0, (-10.0, 10.0), 10_000).map_err(|e| e.to_string())?;
    let witness = match pl.verdict(Condition::Growth) {
        Some(Verdict::Fail { witness_s }) => witness_s,
        other => return Err(format!("planted family: a3 verdict {other:?}")),
    };
    ensure(2.0 * witness * witness > 1.5 * (1.0 + witness * witness), "witness does not violate a3")?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("example sup s𝒜′/𝒜 = {:.6}; planted a3 witness s = {witness}", ex.max_growth_ratio))
}

fn determinism_and_swap() -> Check {
    let grid = GridSpec::unit_square(31);
    let params = ProblemParams::new(1.0, 3.0, -2.0, 4.0, 1.0);
    let pr = Problem::new(grid, params, CoefficientFamily::example(1.0), CoefficientFamily::example(1.5)).unwrap();
    let opts = SolverOptions { restarts: 1, seed: 42, ..SolverOptions::default() };
    let a = competitive_least_energy(&pr, &opts).map_err(|e| e.to_string())?;
    let b = competitive_least_energy(&pr, &opts).map_err(|e| e.to_string())?;
    ensure(a.state == b.state && a.report == b.report, "repeated runs differ")?;
    let starts = vec![init::segregated_pair(&pr.grid)];
    let swapped_starts: Vec<StatePair> = starts.iter().map(|s| s.swapped()).collect();
    let x = competitive_from(&pr, &starts, None, &opts).map_err(|e| e.to_string())?;
    let y = competitive_from(&pr.swapped(), &swapped_starts, None, &opts).map_err(|e| e.to_string())?;
    let de = (x.report.energy - y.report.energy).abs();
    ensure(de <= 1e-10, format!("swapped energies differ by {de:.2e}"))?;
    let du = x.state.axpy(-1.0, &y.state.swapped()).max_abs();
    ensure(du <= 1e-6 * x.state.max_abs(), format!("swapped states differ by {du:.2e}"))?;
    Ok(format!("bit-identical repeat; swapped energy difference {de:.1e}, state difference {du:.1e}"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        ("eigenvalue oracle", eigenvalue_oracle),
        ("gradient consistency", gradient_consistency),
        ("decoupling oracle", decoupling_oracle),
        ("competitive regime", competitive_regime),
        ("fiber uniqueness", fiber_uniqueness),
        ("diagonal exclusion", diagonal_exclusion),
        ("cooperative regime", cooperative_regime),
        ("coefficient certification", certification),
        ("determinism and swap equivariance", determinism_and_swap),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.2}s) {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.2}s) {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
