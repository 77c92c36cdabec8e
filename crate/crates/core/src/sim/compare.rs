use serde::Serialize;

use super::scenario::Scenario;
use super::world::{Simulation, StepMetrics};
use super::SimError;
use crate::exec::Execution;
use crate::oracle::{evaluate, solve_p1_with, solve_p2_with, OracleLimits};

/// Decentralized allocation against the centralized optima at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub t: u64,
    /// Claimed assignment including optional radars.
    pub dec_utility: f64,
    /// Claimed assignment restricted to main radars.
    pub dec_main_utility: f64,
    pub central_p1: f64,
    pub central_p2: f64,
    /// `dec_main_utility / central_p1`.
    pub ratio_p1: f64,
    /// `dec_utility / central_p2`.
    pub ratio_p2: f64,
    pub cov_dec: f64,
    pub cov_central: f64,
    pub cov_opt_dec: f64,
    pub cov_opt_central: f64,
    pub load_dec: f64,
    pub load_central: f64,
}

fn ratio(dec: f64, central: f64) -> f64 {
    if central > 0.0 {
        dec / central
    } else if dec > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Freezes the world as it is now and solves both centralized problems on
/// the radars' current ellipses. Loads and coverages on both sides are
/// measured on the same instance.
pub fn compare_now(sim: &Simulation, limits: OracleLimits, exec: Execution) -> Result<ComparisonRow, SimError> {
    let t = sim.time().saturating_sub(1);
    let instance = sim.problem_instance();
    let n = instance.targets.len();
    let dec = sim.claims().assignment();
    let with_step = |source| SimError::Oracle { step: t, source };
    let p1 = solve_p1_with(&instance, limits, exec).map_err(with_step)?;
    let p2 = solve_p2_with(&instance, limits, exec).map_err(with_step)?;
    let dec_utility = evaluate(&instance, &dec).utility;
    let dec_main_utility = evaluate(&instance, &dec.main_only()).utility;
    Ok(ComparisonRow {
        t,
        dec_utility,
        dec_main_utility,
        central_p1: p1.total_utility,
        central_p2: p2.total_utility,
        ratio_p1: ratio(dec_main_utility, p1.total_utility),
        ratio_p2: ratio(dec_utility, p2.total_utility),
        cov_dec: dec.main_coverage(n),
        cov_central: p2.main_coverage(n),
        cov_opt_dec: dec.optional_coverage(n),
        cov_opt_central: p2.optional_coverage(n),
        load_dec: instance.mean_load(&dec),
        load_central: instance.mean_load(&p2),
    })
}

/// Runs `scenario` and compares against the centralized optima after each
/// step listed in `at_steps`.
pub fn compare_centralized(
    scenario: &Scenario,
    at_steps: &[u64],
    limits: OracleLimits,
    exec: Execution,
) -> Result<Vec<ComparisonRow>, SimError> {
    let mut sim = Simulation::new(scenario.clone(), exec)?;
    let last = at_steps.iter().copied().max().map_or(0, |m| m + 1);
    let mut rows = Vec::new();
    while sim.time() < last {
        sim.step()?;
        if at_steps.contains(&(sim.time() - 1)) {
            rows.push(compare_now(&sim, limits, exec)?);
        }
    }
    Ok(rows)
}

/// Outcome of running a frozen scenario to convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticReport {
    pub seed: u64,
    /// First step from which all radars agree on both rounds through the
    /// end of the run.
    pub agreed_at: Option<u64>,
    /// First step from which main-round conflicts stay at zero.
    pub conflict_free_at: Option<u64>,
    pub final_metrics: StepMetrics,
    pub comparison: ComparisonRow,
}

/// Runs a frozen copy of `scenario` for `steps` steps, then compares with
/// the optima.
pub fn run_static(
    scenario: &Scenario,
    steps: u64,
    limits: OracleLimits,
    exec: Execution,
) -> Result<StaticReport, SimError> {
    let scenario = Scenario {
        frozen: true,
        steps,
        ..scenario.clone()
    };
    let mut sim = Simulation::new(scenario.clone(), exec)?;
    let mut agreed_at = None;
    let mut conflict_free_at = None;
    let mut last = None;
    for _ in 0..steps {
        let (m, _) = sim.step()?;
        if sim.agreed() {
            agreed_at.get_or_insert(m.t);
        } else {
            agreed_at = None;
        }
        if m.conflicts == 0 {
            conflict_free_at.get_or_insert(m.t);
        } else {
            conflict_free_at = None;
        }
        last = Some(m);
    }
    let final_metrics = last.ok_or_else(|| SimError::InvalidScenario("static run needs at least one step".into()))?;
    Ok(StaticReport {
        seed: scenario.seed,
        agreed_at,
        conflict_free_at,
        final_metrics,
        comparison: compare_now(&sim, limits, exec)?,
    })
}

/// [`run_static`] over many scenarios; scenarios run concurrently under
/// [`Execution::Parallel`], each one sequentially inside.
pub fn run_static_batch(
    scenarios: &[Scenario],
    steps: u64,
    limits: OracleLimits,
    exec: Execution,
) -> Result<Vec<StaticReport>, SimError> {
    exec.map(scenarios, |s| run_static(s, steps, limits, Execution::Sequential))
        .into_iter()
        .collect()
}
