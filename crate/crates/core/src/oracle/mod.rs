//! Centralized exact allocation.
//!
//! Two problems are solved exactly:
//!
//! * **P1**: each target gets at most one radar; maximize `Σ c_ij` subject
//!   to per-radar budgets.
//! * **P2**: each target gets nothing, a single main radar (value `c_ij`),
//!   or a main/optional pair `(i, k)`, `i != k` (value `c_ikj`). Both radars
//!   of a pair are charged their task cost.
//!
//! [`evaluate`] is the shared checker used to score both solver output and
//! decentralized allocations against the same objective.

mod brute;
mod solver;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{RadarId, TargetId};

pub use brute::{enumerate_p1, enumerate_p2};
pub use solver::{solve_p1, solve_p1_with, solve_p2, solve_p2_with};

/// Utilities closer than this are treated as tied.
pub const VALUE_TOLERANCE: f64 = 1e-9;
const BUDGET_SLACK: f64 = 1e-9;
// choice codes are u16: 1 + n + n^2 must fit
const MAX_ENCODABLE_RADARS: usize = 255;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for {problem}: {radars} radars x {targets} targets (limit {max_radars} x {max_targets})")]
    Capacity {
        problem: &'static str,
        radars: usize,
        targets: usize,
        max_radars: usize,
        max_targets: usize,
    },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Size caps for the exact solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub p1_max_radars: usize,
    pub p1_max_targets: usize,
    pub p2_max_radars: usize,
    pub p2_max_targets: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            p1_max_radars: 6,
            p1_max_targets: 14,
            p2_max_radars: 4,
            p2_max_targets: 12,
        }
    }
}

impl OracleLimits {
    pub fn unbounded() -> Self {
        Self {
            p1_max_radars: usize::MAX,
            p1_max_targets: usize::MAX,
            p2_max_radars: usize::MAX,
            p2_max_targets: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct ProblemInstance {
    /// Budget `L_t` per radar.
    pub radars: BTreeMap<RadarId, f64>,
    pub targets: Vec<TargetId>,
    /// `c_ij`; a missing key means radar `i` cannot handle target `j`.
    pub utilities_main: BTreeMap<(RadarId, TargetId), f64>,
    /// `c_ikj` with `i` main and `k` optional.
    pub utilities_pair: BTreeMap<(RadarId, RadarId, TargetId), f64>,
    /// `gamma_ij`.
    pub costs: BTreeMap<(RadarId, TargetId), f64>,
}

impl ProblemInstance {
    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: String| Err(OracleError::InvalidInstance(m));
        for (r, b) in &self.radars {
            if !(*b > 0.0) {
                return bad(format!("budget of {r} must be positive"));
            }
        }
        if self.targets.windows(2).any(|w| w[0] >= w[1]) {
            return bad("target ids must be sorted and unique".into());
        }
        let known_target = |t: &TargetId| self.targets.binary_search(t).is_ok();
        for (&(i, j), &c) in &self.utilities_main {
            if !(c >= 0.0) || !c.is_finite() {
                return bad(format!("utility of ({i}, {j}) must be non-negative"));
            }
            if !self.radars.contains_key(&i) || !known_target(&j) {
                return bad(format!("utility references unknown pair ({i}, {j})"));
            }
            match self.costs.get(&(i, j)) {
                Some(g) if *g > 0.0 => {}
                _ => return bad(format!("missing or non-positive cost for ({i}, {j})")),
            }
        }
        for (&(i, k, j), &c) in &self.utilities_pair {
            if !(c >= 0.0) || !c.is_finite() {
                return bad(format!("pair utility of ({i}, {k}, {j}) must be non-negative"));
            }
            if !self.utilities_main.contains_key(&(i, j)) || !self.utilities_main.contains_key(&(k, j)) {
                return bad(format!("pair ({i}, {k}, {j}) needs both radars able to handle {j}"));
            }
            if i == k && (c - self.utilities_main[&(i, j)]).abs() > VALUE_TOLERANCE {
                return bad(format!("self-pair ({i}, {i}, {j}) must equal the main utility"));
            }
        }
        Ok(())
    }

    pub fn main_utility(&self, radar: RadarId, target: TargetId) -> Option<f64> {
        self.utilities_main.get(&(radar, target)).copied()
    }

    /// `c_ikj`; the self-pair collapses to `c_ij`.
    pub fn pair_utility(&self, main: RadarId, optional: RadarId, target: TargetId) -> Option<f64> {
        if main == optional {
            return self.main_utility(main, target);
        }
        self.utilities_pair.get(&(main, optional, target)).copied()
    }

    pub fn cost(&self, radar: RadarId, target: TargetId) -> Option<f64> {
        self.costs.get(&(radar, target)).copied()
    }

    /// Per-radar load `Σ gamma` over every task the radar touches.
    pub fn loads(&self, assignment: &Assignment) -> BTreeMap<RadarId, f64> {
        let mut loads: BTreeMap<RadarId, f64> = self.radars.keys().map(|r| (*r, 0.0)).collect();
        for (t, r) in assignment.main.iter().chain(assignment.optional.iter()) {
            if let Some(g) = self.cost(*r, *t) {
                *loads.entry(*r).or_default() += g;
            }
        }
        loads
    }

    /// Mean over radars of load / budget.
    pub fn mean_load(&self, assignment: &Assignment) -> f64 {
        if self.radars.is_empty() {
            return 0.0;
        }
        let loads = self.loads(assignment);
        let total: f64 = self
            .radars
            .iter()
            .map(|(r, b)| loads.get(r).copied().unwrap_or(0.0) / b)
            .sum();
        total / self.radars.len() as f64
    }
}

/// Global allocation: at most one main and one optional radar per target.
/// Absent keys mean no radar.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub main: BTreeMap<TargetId, RadarId>,
    pub optional: BTreeMap<TargetId, RadarId>,
    pub total_utility: f64,
}

impl Assignment {
    pub fn main_only(&self) -> Assignment {
        Assignment {
            main: self.main.clone(),
            optional: BTreeMap::new(),
            total_utility: 0.0,
        }
    }

    pub fn main_coverage(&self, n_targets: usize) -> f64 {
        fraction(self.main.len(), n_targets)
    }

    pub fn optional_coverage(&self, n_targets: usize) -> f64 {
        fraction(self.optional.len(), n_targets)
    }
}

pub(crate) fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownTarget(TargetId),
    /// The radar has no utility for the target (cannot perceive it).
    NotHandled { radar: RadarId, target: TargetId },
    OptionalWithoutMain { target: TargetId, optional: RadarId },
    BothRoles { target: TargetId, radar: RadarId },
    Budget { radar: RadarId, load: f64, budget: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownTarget(t) => write!(f, "unknown target {t}"),
            Violation::NotHandled { radar, target } => write!(f, "{radar} cannot handle {target}"),
            Violation::OptionalWithoutMain { target, optional } => {
                write!(f, "(C2) optional {optional} on {target} without a main radar")
            }
            Violation::BothRoles { target, radar } => {
                write!(f, "{radar} is both main and optional on {target}")
            }
            Violation::Budget { radar, load, budget } => {
                write!(f, "(L) {radar} load {load} exceeds budget {budget}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub utility: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Recomputes the objective of `assignment` and checks every constraint.
/// Infeasible parts still contribute whatever utility is defined for them.
pub fn evaluate(instance: &ProblemInstance, assignment: &Assignment) -> Evaluation {
    let mut violations = Vec::new();
    let mut utility = 0.0;
    let known = |t: &TargetId| instance.targets.binary_search(t).is_ok();
    for (&t, &main) in &assignment.main {
        if !known(&t) {
            violations.push(Violation::UnknownTarget(t));
            continue;
        }
        let Some(c_main) = instance.main_utility(main, t) else {
            violations.push(Violation::NotHandled { radar: main, target: t });
            continue;
        };
        match assignment.optional.get(&t) {
            Some(&opt) if opt == main => {
                violations.push(Violation::BothRoles { target: t, radar: main });
                utility += c_main;
            }
            Some(&opt) => match instance.pair_utility(main, opt, t) {
                Some(c) => utility += c,
                None => {
                    violations.push(Violation::NotHandled { radar: opt, target: t });
                    utility += c_main;
                }
            },
            None => utility += c_main,
        }
    }
    for (&t, &opt) in &assignment.optional {
        if !assignment.main.contains_key(&t) {
            violations.push(Violation::OptionalWithoutMain { target: t, optional: opt });
        }
    }
    let loads = instance.loads(assignment);
    for (&r, &load) in &loads {
        match instance.radars.get(&r) {
            Some(&budget) if load > budget + BUDGET_SLACK => {
                violations.push(Violation::Budget { radar: r, load, budget })
            }
            Some(_) => {}
            None => violations.push(Violation::Budget {
                radar: r,
                load,
                budget: 0.0,
            }),
        }
    }
    Evaluation {
        utility,
        feasible: violations.is_empty(),
        violations,
    }
}

/// Tie-aware incumbent update shared by both solvers: strictly better
/// value wins; within [`VALUE_TOLERANCE`] the lexicographically smaller
/// choice vector wins.
pub(crate) fn improves(value: f64, codes: &[u16], best_value: f64, best_codes: &[u16]) -> bool {
    value > best_value + VALUE_TOLERANCE || (value >= best_value - VALUE_TOLERANCE && codes < best_codes)
}

/// Choice code per target: 0 = none, `1 + i` = main radar `i`,
/// `1 + n + i n + k` = pair (main `i`, optional `k`), with radars indexed in
/// id order.
pub(crate) fn decode(instance: &ProblemInstance, codes: &[u16]) -> Assignment {
    let radars: Vec<RadarId> = instance.radars.keys().copied().collect();
    let n = radars.len();
    let mut out = Assignment::default();
    for (&t, &code) in instance.targets.iter().zip(codes) {
        let code = code as usize;
        if code == 0 {
            continue;
        }
        if code <= n {
            out.main.insert(t, radars[code - 1]);
        } else {
            let p = code - 1 - n;
            out.main.insert(t, radars[p / n]);
            out.optional.insert(t, radars[p % n]);
        }
    }
    out.total_utility = evaluate(instance, &out).utility;
    out
}

fn check_capacity(
    instance: &ProblemInstance,
    problem: &'static str,
    max_radars: usize,
    max_targets: usize,
) -> Result<(), OracleError> {
    let max_radars = max_radars.min(MAX_ENCODABLE_RADARS);
    let (radars, targets) = (instance.radars.len(), instance.targets.len());
    if radars > max_radars || targets > max_targets {
        return Err(OracleError::Capacity {
            problem,
            radars,
            targets,
            max_radars,
            max_targets,
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    radars: Vec<RadarBudget>,
    targets: Vec<TargetId>,
    utilities_main: Vec<MainEntry>,
    utilities_pair: Vec<PairEntry>,
    costs: Vec<CostEntry>,
}

#[derive(Serialize, Deserialize)]
struct RadarBudget {
    id: RadarId,
    budget: f64,
}

#[derive(Serialize, Deserialize)]
struct MainEntry {
    radar: RadarId,
    target: TargetId,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct PairEntry {
    main: RadarId,
    optional: RadarId,
    target: TargetId,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct CostEntry {
    radar: RadarId,
    target: TargetId,
    gamma: f64,
}

impl From<ProblemInstance> for InstanceRepr {
    fn from(p: ProblemInstance) -> Self {
        Self {
            radars: p.radars.iter().map(|(&id, &budget)| RadarBudget { id, budget }).collect(),
            targets: p.targets,
            utilities_main: p
                .utilities_main
                .iter()
                .map(|(&(radar, target), &value)| MainEntry { radar, target, value })
                .collect(),
            utilities_pair: p
                .utilities_pair
                .iter()
                .map(|(&(main, optional, target), &value)| PairEntry {
                    main,
                    optional,
                    target,
                    value,
                })
                .collect(),
            costs: p
                .costs
                .iter()
                .map(|(&(radar, target), &gamma)| CostEntry { radar, target, gamma })
                .collect(),
        }
    }
}

impl TryFrom<InstanceRepr> for ProblemInstance {
    type Error = OracleError;

    fn try_from(r: InstanceRepr) -> Result<Self, Self::Error> {
        let p = ProblemInstance {
            radars: r.radars.into_iter().map(|b| (b.id, b.budget)).collect(),
            targets: r.targets,
            utilities_main: r
                .utilities_main
                .into_iter()
                .map(|e| ((e.radar, e.target), e.value))
                .collect(),
            utilities_pair: r
                .utilities_pair
                .into_iter()
                .map(|e| ((e.main, e.optional, e.target), e.value))
                .collect(),
            costs: r.costs.into_iter().map(|e| ((e.radar, e.target), e.gamma)).collect(),
        };
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for OracleLimits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P1 {}x{}, P2 {}x{}",
            self.p1_max_radars, self.p1_max_targets, self.p2_max_radars, self.p2_max_targets
        )
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ProblemInstance {
        let r1 = RadarId(1);
        let r2 = RadarId(2);
        let t = TargetId(0);
        ProblemInstance {
            radars: [(r1, 1.0), (r2, 1.0)].into_iter().collect(),
            targets: vec![t],
            utilities_main: [((r1, t), 60.0), ((r2, t), 40.0)].into_iter().collect(),
            utilities_pair: [((r1, r2, t), 62.5), ((r2, r1, t), 41.0)].into_iter().collect(),
            costs: [((r1, t), 1.0), ((r2, t), 1.0)].into_iter().collect(),
        }
    }

    #[test]
    fn empty_assignment_is_feasible_and_worthless() {
        let e = evaluate(&tiny(), &Assignment::default());
        assert_eq!(e, Evaluation { utility: 0.0, feasible: true, violations: vec![] });
    }

    #[test]
    fn over_budget_names_the_radar() {
        let mut inst = tiny();
        inst.targets.push(TargetId(1));
        inst.utilities_main.insert((RadarId(1), TargetId(1)), 10.0);
        inst.costs.insert((RadarId(1), TargetId(1)), 1.0);
        let a = Assignment {
            main: [(TargetId(0), RadarId(1)), (TargetId(1), RadarId(1))].into_iter().collect(),
            ..Default::default()
        };
        let e = evaluate(&inst, &a);
        assert!(!e.feasible);
        assert_eq!(e.violations.len(), 1);
        let msg = e.violations[0].to_string();
        assert!(msg.contains("(L)") && msg.contains("R1"), "{msg}");
    }

    #[test]
    fn pair_scores_pair_utility() {
        let a = Assignment {
            main: [(TargetId(0), RadarId(1))].into_iter().collect(),
            optional: [(TargetId(0), RadarId(2))].into_iter().collect(),
            total_utility: 0.0,
        };
        let e = evaluate(&tiny(), &a);
        assert!(e.feasible);
        assert_eq!(e.utility, 62.5);
    }

    #[test]
    fn structural_violations() {
        let a = Assignment {
            main: BTreeMap::new(),
            optional: [(TargetId(0), RadarId(2))].into_iter().collect(),
            total_utility: 0.0,
        };
        assert!(matches!(
            evaluate(&tiny(), &a).violations[0],
            Violation::OptionalWithoutMain { .. }
        ));
        let both = Assignment {
            main: [(TargetId(0), RadarId(1))].into_iter().collect(),
            optional: [(TargetId(0), RadarId(1))].into_iter().collect(),
            total_utility: 0.0,
        };
        assert!(evaluate(&tiny(), &both)
            .violations
            .iter()
            .any(|v| matches!(v, Violation::BothRoles { .. })));
        let unknown = Assignment {
            main: [(TargetId(9), RadarId(1))].into_iter().collect(),
            ..Default::default()
        };
        assert!(!evaluate(&tiny(), &unknown).feasible);
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = tiny();
        let json = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn validation_rejects_inconsistent_self_pair() {
        let mut inst = tiny();
        inst.utilities_pair.insert((RadarId(1), RadarId(1), TargetId(0)), 99.0);
        assert!(inst.validate().is_err());
        let mut neg = tiny();
        neg.utilities_main.insert((RadarId(1), TargetId(0)), -1.0);
        assert!(neg.validate().is_err());
    }
}
