//! Depth-first branch-and-bound over per-target choices.
//!
//! Targets are fixed in id order; at each level the feasible choices are
//! tried best value first. The bound relaxes per-radar budgets into one
//! pooled capacity and solves the resulting multiple-choice knapsack LP
//! greedily over the upper hull of each target's (units, value) points.
//! The first level is split into independent subtrees, each seeded with the
//! greedy incumbent, so the result is identical whether subtrees run in
//! parallel or not.

use super::{check_capacity, decode, improves, Assignment, OracleError, OracleLimits, ProblemInstance};
use crate::exec::Execution;

const FIT_SLACK: f64 = 1e-9;

pub fn solve_p1(instance: &ProblemInstance) -> Result<Assignment, OracleError> {
    solve_p1_with(instance, OracleLimits::default(), Execution::default())
}

pub fn solve_p2(instance: &ProblemInstance) -> Result<Assignment, OracleError> {
    solve_p2_with(instance, OracleLimits::default(), Execution::default())
}

pub fn solve_p1_with(
    instance: &ProblemInstance,
    limits: OracleLimits,
    exec: Execution,
) -> Result<Assignment, OracleError> {
    instance.validate()?;
    check_capacity(instance, "P1", limits.p1_max_radars, limits.p1_max_targets)?;
    Ok(Search::new(instance, false).run(instance, exec))
}

pub fn solve_p2_with(
    instance: &ProblemInstance,
    limits: OracleLimits,
    exec: Execution,
) -> Result<Assignment, OracleError> {
    instance.validate()?;
    check_capacity(instance, "P2", limits.p2_max_radars, limits.p2_max_targets)?;
    Ok(Search::new(instance, true).run(instance, exec))
}

#[derive(Debug, Clone)]
struct Opt {
    code: u16,
    value: f64,
    pair: bool,
    charges: [(usize, f64); 2],
    n_charges: usize,
}

impl Opt {
    fn charges(&self) -> &[(usize, f64)] {
        &self.charges[..self.n_charges]
    }

    fn fits(&self, budgets: &[f64]) -> bool {
        self.charges().iter().all(|&(r, g)| g <= budgets[r] + FIT_SLACK)
    }
}

#[derive(Debug, Clone)]
struct Best {
    value: f64,
    codes: Vec<u16>,
}

impl Best {
    fn offer(&mut self, value: f64, codes: &[u16]) {
        if improves(value, codes, self.value, &self.codes) {
            self.value = value;
            self.codes.clear();
            self.codes.extend_from_slice(codes);
        }
    }
}

struct Search {
    budgets: Vec<f64>,
    // per target, in exploration order (value desc, code asc); never
    // contains the empty choice, which is always tried last
    options: Vec<Vec<Opt>>,
    min_gamma: f64,
}

impl Search {
    fn new(instance: &ProblemInstance, pairs: bool) -> Self {
        let radars: Vec<_> = instance.radars.keys().copied().collect();
        let n = radars.len();
        let budgets: Vec<f64> = instance.radars.values().copied().collect();
        let mut min_gamma = f64::INFINITY;
        let options = instance
            .targets
            .iter()
            .map(|&t| {
                let mut opts = Vec::new();
                for (i, &ri) in radars.iter().enumerate() {
                    let (Some(c), Some(g)) = (instance.main_utility(ri, t), instance.cost(ri, t)) else {
                        continue;
                    };
                    min_gamma = min_gamma.min(g);
                    opts.push(Opt {
                        code: (1 + i) as u16,
                        value: c,
                        pair: false,
                        charges: [(i, g), (0, 0.0)],
                        n_charges: 1,
                    });
                    if !pairs {
                        continue;
                    }
                    for (k, &rk) in radars.iter().enumerate() {
                        if k == i {
                            continue;
                        }
                        let (Some(c), Some(gk)) = (instance.pair_utility(ri, rk, t), instance.cost(rk, t)) else {
                            continue;
                        };
                        opts.push(Opt {
                            code: (1 + n + i * n + k) as u16,
                            value: c,
                            pair: true,
                            charges: [(i, g), (k, gk)],
                            n_charges: 2,
                        });
                    }
                }
                opts.retain(|o| o.fits(&budgets));
                opts.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.code.cmp(&b.code)));
                opts
            })
            .collect();
        Self {
            budgets,
            options,
            min_gamma,
        }
    }

    fn greedy(&self) -> Best {
        let mut budgets = self.budgets.clone();
        let mut codes = Vec::with_capacity(self.options.len());
        let mut value = 0.0;
        for opts in &self.options {
            match opts.iter().find(|o| o.fits(&budgets)) {
                Some(o) => {
                    for &(r, g) in o.charges() {
                        budgets[r] -= g;
                    }
                    value += o.value;
                    codes.push(o.code);
                }
                None => codes.push(0),
            }
        }
        Best { value, codes }
    }

    /// Upper bound on the value obtainable from targets `depth..`.
    fn bound(&self, depth: usize, budgets: &[f64]) -> f64 {
        let mut capacity = budgets.iter().map(|b| b.max(0.0)).sum::<f64>() / self.min_gamma;
        // (value per unit, units available)
        let mut items: Vec<(f64, f64)> = Vec::with_capacity(2 * (self.options.len() - depth));
        for opts in &self.options[depth..] {
            let mut single = 0.0f64;
            let mut pair = 0.0f64;
            for o in opts.iter().filter(|o| o.fits(budgets)) {
                if o.pair {
                    pair = pair.max(o.value);
                } else {
                    single = single.max(o.value);
                }
            }
            // upper hull of (0, 0), (1, single), (2, pair)
            if pair > 2.0 * single {
                items.push((pair / 2.0, 2.0));
            } else {
                if single > 0.0 {
                    items.push((single, 1.0));
                }
                if pair > single {
                    items.push((pair - single, 1.0));
                }
            }
        }
        items.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut total = 0.0;
        for (per_unit, units) in items {
            if capacity <= 0.0 {
                break;
            }
            let take = units.min(capacity);
            total += per_unit * take;
            capacity -= take;
        }
        total
    }

    fn dfs(&self, depth: usize, value: f64, budgets: &mut [f64], codes: &mut Vec<u16>, best: &mut Best) {
        if depth == self.options.len() {
            best.offer(value, codes);
            return;
        }
        if value + self.bound(depth, budgets) < best.value - super::VALUE_TOLERANCE {
            return;
        }
        for o in &self.options[depth] {
            if !o.fits(budgets) {
                continue;
            }
            let saved = [budgets[o.charges[0].0], budgets[o.charges[1].0]];
            for &(r, g) in o.charges() {
                budgets[r] -= g;
            }
            codes.push(o.code);
            self.dfs(depth + 1, value + o.value, budgets, codes, best);
            codes.pop();
            // restore exactly, in reverse so a repeated index ends correct
            budgets[o.charges[1].0] = saved[1];
            budgets[o.charges[0].0] = saved[0];
        }
        codes.push(0);
        self.dfs(depth + 1, value, budgets, codes, best);
        codes.pop();
    }

    fn run(&self, instance: &ProblemInstance, exec: Execution) -> Assignment {
        if self.options.is_empty() {
            return decode(instance, &[]);
        }
        let seed = self.greedy();
        // first-level branches: every feasible option, then the empty choice
        let first: Vec<Option<&Opt>> = self.options[0]
            .iter()
            .map(Some)
            .chain(std::iter::once(None))
            .collect();
        let results = exec.map(&first, |branch| {
            let mut best = seed.clone();
            let mut budgets = self.budgets.clone();
            let mut codes = Vec::with_capacity(self.options.len());
            let value = match branch {
                Some(o) => {
                    for &(r, g) in o.charges() {
                        budgets[r] -= g;
                    }
                    codes.push(o.code);
                    o.value
                }
                None => {
                    codes.push(0);
                    0.0
                }
            };
            self.dfs(1, value, &mut budgets, &mut codes, &mut best);
            best
        });
        let mut best = seed;
        for r in results {
            best.offer(r.value, &r.codes);
        }
        decode(instance, &best.codes)
    }
}
