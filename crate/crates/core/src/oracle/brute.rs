//! Exhaustive enumeration, the reference for the branch-and-bound solver.
//!
//! Every combination of per-target choices is visited; partial assignments
//! are abandoned only when they already exceed a budget. No bounding.

use super::{decode, improves, Assignment, OracleError, ProblemInstance};
use crate::exec::Execution;
use crate::ids::RadarId;

/// Enumeration is refused past this many leaves.
const MAX_LEAVES: f64 = 5e7;

pub fn enumerate_p1(instance: &ProblemInstance, exec: Execution) -> Result<Assignment, OracleError> {
    enumerate(instance, false, exec)
}

pub fn enumerate_p2(instance: &ProblemInstance, exec: Execution) -> Result<Assignment, OracleError> {
    enumerate(instance, true, exec)
}

struct Enumerator<'a> {
    instance: &'a ProblemInstance,
    radars: Vec<RadarId>,
    pairs: bool,
}

impl Enumerator<'_> {
    /// Value and budget charges of choice `code` for target index `t`, or
    /// `None` if the choice is undefined.
    fn choice(&self, t: usize, code: usize) -> Option<(f64, Vec<(usize, f64)>)> {
        let n = self.radars.len();
        let target = self.instance.targets[t];
        if code == 0 {
            return Some((0.0, Vec::new()));
        }
        if code <= n {
            let i = code - 1;
            let r = self.radars[i];
            let c = self.instance.main_utility(r, target)?;
            return Some((c, vec![(i, self.instance.cost(r, target)?)]));
        }
        let p = code - 1 - n;
        let (i, k) = (p / n, p % n);
        if i == k {
            return None;
        }
        let (ri, rk) = (self.radars[i], self.radars[k]);
        let c = self.instance.utilities_pair.get(&(ri, rk, target)).copied()?;
        Some((c, vec![(i, self.instance.cost(ri, target)?), (k, self.instance.cost(rk, target)?)]))
    }

    fn n_codes(&self) -> usize {
        let n = self.radars.len();
        if self.pairs {
            1 + n + n * n
        } else {
            1 + n
        }
    }

    fn walk(&self, t: usize, value: f64, loads: &mut Vec<f64>, codes: &mut Vec<u16>, best: &mut (f64, Vec<u16>)) {
        if t == self.instance.targets.len() {
            if improves(value, codes, best.0, &best.1) {
                *best = (value, codes.clone());
            }
            return;
        }
        for code in 0..self.n_codes() {
            self.try_code(t, code, value, loads, codes, best);
        }
    }

    fn try_code(
        &self,
        t: usize,
        code: usize,
        value: f64,
        loads: &mut Vec<f64>,
        codes: &mut Vec<u16>,
        best: &mut (f64, Vec<u16>),
    ) {
        let Some((c, charges)) = self.choice(t, code) else {
            return;
        };
        let saved = loads.clone();
        for &(r, g) in &charges {
            loads[r] += g;
        }
        let within = loads
            .iter()
            .zip(self.instance.radars.values())
            .all(|(l, b)| *l <= b + 1e-9);
        if within {
            codes.push(code as u16);
            self.walk(t + 1, value + c, loads, codes, best);
            codes.pop();
        }
        *loads = saved;
    }
}

fn enumerate(instance: &ProblemInstance, pairs: bool, exec: Execution) -> Result<Assignment, OracleError> {
    instance.validate()?;
    let e = Enumerator {
        instance,
        radars: instance.radars.keys().copied().collect(),
        pairs,
    };
    let leaves = (e.n_codes() as f64).powi(instance.targets.len() as i32);
    if leaves > MAX_LEAVES {
        return Err(OracleError::Capacity {
            problem: if pairs { "P2 enumeration" } else { "P1 enumeration" },
            radars: instance.radars.len(),
            targets: instance.targets.len(),
            max_radars: instance.radars.len(),
            max_targets: (MAX_LEAVES.ln() / (e.n_codes() as f64).ln()) as usize,
        });
    }
    if instance.targets.is_empty() {
        return Ok(decode(instance, &[]));
    }
    let start = (f64::NEG_INFINITY, Vec::new());
    let branches = exec.map_range(0..e.n_codes(), |code| {
        let mut best = start.clone();
        let mut loads = vec![0.0; e.radars.len()];
        let mut codes = Vec::with_capacity(instance.targets.len());
        e.try_code(0, code, 0.0, &mut loads, &mut codes, &mut best);
        best
    });
    let mut best = start;
    for (v, codes) in branches {
        if !codes.is_empty() && improves(v, &codes, best.0, &best.1) {
            best = (v, codes);
        }
    }
    Ok(decode(instance, &best.1))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::random_instance;
    use super::*;

    #[test]
    fn three_radars_five_targets_budget_two() {
        let inst = random_instance(7, 3, 5, 2.0, 5.0);
        let a = enumerate_p1(&inst, Execution::Sequential).unwrap();
        let b = enumerate_p1(&inst, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(super::super::evaluate(&inst, &a).feasible);
        assert!(a.main.len() <= 5);
    }

    #[test]
    fn refuses_huge_enumerations() {
        let inst = random_instance(7, 4, 12, 3.0, 5.0);
        assert!(enumerate_p2(&inst, Execution::Sequential).is_err());
    }
}
