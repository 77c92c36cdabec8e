use std::collections::BTreeMap;

use nalgebra::Vector2;
use serde::Serialize;

use super::scenario::{Motion, Scenario};
use super::SimError;
use crate::allocation::{dominance_holds, utility_main};
use crate::cbba::{AgentConfig, CbbaMessage, RadarAgent, Round, TargetTruth};
use crate::exec::Execution;
use crate::geometry;
use crate::ids::{RadarId, TargetId};
use crate::oracle::{evaluate, fraction, Assignment, ProblemInstance};

/// Ground-truth kinematics of one target.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingTarget {
    pub id: TargetId,
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    waypoints: Vec<Vector2<f64>>,
    next: usize,
}

impl MovingTarget {
    fn advance(&mut self, dt: f64) {
        let speed = self.velocity.norm();
        let mut budget = speed * dt;
        while let Some(wp) = self.waypoints.get(self.next) {
            let to = wp - self.position;
            let d = to.norm();
            if d > budget {
                self.velocity = to / d * speed;
                self.position += to / d * budget;
                return;
            }
            budget -= d;
            self.position = *wp;
            if d > 0.0 {
                self.velocity = to / d * speed;
            }
            self.next += 1;
        }
        if speed > 0.0 {
            self.position += self.velocity / speed * budget;
        }
    }

    fn truth(&self) -> TargetTruth {
        TargetTruth {
            id: self.id,
            position: self.position,
            velocity: self.velocity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepMetrics {
    pub t: u64,
    pub total_utility: f64,
    pub coverage_main: f64,
    pub coverage_optional: f64,
    pub mean_load: f64,
    pub per_radar_load: BTreeMap<RadarId, f64>,
    pub conflicts: usize,
}

/// Who claims what across all radars' bundles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Claims {
    pub main: BTreeMap<TargetId, Vec<RadarId>>,
    pub optional: BTreeMap<TargetId, Vec<RadarId>>,
}

impl Claims {
    /// Conflict-free part of the claims: targets with exactly one main
    /// claimant, and an optional radar where that is unique too.
    pub fn assignment(&self) -> Assignment {
        let main: BTreeMap<TargetId, RadarId> = self
            .main
            .iter()
            .filter(|(_, rs)| rs.len() == 1)
            .map(|(t, rs)| (*t, rs[0]))
            .collect();
        let optional = self
            .optional
            .iter()
            .filter(|(t, rs)| rs.len() == 1 && main.get(t).is_some_and(|m| *m != rs[0]))
            .map(|(t, rs)| (*t, rs[0]))
            .collect();
        Assignment {
            main,
            optional,
            total_utility: 0.0,
        }
    }

    pub fn conflicts(&self) -> usize {
        self.main.values().filter(|rs| rs.len() > 1).count()
    }
}

/// A running scenario: world truth, agents and in-flight messages.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    agents: Vec<RadarAgent>,
    neighbours: Vec<Vec<usize>>,
    targets: Vec<MovingTarget>,
    inboxes: Vec<Vec<CbbaMessage>>,
    t: u64,
    exec: Execution,
    dominance_warned: bool,
}

impl Simulation {
    pub fn new(scenario: Scenario, exec: Execution) -> Result<Self, SimError> {
        scenario.validate()?;
        let config = AgentConfig {
            utility: scenario.utility,
            gamma: scenario.gamma,
            scale: scenario.scale,
            t_stale: scenario.effective_t_stale(),
            v_radial_min: scenario.v_radial_min,
            standby_noise_factor: scenario.standby_noise_factor,
            frozen: scenario.frozen,
            dt: scenario.dt,
        };
        let mut radars = scenario.radars.clone();
        radars.sort_by_key(|r| r.id);
        let index: BTreeMap<RadarId, usize> = radars.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        let adjacency = scenario.adjacency();
        let neighbours = radars
            .iter()
            .map(|r| adjacency[&r.id].iter().map(|k| index[k]).collect())
            .collect();
        let agents = radars
            .into_iter()
            .map(|r| RadarAgent::new(r, config, scenario.seed))
            .collect::<Result<Vec<_>, _>>()?;
        let mut targets: Vec<MovingTarget> = scenario
            .targets
            .iter()
            .map(|t| MovingTarget {
                id: t.id,
                position: Vector2::new(t.position[0], t.position[1]),
                velocity: Vector2::new(t.velocity[0], t.velocity[1]),
                waypoints: match &t.motion {
                    Motion::ConstantVelocity => Vec::new(),
                    Motion::Waypoints(w) => w.iter().map(|p| Vector2::new(p[0], p[1])).collect(),
                },
                next: 0,
            })
            .collect();
        targets.sort_by_key(|t| t.id);
        let n = agents.len();
        Ok(Self {
            scenario,
            agents,
            neighbours,
            targets,
            inboxes: vec![Vec::new(); n],
            t: 0,
            exec,
            dominance_warned: false,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Step the next call to [`Simulation::step`] will execute.
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn agents(&self) -> &[RadarAgent] {
        &self.agents
    }

    pub fn agent(&self, id: RadarId) -> Option<&RadarAgent> {
        self.agents.iter().find(|a| a.id() == id)
    }

    pub fn targets(&self) -> &[MovingTarget] {
        &self.targets
    }

    pub fn truths(&self) -> Vec<TargetTruth> {
        self.targets.iter().map(MovingTarget::truth).collect()
    }

    /// Moves the targets (except before the first step), runs every radar,
    /// then delivers the messages along the communication edges. Returns the
    /// metrics after delivery and the messages sent, ordered by sender.
    pub fn step(&mut self) -> Result<(StepMetrics, Vec<CbbaMessage>), SimError> {
        let now = self.t;
        if now > 0 && !self.scenario.frozen {
            let dt = self.scenario.dt;
            for target in &mut self.targets {
                target.advance(dt);
            }
        }
        let truths = self.truths();
        let inboxes = std::mem::take(&mut self.inboxes);
        let outputs = self
            .exec
            .map_mut(&mut self.agents, |i, agent| agent.step(now, &inboxes[i], &truths));
        let mut sent = Vec::with_capacity(2 * outputs.len());
        for out in outputs {
            let out = out?;
            sent.push(out.main);
            sent.push(out.optional);
        }
        let mut next = vec![Vec::new(); self.agents.len()];
        for (i, neighbours) in self.neighbours.iter().enumerate() {
            for &k in neighbours {
                next[i].extend(sent[2 * k..2 * k + 2].iter().cloned());
            }
        }
        self.inboxes = next;
        self.t += 1;
        let metrics = self.metrics(now);
        Ok((metrics, sent))
    }

    pub fn claims(&self) -> Claims {
        let mut claims = Claims::default();
        for a in &self.agents {
            for t in a.belief(Round::Main).bundle() {
                claims.main.entry(*t).or_default().push(a.id());
            }
            for t in a.belief(Round::Optional).bundle() {
                claims.optional.entry(*t).or_default().push(a.id());
            }
        }
        claims
    }

    /// Centralized problem over the radars' current bid ellipses.
    pub fn problem_instance(&self) -> ProblemInstance {
        let params = &self.scenario.utility;
        let mut instance = ProblemInstance {
            radars: self.agents.iter().map(|a| (a.id(), a.params().budget)).collect(),
            targets: self.targets.iter().map(|t| t.id).collect(),
            ..ProblemInstance::default()
        };
        for a in &self.agents {
            for (t, e) in a.ellipses() {
                instance.utilities_main.insert((a.id(), *t), utility_main(e, params));
                instance.costs.insert((a.id(), *t), self.scenario.gamma);
            }
        }
        for main in &self.agents {
            for opt in &self.agents {
                if main.id() == opt.id() {
                    continue;
                }
                for (t, e_main) in main.ellipses() {
                    let Some(e_opt) = opt.ellipses().get(t) else { continue };
                    let bonus = params.bonus_from_overlap(geometry::intersection_area(e_main, e_opt));
                    let c = instance.utilities_main[&(main.id(), *t)];
                    instance.utilities_pair.insert((main.id(), opt.id(), *t), c + bonus);
                }
            }
        }
        instance
    }

    fn check_dominance(&mut self, instance: &ProblemInstance) {
        if self.dominance_warned {
            return;
        }
        for (&(i, k, j), &pair) in &instance.utilities_pair {
            let main = instance.utilities_main[&(i, j)];
            if !dominance_holds(main, pair - main) {
                log::warn!(
                    "main utility {main:.4} of ({i}, {j}) is below {}x the bonus {:.4} from {k}",
                    crate::allocation::DOMINANCE_FACTOR,
                    pair - main
                );
                self.dominance_warned = true;
                return;
            }
        }
    }

    fn metrics(&mut self, t: u64) -> StepMetrics {
        let n_targets = self.targets.len();
        let claims = self.claims();
        let instance = self.problem_instance();
        self.check_dominance(&instance);
        let assignment = claims.assignment();
        let per_radar_load: BTreeMap<RadarId, f64> = self.agents.iter().map(|a| (a.id(), a.load())).collect();
        let unique = |m: &BTreeMap<TargetId, Vec<RadarId>>| m.values().filter(|rs| rs.len() == 1).count();
        StepMetrics {
            t,
            total_utility: evaluate(&instance, &assignment).utility,
            coverage_main: fraction(unique(&claims.main), n_targets),
            coverage_optional: fraction(unique(&claims.optional), n_targets),
            mean_load: per_radar_load.values().sum::<f64>() / per_radar_load.len() as f64,
            per_radar_load,
            conflicts: claims.conflicts(),
        }
    }

    /// Whether every radar holds the same winners and bids in both rounds.
    pub fn agreed(&self) -> bool {
        [Round::Main, Round::Optional].into_iter().all(|round| {
            let first = self.agents[0].belief(round).agreement_key();
            self.agents[1..]
                .iter()
                .all(|a| a.belief(round).agreement_key() == first)
        })
    }

    /// Runs the remaining steps of the scenario.
    pub fn run(&mut self) -> Result<RunResult, SimError> {
        let mut result = RunResult::default();
        while self.t < self.scenario.steps {
            let (m, sent) = self.step()?;
            result.metrics.push(m);
            result.trace.extend(sent);
        }
        result.final_assignment = self.final_assignment();
        Ok(result)
    }

    /// Conflict-free claimed assignment, valued on the current instance.
    pub fn final_assignment(&self) -> Assignment {
        let mut a = self.claims().assignment();
        a.total_utility = evaluate(&self.problem_instance(), &a).utility;
        a
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunResult {
    pub metrics: Vec<StepMetrics>,
    pub final_assignment: Assignment,
    pub trace: Vec<CbbaMessage>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolarNoise;
    use crate::sim::scenario::{generate_scenario, GeneratorSpec, TargetSpec, Topology};
    use crate::tracking::RadarParams;

    fn radar(id: u32, x: f64) -> RadarParams {
        RadarParams {
            id: RadarId(id),
            position: [x, 0.0],
            range_max: 12_000.0,
            noise: PolarNoise::new(5.0, 1e-3).unwrap(),
            snr: 13.0,
            budget: 4.0,
            process_noise_intensity: 0.5,
        }
    }

    fn target(id: u32, x: f64, y: f64, vx: f64) -> TargetSpec {
        TargetSpec {
            id: TargetId(id),
            position: [x, y],
            velocity: [vx, 0.0],
            motion: Motion::ConstantVelocity,
        }
    }

    fn scenario(radars: Vec<RadarParams>, targets: Vec<TargetSpec>, steps: u64) -> Scenario {
        let ids: Vec<RadarId> = radars.iter().map(|r| r.id).collect();
        Scenario {
            seed: 11,
            steps,
            dt: 1.0,
            comm_edges: ids.windows(2).map(|w| (w[0], w[1])).collect(),
            radars,
            targets,
            utility: Default::default(),
            gamma: 1.0,
            t_stale: None,
            scale: 2.0,
            standby_noise_factor: 2.0,
            v_radial_min: 0.0,
            frozen: false,
        }
    }

    #[test]
    fn waypoints_are_followed_at_constant_speed() {
        let mut t = MovingTarget {
            id: TargetId(0),
            position: Vector2::zeros(),
            velocity: Vector2::new(3.0, 0.0),
            waypoints: vec![Vector2::new(2.0, 0.0), Vector2::new(2.0, 10.0)],
            next: 0,
        };
        t.advance(1.0);
        assert!((t.position - Vector2::new(2.0, 1.0)).norm() < 1e-12);
        assert!((t.velocity - Vector2::new(0.0, 3.0)).norm() < 1e-12);
        for _ in 0..4 {
            t.advance(1.0);
        }
        assert!((t.position - Vector2::new(2.0, 13.0)).norm() < 1e-12);
    }

    #[test]
    fn no_targets_means_zero_metrics() {
        let mut sim = Simulation::new(scenario(vec![radar(0, 0.0), radar(1, 5000.0)], vec![], 5), Execution::Sequential)
            .unwrap();
        let run = sim.run().unwrap();
        assert_eq!(run.metrics.len(), 5);
        for m in &run.metrics {
            assert_eq!((m.total_utility, m.coverage_main, m.coverage_optional, m.mean_load), (0.0, 0.0, 0.0, 0.0));
            assert_eq!(m.conflicts, 0);
        }
    }

    #[test]
    fn static_line_reaches_a_conflict_free_agreement() {
        // fig-2 style: three radars on a line, one target near each end
        let mut s = scenario(
            vec![radar(0, 0.0), radar(1, 4000.0), radar(2, 8000.0)],
            vec![target(0, 500.0, 200.0, 0.0), target(1, 7500.0, 200.0, 0.0)],
            12,
        );
        s.frozen = true;
        let mut sim = Simulation::new(s, Execution::Sequential).unwrap();
        let run = sim.run().unwrap();
        assert!(sim.agreed());
        let last = run.metrics.last().unwrap();
        assert_eq!(last.conflicts, 0);
        assert_eq!(last.coverage_main, 1.0);
        let a = &run.final_assignment;
        assert_eq!(a.main[&TargetId(0)], RadarId(0));
        assert_eq!(a.main[&TargetId(1)], RadarId(2));
        // converged metrics stay put
        let tail = &run.metrics[run.metrics.len() - 3..];
        assert!(tail.windows(2).all(|w| w[0].total_utility == w[1].total_utility));
    }

    #[test]
    fn budget_and_disjointness_hold_every_step() {
        let s = generate_scenario(&GeneratorSpec::new(4, 12, 8, Topology::Ring)).unwrap();
        let mut sim = Simulation::new(s, Execution::Parallel).unwrap();
        for _ in 0..30 {
            let (m, _) = sim.step().unwrap();
            assert!(m.mean_load <= 1.0 + 1e-9);
            assert!(m.coverage_main <= 1.0 && m.coverage_optional <= 1.0);
            for a in sim.agents() {
                assert!(a.used_budget() <= a.params().budget + 1e-9);
                let main = a.belief(Round::Main).bundle();
                assert!(a.belief(Round::Optional).bundle().iter().all(|t| !main.contains(t)));
            }
        }
    }

    #[test]
    fn parallel_and_sequential_runs_match() {
        let s = generate_scenario(&GeneratorSpec::new(3, 6, 21, Topology::Complete)).unwrap();
        let mut a = Simulation::new(s.clone(), Execution::Sequential).unwrap();
        let mut b = Simulation::new(s, Execution::Parallel).unwrap();
        let (ra, rb) = (a.run().unwrap(), b.run().unwrap());
        assert_eq!(ra, rb);
    }

    #[test]
    fn symmetric_scenario_balances_load() {
        let mut s = scenario(
            vec![radar(0, 0.0), radar(1, 6000.0)],
            vec![
                target(0, 1000.0, 100.0, 0.0),
                target(1, 1000.0, -100.0, 0.0),
                target(2, 5000.0, 100.0, 0.0),
                target(3, 5000.0, -100.0, 0.0),
            ],
            10,
        );
        s.frozen = true;
        let mut sim = Simulation::new(s, Execution::Sequential).unwrap();
        let run = sim.run().unwrap();
        let loads: Vec<f64> = run.metrics.last().unwrap().per_radar_load.values().copied().collect();
        assert_eq!(loads[0], loads[1]);
    }
}
