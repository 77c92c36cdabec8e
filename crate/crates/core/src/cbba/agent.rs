use std::collections::BTreeMap;

use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::belief::{outbids, BeliefState, CbbaMessage, Round, BID_TOLERANCE};
use super::CbbaError;
use crate::allocation::{cbba_score, utility_main, UtilityParams};
use crate::geometry::{self, Ellipse, DEFAULT_SCALE};
use crate::ids::{RadarId, TargetId};
use crate::tracking::{self, Measurement, RadarParams, TrackState};

/// Budget comparisons allow this much rounding.
const BUDGET_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub utility: UtilityParams,
    /// Cost of one task, in budget units.
    pub gamma: f64,
    /// Confidence scale of the bid ellipses.
    pub scale: f64,
    pub t_stale: u64,
    /// Minimum line-of-sight speed for a target to be handled; 0 disables.
    pub v_radial_min: f64,
    /// Noise multiplier for detections of targets outside both bundles.
    pub standby_noise_factor: f64,
    /// Freeze tracks after their first detection (no predict, no update).
    pub frozen: bool,
    pub dt: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            utility: UtilityParams::default(),
            gamma: 1.0,
            scale: DEFAULT_SCALE,
            t_stale: 10,
            v_radial_min: 0.0,
            standby_noise_factor: 2.0,
            frozen: false,
            dt: 1.0,
        }
    }
}

/// Ground truth of one target at the current step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetTruth {
    pub id: TargetId,
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
}

/// Messages a radar broadcasts to its neighbours at the end of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub main: CbbaMessage,
    pub optional: CbbaMessage,
}

/// One radar: its trackers, its two auction beliefs and its own RNG stream.
#[derive(Debug, Clone)]
pub struct RadarAgent {
    params: RadarParams,
    config: AgentConfig,
    tracks: BTreeMap<TargetId, TrackState>,
    truths: BTreeMap<TargetId, Vector2<f64>>,
    ellipses: BTreeMap<TargetId, Ellipse>,
    main: BeliefState,
    optional: BeliefState,
    last_seen: BTreeMap<TargetId, u64>,
    rng: ChaCha8Rng,
}

impl RadarAgent {
    /// The RNG is seeded with `seed` on the stream named by the radar id, so
    /// radars draw independent noise.
    pub fn new(params: RadarParams, config: AgentConfig, seed: u64) -> Result<Self, CbbaError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(params.id.0));
        Ok(Self {
            params,
            config,
            tracks: BTreeMap::new(),
            truths: BTreeMap::new(),
            ellipses: BTreeMap::new(),
            main: BeliefState::new(Round::Main),
            optional: BeliefState::new(Round::Optional),
            last_seen: BTreeMap::new(),
            rng,
        })
    }

    pub fn id(&self) -> RadarId {
        self.params.id
    }

    pub fn params(&self) -> &RadarParams {
        &self.params
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn belief(&self, round: Round) -> &BeliefState {
        match round {
            Round::Main => &self.main,
            Round::Optional => &self.optional,
        }
    }

    pub fn tracks(&self) -> &BTreeMap<TargetId, TrackState> {
        &self.tracks
    }

    /// Current bid ellipses of the targets this radar can handle.
    pub fn ellipses(&self) -> &BTreeMap<TargetId, Ellipse> {
        &self.ellipses
    }

    pub fn last_seen(&self) -> &BTreeMap<TargetId, u64> {
        &self.last_seen
    }

    /// Budget used by both bundles.
    pub fn used_budget(&self) -> f64 {
        (self.main.bundle().len() + self.optional.bundle().len()) as f64 * self.config.gamma
    }

    pub fn load(&self) -> f64 {
        self.used_budget() / self.params.budget
    }

    /// Whether this radar knows anything about `target`.
    pub fn knows(&self, target: TargetId) -> bool {
        self.main.knows(target) || self.optional.knows(target)
    }

    /// Installs a bid ellipse directly, as if the target had been detected
    /// at `now`. Used for scripted perception.
    pub fn set_ellipse(&mut self, target: TargetId, ellipse: Ellipse, now: u64) {
        self.ellipses.insert(target, ellipse);
        self.mark_seen(target, now);
    }

    pub fn clear_ellipse(&mut self, target: TargetId) {
        self.ellipses.remove(&target);
    }

    fn mark_seen(&mut self, target: TargetId, now: u64) {
        self.last_seen.insert(target, now);
        self.main.touch(target);
        self.optional.touch(target);
    }

    /// All five phases of one step.
    pub fn step(&mut self, now: u64, inbox: &[CbbaMessage], truths: &[TargetTruth]) -> Result<StepOutput, CbbaError> {
        self.observe(now, truths)?;
        let out = self.negotiate(now, inbox)?;
        self.track(now)?;
        Ok(out)
    }

    /// Detects targets in range, starts or predicts their tracks and derives
    /// the bid ellipses. Tracks of targets out of range are dropped.
    pub fn observe(&mut self, now: u64, truths: &[TargetTruth]) -> Result<(), CbbaError> {
        self.truths = truths
            .iter()
            .filter(|t| self.params.in_range(&t.position))
            .map(|t| (t.id, t.position))
            .collect();
        self.tracks.retain(|t, _| self.truths.contains_key(t));
        self.ellipses.clear();
        let here = self.params.position_vec();
        let ids: Vec<TargetId> = self.truths.keys().copied().collect();
        for id in ids {
            let track = match self.tracks.get(&id) {
                Some(track) if self.config.frozen => track.clone(),
                Some(track) => tracking::predict(track, self.config.dt, self.params.process_noise_intensity)?,
                None => {
                    let truth = self.truths[&id];
                    match tracking::measure_with_factor(&self.params, &truth, self.config.standby_noise_factor, &mut self.rng)? {
                        Measurement::Detected { z, covariance } => TrackState::initialize(&z, &covariance, now),
                        Measurement::NoDetection => continue,
                    }
                }
            };
            if tracking::is_eligible(&here, &track, self.config.v_radial_min) {
                self.ellipses
                    .insert(id, tracking::prediction_ellipse(&track, self.config.scale)?);
            }
            self.tracks.insert(id, track);
            self.mark_seen(id, now);
        }
        Ok(())
    }

    /// Selection and consensus for both rounds: forget stale targets,
    /// refresh and extend the main bundle, then the optional bundle, then
    /// merge the inbox round by round and emit the outgoing messages.
    pub fn negotiate(&mut self, now: u64, inbox: &[CbbaMessage]) -> Result<StepOutput, CbbaError> {
        let me = self.id();
        self.forget(now);
        self.refresh_main();
        self.select_main();
        self.refresh_optional();
        self.select_optional();

        let mut inbox: Vec<&CbbaMessage> = inbox.iter().collect();
        inbox.sort_by_key(|m| (m.sender, m.round));
        for msg in inbox.iter().filter(|m| m.round == Round::Main) {
            self.main.consensus_update(msg, me, now)?;
        }
        self.bump_last_seen(now);
        let main = self.main.to_message(me, now);
        for msg in inbox.iter().filter(|m| m.round == Round::Optional) {
            self.optional.consensus_update(msg, me, now)?;
        }
        let optional = self.optional.to_message(me, now);
        debug_assert!(self.used_budget() <= self.params.budget + BUDGET_EPS);
        Ok(StepOutput { main, optional })
    }

    /// Kalman update of every perceived target with a fresh detection:
    /// tracking quality for bundled targets, standby quality otherwise.
    pub fn track(&mut self, now: u64) -> Result<(), CbbaError> {
        if self.config.frozen {
            return Ok(());
        }
        let ids: Vec<TargetId> = self.tracks.keys().copied().collect();
        for id in ids {
            let track = &self.tracks[&id];
            if track.last_update == now {
                continue;
            }
            let bundled = self.main.bundle().contains(&id) || self.optional.bundle().contains(&id);
            let factor = if bundled { 1.0 } else { self.config.standby_noise_factor };
            let truth = self.truths[&id];
            if let Measurement::Detected { z, covariance } =
                tracking::measure_with_factor(&self.params, &truth, factor, &mut self.rng)?
            {
                let updated = tracking::update(track, &z, &covariance, now)?;
                self.tracks.insert(id, updated);
            }
        }
        Ok(())
    }

    fn forget(&mut self, now: u64) {
        let me = self.id();
        let t_stale = self.config.t_stale;
        self.main.forget_stale(me, &self.last_seen, now, t_stale);
        self.optional.forget_stale(me, &self.last_seen, now, t_stale);
        let (main, optional) = (&self.main, &self.optional);
        self.last_seen
            .retain(|t, seen| main.knows(*t) || optional.knows(*t) || now.saturating_sub(*seen) <= t_stale);
    }

    /// Targets claimed by someone are still being seen somewhere; the claim
    /// is as recent as the last contact with its winner.
    fn bump_last_seen(&mut self, now: u64) {
        let me = self.id();
        for belief in [&self.main, &self.optional] {
            for (t, claim) in belief.claims() {
                let seen = match claim.winner {
                    Some(k) if k == me => Some(now),
                    Some(k) => belief.s.get(&k).copied(),
                    None => None,
                };
                let entry = self.last_seen.entry(*t).or_insert(now);
                if let Some(seen) = seen {
                    *entry = (*entry).max(seen);
                }
            }
        }
    }

    /// Re-prices the main bundle at its current positions; stops at the
    /// first target no longer handled and releases it with the rest.
    fn refresh_main(&mut self) {
        let me = self.id();
        let bundle = self.main.bundle().to_vec();
        for (pos, t) in bundle.iter().enumerate() {
            match self.ellipses.get(t) {
                Some(e) => {
                    let bid = cbba_score(utility_main(e, &self.config.utility), pos);
                    self.main.refresh_own(me, *t, bid, Some(*e));
                }
                None => {
                    self.main.release_from(me, pos);
                    break;
                }
            }
        }
    }

    fn refresh_optional(&mut self) {
        let me = self.id();
        let bundle = self.optional.bundle().to_vec();
        for (pos, t) in bundle.iter().enumerate() {
            match self.optional_bonus(*t) {
                Some(bonus) => self.optional.refresh_own(me, *t, cbba_score(bonus, pos), None),
                None => {
                    self.optional.release_from(me, pos);
                    break;
                }
            }
        }
    }

    /// Greedy main-round bundle construction. The budget available here
    /// includes what the optional bundle holds; optional tasks are given up
    /// lowest bid first when a main task needs their share.
    pub fn select_main(&mut self) {
        let me = self.id();
        let gamma = self.config.gamma;
        let budget = self.params.budget;
        loop {
            let n = self.main.bundle().len();
            if (n + 1) as f64 * gamma > budget + BUDGET_EPS {
                break;
            }
            let mut best: Option<(TargetId, f64, Ellipse)> = None;
            for (t, e) in &self.ellipses {
                if self.main.bundle().contains(t) {
                    continue;
                }
                let score = cbba_score(utility_main(e, &self.config.utility), n);
                if !outbids(score, Some(me), self.main.y(*t), self.main.z(*t)) {
                    continue;
                }
                if best.is_none_or(|(_, s, _)| score > s + BID_TOLERANCE) {
                    best = Some((*t, score, *e));
                }
            }
            let Some((t, score, e)) = best else { break };
            self.optional.remove_own(me, t);
            while (n + 1 + self.optional.bundle().len()) as f64 * gamma > budget + BUDGET_EPS {
                let victim = self
                    .optional
                    .bundle()
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        let ua = self.optional.path_utility(*a).unwrap_or(0.0);
                        let ub = self.optional.path_utility(*b).unwrap_or(0.0);
                        ua.total_cmp(&ub).then(a.cmp(b))
                    });
                match victim {
                    Some(v) => {
                        self.optional.remove_own(me, v);
                    }
                    None => break,
                }
            }
            self.main.push_own(me, t, score, Some(e));
        }
    }

    /// Bonus this radar would add as optional radar on `target`, if it is
    /// eligible: someone else is main, their ellipse is known and overlaps
    /// ours.
    fn optional_bonus(&self, target: TargetId) -> Option<f64> {
        let mine = self.ellipses.get(&target)?;
        let winner = self.main.z(target)?;
        if winner == self.id() {
            return None;
        }
        let theirs = self.main.e(target)?;
        let bonus = self
            .config
            .utility
            .bonus_from_overlap(geometry::intersection_area(theirs, mine));
        (bonus > 0.0).then_some(bonus)
    }

    /// Greedy optional-round bundle construction on the budget left after
    /// the main round. Bids carry the pair bonus only.
    pub fn select_optional(&mut self) {
        let me = self.id();
        let gamma = self.config.gamma;
        loop {
            let n = self.optional.bundle().len();
            if self.used_budget() + gamma > self.params.budget + BUDGET_EPS {
                break;
            }
            let mut best: Option<(TargetId, f64)> = None;
            for t in self.ellipses.keys() {
                if self.optional.bundle().contains(t) {
                    continue;
                }
                let Some(bonus) = self.optional_bonus(*t) else { continue };
                let score = cbba_score(bonus, n);
                if !outbids(score, Some(me), self.optional.y(*t), self.optional.z(*t)) {
                    continue;
                }
                if best.is_none_or(|(_, s)| score > s + BID_TOLERANCE) {
                    best = Some((*t, score));
                }
            }
            let Some((t, score)) = best else { break };
            self.optional.push_own(me, t, score, None);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolarNoise;
    use std::f64::consts::PI;

    fn radar(id: u32, x: f64, budget: f64) -> RadarParams {
        RadarParams {
            id: RadarId(id),
            position: [x, 0.0],
            range_max: 12_000.0,
            noise: PolarNoise::new(5.0, 1e-3).unwrap(),
            snr: 13.0,
            budget,
            process_noise_intensity: 0.5,
        }
    }

    fn agent(id: u32, budget: f64) -> RadarAgent {
        RadarAgent::new(radar(id, 0.0, budget), AgentConfig::default(), 1).unwrap()
    }

    /// Circle whose main utility is `u` under the default parameters.
    fn with_utility(x: f64, u: f64) -> Ellipse {
        let area = 10.0 * (100.0 / u - 1.0);
        Ellipse::circle(Vector2::new(x, 0.0), (area / PI).sqrt()).unwrap()
    }

    fn circle_with_area(x: f64, area: f64) -> Ellipse {
        Ellipse::circle(Vector2::new(x, 0.0), (area / PI).sqrt()).unwrap()
    }

    /// Runs negotiation on a complete graph until messages stop changing.
    fn converge(agents: &mut [RadarAgent], steps: u64) {
        let mut inbox: Vec<CbbaMessage> = Vec::new();
        for now in 0..steps {
            let mut next = Vec::new();
            for a in agents.iter_mut() {
                let ellipses: Vec<(TargetId, Ellipse)> = a.ellipses().iter().map(|(t, e)| (*t, *e)).collect();
                for (t, e) in ellipses {
                    a.set_ellipse(t, e, now);
                }
                let mine: Vec<CbbaMessage> = inbox.iter().filter(|m| m.sender != a.id()).cloned().collect();
                let out = a.negotiate(now, &mine).unwrap();
                next.push(out.main);
                next.push(out.optional);
            }
            inbox = next;
        }
    }

    #[test]
    fn lone_radar_takes_every_target_within_budget() {
        let mut a = agent(0, 4.0);
        a.set_ellipse(TargetId(0), with_utility(0.0, 60.0), 0);
        a.set_ellipse(TargetId(1), with_utility(50.0, 40.0), 0);
        a.select_main();
        assert_eq!(a.belief(Round::Main).bundle(), &[TargetId(0), TargetId(1)]);
        assert_eq!(a.belief(Round::Main).z(TargetId(1)), Some(RadarId(0)));
        assert!((a.belief(Round::Main).y(TargetId(1)) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn budget_of_one_keeps_the_better_target() {
        let mut a = agent(0, 1.0);
        a.set_ellipse(TargetId(0), with_utility(0.0, 40.0), 0);
        a.set_ellipse(TargetId(1), with_utility(50.0, 60.0), 0);
        a.select_main();
        assert_eq!(a.belief(Round::Main).bundle(), &[TargetId(1)]);
        assert_eq!(a.belief(Round::Main).z(TargetId(0)), None);
    }

    #[test]
    fn standing_higher_bid_blocks_selection() {
        let e = Ellipse::new(Vector2::zeros(), nalgebra::Matrix2::new(4.0, 0.0, 0.0, 1.0), 1.0).unwrap();
        let mut other = BeliefState::new(Round::Main);
        other.push_own(RadarId(1), TargetId(0), 70.0, Some(e));
        let msg = other.to_message(RadarId(1), 0);

        let mut a = agent(0, 4.0);
        a.set_ellipse(TargetId(0), e, 0);
        a.main.consensus_update(&msg, RadarId(0), 0).unwrap();
        a.select_main();
        assert!(a.belief(Round::Main).bundle().is_empty());
        assert_eq!(a.belief(Round::Main).z(TargetId(0)), Some(RadarId(1)));
        assert_eq!(a.belief(Round::Main).y(TargetId(0)), 70.0);
    }

    #[test]
    fn equal_scores_pick_the_lower_target_id() {
        let mut a = agent(0, 1.0);
        a.set_ellipse(TargetId(5), with_utility(0.0, 50.0), 0);
        a.set_ellipse(TargetId(3), with_utility(9.0, 50.0), 0);
        a.select_main();
        assert_eq!(a.belief(Round::Main).bundle(), &[TargetId(3)]);
    }

    #[test]
    fn optional_round_skips_own_main_targets_and_unknown_ellipses() {
        let mut a = agent(0, 4.0);
        a.set_ellipse(TargetId(0), with_utility(0.0, 50.0), 0);
        a.select_main();
        // T1: no main winner known yet
        a.set_ellipse(TargetId(1), with_utility(0.0, 50.0), 0);
        a.select_optional();
        assert!(a.belief(Round::Optional).bundle().is_empty());
    }

    #[test]
    fn optional_competition_goes_to_the_larger_bonus() {
        // main radar's ellipse contains both optional ellipses, so the
        // overlaps are their own areas: 10 (bonus 2.5) and 40 (bonus 1.0)
        let big = circle_with_area(0.0, 400.0);
        let mut agents = vec![agent(0, 1.0), agent(1, 4.0), agent(2, 4.0)];
        agents[0].set_ellipse(TargetId(0), big, 0);
        agents[1].set_ellipse(TargetId(0), circle_with_area(0.0, 40.0), 0);
        agents[2].set_ellipse(TargetId(0), circle_with_area(0.0, 10.0), 0);
        // keep radar 1 and 2 out of the main race
        for a in &mut agents[1..] {
            a.config.utility.u_max = 1.0;
        }
        converge(&mut agents, 8);
        for a in &agents {
            assert_eq!(a.belief(Round::Main).z(TargetId(0)), Some(RadarId(0)));
            assert_eq!(a.belief(Round::Optional).z(TargetId(0)), Some(RadarId(2)));
        }
        let y = agents[0].belief(Round::Optional).y(TargetId(0));
        assert!((y - 2.5).abs() < 0.01, "{y}");
        assert!(agents[1].belief(Round::Optional).bundle().is_empty());
    }

    #[test]
    fn three_radars_two_targets_each_goes_to_its_best_radar() {
        let mut agents = vec![agent(0, 4.0), agent(1, 4.0), agent(2, 4.0)];
        // T0 close to radar 0, T1 close to radar 2; radar 1 sees both worse
        agents[0].set_ellipse(TargetId(0), with_utility(0.0, 60.0), 0);
        agents[1].set_ellipse(TargetId(0), with_utility(0.0, 40.0), 0);
        agents[1].set_ellipse(TargetId(1), with_utility(0.0, 40.0), 0);
        agents[2].set_ellipse(TargetId(1), with_utility(0.0, 70.0), 0);
        converge(&mut agents, 6);
        for a in &agents {
            assert_eq!(a.belief(Round::Main).z(TargetId(0)), Some(RadarId(0)));
            assert_eq!(a.belief(Round::Main).z(TargetId(1)), Some(RadarId(2)));
        }
        let keys: Vec<_> = agents.iter().map(|a| a.belief(Round::Main).agreement_key()).collect();
        assert!(keys.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn main_selection_reclaims_optional_budget() {
        let mut a = agent(1, 1.0);
        let big = circle_with_area(0.0, 400.0);
        let mut main0 = BeliefState::new(Round::Main);
        main0.push_own(RadarId(0), TargetId(0), 99.0, Some(big));
        a.set_ellipse(TargetId(0), circle_with_area(0.0, 10.0), 0);
        a.main.consensus_update(&main0.to_message(RadarId(0), 0), RadarId(1), 0).unwrap();
        a.select_optional();
        assert_eq!(a.belief(Round::Optional).bundle(), &[TargetId(0)]);
        a.set_ellipse(TargetId(1), with_utility(0.0, 50.0), 0);
        a.select_main();
        assert_eq!(a.belief(Round::Main).bundle(), &[TargetId(1)]);
        assert!(a.belief(Round::Optional).bundle().is_empty());
        assert_eq!(a.belief(Round::Optional).z(TargetId(0)), None);
        assert!(a.used_budget() <= 1.0);
    }

    fn truth(id: u32, x: f64) -> TargetTruth {
        TargetTruth {
            id: TargetId(id),
            position: Vector2::new(x, 100.0),
            velocity: Vector2::zeros(),
        }
    }

    #[test]
    fn isolated_radar_runs_greedy_knapsack_every_step() {
        let mut a = RadarAgent::new(radar(0, 0.0, 2.0), AgentConfig::default(), 3).unwrap();
        let truths = [truth(0, 1000.0), truth(1, 3000.0), truth(2, 8000.0)];
        for now in 0..5 {
            a.step(now, &[], &truths).unwrap();
            let bundle = a.belief(Round::Main).bundle();
            assert_eq!(bundle.len(), 2);
            // nearest targets give the smallest ellipses
            assert!(bundle.contains(&TargetId(0)) && bundle.contains(&TargetId(1)));
            assert!(a.belief(Round::Optional).bundle().is_empty());
        }
    }

    #[test]
    fn forgotten_target_comes_back_fresh() {
        let cfg = AgentConfig {
            t_stale: 3,
            ..AgentConfig::default()
        };
        let mut a = RadarAgent::new(radar(0, 0.0, 4.0), cfg, 3).unwrap();
        let near = [truth(0, 1000.0)];
        let gone = [truth(0, 50_000.0)];
        for now in 0..3 {
            a.step(now, &[], &near).unwrap();
        }
        assert_eq!(a.belief(Round::Main).bundle(), &[TargetId(0)]);
        let mut forgotten_at = None;
        for now in 3..12 {
            a.step(now, &[], &gone).unwrap();
            assert!(a.belief(Round::Main).bundle().is_empty());
            if forgotten_at.is_none() && !a.knows(TargetId(0)) {
                forgotten_at = Some(now);
            }
        }
        // last seen at step 2, gone once more than 3 steps have passed
        assert_eq!(forgotten_at, Some(6));
        assert!(a.tracks().is_empty());
        a.step(12, &[], &near).unwrap();
        assert_eq!(a.belief(Round::Main).bundle(), &[TargetId(0)]);
        assert_eq!(a.tracks()[&TargetId(0)].last_update, 12);
    }

    #[test]
    fn budget_never_exceeded_while_tracking() {
        let mut a = RadarAgent::new(radar(0, 0.0, 3.0), AgentConfig::default(), 9).unwrap();
        let truths: Vec<TargetTruth> = (0..6).map(|i| truth(i, 500.0 + 900.0 * i as f64)).collect();
        for now in 0..20 {
            a.step(now, &[], &truths).unwrap();
            assert!(a.used_budget() <= 3.0 + 1e-9);
            assert!(a.load() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn identical_seeds_give_identical_messages() {
        let truths = [truth(0, 1000.0), truth(1, 2500.0)];
        let run = || {
            let mut a = RadarAgent::new(radar(4, 0.0, 4.0), AgentConfig::default(), 77).unwrap();
            (0..5)
                .map(|now| a.step(now, &[], &truths).unwrap().main.to_json_line())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
