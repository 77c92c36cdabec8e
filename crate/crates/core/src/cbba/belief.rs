use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::CbbaError;
use crate::geometry::Ellipse;
use crate::ids::{RadarId, TargetId};

/// A new bid must beat the standing one by more than this.
pub const BID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Round {
    Main,
    Optional,
}

/// Whether bid `a` placed by `a_id` beats bid `b` held by `b_id`. Bids
/// within [`BID_TOLERANCE`] are tied and the lower radar id wins; an empty
/// holder never wins a tie.
pub fn outbids(a: f64, a_id: Option<RadarId>, b: f64, b_id: Option<RadarId>) -> bool {
    if a > b + BID_TOLERANCE {
        return true;
    }
    if (a - b).abs() > BID_TOLERANCE {
        return false;
    }
    match (a_id, b_id) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => a > 0.0,
        _ => false,
    }
}

/// What one radar believes about one target.
#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub bid: f64,
    pub winner: Option<RadarId>,
    /// Ellipse behind the winning main bid.
    pub ellipse: Option<Ellipse>,
}

impl Claim {
    pub const EMPTY: Claim = Claim {
        bid: 0.0,
        winner: None,
        ellipse: None,
    };
}

/// One radar's auction state for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub round: Round,
    claims: BTreeMap<TargetId, Claim>,
    /// Last known contact time per radar.
    pub s: BTreeMap<RadarId, u64>,
    bundle: Vec<TargetId>,
    path_utilities: BTreeMap<TargetId, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Leave,
    Update,
    Reset,
}

impl BeliefState {
    pub fn new(round: Round) -> Self {
        Self {
            round,
            claims: BTreeMap::new(),
            s: BTreeMap::new(),
            bundle: Vec::new(),
            path_utilities: BTreeMap::new(),
        }
    }

    pub fn claims(&self) -> &BTreeMap<TargetId, Claim> {
        &self.claims
    }

    pub fn claim(&self, target: TargetId) -> &Claim {
        self.claims.get(&target).unwrap_or(&Claim::EMPTY)
    }

    /// Winning bid `y_j` (zero if unknown).
    pub fn y(&self, target: TargetId) -> f64 {
        self.claim(target).bid
    }

    /// Winner `z_j`.
    pub fn z(&self, target: TargetId) -> Option<RadarId> {
        self.claim(target).winner
    }

    pub fn e(&self, target: TargetId) -> Option<&Ellipse> {
        self.claims.get(&target).and_then(|c| c.ellipse.as_ref())
    }

    pub fn bundle(&self) -> &[TargetId] {
        &self.bundle
    }

    pub fn path_utility(&self, target: TargetId) -> Option<f64> {
        self.path_utilities.get(&target).copied()
    }

    pub fn knows(&self, target: TargetId) -> bool {
        self.claims.contains_key(&target)
    }

    /// `(y, z)` restricted to targets with a winner; equal across radars
    /// exactly when their allocations agree.
    pub fn agreement_key(&self) -> Vec<(TargetId, u64, RadarId)> {
        self.claims
            .iter()
            .filter_map(|(t, c)| c.winner.map(|w| (*t, c.bid.to_bits(), w)))
            .collect()
    }

    /// Makes the target known (with no winner) if it is not already.
    pub fn touch(&mut self, target: TargetId) {
        self.claims.entry(target).or_insert(Claim::EMPTY);
    }

    /// Appends `target` to the bundle with this radar as winner.
    pub fn push_own(&mut self, me: RadarId, target: TargetId, bid: f64, ellipse: Option<Ellipse>) {
        debug_assert!(!self.bundle.contains(&target));
        self.claims.insert(
            target,
            Claim {
                bid,
                winner: Some(me),
                ellipse,
            },
        );
        self.bundle.push(target);
        self.path_utilities.insert(target, bid);
    }

    /// Rewrites this radar's own bid on a bundle entry.
    pub fn refresh_own(&mut self, me: RadarId, target: TargetId, bid: f64, ellipse: Option<Ellipse>) {
        debug_assert!(self.bundle.contains(&target));
        self.claims.insert(
            target,
            Claim {
                bid,
                winner: Some(me),
                ellipse,
            },
        );
        self.path_utilities.insert(target, bid);
    }

    /// Drops bundle entries from `pos` on and resets their claims where this
    /// radar still holds them.
    pub fn release_from(&mut self, me: RadarId, pos: usize) -> Vec<TargetId> {
        if pos >= self.bundle.len() {
            return Vec::new();
        }
        let released: Vec<TargetId> = self.bundle.drain(pos..).collect();
        for t in &released {
            self.path_utilities.remove(t);
            if let Some(c) = self.claims.get_mut(t) {
                if c.winner == Some(me) {
                    *c = Claim::EMPTY;
                }
            }
        }
        released
    }

    /// Removes a single bundle entry (budget reclaim); later entries keep
    /// their bids, which only understate their current value.
    pub fn remove_own(&mut self, me: RadarId, target: TargetId) -> bool {
        let Some(pos) = self.bundle.iter().position(|t| *t == target) else {
            return false;
        };
        self.bundle.remove(pos);
        self.path_utilities.remove(&target);
        if let Some(c) = self.claims.get_mut(&target) {
            if c.winner == Some(me) {
                *c = Claim::EMPTY;
            }
        }
        true
    }

    /// Truncates the bundle at the first entry this radar no longer wins.
    pub fn release_lost(&mut self, me: RadarId) -> Vec<TargetId> {
        match self.bundle.iter().position(|t| self.z(*t) != Some(me)) {
            Some(pos) => self.release_from(me, pos),
            None => Vec::new(),
        }
    }

    /// Deletes all knowledge of targets unseen for more than `t_stale`
    /// steps. Targets missing from `last_seen` count as unseen.
    pub fn forget_stale(
        &mut self,
        me: RadarId,
        last_seen: &BTreeMap<TargetId, u64>,
        now: u64,
        t_stale: u64,
    ) -> Vec<TargetId> {
        let stale: Vec<TargetId> = self
            .claims
            .keys()
            .copied()
            .filter(|t| last_seen.get(t).is_none_or(|seen| now.saturating_sub(*seen) > t_stale))
            .collect();
        for t in &stale {
            if let Some(pos) = self.bundle.iter().position(|b| b == t) {
                self.release_from(me, pos);
            }
            self.claims.remove(t);
            self.path_utilities.remove(t);
        }
        stale
    }

    pub fn to_message(&self, sender: RadarId, send_time: u64) -> CbbaMessage {
        let mut s = self.s.clone();
        s.insert(sender, send_time);
        CbbaMessage {
            sender,
            send_time,
            round: self.round,
            y: self.claims.iter().map(|(t, c)| (*t, c.bid)).collect(),
            z: self.claims.iter().map(|(t, c)| (*t, c.winner)).collect(),
            s,
            e: match self.round {
                Round::Main => Some(
                    self.claims
                        .iter()
                        .filter_map(|(t, c)| c.ellipse.map(|e| (*t, EllipseRecord(e))))
                        .collect(),
                ),
                Round::Optional => None,
            },
        }
    }

    /// Merges a neighbour's message using the CBBA action table, then
    /// truncates the bundle at the first lost target. Messages from self
    /// are ignored.
    pub fn consensus_update(&mut self, msg: &CbbaMessage, me: RadarId, now: u64) -> Result<Vec<TargetId>, CbbaError> {
        if msg.round != self.round {
            return Err(CbbaError::RoundMismatch {
                expected: self.round,
                got: msg.round,
            });
        }
        if msg.sender == me {
            return Ok(Vec::new());
        }
        let k = msg.sender;
        // comparisons use the receiver's timestamps from before the merge
        let s_i = self.s.clone();
        let fresher = |m: RadarId| msg.s.get(&m).copied() > s_i.get(&m).copied();

        for (&j, &z_k) in &msg.z {
            if z_k.is_none() && !self.claims.contains_key(&j) {
                continue;
            }
            let mine = self.claims.entry(j).or_insert(Claim::EMPTY).clone();
            let y_k = msg.y.get(&j).copied().unwrap_or(0.0);
            let (y_i, z_i) = (mine.bid, mine.winner);
            let beats = || outbids(y_k, z_k, y_i, z_i);
            let action = match z_k {
                Some(zk) if zk == k => match z_i {
                    Some(zi) if zi == me => lift(beats()),
                    Some(zi) if zi == k => Action::Update,
                    Some(m) => lift(fresher(m) || beats()),
                    None => Action::Update,
                },
                Some(zk) if zk == me => match z_i {
                    Some(zi) if zi == me => Action::Leave,
                    Some(zi) if zi == k => Action::Reset,
                    Some(m) => {
                        if fresher(m) {
                            Action::Reset
                        } else {
                            Action::Leave
                        }
                    }
                    None => Action::Leave,
                },
                Some(m) => match z_i {
                    Some(zi) if zi == me => lift(fresher(m) && beats()),
                    Some(zi) if zi == k => {
                        if fresher(m) {
                            Action::Update
                        } else {
                            Action::Reset
                        }
                    }
                    Some(zi) if zi == m => lift(fresher(m)),
                    Some(n) => {
                        if fresher(m) && (fresher(n) || beats()) {
                            Action::Update
                        } else if fresher(n) && s_i.get(&m).copied() > msg.s.get(&m).copied() {
                            Action::Reset
                        } else {
                            Action::Leave
                        }
                    }
                    None => lift(fresher(m)),
                },
                None => match z_i {
                    Some(zi) if zi == me => Action::Leave,
                    Some(zi) if zi == k => Action::Update,
                    Some(m) => lift(fresher(m)),
                    None => Action::Leave,
                },
            };
            match action {
                Action::Leave => {}
                Action::Reset => {
                    self.claims.insert(j, Claim::EMPTY);
                }
                Action::Update => {
                    let ellipse = match (self.round, z_k) {
                        (Round::Main, Some(_)) => msg.e.as_ref().and_then(|e| e.get(&j)).map(|r| r.0),
                        _ => None,
                    };
                    if self.round == Round::Main && z_k.is_some() && ellipse.is_none() {
                        return Err(CbbaError::MissingEllipse { sender: k, target: j });
                    }
                    self.claims.insert(
                        j,
                        Claim {
                            bid: if z_k.is_some() { y_k } else { 0.0 },
                            winner: z_k,
                            ellipse,
                        },
                    );
                }
            }
        }

        self.s.insert(k, now);
        for (&m, &t) in &msg.s {
            if m == k || m == me {
                continue;
            }
            let entry = self.s.entry(m).or_insert(t);
            *entry = (*entry).max(t);
        }
        Ok(self.release_lost(me))
    }
}

fn lift(update: bool) -> Action {
    if update {
        Action::Update
    } else {
        Action::Leave
    }
}

/// Payload exchanged between neighbouring radars once per round per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbbaMessage {
    pub sender: RadarId,
    pub send_time: u64,
    pub round: Round,
    pub y: BTreeMap<TargetId, f64>,
    pub z: BTreeMap<TargetId, Option<RadarId>>,
    pub s: BTreeMap<RadarId, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<BTreeMap<TargetId, EllipseRecord>>,
}

/// Wire form of an ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EllipseJson", into = "EllipseJson")]
pub struct EllipseRecord(pub Ellipse);

impl std::ops::Deref for EllipseRecord {
    type Target = Ellipse;
    fn deref(&self) -> &Ellipse {
        &self.0
    }
}

impl From<Ellipse> for EllipseRecord {
    fn from(e: Ellipse) -> Self {
        Self(e)
    }
}

#[derive(Serialize, Deserialize)]
struct EllipseJson {
    center: [f64; 2],
    shape: [[f64; 2]; 2],
    scale: f64,
}

impl From<EllipseRecord> for EllipseJson {
    fn from(r: EllipseRecord) -> Self {
        let c = r.0.center();
        let s = r.0.shape();
        Self {
            center: [c.x, c.y],
            shape: [[s[(0, 0)], s[(0, 1)]], [s[(1, 0)], s[(1, 1)]]],
            scale: r.0.scale(),
        }
    }
}

impl TryFrom<EllipseJson> for EllipseRecord {
    type Error = crate::geometry::GeometryError;
    fn try_from(j: EllipseJson) -> Result<Self, Self::Error> {
        let shape = Matrix2::new(j.shape[0][0], j.shape[0][1], j.shape[1][0], j.shape[1][1]);
        Ellipse::new(Vector2::new(j.center[0], j.center[1]), shape, j.scale).map(EllipseRecord)
    }
}

impl CbbaMessage {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("message serialization is infallible")
    }
}
