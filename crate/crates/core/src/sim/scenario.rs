use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::allocation::UtilityParams;
use crate::geometry::{PolarNoise, DEFAULT_SCALE};
use crate::ids::{RadarId, TargetId};
use crate::tracking::{RadarParams, DEFAULT_PROCESS_NOISE, NOMINAL_SNR};

pub const DEFAULT_ARENA: f64 = 20_000.0;
pub const DEFAULT_RANGE: f64 = 12_000.0;
pub const SPEED_RANGE: (f64, f64) = (5.0, 50.0);
const RANDOM_TOPOLOGY_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Motion {
    #[default]
    ConstantVelocity,
    /// Visit the points in order at the initial speed, then keep going.
    Waypoints(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub id: TargetId,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    #[serde(default)]
    pub motion: Motion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub steps: u64,
    /// Seconds per step.
    pub dt: f64,
    pub radars: Vec<RadarParams>,
    pub comm_edges: Vec<(RadarId, RadarId)>,
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub utility: UtilityParams,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Defaults to twice the graph diameter plus four.
    #[serde(default)]
    pub t_stale: Option<u64>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_standby")]
    pub standby_noise_factor: f64,
    #[serde(default)]
    pub v_radial_min: f64,
    /// Targets stand still and tracks keep their first estimate.
    #[serde(default)]
    pub frozen: bool,
}

fn default_gamma() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    DEFAULT_SCALE
}

fn default_standby() -> f64 {
    2.0
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.radars.is_empty() {
            return bad("at least one radar is required".into());
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        if !(self.standby_noise_factor > 0.0 && self.standby_noise_factor.is_finite()) {
            return bad("standby_noise_factor must be positive".into());
        }
        if self.t_stale == Some(0) {
            return bad("t_stale must be at least 1".into());
        }
        self.utility
            .validate()
            .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        let mut ids = BTreeSet::new();
        for r in &self.radars {
            r.validate().map_err(|e| SimError::InvalidScenario(e.to_string()))?;
            if !ids.insert(r.id) {
                return bad(format!("duplicate radar id {}", r.id));
            }
        }
        for (a, b) in &self.comm_edges {
            if !ids.contains(a) || !ids.contains(b) {
                return bad(format!("edge ({a}, {b}) references an unknown radar"));
            }
            if a == b {
                return bad(format!("self-loop on {a}"));
            }
        }
        let mut tids = BTreeSet::new();
        for t in &self.targets {
            if !tids.insert(t.id) {
                return bad(format!("duplicate target id {}", t.id));
            }
            let finite = t.position.iter().chain(t.velocity.iter()).all(|v| v.is_finite());
            if !finite {
                return bad(format!("target {} has a non-finite state", t.id));
            }
        }
        if self.diameter().is_none() {
            return bad("communication graph is not connected".into());
        }
        Ok(())
    }

    pub fn adjacency(&self) -> BTreeMap<RadarId, BTreeSet<RadarId>> {
        let mut adj: BTreeMap<RadarId, BTreeSet<RadarId>> =
            self.radars.iter().map(|r| (r.id, BTreeSet::new())).collect();
        for (a, b) in &self.comm_edges {
            if a != b {
                adj.entry(*a).or_default().insert(*b);
                adj.entry(*b).or_default().insert(*a);
            }
        }
        adj
    }

    /// Longest shortest path of the communication graph, `None` if it is
    /// disconnected.
    pub fn diameter(&self) -> Option<u64> {
        let adj = self.adjacency();
        let mut diameter = 0;
        for start in adj.keys() {
            let mut dist = BTreeMap::from([(*start, 0u64)]);
            let mut queue = VecDeque::from([*start]);
            while let Some(u) = queue.pop_front() {
                for v in &adj[&u] {
                    if !dist.contains_key(v) {
                        dist.insert(*v, dist[&u] + 1);
                        queue.push_back(*v);
                    }
                }
            }
            if dist.len() != adj.len() {
                return None;
            }
            diameter = diameter.max(*dist.values().max().unwrap_or(&0));
        }
        Some(diameter)
    }

    pub fn effective_t_stale(&self) -> u64 {
        self.t_stale
            .unwrap_or_else(|| 2 * self.diameter().unwrap_or(0) + 4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Topology {
    Complete,
    Line,
    Ring,
    RandomConnected,
}

impl std::str::FromStr for Topology {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "COMPLETE" => Ok(Topology::Complete),
            "LINE" => Ok(Topology::Line),
            "RING" => Ok(Topology::Ring),
            "RANDOM_CONNECTED" | "RANDOM" => Ok(Topology::RandomConnected),
            other => Err(SimError::InvalidScenario(format!("unknown topology {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_radars: usize,
    pub n_targets: usize,
    /// Side of the square arena, metres.
    pub arena: f64,
    pub seed: u64,
    pub topology: Topology,
    pub steps: u64,
}

impl GeneratorSpec {
    pub fn new(n_radars: usize, n_targets: usize, seed: u64, topology: Topology) -> Self {
        Self {
            n_radars,
            n_targets,
            arena: DEFAULT_ARENA,
            seed,
            topology,
            steps: 100,
        }
    }
}

/// Random scenario: radars on a jittered grid, targets uniform in the arena
/// with uniform headings and speeds in [`SPEED_RANGE`].
pub fn generate_scenario(spec: &GeneratorSpec) -> Result<Scenario, SimError> {
    if spec.n_radars == 0 {
        return Err(SimError::InvalidScenario("n_radars must be at least 1".into()));
    }
    if !(spec.arena > 0.0) {
        return Err(SimError::InvalidScenario("arena must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cols = (spec.n_radars as f64).sqrt().ceil() as usize;
    let rows = spec.n_radars.div_ceil(cols);
    let (cw, ch) = (spec.arena / cols as f64, spec.arena / rows as f64);
    let radars: Vec<RadarParams> = (0..spec.n_radars)
        .map(|i| {
            let (c, r) = (i % cols, i / cols);
            let x = (c as f64 + 0.5) * cw + rng.gen_range(-0.25..0.25) * cw;
            let y = (r as f64 + 0.5) * ch + rng.gen_range(-0.25..0.25) * ch;
            RadarParams {
                id: RadarId(i as u32),
                position: [x, y],
                range_max: DEFAULT_RANGE,
                noise: PolarNoise {
                    sigma_r: 5.0,
                    sigma_theta: 1e-3,
                },
                snr: NOMINAL_SNR,
                budget: 4.0,
                process_noise_intensity: DEFAULT_PROCESS_NOISE,
            }
        })
        .collect();
    let targets = (0..spec.n_targets)
        .map(|j| {
            let position = [rng.gen_range(0.0..spec.arena), rng.gen_range(0.0..spec.arena)];
            let speed = rng.gen_range(SPEED_RANGE.0..=SPEED_RANGE.1);
            let heading = rng.gen_range(0.0..std::f64::consts::TAU);
            TargetSpec {
                id: TargetId(j as u32),
                position,
                velocity: [speed * heading.cos(), speed * heading.sin()],
                motion: Motion::ConstantVelocity,
            }
        })
        .collect();
    let ids: Vec<RadarId> = radars.iter().map(|r| r.id).collect();
    let comm_edges = topology_edges(&ids, spec.topology, &mut rng)?;
    let scenario = Scenario {
        seed: spec.seed,
        steps: spec.steps,
        dt: 1.0,
        radars,
        comm_edges,
        targets,
        utility: UtilityParams::default(),
        gamma: 1.0,
        t_stale: None,
        scale: DEFAULT_SCALE,
        standby_noise_factor: default_standby(),
        v_radial_min: 0.0,
        frozen: false,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn topology_edges(ids: &[RadarId], topology: Topology, rng: &mut ChaCha8Rng) -> Result<Vec<(RadarId, RadarId)>, SimError> {
    let n = ids.len();
    let all_pairs = || (0..n).flat_map(move |i| (i + 1..n).map(move |k| (i, k)));
    let chain = || (1..n).map(|i| (ids[i - 1], ids[i]));
    Ok(match topology {
        Topology::Complete => all_pairs().map(|(i, k)| (ids[i], ids[k])).collect(),
        Topology::Line => chain().collect(),
        Topology::Ring => {
            let mut edges: Vec<_> = chain().collect();
            if n > 2 {
                edges.push((ids[n - 1], ids[0]));
            }
            edges
        }
        Topology::RandomConnected => {
            for _ in 0..RANDOM_TOPOLOGY_RETRIES {
                let edges: Vec<_> = all_pairs()
                    .filter(|_| rng.gen_bool(0.5))
                    .map(|(i, k)| (ids[i], ids[k]))
                    .collect();
                if connected(ids, &edges) {
                    return Ok(edges);
                }
            }
            return Err(SimError::InvalidScenario(format!(
                "no connected random topology after {RANDOM_TOPOLOGY_RETRIES} attempts"
            )));
        }
    })
}

fn connected(ids: &[RadarId], edges: &[(RadarId, RadarId)]) -> bool {
    let mut reached = BTreeSet::from([ids[0]]);
    loop {
        let before = reached.len();
        for (a, b) in edges {
            if reached.contains(a) || reached.contains(b) {
                reached.insert(*a);
                reached.insert(*b);
            }
        }
        if reached.len() == before {
            return reached.len() == ids.len();
        }
    }
}
