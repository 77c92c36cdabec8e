use nalgebra::Vector2;
use proptest::prelude::*;

use radar_cbba::cbba::{AgentConfig, RadarAgent, Round};
use radar_cbba::geometry::{Ellipse, PolarNoise};
use radar_cbba::oracle::{solve_p1, Assignment, ProblemInstance};
use radar_cbba::sim::{generate_scenario, run_static, GeneratorSpec, Scenario, Simulation, Topology};
use radar_cbba::tracking::RadarParams;
use radar_cbba::{Execution, RadarId, TargetId};

fn radar(id: u32, budget: f64) -> RadarParams {
    RadarParams {
        id: RadarId(id),
        position: [0.0, 0.0],
        range_max: 12_000.0,
        noise: PolarNoise::new(5.0, 1e-3).unwrap(),
        snr: 13.0,
        budget,
        process_noise_intensity: 0.5,
    }
}

fn circle_with_utility(u: f64) -> Ellipse {
    let area = 10.0 * (100.0 / u - 1.0);
    Ellipse::circle(Vector2::zeros(), (area / std::f64::consts::PI).sqrt()).unwrap()
}

/// Greedy's classic trap: radar 0 is best everywhere, but its budget only
/// covers one target.
#[test]
fn adversarial_pair_keeps_half_the_optimum() {
    let utilities = [[90.0, 89.0], [88.0, 1.0]];
    let mut agents: Vec<RadarAgent> = (0..2)
        .map(|i| RadarAgent::new(radar(i, 1.0), AgentConfig::default(), 0).unwrap())
        .collect();
    let mut inbox = Vec::new();
    for now in 0..6 {
        let mut next = Vec::new();
        for (i, a) in agents.iter_mut().enumerate() {
            for (j, u) in utilities[i].iter().enumerate() {
                a.set_ellipse(TargetId(j as u32), circle_with_utility(*u), now);
            }
            let mine: Vec<_> = inbox.iter().filter(|m: &&radar_cbba::cbba::CbbaMessage| m.sender != a.id()).cloned().collect();
            let out = a.negotiate(now, &mine).unwrap();
            next.extend([out.main, out.optional]);
        }
        inbox = next;
    }
    let mut instance = ProblemInstance {
        radars: [(RadarId(0), 1.0), (RadarId(1), 1.0)].into(),
        targets: vec![TargetId(0), TargetId(1)],
        ..ProblemInstance::default()
    };
    let mut dec = Assignment::default();
    for (i, a) in agents.iter().enumerate() {
        for (j, u) in utilities[i].iter().enumerate() {
            let key = (RadarId(i as u32), TargetId(j as u32));
            instance.utilities_main.insert(key, *u);
            instance.costs.insert(key, 1.0);
        }
        for t in a.belief(Round::Main).bundle() {
            dec.main.insert(*t, a.id());
        }
    }
    let dec_value = radar_cbba::oracle::evaluate(&instance, &dec).utility;
    let best = solve_p1(&instance).unwrap().total_utility;
    assert_eq!(dec.main.len(), 2);
    // greedy keeps 91 of the optimal 177
    assert!((dec_value - 91.0).abs() < 1e-9 && (best - 177.0).abs() < 1e-9);
    assert!(dec_value >= 0.5 * best, "{dec_value} vs {best}");
}

#[test]
fn scenario_file_with_waypoints_runs() {
    let text = r#"{
        "seed": 3, "steps": 40, "dt": 1.0,
        "radars": [
            {"id": 0, "position": [0, 0], "range_max": 12000, "noise": {"sigma_r": 5, "sigma_theta": 0.001}},
            {"id": 1, "position": [15000, 0], "range_max": 12000, "noise": {"sigma_r": 5, "sigma_theta": 0.001}, "budget": 2}
        ],
        "comm_edges": [[0, 1]],
        "targets": [
            {"id": 0, "position": [1000, 1000], "velocity": [300, 0],
             "motion": {"WAYPOINTS": [[14000, 1000], [14000, 6000]]}},
            {"id": 1, "position": [7000, -2000], "velocity": [0, 20]}
        ]
    }"#;
    let scenario = Scenario::from_json(text).unwrap();
    let mut sim = Simulation::new(scenario, Execution::Parallel).unwrap();
    let run = sim.run().unwrap();
    assert_eq!(run.metrics.len(), 40);
    let end = sim.targets()[0].position;
    assert!((end - Vector2::new(14_000.0, 6_000.0)).norm() > 1.0, "kept moving past the last waypoint");
    assert!(run.metrics.iter().all(|m| m.coverage_main > 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_step_respects_budgets_and_roles(seed in 0u64..1000, n_radars in 1usize..5, n_targets in 0usize..12) {
        let s = generate_scenario(&GeneratorSpec::new(n_radars, n_targets, seed, Topology::RandomConnected)).unwrap();
        let mut sim = Simulation::new(s, Execution::Sequential).unwrap();
        for _ in 0..15 {
            let (m, _) = sim.step().unwrap();
            prop_assert!((0.0..=1.0).contains(&m.coverage_main));
            prop_assert!((0.0..=1.0).contains(&m.coverage_optional));
            prop_assert!(m.mean_load <= 1.0 + 1e-9);
            for a in sim.agents() {
                prop_assert!(a.used_budget() <= a.params().budget + 1e-9);
                let main = a.belief(Round::Main);
                let opt = a.belief(Round::Optional);
                for t in opt.bundle() {
                    prop_assert!(!main.bundle().contains(t));
                }
                for (t, c) in main.claims() {
                    prop_assert_eq!(c.winner == Some(a.id()), main.bundle().contains(t));
                    prop_assert_eq!(c.ellipse.is_some(), c.winner.is_some());
                }
            }
        }
    }

    #[test]
    fn frozen_runs_converge_without_conflicts(seed in 0u64..1000, topology in prop::sample::select(vec![Topology::Line, Topology::Ring, Topology::Complete])) {
        let s = generate_scenario(&GeneratorSpec::new(4, 6, seed, topology)).unwrap();
        let n_targets = s.targets.len() as u64;
        let bound = 2 * n_targets * s.diameter().unwrap() + 1;
        let r = run_static(&s, bound + 10, Default::default(), Execution::Sequential).unwrap();
        prop_assert!(r.agreed_at.is_some_and(|t| t < bound), "{:?}", r.agreed_at);
        prop_assert_eq!(r.final_metrics.conflicts, 0);
        prop_assert!(r.comparison.ratio_p1 >= 0.5);
    }
}
