use ofdma_ltpf::config::ConfigFile;
use ofdma_ltpf::metrics::{jain_index, qos_deviation};
use ofdma_ltpf::sim::{default_qos_profile, equal_share_rate, run_sweep, SweepPlan};
use ofdma_ltpf::{run_experiment, validate_config, Policy, QoSProfile, SimConfig};

fn small(num_windows: usize, window_frames: usize) -> SimConfig {
    SimConfig {
        num_users: 6,
        num_subcarriers: 12,
        num_windows,
        window_frames,
        ..SimConfig::default()
    }
}

#[test]
fn shipped_config_matches_defaults() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.cfg"))
        .unwrap();
    let file = ConfigFile::parse(&text).unwrap();
    let d = SimConfig::default();
    assert_eq!(file.sim.num_users, d.num_users);
    assert_eq!(file.sim.num_subcarriers, d.num_subcarriers);
    assert!((file.sim.total_power_w - d.total_power_w).abs() < 1e-15);
    assert_eq!(file.sim, d);
}

#[test]
fn all_policies_see_the_same_channel() {
    let cfg = small(3, 4);
    let qos = QoSProfile::linear(6, 1e5, 4e5).unwrap();
    let scenario = validate_config(&cfg, &qos).unwrap();
    let digests: Vec<u64> = [
        Policy::Ltpf,
        Policy::PfGreedy,
        Policy::MaxRate,
        Policy::RoundRobin,
    ]
    .into_iter()
    .map(|p| run_experiment(&scenario, p, 5).unwrap().gain_digest)
    .collect();
    assert!(digests.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn max_rate_maximizes_system_throughput() {
    let cfg = small(5, 4);
    let qos = QoSProfile::linear(6, 1e5, 4e5).unwrap();
    let scenario = validate_config(&cfg, &qos).unwrap();
    let system = |p| {
        run_experiment(&scenario, p, 11)
            .unwrap()
            .summary()
            .mean_system_rate_bps
    };
    let best = system(Policy::MaxRate);
    for p in [Policy::Ltpf, Policy::PfGreedy, Policy::RoundRobin] {
        assert!(system(p) <= best * (1.0 + 1e-12), "{p}");
    }
}

#[test]
fn round_robin_is_fairer_than_max_rate_on_unequal_users() {
    let cfg = SimConfig {
        mean_square_gain: ofdma_ltpf::config::MeanSquareGain::PerUser(vec![
            4.0, 2.0, 1.0, 0.5, 0.25, 0.125,
        ]),
        ..small(10, 5)
    };
    let qos = QoSProfile::linear(6, 1e5, 4e5).unwrap();
    let scenario = validate_config(&cfg, &qos).unwrap();
    let jain = |p| jain_index(&run_experiment(&scenario, p, 3).unwrap().overall_means()).unwrap();
    assert!(jain(Policy::RoundRobin) > jain(Policy::MaxRate));
}

#[test]
fn ltpf_tracks_the_profile_better_than_max_rate() {
    let cfg = SimConfig {
        num_windows: 20,
        ..SimConfig::default()
    }
    .validate()
    .unwrap();
    let qos = default_qos_profile(&cfg).unwrap();
    let scenario = validate_config(cfg.raw(), &qos).unwrap();
    let dev = |p| {
        let r = run_experiment(&scenario, p, 2).unwrap();
        qos_deviation(r.final_window_means(), &qos).unwrap()
    };
    assert!(dev(Policy::Ltpf) < dev(Policy::MaxRate));
}

#[test]
fn default_profile_spans_half_to_double_the_equal_share() {
    let cfg = small(1, 1).validate().unwrap();
    let share = equal_share_rate(&cfg);
    let qos = default_qos_profile(&cfg).unwrap();
    assert!((qos.gamma(0) - 0.5 * share).abs() <= 1e-9 * share);
    assert!((qos.gamma(5) - 2.0 * share).abs() <= 1e-9 * share);
}

#[test]
fn sweep_cells_match_individual_runs() {
    let cfg = small(4, 5);
    let qos = QoSProfile::linear(6, 1e5, 4e5).unwrap();
    let scenario = validate_config(&cfg, &qos).unwrap();
    let plan = SweepPlan {
        policies: vec![Policy::Ltpf, Policy::PfGreedy],
        m_values: vec![2, 5],
        seeds: vec![1, 9],
        frame_budget: 20,
    };
    let results = run_sweep(&scenario, &plan).unwrap();
    assert_eq!(results.len(), plan.cells().len());
    for (r, (p, m, s)) in results.iter().zip(plan.cells()) {
        assert_eq!((r.policy, r.window_frames(), r.seed), (p, m, s));
        assert_eq!(r.num_frames(), 20);
        let sc = validate_config(
            &SimConfig {
                window_frames: m,
                num_windows: 20 / m,
                ..cfg.clone()
            },
            &qos,
        )
        .unwrap();
        assert_eq!(&run_experiment(&sc, p, s).unwrap(), r);
    }
}
