use macgame::analytic::{homogeneous_curves, legacy_response, BackoffConfig};
use macgame::equilibrium::homogeneous_ne;
use macgame::scenario::{ApMode, Duration, NodeModel, NodeSpec};
use macgame::simulator::run;
use macgame::{ApModel, NodeId, PhyProfile, Scenario, TrafficRatio};

fn b11() -> PhyProfile {
    PhyProfile::preset("b11").unwrap()
}

fn homogeneous(n: usize, tau: f64, ap: ApMode, slots: u64) -> Scenario {
    let mut s = Scenario::new("homogeneous", b11());
    s.nodes = (0..n as u32).map(|i| NodeSpec::new(i, NodeModel::Persistent { tau })).collect();
    s.ap = ap;
    s.duration = Duration::Slots(slots);
    s
}

#[test]
fn equilibrium_outcome_matches_throughput_model() {
    let n = 10;
    let k = TrafficRatio::Finite(1.0);
    let cfg = BackoffConfig::default();
    let tau = homogeneous_ne(n, k, &ApModel::Legacy(cfg)).unwrap();
    let r = run(&homogeneous(n, tau, ApMode::Legacy { cfg }, 1_000_000), 17).unwrap();
    let model = homogeneous_curves(tau, n, k, &b11(), &ApModel::Legacy(cfg));
    for i in 0..n as u32 {
        let up = r.uplink_bps(NodeId(i));
        let down = r.downlink_bps(NodeId(i));
        assert!((up - model.uplink).abs() / model.uplink < 0.06, "station {i}: {up} vs {}", model.uplink);
        assert!((down - model.downlink).abs() / model.downlink < 0.02, "station {i}: {down} vs {}", model.downlink);
    }
    let mean_up = r.aggregate_uplink_bps() / n as f64;
    assert!((mean_up - model.uplink).abs() / model.uplink < 0.02, "{mean_up} vs {}", model.uplink);
}

#[test]
fn backoff_station_follows_legacy_response() {
    // One saturated backoff station against persistent interferers.
    let cfg = BackoffConfig::default();
    for tau_others in [0.02, 0.1] {
        let mut s = homogeneous(3, tau_others, ApMode::None, 1_000_000);
        s.nodes.push(NodeSpec::new(9, NodeModel::Legacy { cfg }));
        let r = run(&s, 23).unwrap();
        let legacy = r.node(NodeId(9)).unwrap();
        let tau_hat = legacy.transmissions as f64 / r.total_slots as f64;
        let p_hat = 1.0 - legacy.successes as f64 / legacy.transmissions as f64;
        let f = legacy_response(p_hat, &cfg);
        assert!((tau_hat - f).abs() / f < 0.03, "{tau_hat} vs f({p_hat}) = {f}");
    }
}

#[test]
fn seeds_agree_statistically() {
    let s = homogeneous(5, 0.03, ApMode::Fixed { tau_ap: 0.05 }, 1_000_000);
    let a = run(&s, 1).unwrap();
    let b = run(&s, 2).unwrap();
    for i in 0..5 {
        let (x, y) = (a.nodes[i].successes as f64, b.nodes[i].successes as f64);
        let sd = (x.max(y)).sqrt();
        assert!((x - y).abs() < 5.0 * sd * 2f64.sqrt(), "{x} vs {y}");
    }
}

#[test]
fn cheater_takes_more_than_twice_the_victim_share() {
    let mut s = Scenario::new("cheater", b11());
    s.nodes = vec![
        NodeSpec::new(0, NodeModel::Legacy { cfg: BackoffConfig::constant(8, 6).unwrap() }),
        NodeSpec::new(1, NodeModel::Legacy { cfg: BackoffConfig::default() }),
    ];
    s.duration = Duration::Slots(1_000_000);
    let r = run(&s, 5).unwrap();
    let (cheater, victim) = (r.uplink_bps(NodeId(0)), r.uplink_bps(NodeId(1)));
    assert!(cheater > 2.0 * victim, "{cheater} vs {victim}");
}
