use macgame::equilibrium::AckSuppressionDesign;
use macgame::estimators::EstimatorSettings;
use macgame::scenario::{
    AckDesignSource, AdaptivePolicy, Addressing, ApMode, Duration, Event, EventAction, NodeModel, NodeSpec,
};
use macgame::{BackoffConfig, NodeId, PhyProfile, Scenario, TrafficRatio};
use macgame_cli::{ScenarioFile, ScenarioFileError, Sweep, SweepParameter};
use proptest::prelude::*;

fn backoff() -> impl Strategy<Value = BackoffConfig> {
    (1u32..64, 0u32..5, 0u32..8).prop_map(|(lo, m, r)| BackoffConfig::new(lo, lo << m, r).unwrap())
}

fn probability() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

fn model() -> impl Strategy<Value = NodeModel> {
    prop_oneof![
        probability().prop_map(|tau| NodeModel::Persistent { tau }),
        backoff().prop_map(|cfg| NodeModel::Legacy { cfg }),
        proptest::option::of(probability())
            .prop_map(|known_ap_tau| NodeModel::Adaptive(AdaptivePolicy::BestResponse { known_ap_tau })),
        Just(NodeModel::Adaptive(AdaptivePolicy::AckThreshold)),
    ]
}

fn phy() -> impl Strategy<Value = PhyProfile> {
    prop_oneof![
        prop::sample::select(vec!["b11", "g6", "n600"]).prop_map(|n| PhyProfile::preset(n).unwrap()),
        (prop::sample::select(vec!["b11", "g6"]), 1.0..1e5f64)
            .prop_map(|(n, p)| PhyProfile::preset(n).unwrap().with_payload_bits(p).unwrap()),
        (1.0..50.0f64, 1.0..5000.0f64, 1.0..1e5f64, "[a-z][a-z0-9]{0,6}")
            .prop_map(|(s, extra, p, label)| PhyProfile::new(s, s + extra, p, label).unwrap()),
    ]
}

fn ap(k_infinite: bool) -> impl Strategy<Value = ApMode> {
    let design = prop_oneof![
        Just(AckDesignSource::Estimated),
        (probability(), 0.0..100.0f64).prop_map(|(g, a)| AckDesignSource::Fixed(AckSuppressionDesign::new(g, a).unwrap())),
    ];
    prop_oneof![
        Just(ApMode::None),
        backoff().prop_map(|cfg| ApMode::Legacy { cfg }),
        probability().prop_map(|tau_ap| ApMode::Fixed { tau_ap }),
        (1e-6..0.5f64).prop_map(|tau_floor| ApMode::Designer { tau_floor }),
        (design, any::<bool>()).prop_map(|(design, downlink)| ApMode::AckSuppressor { design, downlink }),
    ]
    .prop_map(move |ap| match ap {
        ApMode::Designer { .. } if k_infinite => ApMode::None,
        other => other,
    })
}

fn estimator() -> impl Strategy<Value = EstimatorSettings> {
    (1u64..200, 0u64..4000, 0u64..4000, 0.0..1.0f64, 0.0..1.0f64, any::<bool>(), 1u32..10).prop_map(
        |(min, span, offset, delta, beta, adaptive_window, hysteresis)| EstimatorSettings {
            window_slots: min + offset.min(span),
            delta,
            beta,
            adaptive_window,
            min_window: min,
            max_window: min + span,
            hysteresis,
        },
    )
}

fn duration() -> impl Strategy<Value = Duration> {
    prop_oneof![(1u64..10_000_000).prop_map(Duration::Slots), (0.001..1000.0f64).prop_map(Duration::Seconds)]
}

prop_compose! {
    fn scenario()(
        name in "[a-z][a-z0-9_-]{0,12}",
        phy in phy(),
        k_inf in any::<bool>(),
        k in 0.01..50.0f64,
        groups in prop::collection::vec((model(), 1u32..4, 0u32..3), 0..4),
        duration in duration(),
        warmup in prop_oneof![Just(Duration::Slots(0)), (1u64..1000).prop_map(Duration::Slots), (0.0..10.0f64).prop_map(Duration::Seconds)],
        seed in any::<u64>(),
        estimator in estimator(),
        random in any::<bool>(),
        update_every in 1u32..5,
        floor in 1e-6..0.5f64,
        ceiling in 0.5..=1.0f64,
    )(
        ap in ap(k_inf),
        name in Just(name), phy in Just(phy), k_inf in Just(k_inf), k in Just(k), groups in Just(groups),
        duration in Just(duration), warmup in Just(warmup), seed in Just(seed), estimator in Just(estimator),
        random in Just(random), update_every in Just(update_every), floor in Just(floor), ceiling in Just(ceiling),
    ) -> Scenario {
        let mut s = Scenario::new(name, phy);
        s.controller.k = if k_inf { TrafficRatio::Infinite } else { TrafficRatio::Finite(k) };
        s.controller.update_every = update_every;
        s.controller.tau_floor = floor;
        s.controller.tau_ceiling = ceiling.max(floor + 1e-9).min(1.0);
        let mut next = 0;
        for (model, count, gap) in groups {
            next += gap;
            s.nodes.extend((next..next + count).map(|id| NodeSpec::new(id, model)));
            next += count;
        }
        s.ap = ap;
        s.duration = duration;
        s.warmup = warmup;
        s.seed = seed;
        s.estimator = estimator;
        s.addressing = if random { Addressing::Random } else { Addressing::RoundRobin };
        s
    }
}

prop_compose! {
    fn scenario_file()(
        scenario in scenario(),
        joins in prop::collection::vec((model(), 1u32..3), 0..3),
        leave_first in any::<bool>(),
        replicas in 1u32..20,
        sweep in proptest::option::of(prop::collection::vec(1u64..5000, 1..5)),
    ) -> ScenarioFile {
        let mut events = Vec::new();
        let mut next = scenario.nodes.iter().map(|n| n.id.0 + 1).max().unwrap_or(0);
        let horizon = match (scenario.duration, scenario.warmup) {
            (Duration::Seconds(d), _) => d,
            _ => 1000.0,
        };
        for (i, (model, count)) in joins.into_iter().enumerate() {
            let specs = (next..next + count).map(|id| NodeSpec::new(id, model)).collect();
            next += count;
            events.push(Event { time_s: horizon * i as f64 / 4.0, action: EventAction::Join(specs) });
        }
        if leave_first {
            if let Some(first) = scenario.nodes.first() {
                events.push(Event { time_s: horizon * 0.9, action: EventAction::Leave(vec![first.id]) });
            }
        }
        let sweep = sweep.map(|v| Sweep { parameter: SweepParameter::Window, values: v.into_iter().map(|w| w as f64).collect() });
        let mut file = ScenarioFile { scenario, events, replicas, sweep };
        if file.validate().is_err() {
            // Window sweeps can leave the tuning bounds; drop them in that case.
            file.sweep = None;
        }
        file
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn text_form_round_trips(file in scenario_file()) {
        prop_assume!(file.validate().is_ok());
        let text = file.to_text();
        let back = ScenarioFile::parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn generated_files_are_mostly_valid() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strategy = scenario_file();
    let valid = (0..200)
        .filter(|_| strategy.new_tree(&mut runner).unwrap().current().validate().is_ok())
        .count();
    assert!(valid > 150, "{valid}/200");
}

#[test]
fn explicit_ids_survive_serialization() {
    let mut s = Scenario::new("ids", PhyProfile::preset("b11").unwrap());
    s.nodes = vec![
        NodeSpec::new(3, NodeModel::Persistent { tau: 0.1 }),
        NodeSpec::new(4, NodeModel::Persistent { tau: 0.1 }),
        NodeSpec::new(9, NodeModel::Persistent { tau: 0.1 }),
    ];
    let file = ScenarioFile::new(s);
    let text = file.to_text();
    assert!(text.contains("first_id=3") && text.contains("first_id=9"));
    assert_eq!(ScenarioFile::parse(&text).unwrap(), file);
}

#[test]
fn unknown_values_are_reported_with_their_key() {
    let cases = [
        ("[phy]\npreset = x99\n", 2, "preset"),
        ("[phy]\npreset = b11\n[ap]\nmode = turbo\n", 4, "mode"),
        ("[phy]\npreset = b11\n[scenario]\nduration = forever\n", 4, "duration"),
        ("[phy]\npreset = b11\n[estimator]\nadaptive_window = maybe\n", 4, "adaptive_window"),
        ("[phy]\npreset = b11\n[nodes]\ngroup = legacy 2 cw_min=3 cw_max=5\n", 4, "group"),
        ("[phy]\npreset = b11\n[sweep]\nparameter = colour\nvalues = 1\n", 4, "parameter"),
    ];
    for (text, line, field) in cases {
        match ScenarioFile::parse(text) {
            Err(ScenarioFileError::Parse(e)) => {
                assert_eq!((e.line, e.field.as_deref()), (line, Some(field)), "{text}");
            }
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn leave_accepts_commas_and_spaces() {
    let text = "[phy]\npreset = b11\n[nodes]\ngroup = adaptive 4\n[event]\ntime = 0.5\nleave = 0, 2 3\n";
    let f = ScenarioFile::parse(text).unwrap();
    assert_eq!(f.events[0].action, EventAction::Leave(vec![NodeId(0), NodeId(2), NodeId(3)]));
}
