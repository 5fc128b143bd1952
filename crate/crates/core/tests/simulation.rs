mod common;

use proptest::prelude::*;

use avrg_core::data::{GridKey, StudyGrids};
use avrg_core::sim::{event_log, simulate, EventKind, Scenario};
use avrg_core::Error;

use common::{single_ring_scenario, uniform_grids};

#[test]
fn notice_latency_is_the_grid_mean_time() {
    let mut grids = uniform_grids(1.0, Some(1.5));
    let key = GridKey::new(1000.0, 1.0).unwrap();
    let mut cell = grids.outcome_cell(key);
    cell.mean_time_s = Some(1.62);
    grids.outcome.set(key, Some(cell));

    let scenario = Scenario::from_json(&single_ring_scenario(1000.0, 1.0, 1, 5)).unwrap();
    let events = simulate(&scenario, &grids).unwrap();
    let notice = events.iter().find(|e| e.kind == EventKind::Notice).unwrap();
    assert_eq!(notice.latency_s, Some(1.62));
    assert_eq!(notice.time_s, 1.62);
    let impact = events.iter().find(|e| e.kind == EventKind::Impact).unwrap();
    assert_eq!(impact.flight_time_s, Some(1000.0 / 720.0));
}

#[test]
fn anchors_lack_dispersion() {
    let scenario = Scenario::from_json(&single_ring_scenario(2000.0, 1.0, 1, 5)).unwrap();
    match simulate(&scenario, &StudyGrids::anchors()) {
        Err(Error::MissingData(msg)) => assert!(msg.contains("2000.0 mm, b=1"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn out_of_grid_range_is_missing_data() {
    let scenario = Scenario::from_json(&single_ring_scenario(3000.0, 1.0, 1, 5)).unwrap();
    assert!(matches!(
        simulate(&scenario, &uniform_grids(1.0, None)),
        Err(Error::MissingData(_))
    ));
}

#[test]
fn two_devices_two_heads() {
    let text = r#"{
      "version": 1, "seed": 4,
      "devices": [
        {"id": "left", "pose": {"pos_mm": [0, 0, 0], "euler_deg": [0, 0, 0]}},
        {"id": "right", "pose": {"pos_mm": [0, 3000, 0], "euler_deg": [-90, 0, 0]},
         "config": {"n": 5, "speaker_diameter_mm": 51.5, "max_displacement_mm": 8.2, "formation_number": 4.03, "ring_speed_m_s": 0.9}}
      ],
      "targets": [
        {"id": "p", "pos_mm": [1500, 0, 0], "orientation": "lateral", "facing_yaw_deg": 90},
        {"id": "q", "pos_mm": [0, 1500, 0], "vel_mm_s": [0, -100, 0]}
      ],
      "triggers": [
        {"time_s": 0.2, "device": "right", "target": "q", "b": 0.004, "count": 2, "interval_s": 0.5},
        {"time_s": 0.0, "device": "left", "target": "p", "b": 1, "count": 3, "interval_s": 1.0},
        {"time_s": 0.1, "device": "left", "target": "q", "b": 1}
      ]
    }"#;
    let scenario = Scenario::from_json(text).unwrap();
    let events = simulate(&scenario, &uniform_grids(1.0, Some(2.5))).unwrap();
    let terminals = events.iter().filter(|e| e.kind.is_terminal()).count();
    assert_eq!(terminals, 6);
    let misaligned: Vec<_> = events
        .iter()
        .filter(|e| e.kind == EventKind::Misaligned)
        .collect();
    assert_eq!(misaligned.len(), 1);
    assert_eq!(
        (misaligned[0].device.as_str(), misaligned[0].target.as_str()),
        ("left", "q")
    );
    assert!(events.windows(2).all(|w| w[0].time_s <= w[1].time_s));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn causal_and_repeatable(
        seed in any::<u64>(),
        rate in prop::sample::select(vec![0.0, 0.3, 0.7, 1.0]),
        range in 500.0f64..2500.0,
        count in 1u32..6,
        head_y in -80.0f64..80.0,
    ) {
        let text = single_ring_scenario(range, 1.0, count, seed).replace(
            &format!("[{range}, 0, 0]"),
            &format!("[{range}, {head_y}, 0]"),
        );
        let scenario = Scenario::from_json(&text).unwrap();
        let grids = uniform_grids(rate, Some(3.6));
        let events = simulate(&scenario, &grids).unwrap();
        prop_assert_eq!(
            event_log(&events).unwrap(),
            event_log(&simulate(&scenario, &grids).unwrap()).unwrap()
        );
        prop_assert_eq!(events[0].kind, EventKind::Trigger);
        for ring in 0..count {
            let mine: Vec<_> = events.iter().filter(|e| e.ring == Some(ring)).collect();
            let kinds: Vec<EventKind> = mine.iter().map(|e| e.kind).collect();
            prop_assert_eq!(kinds.iter().filter(|k| k.is_terminal()).count(), 1);
            if kinds[0] == EventKind::Misaligned {
                prop_assert!(head_y.abs() > 50.0);
                prop_assert_eq!(kinds.len(), 1);
            } else {
                prop_assert_eq!(&kinds[..2], &[EventKind::Launch, EventKind::Impact]);
                prop_assert!(mine[0].time_s < mine[1].time_s && mine[1].time_s <= mine[2].time_s);
            }
        }
    }
}
