use std::path::Path;
use std::process::{Command, Output};

fn avrg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avrg"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn design_sizes_the_aperture() {
    let o = avrg(&[
        "design",
        "--n",
        "5",
        "--speaker-mm",
        "51.5",
        "--disp-mm",
        "8.2",
        "--f",
        "4.03",
        "--json",
    ]);
    let d = json(&o)["nozzle"]["aperture_diameter_mm"].as_f64().unwrap();
    assert!((d - 30.0).abs() < 0.2, "{d}");
    let text = avrg(&[
        "design",
        "--n",
        "5",
        "--speaker-mm",
        "51.5",
        "--disp-mm",
        "8.2",
        "--f",
        "5",
    ]);
    assert!(stdout(&text).contains("warning"));
}

#[test]
fn plan_far_target() {
    let v = json(&avrg(&[
        "plan",
        "--distance-mm",
        "2500",
        "--min-rate",
        "1.0",
    ]));
    assert_eq!(v["chosen_b"], 1.0);
    assert_eq!(v["feasible"], true);
}

#[test]
fn intercept_stationary_head() {
    let o = avrg(&["intercept", "--head-pos", "1000,0,0"]);
    assert!(stdout(&o).contains("1.389 s"), "{}", stdout(&o));
    let v = json(&avrg(&["intercept", "--head-pos", "1000,0,0", "--json"]));
    assert_eq!(v["time_of_flight_s"].as_f64().unwrap(), 1.0 / 0.72);
}

#[test]
fn aim_from_pose_file() {
    let dir = tempfile::tempdir().unwrap();
    let pose = dir.path().join("pose.json");
    std::fs::write(
        &pose,
        r#"{"avrg": {"pos_mm": [0, 0, 0], "euler_deg": [0, 0, 0]}, "head": {"pos_mm": [1000, 50, 0]}}"#,
    )
    .unwrap();
    let v = json(&avrg(&["aim", "--pose", pose.to_str().unwrap(), "--json"]));
    assert_eq!(v["alignment"]["aligned"], true);
    let off = avrg(&["aim", "--head-pos", "1000,51,0"]);
    assert!(stdout(&off).starts_with("misaligned"));
}

#[test]
fn waveform_writes_under_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = avrg(&[
        "waveform",
        "--b",
        "0.004",
        "--amp",
        "10",
        "--pulse-ms",
        "1",
        "--out-dir",
        out,
        "--output",
        "ref.wav",
    ]);
    assert!(o.status.success());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/golden/pulse_10v_1ms_48k_b0.004.wav");
    assert_eq!(
        std::fs::read(dir.path().join("ref.wav")).unwrap(),
        std::fs::read(golden).unwrap()
    );
    let escape = avrg(&[
        "waveform",
        "--b",
        "1",
        "--out-dir",
        out,
        "--output",
        "../x.wav",
    ]);
    assert_eq!(escape.status.code(), Some(1));
}

#[test]
fn hitprob_with_explicit_dispersion() {
    let v = json(&avrg(&[
        "hitprob",
        "--mean-gap-mm",
        "0",
        "--std-mm",
        "0",
        "--samples",
        "100",
        "--json",
    ]));
    assert_eq!(v["probability"], 1.0);
    let missing = avrg(&["hitprob", "--distance-mm", "2000", "--b", "1"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing data"));
}

#[test]
fn simulate_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let grids = dir.path().join("grids");
    std::fs::create_dir(&grids).unwrap();
    let core_data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data");
    for f in ["study1.csv", "sound.csv", "direction.csv"] {
        std::fs::copy(core_data.join(f), grids.join(f)).unwrap();
    }
    std::fs::write(
        grids.join("accuracy.csv"),
        "distance_mm,b,mean_gap_mm,std_gap_mm,detected\n2500,1,100,40,true\n",
    )
    .unwrap();
    let scenario = dir.path().join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{"version": 1, "seed": 21,
            "devices": [{"id": "a", "pose": {"pos_mm": [0, 0, 0], "euler_deg": [0, 0, 0]}}],
            "targets": [{"id": "h", "pos_mm": [2500, 0, 0]}],
            "triggers": [{"time_s": 0, "device": "a", "target": "h", "b": 1, "count": 3, "interval_s": 1}]}"#,
    )
    .unwrap();
    let run = |name: &str| {
        let o = avrg(&[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--grids",
            grids.to_str().unwrap(),
            "--out-dir",
            dir.path().to_str().unwrap(),
            "--output",
            name,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join(name)).unwrap()
    };
    let first = run("one.jsonl");
    assert_eq!(first, run("two.jsonl"));
    assert!(String::from_utf8(first).unwrap().lines().count() >= 10);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(avrg(&["launch"]).status.code(), Some(2));
    assert_eq!(avrg(&["plan", "--distance-mm"]).status.code(), Some(2));
    assert_eq!(
        avrg(&["plan", "--distance-mm", "1000", "--objective", "loudness"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(avrg(&["design", "--n", "5"]).status.code(), Some(2));
}

#[test]
fn operation_errors_exit_1() {
    let o = avrg(&["plan", "--distance-mm", "4000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of range"));
}
