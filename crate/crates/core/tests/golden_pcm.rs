use std::path::PathBuf;

use avrg_core::waveform::{apply_rounding, export_pcm, square_pulse};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/pulse_10v_1ms_48k_b0.004.wav")
}

fn reference_export() -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pulse.wav");
    let wave = apply_rounding(&square_pulse(10.0, 0.001, 48_000).unwrap(), 0.004).unwrap();
    export_pcm(&wave, &path).unwrap();
    std::fs::read(path).unwrap()
}

#[test]
fn reference_pulse_matches_golden() {
    let bytes = reference_export();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &bytes).unwrap();
    }
    let golden = std::fs::read(golden_path()).expect("golden file present");
    assert_eq!(bytes.len(), golden.len());
    assert!(bytes == golden, "export differs from golden file");
}
