#![allow(dead_code)]

use std::path::{Path, PathBuf};

use avrg_core::data::{AccuracyCell, GridKey, OutcomeCell, StudyGrids};
use avrg_core::vision::{write_pgm, Correspondence, Frame, FurScanManifest};
use nalgebra::{Matrix3, Vector3};

pub const MM_PER_PX: f64 = 4.0;
pub const RECT_SIZE: [usize; 2] = [160, 120];
pub const CAMERA_SIZE: [usize; 2] = [180, 140];
pub const FUR_CENTER: [f64; 2] = [70.0, 60.0];
const FUR_RADIUS_PX: f64 = 20.0;
const HIT_RADIUS_PX: f64 = 5.0;
const WALL: f64 = 200.0;
const FUR: f64 = 130.0;
const HIT: f64 = 30.0;

/// Rectified plane → camera pixels.
pub fn camera_homography() -> Matrix3<f64> {
    Matrix3::new(0.9, 0.08, 10.0, -0.05, 0.95, 8.0, 2e-4, 1e-4, 1.0)
}

fn project(h: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let v = h * Vector3::new(p[0], p[1], 1.0);
    [v.x / v.z, v.y / v.z]
}

fn scene_at(p: [f64; 2], hit: Option<[f64; 2]>) -> f64 {
    let inside = |c: [f64; 2], r: f64| (p[0] - c[0]).hypot(p[1] - c[1]) <= r;
    if hit.is_some_and(|c| inside(c, HIT_RADIUS_PX)) {
        HIT
    } else if inside(FUR_CENTER, FUR_RADIUS_PX) {
        FUR
    } else {
        WALL
    }
}

/// Camera view of the wall, 4 × 4 supersampled. `hit` is in rectified
/// pixels.
pub fn render(hit: Option<[f64; 2]>) -> Frame {
    let to_rect = camera_homography().try_inverse().unwrap();
    let [w, h] = CAMERA_SIZE;
    let mut f = Frame::filled(w, h, 0);
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            for sy in 0..4 {
                for sx in 0..4 {
                    let cx = x as f64 + (sx as f64 + 0.5) / 4.0 - 0.5;
                    let cy = y as f64 + (sy as f64 + 0.5) / 4.0 - 0.5;
                    sum += scene_at(project(&to_rect, [cx, cy]), hit);
                }
            }
            f.set(x, y, (sum / 16.0).round() as u8);
        }
    }
    f
}

/// Camera → rectified pairs at the plane corners and two inner points.
pub fn correspondences() -> Vec<Correspondence> {
    let h = camera_homography();
    let [w, ht] = RECT_SIZE.map(|v| v as f64 - 1.0);
    [
        [0.0, 0.0],
        [w, 0.0],
        [w, ht],
        [0.0, ht],
        [40.0, 30.0],
        [120.0, 80.0],
    ]
    .into_iter()
    .map(|p| Correspondence {
        src: project(&h, p),
        dst: p,
    })
    .collect()
}

pub fn manifest() -> FurScanManifest {
    FurScanManifest {
        background: "background.pgm".into(),
        frames: None,
        correspondences: correspondences(),
        threshold: 40,
        mm_per_pixel: MM_PER_PX,
        fur_band: [100, 160],
        output_size: Some(RECT_SIZE),
    }
}

/// Writes a background and one frame per offset (mm along +x from the fur
/// centre) plus a manifest; returns the manifest path.
pub fn write_sequence(dir: &Path, offsets_mm: &[f64]) -> PathBuf {
    write_pgm(&render(None), dir.join("background.pgm")).unwrap();
    for (i, off) in offsets_mm.iter().enumerate() {
        let hit = [FUR_CENTER[0] + off / MM_PER_PX, FUR_CENTER[1]];
        write_pgm(&render(Some(hit)), dir.join(format!("frame_{i:02}.pgm"))).unwrap();
    }
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest()).unwrap()).unwrap();
    path
}

/// Every cell carries `rate`, `mean_time` and a tight, centred dispersion.
pub fn uniform_grids(rate: f64, mean_time_s: Option<f64>) -> StudyGrids {
    let mut g = StudyGrids::anchors();
    for key in GridKey::all() {
        g.outcome.set(
            key,
            Some(OutcomeCell {
                notification_rate: Some(rate),
                mean_time_s,
                noticeability: None,
                comfort: None,
            }),
        );
        g.accuracy.set(
            key,
            Some(AccuracyCell {
                mean_gap_mm: Some(0.0),
                std_gap_mm: Some(10.0),
                detected: Some(true),
            }),
        );
    }
    g
}

/// One device at the origin looking down +X at a still head `range_mm`
/// away, fired `count` times a second apart.
pub fn single_ring_scenario(range_mm: f64, b: f64, count: u32, seed: u64) -> String {
    format!(
        r#"{{
  "version": 1,
  "seed": {seed},
  "devices": [{{"id": "a", "pose": {{"pos_mm": [0, 0, 0], "euler_deg": [0, 0, 0]}}}}],
  "targets": [{{"id": "h", "pos_mm": [{range_mm}, 0, 0]}}],
  "triggers": [{{"time_s": 0, "device": "a", "target": "h", "b": {b}, "count": {count}, "interval_s": 1.0}}]
}}"#
    )
}
