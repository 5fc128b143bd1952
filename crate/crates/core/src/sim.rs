//! Event-driven simulation of rings fired at heads in a room.
//!
//! Every ring draws from its own ChaCha stream, selected by trigger and
//! ring index, so the log for a given scenario and seed never depends on
//! evaluation order.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::accuracy::{head_from_anthropometry, hit_model_at, HeadOrientation, HeadTarget};
use crate::data::{distance_bracket, interpolate_in_distance, StudyGrids};
use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::targeting::{
    check_alignment, solve_intercept, AvrgPose, DirectionSpec, HeadState, PoseState,
    DEFAULT_TOLERANCE_MM,
};
use crate::waveform::validate_roundness;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    pub id: String,
    #[serde(default)]
    pub config: DeviceSpec,
    pub pose: AvrgPose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub id: String,
    pub pos_mm: [f64; 3],
    #[serde(default)]
    pub vel_mm_s: [f64; 3],
    /// Explicit silhouette; overrides `orientation`.
    #[serde(default)]
    pub head: Option<HeadTarget>,
    #[serde(default)]
    pub orientation: Option<HeadOrientation>,
    /// World yaw the face points along, degrees.
    #[serde(default = "default_facing")]
    pub facing_yaw_deg: f64,
}

fn default_facing() -> f64 {
    180.0
}

impl TargetEntry {
    pub fn silhouette(&self) -> HeadTarget {
        self.head.unwrap_or_else(|| {
            head_from_anthropometry(self.orientation.unwrap_or(HeadOrientation::Frontal))
        })
    }

    fn state_at(&self, t: f64) -> HeadState {
        let p = Vector3::from(self.pos_mm) + Vector3::from(self.vel_mm_s) * t;
        HeadState {
            pos_mm: p.into(),
            vel_mm_s: self.vel_mm_s,
        }
    }

    /// Where on the head a ring coming from `origin` arrives.
    fn arrival(&self, head_pos: [f64; 3], origin: [f64; 3]) -> Result<DirectionSpec> {
        let u = (Vector3::from(origin) - Vector3::from(head_pos)).normalize();
        let yaw = self.facing_yaw_deg.to_radians();
        let face = Vector3::new(yaw.cos(), yaw.sin(), 0.0);
        let right = Vector3::new(yaw.sin(), -yaw.cos(), 0.0);
        let theta = u.dot(&face).atan2(u.dot(&right)).to_degrees();
        let phi = u.z.clamp(-1.0, 1.0).asin().to_degrees();
        DirectionSpec::new(theta, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerEntry {
    pub time_s: f64,
    pub device: usize,
    pub target: usize,
    pub b: f64,
    pub count: u32,
    pub interval_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrigger {
    time_s: f64,
    device: String,
    target: String,
    b: f64,
    #[serde(default = "one")]
    count: u32,
    #[serde(default)]
    interval_s: f64,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    version: u32,
    seed: u64,
    devices: Vec<DeviceEntry>,
    targets: Vec<TargetEntry>,
    triggers: Vec<RawTrigger>,
}

/// A validated scenario; triggers refer to devices and targets by index.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub devices: Vec<DeviceEntry>,
    pub targets: Vec<TargetEntry>,
    pub triggers: Vec<TriggerEntry>,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text)?;
        if raw.version != SCENARIO_VERSION {
            return Err(Error::invalid(format!(
                "unsupported scenario version {}",
                raw.version
            )));
        }
        unique_ids("device", raw.devices.iter().map(|d| d.id.as_str()))?;
        unique_ids("target", raw.targets.iter().map(|t| t.id.as_str()))?;
        for d in &raw.devices {
            d.config.validate()?;
        }
        let device_ids: Vec<&str> = raw.devices.iter().map(|d| d.id.as_str()).collect();
        let target_ids: Vec<&str> = raw.targets.iter().map(|t| t.id.as_str()).collect();
        let find = |kind: &str, ids: &[&str], id: &str| {
            ids.iter()
                .position(|x| *x == id)
                .ok_or_else(|| Error::invalid(format!("trigger names unknown {kind} {id:?}")))
        };
        let triggers = raw
            .triggers
            .iter()
            .map(|t| {
                Ok(TriggerEntry {
                    time_s: t.time_s,
                    device: find("device", &device_ids, &t.device)?,
                    target: find("target", &target_ids, &t.target)?,
                    b: t.b,
                    count: t.count,
                    interval_s: t.interval_s,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scenario = Self {
            seed: raw.seed,
            devices: raw.devices,
            targets: raw.targets,
            triggers,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.triggers {
            if !(t.time_s.is_finite() && t.time_s >= 0.0) {
                return Err(Error::invalid(format!(
                    "trigger time {} must be >= 0",
                    t.time_s
                )));
            }
            if t.count == 0 {
                return Err(Error::invalid("trigger count must be at least 1"));
            }
            if t.count > 1 && !(t.interval_s.is_finite() && t.interval_s > 0.0) {
                return Err(Error::invalid("repeated triggers need a positive interval"));
            }
            validate_roundness(t.b)?;
            if t.device >= self.devices.len() || t.target >= self.targets.len() {
                return Err(Error::invalid(
                    "trigger refers to a missing device or target",
                ));
            }
        }
        for target in &self.targets {
            let s = target.silhouette();
            HeadTarget::new(s.semi_axis_horizontal_mm, s.semi_axis_vertical_mm)?;
            if !target.facing_yaw_deg.is_finite() {
                return Err(Error::invalid("facing yaw must be finite"));
            }
        }
        Ok(())
    }
}

fn unique_ids<'a>(kind: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::invalid(format!("duplicate {kind} id {id:?}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Trigger,
    Launch,
    Impact,
    Notice,
    Miss,
    Misaligned,
}

impl EventKind {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Self::Notice | Self::Miss | Self::Misaligned)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time_s: f64,
    pub kind: EventKind,
    pub device: String,
    pub target: String,
    pub trigger: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ring: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flight_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl SimEvent {
    fn new(time_s: f64, kind: EventKind, device: &str, target: &str, trigger: usize) -> Self {
        Self {
            time_s,
            kind,
            device: device.to_owned(),
            target: target.to_owned(),
            trigger,
            ring: None,
            b: None,
            range_mm: None,
            flight_time_s: None,
            gap_mm: None,
            hit: None,
            region: None,
            latency_s: None,
            reason: None,
        }
    }
}

/// Generator for one ring.
pub fn ring_rng(seed: u64, trigger: usize, ring: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trigger as u64) << 32) | u64::from(ring));
    rng
}

fn cell_label(range_mm: f64, b: f64) -> String {
    format!("({range_mm:.1} mm, b={b})")
}

pub fn simulate(scenario: &Scenario, grids: &StudyGrids) -> Result<Vec<SimEvent>> {
    scenario.validate()?;
    let mut events = Vec::new();
    for (ti, trig) in scenario.triggers.iter().enumerate() {
        let device = &scenario.devices[trig.device];
        let target = &scenario.targets[trig.target];
        let base = SimEvent::new(trig.time_s, EventKind::Trigger, &device.id, &target.id, ti);
        events.push(SimEvent {
            b: Some(trig.b),
            ..base.clone()
        });
        for ring in 0..trig.count {
            let launch_t = trig.time_s + f64::from(ring) * trig.interval_s;
            let at = |time_s: f64, kind: EventKind| SimEvent {
                time_s,
                kind,
                ring: Some(ring),
                ..base.clone()
            };
            simulate_ring(
                grids,
                device,
                target,
                trig.b,
                launch_t,
                &mut ring_rng(scenario.seed, ti, ring),
                at,
                &mut events,
            )?;
        }
    }
    // Stable: equal times keep causal emission order.
    events.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    Ok(events)
}

#[allow(clippy::too_many_arguments)]
fn simulate_ring(
    grids: &StudyGrids,
    device: &DeviceEntry,
    target: &TargetEntry,
    b: f64,
    launch_t: f64,
    rng: &mut ChaCha8Rng,
    at: impl Fn(f64, EventKind) -> SimEvent,
    events: &mut Vec<SimEvent>,
) -> Result<()> {
    let cfg = &device.config;
    let now = PoseState {
        avrg: device.pose,
        head: target.state_at(launch_t),
    };
    let intercept = match solve_intercept(&now, cfg.ring_speed_m_s()) {
        Ok(i) => i,
        Err(Error::NoIntercept(msg)) => {
            events.push(SimEvent {
                reason: Some(format!("no intercept: {msg}")),
                ..at(launch_t, EventKind::Misaligned)
            });
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let at_impact = PoseState {
        avrg: device.pose,
        head: HeadState {
            pos_mm: intercept.aim_point_mm,
            vel_mm_s: target.vel_mm_s,
        },
    };
    let alignment = check_alignment(&at_impact, DEFAULT_TOLERANCE_MM)?;
    if !alignment.aligned {
        events.push(SimEvent {
            gap_mm: Some(alignment.off_axis_distance_mm),
            reason: Some("off boresight".into()),
            ..at(launch_t, EventKind::Misaligned)
        });
        return Ok(());
    }

    let range = (Vector3::from(intercept.aim_point_mm) - Vector3::from(device.pose.pos_mm)).norm();
    distance_bracket(range)
        .map_err(|_| Error::MissingData(format!("no grid data at {}", cell_label(range, b))))?;
    let rate = interpolate_in_distance(&grids.outcome, range, b, |c| c.notification_rate)?
        .ok_or_else(|| {
            Error::MissingData(format!("notification rate at {}", cell_label(range, b)))
        })?;
    let mean_time = interpolate_in_distance(&grids.outcome, range, b, |c| c.mean_time_s)?;
    let model = match hit_model_at(grids, range, b, cfg.ring_radius_mm()) {
        Ok(m) => Some(m),
        Err(Error::Undetectable(_)) => None,
        Err(Error::MissingData(what)) => {
            return Err(Error::MissingData(format!(
                "{what} for ring at {}",
                cell_label(range, b)
            )))
        }
        Err(e) => return Err(e),
    };

    events.push(SimEvent {
        b: Some(b),
        range_mm: Some(range),
        ..at(launch_t, EventKind::Launch)
    });
    let impact_t = launch_t + intercept.time_of_flight_s;
    let silhouette = target.silhouette();
    let (gap, hit) = match model {
        Some(m) => {
            let c = m.sample(rng);
            (
                Some(c[0].hypot(c[1])),
                silhouette.is_hit(c, m.ring_radius_mm),
            )
        }
        None => (None, false),
    };
    events.push(SimEvent {
        flight_time_s: Some(intercept.time_of_flight_s),
        gap_mm: gap,
        hit: Some(hit),
        ..at(impact_t, EventKind::Impact)
    });
    if !hit {
        let reason = if gap.is_some() {
            "off head"
        } else {
            "undetectable"
        };
        events.push(SimEvent {
            reason: Some(reason.into()),
            ..at(impact_t, EventKind::Miss)
        });
        return Ok(());
    }

    let noticed = rng.random::<f64>() < rate;
    if !noticed {
        events.push(SimEvent {
            reason: Some("not noticed".into()),
            ..at(impact_t, EventKind::Miss)
        });
        return Ok(());
    }
    let arrival = target.arrival(intercept.aim_point_mm, device.pose.pos_mm)?;
    let nearest = grids.nearest_direction(&arrival)?;
    let region = grids.response_sampler(&nearest)?.draw(rng);
    let notice_t = mean_time.map_or(impact_t, |m| (launch_t + m).max(impact_t));
    events.push(SimEvent {
        region: Some(region.label().into()),
        latency_s: mean_time,
        ..at(notice_t, EventKind::Notice)
    });
    Ok(())
}

/// One JSON object per line.
pub fn event_log(events: &[SimEvent]) -> Result<String> {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}
