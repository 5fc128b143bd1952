//! Boresight geometry between a generator and a head.
//!
//! Orientation uses Z-Y-X intrinsic Euler angles (yaw, pitch, roll) in
//! degrees; at zero rotation the aperture points along +X. Positions are in
//! millimetres, velocities in mm/s.

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

pub const DEFAULT_TOLERANCE_MM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvrgPose {
    pub pos_mm: [f64; 3],
    /// yaw, pitch, roll
    pub euler_deg: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadState {
    pub pos_mm: [f64; 3],
    #[serde(default)]
    pub vel_mm_s: [f64; 3],
}

/// JSON layout: `{"avrg": {"pos_mm", "euler_deg"}, "head": {"pos_mm", "vel_mm_s"}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseState {
    pub avrg: AvrgPose,
    pub head: HeadState,
}

impl PoseState {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .avrg
            .pos_mm
            .iter()
            .chain(&self.avrg.euler_deg)
            .chain(&self.head.pos_mm)
            .chain(&self.head.vel_mm_s);
        if all.into_iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("pose contains non-finite values"))
        }
    }

    fn avrg_position(&self) -> Vector3<f64> {
        Vector3::from(self.avrg.pos_mm)
    }

    fn head_position(&self) -> Vector3<f64> {
        Vector3::from(self.head.pos_mm)
    }

    fn head_velocity(&self) -> Vector3<f64> {
        Vector3::from(self.head.vel_mm_s)
    }
}

/// Arrival direction on the head: `theta` is the horizontal angle in
/// [0, 360) and `phi` the elevation in [−90, 90], both in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionSpec {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl DirectionSpec {
    /// Wraps `theta` into [0, 360), so 360° and 0° name the same direction.
    pub fn new(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        if !theta_deg.is_finite() || !phi_deg.is_finite() {
            return Err(Error::invalid("direction angles must be finite"));
        }
        if !(-90.0..=90.0).contains(&phi_deg) {
            return Err(Error::OutOfRange(format!(
                "elevation {phi_deg} outside [-90, 90]"
            )));
        }
        let mut theta = theta_deg.rem_euclid(360.0);
        if theta >= 360.0 {
            theta = 0.0;
        }
        Ok(Self {
            theta_deg: theta,
            phi_deg,
        })
    }

    /// Angle between two directions on the unit sphere, degrees.
    pub fn separation_deg(&self, other: &DirectionSpec) -> f64 {
        let a = self.unit();
        let b = other.unit();
        a.dot(&b).clamp(-1.0, 1.0).acos().to_degrees()
    }

    fn unit(&self) -> Vector3<f64> {
        let (t, p) = (self.theta_deg.to_radians(), self.phi_deg.to_radians());
        Vector3::new(p.cos() * t.cos(), p.cos() * t.sin(), p.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub off_axis_distance_mm: f64,
    pub boresight_angle_deg: f64,
    pub aligned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intercept {
    pub aim_point_mm: [f64; 3],
    pub time_of_flight_s: f64,
}

fn rotation(euler_deg: [f64; 3]) -> Rotation3<f64> {
    let [yaw, pitch, roll] = euler_deg.map(f64::to_radians);
    Rotation3::from_euler_angles(roll, pitch, yaw)
}

/// Unit vector along the aperture boresight.
pub fn aperture_normal(euler_deg: [f64; 3]) -> [f64; 3] {
    let n = rotation(euler_deg) * Vector3::x();
    n.normalize().into()
}

/// Yaw and pitch (degrees) that point the boresight along `direction`.
/// Roll is unobservable from a single direction.
pub fn euler_from_direction(direction: [f64; 3]) -> Result<(f64, f64)> {
    let v = Vector3::from(direction);
    let norm = v.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::DegenerateGeometry("zero-length direction".into()));
    }
    let v = v / norm;
    let yaw = v.y.atan2(v.x).to_degrees();
    let pitch = (-v.z).clamp(-1.0, 1.0).asin().to_degrees();
    // Adding zero folds -0.0 into 0.0.
    Ok((yaw + 0.0, pitch + 0.0))
}

/// Perpendicular miss distance of the boresight ray and the angle off it.
/// The head must sit in front of the aperture to count as aligned; the
/// tolerance boundary is inclusive.
pub fn check_alignment(pose: &PoseState, tolerance_mm: f64) -> Result<AlignmentResult> {
    pose.validate()?;
    require_positive("tolerance", tolerance_mm)?;
    let to_head = pose.head_position() - pose.avrg_position();
    let range = to_head.norm();
    if range == 0.0 {
        return Err(Error::DegenerateGeometry(
            "head coincides with the generator".into(),
        ));
    }
    let normal = Vector3::from(aperture_normal(pose.avrg.euler_deg));
    let along = normal.dot(&to_head);
    let off_axis = (to_head - normal * along).norm();
    let angle = (along / range).clamp(-1.0, 1.0).acos().to_degrees();
    Ok(AlignmentResult {
        off_axis_distance_mm: off_axis,
        boresight_angle_deg: angle,
        aligned: along > 0.0 && off_axis <= tolerance_mm,
    })
}

/// Earliest time at which a ring launched now at `ring_speed_m_s` meets
/// the head moving at constant velocity, and where.
pub fn solve_intercept(pose: &PoseState, ring_speed_m_s: f64) -> Result<Intercept> {
    pose.validate()?;
    require_positive("ring speed", ring_speed_m_s)?;
    let speed = ring_speed_m_s * 1e3;
    let rel = pose.head_position() - pose.avrg_position();
    let vel = pose.head_velocity();
    let range = rel.norm();
    if range == 0.0 {
        return Err(Error::DegenerateGeometry(
            "head coincides with the generator".into(),
        ));
    }
    let head_speed = vel.norm();
    if head_speed >= speed {
        return Err(Error::NoIntercept(format!(
            "head speed {head_speed:.1} mm/s is not below ring speed {speed:.1} mm/s"
        )));
    }

    let t = if head_speed == 0.0 {
        range / speed
    } else {
        // (|v|² − s²) t² + 2 (r·v) t + |r|² = 0 with a < 0 < c has exactly one
        // positive root.
        let a = vel.norm_squared() - speed * speed;
        let half_b = rel.dot(&vel);
        let c = rel.norm_squared();
        let disc = half_b * half_b - a * c;
        if disc < 0.0 {
            return Err(Error::NoIntercept("no real intercept time".into()));
        }
        // c / q form avoids cancellation when half_b dominates.
        let q = -(half_b + half_b.signum() * disc.sqrt());
        let roots = if q == 0.0 {
            [(-c / a).sqrt(), f64::NAN]
        } else {
            [q / a, c / q]
        };
        roots
            .into_iter()
            .filter(|t| t.is_finite() && *t > 0.0)
            .fold(f64::INFINITY, f64::min)
    };
    if !t.is_finite() {
        return Err(Error::NoIntercept("no positive intercept time".into()));
    }
    let aim = rel + vel * t + pose.avrg_position();
    Ok(Intercept {
        aim_point_mm: aim.into(),
        time_of_flight_s: t,
    })
}
