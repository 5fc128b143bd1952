//! Slug-model design equations for a speaker-driven vortex ring generator.
//!
//! `n` pistons of diameter `D` each displace `δ`, pushing a slug of air of
//! length `L` through an aperture of diameter `d`. Volume and flow
//! conservation tie the geometry together, and the formation number `f`
//! bounds the slug length-to-diameter ratio `L/d` for a clean ring.
//!
//! Geometry is taken in millimetres; momentum is reported in SI units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};

/// Formation number band over which a ring forms without a trailing jet.
pub const FORMATION_NUMBER_RANGE: (f64, f64) = (3.6, 4.5);
pub const DEFAULT_FORMATION_NUMBER: f64 = 4.03;
/// Dry air at 20 °C.
pub const DEFAULT_AIR_DENSITY: f64 = 1.204;
pub const DEFAULT_RING_RADIUS_MM: f64 = 50.0;
pub const DEFAULT_RING_SPEED_M_S: f64 = 0.72;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakerSpec {
    pub count: u32,
    pub piston_diameter_mm: f64,
    pub max_displacement_mm: f64,
    pub peak_velocity_mm_s: f64,
}

impl SpeakerSpec {
    pub fn new(
        count: u32,
        piston_diameter_mm: f64,
        max_displacement_mm: f64,
        peak_velocity_mm_s: f64,
    ) -> Result<Self> {
        let spec = Self {
            count,
            piston_diameter_mm,
            max_displacement_mm,
            peak_velocity_mm_s,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("speaker count must be at least 1"));
        }
        require_positive("piston diameter", self.piston_diameter_mm)?;
        require_positive("max displacement", self.max_displacement_mm)?;
        require_non_negative("peak velocity", self.peak_velocity_mm_s)?;
        Ok(())
    }

    /// Swept area of all pistons, mm².
    fn piston_area_mm2(&self) -> f64 {
        f64::from(self.count) * PI * self.piston_diameter_mm.powi(2) / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NozzleSpec {
    pub aperture_diameter_mm: f64,
    pub formation_number: f64,
    pub slug_length_mm: f64,
}

impl NozzleSpec {
    /// Nozzle of a fixed aperture with the slug length implied by `f`.
    pub fn from_aperture(aperture_diameter_mm: f64, formation_number: f64) -> Result<Self> {
        require_positive("aperture diameter", aperture_diameter_mm)?;
        require_positive("formation number", formation_number)?;
        Ok(Self {
            aperture_diameter_mm,
            formation_number,
            slug_length_mm: formation_number * aperture_diameter_mm,
        })
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("aperture diameter", self.aperture_diameter_mm)?;
        require_positive("formation number", self.formation_number)?;
        require_positive("slug length", self.slug_length_mm)?;
        Ok(())
    }

    fn aperture_area_mm2(&self) -> f64 {
        PI * self.aperture_diameter_mm.powi(2) / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirProperties {
    pub density_kg_m3: f64,
}

impl Default for AirProperties {
    fn default() -> Self {
        Self {
            density_kg_m3: DEFAULT_AIR_DENSITY,
        }
    }
}

impl AirProperties {
    pub fn new(density_kg_m3: f64) -> Result<Self> {
        require_positive("air density", density_kg_m3)?;
        Ok(Self { density_kg_m3 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingState {
    pub momentum_kg_m_s: f64,
    pub exit_velocity_m_s: f64,
    pub ring_radius_mm: f64,
    pub translation_speed_m_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationReport {
    pub piston_volume_mm3: f64,
    pub exit_volume_mm3: f64,
    pub piston_flow_mm3_s: f64,
    pub exit_flow_mm3_s: f64,
    pub length_ratio: f64,
    /// |V_p − V_exit| / V_p
    pub volume_residual: f64,
    /// |Q_p − Q_exit| / Q_p, zero when the pistons are at rest.
    pub flow_residual: f64,
}

/// Result of sizing an aperture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureDesign {
    pub nozzle: NozzleSpec,
    /// Set when `f` lies outside [`FORMATION_NUMBER_RANGE`].
    pub formation_warning: bool,
}

pub fn formation_number_in_range(f: f64) -> bool {
    (FORMATION_NUMBER_RANGE.0..=FORMATION_NUMBER_RANGE.1).contains(&f)
}

/// Sizes the aperture so that one full stroke ejects a slug of `L/d = f`.
pub fn design_aperture(speakers: &SpeakerSpec, formation_number: f64) -> Result<ApertureDesign> {
    speakers.validate()?;
    require_positive("formation number", formation_number)?;
    let d = (f64::from(speakers.count)
        * speakers.max_displacement_mm
        * speakers.piston_diameter_mm.powi(2)
        / formation_number)
        .cbrt();
    Ok(ApertureDesign {
        nozzle: NozzleSpec {
            aperture_diameter_mm: d,
            formation_number,
            slug_length_mm: formation_number * d,
        },
        formation_warning: !formation_number_in_range(formation_number),
    })
}

/// Piston displacement needed for a given aperture and formation number.
pub fn inverse_displacement(
    count: u32,
    piston_diameter_mm: f64,
    aperture_diameter_mm: f64,
    formation_number: f64,
) -> Result<f64> {
    if count == 0 {
        return Err(Error::invalid("speaker count must be at least 1"));
    }
    require_positive("piston diameter", piston_diameter_mm)?;
    require_positive("aperture diameter", aperture_diameter_mm)?;
    require_positive("formation number", formation_number)?;
    Ok(formation_number * aperture_diameter_mm.powi(3)
        / (f64::from(count) * piston_diameter_mm.powi(2)))
}

/// Flow speed through the aperture, m/s.
pub fn exit_velocity(speakers: &SpeakerSpec, nozzle: &NozzleSpec) -> Result<f64> {
    speakers.validate()?;
    nozzle.validate()?;
    let area_ratio = f64::from(speakers.count) * speakers.piston_diameter_mm.powi(2)
        / nozzle.aperture_diameter_mm.powi(2);
    Ok(area_ratio * speakers.peak_velocity_mm_s * 1e-3)
}

/// Impulse carried by the ring, `I = π/4 · ρ · n · f · d · D² · U_p`.
pub fn ring_momentum(
    speakers: &SpeakerSpec,
    nozzle: &NozzleSpec,
    air: &AirProperties,
) -> Result<RingState> {
    require_positive("air density", air.density_kg_m3)?;
    let exit_velocity_m_s = exit_velocity(speakers, nozzle)?;
    let d_m = nozzle.aperture_diameter_mm * 1e-3;
    let piston_d_m = speakers.piston_diameter_mm * 1e-3;
    let u_p = speakers.peak_velocity_mm_s * 1e-3;
    let momentum = 0.25
        * PI
        * air.density_kg_m3
        * f64::from(speakers.count)
        * nozzle.formation_number
        * d_m
        * piston_d_m
        * piston_d_m
        * u_p;
    Ok(RingState {
        momentum_kg_m_s: momentum,
        exit_velocity_m_s,
        ring_radius_mm: DEFAULT_RING_RADIUS_MM,
        translation_speed_m_s: DEFAULT_RING_SPEED_M_S,
    })
}

/// Evaluates both sides of the volume and flow balances.
pub fn derivation_report(speakers: &SpeakerSpec, nozzle: &NozzleSpec) -> Result<DerivationReport> {
    speakers.validate()?;
    nozzle.validate()?;
    let piston_area = speakers.piston_area_mm2();
    let aperture_area = nozzle.aperture_area_mm2();
    let exit_velocity_mm_s = exit_velocity(speakers, nozzle)? * 1e3;

    let piston_volume = piston_area * speakers.max_displacement_mm;
    let exit_volume = aperture_area * nozzle.slug_length_mm;
    let piston_flow = piston_area * speakers.peak_velocity_mm_s;
    let exit_flow = aperture_area * exit_velocity_mm_s;

    let flow_residual = if piston_flow > 0.0 {
        (piston_flow - exit_flow).abs() / piston_flow
    } else {
        exit_flow.abs()
    };

    Ok(DerivationReport {
        piston_volume_mm3: piston_volume,
        exit_volume_mm3: exit_volume,
        piston_flow_mm3_s: piston_flow,
        exit_flow_mm3_s: exit_flow,
        length_ratio: f64::from(speakers.count)
            * speakers.max_displacement_mm
            * speakers.piston_diameter_mm.powi(2)
            / nozzle.aperture_diameter_mm.powi(3),
        volume_residual: (piston_volume - exit_volume).abs() / piston_volume,
        flow_residual,
    })
}
