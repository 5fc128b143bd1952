//! Device configuration files.
//!
//! ```json
//! {"n": 5, "speaker_diameter_mm": 51.5, "max_displacement_mm": 8.2,
//!  "formation_number": 4.03, "aperture_mm": 30.0,
//!  "velocity_calibration": {"0.001": 568.83, "1": 2032.2}}
//! ```
//!
//! Optional fields fall back to the physics defaults. Without
//! `aperture_mm` the aperture is sized from the formation number.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::physics::{
    design_aperture, ring_momentum, AirProperties, NozzleSpec, RingState, SpeakerSpec,
    DEFAULT_AIR_DENSITY, DEFAULT_RING_RADIUS_MM, DEFAULT_RING_SPEED_M_S,
};
use crate::waveform::PistonCalibration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub n: u32,
    pub speaker_diameter_mm: f64,
    pub max_displacement_mm: f64,
    pub formation_number: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub air_density_kg_m3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_speed_m_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_radius_mm: Option<f64>,
    /// Peak piston velocity (mm/s) keyed by roundness written as a string.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub velocity_calibration: BTreeMap<String, f64>,
}

impl Default for DeviceSpec {
    /// Five 51.5 mm speakers behind a 30 mm aperture.
    fn default() -> Self {
        Self {
            n: 5,
            speaker_diameter_mm: 51.5,
            max_displacement_mm: 8.2,
            formation_number: 4.03,
            aperture_mm: Some(30.0),
            air_density_kg_m3: None,
            ring_speed_m_s: None,
            ring_radius_mm: None,
            velocity_calibration: BTreeMap::new(),
        }
    }
}

impl DeviceSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let spec: Self = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.speakers(0.0)?;
        require_positive("formation number", self.formation_number)?;
        if let Some(d) = self.aperture_mm {
            require_positive("aperture", d)?;
        }
        require_positive("air density", self.air_density())?;
        require_positive("ring speed", self.ring_speed_m_s())?;
        require_positive("ring radius", self.ring_radius_mm())?;
        self.calibration()?;
        Ok(())
    }

    pub fn speakers(&self, peak_velocity_mm_s: f64) -> Result<SpeakerSpec> {
        SpeakerSpec::new(
            self.n,
            self.speaker_diameter_mm,
            self.max_displacement_mm,
            peak_velocity_mm_s,
        )
    }

    pub fn nozzle(&self) -> Result<NozzleSpec> {
        match self.aperture_mm {
            Some(d) => NozzleSpec::from_aperture(d, self.formation_number),
            None => Ok(design_aperture(&self.speakers(0.0)?, self.formation_number)?.nozzle),
        }
    }

    pub fn air(&self) -> AirProperties {
        AirProperties {
            density_kg_m3: self.air_density(),
        }
    }

    fn air_density(&self) -> f64 {
        self.air_density_kg_m3.unwrap_or(DEFAULT_AIR_DENSITY)
    }

    pub fn ring_speed_m_s(&self) -> f64 {
        self.ring_speed_m_s.unwrap_or(DEFAULT_RING_SPEED_M_S)
    }

    pub fn ring_radius_mm(&self) -> f64 {
        self.ring_radius_mm.unwrap_or(DEFAULT_RING_RADIUS_MM)
    }

    /// The configured table, or the bundled one when none is given.
    pub fn calibration(&self) -> Result<PistonCalibration> {
        if self.velocity_calibration.is_empty() {
            return Ok(PistonCalibration::default());
        }
        let points = self
            .velocity_calibration
            .iter()
            .map(|(k, &v)| {
                let b = k.trim().parse::<f64>().map_err(|_| {
                    Error::invalid(format!("calibration key {k:?} is not a number"))
                })?;
                Ok((b, v))
            })
            .collect::<Result<Vec<_>>>()?;
        PistonCalibration::new(points, PistonCalibration::default().displacement_span_mm)
    }

    /// Ring launched with the drive rounded by `b`.
    pub fn ring_state(&self, b: f64) -> Result<RingState> {
        let u_p = self.calibration()?.peak_velocity(b)?;
        let mut ring = ring_momentum(&self.speakers(u_p)?, &self.nozzle()?, &self.air())?;
        ring.ring_radius_mm = self.ring_radius_mm();
        ring.translation_speed_m_s = self.ring_speed_m_s();
        Ok(ring)
    }
}
