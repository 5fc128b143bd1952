//! Speaker drive waveforms.
//!
//! A square pulse is softened by a one-pole low-pass
//! `y[k] = b·x[k] + (1 − b)·y[k−1]`. The roundness coefficient `b` trades
//! ejection noise against piston speed: `b = 1` passes the square wave
//! through untouched, small `b` gives a slow, quiet rise.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 48_000;
pub const DEFAULT_AMPLITUDE_V: f64 = 10.0;

/// Roundness coefficients at which the piston velocity was measured.
pub const CALIBRATED_ROUNDNESS: [f64; 5] = [0.001, 0.002, 0.003, 0.004, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveWaveform {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
    pub amplitude: f64,
    pub pulse_length_s: f64,
    pub roundness: f64,
}

impl DriveWaveform {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }
}

pub fn validate_roundness(b: f64) -> Result<f64> {
    if b.is_finite() && b > 0.0 && b <= 1.0 {
        Ok(b)
    } else {
        Err(Error::OutOfRange(format!("roundness {b} outside (0, 1]")))
    }
}

fn pulse_samples(pulse_length_s: f64, sample_rate: u32) -> Result<usize> {
    require_positive("pulse length", pulse_length_s)?;
    if sample_rate == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let n = (pulse_length_s * f64::from(sample_rate)).round();
    if n < 1.0 {
        return Err(Error::invalid(format!(
            "pulse of {pulse_length_s} s is shorter than one sample at {sample_rate} Hz"
        )));
    }
    Ok(n as usize)
}

/// A single rectangular pulse with as many silent samples before and after
/// it as the pulse itself is long.
pub fn square_pulse(
    amplitude: f64,
    pulse_length_s: f64,
    sample_rate: u32,
) -> Result<DriveWaveform> {
    pulse_train(amplitude, pulse_length_s, sample_rate, 1, pulse_length_s)
}

/// `count` pulses whose onsets are `interval_s` apart, padded like
/// [`square_pulse`].
pub fn pulse_train(
    amplitude: f64,
    pulse_length_s: f64,
    sample_rate: u32,
    count: u32,
    interval_s: f64,
) -> Result<DriveWaveform> {
    require_non_negative("amplitude", amplitude)?;
    let width = pulse_samples(pulse_length_s, sample_rate)?;
    if count == 0 {
        return Err(Error::invalid("pulse count must be at least 1"));
    }
    let period = if count > 1 {
        require_positive("pulse interval", interval_s)?;
        let period = (interval_s * f64::from(sample_rate)).round() as usize;
        if period < width {
            return Err(Error::invalid(format!(
                "pulse interval {interval_s} s is shorter than the pulse"
            )));
        }
        period
    } else {
        width
    };

    let pad = width;
    let len = pad + period * (count as usize - 1) + width + pad;
    let mut samples = vec![0.0; len];
    for i in 0..count as usize {
        let start = pad + i * period;
        samples[start..start + width].fill(amplitude);
    }
    Ok(DriveWaveform {
        sample_rate,
        samples,
        amplitude,
        pulse_length_s,
        roundness: 1.0,
    })
}

/// Runs the rounding filter from rest.
pub fn apply_rounding(input: &DriveWaveform, b: f64) -> Result<DriveWaveform> {
    let samples = round_samples(&input.samples, b)?;
    Ok(DriveWaveform {
        samples,
        roundness: b,
        ..input.clone()
    })
}

pub fn round_samples(x: &[f64], b: f64) -> Result<Vec<f64>> {
    validate_roundness(b)?;
    if b == 1.0 {
        return Ok(x.to_vec());
    }
    let keep = 1.0 - b;
    let mut prev = 0.0;
    Ok(x.iter()
        .map(|&v| {
            prev = b * v + keep * prev;
            prev
        })
        .collect())
}

/// Steady-state gain of the rounding filter, `H(z = 1)`.
pub fn dc_gain(b: f64) -> Result<f64> {
    validate_roundness(b)?;
    Ok(b / (1.0 - (1.0 - b)))
}

/// Peak membrane velocity per roundness coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PistonCalibration {
    points: Vec<(f64, f64)>,
    pub displacement_span_mm: f64,
}

impl Default for PistonCalibration {
    fn default() -> Self {
        Self {
            points: vec![
                (0.001, 568.83),
                (0.002, 892.97),
                (0.003, 1139.30),
                (0.004, 1321.72),
                (1.0, 2032.20),
            ],
            displacement_span_mm: 8.6,
        }
    }
}

impl PistonCalibration {
    pub fn new(mut points: Vec<(f64, f64)>, displacement_span_mm: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("calibration table is empty"));
        }
        for &(b, v) in &points {
            validate_roundness(b)?;
            require_non_negative("calibrated velocity", v)?;
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in points.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::invalid(format!(
                    "duplicate calibration point b={}",
                    pair[0].0
                )));
            }
            if pair[1].1 <= pair[0].1 {
                return Err(Error::invalid(
                    "calibrated velocity must strictly increase with roundness",
                ));
            }
        }
        require_positive("displacement span", displacement_span_mm)?;
        Ok(Self {
            points,
            displacement_span_mm,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Exact at calibrated points, log-linear in `b` between them.
    pub fn peak_velocity(&self, b: f64) -> Result<f64> {
        validate_roundness(b)?;
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if b < first.0 || b > last.0 {
            return Err(Error::OutOfRange(format!(
                "roundness {b} outside calibrated range [{}, {}]",
                first.0, last.0
            )));
        }
        if let Some(&(_, v)) = self.points.iter().find(|p| p.0 == b) {
            return Ok(v);
        }
        let upper = self
            .points
            .iter()
            .position(|p| p.0 > b)
            .expect("b inside hull");
        let (b0, v0) = self.points[upper - 1];
        let (b1, v1) = self.points[upper];
        let t = (b.ln() - b0.ln()) / (b1.ln() - b0.ln());
        Ok(v0 + t * (v1 - v0))
    }
}

pub fn peak_piston_velocity(b: f64, calibration: &PistonCalibration) -> Result<f64> {
    calibration.peak_velocity(b)
}

/// Encodes a mono 16-bit PCM RIFF/WAVE image.
pub fn encode_wav(w: &DriveWaveform) -> Result<Vec<u8>> {
    if w.sample_rate == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    require_non_negative("amplitude", w.amplitude)?;
    let data_len = u32::try_from(w.samples.len() * 2)
        .map_err(|_| Error::invalid("waveform too long for a RIFF file"))?;

    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());

    for &v in &w.samples {
        out.extend_from_slice(&pcm16(v, w.amplitude)?.to_le_bytes());
    }
    Ok(out)
}

fn pcm16(v: f64, amplitude: f64) -> Result<i16> {
    if !v.is_finite() {
        return Err(Error::invalid("non-finite sample"));
    }
    if amplitude == 0.0 {
        if v != 0.0 {
            return Err(Error::invalid(
                "non-zero sample in a zero-amplitude waveform",
            ));
        }
        return Ok(0);
    }
    // Tolerate rounding noise at the rails.
    if v.abs() > amplitude * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "sample {v} exceeds amplitude {amplitude}"
        )));
    }
    Ok((v / amplitude * 32767.0).round().clamp(-32767.0, 32767.0) as i16)
}

/// Writes the waveform as a WAV file. The file appears atomically: it is
/// written next to `path` under a temporary name and renamed into place.
pub fn export_pcm(w: &DriveWaveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_wav(w)?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::file(dir, e))?;
    tmp.write_all(&bytes).map_err(|e| Error::file(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::file(path, e))?;
    tmp.persist(path).map_err(|e| Error::file(path, e.error))?;
    Ok(())
}
