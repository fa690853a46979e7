//! Cylindrical dual-polarized receive array.
//!
//! `columns` vertical linear arrays stand on a circle of `radius`; column `c`
//! faces azimuth `2*pi*c/columns` in the array frame. Each element carries a
//! V and an H port at the same phase center. Port numbering is
//! `column * rows * 2 + row * 2 + pol` with V = 0, H = 1.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    V,
    H,
}

impl Polarization {
    pub fn index(self) -> usize {
        match self {
            Polarization::V => 0,
            Polarization::H => 1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Polarization::V => Polarization::H,
            Polarization::H => Polarization::V,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortDescriptor {
    pub port_id: usize,
    pub column: usize,
    pub row: usize,
    pub polarization: Polarization,
    /// Phase center in the array frame, meters.
    pub position: Vector3<f64>,
    pub boresight_azimuth: f64,
}

/// Parametric element pattern.
///
/// Field amplitude is `cos^q_az(d_az) * cos^q_el(el)` for the forward
/// hemisphere, clamped below by the back-lobe floor. `q = 0.5` puts the
/// -3 dB points at +/-60 degrees (120 degree field of view).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternParams {
    pub q_az: f64,
    pub q_el: f64,
    /// Cross-polarization discrimination in dB; `f64::INFINITY` disables leakage.
    pub xpd_db: f64,
    /// Power floor relative to the peak, dB (negative).
    pub backlobe_floor_db: f64,
}

impl Default for PatternParams {
    fn default() -> Self {
        PatternParams {
            q_az: 0.5,
            q_el: 0.5,
            xpd_db: 12.0,
            backlobe_floor_db: -30.0,
        }
    }
}

impl PatternParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_az > 0.0) || !(self.q_el > 0.0) {
            return Err(Error::param("pattern.q_az/q_el", "must be positive"));
        }
        if !(self.xpd_db >= 0.0) {
            return Err(Error::param("pattern.xpd_db", "must be non-negative"));
        }
        if !(self.backlobe_floor_db <= 0.0) {
            return Err(Error::param("pattern.backlobe_floor_db", "must be <= 0 dB"));
        }
        Ok(())
    }

    /// Amplitude leaking from the orthogonal polarization.
    pub fn cross_leakage(&self) -> f64 {
        10f64.powf(-self.xpd_db / 20.0)
    }

    fn floor_amplitude(&self) -> f64 {
        10f64.powf(self.backlobe_floor_db / 20.0)
    }

    /// Co-polar field amplitude for an offset from boresight.
    pub fn amplitude(&self, delta_azimuth: f64, elevation: f64) -> f64 {
        let ca = delta_azimuth.cos();
        let ce = elevation.cos().max(0.0);
        let raw = if ca > 0.0 {
            ca.powf(self.q_az) * ce.powf(self.q_el)
        } else {
            0.0
        };
        raw.max(self.floor_amplitude())
    }
}

/// Construction parameters; also the scenario-config section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySpec {
    pub columns: usize,
    pub rows: usize,
    pub radius: f64,
    pub vertical_spacing: f64,
    pub pattern: PatternParams,
}

impl Default for ArraySpec {
    /// Half-wavelength arc and row spacing at 3.5 GHz.
    fn default() -> Self {
        ArraySpec {
            columns: 16,
            rows: 4,
            radius: 0.1091,
            vertical_spacing: 0.0429,
            pattern: PatternParams::default(),
        }
    }
}

impl ArraySpec {
    pub fn port_count(&self) -> usize {
        self.columns * self.rows * 2
    }

    pub fn build(&self) -> Result<ArrayGeometry> {
        build_cylindrical_array(
            self.columns,
            self.rows,
            self.radius,
            self.vertical_spacing,
            self.pattern,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub radius: f64,
    pub vertical_spacing: f64,
    pub columns: usize,
    pub rows: usize,
    pub ports: Vec<PortDescriptor>,
    pub pattern: PatternParams,
}

pub fn build_cylindrical_array(
    columns: usize,
    rows: usize,
    radius: f64,
    vertical_spacing: f64,
    pattern: PatternParams,
) -> Result<ArrayGeometry> {
    if columns == 0 {
        return Err(Error::param("columns", "must be at least 1"));
    }
    if rows == 0 {
        return Err(Error::param("rows", "must be at least 1"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::param("radius", "must be positive"));
    }
    if !(vertical_spacing >= 0.0) || !vertical_spacing.is_finite() {
        return Err(Error::param("vertical_spacing", "must be non-negative"));
    }
    pattern.validate()?;

    let mut ports = Vec::with_capacity(columns * rows * 2);
    for column in 0..columns {
        let azimuth = 2.0 * PI * column as f64 / columns as f64;
        let (s, c) = azimuth.sin_cos();
        for row in 0..rows {
            let z = (row as f64 - (rows as f64 - 1.0) / 2.0) * vertical_spacing;
            let position = Vector3::new(radius * c, radius * s, z);
            for polarization in [Polarization::V, Polarization::H] {
                ports.push(PortDescriptor {
                    port_id: ports.len(),
                    column,
                    row,
                    polarization,
                    position,
                    boresight_azimuth: azimuth,
                });
            }
        }
    }
    Ok(ArrayGeometry {
        radius,
        vertical_spacing,
        columns,
        rows,
        ports,
        pattern,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

impl ArrayGeometry {
    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn port_id(&self, column: usize, row: usize, polarization: Polarization) -> usize {
        column * self.rows * 2 + row * 2 + polarization.index()
    }

    pub fn port(&self, port_id: usize) -> Result<&PortDescriptor> {
        self.ports.get(port_id).ok_or(Error::UnknownPort(port_id))
    }

    pub fn port_phase_center(&self, port_id: usize) -> Result<Vector3<f64>> {
        Ok(self.port(port_id)?.position)
    }

    /// Complex response of `port_id` to a plane wave arriving from
    /// `direction` (array frame, pointing back toward the source) with the
    /// given `(V, H)` Jones vector.
    pub fn port_gain(&self, port_id: usize, direction: &Vector3<f64>, jones: &[Complex64; 2]) -> Result<Complex64> {
        let port = self.port(port_id)?;
        Ok(self.gain_for(port, direction, jones))
    }

    pub(crate) fn gain_for(
        &self,
        port: &PortDescriptor,
        direction: &Vector3<f64>,
        jones: &[Complex64; 2],
    ) -> Complex64 {
        let elevation = direction.z.clamp(-1.0, 1.0).asin();
        let azimuth = direction.y.atan2(direction.x);
        let amp = self
            .pattern
            .amplitude(wrap_angle(azimuth - port.boresight_azimuth), elevation);
        let pol = port.polarization;
        let co = jones[pol.index()];
        let cross = jones[pol.other().index()];
        (co + cross * self.pattern.cross_leakage()) * amp
    }

    /// Stable content hash of the construction parameters.
    pub fn content_hash(&self) -> String {
        let spec = ArraySpec {
            columns: self.columns,
            rows: self.rows,
            radius: self.radius,
            vertical_spacing: self.vertical_spacing,
            pattern: self.pattern,
        };
        crate::hash_json(&spec)
    }
}
