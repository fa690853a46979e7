//! Sounding-signal frequency grid and capture timing.
//!
//! The simulator never samples the OFDM waveform; everything lives on the
//! tone grid. Tones are centered on the carrier with symmetric indexing:
//! `f_n = center + (n - (N - 1) / 2) * spacing`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CENTER_FREQUENCY: f64 = 3.5e9;
pub const DEFAULT_TONE_SPACING: f64 = 20e3;
pub const DEFAULT_TONE_COUNT: usize = 1841;
pub const DEFAULT_NOMINAL_BANDWIDTH: f64 = 46e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TonePlan {
    pub center_frequency: f64,
    pub tone_spacing: f64,
    pub tone_count: usize,
    /// Envelope the occupied bandwidth must fit in.
    pub nominal_bandwidth: f64,
}

impl Default for TonePlan {
    fn default() -> Self {
        TonePlan {
            center_frequency: DEFAULT_CENTER_FREQUENCY,
            tone_spacing: DEFAULT_TONE_SPACING,
            tone_count: DEFAULT_TONE_COUNT,
            nominal_bandwidth: DEFAULT_NOMINAL_BANDWIDTH,
        }
    }
}

/// Builds a tone plan against the default 46 MHz envelope.
pub fn make_tone_plan(center: f64, spacing: f64, count: usize) -> Result<TonePlan> {
    let plan = TonePlan {
        center_frequency: center,
        tone_spacing: spacing,
        tone_count: count,
        nominal_bandwidth: DEFAULT_NOMINAL_BANDWIDTH,
    };
    plan.validate()?;
    Ok(plan)
}

impl TonePlan {
    pub fn validate(&self) -> Result<()> {
        if self.tone_count < 2 {
            return Err(Error::param("tone_count", "must be at least 2"));
        }
        if !(self.tone_spacing > 0.0) || !self.tone_spacing.is_finite() {
            return Err(Error::param("tone_spacing", "must be positive"));
        }
        if !(self.nominal_bandwidth > 0.0) {
            return Err(Error::param("nominal_bandwidth", "must be positive"));
        }
        let occupied = self.occupied_bandwidth();
        if occupied > self.nominal_bandwidth {
            return Err(Error::param(
                "tone_count",
                format!(
                    "occupied bandwidth {occupied} Hz exceeds nominal {} Hz",
                    self.nominal_bandwidth
                ),
            ));
        }
        if !(self.center_frequency > occupied / 2.0) || !self.center_frequency.is_finite() {
            return Err(Error::param(
                "center_frequency",
                "must exceed half the occupied bandwidth",
            ));
        }
        Ok(())
    }

    pub fn occupied_bandwidth(&self) -> f64 {
        self.tone_count as f64 * self.tone_spacing
    }

    pub fn frequency(&self, n: usize) -> f64 {
        self.center_frequency + self.offset(n)
    }

    /// Offset of tone `n` from the carrier.
    pub fn offset(&self, n: usize) -> f64 {
        (n as f64 - (self.tone_count as f64 - 1.0) / 2.0) * self.tone_spacing
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.tone_count).map(|n| self.frequency(n)).collect()
    }

    /// CIR bin width, `1 / (N * spacing)`.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / self.occupied_bandwidth()
    }

    pub fn max_unambiguous_delay(&self) -> f64 {
        1.0 / self.tone_spacing
    }

    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.center_frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingPlan {
    /// Dwell per port, seconds.
    pub t_siso: f64,
    pub ports_per_simo: usize,
    pub simos_per_burst: usize,
    /// Bursts per second.
    pub burst_rate: f64,
}

impl Default for TimingPlan {
    fn default() -> Self {
        TimingPlan {
            t_siso: 50e-6,
            ports_per_simo: 128,
            simos_per_burst: 3,
            burst_rate: 20.0,
        }
    }
}

impl TimingPlan {
    pub fn simo_duration(&self) -> f64 {
        self.t_siso * self.ports_per_simo as f64
    }

    pub fn burst_period(&self) -> f64 {
        1.0 / self.burst_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_siso > 0.0) || !self.t_siso.is_finite() {
            return Err(Error::param("t_siso", "must be positive"));
        }
        if self.ports_per_simo == 0 {
            return Err(Error::param("ports_per_simo", "must be at least 1"));
        }
        if self.simos_per_burst == 0 {
            return Err(Error::param("simos_per_burst", "must be at least 1"));
        }
        if !(self.burst_rate > 0.0) || !self.burst_rate.is_finite() {
            return Err(Error::param("burst_rate", "must be positive"));
        }
        if self.simos_per_burst as f64 * self.simo_duration() > self.burst_period() {
            return Err(Error::param("simos_per_burst", "burst does not fit in its period"));
        }
        Ok(())
    }
}

/// Start time of every SIMO snapshot in `burst_count` bursts:
/// snapshot `j` of burst `b` starts at `b / burst_rate + j * simo_duration`.
pub fn snapshot_timestamps(timing: &TimingPlan, burst_count: usize) -> Result<Vec<f64>> {
    timing.validate()?;
    if burst_count == 0 {
        return Err(Error::param("burst_count", "must be at least 1"));
    }
    let simo = timing.simo_duration();
    let mut out = Vec::with_capacity(burst_count * timing.simos_per_burst);
    for b in 0..burst_count {
        let burst_start = b as f64 / timing.burst_rate;
        for j in 0..timing.simos_per_burst {
            out.push(burst_start + j as f64 * simo);
        }
    }
    Ok(out)
}
