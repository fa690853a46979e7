//! Noise thresholding and delay gating.
//!
//! Per port, the threshold is the larger of `noise floor + noise_margin` and
//! `peak - peak_margin`. Bins under it are zeroed, then everything later than
//! the first surviving bin plus the delay gate is zeroed too.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cir::RawCir;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateConfig {
    pub noise_margin_db: f64,
    pub peak_margin_db: f64,
    /// Maximum excess delay kept after the first surviving bin, seconds.
    pub delay_gate: f64,
    /// Fraction of the delay axis, taken from its end, used for the noise floor.
    pub noise_tail_fraction: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            noise_margin_db: 6.0,
            peak_margin_db: 20.0,
            delay_gate: 2e-6,
            noise_tail_fraction: 0.2,
        }
    }
}

impl GateConfig {
    pub fn validate(&self, max_delay: f64) -> Result<()> {
        if !(self.noise_margin_db > 0.0) || !(self.peak_margin_db > 0.0) {
            return Err(Error::param("gate.margins", "must be positive"));
        }
        if !(self.delay_gate > 0.0) || !(self.delay_gate < max_delay) {
            return Err(Error::param(
                "gate.delay_gate",
                "must be positive and below the maximum unambiguous delay",
            ));
        }
        if !(self.noise_tail_fraction > 0.0 && self.noise_tail_fraction <= 1.0) {
            return Err(Error::param("gate.noise_tail_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Thresholded and gated CIR `h_k(tau)` together with its source.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedCir {
    pub raw: RawCir,
    pub h: Vec<Complex64>,
    /// Linear noise-floor power per port.
    pub noise_floor: Vec<f64>,
    /// Applied threshold `P_lambda` per port, linear power.
    pub threshold: Vec<f64>,
    /// First surviving bin per port; `None` marks an empty port.
    pub first_bin: Vec<Option<usize>>,
}

impl GatedCir {
    pub fn port_count(&self) -> usize {
        self.raw.port_count
    }

    pub fn bin_count(&self) -> usize {
        self.raw.bin_count
    }

    pub fn delay_resolution(&self) -> f64 {
        self.raw.delay_resolution
    }

    pub fn port(&self, k: usize) -> &[Complex64] {
        let n = self.raw.bin_count;
        &self.h[k * n..(k + 1) * n]
    }

    pub fn port_energy(&self, k: usize) -> f64 {
        self.port(k).iter().map(|v| v.norm_sqr()).sum()
    }

    /// Ports with no surviving bin.
    pub fn empty_ports(&self) -> Vec<usize> {
        self.first_bin
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_none())
            .map(|(k, _)| k)
            .collect()
    }
}

pub fn threshold_and_gate(raw: &RawCir, gate: &GateConfig) -> Result<GatedCir> {
    let n = raw.bin_count;
    if n == 0 || raw.port_count == 0 {
        return Err(Error::param("cir", "must be nonempty"));
    }
    gate.validate(n as f64 * raw.delay_resolution)?;
    let tail = ((n as f64 * gate.noise_tail_fraction).ceil() as usize).clamp(1, n);
    let gate_bins = gate.delay_gate / raw.delay_resolution;
    let noise_gain = 10f64.powf(gate.noise_margin_db / 10.0);
    let peak_gain = 10f64.powf(-gate.peak_margin_db / 10.0);

    let mut h = raw.h.clone();
    let mut noise_floor = Vec::with_capacity(raw.port_count);
    let mut threshold = Vec::with_capacity(raw.port_count);
    let mut first_bin = Vec::with_capacity(raw.port_count);
    for k in 0..raw.port_count {
        let row = &mut h[k * n..(k + 1) * n];
        let power: Vec<f64> = row.iter().map(|v| v.norm_sqr()).collect();
        let floor = power[n - tail..].iter().sum::<f64>() / tail as f64;
        let peak = power.iter().copied().fold(0.0, f64::max);
        let p_lambda = (floor * noise_gain).max(peak * peak_gain);
        let mut first = None;
        for (m, v) in row.iter_mut().enumerate() {
            let keep = power[m] > 0.0 && power[m] >= p_lambda;
            if !keep {
                *v = Complex64::new(0.0, 0.0);
                continue;
            }
            match first {
                None => first = Some(m),
                Some(f) if (m - f) as f64 > gate_bins => *v = Complex64::new(0.0, 0.0),
                Some(_) => {}
            }
        }
        if first.is_none() {
            log::warn!("port {k} has no bin above threshold");
        }
        noise_floor.push(floor);
        threshold.push(p_lambda);
        first_bin.push(first);
    }
    Ok(GatedCir {
        raw: raw.clone(),
        h,
        noise_floor,
        threshold,
        first_bin,
    })
}
