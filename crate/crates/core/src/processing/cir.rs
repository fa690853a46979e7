//! Transfer function to channel impulse response.
//!
//! A unitary inverse DFT runs over the tone axis of every port, so delay bin
//! `m` sits at `m / (N * spacing)` and energy is preserved. Off-grid delays
//! spread over neighbouring bins (scalloping); a Hann window trades main-lobe
//! width for lower sidelobes but breaks the energy identity.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibratedResponse;
use crate::error::{Error, Result};
use crate::waveform::TonePlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rect,
    Hann,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hann => {
                if n < 2 {
                    return vec![1.0; n];
                }
                (0..n)
                    .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
                    .collect()
            }
        }
    }
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rect" => Ok(Window::Rect),
            "hann" => Ok(Window::Hann),
            other => Err(format!("unknown window `{other}` (expected rect or hann)")),
        }
    }
}

/// Raw CIR `h'_k(tau)` of every port, port-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCir {
    pub port_count: usize,
    pub bin_count: usize,
    /// Seconds per delay bin.
    pub delay_resolution: f64,
    pub h: Vec<Complex64>,
}

impl RawCir {
    pub fn port(&self, k: usize) -> &[Complex64] {
        &self.h[k * self.bin_count..(k + 1) * self.bin_count]
    }

    pub fn delay(&self, bin: usize) -> f64 {
        bin as f64 * self.delay_resolution
    }
}

pub fn cir_from_tf(response: &CalibratedResponse, tones: &TonePlan, window: Window) -> Result<RawCir> {
    if response.tone_count != tones.tone_count {
        return Err(Error::DimensionMismatch(format!(
            "response has {} tones, plan has {}",
            response.tone_count, tones.tone_count
        )));
    }
    Ok(transform(
        &response.h_f,
        response.port_count,
        tones.tone_count,
        tones.delay_resolution(),
        window,
    ))
}

/// Same as [`cir_from_tf`] for an explicit frequency list, which must be
/// uniformly spaced.
pub fn cir_from_grid(frequencies: &[f64], h_f: &[Complex64], window: Window) -> Result<RawCir> {
    let n = frequencies.len();
    if n < 2 {
        return Err(Error::param("frequencies", "need at least two tones"));
    }
    if !h_f.len().is_multiple_of(n) {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not tile {n} tones",
            h_f.len()
        )));
    }
    let spacing = (frequencies[n - 1] - frequencies[0]) / (n - 1) as f64;
    if !(spacing > 0.0) {
        return Err(Error::NonUniformGrid(1));
    }
    for i in 1..n {
        let step = frequencies[i] - frequencies[i - 1];
        if (step - spacing).abs() > 1e-6 * spacing {
            return Err(Error::NonUniformGrid(i));
        }
    }
    Ok(transform(h_f, h_f.len() / n, n, 1.0 / (n as f64 * spacing), window))
}

fn transform(h_f: &[Complex64], ports: usize, n: usize, resolution: f64, window: Window) -> RawCir {
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let w = window.coefficients(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut h: Vec<Complex64> = h_f.iter().enumerate().map(|(i, v)| v * w[i % n] * scale).collect();
    if !h.is_empty() {
        fft.process(&mut h);
    }
    RawCir {
        port_count: ports,
        bin_count: n,
        delay_resolution: resolution,
        h,
    }
}
