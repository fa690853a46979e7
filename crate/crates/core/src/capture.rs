//! Receiver-chain and fast-switching capture emulation.
//!
//! One shared downconversion chain is multiplexed over all ports, so a port's
//! measured response is `chain(f) * g_port * drift * (antenna + channel)`.
//! Back-to-back (B2B) records replace the antenna and channel with a cable
//! and an attenuator.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::ArrayGeometry;
use crate::channel::{PathSet, Scene, TxPose};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::waveform::TonePlan;
use crate::SPEED_OF_LIGHT;

/// Parameters from which a [`SystemResponse`] is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub seed: u64,
    /// Peak magnitude ripple of the shared chain, dB.
    pub chain_ripple_db: f64,
    /// Peak phase ripple of the shared chain, degrees.
    pub chain_phase_ripple_deg: f64,
    /// Per-port switch-path gains are drawn uniformly within +/- this, dB.
    pub port_gain_spread_db: f64,
    pub drift: DriftParams,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            seed: 7,
            chain_ripple_db: 1.5,
            chain_phase_ripple_deg: 20.0,
            port_gain_spread_db: 2.0,
            drift: DriftParams::default(),
        }
    }
}

/// Snapshot-to-snapshot jitter of the whole receiver.
///
/// Each snapshot draws an independent amplitude factor
/// `10^(sigma_a * n / 20)` and phase rotation `sigma_phi * n'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftParams {
    pub amplitude_jitter_db: f64,
    pub phase_jitter_deg: f64,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams {
            amplitude_jitter_db: 0.0071,
            phase_jitter_deg: 0.6,
        }
    }
}

impl DriftParams {
    pub const NONE: DriftParams = DriftParams {
        amplitude_jitter_db: 0.0,
        phase_jitter_deg: 0.0,
    };

    pub fn factor(&self, seed: u64, snapshot_index: u64) -> Complex64 {
        let a = if self.amplitude_jitter_db == 0.0 {
            0.0
        } else {
            self.amplitude_jitter_db * rng::normal(seed, Domain::Drift, &[0, snapshot_index])
        };
        let p = if self.phase_jitter_deg == 0.0 {
            0.0
        } else {
            self.phase_jitter_deg.to_radians() * rng::normal(seed, Domain::Drift, &[1, snapshot_index])
        };
        Complex64::from_polar(10f64.powf(a / 20.0), p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemResponse {
    /// Shared chain response per tone.
    pub common_chain: Vec<Complex64>,
    pub per_port_gain: Vec<Complex64>,
    pub drift: DriftParams,
}

impl SystemResponse {
    pub fn ideal(tone_count: usize, port_count: usize) -> Self {
        SystemResponse {
            common_chain: vec![Complex64::new(1.0, 0.0); tone_count],
            per_port_gain: vec![Complex64::new(1.0, 0.0); port_count],
            drift: DriftParams::NONE,
        }
    }

    /// Smooth seeded ripple across the band and random switch-path gains.
    pub fn generate(params: &SystemParams, tone_count: usize, port_count: usize) -> Result<Self> {
        if !(0.0..=3.0).contains(&params.port_gain_spread_db) {
            return Err(Error::param("system.port_gain_spread_db", "must lie in [0, 3] dB"));
        }
        if !(params.chain_ripple_db >= 0.0) || !(params.chain_phase_ripple_deg >= 0.0) {
            return Err(Error::param("system.chain_ripple", "must be non-negative"));
        }
        if !(params.drift.amplitude_jitter_db >= 0.0) || !(params.drift.phase_jitter_deg >= 0.0) {
            return Err(Error::param("system.drift", "must be non-negative"));
        }
        const HARMONICS: usize = 4;
        let mut shape = rng::stream(params.seed, Domain::ChainShape, &[]);
        let mut draw_series = || -> Vec<(f64, f64)> {
            (0..HARMONICS)
                .map(|_| (shape.random::<f64>(), 2.0 * PI * shape.random::<f64>()))
                .collect()
        };
        let mag_terms = draw_series();
        let phase_terms = draw_series();
        let eval = |terms: &[(f64, f64)], x: f64| -> f64 {
            let total: f64 = terms.iter().map(|t| t.0).sum();
            let s: f64 = terms
                .iter()
                .enumerate()
                .map(|(m, (w, ph))| w * (PI * (m + 1) as f64 * x + ph).cos())
                .sum();
            s / total
        };
        let denom = (tone_count.max(2) - 1) as f64;
        let common_chain = (0..tone_count)
            .map(|n| {
                let x = n as f64 / denom;
                let db = params.chain_ripple_db * eval(&mag_terms, x);
                let ph = params.chain_phase_ripple_deg.to_radians() * eval(&phase_terms, x);
                Complex64::from_polar(10f64.powf(db / 20.0), ph)
            })
            .collect();
        let mut gains = rng::stream(params.seed, Domain::PortGain, &[]);
        let per_port_gain = (0..port_count)
            .map(|_| {
                let db = params.port_gain_spread_db * (2.0 * gains.random::<f64>() - 1.0);
                Complex64::from_polar(10f64.powf(db / 20.0), 2.0 * PI * gains.random::<f64>())
            })
            .collect();
        Ok(SystemResponse {
            common_chain,
            per_port_gain,
            drift: params.drift,
        })
    }

    pub fn with_drift(mut self, drift: DriftParams) -> Self {
        self.drift = drift;
        self
    }
}

/// B2B attenuator: `G_att(n) = 10^(-loss/20) * 10^(ripple * cos(pi * x_n) / 20)`
/// with `x_n` the tone position scaled to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttenuatorModel {
    pub nominal_loss_db: f64,
    pub ripple_db: f64,
}

impl Default for AttenuatorModel {
    fn default() -> Self {
        AttenuatorModel {
            nominal_loss_db: 30.0,
            ripple_db: 0.0,
        }
    }
}

impl AttenuatorModel {
    pub fn flat(loss_db: f64) -> Self {
        AttenuatorModel {
            nominal_loss_db: loss_db,
            ripple_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nominal_loss_db > 0.0) || !self.nominal_loss_db.is_finite() {
            return Err(Error::param("attenuator.nominal_loss_db", "must be positive"));
        }
        if !self.ripple_db.is_finite() {
            return Err(Error::param("attenuator.ripple_db", "must be finite"));
        }
        Ok(())
    }

    pub fn response(&self, tone: usize, tone_count: usize) -> f64 {
        let x = tone as f64 / (tone_count.max(2) - 1) as f64;
        10f64.powf((-self.nominal_loss_db + self.ripple_db * (PI * x).cos()) / 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordType {
    #[serde(rename = "MEAS")]
    Measurement,
    #[serde(rename = "B2B")]
    BackToBack,
    /// Calibrated antenna+channel responses.
    #[serde(rename = "CAL")]
    Calibrated,
}

/// One SIMO snapshot: the measured transfer function of every port.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureRecord {
    pub record_type: RecordType,
    pub snapshot_index: u64,
    pub timestamp: f64,
    pub tx_pose: Option<TxPose>,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub port_count: usize,
    pub tone_count: usize,
    /// Port-major, tones innermost.
    pub tf: Vec<Complex64>,
}

impl CaptureRecord {
    pub fn port(&self, k: usize) -> &[Complex64] {
        &self.tf[k * self.tone_count..(k + 1) * self.tone_count]
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.tf.len() != self.port_count * self.tone_count {
            return Err(Error::DimensionMismatch(format!(
                "record holds {} values, expected {} ports x {} tones",
                self.tf.len(),
                self.port_count,
                self.tone_count
            )));
        }
        Ok(())
    }
}

/// Paths seen during a snapshot: either frozen for the whole sweep or one
/// set per port switch slot.
#[derive(Debug, Clone)]
pub enum PortPaths {
    Frozen(PathSet),
    PerPort(Vec<PathSet>),
}

impl PortPaths {
    pub fn for_port(&self, k: usize) -> &PathSet {
        match self {
            PortPaths::Frozen(p) => p,
            PortPaths::PerPort(v) => &v[k],
        }
    }
}

/// Noise and provenance settings for one capture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureSettings {
    /// `None` disables noise.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

/// Noise-free antenna+channel response of every port (port-major).
///
/// Each path contributes `port_gain * exp(-j 2 pi f_n tau_k)` with the
/// plane-wave port delay `tau_k = tau - (d . p_k) / c`.
pub fn antenna_channel_response(
    paths: &PortPaths,
    geometry: &ArrayGeometry,
    tones: &TonePlan,
    scene: &Scene,
) -> Result<Vec<Complex64>> {
    let n_tones = tones.tone_count;
    let mut out = vec![Complex64::new(0.0, 0.0); geometry.port_count() * n_tones];
    if let PortPaths::PerPort(v) = paths {
        if v.len() != geometry.port_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} per-port path sets for {} ports",
                v.len(),
                geometry.port_count()
            )));
        }
    }
    for (k, port) in geometry.ports.iter().enumerate() {
        let row = &mut out[k * n_tones..(k + 1) * n_tones];
        for (i, path) in paths.for_port(k).paths.iter().enumerate() {
            let dir: Vector3<f64> = scene.world_to_array(&path.arrival_direction);
            let gain = geometry.gain_for(port, &dir, &path.jones_gain);
            let tau = path.delay - dir.dot(&port.position) / SPEED_OF_LIGHT;
            if !gain.is_finite() || !tau.is_finite() {
                return Err(Error::NonFinitePath(i));
            }
            accumulate_delay_phasor(row, gain, tau, tones);
        }
    }
    Ok(out)
}

/// Adds `gain * exp(-j 2 pi f_n tau)` over the grid. The phasor is advanced
/// by recurrence and re-anchored exactly every 64 tones.
fn accumulate_delay_phasor(row: &mut [Complex64], gain: Complex64, tau: f64, tones: &TonePlan) {
    const ANCHOR: usize = 64;
    let step = Complex64::from_polar(1.0, -2.0 * PI * tones.tone_spacing * tau);
    let mut phasor = Complex64::new(1.0, 0.0);
    for (n, v) in row.iter_mut().enumerate() {
        if n % ANCHOR == 0 {
            // Split the phase so the carrier term keeps full precision.
            let carrier = (tones.center_frequency * tau).fract();
            let offset = tones.offset(n) * tau;
            phasor = Complex64::from_polar(1.0, -2.0 * PI * (carrier + offset));
        } else {
            phasor *= step;
        }
        *v += gain * phasor;
    }
}

fn add_noise(tf: &mut [Complex64], port_count: usize, tone_count: usize, snr_db: f64, seed: u64, snapshot_index: u64) {
    let peak = (0..port_count)
        .map(|k| {
            tf[k * tone_count..(k + 1) * tone_count]
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
                / tone_count as f64
        })
        .fold(0.0, f64::max);
    let sigma = (peak / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    for k in 0..port_count {
        let mut r = rng::stream(seed, Domain::Noise, &[snapshot_index, k as u64]);
        for v in &mut tf[k * tone_count..(k + 1) * tone_count] {
            let re: f64 = r.sample(StandardNormal);
            let im: f64 = r.sample(StandardNormal);
            *v += Complex64::new(re, im) * sigma;
        }
    }
}

/// Simulates one SIMO capture.
#[allow(clippy::too_many_arguments)]
pub fn simulate_snapshot(
    paths: &PortPaths,
    geometry: &ArrayGeometry,
    tones: &TonePlan,
    scene: &Scene,
    system: &SystemResponse,
    settings: &CaptureSettings,
    snapshot_index: u64,
    timestamp: f64,
    tx_pose: Option<TxPose>,
) -> Result<CaptureRecord> {
    let ports = geometry.port_count();
    let n = tones.tone_count;
    if system.common_chain.len() != n || system.per_port_gain.len() != ports {
        return Err(Error::DimensionMismatch(format!(
            "system response is {} tones x {} ports, capture is {n} x {ports}",
            system.common_chain.len(),
            system.per_port_gain.len()
        )));
    }
    let mut tf = antenna_channel_response(paths, geometry, tones, scene)?;
    let drift = system.drift.factor(settings.seed, snapshot_index);
    for k in 0..ports {
        let g = system.per_port_gain[k] * drift;
        for (v, c) in tf[k * n..(k + 1) * n].iter_mut().zip(&system.common_chain) {
            *v *= c * g;
        }
    }
    if let Some(snr) = settings.snr_db {
        add_noise(&mut tf, ports, n, snr, settings.seed, snapshot_index);
    }
    Ok(CaptureRecord {
        record_type: RecordType::Measurement,
        snapshot_index,
        timestamp,
        tx_pose,
        snr_db: settings.snr_db,
        seed: settings.seed,
        port_count: ports,
        tone_count: n,
        tf,
    })
}

/// Simulates a series of back-to-back calibration captures.
pub fn simulate_b2b(
    tones: &TonePlan,
    system: &SystemResponse,
    attenuator: &AttenuatorModel,
    snapshot_count: usize,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<Vec<CaptureRecord>> {
    if snapshot_count == 0 {
        return Err(Error::param("snapshot_count", "must be at least 1"));
    }
    attenuator.validate()?;
    let n = tones.tone_count;
    if system.common_chain.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "system chain has {} tones, plan has {n}",
            system.common_chain.len()
        )));
    }
    let ports = system.per_port_gain.len();
    let base: Vec<Complex64> = system
        .common_chain
        .iter()
        .enumerate()
        .map(|(i, c)| c * attenuator.response(i, n))
        .collect();
    let records = (0..snapshot_count as u64)
        .map(|s| {
            let drift = system.drift.factor(seed, s);
            let mut tf = Vec::with_capacity(ports * n);
            for g in &system.per_port_gain {
                let gd = g * drift;
                tf.extend(base.iter().map(|b| b * gd));
            }
            if let Some(snr) = snr_db {
                add_noise(&mut tf, ports, n, snr, seed, s);
            }
            CaptureRecord {
                record_type: RecordType::BackToBack,
                snapshot_index: s,
                timestamp: 0.0,
                tx_pose: None,
                snr_db,
                seed,
                port_count: ports,
                tone_count: n,
                tf,
            }
        })
        .collect();
    Ok(records)
}
