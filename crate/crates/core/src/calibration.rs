//! Back-to-back calibration and sounder stability statistics.
//!
//! The antenna+channel response is recovered as
//! `H(f) = Y_meas(f) / Y_ref(f) * G_att(f)`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::capture::{AttenuatorModel, CaptureRecord, RecordType};
use crate::error::{csv_err, Error, Result};

/// Reference tones more than this far below the reference median are
/// treated as corrupt.
pub const DEFAULT_REFERENCE_FLOOR_DB: f64 = 120.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedResponse {
    pub snapshot_index: u64,
    pub timestamp: f64,
    pub tx_pose: Option<crate::channel::TxPose>,
    pub port_count: usize,
    pub tone_count: usize,
    /// Port-major `H(f)`.
    pub h_f: Vec<Complex64>,
}

impl CalibratedResponse {
    pub fn port(&self, k: usize) -> &[Complex64] {
        &self.h_f[k * self.tone_count..(k + 1) * self.tone_count]
    }

    /// Wraps an already calibrated record (for example one read from a CAL file).
    pub fn from_record(rec: &CaptureRecord) -> Result<Self> {
        rec.check_shape()?;
        Ok(CalibratedResponse {
            snapshot_index: rec.snapshot_index,
            timestamp: rec.timestamp,
            tx_pose: rec.tx_pose,
            port_count: rec.port_count,
            tone_count: rec.tone_count,
            h_f: rec.tf.clone(),
        })
    }

    pub fn to_record(&self, seed: u64) -> CaptureRecord {
        CaptureRecord {
            record_type: RecordType::Calibrated,
            snapshot_index: self.snapshot_index,
            timestamp: self.timestamp,
            tx_pose: self.tx_pose,
            snr_db: None,
            seed,
            port_count: self.port_count,
            tone_count: self.tone_count,
            tf: self.h_f.clone(),
        }
    }
}

pub fn calibrate(
    meas: &CaptureRecord,
    reference: &CaptureRecord,
    attenuator: &AttenuatorModel,
) -> Result<CalibratedResponse> {
    calibrate_with_floor(meas, reference, attenuator, DEFAULT_REFERENCE_FLOOR_DB)
}

pub fn calibrate_with_floor(
    meas: &CaptureRecord,
    reference: &CaptureRecord,
    attenuator: &AttenuatorModel,
    floor_db: f64,
) -> Result<CalibratedResponse> {
    meas.check_shape()?;
    reference.check_shape()?;
    if meas.port_count != reference.port_count || meas.tone_count != reference.tone_count {
        return Err(Error::DimensionMismatch(format!(
            "measurement is {}x{}, reference is {}x{}",
            meas.port_count, meas.tone_count, reference.port_count, reference.tone_count
        )));
    }
    let n = meas.tone_count;
    let mut mags: Vec<f64> = reference.tf.iter().map(|v| v.norm()).collect();
    let median = if mags.is_empty() {
        0.0
    } else {
        let mid = mags.len() / 2;
        *mags.select_nth_unstable_by(mid, f64::total_cmp).1
    };
    let floor = median * 10f64.powf(-floor_db / 20.0);

    let g_att: Vec<f64> = (0..n).map(|i| attenuator.response(i, n)).collect();
    let mut h_f = Vec::with_capacity(meas.tf.len());
    for (idx, (y, r)) in meas.tf.iter().zip(&reference.tf).enumerate() {
        let mag = r.norm();
        if !(mag > floor) || !(mag > 0.0) {
            return Err(Error::WeakReference {
                port: idx / n,
                tone: idx % n,
            });
        }
        h_f.push(y / r * g_att[idx % n]);
    }
    Ok(CalibratedResponse {
        snapshot_index: meas.snapshot_index,
        timestamp: meas.timestamp,
        tx_pose: meas.tx_pose,
        port_count: meas.port_count,
        tone_count: n,
        h_f,
    })
}

/// Element-wise mean of a series of records, used as a low-noise reference.
pub fn mean_record(series: &[CaptureRecord]) -> Result<CaptureRecord> {
    let first = series.first().ok_or(Error::SeriesTooShort { needed: 1, got: 0 })?;
    let mut acc = vec![Complex64::new(0.0, 0.0); first.tf.len()];
    for r in series {
        if r.tf.len() != acc.len() {
            return Err(Error::DimensionMismatch("reference series shapes differ".into()));
        }
        for (a, v) in acc.iter_mut().zip(&r.tf) {
            *a += v;
        }
    }
    let scale = 1.0 / series.len() as f64;
    for a in &mut acc {
        *a *= scale;
    }
    Ok(CaptureRecord {
        tf: acc,
        ..first.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub port: usize,
    pub amplitude_std_db: f64,
    pub phase_std_deg: f64,
    /// Per-snapshot amplitude relative to the first snapshot, dB.
    pub rel_amp_db: Vec<f64>,
    /// Per-snapshot phase relative to the first snapshot, degrees, unwrapped.
    pub rel_phase_deg: Vec<f64>,
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Relative amplitude and phase of one port over a B2B series. Each
/// snapshot is reduced to the mean over tones of `tf / tf_first`.
pub fn stability_stats(series: &[CaptureRecord], port: usize) -> Result<StabilityReport> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let first = &series[0];
    if port >= first.port_count {
        return Err(Error::UnknownPort(port));
    }
    let base = first.port(port);
    let mut rel_amp_db = Vec::with_capacity(series.len());
    let mut rel_phase_deg: Vec<f64> = Vec::with_capacity(series.len());
    for rec in series {
        if rec.port_count != first.port_count || rec.tone_count != first.tone_count {
            return Err(Error::DimensionMismatch("stability series shapes differ".into()));
        }
        let row = rec.port(port);
        let mut acc = Complex64::new(0.0, 0.0);
        for (v, b) in row.iter().zip(base) {
            acc += v / b;
        }
        let ratio = acc / row.len() as f64;
        rel_amp_db.push(20.0 * ratio.norm().log10());
        let raw = ratio.arg().to_degrees();
        let unwrapped = match rel_phase_deg.last() {
            Some(prev) => prev + (raw - prev + 180.0).rem_euclid(360.0) - 180.0,
            None => raw,
        };
        rel_phase_deg.push(unwrapped);
    }
    Ok(StabilityReport {
        port,
        amplitude_std_db: sample_std(&rel_amp_db),
        phase_std_deg: sample_std(&rel_phase_deg),
        rel_amp_db,
        rel_phase_deg,
    })
}

/// One row per port: `port, snapshots, amplitude_std_db, phase_std_deg`,
/// plus a trailing `config_hash` column when given.
pub fn write_stability_csv<W: Write>(reports: &[StabilityReport], config_hash: Option<&str>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["port", "snapshots", "amplitude_std_db", "phase_std_deg"];
    if config_hash.is_some() {
        header.push("config_hash");
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in reports {
        let mut row = vec![
            r.port.to_string(),
            r.rel_amp_db.len().to_string(),
            r.amplitude_std_db.to_string(),
            r.phase_std_deg.to_string(),
        ];
        row.extend(config_hash.map(str::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
