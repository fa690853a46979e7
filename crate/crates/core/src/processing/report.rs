//! Per-snapshot metrics, scenario summaries and route tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::cir::{cir_from_tf, Window};
use super::eigen::{correlation_and_eigen, Gamma};
use super::gating::{threshold_and_gate, GateConfig};
use super::metrics::{
    argmax_column, column_power_profile, los_bin_power, rms_delay_spread, rx_power, strongest_port, DelaySpread,
};
use crate::array::{ArrayGeometry, Polarization};
use crate::calibration::{sample_std, CalibratedResponse};
use crate::error::{csv_err, Error, Result};
use crate::waveform::TonePlan;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    pub window: Window,
    pub gate: GateConfig,
    /// Port whose strongest bin is reported as the LOS-bin power; the
    /// snapshot's strongest port when unset.
    pub los_port: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    pub snapshot_index: u64,
    pub timestamp: f64,
    pub tx_position: Option<[f64; 3]>,
    pub p_rx: f64,
    pub sigma_tau: Option<DelaySpread>,
    pub gamma12: Gamma,
    pub gamma14: Gamma,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `[column][V, H]`, dB.
    pub column_power: Vec<[f64; 2]>,
    pub argmax_column_v: usize,
    pub los_port: Option<usize>,
    pub los_bin_power: f64,
    pub empty_ports: Vec<usize>,
}

impl SnapshotMetrics {
    pub fn p_rx_db(&self) -> f64 {
        10.0 * self.p_rx.log10()
    }

    pub fn sigma_tau_dbs(&self) -> f64 {
        self.sigma_tau.map_or(f64::NAN, |s| s.dbs)
    }

    pub fn los_bin_power_db(&self) -> f64 {
        10.0 * self.los_bin_power.log10()
    }

    pub fn eigen_span_db(&self) -> f64 {
        super::eigen::eigen_span_db(&self.eigenvalues)
    }

    /// V minus H power at the V-pol argmax column, dB.
    pub fn polarization_gap_db(&self) -> f64 {
        let cell = self.column_power[self.argmax_column_v];
        cell[0] - cell[1]
    }
}

pub fn analyze_snapshot(
    h: &CalibratedResponse,
    tones: &TonePlan,
    geometry: &ArrayGeometry,
    options: &AnalysisOptions,
) -> Result<SnapshotMetrics> {
    if h.port_count != geometry.port_count() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} ports, geometry has {}",
            h.port_count,
            geometry.port_count()
        )));
    }
    let raw = cir_from_tf(h, tones, options.window)?;
    let gated = threshold_and_gate(&raw, &options.gate)?;
    let sigma_tau = match rms_delay_spread(&gated) {
        Ok(s) => Some(s),
        Err(Error::NoSignal) => None,
        Err(e) => return Err(e),
    };
    let eigen = correlation_and_eigen(h)?;
    let column_power = column_power_profile(&gated, geometry)?;
    let los_port = options.los_port.or_else(|| strongest_port(&gated));
    let los_bin = match los_port {
        Some(p) => los_bin_power(&gated, p)?,
        None => 0.0,
    };
    Ok(SnapshotMetrics {
        snapshot_index: h.snapshot_index,
        timestamp: h.timestamp,
        tx_position: h.tx_pose.map(|p| p.position),
        p_rx: rx_power(&gated),
        sigma_tau,
        gamma12: eigen.gamma12,
        gamma14: eigen.gamma14,
        eigenvalues: eigen.eigenvalues,
        argmax_column_v: argmax_column(&column_power, Polarization::V),
        column_power,
        los_port,
        los_bin_power: los_bin,
        empty_ports: gated.empty_ports(),
    })
}

/// Mean and sample standard deviation over the finite entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Stat {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        let mean = if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        };
        Stat {
            mean,
            std: sample_std(&v),
            count: v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub snapshots: usize,
    pub p_rx_db: Stat,
    pub sigma_tau_dbs: Stat,
    pub gamma12_db: Stat,
    pub gamma14_db: Stat,
    pub eigen_span_db: Stat,
    pub los_bin_power_db: Stat,
    pub config_hash: Option<String>,
    pub notes: Vec<String>,
}

pub fn summarize(metrics: &[SnapshotMetrics], config_hash: Option<String>, tone_count: usize) -> ScenarioSummary {
    let g = |f: fn(&SnapshotMetrics) -> Gamma| -> Stat { Stat::of(metrics.iter().map(|m| f(m).value())) };
    ScenarioSummary {
        snapshots: metrics.len(),
        p_rx_db: Stat::of(metrics.iter().map(SnapshotMetrics::p_rx_db)),
        sigma_tau_dbs: Stat::of(metrics.iter().map(SnapshotMetrics::sigma_tau_dbs)),
        gamma12_db: g(|m| m.gamma12),
        gamma14_db: g(|m| m.gamma14),
        eigen_span_db: Stat::of(metrics.iter().map(SnapshotMetrics::eigen_span_db)),
        los_bin_power_db: Stat::of(metrics.iter().map(SnapshotMetrics::los_bin_power_db)),
        config_hash,
        notes: vec![format!(
            "correlation matrix averaged over {tone_count} tones; neighbouring tones are strongly \
             correlated, so the number of independent frequency samples is much smaller"
        )],
    }
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// One CSV row per snapshot. A config hash, when given, fills a trailing
/// `config_hash` column.
pub fn write_metrics_csv<W: Write>(metrics: &[SnapshotMetrics], config_hash: Option<&str>, out: W) -> Result<()> {
    let columns = metrics.first().map_or(0, |m| m.column_power.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "snapshot",
        "timestamp_s",
        "tx_x",
        "tx_y",
        "tx_z",
        "p_rx_db",
        "sigma_tau_s",
        "sigma_tau_dbs",
        "strongest_port",
        "gamma12_db",
        "gamma14_db",
        "eigen_span_db",
        "los_bin_power_db",
        "argmax_column_v",
        "empty_ports",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for c in 0..columns {
        header.push(format!("col{c}_v_db"));
        header.push(format!("col{c}_h_db"));
    }
    if config_hash.is_some() {
        header.push("config_hash".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for m in metrics {
        let pos = m.tx_position.map(|p| p.map(fmt)).unwrap_or_default();
        let mut row = vec![
            m.snapshot_index.to_string(),
            fmt(m.timestamp),
            pos[0].clone(),
            pos[1].clone(),
            pos[2].clone(),
            fmt(m.p_rx_db()),
            m.sigma_tau.map_or(String::new(), |s| fmt(s.seconds)),
            fmt(m.sigma_tau_dbs()),
            m.sigma_tau.map_or(String::new(), |s| s.strongest_port.to_string()),
            m.gamma12.to_string(),
            m.gamma14.to_string(),
            fmt(m.eigen_span_db()),
            fmt(m.los_bin_power_db()),
            m.argmax_column_v.to_string(),
            m.empty_ports.len().to_string(),
        ];
        for cell in &m.column_power {
            row.push(fmt(cell[0]));
            row.push(fmt(cell[1]));
        }
        row.extend(config_hash.map(str::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRow {
    pub snapshot_index: u64,
    pub timestamp: f64,
    pub tx_position: Option<[f64; 3]>,
    pub p_rx_db: f64,
    pub sigma_tau_dbs: f64,
    pub gamma12: Gamma,
    pub gamma14: Gamma,
    pub argmax_column_v: usize,
    /// V-pol column powers, dB.
    pub column_power_v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub rows: Vec<RouteRow>,
    pub argmax_series: Vec<usize>,
}

impl RouteReport {
    /// Distinct argmax columns visited, in order of first appearance.
    pub fn visited_columns(&self) -> Vec<usize> {
        let mut seen = Vec::new();
        for &c in &self.argmax_series {
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        seen
    }

    pub fn write_csv<W: Write>(&self, config_hash: Option<&str>, out: W) -> Result<()> {
        let columns = self.rows.first().map_or(0, |r| r.column_power_v.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "snapshot",
            "timestamp_s",
            "tx_x",
            "tx_y",
            "tx_z",
            "p_rx_db",
            "sigma_tau_dbs",
            "gamma12_db",
            "gamma14_db",
            "argmax_column_v",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((0..columns).map(|c| format!("col{c}_v_db")));
        if config_hash.is_some() {
            header.push("config_hash".into());
        }
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let pos = r.tx_position.map(|p| p.map(fmt)).unwrap_or_default();
            let mut row = vec![
                r.snapshot_index.to_string(),
                fmt(r.timestamp),
                pos[0].clone(),
                pos[1].clone(),
                pos[2].clone(),
                fmt(r.p_rx_db),
                fmt(r.sigma_tau_dbs),
                r.gamma12.to_string(),
                r.gamma14.to_string(),
                r.argmax_column_v.to_string(),
            ];
            row.extend(r.column_power_v.iter().map(|&v| fmt(v)));
            row.extend(config_hash.map(str::to_string));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Location-indexed table in snapshot order.
pub fn route_report(metrics: &[SnapshotMetrics]) -> Result<RouteReport> {
    if metrics.is_empty() {
        return Err(Error::param("snapshots", "route report needs at least one snapshot"));
    }
    let mut sorted: Vec<&SnapshotMetrics> = metrics.iter().collect();
    sorted.sort_by_key(|m| m.snapshot_index);
    let rows: Vec<RouteRow> = sorted
        .iter()
        .map(|m| RouteRow {
            snapshot_index: m.snapshot_index,
            timestamp: m.timestamp,
            tx_position: m.tx_position,
            p_rx_db: m.p_rx_db(),
            sigma_tau_dbs: m.sigma_tau_dbs(),
            gamma12: m.gamma12,
            gamma14: m.gamma14,
            argmax_column_v: m.argmax_column_v,
            column_power_v: m.column_power.iter().map(|c| c[0]).collect(),
        })
        .collect();
    let argmax_series = rows.iter().map(|r| r.argmax_column_v).collect();
    Ok(RouteReport { rows, argmax_series })
}
