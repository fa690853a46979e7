//! Scalar metrics of a gated CIR.

use serde::{Deserialize, Serialize};

use super::gating::GatedCir;
use crate::array::{ArrayGeometry, Polarization};
use crate::error::{Error, Result};

/// Total received power: gated energy summed over ports and delay bins.
pub fn rx_power(gated: &GatedCir) -> f64 {
    gated.h.iter().map(|v| v.norm_sqr()).sum()
}

/// Port with the largest gated energy; ties go to the lowest id. Empty
/// ports are skipped.
pub fn strongest_port(gated: &GatedCir) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for k in 0..gated.port_count() {
        if gated.first_bin[k].is_none() {
            continue;
        }
        let e = gated.port_energy(k);
        if best.is_none_or(|(_, b)| e > b) {
            best = Some((k, e));
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySpread {
    pub seconds: f64,
    /// `10 log10(seconds)`; negative infinity when only one bin survives.
    pub dbs: f64,
    pub strongest_port: usize,
    /// Set when the PDP has a single nonzero bin.
    pub single_bin: bool,
}

/// Converts a delay spread to dB-seconds.
pub fn to_dbs(seconds: f64) -> f64 {
    10.0 * seconds.log10()
}

/// Second central moment of a power delay profile, `sqrt(E[t^2] - E[t]^2)`.
/// Returns `None` for a profile without power.
pub fn rms_delay_spread_pdp(delays: &[f64], powers: &[f64]) -> Option<f64> {
    let total: f64 = powers.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mean: f64 = delays.iter().zip(powers).map(|(t, p)| p * t).sum::<f64>() / total;
    let second: f64 = delays.iter().zip(powers).map(|(t, p)| p * t * t).sum::<f64>() / total;
    Some((second - mean * mean).max(0.0).sqrt())
}

pub fn rms_delay_spread(gated: &GatedCir) -> Result<DelaySpread> {
    let port = strongest_port(gated).ok_or(Error::NoSignal)?;
    let row = gated.port(port);
    let mut delays = Vec::new();
    let mut powers = Vec::new();
    for (m, v) in row.iter().enumerate() {
        let p = v.norm_sqr();
        if p > 0.0 {
            // Relative to the first surviving bin; the spread is shift invariant
            // and this keeps the moments well conditioned.
            delays.push((m - gated.first_bin[port].unwrap_or(0)) as f64 * gated.delay_resolution());
            powers.push(p);
        }
    }
    let single_bin = powers.len() == 1;
    let seconds = if single_bin {
        0.0
    } else {
        rms_delay_spread_pdp(&delays, &powers).ok_or(Error::NoSignal)?
    };
    Ok(DelaySpread {
        seconds,
        dbs: if seconds > 0.0 {
            to_dbs(seconds)
        } else {
            f64::NEG_INFINITY
        },
        strongest_port: port,
        single_bin,
    })
}

/// Mean gated energy of each column's element ports, dB, indexed
/// `[column][polarization]` with V = 0, H = 1.
pub fn column_power_profile(gated: &GatedCir, geometry: &ArrayGeometry) -> Result<Vec<[f64; 2]>> {
    if gated.port_count() != geometry.port_count() {
        return Err(Error::DimensionMismatch(format!(
            "CIR has {} ports, geometry has {}",
            gated.port_count(),
            geometry.port_count()
        )));
    }
    let mut sums = vec![[0.0f64; 2]; geometry.columns];
    for p in &geometry.ports {
        sums[p.column][p.polarization.index()] += gated.port_energy(p.port_id);
    }
    Ok(sums
        .into_iter()
        .map(|[v, h]| {
            let rows = geometry.rows as f64;
            [10.0 * (v / rows).log10(), 10.0 * (h / rows).log10()]
        })
        .collect())
}

/// Column with the highest power for one polarization; ties go low.
pub fn argmax_column(profile: &[[f64; 2]], pol: Polarization) -> usize {
    let mut best = 0;
    for (c, cell) in profile.iter().enumerate() {
        if cell[pol.index()] > profile[best][pol.index()] {
            best = c;
        }
    }
    best
}

/// Power of the strongest bin of one port (the LOS bin in a LOS channel).
pub fn los_bin_power(gated: &GatedCir, port: usize) -> Result<f64> {
    if port >= gated.port_count() {
        return Err(Error::UnknownPort(port));
    }
    Ok(gated.port(port).iter().map(|v| v.norm_sqr()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processing::cir::RawCir;
    use crate::processing::gating::{threshold_and_gate, GateConfig};
    use num_complex::Complex64;

    fn gated_from(rows: &[Vec<f64>], resolution: f64) -> GatedCir {
        let n = rows[0].len();
        let raw = RawCir {
            port_count: rows.len(),
            bin_count: n,
            delay_resolution: resolution,
            h: rows
                .iter()
                .flat_map(|r| r.iter().map(|p| Complex64::new(p.sqrt(), 0.0)))
                .collect(),
        };
        let gate = GateConfig {
            delay_gate: resolution * (n as f64 - 1.0) * 0.99,
            peak_margin_db: 60.0,
            ..GateConfig::default()
        };
        threshold_and_gate(&raw, &gate).unwrap()
    }

    #[test]
    fn two_tap_spread() {
        let s = rms_delay_spread_pdp(&[0.0, 100e-9], &[1.0, 1.0]).unwrap();
        assert!((s - 50e-9).abs() <= 1e-12 * 50e-9);
        assert!((to_dbs(s) + 73.0103).abs() < 1e-4);
        assert_eq!(to_dbs(1e-9), -90.0);
    }

    #[test]
    fn gated_two_tap_spread() {
        let mut row = vec![0.0; 100];
        row[5] = 1.0;
        row[15] = 1.0;
        let g = gated_from(&[row], 10e-9);
        let ds = rms_delay_spread(&g).unwrap();
        assert!((ds.seconds - 50e-9).abs() < 1e-20);
        assert!(!ds.single_bin);
    }

    #[test]
    fn single_bin_is_flagged() {
        let mut row = vec![0.0; 50];
        row[3] = 2.0;
        let ds = rms_delay_spread(&gated_from(&[row], 1e-8)).unwrap();
        assert!(ds.single_bin);
        assert_eq!(ds.seconds, 0.0);
        assert_eq!(ds.dbs, f64::NEG_INFINITY);
    }

    #[test]
    fn strongest_port_ties_go_low() {
        let mut a = vec![0.0; 20];
        a[2] = 1.0;
        let g = gated_from(&[vec![0.0; 20], a.clone(), a], 1e-8);
        assert_eq!(strongest_port(&g), Some(1));
        assert_eq!(rms_delay_spread(&g).unwrap().strongest_port, 1);
    }

    #[test]
    fn rx_power_sums_ports() {
        let mut a = vec![0.0; 20];
        a[2] = 1.0;
        let mut b = vec![0.0; 20];
        b[4] = 3.0;
        let g = gated_from(&[a, b], 1e-8);
        assert!((rx_power(&g) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fully_gated_is_zero_power() {
        let g = gated_from(&[vec![0.0; 20]], 1e-8);
        assert_eq!(rx_power(&g), 0.0);
        assert!(matches!(rms_delay_spread(&g), Err(Error::NoSignal)));
    }

    #[test]
    fn equal_energies_give_flat_profile() {
        let geometry = crate::array::ArraySpec::default().build().unwrap();
        let mut row = vec![0.0; 16];
        row[1] = 0.01;
        let rows = vec![row; 128];
        let g = gated_from(&rows, 1e-8);
        let prof = column_power_profile(&g, &geometry).unwrap();
        for cell in prof {
            assert!((cell[0] + 20.0).abs() < 1e-9 && (cell[1] + 20.0).abs() < 1e-9);
        }
    }
}
