//! Scenario-level orchestration: synthesis, capture, calibration and analysis
//! of whole snapshot series.

use rayon::prelude::*;

use crate::array::ArrayGeometry;
use crate::calibration::{calibrate, mean_record, CalibratedResponse};
use crate::capture::{
    simulate_b2b, simulate_snapshot, AttenuatorModel, CaptureRecord, CaptureSettings, PortPaths, SystemResponse,
};
use crate::capture_file::CaptureFile;
use crate::channel::synthesize_paths;
use crate::error::{Error, Result};
use crate::processing::{analyze_snapshot, AnalysisOptions, SnapshotMetrics};
use crate::scenario::ScenarioConfig;
use crate::waveform::TonePlan;

/// A validated scenario with its derived geometry and system response.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub config: ScenarioConfig,
    pub geometry: ArrayGeometry,
    pub system: SystemResponse,
}

impl Simulator {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let geometry = config.geometry()?;
        let system = SystemResponse::generate(&config.system, config.tone_plan.tone_count, geometry.port_count())?;
        Ok(Simulator {
            config,
            geometry,
            system,
        })
    }

    pub fn config_hash(&self) -> String {
        self.config.config_hash()
    }

    pub fn geometry_hash(&self) -> String {
        self.geometry.content_hash()
    }

    /// Propagation paths seen during the snapshot starting at `time`.
    pub fn paths_at(&self, time: f64) -> Result<PortPaths> {
        let c = &self.config;
        let carrier = c.tone_plan.center_frequency;
        if c.trajectory.moves_within_snapshot() {
            (0..self.geometry.port_count())
                .map(|k| {
                    let t = time + k as f64 * c.timing.t_siso;
                    synthesize_paths(&c.scene, &c.trajectory.tx_pose_at(t, &c.timing), carrier)
                })
                .collect::<Result<Vec<_>>>()
                .map(PortPaths::PerPort)
        } else {
            synthesize_paths(&c.scene, &c.trajectory.tx_pose_at(time, &c.timing), carrier).map(PortPaths::Frozen)
        }
    }

    pub fn capture_snapshot(&self, snapshot_index: u64, time: f64) -> Result<CaptureRecord> {
        let c = &self.config;
        let paths = self.paths_at(time)?;
        let settings = CaptureSettings {
            snr_db: c.capture_snr_db,
            seed: c.seeds.capture,
        };
        simulate_snapshot(
            &paths,
            &self.geometry,
            &c.tone_plan,
            &c.scene,
            &self.system,
            &settings,
            snapshot_index,
            time,
            Some(c.trajectory.tx_pose_at(time, &c.timing)),
        )
    }

    /// Every scheduled snapshot, in time order.
    pub fn capture_series(&self) -> Result<Vec<CaptureRecord>> {
        self.config
            .schedule()
            .into_par_iter()
            .map(|(index, time)| self.capture_snapshot(index, time))
            .collect()
    }

    pub fn b2b_series(&self) -> Result<Vec<CaptureRecord>> {
        let c = &self.config;
        simulate_b2b(
            &c.tone_plan,
            &self.system,
            &c.attenuator,
            c.capture.b2b_snapshots,
            c.b2b_snr_db,
            c.seeds.b2b,
        )
    }

    /// Wraps records into a capture file stamped with this scenario's hashes.
    pub fn file(&self, records: Vec<CaptureRecord>) -> Result<CaptureFile> {
        CaptureFile::new(records, self.config.tone_plan, self.config_hash(), self.geometry_hash())
    }

    /// Capture, B2B reference, calibration and analysis in one go.
    pub fn run(&self) -> Result<ScenarioRun> {
        let capture = self.capture_series()?;
        let b2b = self.b2b_series()?;
        let calibrated = calibrate_series(&capture, &b2b, &self.config.attenuator)?;
        let metrics = analyze_series(
            &calibrated,
            &self.config.tone_plan,
            &self.geometry,
            &self.config.analysis_options(),
        )?;
        Ok(ScenarioRun {
            capture,
            b2b,
            calibrated,
            metrics,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub capture: Vec<CaptureRecord>,
    pub b2b: Vec<CaptureRecord>,
    pub calibrated: Vec<CalibratedResponse>,
    pub metrics: Vec<SnapshotMetrics>,
}

/// Calibrates every measurement against the mean of the B2B series.
pub fn calibrate_series(
    measurements: &[CaptureRecord],
    b2b: &[CaptureRecord],
    attenuator: &AttenuatorModel,
) -> Result<Vec<CalibratedResponse>> {
    let reference = mean_record(b2b)?;
    measurements
        .par_iter()
        .map(|m| calibrate(m, &reference, attenuator))
        .collect()
}

/// Analyzes a series. Unless `options.los_port` is set, the LOS-bin power
/// of every snapshot is read at the strongest port of the first snapshot.
pub fn analyze_series(
    responses: &[CalibratedResponse],
    tones: &TonePlan,
    geometry: &ArrayGeometry,
    options: &AnalysisOptions,
) -> Result<Vec<SnapshotMetrics>> {
    let Some(first) = responses.first() else {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    };
    let head = analyze_snapshot(first, tones, geometry, options)?;
    let fixed = AnalysisOptions {
        los_port: options.los_port.or(head.los_port),
        ..*options
    };
    let mut out = vec![analyze_snapshot(first, tones, geometry, &fixed)?];
    let rest: Vec<SnapshotMetrics> = responses[1..]
        .par_iter()
        .map(|r| analyze_snapshot(r, tones, geometry, &fixed))
        .collect::<Result<_>>()?;
    out.extend(rest);
    Ok(out)
}
