//! Shared fixtures for the benchmarks.

use a2gs_core::calibration::mean_record;
use a2gs_core::scenario::Preset;
use a2gs_core::{calibrate, CalibratedResponse, CaptureRecord, Simulator};

/// One full-size static snapshot at every stage of the pipeline.
pub struct Fixture {
    pub sim: Simulator,
    pub capture: CaptureRecord,
    pub reference: CaptureRecord,
    pub calibrated: CalibratedResponse,
}

impl Fixture {
    pub fn new(preset: Preset) -> Self {
        let mut config = preset.config();
        config.capture.b2b_snapshots = 8;
        let sim = Simulator::new(config).expect("preset is valid");
        let (index, time) = sim.config.schedule()[0];
        let capture = sim.capture_snapshot(index, time).expect("capture");
        let reference = mean_record(&sim.b2b_series().expect("b2b")).expect("reference");
        let calibrated = calibrate(&capture, &reference, &sim.config.attenuator).expect("calibrate");
        Fixture {
            sim,
            capture,
            reference,
            calibrated,
        }
    }
}
