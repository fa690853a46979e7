//! Virtual air-to-ground massive-MIMO channel sounder.
//!
//! Synthesizes drone-to-ground multipath channels seen by a switched
//! cylindrical array, emulates capture and back-to-back calibration, and
//! computes the channel metrics of the processing pipeline.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod calibration;
pub mod capture;
pub mod capture_file;
pub mod channel;
pub mod error;
pub mod pipeline;
pub mod processing;
pub mod rng;
pub mod scenario;
pub mod selftest;
pub mod waveform;

pub use array::{build_cylindrical_array, ArrayGeometry, ArraySpec, PatternParams, Polarization, PortDescriptor};
pub use calibration::{calibrate, stability_stats, write_stability_csv, CalibratedResponse, StabilityReport};
pub use capture::{
    simulate_b2b, simulate_snapshot, AttenuatorModel, CaptureRecord, CaptureSettings, DriftParams, PortPaths,
    RecordType, SystemParams, SystemResponse,
};
pub use capture_file::{read_capture, write_capture, CaptureFile};
pub use channel::{synthesize_paths, Facet, PathComponent, PathSet, Scene, Trajectory, TxPose, Wobble};
pub use error::{Error, Result};
pub use pipeline::{ScenarioRun, Simulator};
pub use scenario::{parse_scenario, Preset, ScenarioConfig};
pub use waveform::{make_tone_plan, snapshot_timestamps, TimingPlan, TonePlan};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Hex SHA-256 of the canonical JSON encoding of `value`.
pub fn hash_json<T: serde::Serialize>(value: &T) -> String {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(value).expect("serializable value");
    hex::encode(Sha256::digest(&bytes))
}
