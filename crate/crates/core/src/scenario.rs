//! Scenario configuration and presets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::array::{ArrayGeometry, ArraySpec};
use crate::capture::{AttenuatorModel, SystemParams};
use crate::channel::{Facet, Scene, Trajectory, Wobble};
use crate::error::{Error, Result};
use crate::processing::{AnalysisOptions, GateConfig, Window};
use crate::waveform::{TimingPlan, TonePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Noise and drift of the antenna captures.
    pub capture: u64,
    /// Noise and drift of the back-to-back captures.
    pub b2b: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { capture: 1, b2b: 2 }
    }
}

/// Which bursts and SIMOs of the schedule are captured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapturePlan {
    pub burst_count: usize,
    /// Every `burst_stride`-th burst is kept.
    pub burst_stride: usize,
    /// SIMOs kept from each kept burst; all when unset.
    pub simos: Option<usize>,
    pub b2b_snapshots: usize,
}

impl Default for CapturePlan {
    fn default() -> Self {
        CapturePlan {
            burst_count: 34,
            burst_stride: 1,
            simos: None,
            b2b_snapshots: 100,
        }
    }
}

fn default_capture_snr() -> Option<f64> {
    Some(30.0)
}

fn default_b2b_snr() -> Option<f64> {
    Some(60.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub tone_plan: TonePlan,
    #[serde(default)]
    pub timing: TimingPlan,
    #[serde(default)]
    pub array: ArraySpec,
    pub scene: Scene,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub system: SystemParams,
    #[serde(default)]
    pub attenuator: AttenuatorModel,
    #[serde(default)]
    pub gate: GateConfig,
    #[serde(default)]
    pub window: Window,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub capture: CapturePlan,
    /// Per-tone SNR of the strongest port; `null` disables noise.
    #[serde(default = "default_capture_snr")]
    pub capture_snr_db: Option<f64>,
    #[serde(default = "default_b2b_snr")]
    pub b2b_snr_db: Option<f64>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let at = |prefix: &'static str| {
            move |e: Error| match e {
                Error::InvalidParameter { name, reason } => Error::Config {
                    path: format!("{prefix}{name}"),
                    message: reason,
                },
                other => Error::Config {
                    path: prefix.trim_end_matches('.').to_string(),
                    message: other.to_string(),
                },
            }
        };
        self.tone_plan.validate().map_err(at("tone_plan."))?;
        self.timing.validate().map_err(at("timing."))?;
        let geometry = self.array.build().map_err(at("array."))?;
        if self.timing.ports_per_simo != geometry.port_count() {
            return Err(Error::Config {
                path: "timing.ports_per_simo".into(),
                message: format!(
                    "{} ports per SIMO but the array has {} ports",
                    self.timing.ports_per_simo,
                    geometry.port_count()
                ),
            });
        }
        self.scene.validate().map_err(at("scene."))?;
        self.trajectory.validate().map_err(at(""))?;
        crate::capture::SystemResponse::generate(&self.system, 2, 1).map_err(at(""))?;
        self.attenuator.validate().map_err(at(""))?;
        self.gate
            .validate(self.tone_plan.max_unambiguous_delay())
            .map_err(at(""))?;
        let c = &self.capture;
        if c.burst_count == 0 {
            return Err(config_err("capture.burst_count", "must be at least 1"));
        }
        if c.burst_stride == 0 {
            return Err(config_err("capture.burst_stride", "must be at least 1"));
        }
        if let Some(s) = c.simos {
            if s == 0 || s > self.timing.simos_per_burst {
                return Err(config_err("capture.simos", "must lie in 1..=simos_per_burst"));
            }
        }
        if c.b2b_snapshots < 2 {
            return Err(config_err("capture.b2b_snapshots", "must be at least 2"));
        }
        for (path, snr) in [("capture_snr_db", self.capture_snr_db), ("b2b_snr_db", self.b2b_snr_db)] {
            if snr.is_some_and(|s| !s.is_finite()) {
                return Err(config_err(path, "must be finite or null"));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        self.array.build()
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            window: self.window,
            gate: self.gate,
            los_port: None,
        }
    }

    /// Snapshot schedule as `(snapshot_index, timestamp)`; the index counts
    /// every SIMO slot of the full schedule, including skipped ones.
    pub fn schedule(&self) -> Vec<(u64, f64)> {
        let t = &self.timing;
        let simos = self.capture.simos.unwrap_or(t.simos_per_burst);
        let mut out = Vec::new();
        for b in (0..self.capture.burst_count).step_by(self.capture.burst_stride) {
            for j in 0..simos {
                let index = (b * t.simos_per_burst + j) as u64;
                out.push((index, b as f64 / t.burst_rate + j as f64 * t.simo_duration()));
            }
        }
        out
    }

    pub fn config_hash(&self) -> String {
        crate::hash_json(self)
    }
}

fn config_err(path: &str, message: &str) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PaperStatic,
    PaperHover,
    PaperRoute,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::PaperStatic, Preset::PaperHover, Preset::PaperRoute];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperStatic => "paper-static",
            Preset::PaperHover => "paper-hover",
            Preset::PaperRoute => "paper-route",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn config(self) -> ScenarioConfig {
        let (trajectory, capture) = match self {
            Preset::PaperStatic => (
                Trajectory::StaticPoint {
                    position: STATIC_TX_POSITION,
                },
                CapturePlan::default(),
            ),
            Preset::PaperHover => (
                Trajectory::Hover {
                    position: STATIC_TX_POSITION,
                    wobble: Wobble::default(),
                },
                CapturePlan::default(),
            ),
            // One lap takes 60 s; keep one SIMO every 3.75 s (every 7.5 m).
            Preset::PaperRoute => (
                Trajectory::default_route(),
                CapturePlan {
                    burst_count: 1200,
                    burst_stride: 75,
                    simos: Some(1),
                    ..CapturePlan::default()
                },
            ),
        };
        ScenarioConfig {
            name: self.name().to_string(),
            tone_plan: TonePlan::default(),
            timing: TimingPlan::default(),
            array: ArraySpec::default(),
            scene: courtyard_scene(),
            trajectory,
            system: SystemParams::default(),
            attenuator: AttenuatorModel::default(),
            gate: GateConfig::default(),
            window: Window::Rect,
            seeds: Seeds::default(),
            capture,
            capture_snr_db: default_capture_snr(),
            b2b_snr_db: default_b2b_snr(),
        }
    }
}

/// Transmitter position of the static and hovering scenarios: 12 m east of
/// the array at drone-launch height.
pub const STATIC_TX_POSITION: [f64; 3] = [12.0, 0.0, 1.8];

/// Receiver mounting: array-frame azimuth 0 (column 0) points south, so
/// column 4 faces east.
pub const RX_MOUNTING_ROTATION: f64 = -std::f64::consts::FRAC_PI_2;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Open courtyard: ground plane, a glass facade to the west and a brick
/// wall to the north.
pub fn courtyard_scene() -> Scene {
    let g = 200.0;
    Scene {
        reflectors: vec![
            Facet {
                corners: vec![[-g, -g, 0.0], [g, -g, 0.0], [g, g, 0.0], [-g, g, 0.0]],
                gamma_v: real(-0.3),
                gamma_h: real(-0.3),
                cross_coupling: real(0.0),
            },
            Facet {
                corners: vec![
                    [-60.0, -40.0, 0.0],
                    [-60.0, 40.0, 0.0],
                    [-60.0, 40.0, 60.0],
                    [-60.0, -40.0, 60.0],
                ],
                gamma_v: real(0.5),
                gamma_h: real(0.5),
                cross_coupling: real(0.05),
            },
            Facet {
                corners: vec![
                    [-20.0, 25.0, 0.0],
                    [30.0, 25.0, 0.0],
                    [30.0, 25.0, 12.0],
                    [-20.0, 25.0, 12.0],
                ],
                gamma_v: real(0.4),
                gamma_h: real(0.4),
                cross_coupling: real(0.05),
            },
        ],
        rx_position: [0.0, 0.0, 1.5],
        rx_mounting_rotation: RX_MOUNTING_ROTATION,
    }
}

/// Overlays `patch` onto `base`; objects merge key by key except tagged
/// objects (with a `kind` key), which replace the base wholesale.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) if !p.contains_key("kind") => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

/// Parses and validates a JSON scenario document. A top-level `preset`
/// key starts from that preset and overlays the remaining keys.
pub fn parse_scenario(document: &str) -> Result<ScenarioConfig> {
    let mut value: Value = serde_json::from_str(document).map_err(|e| Error::Config {
        path: String::new(),
        message: e.to_string(),
    })?;
    let preset = match &mut value {
        Value::Object(map) => map.remove("preset"),
        _ => None,
    };
    if let Some(preset) = preset {
        let name = preset
            .as_str()
            .ok_or_else(|| config_err("preset", "must be a string"))?;
        let preset = Preset::from_name(name).ok_or_else(|| Error::Config {
            path: "preset".into(),
            message: format!("unknown preset `{name}`"),
        })?;
        let mut base = serde_json::to_value(preset.config()).map_err(|e| Error::Format(e.to_string()))?;
        merge(&mut base, value);
        value = base;
    }
    let config: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_scenario(
            r#"{"scene": {"rx_position": [0, 0, 1.5]},
                "trajectory": {"kind": "static_point", "position": [12, 0, 1.8]}}"#,
        )
        .unwrap();
        assert_eq!(c.timing.t_siso, 50e-6);
        assert_eq!(c.timing.ports_per_simo, 128);
        assert_eq!(c.tone_plan.tone_count, 1841);
        assert_eq!(c.timing.burst_rate, 20.0);
        assert_eq!(c.capture_snr_db, Some(30.0));
    }

    #[test]
    fn zero_ports_names_field() {
        let err = parse_scenario(r#"{"preset": "paper-static", "timing": {"ports_per_simo": 0}}"#).unwrap_err();
        assert!(err.to_string().contains("timing.ports_per_simo"), "{err}");
    }

    #[test]
    fn unknown_key_names_path() {
        let err = parse_scenario(r#"{"preset": "paper-static", "tone_plan": {"tone_spacin": 1}}"#).unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert!(path.starts_with("tone_plan"), "{path}");
                assert!(message.contains("tone_spacin"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn route_preset() {
        let c = parse_scenario(r#"{"preset": "paper-route"}"#).unwrap();
        match c.trajectory {
            Trajectory::SquareRoute {
                center, side, speed, ..
            } => {
                assert_eq!(side, 30.0);
                assert_eq!(center[2], 50.0);
                assert_eq!(speed, 2.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.schedule().len(), 16);
        assert_eq!(c.schedule()[1].1, 3.75);
    }

    #[test]
    fn preset_override_replaces_trajectory() {
        let c = parse_scenario(
            r#"{"preset": "paper-route", "trajectory": {"kind": "static_point", "position": [5, 5, 5]}}"#,
        )
        .unwrap();
        assert_eq!(
            c.trajectory,
            Trajectory::StaticPoint {
                position: [5.0, 5.0, 5.0]
            }
        );
        assert_eq!(c.scene, courtyard_scene());
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for p in Preset::ALL {
            let c = p.config();
            c.validate().unwrap();
            let back = parse_scenario(&serde_json::to_string(&c).unwrap()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.config_hash(), c.config_hash());
        }
    }

    #[test]
    fn default_schedule() {
        let c = Preset::PaperStatic.config();
        let s = c.schedule();
        assert_eq!(s.len(), 102);
        assert_eq!(s[1], (1, 0.0064));
        assert_eq!(s[3].1, 0.05);
    }

    #[test]
    fn bad_json_and_preset() {
        assert!(matches!(parse_scenario("{"), Err(Error::Config { .. })));
        assert!(matches!(
            parse_scenario(r#"{"preset": "nope"}"#),
            Err(Error::Config { .. })
        ));
    }
}
