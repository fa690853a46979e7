//! Built-in invariant suite, run by `a2gs selftest`.
//!
//! Every check draws its random cases from a seeded generator, so a run is
//! reproducible from the seed alone.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::array::{ArraySpec, Polarization};
use crate::calibration::{calibrate, stability_stats};
use crate::capture::{
    antenna_channel_response, simulate_b2b, AttenuatorModel, DriftParams, SystemParams, SystemResponse,
};
use crate::capture_file::CaptureFile;
use crate::channel::{synthesize_paths, Scene, Trajectory, TxPose, Wobble};
use crate::pipeline::{analyze_series, calibrate_series, Simulator};
use crate::processing::{
    cir_from_grid, correlation_matrix, gammas, hermitian_eigenvalues, rms_delay_spread_pdp, rx_power,
    threshold_and_gate, GateConfig, RawCir, Window,
};
use crate::scenario::{Preset, ScenarioConfig};
use crate::waveform::{make_tone_plan, snapshot_timestamps, TimingPlan, TonePlan};
use crate::SPEED_OF_LIGHT;

type Check = fn(&mut ChaCha8Rng) -> Result<String, String>;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

const CHECKS: &[(&str, Check)] = &[
    ("timing identity", timing_identity),
    ("tone grid", tone_grid),
    ("port indexing bijective", port_indexing),
    ("array rotation permutes columns", array_rotation),
    ("co-pol gain >= cross-pol gain", co_ge_cross),
    ("path power bound", path_power_bound),
    ("path reciprocity", path_reciprocity),
    ("still hover equals static point", still_hover),
    ("square route stays on perimeter", route_perimeter),
    ("Parseval identity", parseval),
    ("gating monotonicity", gating_monotonicity),
    ("gated bins respect threshold and gate", gating_invariants),
    ("P_RX phase-rotation invariance", prx_phase_invariance),
    ("delay spread shift/scale invariance", delay_spread_invariance),
    ("R PSD and trace identity", correlation_psd),
    ("gamma12 <= gamma14", gamma_order),
    ("B2B self-calibration equals attenuator", b2b_self_calibration),
    ("zero-drift stability is exactly zero", zero_drift_stability),
    ("noiseless calibration recovers channel", calibration_identity),
    ("file format bit-exact round trip", file_round_trip),
    ("cross-run determinism", determinism),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run(seed: u64) -> SelftestReport {
    let checks = CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, f))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let (passed, detail) = match f(&mut rng) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult { name, passed, detail }
        })
        .collect();
    SelftestReport { seed, checks }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: crate::Error) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Small but complete scenario: the courtyard scene with 256 tones.
fn small_config(preset: Preset) -> ScenarioConfig {
    let mut c = preset.config();
    c.tone_plan = make_tone_plan(3.5e9, 20e3, 256).expect("valid plan");
    c.capture.burst_count = 1;
    c.capture.b2b_snapshots = 4;
    c
}

fn random_raw(rng: &mut ChaCha8Rng, ports: usize, bins: usize) -> RawCir {
    let mut h: Vec<Complex64> = (0..ports * bins).map(|_| cn(rng) * 1e-3).collect();
    for k in 0..ports {
        for _ in 0..3 {
            let m = rng.random_range(0..bins / 2);
            h[k * bins + m] += cn(rng) * 4.0;
        }
    }
    RawCir {
        port_count: ports,
        bin_count: bins,
        delay_resolution: 1.0 / (bins as f64 * 20e3),
        h,
    }
}

fn timing_identity(_: &mut ChaCha8Rng) -> Result<String, String> {
    let t = TimingPlan::default();
    ensure(t.simo_duration() == 128.0 * 50e-6, || {
        format!("SIMO duration {}", t.simo_duration())
    })?;
    let ts = snapshot_timestamps(&t, 2).map_err(e2s)?;
    let want = [0.0, 0.0064, 0.0128, 0.05, 0.0564, 0.0628];
    for (a, b) in ts.iter().zip(want) {
        ensure((a - b).abs() < 1e-15, || format!("timestamps {ts:?}"))?;
    }
    Ok(format!(
        "SIMO {} s, burst period {} s",
        t.simo_duration(),
        t.burst_period()
    ))
}

fn tone_grid(_: &mut ChaCha8Rng) -> Result<String, String> {
    let p = TonePlan::default();
    let f = p.frequencies();
    for w in f.windows(2) {
        ensure(rel(w[1] - w[0], p.tone_spacing) < 1e-6, || "grid not uniform".into())?;
    }
    let mid = (f[0] + f[f.len() - 1]) / 2.0;
    ensure(rel(mid, p.center_frequency) < 1e-15, || {
        format!("grid centered at {mid}")
    })?;
    ensure(rel(p.max_unambiguous_delay(), 50e-6) < 1e-12, || "max delay".into())?;
    Ok(format!(
        "{} tones over {:.2} MHz",
        p.tone_count,
        p.occupied_bandwidth() / 1e6
    ))
}

fn port_indexing(_: &mut ChaCha8Rng) -> Result<String, String> {
    let g = ArraySpec::default().build().map_err(e2s)?;
    let mut seen = vec![false; g.port_count()];
    for c in 0..g.columns {
        for r in 0..g.rows {
            for pol in [Polarization::V, Polarization::H] {
                let id = g.port_id(c, r, pol);
                ensure(id < seen.len() && !seen[id], || format!("port id {id} repeated"))?;
                seen[id] = true;
                let p = &g.ports[id];
                ensure(p.column == c && p.row == r && p.polarization == pol, || {
                    format!("port {id} descriptor")
                })?;
                let rho = p.position.x.hypot(p.position.y);
                ensure((rho - g.radius).abs() < 1e-12, || format!("port {id} off cylinder"))?;
            }
        }
    }
    Ok(format!("{} ports", g.port_count()))
}

fn array_rotation(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let g = ArraySpec::default().build().map_err(e2s)?;
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI / g.columns as f64);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d = unit(rng);
        let jones = [cn(rng), cn(rng)];
        let c = rng.random_range(0..g.columns);
        let r = rng.random_range(0..g.rows);
        let pol = if rng.random::<bool>() {
            Polarization::V
        } else {
            Polarization::H
        };
        let a = g.port_gain(g.port_id(c, r, pol), &d, &jones).map_err(e2s)?;
        let b = g
            .port_gain(g.port_id((c + 1) % g.columns, r, pol), &(rot * d), &jones)
            .map_err(e2s)?;
        worst = worst.max((a - b).norm());
    }
    ensure(worst < 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn co_ge_cross(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let g = ArraySpec::default().build().map_err(e2s)?;
    let v = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let h = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    for _ in 0..500 {
        let d = unit(rng);
        let c = rng.random_range(0..g.columns);
        let (pv, ph) = (g.port_id(c, 0, Polarization::V), g.port_id(c, 0, Polarization::H));
        let co = g.port_gain(pv, &d, &v).map_err(e2s)?.norm();
        let cross = g.port_gain(ph, &d, &v).map_err(e2s)?.norm();
        ensure(co >= cross, || format!("V wave: co {co} < cross {cross}"))?;
        let co = g.port_gain(ph, &d, &h).map_err(e2s)?.norm();
        let cross = g.port_gain(pv, &d, &h).map_err(e2s)?.norm();
        ensure(co >= cross, || format!("H wave: co {co} < cross {cross}"))?;
    }
    Ok("500 directions".into())
}

fn random_tx(rng: &mut ChaCha8Rng) -> TxPose {
    let p = Vector3::new(
        rng.random_range(-50.0..50.0),
        rng.random_range(-20.0..20.0),
        rng.random_range(0.5..55.0),
    );
    TxPose {
        position: p.into(),
        axis: crate::channel::tilted_axis(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)).into(),
    }
}

fn path_power_bound(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let scene = crate::scenario::courtyard_scene();
    let lambda = SPEED_OF_LIGHT / 3.5e9;
    let mut count = 0;
    for _ in 0..200 {
        let tx = random_tx(rng);
        let set = synthesize_paths(&scene, &tx, 3.5e9).map_err(e2s)?;
        for p in &set.paths {
            let bound = lambda / (4.0 * PI * p.delay * SPEED_OF_LIGHT);
            ensure(p.amplitude() <= bound * (1.0 + 1e-12), || {
                format!("path amplitude {} above bound {bound}", p.amplitude())
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} paths"))
}

fn path_reciprocity(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let base = crate::scenario::courtyard_scene();
    for _ in 0..100 {
        let tx = random_tx(rng);
        let forward = synthesize_paths(&base, &tx, 3.5e9).map_err(e2s)?;
        let swapped = Scene {
            rx_position: tx.position,
            ..base.clone()
        };
        let back = synthesize_paths(&swapped, &TxPose::level(base.rx()), 3.5e9).map_err(e2s)?;
        ensure(forward.len() == back.len(), || {
            format!("{} paths forward, {} back", forward.len(), back.len())
        })?;
        for (a, b) in forward.paths.iter().zip(&back.paths) {
            ensure(rel(a.delay, b.delay) < 1e-12, || {
                format!("delays {} vs {}", a.delay, b.delay)
            })?;
        }
    }
    Ok("100 geometries".into())
}

fn still_hover(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let timing = TimingPlan::default();
    let position = [12.0, 0.0, 1.8];
    let hover = Trajectory::Hover {
        position,
        wobble: Wobble {
            sigma_pos: 0.0,
            sigma_angle: 0.0,
            ..Wobble::default()
        },
    };
    let fixed = Trajectory::StaticPoint { position };
    for _ in 0..100 {
        let t = rng.random_range(0.0..100.0);
        ensure(hover.tx_pose_at(t, &timing) == fixed.tx_pose_at(t, &timing), || {
            format!("differs at t = {t}")
        })?;
    }
    let wobbly = Trajectory::Hover {
        position,
        wobble: Wobble::default(),
    };
    let bound = 6.0 * Wobble::default().sigma_pos;
    for i in 0..1000 {
        let p = wobbly.tx_position_at(i as f64 * 0.01, &timing);
        ensure((p - Vector3::from(position)).norm() <= bound + 1e-12, || {
            "hover offset unbounded".into()
        })?;
    }
    Ok("exact match; offsets within 6 sigma".into())
}

fn route_perimeter(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let timing = TimingPlan::default();
    let route = Trajectory::default_route();
    for _ in 0..500 {
        let p = route.tx_position_at(rng.random_range(0.0..200.0), &timing);
        let on_edge = ((p.x.abs() - 15.0).abs() < 1e-9 && p.y.abs() <= 15.0 + 1e-9)
            || ((p.y.abs() - 15.0).abs() < 1e-9 && p.x.abs() <= 15.0 + 1e-9);
        ensure(on_edge && p.z == 50.0, || format!("{p:?} off the square"))?;
    }
    Ok("500 times".into())
}

fn random_grid_response(rng: &mut ChaCha8Rng, ports: usize, tones: usize) -> (Vec<f64>, Vec<Complex64>) {
    let plan = make_tone_plan(3.5e9, 20e3, tones).expect("valid plan");
    let f = plan.frequencies();
    let mut h = Vec::with_capacity(ports * tones);
    for _ in 0..ports {
        let taus: Vec<(f64, Complex64)> = (0..3).map(|_| (rng.random_range(0.0..2e-6), cn(rng))).collect();
        for &fr in &f {
            let mut v = cn(rng) * 0.01;
            for (tau, a) in &taus {
                v += a * Complex64::from_polar(1.0, -2.0 * PI * fr * tau);
            }
            h.push(v);
        }
    }
    (f, h)
}

fn parseval(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let tones = rng.random_range(16..600);
        let (f, h) = random_grid_response(rng, 3, tones);
        let cir = cir_from_grid(&f, &h, Window::Rect).map_err(e2s)?;
        let et: f64 = cir.h.iter().map(|v| v.norm_sqr()).sum();
        let ef: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        worst = worst.max(rel(et, ef));
    }
    ensure(worst < 1e-12, || format!("relative energy error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e}"))
}

fn gating_monotonicity(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for _ in 0..50 {
        let raw = random_raw(rng, 4, 256);
        let gate = GateConfig {
            delay_gate: raw.delay_resolution * rng.random_range(1.0..200.0),
            ..GateConfig::default()
        };
        let g = threshold_and_gate(&raw, &gate).map_err(e2s)?;
        let before: f64 = raw.h.iter().map(|v| v.norm_sqr()).sum();
        ensure(rx_power(&g) <= before, || {
            format!("gated {} > raw {before}", rx_power(&g))
        })?;
    }
    Ok("50 random CIRs".into())
}

fn gating_invariants(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for _ in 0..50 {
        let raw = random_raw(rng, 3, 256);
        let g = threshold_and_gate(&raw, &GateConfig::default()).map_err(e2s)?;
        let gate_bins = GateConfig::default().delay_gate / raw.delay_resolution;
        for k in 0..raw.port_count {
            for (m, (v, r)) in g.port(k).iter().zip(raw.port(k)).enumerate() {
                if v.norm_sqr() > 0.0 {
                    ensure(*v == *r, || "retained bin altered".into())?;
                    ensure(v.norm_sqr() >= g.threshold[k], || format!("bin {m} below threshold"))?;
                    let first = g.first_bin[k].ok_or("retained bin in empty port")?;
                    ensure((m - first) as f64 <= gate_bins, || {
                        format!("bin {m} beyond the delay gate")
                    })?;
                }
            }
        }
    }
    Ok("50 random CIRs".into())
}

fn prx_phase_invariance(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let raw = random_raw(rng, 4, 128);
        let mut rotated = raw.clone();
        for k in 0..raw.port_count {
            let ph = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
            for v in &mut rotated.h[k * raw.bin_count..(k + 1) * raw.bin_count] {
                *v *= ph;
            }
        }
        let a = rx_power(&threshold_and_gate(&raw, &GateConfig::default()).map_err(e2s)?);
        let b = rx_power(&threshold_and_gate(&rotated, &GateConfig::default()).map_err(e2s)?);
        worst = worst.max(rel(a, b));
    }
    ensure(worst < 1e-12, || format!("relative change {worst:e}"))?;
    Ok(format!("max relative change {worst:.1e}"))
}

fn delay_spread_invariance(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..40);
        let delays: Vec<f64> = (0..n).map(|i| i as f64 * 27e-9).collect();
        let powers: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s = rms_delay_spread_pdp(&delays, &powers).ok_or("empty PDP")?;
        let shift = rng.random_range(0.0..1e-5);
        let scale = rng.random_range(1e-6..1e6);
        let shifted: Vec<f64> = delays.iter().map(|d| d + shift).collect();
        let scaled: Vec<f64> = powers.iter().map(|p| p * scale).collect();
        let s2 = rms_delay_spread_pdp(&shifted, &scaled).ok_or("empty PDP")?;
        worst = worst.max(rel(s, s2));
    }
    ensure(worst < 1e-6, || format!("relative change {worst:e}"))?;
    Ok(format!("max relative change {worst:.1e}"))
}

fn correlation_psd(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for _ in 0..20 {
        let ports = rng.random_range(1..16);
        let tones = rng.random_range(1..64);
        let h: Vec<Complex64> = (0..ports * tones).map(|_| cn(rng)).collect();
        let r = correlation_matrix(&h, ports, tones).map_err(e2s)?;
        ensure(r == r.adjoint(), || "R not conjugate-symmetric".into())?;
        let trace: f64 = (0..ports).map(|k| r[(k, k)].re).sum();
        let direct: f64 = h.iter().map(|v| v.norm_sqr()).sum::<f64>() / tones as f64;
        ensure(rel(trace, direct) < 1e-12, || format!("trace {trace} vs {direct}"))?;
        let e = hermitian_eigenvalues(&r);
        ensure(e.windows(2).all(|w| w[0] >= w[1]), || "eigenvalues not sorted".into())?;
        ensure(e.iter().all(|&x| x >= -1e-9 * trace), || {
            format!("negative eigenvalue in {e:?}")
        })?;
        ensure(rel(e.iter().sum(), trace) < 1e-9, || {
            "eigenvalue sum differs from trace".into()
        })?;
    }
    Ok("20 random matrices".into())
}

fn gamma_order(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for _ in 0..50 {
        let tones = rng.random_range(1..32);
        let h: Vec<Complex64> = (0..8 * tones).map(|_| cn(rng)).collect();
        let e = hermitian_eigenvalues(&correlation_matrix(&h, 8, tones).map_err(e2s)?);
        let (g12, g14) = gammas(&e);
        ensure(!(g12.value() > g14.value()), || {
            format!("gamma12 {g12} > gamma14 {g14}")
        })?;
    }
    Ok("50 random matrices".into())
}

fn b2b_self_calibration(_: &mut ChaCha8Rng) -> Result<String, String> {
    let tones = make_tone_plan(3.5e9, 20e3, 64).map_err(e2s)?;
    let system = SystemResponse::generate(&SystemParams::default(), 64, 8).map_err(e2s)?;
    let att = AttenuatorModel {
        nominal_loss_db: 30.0,
        ripple_db: 0.5,
    };
    let b2b = simulate_b2b(&tones, &system.with_drift(DriftParams::NONE), &att, 1, None, 3).map_err(e2s)?;
    let h = calibrate(&b2b[0], &b2b[0], &att).map_err(e2s)?;
    for (i, v) in h.h_f.iter().enumerate() {
        let g = att.response(i % 64, 64);
        ensure((v - g).norm() <= 1e-12 * g, || format!("value {v} vs attenuator {g}"))?;
    }
    Ok("8 ports x 64 tones".into())
}

fn zero_drift_stability(_: &mut ChaCha8Rng) -> Result<String, String> {
    let tones = make_tone_plan(3.5e9, 20e3, 64).map_err(e2s)?;
    let system = SystemResponse::generate(&SystemParams::default(), 64, 4)
        .map_err(e2s)?
        .with_drift(DriftParams::NONE);
    let b2b = simulate_b2b(&tones, &system, &AttenuatorModel::default(), 20, None, 1).map_err(e2s)?;
    let s = stability_stats(&b2b, 2).map_err(e2s)?;
    ensure(s.amplitude_std_db == 0.0 && s.phase_std_deg == 0.0, || {
        format!("stds {} dB, {} deg", s.amplitude_std_db, s.phase_std_deg)
    })?;
    Ok("stds exactly 0".into())
}

fn calibration_identity(_: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cfg = small_config(Preset::PaperStatic);
    cfg.capture_snr_db = None;
    cfg.b2b_snr_db = None;
    cfg.system.drift = DriftParams::NONE;
    let sim = Simulator::new(cfg).map_err(e2s)?;
    let capture = sim.capture_series().map_err(e2s)?;
    let b2b = sim.b2b_series().map_err(e2s)?;
    let cal = calibrate_series(&capture, &b2b, &sim.config.attenuator).map_err(e2s)?;
    let truth = antenna_channel_response(
        &sim.paths_at(capture[0].timestamp).map_err(e2s)?,
        &sim.geometry,
        &sim.config.tone_plan,
        &sim.config.scene,
    )
    .map_err(e2s)?;
    let worst = cal[0]
        .h_f
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b).norm() / b.norm())
        .fold(0.0, f64::max);
    ensure(worst < 1e-10, || format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e}"))
}

fn file_bytes(file: &CaptureFile) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    file.write_to(&mut out).map_err(e2s)?;
    Ok(out)
}

fn file_round_trip(_: &mut ChaCha8Rng) -> Result<String, String> {
    let sim = Simulator::new(small_config(Preset::PaperHover)).map_err(e2s)?;
    let file = sim.file(sim.capture_series().map_err(e2s)?).map_err(e2s)?;
    let bytes = file_bytes(&file)?;
    let back = CaptureFile::read_from(&bytes[..]).map_err(e2s)?;
    ensure(back == file.clone().quantized(), || "decoded file differs".into())?;
    ensure(file_bytes(&back)? == bytes, || "re-encoded bytes differ".into())?;
    Ok(format!("{} bytes", bytes.len()))
}

fn determinism(_: &mut ChaCha8Rng) -> Result<String, String> {
    let once = || -> Result<(Vec<u8>, String), String> {
        let sim = Simulator::new(small_config(Preset::PaperHover)).map_err(e2s)?;
        let capture = sim.capture_series().map_err(e2s)?;
        let b2b = sim.b2b_series().map_err(e2s)?;
        let cal = calibrate_series(&capture, &b2b, &sim.config.attenuator).map_err(e2s)?;
        let metrics = analyze_series(
            &cal,
            &sim.config.tone_plan,
            &sim.geometry,
            &sim.config.analysis_options(),
        )
        .map_err(e2s)?;
        let mut csv = Vec::new();
        crate::processing::write_metrics_csv(&metrics, None, &mut csv).map_err(e2s)?;
        Ok((
            file_bytes(&sim.file(capture).map_err(e2s)?)?,
            String::from_utf8_lossy(&csv).into_owned(),
        ))
    };
    let a = once()?;
    let b = once()?;
    ensure(a.0 == b.0, || "capture bytes differ between runs".into())?;
    ensure(a.1 == b.1, || "metrics differ between runs".into())?;
    Ok("identical captures and metrics".into())
}
