//! Randomized invariants of the processing chain and the capture format.

use a2gs_core::capture::{AttenuatorModel, RecordType};
use a2gs_core::processing::{
    cir_from_grid, correlation_matrix, hermitian_eigenvalues, rms_delay_spread_pdp, threshold_and_gate, GateConfig,
    Window,
};
use a2gs_core::waveform::make_tone_plan;
use a2gs_core::{calibrate, CaptureFile, CaptureRecord};
use num_complex::Complex64;
use proptest::prelude::*;

fn arb_complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn arb_response(ports: usize, tones: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(arb_complex(), ports * tones)
}

fn record(kind: RecordType, index: u64, ports: usize, tones: usize, tf: Vec<Complex64>) -> CaptureRecord {
    CaptureRecord {
        record_type: kind,
        snapshot_index: index,
        timestamp: index as f64 * 0.0064,
        tx_pose: None,
        snr_db: None,
        seed: 0,
        port_count: ports,
        tone_count: tones,
        tf,
    }
}

fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn idft_preserves_energy(h in arb_response(3, 64)) {
        let plan = make_tone_plan(3.5e9, 20e3, 64).unwrap();
        let cir = cir_from_grid(&plan.frequencies(), &h, Window::Rect).unwrap();
        prop_assert!((energy(&cir.h) - energy(&h)).abs() <= 1e-12 * energy(&h));
    }

    #[test]
    fn gating_only_removes_bins(h in arb_response(2, 128), margin in 1.0f64..40.0) {
        let plan = make_tone_plan(3.5e9, 20e3, 128).unwrap();
        let raw = cir_from_grid(&plan.frequencies(), &h, Window::Rect).unwrap();
        let gate = GateConfig { peak_margin_db: margin, delay_gate: 1e-5, ..GateConfig::default() };
        let gated = threshold_and_gate(&raw, &gate).unwrap();
        for (g, r) in gated.h.iter().zip(&raw.h) {
            prop_assert!(*g == Complex64::new(0.0, 0.0) || g == r);
        }
        // A looser margin keeps a superset.
        let looser = GateConfig { peak_margin_db: margin + 5.0, ..gate };
        let wide = threshold_and_gate(&raw, &looser).unwrap();
        for (g, w) in gated.h.iter().zip(&wide.h) {
            prop_assert!(g.norm_sqr() <= w.norm_sqr());
        }
    }

    #[test]
    fn delay_spread_is_shift_invariant_and_scales(
        pdp in prop::collection::vec((0.0f64..1e-6, 1e-6f64..1.0), 2..12),
        shift in 0.0f64..1e-5,
        scale in 0.1f64..10.0,
    ) {
        let (d, p): (Vec<f64>, Vec<f64>) = pdp.into_iter().unzip();
        let base = rms_delay_spread_pdp(&d, &p).unwrap();
        let shifted: Vec<f64> = d.iter().map(|x| x + shift).collect();
        prop_assert!((rms_delay_spread_pdp(&shifted, &p).unwrap() - base).abs() <= 1e-9 * (base + 1e-9));
        let scaled: Vec<f64> = d.iter().map(|x| x * scale).collect();
        prop_assert!((rms_delay_spread_pdp(&scaled, &p).unwrap() - base * scale).abs() <= 1e-9 * (base * scale + 1e-12));
        let louder: Vec<f64> = p.iter().map(|x| x * scale).collect();
        prop_assert!((rms_delay_spread_pdp(&d, &louder).unwrap() - base).abs() <= 1e-9 * (base + 1e-12));
    }

    #[test]
    fn correlation_is_psd_with_power_trace(h in arb_response(6, 16)) {
        let r = correlation_matrix(&h, 6, 16).unwrap();
        prop_assert_eq!(r.clone(), r.adjoint());
        let e = hermitian_eigenvalues(&r);
        let trace: f64 = (0..6).map(|i| r[(i, i)].re).sum();
        prop_assert!((e.iter().sum::<f64>() - trace).abs() <= 1e-12 * trace);
        prop_assert!((trace - energy(&h) / 16.0).abs() <= 1e-12 * trace);
        prop_assert!(e.iter().all(|&x| x >= -1e-12 * trace));
        prop_assert!(e.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn calibration_recovers_channel(
        h in arb_response(2, 32),
        chain in prop::collection::vec((0.1f64..2.0, -3.2f64..3.2), 32),
        port_gain in prop::collection::vec((0.5f64..2.0, -3.2f64..3.2), 2),
        loss_db in 0.0f64..40.0,
    ) {
        let att = AttenuatorModel::flat(loss_db);
        let g_att = 10f64.powf(-loss_db / 20.0);
        let c: Vec<Complex64> = chain.iter().map(|&(a, p)| Complex64::from_polar(a, p)).collect();
        let g: Vec<Complex64> = port_gain.iter().map(|&(a, p)| Complex64::from_polar(a, p)).collect();
        let meas: Vec<Complex64> = (0..64).map(|i| h[i] * c[i % 32] * g[i / 32]).collect();
        let refr: Vec<Complex64> = (0..64).map(|i| c[i % 32] * g[i / 32] * g_att).collect();
        let out = calibrate(
            &record(RecordType::Measurement, 0, 2, 32, meas),
            &record(RecordType::BackToBack, 0, 2, 32, refr),
            &att,
        ).unwrap();
        for (a, b) in out.h_f.iter().zip(&h) {
            prop_assert!((a - b).norm() <= 1e-10 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn capture_file_round_trips(h in arb_response(4, 8), count in 1usize..4) {
        let plan = make_tone_plan(3.5e9, 20e3, 8).unwrap();
        let records: Vec<_> = (0..count)
            .map(|i| record(RecordType::Measurement, i as u64, 4, 8, h.clone()))
            .collect();
        let file = CaptureFile::new(records, plan, "c".into(), "g".into()).unwrap().quantized();
        let mut buf = Vec::new();
        file.write_to(&mut buf).unwrap();
        prop_assert_eq!(CaptureFile::read_from(buf.as_slice()).unwrap(), file);
    }
}
