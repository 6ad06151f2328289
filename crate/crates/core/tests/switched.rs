//! Switched-waveform simulation checked against the averaged model.

use approx::assert_relative_eq;

use drivetrain_core::sim::{
    compare_to_analytical, count_voltage_levels, run_switched, SimConfig, SimError, SimOptions,
};
use drivetrain_core::topology::{evaluate_fc_point, PointEvaluation, TopologyConfig, DEFAULT_VALIDATION_SPEED};
use drivetrain_core::SimWaveforms;

fn run(cfg: &TopologyConfig, fc_power: f64, omega_e: f64) -> (SimConfig, SimWaveforms, PointEvaluation) {
    let e = evaluate_fc_point(cfg, fc_power, omega_e).unwrap();
    let sim = SimConfig::from_point(cfg, &e, &SimOptions::default()).unwrap();
    let w = run_switched(&sim).unwrap();
    (sim, w, e)
}

fn both() -> [TopologyConfig; 2] {
    [TopologyConfig::conventional_default(), TopologyConfig::dual_default()]
}

#[test]
fn fundamental_current_tracks_command() {
    for cfg in both() {
        let (sim, w, _) = run(&cfg, 50e3, DEFAULT_VALIDATION_SPEED);
        let f = w.fundamental.unwrap();
        let target = sim.commanded_current.magnitude();
        assert_relative_eq!(f.current_peak, target, max_relative = 0.05);
    }
}

#[test]
fn fundamental_winding_voltage_matches_phasor() {
    for cfg in both() {
        let (_, w, e) = run(&cfg, 50e3, DEFAULT_VALIDATION_SPEED);
        let v = w.fundamental.unwrap().winding_voltage;
        let target = e.operating_point.voltage;
        assert!(
            (v - target).magnitude() / target.magnitude() < 0.03,
            "{v:?} vs {target:?}"
        );
    }
}

#[test]
fn energy_balance_closes() {
    for cfg in both() {
        let (_, w, _) = run(&cfg, 50e3, DEFAULT_VALIDATION_SPEED);
        assert!(w.energy.relative_error().abs() < 0.01, "{:?}", w.energy);
    }
}

#[test]
fn turn_on_events_match_carrier_count() {
    for cfg in both() {
        let (sim, w, _) = run(&cfg, 50e3, DEFAULT_VALIDATION_SPEED);
        for (bridge, events) in sim.bridges.iter().zip(&w.turn_on_events) {
            let expected = bridge.switching_frequency * w.window;
            for &n in events {
                assert!(
                    (n as f64 - expected).abs() <= 1.0 + 1e-9,
                    "{}: {n} vs {expected}",
                    bridge.name
                );
            }
        }
    }
}

#[test]
fn losses_agree_with_averaged_model_across_power() {
    for cfg in both() {
        for power in [20e3, 35e3, 50e3] {
            let (_, w, e) = run(&cfg, power, DEFAULT_VALIDATION_SPEED);
            let c = compare_to_analytical(&w, &e.losses);
            assert!(c.passed, "{} at {power} W: {c:?}", cfg.kind());
        }
    }
}

#[test]
fn level_counts() {
    let [conv, dual] = both();
    let (_, w, _) = run(&conv, 50e3, DEFAULT_VALIDATION_SPEED);
    assert_eq!(count_voltage_levels(&w, 20.0), 5);
    let (_, w, _) = run(&dual, 50e3, DEFAULT_VALIDATION_SPEED);
    assert!(count_voltage_levels(&w, 20.0) >= 7);
}

#[test]
fn coarse_step_is_rejected() {
    let cfg = TopologyConfig::dual_default();
    let e = evaluate_fc_point(&cfg, 50e3, DEFAULT_VALIDATION_SPEED).unwrap();
    let opts = SimOptions {
        dt: Some(1e-5),
        ..SimOptions::default()
    };
    let sim = SimConfig::from_point(&cfg, &e, &opts).unwrap();
    assert!(matches!(run_switched(&sim), Err(SimError::UnstableIntegration { .. })));
}

#[test]
fn csv_has_one_row_per_kept_sample() {
    let (_, w, _) = run(&TopologyConfig::conventional_default(), 30e3, DEFAULT_VALIDATION_SPEED);
    let mut buf = Vec::new();
    w.write_csv(&mut buf, 10).unwrap();
    let rows = String::from_utf8(buf).unwrap().lines().count() - 1;
    assert_eq!(rows, w.time.len().div_ceil(10));
}

#[test]
fn dual_bridge_fundamentals_compose_the_winding_vector() {
    let (_, w, e) = run(&TopologyConfig::dual_default(), 50e3, DEFAULT_VALIDATION_SPEED);
    let f = w.fundamental.unwrap();
    assert_eq!(f.bridge_voltages.len(), 2);
    let sum = f.bridge_voltages[0] + f.bridge_voltages[1];
    let target = e.operating_point.voltage;
    assert!(
        (sum - target).magnitude() / target.magnitude() < 0.03,
        "{sum:?} vs {target:?}"
    );
}
