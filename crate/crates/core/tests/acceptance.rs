//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use drivetrain_core::cycle::{run_cycle, write_samples_csv, DriveCycle};
use drivetrain_core::losses::{
    conduction_loss_oracle, conduction_losses, switching_losses, InverterConditions, PowerModuleParams,
};
use drivetrain_core::sharing::{fc_power_reference, validate_fc_constraints, SharingPolicy};
use drivetrain_core::sim::{compare_to_analytical, count_voltage_levels, run_switched, SimConfig, SimOptions};
use drivetrain_core::topology::{
    compare_point, evaluate_fc_point, evaluate_point, EvalError, TopologyConfig, DEFAULT_VALIDATION_SPEED,
};
use drivetrain_core::vehicle::{acceleration_profile, mech_power, motor_shaft_speed};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let t = start.elapsed();
    (
        t <= budget,
        format!("{:.2} s of {} s", t.as_secs_f64(), budget.as_secs()),
    )
}

fn closed_form_vs_oracle() -> Outcome {
    let start = Instant::now();
    let modules = [
        PowerModuleParams::fs400r07a3e3(),
        PowerModuleParams::fs400r12a2t4(),
        PowerModuleParams::ff450r12kt4p(),
    ];
    let mut worst = 0.0_f64;
    let mut points = 0;
    for module in &modules {
        for m in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for phi in [0.0, PI / 6.0, PI / 4.0, PI / 2.0, 2.0 * PI / 3.0, PI] {
                for i in [1.0, 50.0, 400.0] {
                    let c = InverterConditions {
                        peak_phase_current: i,
                        modulation_index: m,
                        displacement_factor: f64::cos(phi),
                        dc_link_voltage: 300.0,
                        switching_frequency: 10e3,
                    };
                    let (a, b) = conduction_losses(&c, module).unwrap();
                    let (x, y) = conduction_loss_oracle(&c, module);
                    worst = worst.max(((a - x) / x).abs()).max(((b - y) / y).abs());
                    points += 1;
                }
            }
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(1));
    outcome(
        worst < 1e-6 && points == 270 && fast,
        format!("{points} evaluations, worst relative error {worst:.2e} (limit 1e-6), {time}"),
    )
}

fn switching_linearity() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let modules = [
        PowerModuleParams::fs400r07a3e3(),
        PowerModuleParams::fs400r12a2t4(),
        PowerModuleParams::ff450r12kt4p(),
    ];
    let mut worst = 0.0_f64;
    for n in 0..20 {
        let module = &modules[n % 3];
        let c = InverterConditions {
            peak_phase_current: rng.random_range(1.0..600.0),
            modulation_index: rng.random_range(0.0..1.0),
            displacement_factor: rng.random_range(-1.0..1.0),
            dc_link_voltage: rng.random_range(100.0..900.0),
            switching_frequency: rng.random_range(1e3..40e3),
        };
        let k: f64 = rng.random_range(0.1..5.0);
        let base = switching_losses(&c, module);
        let scaled = [
            InverterConditions {
                switching_frequency: k * c.switching_frequency,
                ..c
            },
            InverterConditions {
                dc_link_voltage: k * c.dc_link_voltage,
                ..c
            },
            InverterConditions {
                peak_phase_current: k * c.peak_phase_current,
                ..c
            },
        ];
        for s in &scaled {
            let (a, b) = switching_losses(s, module);
            worst = worst
                .max(((a - k * base.0) / (k * base.0)).abs())
                .max(((b - k * base.1) / (k * base.1)).abs());
        }
        // additivity in current
        let half = InverterConditions {
            peak_phase_current: 0.5 * c.peak_phase_current,
            ..c
        };
        let h = switching_losses(&half, module);
        worst = worst.max(((2.0 * h.0 - base.0) / base.0).abs());
    }
    let (fast, time) = within_budget(start, Duration::from_secs(1));
    outcome(
        worst <= 8.0 * f64::EPSILON && fast,
        format!("20 random points, worst relative deviation {worst:.2e} (machine precision), {time}"),
    )
}

fn published_cycle_efficiencies() -> Outcome {
    let start = Instant::now();
    // (cycle, dual, conventional) efficiencies in percent
    let published = [("hwfet", 94.62, 89.35), ("udds", 83.44, 73.31)];
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, dual_ref, conv_ref) in published {
        let cycle = DriveCycle::builtin(name).unwrap();
        let t = Instant::now();
        let d = run_cycle(&cycle, &TopologyConfig::dual_default()).unwrap();
        let c = run_cycle(&cycle, &TopologyConfig::conventional_default()).unwrap();
        let per_run = t.elapsed().as_secs_f64() / 2.0;
        let (de, ce) = (100.0 * d.efficiency, 100.0 * c.efficiency);
        let dual_ok = (de - dual_ref).abs() <= 2.5;
        let conv_ok = (ce - conv_ref).abs() <= 2.5;
        let order_ok = de > ce;
        passed &= dual_ok && conv_ok && order_ok && per_run < 10.0;
        parts.push(format!(
            "{name}: dual {de:.2}% vs {dual_ref} ({}), conventional {ce:.2}% vs {conv_ref} ({}), dual > conventional {}",
            if dual_ok { "ok" } else { "outside 2.5 pp" },
            if conv_ok { "ok" } else { "outside 2.5 pp" },
            if order_ok { "ok" } else { "violated" },
        ));
    }
    let (_, time) = within_budget(start, Duration::from_secs(20));
    outcome(passed, format!("{}; {time}", parts.join("; ")))
}

fn loss_ratio_50kw() -> Outcome {
    let start = Instant::now();
    let (d, c) = (TopologyConfig::dual_default(), TopologyConfig::conventional_default());
    let at_default = compare_point(&d, &c, 50e3, DEFAULT_VALIDATION_SPEED)
        .unwrap()
        .loss_ratio;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..=12 {
        let factor = 0.7 + 0.05 * k as f64;
        let r = compare_point(&d, &c, 50e3, factor * DEFAULT_VALIDATION_SPEED)
            .unwrap()
            .loss_ratio;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let (fast, time) = within_budget(start, Duration::from_secs(1));
    let inside = |r: f64| (1.30..=1.60).contains(&r);
    outcome(
        inside(at_default) && inside(lo) && inside(hi) && fast,
        format!(
            "ratio {at_default:.4} at {DEFAULT_VALIDATION_SPEED} rad/s; +/-30% speed sweep spans [{lo:.4}, {hi:.4}] (band [1.30, 1.60]); {time}"
        ),
    )
}

fn simulate(
    cfg: &TopologyConfig,
    dt_factor: f64,
) -> (
    drivetrain_core::SimWaveforms,
    drivetrain_core::topology::PointEvaluation,
) {
    let e = evaluate_fc_point(cfg, 50e3, DEFAULT_VALIDATION_SPEED).unwrap();
    let mut sim = SimConfig::from_point(cfg, &e, &SimOptions::default()).unwrap();
    sim.dt *= dt_factor;
    (run_switched(&sim).unwrap(), e)
}

fn switched_vs_analytical() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for cfg in [TopologyConfig::conventional_default(), TopologyConfig::dual_default()] {
        let start = Instant::now();
        let (w, e) = simulate(&cfg, 1.0);
        let c = compare_to_analytical(&w, &e.losses);
        let (fast, time) = within_budget(start, Duration::from_secs(60));
        passed &= c.passed && fast;
        parts.push(format!(
            "{}: conduction {:+.2}%, switching {:+.2}%, total {:+.2}% ({time})",
            cfg.kind(),
            100.0 * c.conduction.relative_deviation,
            100.0 * c.switching.relative_deviation,
            100.0 * c.total.relative_deviation
        ));
    }
    outcome(passed, format!("{} (limits 10/20/15%)", parts.join("; ")))
}

fn level_counts() -> Outcome {
    let start = Instant::now();
    let (conv, _) = simulate(&TopologyConfig::conventional_default(), 1.0);
    let (dual, e) = simulate(&TopologyConfig::dual_default(), 1.0);
    let n_conv = count_voltage_levels(&conv, 20.0);
    let n_dual = count_voltage_levels(&dual, 20.0);
    let (fast, time) = within_budget(start, Duration::from_secs(60));
    outcome(
        n_conv == 5 && n_dual >= 7 && fast,
        format!(
            "conventional {n_conv} levels (expect 5), dual {n_dual} levels (expect >= 7, nominal 9) with V_fc = {:.1} V, V_bat = 400 V; {time}",
            e.fc_voltage
        ),
    )
}

fn power_sharing_constraints() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(7);
    let policy = SharingPolicy::default();
    let cfg = TopologyConfig::dual_default();
    let mut constraint_failures = 0;
    let mut worst_reconstruction = 0.0_f64;
    let mut worst_power = 0.0_f64;
    let mut eval_failures = 0;
    let mut limit_errors = 0;
    let mut evaluated = 0;
    let mut regen = 0;
    for _ in 0..100 {
        let n = rng.random_range(50..300);
        let dt = rng.random_range(0.1..1.0);
        let mut demand = Vec::with_capacity(n);
        let mut omega = Vec::with_capacity(n);
        let mut v: f64 = rng.random_range(2.0..27.0);
        for _ in 0..n {
            // up to 27 m/s, the top speed of the bundled cycles; bursts of hard braking
            let accel = if rng.random_bool(0.1) {
                rng.random_range(-3.0..-1.0)
            } else {
                rng.random_range(-1.0..1.2)
            };
            let load = mech_power(v, accel, &cfg.vehicle, &cfg.environment);
            let shaft = load.shaft.clamp(-50e3, 70e3);
            regen += usize::from(shaft < -20e3);
            demand.push(shaft);
            omega.push(motor_shaft_speed(v, &cfg.vehicle, cfg.motor.pole_pairs).1);
            v = (v + accel * dt).clamp(2.0, 27.0);
        }
        let reference = fc_power_reference(&demand, &policy, dt);
        if !validate_fc_constraints(&reference, &policy, dt).passed {
            constraint_failures += 1;
        }
        for k in 0..n {
            evaluated += 1;
            match evaluate_point(&cfg, demand[k], omega[k], reference[k]) {
                Ok(e) => {
                    let s = e.split.unwrap();
                    let v = e.operating_point.voltage;
                    let err = (s.fc_voltage + s.battery_voltage - v).magnitude() / v.magnitude();
                    worst_reconstruction = worst_reconstruction.max(err);
                    worst_power = worst_power.max(((s.realized_fc_power - reference[k]) / reference[k]).abs());
                }
                // a voltage limit error is a legitimate outcome outside the drive envelope
                Err(EvalError::Split { .. }) => limit_errors += 1,
                Err(_) => eval_failures += 1,
            }
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(5));
    outcome(
        constraint_failures == 0 && eval_failures == 0 && worst_reconstruction < 1e-12 && worst_power < 1e-9 && fast,
        format!(
            "100 traces: {constraint_failures} constraint violations; {evaluated} split points ({regen} below -20 kW, \
             {limit_errors} beyond the voltage limits, {eval_failures} other errors), reconstruction error {worst_reconstruction:.1e} (< 1e-12), \
             FC power error {worst_power:.1e} (< 1e-9); {time}"
        ),
    )
}

fn kinetic_energy_telescoping() -> Outcome {
    let start = Instant::now();
    let cfg = TopologyConfig::dual_default();
    let mut passed = true;
    let mut parts = Vec::new();
    for cycle in [DriveCycle::udds(), DriveCycle::hwfet()] {
        let a = acceleration_profile(&cycle.time, &cycle.speed);
        let p: Vec<f64> = (0..cycle.len())
            .map(|k| mech_power(cycle.speed[k], a[k], &cfg.vehicle, &cfg.environment).acceleration)
            .collect();
        let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
            (1..cycle.len())
                .map(|k| 0.5 * (f(k) + f(k - 1)) * (cycle.time[k] - cycle.time[k - 1]))
                .sum()
        };
        let net = trap(&|k| p[k]);
        let gross = trap(&|k| p[k].max(0.0));
        let rel = net.abs() / gross;
        passed &= rel < 1e-3;
        parts.push(format!("{}: |net| / gross = {rel:.2e}", cycle.name));
    }
    let (fast, time) = within_budget(start, Duration::from_secs(1));
    outcome(passed && fast, format!("{} (limit 1e-3); {time}", parts.join(", ")))
}

fn step_size_convergence() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for cfg in [TopologyConfig::conventional_default(), TopologyConfig::dual_default()] {
        let (coarse, _) = simulate(&cfg, 1.0);
        let (fine, _) = simulate(&cfg, 0.5);
        let (a, b) = (coarse.losses.total(), fine.losses.total());
        let converters =
            (coarse.losses.converter_total() - fine.losses.converter_total()).abs() / fine.losses.converter_total();
        let change = (a - b).abs() / b;
        passed &= change < 0.02 && converters < 0.02;
        parts.push(format!(
            "{}: total loss changes {:.3}%, converter loss {:.3}%",
            cfg.kind(),
            100.0 * change,
            100.0 * converters
        ));
    }
    outcome(passed, format!("{} (limit 2%)", parts.join("; ")))
}

fn determinism() -> Outcome {
    let cycle = DriveCycle::udds();
    let mut identical = true;
    for cfg in [TopologyConfig::dual_default(), TopologyConfig::conventional_default()] {
        let render = || {
            let r = run_cycle(&cycle, &cfg).unwrap();
            let mut csv = Vec::new();
            write_samples_csv(&mut csv, &r).unwrap();
            let json = serde_json::to_vec_pretty(&r.summary()).unwrap();
            (csv, json)
        };
        identical &= render() == render();
    }
    let sim = || {
        let (w, _) = simulate(&TopologyConfig::dual_default(), 1.0);
        let mut csv = Vec::new();
        w.write_csv(&mut csv, 10).unwrap();
        (csv, serde_json::to_vec(&w.losses).unwrap())
    };
    identical &= sim() == sim();
    outcome(
        identical,
        "repeated cycle CSV/JSON and waveform CSV/loss JSON outputs compared byte by byte",
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "closed-form conduction losses vs quadrature oracle",
            closed_form_vs_oracle,
        ),
        ("switching-loss linearity", switching_linearity),
        ("cycle efficiencies vs published table", published_cycle_efficiencies),
        ("50 kW loss ratio", loss_ratio_50kw),
        ("switched vs analytical losses", switched_vs_analytical),
        ("voltage level counts", level_counts),
        ("power-sharing constraints", power_sharing_constraints),
        ("vehicle dynamics energy telescoping", kinetic_energy_telescoping),
        ("step-size convergence", step_size_convergence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        println!(
            "criterion {:>2} {} {name}: {}",
            n + 1,
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
        if !result.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
