//! Stable file formats for cycle results.
//!
//! The per-sample CSV always carries every column for every topology;
//! converters that a topology lacks are written as zeros.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CycleEnergies, CycleResult};
use crate::losses::ConverterLoss;
use crate::topology::TopologyKind;

const CONVERTERS: [&str; 4] = ["fc_inverter", "battery_inverter", "traction_inverter", "boost"];

fn converter_columns() -> Vec<String> {
    let mut cols = Vec::new();
    for name in CONVERTERS {
        for part in ["igbt_cond", "diode_cond", "igbt_sw", "diode_rec", "inductor"] {
            cols.push(format!("{name}_{part}_w"));
        }
    }
    cols
}

/// Leading columns of the per-sample CSV; converter and total columns follow.
pub const SAMPLE_COLUMNS: [&str; 10] = [
    "t_s",
    "speed_mps",
    "accel_mps2",
    "omega_e_rad_s",
    "p_ac_w",
    "p_elec_w",
    "p_dc_w",
    "p_fc_w",
    "p_bat_w",
    "p_fc_ref_w",
];

/// Writes one row per sample.
pub fn write_samples_csv<W: Write>(out: W, result: &CycleResult) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = SAMPLE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(converter_columns());
    header.extend(["loss_motor_w", "loss_inverter_w", "loss_total_w", "id_injection_a"].map(String::from));
    w.write_record(&header)?;

    for s in &result.samples {
        let mut row = vec![
            s.time,
            s.speed,
            s.acceleration,
            s.omega_e,
            s.p_ac,
            s.p_elec,
            s.p_dc,
            s.p_fc,
            s.p_bat,
            s.fc_reference,
        ];
        for (_, c) in s.losses.converters() {
            let c = c.copied().unwrap_or_default();
            row.extend([
                c.igbt_conduction,
                c.diode_conduction,
                c.igbt_switching,
                c.diode_recovery,
                c.inductor_copper,
            ]);
        }
        row.extend([
            s.losses.motor_copper,
            s.losses.converter_total(),
            s.losses.total(),
            s.d_axis_injection,
        ]);
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregate view of a cycle run, serialized as the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub cycle: String,
    pub topology: TopologyKind,
    pub samples: usize,
    /// Cycle duration (s).
    pub duration: f64,
    /// Energies (J).
    pub energies: CycleEnergies,
    pub efficiency: f64,
    pub zero_energy: bool,
    /// Highest instantaneous converter loss (W).
    pub peak_loss_inverter: f64,
    /// Highest instantaneous motor copper loss (W).
    pub peak_loss_motor: f64,
    /// Highest instantaneous total loss (W).
    pub peak_loss_total: f64,
    /// Cycle-integrated loss per mechanism, summed over converters (J).
    pub converter_energy_by_mechanism: ConverterLoss,
    pub fc_constraints_passed: bool,
}

impl CycleSummary {
    pub fn from_result(r: &CycleResult) -> Self {
        let peak = |f: &dyn Fn(&super::CycleSample) -> f64| r.samples.iter().map(f).fold(0.0, f64::max);
        let time: Vec<f64> = r.samples.iter().map(|s| s.time).collect();
        let mech: Vec<ConverterLoss> = r.samples.iter().map(|s| s.losses.by_mechanism()).collect();
        let integrate = |f: fn(&ConverterLoss) -> f64| super::trapezoid(&time, |k| f(&mech[k]));
        Self {
            cycle: r.cycle.clone(),
            topology: r.topology,
            samples: r.samples.len(),
            duration: time.last().unwrap_or(&0.0) - time.first().unwrap_or(&0.0),
            energies: r.energies,
            efficiency: r.efficiency,
            zero_energy: r.zero_energy,
            peak_loss_inverter: peak(&|s| s.losses.converter_total()),
            peak_loss_motor: peak(&|s| s.losses.motor_copper),
            peak_loss_total: peak(&|s| s.losses.total()),
            converter_energy_by_mechanism: ConverterLoss {
                igbt_conduction: integrate(|c| c.igbt_conduction),
                diode_conduction: integrate(|c| c.diode_conduction),
                igbt_switching: integrate(|c| c.igbt_switching),
                diode_recovery: integrate(|c| c.diode_recovery),
                inductor_copper: integrate(|c| c.inductor_copper),
            },
            fc_constraints_passed: r.fc_constraints.passed,
        }
    }
}

/// Side-by-side summary of both drivetrains on one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleComparison {
    pub cycle: String,
    pub dual: CycleSummary,
    pub conventional: CycleSummary,
    /// Dual minus conventional efficiency, in percentage points.
    pub efficiency_delta_pp: f64,
    /// Conventional over dual total loss energy.
    pub loss_energy_ratio: f64,
}

impl CycleComparison {
    pub fn new(dual: &CycleResult, conventional: &CycleResult) -> Self {
        let d = dual.summary();
        let c = conventional.summary();
        let loss = |s: &CycleSummary| s.energies.loss_inverter + s.energies.loss_motor;
        Self {
            cycle: d.cycle.clone(),
            efficiency_delta_pp: 100.0 * (d.efficiency - c.efficiency),
            loss_energy_ratio: loss(&c) / loss(&d),
            dual: d,
            conventional: c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::{run_cycle, DriveCycle};
    use crate::topology::TopologyConfig;

    #[test]
    fn csv_has_stable_columns_for_both_topologies() {
        let cycle = DriveCycle::from_csv_str("s", "time_s,speed_mps\n0,0\n1,2\n2,4\n3,4\n4,0\n").unwrap();
        let mut headers = Vec::new();
        for cfg in [TopologyConfig::dual_default(), TopologyConfig::conventional_default()] {
            let r = run_cycle(&cycle, &cfg).unwrap();
            let mut buf = Vec::new();
            write_samples_csv(&mut buf, &r).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            assert_eq!(lines.len(), 6);
            let n = lines[0].split(',').count();
            assert!(lines.iter().all(|l| l.split(',').count() == n));
            headers.push(lines[0].to_string());
        }
        assert_eq!(headers[0], headers[1]);
        assert!(headers[0].starts_with("t_s,speed_mps,"));
        assert_eq!(headers[0].split(',').count(), 10 + 20 + 4);
    }
}
