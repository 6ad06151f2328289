//! Drive-cycle ingestion and quasi-static cycle simulation.
//!
//! Each cycle sample is evaluated independently at steady state, except for
//! the fuel-cell reference filter which carries state from one sample to the
//! next. Energies are trapezoidal integrals over the sample instants.

mod output;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::losses::LossBreakdown;
use crate::motor::q_current_for_shaft_power;
use crate::sharing::{validate_fc_trace, FcConstraintReport, FcReferenceFilter};
use crate::topology::{evaluate_point, EvalError, TopologyConfig, TopologyKind};
use crate::vehicle::{acceleration_profile, mech_power, motor_shaft_speed};

pub use output::{write_samples_csv, CycleComparison, CycleSummary, SAMPLE_COLUMNS};

const MPH_TO_MPS: f64 = 0.44704;

const HWFET_CSV: &str = include_str!("../../data/hwfet.csv");
const UDDS_CSV: &str = include_str!("../../data/udds.csv");

#[derive(Debug, Error)]
pub enum CycleError {
    #[error("cycle line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("cycle line {line}: time {time} s does not increase (previous {previous} s)")]
    NonMonotonicTime { line: u64, time: f64, previous: f64 },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("sample {index} (t = {time} s): {source}")]
    Sample { index: usize, time: f64, source: EvalError },
    #[error(transparent)]
    Config(EvalError),
    #[error("cycle has no output energy; efficiency is undefined")]
    ZeroEnergy,
    #[error("unknown built-in cycle {0:?} (expected hwfet or udds)")]
    UnknownBuiltin(String),
}

/// Speed trace sampled at increasing instants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    pub name: String,
    /// Sample instants (s).
    pub time: Vec<f64>,
    /// Vehicle speed (m/s).
    pub speed: Vec<f64>,
}

impl DriveCycle {
    /// Parses `time_s,speed_mph` or `time_s,speed_mps` CSV text.
    pub fn from_csv_str(name: &str, text: &str) -> Result<Self, CycleError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| CycleError::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let scale = match (headers.get(0), headers.get(1), headers.len()) {
            (Some("time_s"), Some("speed_mph"), 2) => MPH_TO_MPS,
            (Some("time_s"), Some("speed_mps"), 2) => 1.0,
            _ => {
                return Err(CycleError::Parse {
                    line: headers.position().map_or(1, |p| p.line()),
                    message: format!(
                        "expected header time_s,speed_mph or time_s,speed_mps, got {:?}",
                        headers.iter().collect::<Vec<_>>().join(",")
                    ),
                })
            }
        };

        let mut time = Vec::new();
        let mut speed = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CycleError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |k: usize| -> Result<f64, CycleError> {
                record[k].parse::<f64>().map_err(|e| CycleError::Parse {
                    line,
                    message: format!("{:?}: {e}", &record[k]),
                })
            };
            let (t, v) = (field(0)?, field(1)?);
            if !t.is_finite() || !v.is_finite() || v < 0.0 {
                return Err(CycleError::Parse {
                    line,
                    message: format!("invalid sample t = {t}, v = {v}"),
                });
            }
            if let Some(&previous) = time.last() {
                if t <= previous {
                    return Err(CycleError::NonMonotonicTime {
                        line,
                        time: t,
                        previous,
                    });
                }
            }
            time.push(t);
            speed.push(v * scale);
        }
        if time.len() < 2 {
            return Err(CycleError::Parse {
                line: 1,
                message: "a cycle needs at least two samples".into(),
            });
        }
        Ok(Self {
            name: name.to_string(),
            time,
            speed,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, CycleError> {
        let text = std::fs::read_to_string(path).map_err(|source| CycleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map_or("cycle".into(), |s| s.to_string_lossy().into_owned());
        Self::from_csv_str(&name, &text)
    }

    /// EPA Highway Fuel Economy Test.
    pub fn hwfet() -> Self {
        Self::from_csv_str("hwfet", HWFET_CSV).expect("bundled HWFET trace parses")
    }

    /// EPA Urban Dynamometer Driving Schedule.
    pub fn udds() -> Self {
        Self::from_csv_str("udds", UDDS_CSV).expect("bundled UDDS trace parses")
    }

    pub fn builtin(name: &str) -> Result<Self, CycleError> {
        match name.to_ascii_lowercase().as_str() {
            "hwfet" => Ok(Self::hwfet()),
            "udds" => Ok(Self::udds()),
            other => Err(CycleError::UnknownBuiltin(other.to_string())),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.time.last().unwrap_or(&0.0) - self.time.first().unwrap_or(&0.0)
    }

    /// Highest speed (m/s).
    pub fn max_speed(&self) -> f64 {
        self.speed.iter().copied().fold(0.0, f64::max)
    }
}

/// One evaluated cycle sample. Powers in W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub time: f64,
    pub speed: f64,
    pub acceleration: f64,
    pub omega_e: f64,
    pub p_ac: f64,
    pub p_elec: f64,
    pub p_dc: f64,
    pub p_fc: f64,
    pub p_bat: f64,
    pub fc_reference: f64,
    pub losses: LossBreakdown,
    pub d_axis_injection: f64,
}

impl CycleSample {
    /// Output power: shaft power while motoring, recovered DC power while braking.
    pub fn output_power(&self) -> f64 {
        if self.p_ac > 0.0 {
            self.p_ac
        } else if self.p_ac < 0.0 {
            (-self.p_dc).max(0.0)
        } else {
            0.0
        }
    }
}

/// Cycle energies (J).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CycleEnergies {
    pub output: f64,
    pub loss_inverter: f64,
    pub loss_motor: f64,
    /// Positive shaft work.
    pub traction: f64,
    /// DC energy returned while braking.
    pub regenerated: f64,
    pub fuel_cell: f64,
    pub battery: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub cycle: String,
    pub topology: TopologyKind,
    pub samples: Vec<CycleSample>,
    pub energies: CycleEnergies,
    /// Energy efficiency; 1 when the cycle has no output energy.
    pub efficiency: f64,
    pub zero_energy: bool,
    pub fc_constraints: FcConstraintReport,
}

impl CycleResult {
    pub fn summary(&self) -> CycleSummary {
        CycleSummary::from_result(self)
    }
}

fn trapezoid(time: &[f64], values: impl Fn(usize) -> f64) -> f64 {
    (1..time.len())
        .map(|k| 0.5 * (values(k) + values(k - 1)) * (time[k] - time[k - 1]))
        .sum()
}

/// Runs `cycle` through the drivetrain described by `cfg`.
pub fn run_cycle(cycle: &DriveCycle, cfg: &TopologyConfig) -> Result<CycleResult, CycleError> {
    cfg.validate().map_err(CycleError::Config)?;
    let accel = acceleration_profile(&cycle.time, &cycle.speed);
    let mut filter = FcReferenceFilter::new(cfg.sharing);
    let mut samples = Vec::with_capacity(cycle.len());

    for (k, (&t, &v)) in cycle.time.iter().zip(&cycle.speed).enumerate() {
        let (_, omega_e) = motor_shaft_speed(v, &cfg.vehicle, cfg.motor.pole_pairs);
        let p_ac = if omega_e > 0.0 {
            mech_power(v, accel[k], &cfg.vehicle, &cfg.environment).shaft
        } else {
            0.0
        };
        // Filter input: terminal demand without field weakening.
        let i_q = q_current_for_shaft_power(p_ac, omega_e, &cfg.motor);
        let demand = p_ac + 1.5 * cfg.motor.stator_resistance * i_q * i_q;
        let dt = if k == 0 { 0.0 } else { t - cycle.time[k - 1] };
        let fc_reference = filter.step(demand, dt);

        let e = evaluate_point(cfg, p_ac, omega_e, fc_reference).map_err(|source| CycleError::Sample {
            index: k,
            time: t,
            source,
        })?;
        samples.push(CycleSample {
            time: t,
            speed: v,
            acceleration: accel[k],
            omega_e,
            p_ac,
            p_elec: e.p_elec,
            p_dc: e.p_dc,
            p_fc: e.p_fc,
            p_bat: e.p_bat,
            fc_reference,
            losses: e.losses,
            d_axis_injection: e.d_axis_injection,
        });
    }

    let time = &cycle.time;
    let s = &samples;
    let energies = CycleEnergies {
        output: trapezoid(time, |k| s[k].output_power()),
        loss_inverter: trapezoid(time, |k| s[k].losses.converter_total()),
        loss_motor: trapezoid(time, |k| s[k].losses.motor_copper),
        traction: trapezoid(time, |k| s[k].p_ac.max(0.0)),
        regenerated: trapezoid(time, |k| (-s[k].p_dc).max(0.0)),
        fuel_cell: trapezoid(time, |k| s[k].p_fc),
        battery: trapezoid(time, |k| s[k].p_bat),
    };
    let references: Vec<f64> = samples.iter().map(|s| s.fc_reference).collect();
    let fc_constraints = validate_fc_trace(time, &references, &cfg.sharing);
    let zero_energy = energies.output == 0.0;
    let efficiency = if zero_energy {
        1.0
    } else {
        energies.output / (energies.output + energies.loss_inverter + energies.loss_motor)
    };

    Ok(CycleResult {
        cycle: cycle.name.clone(),
        topology: cfg.kind(),
        samples,
        energies,
        efficiency,
        zero_energy,
        fc_constraints,
    })
}

/// Cycle energy efficiency, output over output plus drivetrain losses.
pub fn energy_efficiency(result: &CycleResult) -> Result<f64, CycleError> {
    if result.zero_energy {
        return Err(CycleError::ZeroEnergy);
    }
    Ok(result.efficiency)
}

/// Runs the same cycle through both drivetrains on separate threads.
pub fn compare_topologies(
    cycle: &DriveCycle,
    dual: &TopologyConfig,
    conventional: &TopologyConfig,
) -> Result<(CycleResult, CycleResult), CycleError> {
    std::thread::scope(|scope| {
        let d = scope.spawn(|| run_cycle(cycle, dual));
        let c = run_cycle(cycle, conventional);
        let d = d.join().expect("cycle thread panicked");
        Ok((d?, c?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_mph_and_mps() {
        let a = DriveCycle::from_csv_str("a", "time_s,speed_mph\n0,0\n1,10\n").unwrap();
        assert_relative_eq!(a.speed[1], 4.4704, max_relative = 1e-12);
        let b = DriveCycle::from_csv_str("b", "time_s,speed_mps\n0,0\n1,10\n").unwrap();
        assert_eq!(b.speed, vec![0.0, 10.0]);
    }

    #[test]
    fn two_line_zero_cycle() {
        let c = DriveCycle::from_csv_str("z", "time_s,speed_mps\n0,0\n1,0\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.duration(), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let err = DriveCycle::from_csv_str("x", "time_s,speed_mps\n0,0\n2,1\n1,1\n").unwrap_err();
        assert!(matches!(err, CycleError::NonMonotonicTime { line: 4, .. }), "{err:?}");
        let err = DriveCycle::from_csv_str("x", "time_s,speed_mps\n0,0\n1,abc\n").unwrap_err();
        assert!(matches!(err, CycleError::Parse { line: 3, .. }), "{err:?}");
        let err = DriveCycle::from_csv_str("x", "t,v\n0,0\n1,1\n").unwrap_err();
        assert!(matches!(err, CycleError::Parse { line: 1, .. }));
        assert!(DriveCycle::from_csv_str("x", "time_s,speed_mps\n0,-1\n1,0\n").is_err());
    }

    #[test]
    fn bundled_cycles() {
        let h = DriveCycle::hwfet();
        assert_eq!(h.duration(), 765.0);
        assert!((h.max_speed() / MPH_TO_MPS - 59.9).abs() < 0.1);
        let u = DriveCycle::udds();
        assert_eq!(u.duration(), 1369.0);
        assert!((u.max_speed() / MPH_TO_MPS - 56.7).abs() < 0.1);
        assert!(DriveCycle::builtin("HWFET").is_ok());
        assert!(DriveCycle::builtin("nedc").is_err());
    }

    #[test]
    fn zero_cycle_has_no_losses() {
        let c = DriveCycle::from_csv_str("z", "time_s,speed_mps\n0,0\n1,0\n2,0\n").unwrap();
        for cfg in [TopologyConfig::dual_default(), TopologyConfig::conventional_default()] {
            let r = run_cycle(&c, &cfg).unwrap();
            assert!(r.samples.iter().all(|s| s.losses.total() == 0.0));
            assert!(r.zero_energy);
            assert_eq!(r.efficiency, 1.0);
            assert!(matches!(energy_efficiency(&r), Err(CycleError::ZeroEnergy)));
        }
    }

    #[test]
    fn constant_power_and_loss_ratio() {
        // 10 kW output and 1 kW loss held for the whole trace
        let mk = |t: f64| CycleSample {
            time: t,
            speed: 10.0,
            acceleration: 0.0,
            omega_e: 1.0,
            p_ac: 10e3,
            p_elec: 10.5e3,
            p_dc: 11e3,
            p_fc: 0.0,
            p_bat: 11e3,
            fc_reference: 0.0,
            losses: LossBreakdown {
                motor_copper: 1e3,
                ..LossBreakdown::default()
            },
            d_axis_injection: 0.0,
        };
        let time = [0.0, 1.0, 3.0, 7.5];
        let s: Vec<CycleSample> = time.iter().map(|&t| mk(t)).collect();
        let out = trapezoid(&time, |k| s[k].output_power());
        let loss = trapezoid(&time, |k| s[k].losses.total());
        assert_relative_eq!(out / (out + loss), 10.0 / 11.0, max_relative = 1e-12);
    }

    #[test]
    fn regen_output_is_recovered_dc_power() {
        let mut s = CycleSample {
            time: 0.0,
            speed: 10.0,
            acceleration: -1.0,
            omega_e: 1.0,
            p_ac: -20e3,
            p_elec: -19e3,
            p_dc: -18e3,
            p_fc: 3.5e3,
            p_bat: -21.5e3,
            fc_reference: 3.5e3,
            losses: LossBreakdown::default(),
            d_axis_injection: 0.0,
        };
        assert_eq!(s.output_power(), 18e3);
        s.p_dc = 1e3; // losses exceed the braking power
        assert_eq!(s.output_power(), 0.0);
    }
}
