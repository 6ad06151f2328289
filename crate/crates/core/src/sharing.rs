//! Fuel-cell power reference generation and dual-inverter voltage sharing.
//!
//! The fuel-cell reference is the motor's electrical demand passed through a
//! first-order low-pass filter, clamped to the stack's operating window and
//! rate limited. In the dual-inverter drive the motor sees the sum of the two
//! bridge voltage vectors, so the fuel-cell bridge can be given a sub-vector
//! whose active component carries exactly the reference power while the
//! battery bridge supplies the remainder.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dq::Dq;
use crate::losses::InverterConditions;
use crate::motor::OperatingPoint;

/// Absolute slack (V) allowed on bridge voltage limits.
const VOLTAGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharingPolicy {
    /// Low-pass time constant (s).
    pub filter_time_constant: f64,
    /// Lowest fuel-cell output that keeps the stack running (W).
    pub min_power: f64,
    /// Stack rating (W).
    pub max_power: f64,
    /// Maximum rate of change of the reference (W/s).
    pub slew_limit: f64,
}

impl Default for SharingPolicy {
    fn default() -> Self {
        Self {
            filter_time_constant: 5.0,
            min_power: 3.5e3,
            max_power: 70e3,
            slew_limit: 5e3,
        }
    }
}

impl SharingPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.filter_time_constant > 0.0) {
            return Err("tau must be positive".into());
        }
        if !(self.min_power >= 0.0 && self.min_power < self.max_power) {
            return Err("need 0 <= P_min < P_max".into());
        }
        if !(self.slew_limit > 0.0) {
            return Err("slew limit must be positive".into());
        }
        Ok(())
    }
}

/// Streaming form of the reference generator.
#[derive(Debug, Clone)]
pub struct FcReferenceFilter {
    policy: SharingPolicy,
    state: Option<(f64, f64)>, // (filtered demand, output)
}

impl FcReferenceFilter {
    pub fn new(policy: SharingPolicy) -> Self {
        Self { policy, state: None }
    }

    /// Advances by `dt` seconds with the new demand sample and returns the reference.
    /// The first sample initialises the filter at the (non-negative) demand.
    pub fn step(&mut self, demand: f64, dt: f64) -> f64 {
        let p = &self.policy;
        let demand = demand.max(0.0);
        let (filtered, output) = match self.state {
            None => {
                let out = demand.clamp(p.min_power, p.max_power);
                (demand, out)
            }
            Some((filtered, output)) => {
                let alpha = 1.0 - (-dt / p.filter_time_constant).exp();
                let filtered = filtered + alpha * (demand - filtered);
                let target = filtered.clamp(p.min_power, p.max_power);
                let max_step = p.slew_limit * dt;
                (filtered, output + (target - output).clamp(-max_step, max_step))
            }
        };
        self.state = Some((filtered, output));
        output
    }
}

/// Fuel-cell reference for a uniformly sampled demand trace.
pub fn fc_power_reference(demand: &[f64], policy: &SharingPolicy, dt: f64) -> Vec<f64> {
    let mut filter = FcReferenceFilter::new(*policy);
    demand.iter().map(|&p| filter.step(p, dt)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcConstraintReport {
    pub min_power: f64,
    pub max_abs_slew: f64,
    /// Indices of samples below zero (reverse power flow).
    pub negative_samples: Vec<usize>,
    /// Indices of samples below the minimum running power.
    pub below_minimum: Vec<usize>,
    /// Indices `k` where the step from `k - 1` to `k` exceeds the slew limit.
    pub slew_violations: Vec<usize>,
    pub passed: bool,
}

/// Checks a fuel-cell power trace against the stack's operating constraints:
/// never below the minimum running power, never negative, slew-bounded.
pub fn validate_fc_constraints(trace: &[f64], policy: &SharingPolicy, dt: f64) -> FcConstraintReport {
    check_trace(trace, policy, |_| dt)
}

/// Same checks for a trace sampled at arbitrary (increasing) instants.
pub fn validate_fc_trace(time: &[f64], trace: &[f64], policy: &SharingPolicy) -> FcConstraintReport {
    assert_eq!(time.len(), trace.len());
    check_trace(trace, policy, |k| time[k] - time[k - 1])
}

fn check_trace(trace: &[f64], policy: &SharingPolicy, step: impl Fn(usize) -> f64) -> FcConstraintReport {
    let tol = 1e-9;
    let floor = policy.min_power * (1.0 - tol);
    let negative_samples: Vec<usize> = (0..trace.len()).filter(|&k| trace[k] < 0.0).collect();
    let below_minimum: Vec<usize> = (0..trace.len()).filter(|&k| trace[k] < floor).collect();
    let mut slew_violations = Vec::new();
    let mut max_abs_slew = 0.0_f64;
    for k in 1..trace.len() {
        let dt = step(k);
        let delta = (trace[k] - trace[k - 1]).abs();
        if delta > policy.slew_limit * dt * (1.0 + tol) {
            slew_violations.push(k);
        }
        max_abs_slew = max_abs_slew.max(delta / dt);
    }
    let min_power = trace.iter().copied().fold(f64::INFINITY, f64::min);
    let passed = negative_samples.is_empty() && below_minimum.is_empty() && slew_violations.is_empty();
    FcConstraintReport {
        min_power,
        max_abs_slew,
        negative_samples,
        below_minimum,
        slew_violations,
        passed,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("fuel-cell bridge needs {required} V but can produce {available} V; lower the fuel-cell reference")]
    FcVoltageLimit { required: f64, available: f64 },
    #[error("battery bridge needs {required} V but can produce {available} V")]
    BatVoltageLimit { required: f64, available: f64 },
    #[error("fuel-cell power requested with zero motor current")]
    ZeroCurrent,
    #[error("fuel-cell power reference {0} W is negative")]
    NegativeFcPower(f64),
}

/// Voltage and power split between the fuel-cell and battery bridges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub fc_voltage: Dq,
    pub battery_voltage: Dq,
    pub realized_fc_power: f64,
    pub realized_battery_power: f64,
}

impl PowerSplit {
    fn from_parts(op: &OperatingPoint, fc_voltage: Dq) -> Self {
        let battery_voltage = op.voltage - fc_voltage;
        Self {
            fc_voltage,
            battery_voltage,
            realized_fc_power: 1.5 * fc_voltage.dot(op.current),
            realized_battery_power: 1.5 * battery_voltage.dot(op.current),
        }
    }

    /// Loss-model conditions of the fuel-cell bridge.
    pub fn fc_conditions(&self, op: &OperatingPoint, dc_voltage: f64, switching_frequency: f64) -> InverterConditions {
        bridge_conditions(self.fc_voltage, op, dc_voltage, switching_frequency)
    }

    /// Loss-model conditions of the battery bridge.
    pub fn battery_conditions(
        &self,
        op: &OperatingPoint,
        dc_voltage: f64,
        switching_frequency: f64,
    ) -> InverterConditions {
        bridge_conditions(self.battery_voltage, op, dc_voltage, switching_frequency)
    }
}

fn bridge_conditions(
    voltage: Dq,
    op: &OperatingPoint,
    dc_voltage: f64,
    switching_frequency: f64,
) -> InverterConditions {
    let magnitude = voltage.magnitude();
    let current = op.phase_current_peak;
    let displacement_factor = if magnitude > 0.0 && current > 0.0 {
        (voltage.dot(op.current) / (magnitude * current)).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    InverterConditions {
        peak_phase_current: current,
        modulation_index: (2.0 * magnitude / dc_voltage).min(1.0),
        displacement_factor,
        dc_link_voltage: dc_voltage,
        switching_frequency,
    }
}

/// Splits the motor voltage vector so the fuel-cell bridge delivers `fc_power`.
///
/// The fuel-cell sub-vector is collinear with the current whenever that keeps
/// both bridges inside their linear range (`m_max V_dc / 2`). Otherwise the
/// fuel-cell bridge also takes the smallest reactive (current-orthogonal)
/// component that brings the battery bridge back within its limit; the
/// reactive part carries no power so the realized fuel-cell power is unchanged.
pub fn split_voltage(
    op: &OperatingPoint,
    fc_power: f64,
    fc_dc_voltage: f64,
    battery_dc_voltage: f64,
    m_max: f64,
) -> Result<PowerSplit, SplitError> {
    if fc_power < 0.0 {
        return Err(SplitError::NegativeFcPower(fc_power));
    }
    let fc_limit = m_max * fc_dc_voltage / 2.0 + VOLTAGE_SLACK;
    let bat_limit = m_max * battery_dc_voltage / 2.0 + VOLTAGE_SLACK;
    let v = op.voltage;
    let current = op.phase_current_peak;

    if current == 0.0 {
        if fc_power > 0.0 {
            return Err(SplitError::ZeroCurrent);
        }
        // No power flows; share the voltage magnitude along v.
        let magnitude = v.magnitude();
        if magnitude <= bat_limit {
            return Ok(PowerSplit::from_parts(op, Dq::ZERO));
        }
        let fc_part = magnitude - (bat_limit - VOLTAGE_SLACK);
        if fc_part > fc_limit {
            return Err(SplitError::BatVoltageLimit {
                required: magnitude - fc_limit,
                available: bat_limit,
            });
        }
        return Ok(PowerSplit::from_parts(op, v * (fc_part / magnitude)));
    }

    let along = op.current * (1.0 / current);
    let across = along.perpendicular();
    let active = fc_power / (1.5 * current);
    if active > fc_limit {
        return Err(SplitError::FcVoltageLimit {
            required: active,
            available: fc_limit,
        });
    }
    let v_along = v.dot(along);
    let v_across = v.dot(across);

    let bat_active = v_along - active;
    if bat_active.abs() > bat_limit {
        return Err(SplitError::BatVoltageLimit {
            required: bat_active.abs(),
            available: bat_limit,
        });
    }
    let fc_reach = (fc_limit * fc_limit - active * active).max(0.0).sqrt();
    let bat_reach = (bat_limit * bat_limit - bat_active * bat_active).max(0.0).sqrt();
    let lo = (-fc_reach).max(v_across - bat_reach);
    let hi = fc_reach.min(v_across + bat_reach);
    if lo > hi {
        return Err(SplitError::BatVoltageLimit {
            required: (Dq::new(bat_active, v_across - fc_reach.copysign(v_across))).magnitude(),
            available: bat_limit,
        });
    }
    let reactive = 0.0_f64.clamp(lo, hi);
    let fc_voltage = if reactive == 0.0 {
        // keep the collinear vector exact
        op.current * (active / current)
    } else {
        along * active + across * reactive
    };
    Ok(PowerSplit::from_parts(op, fc_voltage))
}

/// Writes `t,P_fc,P_bat` rows.
pub fn write_sharing_csv<W: Write>(
    mut out: W,
    time: &[f64],
    fc_power: &[f64],
    battery_power: &[f64],
) -> std::io::Result<()> {
    writeln!(out, "t_s,p_fc_w,p_bat_w")?;
    for ((t, f), b) in time.iter().zip(fc_power).zip(battery_power) {
        writeln!(out, "{t},{f},{b}")?;
    }
    Ok(())
}
