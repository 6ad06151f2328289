//! Steady-state dq model of a non-salient permanent magnet synchronous motor.
//!
//! With the derivative terms dropped, the stator voltage equations reduce to
//!
//! ```text
//! v_d = R_s i_d - w_e L_s i_q
//! v_q = R_s i_q + w_e (L_s i_d + psi_m)
//! ```
//!
//! and the electrical power drawn by the machine is `1.5 (v_d i_d + v_q i_q)`.
//! Because `L_d = L_q` there is no reluctance torque, so torque depends on
//! `i_q` alone and any d-axis current only serves to weaken the field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dq::Dq;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotorError {
    #[error("invalid motor parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("non-zero power {power} W requested at zero speed")]
    ZeroSpeedPower { power: f64 },
    #[error(
        "no operating point delivers {power} W at {omega_e} rad/s within {voltage_limit} V and {current_ceiling} A"
    )]
    Infeasible {
        power: f64,
        omega_e: f64,
        voltage_limit: f64,
        current_ceiling: f64,
    },
}

/// Electrical parameters of the traction motor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    /// Pole pairs.
    pub pole_pairs: u32,
    /// Synchronous inductance, L_d = L_q (H).
    pub synchronous_inductance: f64,
    /// Stator phase resistance (Ohm).
    pub stator_resistance: f64,
    /// Permanent magnet flux linkage (Wb).
    pub magnet_flux_linkage: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            pole_pairs: 5,
            synchronous_inductance: 0.838e-3,
            stator_resistance: 45e-3,
            magnet_flux_linkage: 0.127,
        }
    }
}

impl MotorParams {
    pub fn validate(&self) -> Result<(), MotorError> {
        if self.pole_pairs == 0 {
            return Err(MotorError::InvalidParameter { name: "p", value: 0.0 });
        }
        for (name, value) in [
            ("L_s", self.synchronous_inductance),
            ("R_s", self.stator_resistance),
            ("psi_m", self.magnet_flux_linkage),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(MotorError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    /// Torque per unit q-axis current (N m / A).
    pub fn torque_constant(&self) -> f64 {
        1.5 * self.pole_pairs as f64 * self.magnet_flux_linkage
    }
}

/// A solved steady-state electrical operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Electrical angular speed (rad/s).
    pub electrical_speed: f64,
    pub current: Dq,
    pub voltage: Dq,
    /// sqrt(i_d^2 + i_q^2) (A).
    pub phase_current_peak: f64,
    /// sqrt(v_d^2 + v_q^2) (V).
    pub phase_voltage_peak: f64,
}

impl OperatingPoint {
    /// Builds the point implied by a current vector at a given speed.
    pub fn from_current(current: Dq, omega_e: f64, params: &MotorParams) -> Self {
        let voltage = steady_state_voltages(current, omega_e, params);
        Self {
            electrical_speed: omega_e,
            current,
            voltage,
            phase_current_peak: current.magnitude(),
            phase_voltage_peak: voltage.magnitude(),
        }
    }

    pub fn zero(omega_e: f64, params: &MotorParams) -> Self {
        Self::from_current(Dq::ZERO, omega_e, params)
    }

    pub fn electrical_power(&self) -> f64 {
        electrical_power(self.voltage, self.current)
    }

    /// Shaft torque (N m).
    pub fn torque(&self, params: &MotorParams) -> f64 {
        params.torque_constant() * self.current.q
    }

    /// Stator copper loss (W).
    pub fn copper_loss(&self, params: &MotorParams) -> f64 {
        motor_copper_loss(
            self.phase_current_peak / std::f64::consts::SQRT_2,
            params.stator_resistance,
        )
    }

    /// Cosine of the angle between the voltage and current vectors.
    /// Returns 1 when either vector vanishes.
    pub fn displacement_factor(&self) -> f64 {
        let denom = self.phase_current_peak * self.phase_voltage_peak;
        if denom > 0.0 {
            (self.voltage.dot(self.current) / denom).clamp(-1.0, 1.0)
        } else {
            1.0
        }
    }
}

/// Stator voltages at steady state (derivative terms zero).
pub fn steady_state_voltages(current: Dq, omega_e: f64, params: &MotorParams) -> Dq {
    let r = params.stator_resistance;
    let l = params.synchronous_inductance;
    Dq::new(
        r * current.d - omega_e * l * current.q,
        r * current.q + omega_e * (l * current.d + params.magnet_flux_linkage),
    )
}

/// Electrical power in the dq frame, `1.5 (v_d i_d + v_q i_q)` (W).
pub fn electrical_power(voltage: Dq, current: Dq) -> f64 {
    1.5 * voltage.dot(current)
}

/// Three-phase copper loss from the RMS phase current (W).
pub fn motor_copper_loss(phase_current_rms: f64, stator_resistance: f64) -> f64 {
    3.0 * phase_current_rms * phase_current_rms * stator_resistance
}

/// q-axis current producing the torque needed for `shaft_power` at `omega_e`.
pub fn q_current_for_shaft_power(shaft_power: f64, omega_e: f64, params: &MotorParams) -> f64 {
    if shaft_power == 0.0 {
        return 0.0;
    }
    let omega_m = omega_e / params.pole_pairs as f64;
    shaft_power / omega_m / params.torque_constant()
}

/// Finds the steady-state point delivering `shaft_power` (W) at `omega_e`.
///
/// The q-axis current follows from the torque demand. The d-axis current stays
/// at zero unless the resulting voltage magnitude exceeds `voltage_limit`; in
/// that case the smallest field-weakening current with `|v| = voltage_limit`
/// is found by bisection.
pub fn solve_operating_point(
    shaft_power: f64,
    omega_e: f64,
    params: &MotorParams,
    voltage_limit: f64,
    current_ceiling: f64,
) -> Result<OperatingPoint, MotorError> {
    const VOLTAGE_TOL: f64 = 1e-9;

    if omega_e == 0.0 {
        if shaft_power != 0.0 {
            return Err(MotorError::ZeroSpeedPower { power: shaft_power });
        }
        return Ok(OperatingPoint::zero(0.0, params));
    }
    let infeasible = || MotorError::Infeasible {
        power: shaft_power,
        omega_e,
        voltage_limit,
        current_ceiling,
    };

    let i_q = q_current_for_shaft_power(shaft_power, omega_e, params);
    let magnitude = |i_d: f64| steady_state_voltages(Dq::new(i_d, i_q), omega_e, params).magnitude();

    let mut i_d = 0.0;
    if magnitude(0.0) > voltage_limit {
        // |v(i_d)| is a convex function of i_d; search between its minimiser and zero.
        let r = params.stator_resistance;
        let x = omega_e * params.synchronous_inductance;
        let c_d = -x * i_q;
        let c_q = r * i_q + omega_e * params.magnet_flux_linkage;
        let i_d_min = -(r * c_d + x * c_q) / (r * r + x * x);
        if i_d_min >= 0.0 || magnitude(i_d_min) > voltage_limit {
            return Err(infeasible());
        }
        // magnitude(lo) <= limit < magnitude(hi)
        let (mut lo, mut hi) = (i_d_min, 0.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if magnitude(mid) > voltage_limit {
                hi = mid;
            } else {
                lo = mid;
            }
            if voltage_limit - magnitude(lo) < VOLTAGE_TOL || hi - lo <= f64::EPSILON * lo.abs() {
                break;
            }
        }
        i_d = lo;
    }

    let point = OperatingPoint::from_current(Dq::new(i_d, i_q), omega_e, params);
    if point.phase_current_peak > current_ceiling {
        return Err(infeasible());
    }
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table2() -> MotorParams {
        MotorParams::default()
    }

    #[test]
    fn voltages_at_rest_are_zero() {
        let v = steady_state_voltages(Dq::ZERO, 0.0, &table2());
        assert_eq!(v, Dq::ZERO);
    }

    #[test]
    fn voltages_match_scalar_evaluation() {
        // v_d = -1000 * 0.838e-3 * 100, v_q = 0.045 * 100 + 1000 * 0.127
        let v = steady_state_voltages(Dq::new(0.0, 100.0), 1000.0, &table2());
        assert_relative_eq!(v.d, -83.8, epsilon = 1e-12);
        assert_relative_eq!(v.q, 131.5, epsilon = 1e-12);

        // v_d = 0.045 * -50, v_q = 1000 * (0.838e-3 * -50 + 0.127)
        let v = steady_state_voltages(Dq::new(-50.0, 0.0), 1000.0, &table2());
        assert_relative_eq!(v.d, -2.25, epsilon = 1e-12);
        assert_relative_eq!(v.q, 85.1, epsilon = 1e-12);
    }

    #[test]
    fn electrical_power_examples() {
        assert_eq!(electrical_power(Dq::new(0.0, 100.0), Dq::new(0.0, 200.0)), 30_000.0);
        assert_eq!(electrical_power(Dq::ZERO, Dq::ZERO), 0.0);
        assert_relative_eq!(
            electrical_power(Dq::new(-83.8, 131.5), Dq::new(0.0, 100.0)),
            19_725.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn electrical_power_scales_quadratically() {
        let v = Dq::new(-31.0, 210.0);
        let i = Dq::new(-12.0, 95.0);
        let k = 2.7;
        assert_relative_eq!(
            electrical_power(v * k, i * k),
            k * k * electrical_power(v, i),
            max_relative = 1e-12
        );
    }

    #[test]
    fn copper_loss_examples() {
        let r = 45e-3;
        assert_eq!(motor_copper_loss(0.0, r), 0.0);
        assert_relative_eq!(
            motor_copper_loss(400.0 / 2f64.sqrt(), r),
            10_800.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(motor_copper_loss(100.0 / 2f64.sqrt(), r), 675.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_power_point() {
        for &w in &[0.0, 500.0, 2000.0] {
            let op = solve_operating_point(0.0, w, &table2(), 400.0, 800.0).unwrap();
            assert_eq!(op.current, Dq::ZERO);
        }
    }

    #[test]
    fn zero_speed_power_is_rejected() {
        let err = solve_operating_point(1000.0, 0.0, &table2(), 400.0, 800.0).unwrap_err();
        assert!(matches!(err, MotorError::ZeroSpeedPower { .. }));
    }

    #[test]
    fn energy_bookkeeping_closes_without_field_weakening() {
        let params = table2();
        let omega_e = 1500.0;
        let op = solve_operating_point(20_000.0, omega_e, &params, 400.0, 800.0).unwrap();
        assert_eq!(op.current.d, 0.0);
        let omega_m = omega_e / params.pole_pairs as f64;
        let expected = omega_m * op.torque(&params) + 1.5 * params.stator_resistance * op.current.q.powi(2);
        assert_relative_eq!(op.electrical_power(), expected, max_relative = 1e-12);
        assert_relative_eq!(omega_m * op.torque(&params), 20_000.0, max_relative = 1e-12);
    }

    #[test]
    fn over_ceiling_is_infeasible() {
        let err = solve_operating_point(60_000.0, 300.0, &table2(), 400.0, 100.0).unwrap_err();
        assert!(matches!(err, MotorError::Infeasible { .. }));
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = table2();
        p.stator_resistance = 0.0;
        assert!(p.validate().is_err());
        p = table2();
        p.pole_pairs = 0;
        assert!(p.validate().is_err());
        assert!(table2().validate().is_ok());
    }
}
