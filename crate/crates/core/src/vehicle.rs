//! Longitudinal road-load model and wheel-to-motor kinematics.

use serde::{Deserialize, Serialize};

/// Road-load and driveline parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Vehicle mass (kg).
    pub mass: f64,
    /// Frontal area (m^2).
    pub frontal_area: f64,
    pub drag_coefficient: f64,
    pub rolling_coefficient: f64,
    /// Motor revolutions per wheel revolution.
    pub gear_ratio: f64,
    /// Tire rolling radius (m).
    pub tire_radius: f64,
}

impl Default for VehicleParams {
    /// Compact battery-electric hatchback.
    fn default() -> Self {
        Self {
            mass: 1642.9,
            frontal_area: 2.1,
            drag_coefficient: 0.32,
            rolling_coefficient: 0.024,
            gear_ratio: 7.82,
            tire_radius: 0.3289,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("M_car", self.mass),
            ("A_f", self.frontal_area),
            ("C_d", self.drag_coefficient),
            ("C_r", self.rolling_coefficient),
            ("gear_ratio", self.gear_ratio),
            ("r_tire", self.tire_radius),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(format!("{name} must be positive, got {value}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConstants {
    /// Air density (kg/m^3).
    pub air_density: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
}

impl Default for EnvironmentConstants {
    /// Sea-level standard atmosphere.
    fn default() -> Self {
        Self {
            air_density: 1.225,
            gravity: 9.81,
        }
    }
}

impl EnvironmentConstants {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.air_density > 0.0) || !(self.gravity > 0.0) {
            return Err("air density and gravity must be positive".into());
        }
        Ok(())
    }
}

/// Mechanical power demand at the wheels (W).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RoadLoad {
    /// Inertial power `M v dv/dt`.
    pub acceleration: f64,
    /// Aerodynamic drag plus rolling resistance.
    pub resistive: f64,
    /// Total shaft power the motor must deliver.
    pub shaft: f64,
}

pub fn mech_power(speed: f64, accel: f64, vehicle: &VehicleParams, env: &EnvironmentConstants) -> RoadLoad {
    let acceleration = vehicle.mass * speed * accel;
    let drag_force = 0.5 * env.air_density * vehicle.drag_coefficient * vehicle.frontal_area * speed * speed;
    let rolling_force = vehicle.rolling_coefficient * vehicle.mass * env.gravity;
    let resistive = speed * (drag_force + rolling_force);
    RoadLoad {
        acceleration,
        resistive,
        shaft: acceleration + resistive,
    }
}

/// Motor speed for a vehicle speed: `(mechanical rad/s, electrical rad/s)`.
pub fn motor_shaft_speed(speed: f64, vehicle: &VehicleParams, pole_pairs: u32) -> (f64, f64) {
    let omega_m = vehicle.gear_ratio * speed / vehicle.tire_radius;
    (omega_m, pole_pairs as f64 * omega_m)
}

/// dv/dt by central differences, one-sided at the ends.
pub fn acceleration_profile(time: &[f64], speed: &[f64]) -> Vec<f64> {
    let n = time.len();
    assert_eq!(n, speed.len());
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = match k {
                0 => (0, 1),
                k if k == n - 1 => (n - 2, n - 1),
                k => (k - 1, k + 1),
            };
            (speed[b] - speed[a]) / (time[b] - time[a])
        })
        .collect()
}
