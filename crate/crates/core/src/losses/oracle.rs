//! Numerical reference for the closed-form conduction losses.
//!
//! Integrates the instantaneous device loss of the upper switch position of
//! one leg over a fundamental period. With phase current `I sin(theta)` and
//! PWM duty `(1 + m sin(theta + phi)) / 2`, the IGBT conducts for the duty
//! fraction and the complementary diode for the remainder while the current
//! is positive.

use std::f64::consts::PI;

use super::{InverterConditions, PowerModuleParams};

const INTERVALS: usize = 4096;

/// Returns `(P_igbt, P_diode)` in W by composite Simpson quadrature over the
/// positive current half-cycle.
pub fn conduction_loss_oracle(c: &InverterConditions, module: &PowerModuleParams) -> (f64, f64) {
    let phi = c.displacement_factor.clamp(-1.0, 1.0).acos();
    let m = c.modulation_index;
    let peak = c.peak_phase_current;

    let device = |theta: f64| {
        let i = peak * theta.sin();
        let duty = 0.5 * (1.0 + m * (theta + phi).sin());
        let igbt = duty * (module.igbt_threshold * i + module.igbt_on_resistance * i * i);
        let diode = (1.0 - duty) * (module.diode_threshold * i + module.diode_on_resistance * i * i);
        (igbt, diode)
    };

    let h = PI / INTERVALS as f64;
    let (mut igbt, mut diode) = (0.0, 0.0);
    for k in 0..=INTERVALS {
        let weight = if k == 0 || k == INTERVALS {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let (a, b) = device(k as f64 * h);
        igbt += weight * a;
        diode += weight * b;
    }
    // (h / 3) * sum gives the integral; divide by the full period 2*pi for the mean.
    let norm = h / 3.0 / (2.0 * PI);
    (igbt * norm, diode * norm)
}
