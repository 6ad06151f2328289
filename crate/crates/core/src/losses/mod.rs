//! Analytical semiconductor and passive loss models.
//!
//! Inverter losses use the classic sinusoidal-PWM averages for a two-level
//! leg: conduction losses depend on the peak phase current, modulation index
//! and displacement factor, while switching losses scale with the current,
//! switching frequency and DC-link voltage. The boost stage is evaluated with
//! an average (ripple-free) inductor current.

mod module;
pub mod oracle;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use module::{ModuleLibrary, PowerModuleParams, FF450R12KT4P, FS400R07A3E3, FS400R12A2T4};
pub use oracle::conduction_loss_oracle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("{0}")]
    Domain(String),
    #[error("invalid module {label}: {reason}")]
    InvalidModule { label: String, reason: String },
    #[error("unknown module label {0:?}")]
    UnknownModule(String),
    #[error("module table line {line}: {message}")]
    Table { line: u64, message: String },
}

/// Operating conditions of one three-phase two-level inverter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverterConditions {
    /// Peak phase current I_s,pk (A).
    pub peak_phase_current: f64,
    /// Modulation index m, 0 <= m <= 1.
    pub modulation_index: f64,
    /// cos(phi) between fundamental phase voltage and current.
    pub displacement_factor: f64,
    /// DC-link voltage (V).
    pub dc_link_voltage: f64,
    /// Carrier frequency (Hz).
    pub switching_frequency: f64,
}

impl InverterConditions {
    pub fn validate(&self) -> Result<(), LossError> {
        let c = self;
        if !(c.peak_phase_current >= 0.0) {
            return Err(LossError::Domain(format!(
                "peak phase current must be >= 0, got {}",
                c.peak_phase_current
            )));
        }
        if !(0.0..=1.0).contains(&c.modulation_index) {
            return Err(LossError::Domain(format!(
                "modulation index {} outside the linear range [0, 1]",
                c.modulation_index
            )));
        }
        if !(-1.0..=1.0).contains(&c.displacement_factor) {
            return Err(LossError::Domain(format!(
                "displacement factor {} outside [-1, 1]",
                c.displacement_factor
            )));
        }
        if !(c.dc_link_voltage > 0.0) || !(c.switching_frequency > 0.0) {
            return Err(LossError::Domain(
                "DC-link voltage and switching frequency must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Boost stage between the fuel cell and the DC bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    /// Inductance (H).
    pub inductance: f64,
    /// Inductor series resistance (Ohm).
    pub inductor_esr: f64,
    /// Switching frequency (Hz).
    pub switching_frequency: f64,
    pub module: PowerModuleParams,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            inductance: 0.3e-3,
            inductor_esr: 1.2e-3,
            switching_frequency: 20e3,
            module: PowerModuleParams::ff450r12kt4p(),
        }
    }
}

/// Losses of one power converter, split by mechanism (W).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConverterLoss {
    pub igbt_conduction: f64,
    pub diode_conduction: f64,
    pub igbt_switching: f64,
    pub diode_recovery: f64,
    pub inductor_copper: f64,
}

impl ConverterLoss {
    pub fn conduction(&self) -> f64 {
        self.igbt_conduction + self.diode_conduction
    }

    pub fn switching(&self) -> f64 {
        self.igbt_switching + self.diode_recovery
    }

    pub fn total(&self) -> f64 {
        self.conduction() + self.switching() + self.inductor_copper
    }

    fn accumulate(&mut self, other: &ConverterLoss) {
        self.igbt_conduction += other.igbt_conduction;
        self.diode_conduction += other.diode_conduction;
        self.igbt_switching += other.igbt_switching;
        self.diode_recovery += other.diode_recovery;
        self.inductor_copper += other.inductor_copper;
    }
}

/// Drivetrain losses at one instant, grouped per converter.
///
/// Converters absent from a topology are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fc_inverter: Option<ConverterLoss>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub battery_inverter: Option<ConverterLoss>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub traction_inverter: Option<ConverterLoss>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boost: Option<ConverterLoss>,
    pub motor_copper: f64,
}

impl LossBreakdown {
    pub fn converters(&self) -> [(&'static str, Option<&ConverterLoss>); 4] {
        [
            ("fc_inverter", self.fc_inverter.as_ref()),
            ("battery_inverter", self.battery_inverter.as_ref()),
            ("traction_inverter", self.traction_inverter.as_ref()),
            ("boost", self.boost.as_ref()),
        ]
    }

    /// All power-electronic losses (inverters, boost stage and its inductor).
    pub fn converter_total(&self) -> f64 {
        self.converters()
            .iter()
            .filter_map(|(_, c)| c.map(ConverterLoss::total))
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.converter_total() + self.motor_copper
    }

    /// Losses summed across converters, per mechanism.
    pub fn by_mechanism(&self) -> ConverterLoss {
        let mut sum = ConverterLoss::default();
        for (_, c) in self.converters() {
            if let Some(c) = c {
                sum.accumulate(c);
            }
        }
        sum
    }
}

/// IGBT and diode conduction losses of one device position under
/// sinusoidal PWM. Returns `(P_cond_igbt, P_cond_diode)` in W.
pub fn conduction_losses(c: &InverterConditions, module: &PowerModuleParams) -> Result<(f64, f64), LossError> {
    c.validate()?;
    let i = c.peak_phase_current;
    let mcos = c.modulation_index * c.displacement_factor;

    let igbt = 0.5 * (module.igbt_threshold * i / PI + module.igbt_on_resistance * i * i / 4.0)
        + mcos * (module.igbt_threshold * i / 8.0 + module.igbt_on_resistance * i * i / (3.0 * PI));
    let diode = 0.5 * (module.diode_threshold * i / PI + module.diode_on_resistance * i * i / 4.0)
        - mcos * (module.diode_threshold * i / 8.0 + module.diode_on_resistance * i * i / (3.0 * PI));

    Ok((clamp_nonnegative(igbt, "IGBT"), clamp_nonnegative(diode, "diode")))
}

fn clamp_nonnegative(value: f64, what: &str) -> f64 {
    if value < 0.0 {
        log::warn!("{what} conduction loss evaluated to {value} W; clamped to 0");
        0.0
    } else {
        value
    }
}

/// IGBT switching and diode recovery losses of one device position.
/// Returns `(P_sw_igbt, P_rec_diode)` in W.
///
/// Datasheet energies are scaled linearly with the peak phase current and the
/// sinusoidal current shape contributes the 1/pi averaging factor.
pub fn switching_losses(c: &InverterConditions, module: &PowerModuleParams) -> (f64, f64) {
    let i = c.peak_phase_current;
    let scale = c.switching_frequency * c.dc_link_voltage / (PI * module.nominal_voltage);
    let e_on = module.scaled_energy(module.turn_on_energy, i);
    let e_off = module.scaled_energy(module.turn_off_energy, i);
    let e_rec = module.scaled_energy(module.recovery_energy, i);
    ((e_on + e_off) * scale, e_rec * scale)
}

/// Total losses of a three-phase inverter (six device positions).
pub fn inverter_loss(c: &InverterConditions, module: &PowerModuleParams) -> Result<ConverterLoss, LossError> {
    let (igbt_cond, diode_cond) = conduction_losses(c, module)?;
    let (igbt_sw, diode_rec) = switching_losses(c, module);
    Ok(ConverterLoss {
        igbt_conduction: 6.0 * igbt_cond,
        diode_conduction: 6.0 * diode_cond,
        igbt_switching: 6.0 * igbt_sw,
        diode_recovery: 6.0 * diode_rec,
        inductor_copper: 0.0,
    })
}

/// Duty cycle of the ideal boost cell.
pub fn boost_duty(fc_voltage: f64, bus_voltage: f64) -> f64 {
    1.0 - fc_voltage / bus_voltage
}

/// Losses of the boost converter carrying `fc_current` from the fuel cell at
/// `fc_voltage` up to `bus_voltage`.
///
/// The inductor current is treated as constant, so switching energies use the
/// DC current directly without sinusoidal averaging.
pub fn boost_converter_loss(
    fc_current: f64,
    fc_voltage: f64,
    bus_voltage: f64,
    bp: &BoostParams,
) -> Result<ConverterLoss, LossError> {
    if !(fc_voltage > 0.0) || fc_voltage > bus_voltage {
        return Err(LossError::Domain(format!(
            "boost requires 0 < V_FC <= V_bus, got V_FC = {fc_voltage} V, V_bus = {bus_voltage} V"
        )));
    }
    if !(fc_current >= 0.0) {
        return Err(LossError::Domain(format!(
            "fuel-cell current must be >= 0, got {fc_current} A"
        )));
    }
    let m = &bp.module;
    let i = fc_current;
    let duty = boost_duty(fc_voltage, bus_voltage);
    let scale = bp.switching_frequency * bus_voltage / m.nominal_voltage;
    Ok(ConverterLoss {
        igbt_conduction: duty * (m.igbt_threshold * i + m.igbt_on_resistance * i * i),
        diode_conduction: (1.0 - duty) * (m.diode_threshold * i + m.diode_on_resistance * i * i),
        igbt_switching: (m.scaled_energy(m.turn_on_energy, i) + m.scaled_energy(m.turn_off_energy, i)) * scale,
        diode_recovery: m.scaled_energy(m.recovery_energy, i) * scale,
        inductor_copper: i * i * bp.inductor_esr,
    })
}
