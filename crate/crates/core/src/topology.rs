//! Drivetrain topologies and quasi-static evaluation of one operating point.
//!
//! * Dual inverter: an open-end-winding motor fed by a fuel-cell bridge on
//!   one side and a 400 V battery bridge on the other.
//! * Conventional: one 800 V traction inverter on a battery bus, with the
//!   fuel cell connected through a unidirectional boost converter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dq::Dq;
use crate::fuel_cell::{FuelCellCurve, FuelCellError};
use crate::losses::{
    boost_converter_loss, inverter_loss, BoostParams, ConverterLoss, InverterConditions, LossBreakdown, LossError,
    PowerModuleParams,
};
use crate::motor::{solve_operating_point, MotorError, MotorParams, OperatingPoint};
use crate::sharing::{split_voltage, PowerSplit, SharingPolicy, SplitError};
use crate::vehicle::{EnvironmentConstants, VehicleParams};

/// Electrical speed (rad/s) used for single-point comparisons when none is given.
pub const DEFAULT_VALIDATION_SPEED: f64 = 1250.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Dual,
    Conventional,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Dual => "dual",
            TopologyKind::Conventional => "conventional",
        }
    }
}

impl std::fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dual" | "dual_inverter" => Ok(TopologyKind::Dual),
            "conventional" | "boosted" => Ok(TopologyKind::Conventional),
            other => Err(format!("unknown topology {other:?} (expected dual or conventional)")),
        }
    }
}

/// One three-phase bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverterSpec {
    pub module: PowerModuleParams,
    /// Carrier frequency (Hz).
    pub switching_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Converters {
    Dual {
        fc_inverter: InverterSpec,
        battery_inverter: InverterSpec,
    },
    Conventional {
        traction_inverter: InverterSpec,
        boost: BoostParams,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub converters: Converters,
    /// Battery (dual) or DC bus (conventional) voltage (V).
    pub battery_voltage: f64,
    /// Largest modulation index allowed for any bridge.
    pub max_modulation: f64,
    /// Peak phase-current ceiling for field weakening and current injection (A).
    pub current_ceiling: f64,
    pub sharing: SharingPolicy,
    pub fuel_cell: FuelCellCurve,
    pub motor: MotorParams,
    pub vehicle: VehicleParams,
    pub environment: EnvironmentConstants,
}

impl TopologyConfig {
    pub fn dual_default() -> Self {
        let bridge = InverterSpec {
            module: PowerModuleParams::fs400r07a3e3(),
            switching_frequency: 10e3,
        };
        Self {
            converters: Converters::Dual {
                fc_inverter: bridge.clone(),
                battery_inverter: bridge,
            },
            battery_voltage: 400.0,
            max_modulation: 1.0,
            current_ceiling: 800.0,
            sharing: SharingPolicy::default(),
            fuel_cell: FuelCellCurve::default(),
            motor: MotorParams::default(),
            vehicle: VehicleParams::default(),
            environment: EnvironmentConstants::default(),
        }
    }

    pub fn conventional_default() -> Self {
        Self {
            converters: Converters::Conventional {
                traction_inverter: InverterSpec {
                    module: PowerModuleParams::fs400r12a2t4(),
                    switching_frequency: 20e3,
                },
                boost: BoostParams::default(),
            },
            battery_voltage: 800.0,
            current_ceiling: 600.0,
            ..Self::dual_default()
        }
    }

    pub fn default_for(kind: TopologyKind) -> Self {
        match kind {
            TopologyKind::Dual => Self::dual_default(),
            TopologyKind::Conventional => Self::conventional_default(),
        }
    }

    pub fn kind(&self) -> TopologyKind {
        match self.converters {
            Converters::Dual { .. } => TopologyKind::Dual,
            Converters::Conventional { .. } => TopologyKind::Conventional,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let invalid = |msg: String| Err(EvalError::InvalidConfig(msg));
        self.motor.validate()?;
        self.fuel_cell.validate()?;
        self.vehicle.validate().map_err(EvalError::InvalidConfig)?;
        self.environment.validate().map_err(EvalError::InvalidConfig)?;
        self.sharing.validate().map_err(EvalError::InvalidConfig)?;
        if !(self.battery_voltage > 0.0) {
            return invalid(format!(
                "battery voltage must be positive, got {}",
                self.battery_voltage
            ));
        }
        if !(self.max_modulation > 0.0 && self.max_modulation <= 1.0) {
            return invalid(format!("m_max must lie in (0, 1], got {}", self.max_modulation));
        }
        if !(self.current_ceiling > 0.0) {
            return invalid("current ceiling must be positive".into());
        }
        if self.sharing.max_power > self.fuel_cell.rated_power {
            return invalid("sharing P_max exceeds the fuel-cell rating".into());
        }
        let bridges: Vec<&InverterSpec> = match &self.converters {
            Converters::Dual {
                fc_inverter,
                battery_inverter,
            } => vec![fc_inverter, battery_inverter],
            Converters::Conventional {
                traction_inverter,
                boost,
            } => {
                boost.module.validate()?;
                if !(boost.inductance > 0.0 && boost.inductor_esr >= 0.0 && boost.switching_frequency > 0.0) {
                    return invalid("boost L_ind and f_sw must be positive, R_ind non-negative".into());
                }
                vec![traction_inverter]
            }
        };
        for b in bridges {
            b.module.validate()?;
            if !(b.switching_frequency > 0.0) {
                return invalid(format!("{} switching frequency must be positive", b.module.label));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Motor(#[from] MotorError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    FuelCell(#[from] FuelCellError),
    #[error("no feasible voltage split up to the {current_ceiling} A current ceiling: {source}")]
    Split { source: SplitError, current_ceiling: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("fuel-cell power {power} W cannot be absorbed by the motor at {omega_e} rad/s")]
    UnreachableFcPower { power: f64, omega_e: f64 },
}

/// Quasi-static result for one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEvaluation {
    pub kind: TopologyKind,
    pub operating_point: OperatingPoint,
    /// Bridge voltage vectors (dual only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<PowerSplit>,
    /// Extra negative d-axis current added to make the split feasible (A).
    pub d_axis_injection: f64,
    /// Fuel-cell terminal voltage (V).
    pub fc_voltage: f64,
    pub losses: LossBreakdown,
    /// Shaft power (W).
    pub p_ac: f64,
    /// Motor terminal power (W).
    pub p_elec: f64,
    /// Total DC-side power drawn from both sources (W).
    pub p_dc: f64,
    pub p_fc: f64,
    pub p_bat: f64,
    pub fc_reference: f64,
}

impl PointEvaluation {
    fn idle(kind: TopologyKind, cfg: &TopologyConfig, fc_reference: f64) -> Self {
        let zero = ConverterLoss::default();
        let losses = match kind {
            TopologyKind::Dual => LossBreakdown {
                fc_inverter: Some(zero),
                battery_inverter: Some(zero),
                ..LossBreakdown::default()
            },
            TopologyKind::Conventional => LossBreakdown {
                traction_inverter: Some(zero),
                boost: Some(zero),
                ..LossBreakdown::default()
            },
        };
        Self {
            kind,
            operating_point: OperatingPoint::zero(0.0, &cfg.motor),
            split: None,
            d_axis_injection: 0.0,
            fc_voltage: cfg.fuel_cell.voltage_at_current(0.0).unwrap_or(0.0),
            losses,
            p_ac: 0.0,
            p_elec: 0.0,
            p_dc: 0.0,
            p_fc: 0.0,
            p_bat: 0.0,
            fc_reference,
        }
    }
}

fn bridge_loss(c: &InverterConditions, spec: &InverterSpec) -> Result<ConverterLoss, LossError> {
    inverter_loss(c, &spec.module)
}

/// Evaluates the drivetrain delivering `shaft_power` at `omega_e` with the
/// fuel cell asked for `fc_reference`.
///
/// At standstill the drive is disabled and every power and loss is zero.
pub fn evaluate_point(
    cfg: &TopologyConfig,
    shaft_power: f64,
    omega_e: f64,
    fc_reference: f64,
) -> Result<PointEvaluation, EvalError> {
    let kind = cfg.kind();
    if omega_e == 0.0 {
        if shaft_power != 0.0 {
            return Err(MotorError::ZeroSpeedPower { power: shaft_power }.into());
        }
        return Ok(PointEvaluation::idle(kind, cfg, fc_reference));
    }
    let fc_current = cfg.fuel_cell.current_at_power(fc_reference)?;
    let fc_voltage = cfg.fuel_cell.voltage_at_current(fc_current)?;

    match &cfg.converters {
        Converters::Dual {
            fc_inverter,
            battery_inverter,
        } => {
            let voltage_limit = cfg.max_modulation * (fc_voltage + cfg.battery_voltage) / 2.0;
            let base = solve_operating_point(shaft_power, omega_e, &cfg.motor, voltage_limit, cfg.current_ceiling)?;
            let (op, split) = split_with_injection(cfg, &base, fc_reference, fc_voltage)?;
            let fc_loss = bridge_loss(
                &split.fc_conditions(&op, fc_voltage, fc_inverter.switching_frequency),
                fc_inverter,
            )?;
            let bat_loss = bridge_loss(
                &split.battery_conditions(&op, cfg.battery_voltage, battery_inverter.switching_frequency),
                battery_inverter,
            )?;
            let losses = LossBreakdown {
                fc_inverter: Some(fc_loss),
                battery_inverter: Some(bat_loss),
                motor_copper: op.copper_loss(&cfg.motor),
                ..LossBreakdown::default()
            };
            let p_elec = op.electrical_power();
            let p_dc = p_elec + losses.converter_total();
            let p_fc = split.realized_fc_power + fc_loss.total();
            Ok(PointEvaluation {
                kind,
                d_axis_injection: op.current.d - base.current.d,
                operating_point: op,
                split: Some(split),
                fc_voltage,
                losses,
                p_ac: shaft_power,
                p_elec,
                p_dc,
                p_fc,
                p_bat: p_dc - p_fc,
                fc_reference,
            })
        }
        Converters::Conventional {
            traction_inverter,
            boost,
        } => {
            let voltage_limit = cfg.max_modulation * cfg.battery_voltage / 2.0;
            let op = solve_operating_point(shaft_power, omega_e, &cfg.motor, voltage_limit, cfg.current_ceiling)?;
            let conditions = InverterConditions {
                peak_phase_current: op.phase_current_peak,
                modulation_index: (2.0 * op.phase_voltage_peak / cfg.battery_voltage).min(1.0),
                displacement_factor: op.displacement_factor(),
                dc_link_voltage: cfg.battery_voltage,
                switching_frequency: traction_inverter.switching_frequency,
            };
            let inv = bridge_loss(&conditions, traction_inverter)?;
            let boost_loss = boost_converter_loss(fc_current, fc_voltage, cfg.battery_voltage, boost)?;
            let losses = LossBreakdown {
                traction_inverter: Some(inv),
                boost: Some(boost_loss),
                motor_copper: op.copper_loss(&cfg.motor),
                ..LossBreakdown::default()
            };
            let p_elec = op.electrical_power();
            let p_dc = p_elec + losses.converter_total();
            Ok(PointEvaluation {
                kind,
                operating_point: op,
                split: None,
                d_axis_injection: 0.0,
                fc_voltage,
                losses,
                p_ac: shaft_power,
                p_elec,
                p_dc,
                p_fc: fc_reference,
                p_bat: p_dc - fc_reference,
                fc_reference,
            })
        }
    }
}

/// Splits the motor voltage between the bridges, adding negative d-axis
/// current when the plain operating point leaves no feasible split. The
/// smallest sufficient injection is located by a coarse scan and refined by
/// bisection.
fn split_with_injection(
    cfg: &TopologyConfig,
    base: &OperatingPoint,
    fc_reference: f64,
    fc_voltage: f64,
) -> Result<(OperatingPoint, PowerSplit), EvalError> {
    let try_split = |i_d: f64| {
        let op = OperatingPoint::from_current(Dq::new(i_d, base.current.q), base.electrical_speed, &cfg.motor);
        split_voltage(&op, fc_reference, fc_voltage, cfg.battery_voltage, cfg.max_modulation).map(|s| (op, s))
    };
    let first_error = match split_voltage(base, fc_reference, fc_voltage, cfg.battery_voltage, cfg.max_modulation) {
        Ok(s) => return Ok((*base, s)),
        Err(e) => e,
    };
    let fail = || EvalError::Split {
        source: first_error.clone(),
        current_ceiling: cfg.current_ceiling,
    };
    let i_q = base.current.q;
    let headroom = cfg.current_ceiling * cfg.current_ceiling - i_q * i_q;
    if headroom <= 0.0 {
        return Err(fail());
    }
    let deepest = -headroom.sqrt();
    const SCAN_STEP: f64 = 1.0;

    let mut infeasible = base.current.d;
    let mut candidate = infeasible - SCAN_STEP;
    loop {
        let i_d = candidate.max(deepest);
        if let Ok(found) = try_split(i_d) {
            let (mut lo, mut hi) = (i_d, infeasible); // lo feasible, hi infeasible
            let mut best = found;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                match try_split(mid) {
                    Ok(r) => {
                        lo = mid;
                        best = r;
                    }
                    Err(_) => hi = mid,
                }
                if hi - lo < 1e-9 {
                    break;
                }
            }
            return Ok(best);
        }
        if i_d <= deepest {
            return Err(fail());
        }
        infeasible = i_d;
        candidate = i_d - SCAN_STEP;
    }
}

/// Evaluates the point at which the motor absorbs exactly `fc_power` at its
/// terminals while the fuel cell supplies `fc_power`, so the battery only
/// covers converter losses.
pub fn evaluate_fc_point(cfg: &TopologyConfig, fc_power: f64, omega_e: f64) -> Result<PointEvaluation, EvalError> {
    if fc_power == 0.0 {
        return evaluate_point(cfg, 0.0, omega_e, 0.0);
    }
    if !(fc_power > 0.0) || omega_e == 0.0 {
        return Err(EvalError::UnreachableFcPower {
            power: fc_power,
            omega_e,
        });
    }
    let fc_voltage = cfg.fuel_cell.voltage_at_power(fc_power)?;
    let voltage_limit = match cfg.kind() {
        TopologyKind::Dual => cfg.max_modulation * (fc_voltage + cfg.battery_voltage) / 2.0,
        TopologyKind::Conventional => cfg.max_modulation * cfg.battery_voltage / 2.0,
    };
    let electrical = |shaft: f64| {
        solve_operating_point(shaft, omega_e, &cfg.motor, voltage_limit, cfg.current_ceiling)
            .map(|op| op.electrical_power())
    };
    // Terminal power exceeds shaft power by the copper loss, so the shaft
    // power lies in [0, fc_power].
    let (mut lo, mut hi) = (0.0, fc_power);
    if electrical(hi).is_err() {
        return Err(EvalError::UnreachableFcPower {
            power: fc_power,
            omega_e,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if electrical(mid)? < fc_power {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * fc_power {
            break;
        }
    }
    evaluate_point(cfg, 0.5 * (lo + hi), omega_e, fc_power)
}

/// Both topologies at the same fuel-cell power and motor speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointComparison {
    pub fc_power: f64,
    pub omega_e: f64,
    pub dual: PointEvaluation,
    pub conventional: PointEvaluation,
    /// Conventional total loss divided by dual total loss.
    pub loss_ratio: f64,
}

pub fn compare_point(
    dual: &TopologyConfig,
    conventional: &TopologyConfig,
    fc_power: f64,
    omega_e: f64,
) -> Result<PointComparison, EvalError> {
    let d = evaluate_fc_point(dual, fc_power, omega_e)?;
    let c = evaluate_fc_point(conventional, fc_power, omega_e)?;
    Ok(PointComparison {
        fc_power,
        omega_e,
        loss_ratio: c.losses.total() / d.losses.total(),
        dual: d,
        conventional: c,
    })
}
