//! Fixed-step switched simulation of the inverter bridges, motor and boost cell.
//!
//! Each bridge leg is a two-level pole with sinusoidal PWM (asymmetric regular
//! sampling against a triangular carrier). The motor is modelled per phase as
//! `L di/dt = v - R i - e` with sinusoidal back-EMF. Conducting devices drop
//! `V_x0 + R_x |i|`; switching energies are booked at every gate transition,
//! scaled with the commutated current and the DC-link voltage.

mod compare;
mod levels;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dq::Dq;
use crate::fuel_cell::FuelCellCurve;
use crate::losses::{BoostParams, ConverterLoss, LossBreakdown, PowerModuleParams};
use crate::motor::MotorParams;
use crate::topology::{Converters, PointEvaluation, TopologyConfig, TopologyKind};

pub use compare::{compare_to_analytical, CategoryDeviation, SimComparison};
pub use levels::count_voltage_levels;

/// Finest allowed step is this many steps per carrier period.
pub const MIN_STEPS_PER_CARRIER: f64 = 100.0;
/// Default steps per carrier period.
pub const DEFAULT_STEPS_PER_CARRIER: f64 = 200.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unstable integration: {reason}; use a time step of at most {max_dt:e} s")]
    UnstableIntegration { dt: f64, max_dt: f64, reason: String },
    #[error("invalid simulation setup: {0}")]
    InvalidConfig(String),
}

/// One three-phase bridge in the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSetup {
    pub name: String,
    pub module: PowerModuleParams,
    /// DC-link voltage (V).
    pub dc_voltage: f64,
    /// Carrier frequency (Hz).
    pub switching_frequency: f64,
    /// Carrier offset as a fraction of the carrier period.
    pub carrier_phase: f64,
    /// Voltage vector this bridge contributes across the winding (V).
    pub reference: Dq,
    /// +1 for the bridge at the winding start, -1 at the far end.
    pub polarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostSetup {
    pub params: BoostParams,
    pub fuel_cell: FuelCellCurve,
    /// Output bus voltage (V).
    pub bus_voltage: f64,
    /// Commanded average inductor current (A).
    pub current: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub kind: TopologyKind,
    pub motor: MotorParams,
    /// Electrical speed (rad/s).
    pub electrical_speed: f64,
    /// Steady-state current the references were computed for.
    pub commanded_current: Dq,
    /// dq current at t = 0.
    pub initial_current: Dq,
    pub bridges: Vec<BridgeSetup>,
    pub boost: Option<BoostSetup>,
    /// Integration step (s).
    pub dt: f64,
    /// Start-up interval excluded from all measurements (s).
    pub settle: f64,
    /// Total simulated time (s).
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Integration step; defaults to 1/(200 f_sw) of the fastest carrier.
    pub dt: Option<f64>,
    /// Fundamental periods included in the measurement.
    pub periods: usize,
    /// Fundamental periods discarded before measuring.
    pub settle_periods: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: None,
            periods: 4,
            settle_periods: 1,
        }
    }
}

impl SimConfig {
    /// Builds the simulation of an analytically evaluated operating point.
    pub fn from_point(cfg: &TopologyConfig, eval: &PointEvaluation, opts: &SimOptions) -> Result<Self, SimError> {
        let op = &eval.operating_point;
        let omega = op.electrical_speed;
        if !(omega > 0.0) {
            return Err(SimError::InvalidConfig("the motor must be turning".into()));
        }
        if opts.periods == 0 || opts.settle_periods == 0 {
            return Err(SimError::InvalidConfig(
                "need at least one settling and one measured fundamental period".into(),
            ));
        }
        let (bridges, boost) = match &cfg.converters {
            Converters::Dual {
                fc_inverter,
                battery_inverter,
            } => {
                let split = eval
                    .split
                    .ok_or_else(|| SimError::InvalidConfig("dual point without a voltage split".into()))?;
                let bridges = vec![
                    BridgeSetup {
                        name: "fc_inverter".into(),
                        module: fc_inverter.module.clone(),
                        dc_voltage: eval.fc_voltage,
                        switching_frequency: fc_inverter.switching_frequency,
                        carrier_phase: 0.0,
                        reference: split.fc_voltage,
                        polarity: 1.0,
                    },
                    BridgeSetup {
                        name: "battery_inverter".into(),
                        module: battery_inverter.module.clone(),
                        dc_voltage: cfg.battery_voltage,
                        switching_frequency: battery_inverter.switching_frequency,
                        carrier_phase: 0.5,
                        reference: split.battery_voltage,
                        polarity: -1.0,
                    },
                ];
                (bridges, None)
            }
            Converters::Conventional {
                traction_inverter,
                boost,
            } => {
                let bridge = BridgeSetup {
                    name: "traction_inverter".into(),
                    module: traction_inverter.module.clone(),
                    dc_voltage: cfg.battery_voltage,
                    switching_frequency: traction_inverter.switching_frequency,
                    carrier_phase: 0.0,
                    reference: op.voltage,
                    polarity: 1.0,
                };
                let current = cfg
                    .fuel_cell
                    .current_at_power(eval.fc_reference)
                    .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
                let boost = BoostSetup {
                    params: boost.clone(),
                    fuel_cell: cfg.fuel_cell.clone(),
                    bus_voltage: cfg.battery_voltage,
                    current,
                };
                (vec![bridge], Some(boost))
            }
        };
        let fastest = bridges
            .iter()
            .map(|b| b.switching_frequency)
            .chain(boost.iter().map(|b| b.params.switching_frequency))
            .fold(0.0, f64::max);
        let period = 2.0 * PI / omega;
        Ok(Self {
            kind: eval.kind,
            motor: cfg.motor,
            electrical_speed: omega,
            commanded_current: op.current,
            initial_current: op.current,
            bridges,
            boost,
            dt: opts.dt.unwrap_or(1.0 / (DEFAULT_STEPS_PER_CARRIER * fastest)),
            settle: opts.settle_periods as f64 * period,
            duration: (opts.settle_periods + opts.periods) as f64 * period,
        })
    }

    fn fastest_carrier(&self) -> f64 {
        self.bridges
            .iter()
            .map(|b| b.switching_frequency)
            .chain(self.boost.iter().map(|b| b.params.switching_frequency))
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: &str| Err(SimError::InvalidConfig(m.into()));
        if self.bridges.is_empty() {
            return invalid("no bridges");
        }
        if !(self.duration > self.settle && self.settle >= 0.0) {
            return invalid("duration must exceed the settling time");
        }
        for b in &self.bridges {
            if !(b.dc_voltage > 0.0 && b.switching_frequency > 0.0) {
                return invalid("bridge DC voltage and carrier frequency must be positive");
            }
        }
        let max_dt = 1.0 / (MIN_STEPS_PER_CARRIER * self.fastest_carrier());
        if !(self.dt > 0.0) || self.dt > max_dt * (1.0 + 1e-12) {
            return Err(SimError::UnstableIntegration {
                dt: self.dt,
                max_dt,
                reason: format!(
                    "time step {:e} s resolves fewer than {MIN_STEPS_PER_CARRIER} steps per carrier period",
                    self.dt
                ),
            });
        }
        Ok(())
    }
}

/// Fundamental-frequency content over the measurement window (dq, peak values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalAnalysis {
    pub current: Dq,
    pub current_peak: f64,
    /// Contribution of each bridge to the winding voltage, in bridge order.
    pub bridge_voltages: Vec<Dq>,
    pub winding_voltage: Dq,
}

/// Energies over the measurement window (J).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBalance {
    /// Net energy delivered by the DC sources (battery, fuel cell).
    pub source: f64,
    pub motor_copper: f64,
    pub back_emf_work: f64,
    /// Change of stored inductor energy (motor and boost inductor).
    pub stored_change: f64,
    pub device_conduction: f64,
    pub switching: f64,
    pub inductor_copper: f64,
}

impl EnergyBalance {
    /// Everything the source energy is accounted for by.
    pub fn accounted(&self) -> f64 {
        self.motor_copper
            + self.back_emf_work
            + self.stored_change
            + self.device_conduction
            + self.switching
            + self.inductor_copper
    }

    pub fn relative_error(&self) -> f64 {
        let scale = self.source.abs().max(self.accounted().abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.source - self.accounted()).abs() / scale
        }
    }
}

/// Waveforms and event-accounted losses of one switched run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimWaveforms {
    pub kind: TopologyKind,
    pub dt: f64,
    /// Measurement window length (s).
    pub window: f64,
    /// Total integration steps, including the settling interval.
    pub steps: usize,
    /// Sample instants of the recorded window (s).
    pub time: Vec<f64>,
    /// Motor phase voltages: switch node to neutral (single bridge) or
    /// across the winding (open-end winding).
    pub phase_voltage: [Vec<f64>; 3],
    pub phase_current: [Vec<f64>; 3],
    /// Per bridge and sample, bit `k` set while the upper device of leg `k` is gated.
    pub gate_states: Vec<Vec<u8>>,
    /// Turn-on events of each upper device in the window, `[bridge][leg]`.
    pub turn_on_events: Vec<[usize; 3]>,
    /// Mean losses over the window (W).
    pub losses: LossBreakdown,
    pub energy: EnergyBalance,
    /// `None` when the motor is at standstill.
    pub fundamental: Option<FundamentalAnalysis>,
    /// Fundamental periods covered by the window.
    pub periods: f64,
    /// Mean boost inductor current (A).
    pub boost_mean_current: Option<f64>,
}

impl SimWaveforms {
    /// Writes `t_s,v_a_v,v_b_v,v_c_v,i_a_a,i_b_a,i_c_a`, keeping every `stride`-th sample.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_s", "v_a_v", "v_b_v", "v_c_v", "i_a_a", "i_b_a", "i_c_a"])?;
        for n in (0..self.time.len()).step_by(stride.max(1)) {
            let row = [
                self.time[n],
                self.phase_voltage[0][n],
                self.phase_voltage[1][n],
                self.phase_voltage[2][n],
                self.phase_current[0][n],
                self.phase_current[1][n],
                self.phase_current[2][n],
            ];
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn triangle(x: f64) -> f64 {
    let f = x - x.floor();
    if f < 0.5 {
        2.0 * f
    } else {
        2.0 - 2.0 * f
    }
}

fn phase_angle(theta: f64, k: usize) -> f64 {
    theta - 2.0 * PI * k as f64 / 3.0
}

#[derive(Clone)]
struct BridgeState {
    half_index: i64,
    duty: [f64; 3],
    gate: [bool; 3],
    loss: ConverterLoss,
    turn_on: [usize; 3],
}

/// Integrates the switched circuit described by `cfg`.
pub fn run_switched(cfg: &SimConfig) -> Result<SimWaveforms, SimError> {
    cfg.validate()?;
    let motor = &cfg.motor;
    let (r, l, psi) = (
        motor.stator_resistance,
        motor.synchronous_inductance,
        motor.magnet_flux_linkage,
    );
    let omega = cfg.electrical_speed;
    let dt = cfg.dt;
    let steps = (cfg.duration / dt).round() as usize;
    let first = (cfg.settle / dt).round() as usize;
    let recorded = steps - first;
    let divergence_limit = 10.0 * cfg.commanded_current.magnitude().max(cfg.initial_current.magnitude()) + 100.0;

    let mut i: [f64; 3] = std::array::from_fn(|k| cfg.initial_current.to_phase(0.0, k));
    let mut bridges: Vec<BridgeState> = vec![
        BridgeState {
            half_index: i64::MIN,
            duty: [0.5; 3],
            gate: [false; 3],
            loss: ConverterLoss::default(),
            turn_on: [0; 3],
        };
        cfg.bridges.len()
    ];
    let mut bridge_fund: Vec<[f64; 2]> = vec![[0.0; 2]; cfg.bridges.len()];
    let mut current_fund = [0.0; 2];
    let mut voltage_fund = [0.0; 2];

    let mut boost_current = cfg.boost.as_ref().map_or(0.0, |b| b.current);
    let mut boost_gate = false;
    let mut boost_loss = ConverterLoss::default();
    let boost_duty = cfg.boost.as_ref().map(boost_duty_with_drops);
    let mut boost_charge = 0.0;

    let mut energy = EnergyBalance::default();
    let mut stored_start = 0.0;

    let mut time = Vec::with_capacity(recorded);
    let mut phase_voltage: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(recorded));
    let mut phase_current: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(recorded));
    let mut gate_states: Vec<Vec<u8>> = vec![Vec::with_capacity(recorded); cfg.bridges.len()];

    let stored = |i: &[f64; 3], ib: f64| {
        0.5 * l * (i[0] * i[0] + i[1] * i[1] + i[2] * i[2])
            + cfg.boost.as_ref().map_or(0.0, |b| 0.5 * b.params.inductance * ib * ib)
    };

    for n in 0..=steps {
        let t = n as f64 * dt;
        let theta = omega * t;
        let measuring = n >= first;
        if n == first {
            stored_start = stored(&i, boost_current);
        }
        if n == steps {
            break;
        }
        if i.iter().any(|x| !x.is_finite() || x.abs() > divergence_limit) || !boost_current.is_finite() {
            return Err(SimError::UnstableIntegration {
                dt,
                max_dt: 1.0 / (MIN_STEPS_PER_CARRIER * cfg.fastest_carrier()),
                reason: format!("phase currents diverged at t = {t:e} s"),
            });
        }

        // winding voltage contributions of each bridge, before removing the common mode
        let mut winding = [0.0; 3];
        for (b, (setup, state)) in cfg.bridges.iter().zip(bridges.iter_mut()).enumerate() {
            let x = t * setup.switching_frequency + setup.carrier_phase;
            let half = (2.0 * x).floor() as i64;
            if half != state.half_index {
                // sample the reference at the centre of this half carrier period
                let t_mid = ((half as f64 + 0.5) / 2.0 - setup.carrier_phase) / setup.switching_frequency;
                let theta_mid = omega * t_mid;
                for k in 0..3 {
                    let v = setup.reference.to_phase(theta_mid, k);
                    state.duty[k] = (0.5 + setup.polarity * v / setup.dc_voltage).clamp(0.0, 1.0);
                }
                state.half_index = half;
            }
            let carrier = triangle(x);
            let m = &setup.module;
            let scale = setup.dc_voltage / m.nominal_voltage / m.nominal_current;
            let mut bits = 0u8;
            let mut contribution = [0.0; 3];
            let mut dc_current = 0.0;
            for k in 0..3 {
                let gate = state.duty[k] > carrier;
                let leg = setup.polarity * i[k];
                if n > 0 && gate != state.gate[k] && measuring {
                    let a = leg.abs();
                    // the device turning on at positive current is the upper IGBT
                    let turning_on = gate == (leg > 0.0);
                    if turning_on {
                        state.loss.igbt_switching += m.turn_on_energy * a * scale;
                        state.loss.diode_recovery += m.recovery_energy * a * scale;
                    } else {
                        state.loss.igbt_switching += m.turn_off_energy * a * scale;
                    }
                }
                if n > 0 && gate && !state.gate[k] && measuring {
                    state.turn_on[k] += 1;
                }
                state.gate[k] = gate;
                if gate {
                    bits |= 1 << k;
                }

                let a = leg.abs();
                let igbt_drop = m.igbt_threshold + m.igbt_on_resistance * a;
                let diode_drop = m.diode_threshold + m.diode_on_resistance * a;
                let (pole, igbt_on) = match (gate, leg > 0.0) {
                    _ if leg == 0.0 => (if gate { setup.dc_voltage } else { 0.0 }, true),
                    (true, true) => (setup.dc_voltage - igbt_drop, true),
                    (true, false) => (setup.dc_voltage + diode_drop, false),
                    (false, true) => (-diode_drop, false),
                    (false, false) => (igbt_drop, true),
                };
                if measuring && leg != 0.0 {
                    if igbt_on {
                        state.loss.igbt_conduction += igbt_drop * a * dt;
                    } else {
                        state.loss.diode_conduction += diode_drop * a * dt;
                    }
                }
                if gate {
                    dc_current += leg;
                }
                contribution[k] = setup.polarity * pole;
            }
            let mean = (contribution[0] + contribution[1] + contribution[2]) / 3.0;
            for k in 0..3 {
                winding[k] += contribution[k];
                if measuring {
                    let ang = phase_angle(theta, k);
                    let x = contribution[k] - mean;
                    bridge_fund[b][0] += x * ang.cos() * dt;
                    bridge_fund[b][1] += x * ang.sin() * dt;
                }
            }
            if measuring {
                energy.source += setup.dc_voltage * dc_current * dt;
                gate_states[b].push(bits);
            }
        }
        let mean = (winding[0] + winding[1] + winding[2]) / 3.0;
        let v: [f64; 3] = std::array::from_fn(|k| winding[k] - mean);
        let e: [f64; 3] = std::array::from_fn(|k| -omega * psi * phase_angle(theta, k).sin());

        if measuring {
            time.push(t);
            for k in 0..3 {
                phase_voltage[k].push(v[k]);
                phase_current[k].push(i[k]);
                energy.motor_copper += r * i[k] * i[k] * dt;
                energy.back_emf_work += e[k] * i[k] * dt;
                let ang = phase_angle(theta, k);
                current_fund[0] += i[k] * ang.cos() * dt;
                current_fund[1] += i[k] * ang.sin() * dt;
                voltage_fund[0] += v[k] * ang.cos() * dt;
                voltage_fund[1] += v[k] * ang.sin() * dt;
            }
        }

        if let (Some(boost), Some(duty)) = (&cfg.boost, boost_duty) {
            let p = &boost.params;
            let m = &p.module;
            let x = t * p.switching_frequency;
            let gate = duty > triangle(x);
            let ib = boost_current;
            if n > 0 && gate != boost_gate && measuring && ib > 0.0 {
                let scale = ib / m.nominal_current * boost.bus_voltage / m.nominal_voltage;
                if gate {
                    boost_loss.igbt_switching += m.turn_on_energy * scale;
                    boost_loss.diode_recovery += m.recovery_energy * scale;
                } else {
                    boost_loss.igbt_switching += m.turn_off_energy * scale;
                }
            }
            boost_gate = gate;
            let v_fc = fc_voltage(&boost.fuel_cell, ib);
            let switch_node = if ib <= 0.0 {
                if gate {
                    0.0
                } else {
                    boost.bus_voltage
                }
            } else if gate {
                m.igbt_threshold + m.igbt_on_resistance * ib
            } else {
                boost.bus_voltage + m.diode_threshold + m.diode_on_resistance * ib
            };
            if measuring && ib > 0.0 {
                if gate {
                    boost_loss.igbt_conduction += (m.igbt_threshold + m.igbt_on_resistance * ib) * ib * dt;
                } else {
                    boost_loss.diode_conduction += (m.diode_threshold + m.diode_on_resistance * ib) * ib * dt;
                    // energy handed to the bus reduces what the battery supplies
                    energy.source -= boost.bus_voltage * ib * dt;
                }
                boost_loss.inductor_copper += p.inductor_esr * ib * ib * dt;
                energy.source += v_fc * ib * dt;
                boost_charge += ib * dt;
            }
            let next = ib + dt / p.inductance * (v_fc - p.inductor_esr * ib - switch_node);
            // the diode blocks reverse current
            boost_current = next.max(0.0);
        }

        for k in 0..3 {
            i[k] += dt / l * (v[k] - r * i[k] - e[k]);
        }
    }

    let window = recorded as f64 * dt;
    energy.stored_change = stored(&i, boost_current) - stored_start;

    let mut losses = LossBreakdown {
        motor_copper: energy.motor_copper / window,
        ..LossBreakdown::default()
    };
    let mut conduction = 0.0;
    let mut switching = 0.0;
    let mut add = |c: &ConverterLoss| {
        conduction += c.igbt_conduction + c.diode_conduction;
        switching += c.igbt_switching + c.diode_recovery;
    };
    for (setup, state) in cfg.bridges.iter().zip(&bridges) {
        add(&state.loss);
        let mean = scale_loss(&state.loss, 1.0 / window);
        match setup.name.as_str() {
            "fc_inverter" => losses.fc_inverter = Some(mean),
            "battery_inverter" => losses.battery_inverter = Some(mean),
            _ => losses.traction_inverter = Some(mean),
        }
    }
    if cfg.boost.is_some() {
        add(&boost_loss);
        energy.inductor_copper = boost_loss.inductor_copper;
        losses.boost = Some(scale_loss(&boost_loss, 1.0 / window));
    }
    energy.device_conduction = conduction;
    energy.switching = switching;
    // switching energy is drawn from the sources on top of the circuit energy
    energy.source += switching;

    let periods = window * omega / (2.0 * PI);
    let fundamental = (omega > 0.0).then(|| {
        let to_dq = |acc: [f64; 2]| Dq::new(2.0 * acc[0] / (3.0 * window), -2.0 * acc[1] / (3.0 * window));
        let current = to_dq(current_fund);
        FundamentalAnalysis {
            current,
            current_peak: current.magnitude(),
            bridge_voltages: bridge_fund.iter().map(|&a| to_dq(a)).collect(),
            winding_voltage: to_dq(voltage_fund),
        }
    });

    Ok(SimWaveforms {
        kind: cfg.kind,
        dt,
        window,
        steps,
        time,
        phase_voltage,
        phase_current,
        gate_states,
        turn_on_events: bridges.iter().map(|s| s.turn_on).collect(),
        losses,
        energy,
        fundamental,
        periods,
        boost_mean_current: cfg.boost.as_ref().map(|_| boost_charge / window),
    })
}

fn scale_loss(c: &ConverterLoss, k: f64) -> ConverterLoss {
    ConverterLoss {
        igbt_conduction: c.igbt_conduction * k,
        diode_conduction: c.diode_conduction * k,
        igbt_switching: c.igbt_switching * k,
        diode_recovery: c.diode_recovery * k,
        inductor_copper: c.inductor_copper * k,
    }
}

fn fc_voltage(curve: &FuelCellCurve, current: f64) -> f64 {
    let i = current.clamp(0.0, curve.max_current);
    curve.voltage_at_current(i).unwrap_or(0.0)
}

/// Boost duty that balances the average inductor voltage at the commanded
/// current, including the device drops and the inductor resistance.
fn boost_duty_with_drops(b: &BoostSetup) -> f64 {
    let m = &b.params.module;
    let i = b.current;
    let v_fc = fc_voltage(&b.fuel_cell, i);
    let on = m.igbt_threshold + m.igbt_on_resistance * i;
    let off = b.bus_voltage + m.diode_threshold + m.diode_on_resistance * i;
    ((off + b.params.inductor_esr * i - v_fc) / (off - on)).clamp(0.0, 1.0)
}
