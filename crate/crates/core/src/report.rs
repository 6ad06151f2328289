//! Serializable reports behind the command-line subcommands.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::DrivetrainConfig;
use crate::cycle::{compare_topologies, run_cycle, CycleComparison, CycleResult, DriveCycle};
use crate::losses::LossBreakdown;
use crate::sim::{
    compare_to_analytical, count_voltage_levels, run_switched, EnergyBalance, FundamentalAnalysis, SimComparison,
    SimConfig, SimOptions, SimWaveforms,
};
use crate::topology::{evaluate_fc_point, EvalError, PointEvaluation, TopologyKind};
use crate::Error;

const LOSS_COLUMNS: [&str; 5] = [
    "igbt_conduction_w",
    "diode_conduction_w",
    "igbt_switching_w",
    "diode_recovery_w",
    "inductor_copper_w",
];

/// Writes `topology,converter,<mechanisms>,total_w` rows for one breakdown.
fn write_breakdown_rows<W: Write>(w: &mut csv::Writer<W>, topology: &str, b: &LossBreakdown) -> csv::Result<()> {
    for (name, c) in b.converters() {
        if let Some(c) = c {
            let values = [
                c.igbt_conduction,
                c.diode_conduction,
                c.igbt_switching,
                c.diode_recovery,
                c.inductor_copper,
                c.total(),
            ];
            let mut row = vec![topology.to_string(), name.to_string()];
            row.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    let mut row = vec![topology.to_string(), "motor_copper".to_string()];
    row.extend(["0"; 5].map(String::from));
    row.push(b.motor_copper.to_string());
    w.write_record(&row)?;
    let mut row = vec![topology.to_string(), "total".to_string()];
    row.extend(["0"; 5].map(String::from));
    row.push(b.total().to_string());
    w.write_record(&row)
}

fn breakdown_header() -> Vec<String> {
    let mut h = vec!["topology".to_string(), "converter".to_string()];
    h.extend(LOSS_COLUMNS.map(String::from));
    h.push("total_w".into());
    h
}

/// Analytical losses at one fuel-cell power and motor speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub fc_power: f64,
    /// Electrical speed (rad/s).
    pub omega_e: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual: Option<PointEvaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conventional: Option<PointEvaluation>,
    /// Conventional over dual total loss, when both were evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_ratio: Option<f64>,
}

pub fn analyze(
    config: &DrivetrainConfig,
    kinds: &[TopologyKind],
    fc_power: f64,
    omega_e: f64,
) -> Result<AnalyzeReport, EvalError> {
    let eval = |k: TopologyKind| -> Result<Option<PointEvaluation>, EvalError> {
        if kinds.contains(&k) {
            evaluate_fc_point(config.get(k), fc_power, omega_e).map(Some)
        } else {
            Ok(None)
        }
    };
    let dual = eval(TopologyKind::Dual)?;
    let conventional = eval(TopologyKind::Conventional)?;
    let loss_ratio = match (&dual, &conventional) {
        (Some(d), Some(c)) if d.losses.total() > 0.0 => Some(c.losses.total() / d.losses.total()),
        _ => None,
    };
    Ok(AnalyzeReport {
        fc_power,
        omega_e,
        dual,
        conventional,
        loss_ratio,
    })
}

impl AnalyzeReport {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(breakdown_header())?;
        for (kind, e) in [
            (TopologyKind::Dual, &self.dual),
            (TopologyKind::Conventional, &self.conventional),
        ] {
            if let Some(e) = e {
                write_breakdown_rows(&mut w, kind.as_str(), &e.losses)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Outcome of one switched simulation, without the raw waveforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub topology: TopologyKind,
    pub fc_power: f64,
    pub omega_e: f64,
    pub dt: f64,
    pub periods: f64,
    pub voltage_levels: usize,
    pub level_tolerance: f64,
    pub simulated: LossBreakdown,
    pub analytical: LossBreakdown,
    pub comparison: SimComparison,
    pub energy: EnergyBalance,
    pub energy_balance_error: f64,
    pub commanded_current_peak: f64,
    pub fundamental: Option<FundamentalAnalysis>,
    pub turn_on_events: Vec<[usize; 3]>,
    pub boost_mean_current: Option<f64>,
}

pub fn simulate(
    config: &DrivetrainConfig,
    kind: TopologyKind,
    fc_power: f64,
    omega_e: f64,
    options: &SimOptions,
    level_tolerance: f64,
) -> Result<(SimulationReport, SimWaveforms), Error> {
    let cfg = config.get(kind);
    let eval = evaluate_fc_point(cfg, fc_power, omega_e)?;
    let sim = SimConfig::from_point(cfg, &eval, options)?;
    let w = run_switched(&sim)?;
    let report = SimulationReport {
        topology: kind,
        fc_power,
        omega_e,
        dt: w.dt,
        periods: w.periods,
        voltage_levels: count_voltage_levels(&w, level_tolerance),
        level_tolerance,
        simulated: w.losses,
        comparison: compare_to_analytical(&w, &eval.losses),
        analytical: eval.losses,
        energy: w.energy,
        energy_balance_error: w.energy.relative_error(),
        commanded_current_peak: eval.operating_point.phase_current_peak,
        fundamental: w.fundamental.clone(),
        turn_on_events: w.turn_on_events.clone(),
        boost_mean_current: w.boost_mean_current,
    };
    Ok((report, w))
}

/// Efficiency summary of both drivetrains on several cycles plus the
/// single-point loss comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub cycles: Vec<CycleComparison>,
    pub point: AnalyzeReport,
}

pub fn compare(
    config: &DrivetrainConfig,
    cycles: &[DriveCycle],
    fc_power: f64,
    omega_e: f64,
) -> Result<CompareReport, Error> {
    let mut out = Vec::with_capacity(cycles.len());
    for cycle in cycles {
        let (d, c) = compare_topologies(cycle, &config.dual, &config.conventional)?;
        out.push(CycleComparison::new(&d, &c));
    }
    let point = analyze(
        config,
        &[TopologyKind::Dual, TopologyKind::Conventional],
        fc_power,
        omega_e,
    )?;
    Ok(CompareReport { cycles: out, point })
}

impl CompareReport {
    /// Table with one row per cycle: efficiencies in percent and their difference.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "cycle",
            "dual_efficiency_pct",
            "conventional_efficiency_pct",
            "delta_pp",
            "loss_energy_ratio",
        ])?;
        for c in &self.cycles {
            w.write_record([
                c.cycle.clone(),
                (100.0 * c.dual.efficiency).to_string(),
                (100.0 * c.conventional.efficiency).to_string(),
                c.efficiency_delta_pp.to_string(),
                c.loss_energy_ratio.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs one or both drivetrains over a cycle.
pub fn cycle_runs(
    config: &DrivetrainConfig,
    cycle: &DriveCycle,
    kinds: &[TopologyKind],
) -> Result<Vec<CycleResult>, Error> {
    if kinds.contains(&TopologyKind::Dual) && kinds.contains(&TopologyKind::Conventional) {
        let (d, c) = compare_topologies(cycle, &config.dual, &config.conventional)?;
        return Ok(vec![d, c]);
    }
    kinds
        .iter()
        .map(|&k| run_cycle(cycle, config.get(k)).map_err(Error::from))
        .collect()
}
