//! Comparison of simulated and analytical losses at one operating point.

use serde::{Deserialize, Serialize};

use super::SimWaveforms;
use crate::losses::LossBreakdown;

/// Allowed relative deviation of the aggregated conduction losses.
pub const CONDUCTION_TOLERANCE: f64 = 0.10;
/// Allowed relative deviation of the aggregated switching losses.
pub const SWITCHING_TOLERANCE: f64 = 0.20;
/// Allowed relative deviation of the total drivetrain loss.
pub const TOTAL_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDeviation {
    pub category: String,
    /// Simulated mean loss (W).
    pub simulated: f64,
    /// Analytical loss (W).
    pub analytical: f64,
    /// `(simulated - analytical) / analytical`; zero when both vanish.
    pub relative_deviation: f64,
}

impl CategoryDeviation {
    fn new(category: &str, simulated: f64, analytical: f64) -> Self {
        let relative_deviation = if analytical == 0.0 {
            if simulated == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (simulated - analytical) / analytical
        };
        Self {
            category: category.to_string(),
            simulated,
            analytical,
            relative_deviation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimComparison {
    /// Per mechanism, summed over converters, plus motor copper.
    pub categories: Vec<CategoryDeviation>,
    /// Device conduction plus inductor copper.
    pub conduction: CategoryDeviation,
    /// IGBT switching plus diode recovery.
    pub switching: CategoryDeviation,
    /// All converter losses plus motor copper.
    pub total: CategoryDeviation,
    pub passed: bool,
}

fn compare_breakdowns(sim: &LossBreakdown, ana: &LossBreakdown) -> SimComparison {
    let (s, a) = (sim.by_mechanism(), ana.by_mechanism());
    let categories = vec![
        CategoryDeviation::new("igbt_conduction", s.igbt_conduction, a.igbt_conduction),
        CategoryDeviation::new("diode_conduction", s.diode_conduction, a.diode_conduction),
        CategoryDeviation::new("igbt_switching", s.igbt_switching, a.igbt_switching),
        CategoryDeviation::new("diode_recovery", s.diode_recovery, a.diode_recovery),
        CategoryDeviation::new("inductor_copper", s.inductor_copper, a.inductor_copper),
        CategoryDeviation::new("motor_copper", sim.motor_copper, ana.motor_copper),
    ];
    let conduction = CategoryDeviation::new(
        "conduction",
        s.igbt_conduction + s.diode_conduction + s.inductor_copper,
        a.igbt_conduction + a.diode_conduction + a.inductor_copper,
    );
    let switching = CategoryDeviation::new("switching", s.switching(), a.switching());
    let total = CategoryDeviation::new("total", sim.total(), ana.total());
    let passed = conduction.relative_deviation.abs() <= CONDUCTION_TOLERANCE
        && switching.relative_deviation.abs() <= SWITCHING_TOLERANCE
        && total.relative_deviation.abs() <= TOTAL_TOLERANCE;
    SimComparison {
        categories,
        conduction,
        switching,
        total,
        passed,
    }
}

/// Relative deviation of the simulated losses from the analytical breakdown.
pub fn compare_to_analytical(w: &SimWaveforms, analytical: &LossBreakdown) -> SimComparison {
    compare_breakdowns(&w.losses, analytical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::ConverterLoss;

    #[test]
    fn identical_breakdowns_have_zero_deviation() {
        let b = LossBreakdown {
            traction_inverter: Some(ConverterLoss {
                igbt_conduction: 100.0,
                diode_conduction: 40.0,
                igbt_switching: 300.0,
                diode_recovery: 80.0,
                inductor_copper: 0.0,
            }),
            motor_copper: 500.0,
            ..LossBreakdown::default()
        };
        let c = compare_breakdowns(&b, &b);
        assert!(c.passed);
        assert!(c.categories.iter().all(|d| d.relative_deviation == 0.0));
        assert_eq!(c.total.relative_deviation, 0.0);
    }

    #[test]
    fn flags_large_switching_error() {
        let a = LossBreakdown {
            traction_inverter: Some(ConverterLoss {
                igbt_switching: 100.0,
                ..ConverterLoss::default()
            }),
            ..LossBreakdown::default()
        };
        let mut s = a;
        s.traction_inverter.as_mut().unwrap().igbt_switching = 125.0;
        let c = compare_breakdowns(&s, &a);
        assert!((c.switching.relative_deviation - 0.25).abs() < 1e-12);
        assert!(!c.passed);
    }
}
