//! Loss and efficiency models for fuel-cell electric drivetrains.
//!
//! Two topologies are modelled: a dual-inverter drive feeding an
//! open-end-winding PMSM directly from the fuel cell and a battery, and a
//! conventional drive in which the fuel cell is boosted onto an 800 V battery
//! bus feeding a single traction inverter.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cycle;
pub mod dq;
pub mod fuel_cell;
pub mod losses;
pub mod motor;
pub mod report;
pub mod sharing;
pub mod sim;
pub mod topology;
pub mod vehicle;

pub use config::{ConfigError, DrivetrainConfig};
pub use cycle::{run_cycle, CycleError, CycleResult, DriveCycle};
pub use dq::Dq;
pub use losses::{ConverterLoss, LossBreakdown};
pub use sim::{run_switched, SimConfig, SimError, SimWaveforms};
pub use topology::{evaluate_fc_point, evaluate_point, EvalError, TopologyConfig, TopologyKind};

/// Any error the library can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for problems with inputs (files, configuration) rather than with
    /// the computation itself.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => true,
            Error::Cycle(e) => matches!(
                e,
                CycleError::Parse { .. }
                    | CycleError::NonMonotonicTime { .. }
                    | CycleError::Io { .. }
                    | CycleError::Config(_)
                    | CycleError::UnknownBuiltin(_)
            ),
            Error::Eval(e) => matches!(e, EvalError::InvalidConfig(_)),
            Error::Sim(e) => matches!(e, SimError::InvalidConfig(_)),
        }
    }
}
