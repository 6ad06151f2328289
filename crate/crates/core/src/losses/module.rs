//! Datasheet parameter records for IGBT/diode power modules.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LossError;

/// Conduction and switching characteristics of one half-bridge device pair.
///
/// All values are SI: volts, amperes, ohms and joules. The switching energies
/// are the datasheet values at `nominal_voltage` and `nominal_current`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModuleParams {
    pub label: String,
    #[serde(rename = "V_ces")]
    pub collector_emitter_voltage: f64,
    #[serde(rename = "V_nom")]
    pub nominal_voltage: f64,
    #[serde(rename = "I_nom")]
    pub nominal_current: f64,
    #[serde(rename = "V_ce0")]
    pub igbt_threshold: f64,
    #[serde(rename = "V_D0")]
    pub diode_threshold: f64,
    #[serde(rename = "R_on")]
    pub igbt_on_resistance: f64,
    #[serde(rename = "R_D")]
    pub diode_on_resistance: f64,
    #[serde(rename = "E_on")]
    pub turn_on_energy: f64,
    #[serde(rename = "E_off")]
    pub turn_off_energy: f64,
    #[serde(rename = "E_rec")]
    pub recovery_energy: f64,
}

pub const FS400R07A3E3: &str = "FS400R07A3E3_H6";
pub const FS400R12A2T4: &str = "FS400R12A2T4";
pub const FF450R12KT4P: &str = "FF450R12KT4P";

const BUILTIN_TABLE: &str = include_str!("../../data/modules.csv");

impl PowerModuleParams {
    /// 705 V module used in both bridges of the dual inverter.
    pub fn fs400r07a3e3() -> Self {
        builtin(FS400R07A3E3)
    }

    /// 1200 V module used in the conventional traction inverter.
    pub fn fs400r12a2t4() -> Self {
        builtin(FS400R12A2T4)
    }

    /// 1200 V module used in the boost converter.
    pub fn ff450r12kt4p() -> Self {
        builtin(FF450R12KT4P)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        let fields = [
            ("V_ces", self.collector_emitter_voltage),
            ("V_nom", self.nominal_voltage),
            ("I_nom", self.nominal_current),
            ("V_ce0", self.igbt_threshold),
            ("V_D0", self.diode_threshold),
            ("R_on", self.igbt_on_resistance),
            ("R_D", self.diode_on_resistance),
            ("E_on", self.turn_on_energy),
            ("E_off", self.turn_off_energy),
            ("E_rec", self.recovery_energy),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(LossError::InvalidModule {
                    label: self.label.clone(),
                    reason: format!("{name} must be positive, got {value}"),
                });
            }
        }
        if self.nominal_voltage >= self.collector_emitter_voltage {
            return Err(LossError::InvalidModule {
                label: self.label.clone(),
                reason: "V_nom must be below V_ces".into(),
            });
        }
        Ok(())
    }

    /// Switching energy scaled linearly with the commutated current.
    pub(crate) fn scaled_energy(&self, energy: f64, current: f64) -> f64 {
        energy * current / self.nominal_current
    }
}

fn builtin(label: &str) -> PowerModuleParams {
    ModuleLibrary::builtin()
        .get(label)
        .cloned()
        .expect("built-in module table is complete")
}

/// A set of module records addressable by label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModuleLibrary {
    modules: Vec<PowerModuleParams>,
}

impl ModuleLibrary {
    /// The three modules shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_csv_str(BUILTIN_TABLE).expect("built-in module table parses")
    }

    pub fn from_path(path: &Path) -> Result<Self, LossError> {
        let text = std::fs::read_to_string(path).map_err(|e| LossError::Table {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_csv_str(&text)
    }

    /// Parses a CSV table with header
    /// `label,V_ces,V_nom,I_nom,V_ce0,V_D0,R_on,R_D,E_on,E_off,E_rec`.
    pub fn from_csv_str(text: &str) -> Result<Self, LossError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut modules = Vec::new();
        for record in reader.deserialize::<PowerModuleParams>() {
            let module = record.map_err(|e| LossError::Table {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            module.validate()?;
            modules.push(module);
        }
        Ok(Self { modules })
    }

    pub fn get(&self, label: &str) -> Option<&PowerModuleParams> {
        self.modules.iter().find(|m| m.label == label)
    }

    pub fn require(&self, label: &str) -> Result<PowerModuleParams, LossError> {
        self.get(label)
            .cloned()
            .ok_or_else(|| LossError::UnknownModule(label.to_string()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.modules.iter().map(|m| m.label.as_str())
    }
}
