//! TOML configuration.
//!
//! Every section and key is optional; anything omitted keeps the built-in
//! default. Keys follow the usual symbols (`L_s`, `psi_m`, `M_car`, ...).
//! Relative file paths are resolved against the configuration file's directory.
//!
//! ```toml
//! [motor]
//! p = 5
//! L_s = 0.838e-3
//!
//! [fuel_cell]
//! V_oc = 500.0
//! R_int = 0.87
//!
//! [sharing]
//! tau = 5.0
//! P_min = 3500.0
//!
//! [dual]
//! V_bat = 400.0
//! f_sw = 10000.0
//!
//! [conventional]
//! V_bat = 800.0
//! inverter_module = "FS400R12A2T4"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::fuel_cell::{FuelCellCurve, FuelCellError, Polarization};
use crate::losses::{LossError, ModuleLibrary};
use crate::topology::{Converters, EvalError, TopologyConfig, TopologyKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Module(#[from] LossError),
    #[error(transparent)]
    FuelCell(#[from] FuelCellError),
    #[error(transparent)]
    Invalid(#[from] EvalError),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotorSection {
    p: Option<u32>,
    #[serde(rename = "L_s")]
    l_s: Option<f64>,
    #[serde(rename = "R_s")]
    r_s: Option<f64>,
    psi_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleSection {
    #[serde(rename = "M_car")]
    mass: Option<f64>,
    #[serde(rename = "A_f")]
    frontal_area: Option<f64>,
    #[serde(rename = "C_d")]
    drag: Option<f64>,
    #[serde(rename = "C_r")]
    rolling: Option<f64>,
    gear_ratio: Option<f64>,
    r_tire: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentSection {
    rho_air: Option<f64>,
    g: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SharingSection {
    tau: Option<f64>,
    #[serde(rename = "P_min")]
    p_min: Option<f64>,
    #[serde(rename = "P_max")]
    p_max: Option<f64>,
    slew: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FuelCellSection {
    #[serde(rename = "V_oc")]
    v_oc: Option<f64>,
    #[serde(rename = "R_int")]
    r_int: Option<f64>,
    rated_power: Option<f64>,
    max_current: Option<f64>,
    /// `current_A,voltage_V` table; replaces the linear curve.
    table: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModulesSection {
    file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoostSection {
    #[serde(rename = "L_ind")]
    l_ind: Option<f64>,
    #[serde(rename = "R_ind")]
    r_ind: Option<f64>,
    f_sw: Option<f64>,
    module: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologySection {
    #[serde(rename = "V_bat")]
    v_bat: Option<f64>,
    f_sw: Option<f64>,
    m_max: Option<f64>,
    #[serde(rename = "I_max")]
    i_max: Option<f64>,
    /// Dual: both bridges, unless overridden individually.
    module: Option<String>,
    fc_module: Option<String>,
    battery_module: Option<String>,
    /// Conventional traction inverter.
    inverter_module: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    motor: MotorSection,
    #[serde(default)]
    vehicle: VehicleSection,
    #[serde(default)]
    environment: EnvironmentSection,
    #[serde(default)]
    sharing: SharingSection,
    #[serde(default)]
    fuel_cell: FuelCellSection,
    #[serde(default)]
    modules: ModulesSection,
    #[serde(default)]
    boost: BoostSection,
    #[serde(default)]
    dual: TopologySection,
    #[serde(default)]
    conventional: TopologySection,
}

/// Resolved configuration for both drivetrains.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivetrainConfig {
    pub dual: TopologyConfig,
    pub conventional: TopologyConfig,
}

impl Default for DrivetrainConfig {
    fn default() -> Self {
        Self {
            dual: TopologyConfig::dual_default(),
            conventional: TopologyConfig::conventional_default(),
        }
    }
}

impl DrivetrainConfig {
    pub fn get(&self, kind: TopologyKind) -> &TopologyConfig {
        match kind {
            TopologyKind::Dual => &self.dual,
            TopologyKind::Conventional => &self.conventional,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    /// Parses TOML text; relative paths inside resolve against `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        let library = match &file.modules.file {
            Some(p) => ModuleLibrary::from_path(&resolve(p))?,
            None => ModuleLibrary::builtin(),
        };

        let mut out = Self::default();
        for cfg in [&mut out.dual, &mut out.conventional] {
            apply_common(&file, cfg, &resolve)?;
        }
        apply_dual(&file.dual, &library, &mut out.dual)?;
        apply_conventional(&file.conventional, &file.boost, &library, &mut out.conventional)?;
        out.dual.validate()?;
        out.conventional.validate()?;
        Ok(out)
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_common(
    file: &ConfigFile,
    cfg: &mut TopologyConfig,
    resolve: &dyn Fn(&PathBuf) -> PathBuf,
) -> Result<(), ConfigError> {
    let m = &file.motor;
    set(&mut cfg.motor.pole_pairs, m.p);
    set(&mut cfg.motor.synchronous_inductance, m.l_s);
    set(&mut cfg.motor.stator_resistance, m.r_s);
    set(&mut cfg.motor.magnet_flux_linkage, m.psi_m);

    let v = &file.vehicle;
    set(&mut cfg.vehicle.mass, v.mass);
    set(&mut cfg.vehicle.frontal_area, v.frontal_area);
    set(&mut cfg.vehicle.drag_coefficient, v.drag);
    set(&mut cfg.vehicle.rolling_coefficient, v.rolling);
    set(&mut cfg.vehicle.gear_ratio, v.gear_ratio);
    set(&mut cfg.vehicle.tire_radius, v.r_tire);

    set(&mut cfg.environment.air_density, file.environment.rho_air);
    set(&mut cfg.environment.gravity, file.environment.g);

    let s = &file.sharing;
    set(&mut cfg.sharing.filter_time_constant, s.tau);
    set(&mut cfg.sharing.min_power, s.p_min);
    set(&mut cfg.sharing.max_power, s.p_max);
    set(&mut cfg.sharing.slew_limit, s.slew);

    let f = &file.fuel_cell;
    let rated = f.rated_power.unwrap_or(cfg.fuel_cell.rated_power);
    cfg.fuel_cell = match &f.table {
        Some(path) => FuelCellCurve::from_path(&resolve(path), rated)?,
        None => {
            let (v0, r0) = match cfg.fuel_cell.polarization {
                Polarization::Linear {
                    open_circuit_voltage,
                    internal_resistance,
                } => (open_circuit_voltage, internal_resistance),
                Polarization::Table(_) => unreachable!("defaults are linear"),
            };
            FuelCellCurve::linear(
                f.v_oc.unwrap_or(v0),
                f.r_int.unwrap_or(r0),
                rated,
                f.max_current.unwrap_or(cfg.fuel_cell.max_current),
            )?
        }
    };
    Ok(())
}

fn apply_limits(section: &TopologySection, cfg: &mut TopologyConfig) {
    set(&mut cfg.battery_voltage, section.v_bat);
    set(&mut cfg.max_modulation, section.m_max);
    set(&mut cfg.current_ceiling, section.i_max);
}

fn apply_dual(section: &TopologySection, library: &ModuleLibrary, cfg: &mut TopologyConfig) -> Result<(), ConfigError> {
    apply_limits(section, cfg);
    if let Converters::Dual {
        fc_inverter,
        battery_inverter,
    } = &mut cfg.converters
    {
        for (bridge, label) in [
            (fc_inverter, section.fc_module.as_ref().or(section.module.as_ref())),
            (
                battery_inverter,
                section.battery_module.as_ref().or(section.module.as_ref()),
            ),
        ] {
            set(&mut bridge.switching_frequency, section.f_sw);
            if let Some(label) = label {
                bridge.module = library.require(label)?;
            } else if let Some(m) = library.get(&bridge.module.label) {
                bridge.module = m.clone();
            }
        }
    }
    Ok(())
}

fn apply_conventional(
    section: &TopologySection,
    boost_section: &BoostSection,
    library: &ModuleLibrary,
    cfg: &mut TopologyConfig,
) -> Result<(), ConfigError> {
    apply_limits(section, cfg);
    if let Converters::Conventional {
        traction_inverter,
        boost,
    } = &mut cfg.converters
    {
        set(&mut traction_inverter.switching_frequency, section.f_sw);
        match section.inverter_module.as_ref().or(section.module.as_ref()) {
            Some(label) => traction_inverter.module = library.require(label)?,
            None => {
                if let Some(m) = library.get(&traction_inverter.module.label) {
                    traction_inverter.module = m.clone();
                }
            }
        }
        set(&mut boost.inductance, boost_section.l_ind);
        set(&mut boost.inductor_esr, boost_section.r_ind);
        set(&mut boost.switching_frequency, boost_section.f_sw);
        match &boost_section.module {
            Some(label) => boost.module = library.require(label)?,
            None => {
                if let Some(m) = library.get(&boost.module.label) {
                    boost.module = m.clone();
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = DrivetrainConfig::from_toml_str("", Path::new(".")).unwrap();
        assert_eq!(c, DrivetrainConfig::default());
    }

    #[test]
    fn overrides_apply_to_both_topologies() {
        let text = r#"
            [motor]
            R_s = 0.05
            [sharing]
            tau = 2.0
            [dual]
            V_bat = 380.0
            [conventional]
            f_sw = 16000.0
            [boost]
            L_ind = 0.5e-3
        "#;
        let c = DrivetrainConfig::from_toml_str(text, Path::new(".")).unwrap();
        assert_eq!(c.dual.motor.stator_resistance, 0.05);
        assert_eq!(c.conventional.motor.stator_resistance, 0.05);
        assert_eq!(c.conventional.sharing.filter_time_constant, 2.0);
        assert_eq!(c.dual.battery_voltage, 380.0);
        assert_eq!(c.conventional.battery_voltage, 800.0);
        match &c.conventional.converters {
            Converters::Conventional {
                traction_inverter,
                boost,
            } => {
                assert_eq!(traction_inverter.switching_frequency, 16e3);
                assert_eq!(boost.inductance, 0.5e-3);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_modules() {
        assert!(matches!(
            DrivetrainConfig::from_toml_str("[motor]\nLs = 1.0\n", Path::new(".")),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(
            DrivetrainConfig::from_toml_str("[dual]\nmodule = \"nope\"\n", Path::new(".")),
            Err(ConfigError::Module(LossError::UnknownModule(_)))
        ));
        assert!(matches!(
            DrivetrainConfig::from_toml_str("[motor]\nR_s = -1.0\n", Path::new(".")),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = DrivetrainConfig::from_path(Path::new("/nonexistent/cfg.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/cfg.toml"));
    }

    #[test]
    fn fuel_cell_table_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("fc.csv"),
            "current_A,voltage_V\n0,480\n100,400\n200,330\n260,290\n",
        )
        .unwrap();
        let cfg = dir.path().join("drive.toml");
        std::fs::write(&cfg, "[fuel_cell]\ntable = \"fc.csv\"\nrated_power = 70000.0\n").unwrap();
        let c = DrivetrainConfig::from_path(&cfg).unwrap();
        assert!(matches!(c.dual.fuel_cell.polarization, Polarization::Table(_)));
        assert_eq!(c.dual.fuel_cell.voltage_at_current(100.0).unwrap(), 400.0);
    }
}
