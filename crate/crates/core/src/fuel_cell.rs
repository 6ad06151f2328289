//! Fuel-cell stack polarization curve.
//!
//! Voltage is a strictly decreasing function of stack current. Power requests
//! are inverted on the usable branch, i.e. left of the power maximum.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuelCellError {
    #[error("current {current} A outside [0, {max_current}] A")]
    OutOfRange { current: f64, max_current: f64 },
    #[error("power {power} W is not reachable (maximum {max_power} W)")]
    Unreachable { power: f64, max_power: f64 },
    #[error("invalid polarization curve: {0}")]
    InvalidCurve(String),
    #[error("curve table line {line}: {message}")]
    Table { line: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Polarization {
    /// `V = V_oc - R_int * I`.
    Linear {
        open_circuit_voltage: f64,
        internal_resistance: f64,
    },
    /// Piecewise-linear (current A, voltage V) breakpoints starting at 0 A.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelCellCurve {
    pub polarization: Polarization,
    /// Rated electrical output (W).
    pub rated_power: f64,
    /// Upper end of the valid current range (A).
    pub max_current: f64,
}

impl Default for FuelCellCurve {
    /// A 70 kW stack, 500 V open circuit with 0.87 Ohm effective resistance.
    fn default() -> Self {
        Self::linear(500.0, 0.87, 70e3, 250.0).expect("default curve is valid")
    }
}

#[derive(Debug, Deserialize)]
struct TableRow {
    current_a: f64,
    voltage_v: f64,
}

impl FuelCellCurve {
    pub fn linear(
        open_circuit_voltage: f64,
        internal_resistance: f64,
        rated_power: f64,
        max_current: f64,
    ) -> Result<Self, FuelCellError> {
        let curve = Self {
            polarization: Polarization::Linear {
                open_circuit_voltage,
                internal_resistance,
            },
            rated_power,
            max_current,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Builds a table curve; the valid current range ends at the last breakpoint.
    pub fn table(points: Vec<(f64, f64)>, rated_power: f64) -> Result<Self, FuelCellError> {
        let max_current = points.last().map_or(0.0, |p| p.0);
        let curve = Self {
            polarization: Polarization::Table(points),
            rated_power,
            max_current,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Reads a `current_A,voltage_V` CSV table.
    pub fn from_csv_str(text: &str, rated_power: f64) -> Result<Self, FuelCellError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| FuelCellError::Table {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        if headers.len() != 2
            || !headers[0].eq_ignore_ascii_case("current_a")
            || !headers[1].eq_ignore_ascii_case("voltage_v")
        {
            return Err(FuelCellError::Table {
                line: 1,
                message: "expected header current_A,voltage_V".into(),
            });
        }
        let mut points = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| FuelCellError::Table {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let row: TableRow = record
                .deserialize(Some(&csv::StringRecord::from(vec!["current_a", "voltage_v"])))
                .map_err(|e| FuelCellError::Table {
                    line,
                    message: e.to_string(),
                })?;
            points.push((row.current_a, row.voltage_v));
        }
        Self::table(points, rated_power)
    }

    pub fn from_path(path: &Path, rated_power: f64) -> Result<Self, FuelCellError> {
        let text = std::fs::read_to_string(path).map_err(|e| FuelCellError::Table {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_csv_str(&text, rated_power)
    }

    pub fn validate(&self) -> Result<(), FuelCellError> {
        let bad = |msg: String| Err(FuelCellError::InvalidCurve(msg));
        if !(self.rated_power > 0.0) || !(self.max_current > 0.0) {
            return bad("rated power and maximum current must be positive".into());
        }
        match &self.polarization {
            Polarization::Linear {
                open_circuit_voltage,
                internal_resistance,
            } => {
                if !(*open_circuit_voltage > 0.0) || !(*internal_resistance > 0.0) {
                    return bad("V_oc and R_int must be positive".into());
                }
                if open_circuit_voltage - internal_resistance * self.max_current <= 0.0 {
                    return bad("voltage reaches zero before the maximum current".into());
                }
            }
            Polarization::Table(points) => {
                if points.len() < 2 {
                    return bad("table needs at least two breakpoints".into());
                }
                if points[0].0 != 0.0 {
                    return bad("table must start at 0 A".into());
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return bad(format!("current not strictly increasing at {} A", w[1].0));
                    }
                    if !(w[1].1 < w[0].1) {
                        return bad(format!("voltage not strictly decreasing at {} A", w[1].0));
                    }
                }
                if points.last().unwrap().1 <= 0.0 {
                    return bad("voltage must stay positive".into());
                }
            }
        }
        let peak = self.peak_power();
        if self.rated_power > peak.1 * (1.0 + 1e-12) {
            return bad(format!(
                "rated power {} W exceeds curve maximum {} W",
                self.rated_power, peak.1
            ));
        }
        Ok(())
    }

    /// Terminal voltage at stack current `current`.
    pub fn voltage_at_current(&self, current: f64) -> Result<f64, FuelCellError> {
        if !(0.0..=self.max_current).contains(&current) {
            return Err(FuelCellError::OutOfRange {
                current,
                max_current: self.max_current,
            });
        }
        Ok(self.voltage_unchecked(current))
    }

    fn voltage_unchecked(&self, current: f64) -> f64 {
        match &self.polarization {
            Polarization::Linear {
                open_circuit_voltage,
                internal_resistance,
            } => open_circuit_voltage - internal_resistance * current,
            Polarization::Table(points) => {
                let k = points.partition_point(|p| p.0 <= current).clamp(1, points.len() - 1);
                let (i0, v0) = points[k - 1];
                let (i1, v1) = points[k];
                v0 + (v1 - v0) * (current - i0) / (i1 - i0)
            }
        }
    }

    /// Current and power at the maximum of `V(I) I` within the valid range.
    pub fn peak_power(&self) -> (f64, f64) {
        let p = |i: f64| i * self.voltage_unchecked(i);
        match &self.polarization {
            Polarization::Linear {
                open_circuit_voltage,
                internal_resistance,
            } => {
                let i = (open_circuit_voltage / (2.0 * internal_resistance)).min(self.max_current);
                (i, p(i))
            }
            Polarization::Table(points) => {
                // Each segment is a concave quadratic in current; check endpoints and vertices.
                let mut best = (0.0, 0.0);
                for w in points.windows(2) {
                    let (i0, v0) = w[0];
                    let (i1, v1) = w[1];
                    let slope = (v1 - v0) / (i1 - i0);
                    let intercept = v0 - slope * i0;
                    let vertex = -intercept / (2.0 * slope);
                    for i in [i0, i1, vertex] {
                        if (i0..=i1).contains(&i) && p(i) > best.1 {
                            best = (i, p(i));
                        }
                    }
                }
                best
            }
        }
    }

    /// Stack current delivering electrical power `power` on the usable branch.
    pub fn current_at_power(&self, power: f64) -> Result<f64, FuelCellError> {
        if !(0.0..=self.rated_power).contains(&power) {
            return Err(FuelCellError::Unreachable {
                power,
                max_power: self.rated_power,
            });
        }
        if power == 0.0 {
            return Ok(0.0);
        }
        match &self.polarization {
            Polarization::Linear {
                open_circuit_voltage: v,
                internal_resistance: r,
            } => {
                // smaller root of r I^2 - v I + P = 0, in cancellation-free form
                let disc = v * v - 4.0 * r * power;
                Ok(2.0 * power / (v + disc.max(0.0).sqrt()))
            }
            Polarization::Table(_) => {
                let (mut lo, mut hi) = (0.0, self.peak_power().0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid * self.voltage_unchecked(mid) < power {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-13 * hi {
                        break;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// Terminal voltage while delivering `power`.
    pub fn voltage_at_power(&self, power: f64) -> Result<f64, FuelCellError> {
        let current = self.current_at_power(power)?;
        self.voltage_at_current(current)
    }
}
