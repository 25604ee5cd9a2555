//! Vehicle parameters and the flat key=value parameter-file format.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// Physical parameters of the single-track vehicle.
///
/// The longitudinal speed `v_x` is held constant by the reduced model, so it
/// lives here rather than in the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Vehicle mass, kg.
    pub m: f64,
    /// Yaw moment of inertia, kg·m².
    pub i_z: f64,
    /// Distance from the center of gravity to the front axle, m.
    pub l_f: f64,
    /// Distance from the center of gravity to the rear axle, m.
    pub l_r: f64,
    /// Front cornering stiffness, N/rad.
    pub c_alpha_f: f64,
    /// Rear cornering stiffness, N/rad.
    pub c_alpha_r: f64,
    /// Constant longitudinal speed, m/s.
    pub v_x: f64,
    /// Steering limit, rad.
    pub delta_max: f64,
}

impl Default for VehicleParams {
    /// Typical passenger-car values; `v_x` = 15 m/s.
    fn default() -> Self {
        VehicleParams {
            m: 1500.0,
            i_z: 2500.0,
            l_f: 1.2,
            l_r: 1.4,
            c_alpha_f: 80000.0,
            c_alpha_r: 80000.0,
            v_x: 15.0,
            delta_max: PI / 4.0,
        }
    }
}

impl VehicleParams {
    /// Wheelbase `L = l_f + l_r`, m.
    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    /// Check the positivity/range invariants.
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("m", self.m),
            ("iz", self.i_z),
            ("lf", self.l_f),
            ("lr", self.l_r),
            ("c_alpha_f", self.c_alpha_f),
            ("c_alpha_r", self.c_alpha_r),
            ("vx", self.v_x),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ParamError::OutOfRange {
                    key: name.to_string(),
                    value,
                    requirement: "> 0",
                });
            }
        }
        if !(self.delta_max > 0.0 && self.delta_max <= PI / 2.0) {
            return Err(ParamError::OutOfRange {
                key: "delta_max".to_string(),
                value: self.delta_max,
                requirement: "in (0, pi/2]",
            });
        }
        Ok(())
    }

    /// Parse a parameter file: `key=value` lines, `#` comments, SI units.
    ///
    /// Keys: `m, iz, lf, lr, c_alpha_f, c_alpha_r, vx, delta_max`. Missing
    /// keys keep their default values.
    pub fn from_str(text: &str) -> Result<Self, ParamError> {
        let mut params = VehicleParams::default();
        for (key, value, line) in parse_key_values(text)? {
            let slot = match key.as_str() {
                "m" => &mut params.m,
                "iz" => &mut params.i_z,
                "lf" => &mut params.l_f,
                "lr" => &mut params.l_r,
                "c_alpha_f" => &mut params.c_alpha_f,
                "c_alpha_r" => &mut params.c_alpha_r,
                "vx" => &mut params.v_x,
                "delta_max" => &mut params.delta_max,
                _ => return Err(ParamError::UnknownKey { key, line }),
            };
            *slot = value
                .parse::<f64>()
                .map_err(|_| ParamError::BadValue { key, value, line })?;
        }
        params.validate()?;
        Ok(params)
    }

    pub fn from_file(path: &Path) -> Result<Self, ParamError> {
        let text = fs::read_to_string(path).map_err(|source| ParamError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }
}

impl fmt::Display for VehicleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "m={} iz={} lf={} lr={} c_alpha_f={} c_alpha_r={} vx={} delta_max={}",
            self.m,
            self.i_z,
            self.l_f,
            self.l_r,
            self.c_alpha_f,
            self.c_alpha_r,
            self.v_x,
            self.delta_max
        )
    }
}

/// Errors from parameter parsing and validation.
#[derive(Debug, Error)]
pub enum ParamError {
    #[error("cannot read parameter file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, got {text:?}")]
    Malformed { text: String, line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key {key:?} has non-numeric value {value:?}")]
    BadValue {
        key: String,
        value: String,
        line: usize,
    },
    #[error("parameter {key} = {value} violates {requirement}")]
    OutOfRange {
        key: String,
        value: f64,
        requirement: &'static str,
    },
}

/// Shared line parser for the flat key=value formats (`#` comments,
/// blank lines skipped). Returns (key, value, 1-based line number).
pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(String, String, usize)>, ParamError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ParamError::Malformed {
                text: line.to_string(),
                line: idx + 1,
            });
        };
        out.push((key.trim().to_string(), value.trim().to_string(), idx + 1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        VehicleParams::default().validate().unwrap();
    }

    #[test]
    fn parses_file_with_comments_and_overrides() {
        let text = "# test params\nm = 1200\nvx=20 # brisk\n\niz=2200\n";
        let p = VehicleParams::from_str(text).unwrap();
        assert_eq!(p.m, 1200.0);
        assert_eq!(p.v_x, 20.0);
        assert_eq!(p.i_z, 2200.0);
        assert_eq!(p.l_f, 1.2); // untouched default
    }

    #[test]
    fn rejects_unknown_key_and_bad_values() {
        assert!(matches!(
            VehicleParams::from_str("mass=1"),
            Err(ParamError::UnknownKey { .. })
        ));
        assert!(matches!(
            VehicleParams::from_str("m=heavy"),
            Err(ParamError::BadValue { .. })
        ));
        assert!(matches!(
            VehicleParams::from_str("m=-5"),
            Err(ParamError::OutOfRange { .. })
        ));
        assert!(matches!(
            VehicleParams::from_str("vx"),
            Err(ParamError::Malformed { .. })
        ));
    }

    #[test]
    fn delta_max_range_is_enforced() {
        let mut p = VehicleParams::default();
        p.delta_max = 2.0; // > pi/2
        assert!(p.validate().is_err());
        p.delta_max = PI / 2.0;
        assert!(p.validate().is_ok());
    }
}
