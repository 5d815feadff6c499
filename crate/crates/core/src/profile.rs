use serde::{Deserialize, Serialize};

/// Arithmetic used for the moment-matrix solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Double when the equilibrated condition estimate stays below
    /// `Tolerances::condition_limit`, exact rationals otherwise.
    #[default]
    Auto,
    Double,
    Extended,
}

impl std::str::FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Precision::Auto),
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(format!("unknown precision `{other}`")),
        }
    }
}

/// Global numerical tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub root_residual: f64,
    pub root_collision: f64,
    pub quad_rel: f64,
    pub quad_abs: f64,
    pub phase_boundary: f64,
    pub cancellation_budget: f64,
    pub condition_limit: f64,
    /// |Im z| below this (relative to 1+|z|) is treated as a boundary value.
    pub axis_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root_residual: 1e-10,
            root_collision: 1e-8,
            quad_rel: 1e-12,
            quad_abs: 1e-14,
            phase_boundary: 1e-12,
            cancellation_budget: 1e-6,
            condition_limit: 1e8,
            axis_band: 1e-9,
        }
    }
}
