//! Serializable records emitted by the command-line tool.
//!
//! Every record carries the seed that produced it and an optional
//! wall-clock time, which is only filled in when timing is requested so
//! that repeated runs print identical bytes.

use schur2_core::Method;
use serde::{Deserialize, Serialize};

/// Serde adapter for reals that may be infinite: finite values become JSON
/// numbers, the rest become the strings `"inf"`, `"-inf"` or `"nan"`.
pub mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub value: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub method: Method,
    pub nodes: u64,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRecord {
    pub k: usize,
    #[serde(with = "extended")]
    pub p: f64,
    pub alpha: f64,
    pub c: f64,
    pub achieved_alpha: f64,
    pub error: f64,
    /// Absent for closed forms.
    pub method: Option<Method>,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecord {
    pub k: usize,
    #[serde(with = "extended")]
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub u: Vec<f64>,
    pub exists: bool,
    pub t: Option<f64>,
    pub norm: Option<f64>,
    pub achieved_power: f64,
    /// NaN (written as `"nan"`) when no shift exists.
    #[serde(with = "extended")]
    pub solver_error: f64,
    pub c: f64,
    pub method: Method,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreRecord {
    pub k: usize,
    #[serde(with = "extended")]
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub u: Vec<f64>,
    pub are: f64,
    pub error: f64,
    pub exists: bool,
    pub s2_norm: f64,
    pub sp_norm: Option<f64>,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub angle: f64,
    pub are: f64,
    pub abs_error: f64,
    pub s2_norm: f64,
    pub sp_norm: Option<f64>,
    pub exists: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(with = "extended")]
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<SweepRow>,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}

/// Size and power of a p-mean test estimated from simulated samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCheckRecord {
    pub k: usize,
    #[serde(with = "extended")]
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub replications: usize,
    pub c: f64,
    pub t: Option<f64>,
    pub size: f64,
    pub size_stderr: f64,
    /// NaN (written as `"nan"`) when no shift exists.
    #[serde(with = "extended")]
    pub power: f64,
    #[serde(with = "extended")]
    pub power_stderr: f64,
    pub passed: bool,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}

/// Any report from the core crate together with the run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wrapped<T> {
    pub report: T,
    pub passed: bool,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}
