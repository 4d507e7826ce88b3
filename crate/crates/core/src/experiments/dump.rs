//! Self-describing JSON records of single solutions.
//!
//! Layout (all scalars linear scale):
//!
//! ```text
//! {
//!   "format": "cogbeam-solution",
//!   "version": "<library version>",
//!   "mode": "ZFB" | "NFB",
//!   "scenario": { "m", "n", "p", "q", "d", "primary_power", "xi",
//!                 "snr_targets", "seed" } | null,
//!   "y": number | null,
//!   "power": number,
//!   "interference": number,
//!   "per_stream_snr": [number],
//!   "snr_targets": [number],
//!   "tolerance_warning": bool,
//!   "t": { "rows": int, "cols": int, "data": [[re, im], ...] },   // row-major
//!   "v": { "rows": int, "cols": int, "data": [[re, im], ...] }
//! }
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::ScenarioConfig;
use crate::solution::{BeamformingSolution, Mode};

pub const FORMAT_TAG: &str = "cogbeam-solution";

/// Row-major complex matrix as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixRecord {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl MatrixRecord {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Config(format!(
                "matrix record holds {} entries for {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(CMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|[re, im]| Complex64::new(*re, *im)),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub primary_power: f64,
    pub xi: f64,
    pub snr_targets: Vec<f64>,
    pub seed: u64,
}

impl From<&ScenarioConfig> for ScenarioEcho {
    fn from(c: &ScenarioConfig) -> Self {
        Self {
            m: c.m(),
            n: c.n(),
            p: c.p(),
            q: c.q(),
            d: c.d(),
            primary_power: c.primary_power(),
            xi: c.xi(),
            snr_targets: c.snr_targets().to_vec(),
            seed: c.seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub format: String,
    pub version: String,
    pub mode: Mode,
    pub scenario: Option<ScenarioEcho>,
    pub y: Option<f64>,
    pub power: f64,
    pub interference: f64,
    pub per_stream_snr: Vec<f64>,
    pub snr_targets: Vec<f64>,
    pub tolerance_warning: bool,
    pub t: MatrixRecord,
    pub v: MatrixRecord,
}

impl SolutionRecord {
    pub fn new(solution: &BeamformingSolution, scenario: Option<&ScenarioConfig>) -> Self {
        Self {
            format: FORMAT_TAG.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            mode: solution.mode,
            scenario: scenario.map(ScenarioEcho::from),
            y: solution.y,
            power: solution.power,
            interference: solution.interference,
            per_stream_snr: solution.per_stream_snr.clone(),
            snr_targets: solution.snr_targets.clone(),
            tolerance_warning: solution.tolerance_warning,
            t: MatrixRecord::from(&solution.t),
            v: MatrixRecord::from(&solution.v),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Writes `solution` as a JSON record.
pub fn dump_solution(
    solution: &BeamformingSolution,
    scenario: Option<&ScenarioConfig>,
    path: &Path,
) -> Result<()> {
    let mut text = SolutionRecord::new(solution, scenario).to_json()?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads and validates a record written by [`dump_solution`].
pub fn read_solution(path: &Path) -> Result<SolutionRecord> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    validate_record(&value)?;
    Ok(serde_json::from_value(value)?)
}

fn schema_error(message: impl Into<String>) -> Error {
    Error::Config(format!("solution record: {}", message.into()))
}

fn require<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema_error(format!("missing `{key}`")))
}

fn require_number(obj: &serde_json::Map<String, Value>, key: &str) -> Result<f64> {
    require(obj, key)?
        .as_f64()
        .ok_or_else(|| schema_error(format!("`{key}` must be a number")))
}

fn require_numbers(obj: &serde_json::Map<String, Value>, key: &str) -> Result<usize> {
    let arr = require(obj, key)?
        .as_array()
        .ok_or_else(|| schema_error(format!("`{key}` must be an array")))?;
    if arr.iter().any(|v| !v.is_number()) {
        return Err(schema_error(format!("`{key}` must hold numbers only")));
    }
    Ok(arr.len())
}

fn validate_matrix(value: &Value, key: &str) -> Result<(usize, usize)> {
    let obj = value
        .as_object()
        .ok_or_else(|| schema_error(format!("`{key}` must be an object")))?;
    let dim = |k: &str| {
        require(obj, k)?
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| schema_error(format!("`{key}.{k}` must be a non-negative integer")))
    };
    let (rows, cols) = (dim("rows")?, dim("cols")?);
    let data = require(obj, "data")?
        .as_array()
        .ok_or_else(|| schema_error(format!("`{key}.data` must be an array")))?;
    if data.len() != rows * cols {
        return Err(schema_error(format!(
            "`{key}.data` has {} entries, expected {}",
            data.len(),
            rows * cols
        )));
    }
    for entry in data {
        let pair = entry.as_array().filter(|p| p.len() == 2 && p.iter().all(Value::is_number));
        if pair.is_none() {
            return Err(schema_error(format!("`{key}.data` entries must be [re, im] pairs")));
        }
    }
    Ok((rows, cols))
}

/// Checks a parsed record against the documented layout.
pub fn validate_record(value: &Value) -> Result<()> {
    let obj = value.as_object().ok_or_else(|| schema_error("top level must be an object"))?;
    if require(obj, "format")?.as_str() != Some(FORMAT_TAG) {
        return Err(schema_error(format!("`format` must be \"{FORMAT_TAG}\"")));
    }
    require(obj, "version")?
        .as_str()
        .ok_or_else(|| schema_error("`version` must be a string"))?;
    match require(obj, "mode")?.as_str() {
        Some("ZFB") | Some("NFB") => {}
        _ => return Err(schema_error("`mode` must be \"ZFB\" or \"NFB\"")),
    }
    match require(obj, "y")? {
        Value::Null => {}
        v if v.as_f64().is_some_and(|y| y >= 0.0) => {}
        _ => return Err(schema_error("`y` must be null or a non-negative number")),
    }
    let power = require_number(obj, "power")?;
    let interference = require_number(obj, "interference")?;
    if power < 0.0 || interference < 0.0 {
        return Err(schema_error("`power` and `interference` must be non-negative"));
    }
    let d = require_numbers(obj, "snr_targets")?;
    if require_numbers(obj, "per_stream_snr")? != d {
        return Err(schema_error("`per_stream_snr` and `snr_targets` differ in length"));
    }
    require(obj, "tolerance_warning")?
        .as_bool()
        .ok_or_else(|| schema_error("`tolerance_warning` must be a boolean"))?;
    let (t_rows, t_cols) = validate_matrix(require(obj, "t")?, "t")?;
    let (v_rows, v_cols) = validate_matrix(require(obj, "v")?, "v")?;
    if t_cols != d || v_cols != d || t_rows != v_rows {
        return Err(schema_error("`t` and `v` must both be m x d"));
    }
    match require(obj, "scenario")? {
        Value::Null => {}
        Value::Object(s) => {
            for key in ["m", "n", "p", "q", "d", "seed"] {
                require(s, key)?
                    .as_u64()
                    .ok_or_else(|| schema_error(format!("`scenario.{key}` must be an integer")))?;
            }
            require_number(s, "primary_power")?;
            require_number(s, "xi")?;
            require_numbers(s, "snr_targets")?;
        }
        _ => return Err(schema_error("`scenario` must be null or an object")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_derived, sample_channels};
    use crate::nfb::solve_nfb;
    use crate::zfb::solve_zfb;

    fn scenario() -> ScenarioConfig {
        ScenarioConfig::new(5, 5, 2, 2, 2, 1.0, 0.3, vec![4.0, 2.0], 5).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = scenario();
        let dm = build_derived(&sample_channels(&c, 0).unwrap(), &c).unwrap();
        let sol = solve_nfb(&dm, &c.snr(), c.xi()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nfb.json");
        dump_solution(&sol, Some(&c), &path).unwrap();
        let rec = read_solution(&path).unwrap();
        let t = rec.t.to_matrix().unwrap();
        assert_eq!(t.shape(), sol.t.shape());
        for (a, b) in t.iter().zip(sol.t.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(rec.power.to_bits(), sol.power.to_bits());
        assert_eq!(rec.mode, Mode::Nfb);
        assert_eq!(rec.scenario.unwrap().seed, 5);
    }

    #[test]
    fn zfb_record() {
        let c = scenario();
        let dm = build_derived(&sample_channels(&c, 1).unwrap(), &c).unwrap();
        let sol = solve_zfb(&dm, &c.snr()).unwrap();
        let json = SolutionRecord::new(&sol, None).to_json().unwrap();
        let value: Value = serde_json::from_str(&json).unwrap();
        validate_record(&value).unwrap();
        assert_eq!(value["mode"], "ZFB");
        assert!(value["interference"].as_f64().unwrap() < 1e-15);
        assert!(value["y"].is_null());
    }

    #[test]
    fn validator_rejects_broken_records() {
        let c = scenario();
        let dm = build_derived(&sample_channels(&c, 2).unwrap(), &c).unwrap();
        let sol = solve_zfb(&dm, &c.snr()).unwrap();
        let good: Value = serde_json::to_value(SolutionRecord::new(&sol, Some(&c))).unwrap();
        validate_record(&good).unwrap();

        let mut bad = good.clone();
        bad["mode"] = "XFB".into();
        assert!(validate_record(&bad).is_err());

        let mut bad = good.clone();
        bad["t"]["data"].as_array_mut().unwrap().pop();
        assert!(validate_record(&bad).is_err());

        let mut bad = good.clone();
        bad.as_object_mut().unwrap().remove("power");
        assert!(validate_record(&bad).is_err());

        let mut bad = good;
        bad["format"] = "other".into();
        assert!(validate_record(&bad).is_err());
    }
}
