//! Config loading: TOML or JSON files with an optional `schema` key.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::Failure;

pub const SCHEMA_VERSION: i64 = 1;

/// Reads a config file into a JSON value; the format follows the extension
/// (`.json` is JSON, anything else TOML).
pub fn read_value(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("invalid JSON in {}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Failure::Input(format!("invalid TOML in {}: {e}", path.display())))?
    };
    let Value::Object(map) = &mut value else {
        return Err(Failure::Input("config must be a table".into()));
    };
    if let Some(schema) = map.remove("schema") {
        if schema.as_i64() != Some(SCHEMA_VERSION) {
            return Err(Failure::Input(format!("unsupported config schema {schema}, expected {SCHEMA_VERSION}")));
        }
    }
    Ok(value)
}

/// Typed config from an optional file; defaults when no file is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => parse(read_value(p)?),
    }
}

pub fn parse<T: DeserializeOwned>(value: Value) -> Result<T, Failure> {
    serde_json::from_value(value).map_err(|e| Failure::Input(format!("invalid config: {e}")))
}

/// Parses `theta=32,cprime=1`.
pub fn parse_calibration(s: &str) -> Result<(f64, f64), String> {
    let (mut theta, mut cprime) = (None, None);
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got '{part}'"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("not a number: '{v}'"))?;
        match k.trim() {
            "theta" => theta = Some(v),
            "cprime" => cprime = Some(v),
            other => return Err(format!("unknown calibration key '{other}'")),
        }
    }
    match (theta, cprime) {
        (Some(t), Some(c)) => Ok((t, c)),
        _ => Err("calibration needs both theta and cprime".into()),
    }
}
