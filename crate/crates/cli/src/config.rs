//! Overlaying command-line flags on a JSON config file.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Returns `cli` with every unset field filled from the config file at
/// `path`. Unknown keys in the file are rejected.
pub fn resolve<T>(cli: &T, path: Option<&Path>) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Some(path) = path else {
        return Ok(cli_clone(cli));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    let file: Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("config {} is not a JSON object: {e}", path.display())))?;

    let known = to_object(&T::default());
    if let Some(key) = file.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::Input(format!("unknown key {key:?} in config {}", path.display())));
    }

    let mut merged = file;
    for (key, value) in to_object(cli) {
        if !(value.is_null() || value == Value::Bool(false)) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))
}

fn to_object<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value).expect("argument structs serialize") {
        Value::Object(map) => map,
        _ => unreachable!("argument structs serialize to objects"),
    }
}

fn cli_clone<T: Serialize + DeserializeOwned>(cli: &T) -> T {
    serde_json::from_value(serde_json::to_value(cli).expect("argument structs serialize"))
        .expect("argument structs round-trip")
}
