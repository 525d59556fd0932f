//! Layering of built-in defaults, the `--config` document and command-line
//! flags.
//!
//! Every subcommand has one argument struct whose fields are all optional.
//! Absent flags serialize to `null` and are dropped, so the resolved settings
//! are `defaults <- config <- flags` merged key by key and deserialized back
//! into the same struct.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Config document: top-level keys apply to every subcommand that knows
/// them, an object under the subcommand name overrides those.
pub fn load_config(path: Option<&Path>) -> Result<Map<String, Value>, CliError> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Data(format!(
            "config {} must be a JSON object",
            path.display()
        ))),
        Err(e) => Err(CliError::Data(format!("config {}: {e}", path.display()))),
    }
}

pub fn resolve<T: Serialize + DeserializeOwned>(
    command: &str,
    defaults: Value,
    config: &Map<String, Value>,
    flags: &T,
) -> Result<(T, Value), CliError> {
    let Value::Object(mut merged) = defaults else {
        unreachable!("defaults are always an object");
    };
    let known: Vec<String> = merged.keys().cloned().collect();
    for (k, v) in config {
        if known.contains(k) {
            merged.insert(k.clone(), v.clone());
        }
    }
    if let Some(section) = config.get(command) {
        let Value::Object(section) = section else {
            return Err(CliError::Usage(format!(
                "config section {command:?} must be an object"
            )));
        };
        for (k, v) in section {
            if !known.contains(k) {
                return Err(CliError::Usage(format!(
                    "config section {command:?} has unknown key {k:?}"
                )));
            }
            merged.insert(k.clone(), v.clone());
        }
    }
    let Value::Object(given) = serde_json::to_value(flags).expect("arguments serialize") else {
        unreachable!("argument structs serialize to objects");
    };
    merged.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    let resolved = Value::Object(merged);
    let parsed = serde_json::from_value(resolved.clone())
        .map_err(|e| CliError::Usage(format!("invalid {command} setting: {e}")))?;
    Ok((parsed, resolved))
}

pub fn required<T: Clone>(value: &Option<T>, name: &str) -> Result<T, CliError> {
    value.clone().ok_or_else(|| {
        CliError::Usage(format!(
            "missing required setting --{}",
            name.replace('_', "-")
        ))
    })
}
