//! Layering of command-line flags over a JSON config file.
//!
//! Config keys are flag names with dashes replaced by underscores. A flag
//! that was given wins over the same key in the file; anything left unset
//! falls back to the command's default.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

pub fn merge<T: Serialize + DeserializeOwned + Default>(
    flags: &T,
    config: Option<&Path>,
) -> Result<T, CliError> {
    let Some(path) = config else {
        return Ok(flags_only(flags));
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::from(skinspace::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    let file: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let Value::Object(mut layered) = file else {
        return Err(CliError::config(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };

    let known = object_of(&T::default());
    if let Some(unknown) = layered.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::config(format!(
            "{}: unknown key {unknown:?}",
            path.display()
        )));
    }
    for (key, value) in object_of(flags) {
        // unset flags serialize as null, switches as false
        if !matches!(value, Value::Null | Value::Bool(false)) {
            layered.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(layered))
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn object_of<T: Serialize>(v: &T) -> Map<String, Value> {
    match serde_json::to_value(v) {
        Ok(Value::Object(map)) => map,
        _ => Map::new(),
    }
}

fn flags_only<T: Serialize + DeserializeOwned + Default>(flags: &T) -> T {
    serde_json::to_value(flags)
        .and_then(serde_json::from_value)
        .unwrap_or_default()
}
