//! Layering of command-line flags over a JSON config file over defaults.
//!
//! Every subcommand's flags live in a struct whose fields are all optional.
//! A config file is a flat JSON object keyed by the same (snake_case) names.
//! Flags that were given win; anything left unset falls back to the file and
//! then to the default applied by the command itself.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::UsageError;

pub fn load(path: &Path) -> anyhow::Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(UsageError(format!("config {} must hold a JSON object", path.display())).into()),
        Err(e) => Err(UsageError(format!("config {}: {e}", path.display())).into()),
    }
}

/// Fills the unset fields of `flags` from `file`. Unknown keys in the file
/// are rejected by the target type's `deny_unknown_fields`.
pub fn layer<T: Serialize + DeserializeOwned>(flags: T, file: Option<&Map<String, Value>>) -> anyhow::Result<T> {
    let Some(file) = file else { return Ok(flags) };
    let mut merged = file.clone();
    if let Value::Object(given) = serde_json::to_value(&flags)? {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| UsageError(format!("config: {e}")).into())
}
