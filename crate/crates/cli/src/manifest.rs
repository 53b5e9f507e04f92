use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Local, SecondsFormat};
use serde::Serialize;
use serde_json::{Map, Value};

/// Record written next to the outputs of every run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command_line: String,
    /// `null` for commands that draw no random numbers.
    pub base_seed: Option<u64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    /// Flags after layering; usable as a `--config` file to rerun.
    pub effective_config: Value,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Command-specific facts (counts, horizons, failed checks).
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

fn stamp(t: DateTime<Local>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, false)
}

impl RunManifest {
    pub fn new(args: &[String], started: DateTime<Local>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            command_line: args.iter().map(|a| quote(a)).collect::<Vec<_>>().join(" "),
            base_seed: None,
            started: stamp(started),
            finished: String::new(),
            outputs: Vec::new(),
            effective_config: Value::Null,
            exit_code: 0,
            error: None,
            extra: Map::new(),
        }
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    pub fn set(&mut self, key: &str, v: impl Serialize) {
        self.extra.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn write(mut self, path: &Path) -> std::io::Result<()> {
        self.finished = stamp(Local::now());
        let text = serde_json::to_string_pretty(&self).map_err(std::io::Error::other)?;
        fs::write(path, text + "\n")
    }
}

/// `foo.csv` → `foo.manifest.json`.
pub fn path_for(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

fn quote(a: &str) -> String {
    let plain = !a.is_empty()
        && a.chars().all(|c| c.is_ascii_alphanumeric() || "-_./=,:+".contains(c));
    if plain {
        a.to_string()
    } else {
        format!("'{}'", a.replace('\'', r"'\''"))
    }
}
