//! Layered run configuration: defaults, then a JSON file, then flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const META_FILE: &str = "meta.json";

/// Recursively overlays `top` onto `base`. Objects merge key by key; any
/// other non-null value replaces; nulls are ignored.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (_, Value::Null) => {}
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Reads a config file. A `meta.json` written by a previous run is
/// accepted too; its `config` section is used.
pub fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    match value {
        Value::Object(mut map) if map.get("tool").and_then(Value::as_str) == Some("epic") => {
            Ok(map.remove("config").unwrap_or(Value::Object(Map::new())))
        }
        Value::Object(_) => Ok(value),
        _ => Err(CliError::Input(format!(
            "{}: config must be a JSON object",
            path.display()
        ))),
    }
}

/// Defaults of `T`, overlaid with the config file (if any), overlaid with
/// explicitly given flags.
pub fn resolve<T: Serialize + DeserializeOwned + Default>(config: Option<&Path>, flags: Value) -> Result<T, CliError> {
    let mut merged = serde_json::to_value(T::default()).expect("defaults serialize");
    if let Some(path) = config {
        merge(&mut merged, read_config_file(path)?);
    }
    merge(&mut merged, flags);
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}

fn meta_value<T: Serialize>(command: &str, config: &T) -> Value {
    serde_json::json!({
        "tool": "epic",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    })
}

/// Writes the resolved configuration next to a run's outputs.
pub fn write_meta<T: Serialize>(path: &Path, command: &str, config: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&meta_value(command, config)).expect("meta serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `report.json` -> `report.meta.json`.
pub fn sibling_meta_path(out: &Path) -> std::path::PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.meta.json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use serde_json::json;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default)]
    struct Inner {
        a: f64,
        b: u32,
    }

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default)]
    struct Conf {
        name: Option<String>,
        inner: Inner,
        flag: bool,
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"inner": {"a": 2.5, "b": 3}, "name": "file"}"#).unwrap();
        let c: Conf = resolve(Some(&path), json!({"inner": {"b": 9}, "name": null})).unwrap();
        assert_eq!(
            c,
            Conf {
                name: Some("file".into()),
                inner: Inner { a: 2.5, b: 9 },
                flag: false
            }
        );
    }

    #[test]
    fn meta_files_are_accepted_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(META_FILE);
        let conf = Conf {
            name: Some("x".into()),
            inner: Inner { a: 1.0, b: 2 },
            flag: true,
        };
        write_meta(&path, "test", &conf).unwrap();
        let back: Conf = resolve(Some(&path), Value::Null).unwrap();
        assert_eq!(back, conf);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let err = resolve::<Conf>(None, json!({"inner": {"b": "many"}})).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sibling_meta_name() {
        assert_eq!(
            sibling_meta_path(Path::new("/x/report.json")),
            Path::new("/x/report.meta.json")
        );
    }
}
