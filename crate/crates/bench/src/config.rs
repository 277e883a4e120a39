//! TOML configuration files whose entries override command-line flags of the
//! same name.
//!
//! ```toml
//! # bandit sweep
//! algo = ["ldhoo", "hoo"]
//! n = [10, 100, 1000]
//! no_timing = true
//! ```
//!
//! Keys are long flag names; underscores and dashes are interchangeable.
//! Arrays become comma lists, `true` turns a switch on and `false` leaves it
//! off.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{BenchError, Result};

fn scalar(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        _ => None,
    }
}

/// Parses a config file into `(flag, value)` pairs.
pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, Value)>> {
    let err = |message: String| BenchError::Config { path: path.to_path_buf(), message };
    let table: Table = text.parse().map_err(|e: toml::de::Error| err(e.message().to_string()))?;
    let mut pairs = Vec::new();
    for (key, value) in table {
        let flag = key.replace('_', "-");
        if flag == "config" {
            return Err(err("`config` cannot be set from a config file".into()));
        }
        let valid = match &value {
            Value::Boolean(_) => true,
            Value::Array(items) => !items.is_empty() && items.iter().all(|v| scalar(v).is_some()),
            other => scalar(other).is_some(),
        };
        if !valid {
            return Err(err(format!("unsupported value for `{key}`: {value}")));
        }
        pairs.push((flag, value));
    }
    Ok(pairs)
}

/// Turns config pairs into trailing command-line arguments.
pub fn pairs_to_args(pairs: &[(String, Value)]) -> Vec<String> {
    pairs
        .iter()
        .filter_map(|(k, v)| match v {
            Value::Boolean(true) => Some(format!("--{k}")),
            Value::Boolean(false) => None,
            Value::Array(items) => {
                let list: Vec<String> = items.iter().filter_map(scalar).collect();
                Some(format!("--{k}={}", list.join(",")))
            }
            other => scalar(other).map(|s| format!("--{k}={s}")),
        })
        .collect()
}

fn config_path(args: &[String]) -> Option<String> {
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            return iter.next().cloned();
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(path.to_string());
        }
    }
    None
}

/// Appends the entries of the `--config` file, if any, to `args`. Later
/// occurrences of a flag win, so file entries take precedence.
pub fn expand_args(mut args: Vec<String>) -> Result<Vec<String>> {
    if let Some(path) = config_path(&args) {
        let text = std::fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
        args.extend(pairs_to_args(&parse_config(&text, Path::new(&path))?));
    }
    Ok(args)
}
