//! The JSON configuration document and dotted-path overrides.
//!
//! Every key has a default, so `{}` is a complete configuration that runs
//! the compensated loop with noise on.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::aero_sizing::{AeroDerivatives, MissileConfig, TailSizingInputs};
use crate::error::{Error, Result};
use crate::sim::{LoopConfig, Scenario};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Document {
    pub missile: MissileConfig,
    pub derivatives: AeroDerivatives,
    pub tail_sizing: TailSizingInputs,
    #[serde(rename = "loop")]
    pub loop_config: LoopConfig,
    pub scenario: Scenario,
}

impl Document {
    /// Parses a configuration. Errors name the offending key and, for
    /// syntax or type problems in the text, its line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let doc: Document = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                Error::Parse(format!("line {}, column {}: {inner}", inner.line(), inner.column()))
            } else {
                Error::Parse(format!(
                    "key `{path}` (line {}, column {}): {inner}",
                    inner.line(),
                    inner.column()
                ))
            }
        })?;
        de.end().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(doc)
    }

    /// Applies `key=value` overrides, e.g. `loop.pid.kp=50`. The value is
    /// read as JSON, falling back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut root = serde_json::to_value(self).map_err(|e| Error::Parse(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("override `{item}` is not of the form key=value")))?;
            let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut root, key.trim(), value)?;
        }
        from_value(root)
    }
}

/// Deserialises a value tree, naming the offending key on failure.
pub fn from_value<T: serde::de::DeserializeOwned>(value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse(format!("key `{path}`: {}", e.into_inner()))
    })
}

/// Replaces the existing entry at dotted `path` in `root`.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = root;
    for part in path.split('.') {
        node = node
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| Error::Parse(format!("unknown key `{path}`")))?;
    }
    *node = value;
    Ok(())
}

/// Reads the entry at dotted `path`.
pub fn get_path<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(root, |node, part| node.as_object()?.get(part))
}
