//! Config files and the flag > file > default merge.

use std::path::Path;

use relcentral::{PhysicalParams, PotentialKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// On-disk config. The `--json` output of every command has the same shape
/// plus a `result` key, so it can be fed back with `--config`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub m: Option<f64>,
    pub c: Option<f64>,
    pub k: Option<f64>,
    pub potential: Option<PotentialKind>,
    pub command: Option<String>,
    pub params: Option<Map<String, Value>>,
    #[serde(skip_serializing)]
    pub result: Option<Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Physical setup shared by every command.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Setup {
    pub m: f64,
    pub c: f64,
    pub k: f64,
    pub potential: PotentialKind,
}

impl Setup {
    pub fn params(&self) -> Result<PhysicalParams, relcentral::Error> {
        PhysicalParams::new(self.m, self.c)
    }
}

pub fn resolve_setup(
    file: &ConfigFile,
    m: Option<f64>,
    c: Option<f64>,
    k: Option<f64>,
    potential: Option<PotentialKind>,
) -> Setup {
    Setup {
        m: m.or(file.m).unwrap_or(1.0),
        c: c.or(file.c).unwrap_or(1.0),
        k: k.or(file.k).unwrap_or(1.0),
        potential: potential.or(file.potential).unwrap_or(PotentialKind::Coulomb),
    }
}

/// Defaults, overlaid by config-file params, overlaid by flags that were
/// given, then checked against the schema of `P`.
pub fn resolve_params<P, A>(flags: &A, file: &ConfigFile) -> Result<P, CliError>
where
    P: Serialize + DeserializeOwned + Default,
    A: Serialize,
{
    let mut merged = match serde_json::to_value(P::default()) {
        Ok(Value::Object(map)) => map,
        _ => unreachable!("parameter structs serialize to objects"),
    };
    let known: Vec<String> = merged.keys().cloned().collect();
    if let Some(params) = &file.params {
        for (key, v) in params {
            if !known.contains(key) {
                return Err(CliError::Usage(format!("unknown parameter `{key}` in config")));
            }
            merged.insert(key.clone(), v.clone());
        }
    }
    if let Ok(Value::Object(map)) = serde_json::to_value(flags) {
        for (key, v) in map {
            if !v.is_null() {
                merged.insert(key, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct P {
        a: f64,
        b: Option<f64>,
        list: Vec<f64>,
    }

    #[derive(Serialize)]
    struct Flags {
        a: Option<f64>,
        b: Option<f64>,
    }

    #[test]
    fn precedence() {
        let file = ConfigFile {
            params: Some(serde_json::from_str(r#"{"a": 2.0, "b": 3.0, "list": [1.0]}"#).unwrap()),
            ..Default::default()
        };
        let p: P = resolve_params(&Flags { a: Some(5.0), b: None }, &file).unwrap();
        assert_eq!(p, P { a: 5.0, b: Some(3.0), list: vec![1.0] });
        let p: P = resolve_params(&Flags { a: None, b: None }, &ConfigFile::default()).unwrap();
        assert_eq!(p, P::default());
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let file = ConfigFile {
            params: Some(serde_json::from_str(r#"{"zzz": 1}"#).unwrap()),
            ..Default::default()
        };
        assert!(matches!(resolve_params::<P, _>(&Flags { a: None, b: None }, &file), Err(CliError::Usage(_))));
    }

    #[test]
    fn setup_precedence() {
        let file = ConfigFile { m: Some(2.0), c: Some(3.0), ..Default::default() };
        let s = resolve_setup(&file, None, Some(4.0), None, None);
        assert_eq!((s.m, s.c, s.k), (2.0, 4.0, 1.0));
        assert_eq!(s.potential, PotentialKind::Coulomb);
    }
}
