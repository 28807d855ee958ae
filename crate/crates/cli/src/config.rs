//! Settings resolution: command-line flag, then config file, then default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::CliError;

/// Reads a config file. Either `key = value` lines (`#` starts a comment) or
/// a sidecar written by a previous run, in which case its `settings` object
/// is used and its `command` must match.
pub fn load(path: &Path, command: &str) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        parse_sidecar(&text, command)
    } else {
        parse_key_values(&text)
    }
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", i + 1))
        })?;
        let key = normalize(k);
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config key {key:?} given twice")));
        }
    }
    Ok(out)
}

fn parse_sidecar(text: &str, command: &str) -> Result<BTreeMap<String, String>, CliError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
    if let Some(c) = v.get("command").and_then(Value::as_str) {
        if c != command {
            return Err(CliError::Usage(format!(
                "config was written by `{c}`, not `{command}`"
            )));
        }
    }
    let settings = v
        .get("settings")
        .and_then(Value::as_object)
        .ok_or_else(|| CliError::Usage("JSON config needs a `settings` object".into()))?;
    settings
        .iter()
        .map(|(k, v)| {
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Number(_) | Value::Bool(_) => v.to_string(),
                _ => return Err(CliError::Usage(format!("setting {k:?} is not a scalar"))),
            };
            Ok((normalize(k), s))
        })
        .collect()
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Resolves settings one key at a time and records the value used.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            used: BTreeMap::new(),
        }
    }

    fn lookup<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let from_file = self.file.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key {key:?} = {s:?}: {e}")))
            })
            .transpose()
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.lookup(key, flag)?.unwrap_or(default);
        self.used.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self
            .lookup(key, flag)?
            .ok_or_else(|| CliError::Usage(format!("missing --{key}")))?;
        self.used.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Fails on config keys that no setting consumed.
    pub fn finish(self) -> Result<BTreeMap<String, String>, CliError> {
        if let Some(k) = self.file.keys().next() {
            return Err(CliError::Usage(format!("unknown config key {k:?}")));
        }
        Ok(self.used)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let file = parse_key_values("alpha = 0.2\nk_max = 50 # comment\n").unwrap();
        let mut r = Resolver::new(file);
        assert_eq!(r.get("alpha", Some(0.3), 0.1).unwrap(), 0.3);
        assert_eq!(r.get("k-max", None, 200usize).unwrap(), 50);
        assert_eq!(r.get("seed", None, 7u64).unwrap(), 7);
        let used = r.finish().unwrap();
        assert_eq!(used["alpha"], "0.3");
        assert_eq!(used["k-max"], "50");
    }

    #[test]
    fn unknown_and_malformed_keys() {
        let mut r = Resolver::new(parse_key_values("bogus = 1").unwrap());
        r.get("alpha", None, 0.1).unwrap();
        assert!(matches!(r.finish(), Err(CliError::Usage(_))));
        assert!(parse_key_values("no equals sign").is_err());
        let mut r = Resolver::new(parse_key_values("alpha = abc").unwrap());
        assert!(r.get("alpha", None, 0.1).is_err());
    }

    #[test]
    fn sidecar_settings() {
        let text = r#"{"command":"kac","settings":{"alpha":"0.2","seed":3}}"#;
        let m = parse_sidecar(text, "kac").unwrap();
        assert_eq!(m["alpha"], "0.2");
        assert_eq!(m["seed"], "3");
        assert!(parse_sidecar(text, "sigma").is_err());
    }
}
