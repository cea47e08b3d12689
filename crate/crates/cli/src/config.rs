//! Run configuration: a JSON document layered over a named profile, with
//! `--set key=value` overrides applied last.

use std::path::{Path, PathBuf};

use qwalk::training::Caps;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    /// Directory holding the TU-format files.
    pub path: PathBuf,
    /// File prefix, e.g. `MUTAG` for `MUTAG_A.txt`.
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSettings {
    pub cases: usize,
    pub max_nodes: usize,
    pub max_steps: usize,
    pub hidden: usize,
    pub feature_dim: usize,
    pub layers: usize,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: String,
    pub dataset: DatasetRef,
    pub mode: String,
    pub walk_length: usize,
    pub hidden: usize,
    pub layers: usize,
    pub pooling: qwalk::diffusion::Pooling,
    pub lr: f64,
    pub epochs: usize,
    pub split: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub caps: Caps,
    pub gradcheck: GradcheckSettings,
}

pub const PROFILES: &[&str] = &["default", "mutag"];

pub fn profile(name: &str) -> Result<RunConfig, String> {
    let base = RunConfig {
        profile: "default".into(),
        dataset: DatasetRef {
            path: "data/MUTAG".into(),
            name: "MUTAG".into(),
        },
        mode: "quantum-1".into(),
        walk_length: 6,
        hidden: 64,
        layers: 1,
        pooling: Default::default(),
        lr: 1e-3,
        epochs: 20,
        split: 0.9,
        seed: 0,
        out: "out".into(),
        caps: Caps::default(),
        gradcheck: GradcheckSettings {
            cases: 20,
            max_nodes: 8,
            max_steps: 4,
            hidden: 4,
            feature_dim: 2,
            layers: 1,
            scale: 1.0,
        },
    };
    match name {
        "default" => Ok(base),
        "mutag" => Ok(RunConfig {
            profile: "mutag".into(),
            walk_length: 4,
            hidden: 128,
            ..base
        }),
        other => Err(format!("unknown profile `{other}` (available: {})", PROFILES.join(", "))),
    }
}

/// Parse `key=value`; the value is read as JSON when it parses, else as a string.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value), String> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| format!("override `{s}` is not of the form key=value"))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(format!("override `{s}` has an empty key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.split('.').map(String::from).collect(), value))
}

pub fn apply_override(doc: &mut Value, path: &[String], value: Value) -> Result<(), String> {
    let mut cur = doc;
    for (i, k) in path.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| format!("cannot set `{}`: parent is not an object", path.join(".")))?;
        if i + 1 == path.len() {
            obj.insert(k.clone(), value);
            return Ok(());
        }
        cur = obj.entry(k.clone()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("override paths are non-empty")
}

/// Recursively lay `top` over `base`; objects merge, everything else replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Build the effective config: profile defaults, then the file, then overrides.
/// Unknown keys anywhere are rejected.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, String> {
    let mut user = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => Value::Object(Map::new()),
    };
    if !user.is_object() {
        return Err("config must be a JSON object".into());
    }
    for o in overrides {
        let (key, value) = parse_override(o)?;
        apply_override(&mut user, &key, value)?;
    }
    let name = match user.get("profile") {
        None => "default",
        Some(Value::String(s)) => s.as_str(),
        Some(other) => return Err(format!("profile must be a string, got {other}")),
    };
    let mut doc = serde_json::to_value(profile(name)?).expect("profiles serialize");
    merge(&mut doc, user);
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| format!("invalid config: {e}"))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(c: &RunConfig) -> Result<(), String> {
    qwalk::diffusion::kernel_registry().get(&c.mode).map_err(|e| e.to_string())?;
    if !(c.split > 0.0 && c.split < 1.0) {
        return Err(format!("split must lie strictly between 0 and 1, got {}", c.split));
    }
    if !(c.lr > 0.0 && c.lr.is_finite()) {
        return Err(format!("learning rate must be positive, got {}", c.lr));
    }
    if c.walk_length == 0 || c.hidden == 0 || c.layers == 0 {
        return Err("walk_length, hidden and layers must all be at least 1".into());
    }
    if c.caps.max_nodes == 0 {
        return Err("caps.max_nodes must be positive".into());
    }
    Ok(())
}
