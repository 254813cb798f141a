//! Layered run configuration: built-in preset, then a JSON file, then flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use mg_core::augment::{AugmentationConfig, AugmentationKind, AugmentationPolicy};
use mg_core::contrastive::TrainConfig;
use mg_core::eval::{ProbeSchedule, SubjectSplit};
use mg_core::model::StreamKind;
use mg_core::spatial::SpatialConfig;
use mg_core::temporal::RecurrentEncoderConfig;
use mg_emotion::EndpointConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const PRESETS: [&str; 2] = ["imigue-desk", "ntu-like-desk"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    pub stream: StreamKind,
    pub train: TrainConfig,
    pub augmentation: AugmentationConfig,
    pub policy: String,
    pub spatial: SpatialConfig,
    pub temporal: RecurrentEncoderConfig,
    /// Topology file for skeletons other than the built-in 15-joint upper body.
    pub topology: Option<PathBuf>,
    pub probe: ProbeSchedule,
    pub split: Option<SubjectSplit>,
    pub endpoint: EndpointConfig,
}

impl RunConfig {
    pub fn preset(name: &str, stream: StreamKind) -> CliResult<Self> {
        let train = TrainConfig::desk_for(stream);
        let queue_size = match name {
            "imigue-desk" => train.queue_size,
            // Four times the per-sample negative budget, after NTU's larger dictionary.
            "ntu-like-desk" => 4 * train.queue_size,
            other => {
                return Err(CliError::invalid(format!(
                    "unknown preset '{other}' (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(Self {
            preset: name.to_string(),
            stream,
            train: TrainConfig { queue_size, ..train },
            augmentation: AugmentationConfig::default(),
            policy: "combo".into(),
            spatial: SpatialConfig::desk(),
            temporal: RecurrentEncoderConfig::desk(45),
            topology: None,
            probe: ProbeSchedule::default(),
            split: None,
            endpoint: EndpointConfig::default(),
        })
    }

    /// Preset (from the file's `preset` key or `preset_flag`), overlaid with the file.
    /// The stream picks the preset's training defaults and resolves the same way.
    pub fn load(preset_flag: Option<&str>, stream_flag: Option<StreamKind>, file: Option<&Path>) -> CliResult<Self> {
        let overlay = match file {
            Some(path) => Some((path, read_json_value(path)?)),
            None => None,
        };
        let file_preset = overlay
            .as_ref()
            .and_then(|(_, v)| v.get("preset"))
            .and_then(Value::as_str)
            .map(str::to_string);
        let name = preset_flag
            .map(str::to_string)
            .or(file_preset)
            .unwrap_or_else(|| PRESETS[0].to_string());
        let file_stream = match &overlay {
            Some((path, v)) => match v.get("stream").and_then(Value::as_str) {
                Some(s) => Some(StreamKind::from_str(s).map_err(|e| CliError::config(path, e))?),
                None => None,
            },
            None => None,
        };
        let stream = stream_flag.or(file_stream).unwrap_or(StreamKind::Spatial);
        let base = Self::preset(&name, stream)?;
        let Some((path, overlay)) = overlay else {
            return Ok(base);
        };
        let mut merged = serde_json::to_value(&base).expect("config serializes");
        merge(&mut merged, &overlay);
        merged["preset"] = Value::String(name);
        let config: Self = serde_json::from_value(merged).map_err(|e| CliError::config(path, e))?;
        let echo = serde_json::to_value(&config).expect("config serializes");
        if let Some(key) = unknown_key(&overlay, &echo, "") {
            return Err(CliError::config(path, format!("unknown config key '{key}'")));
        }
        Ok(config)
    }

    pub fn policy(&self) -> CliResult<AugmentationPolicy> {
        parse_policy(&self.policy)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.train.validate()?;
        self.spatial.validate()?;
        self.temporal.validate()?;
        self.policy()?;
        if self.probe.epochs == 0 || !(self.probe.learning_rate > 0.0) {
            return Err(CliError::invalid("probe needs epochs >= 1 and a positive learning rate"));
        }
        Ok(())
    }
}

pub fn read_json_value(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(path, format!("cannot read config: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(path, format!("malformed JSON: {e}")))
}

fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// First object key in `given` that did not survive deserialization into `echo`.
fn unknown_key(given: &Value, echo: &Value, prefix: &str) -> Option<String> {
    let (Value::Object(g), Value::Object(e)) = (given, echo) else {
        return None;
    };
    for (k, v) in g {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match e.get(k) {
            None => return Some(path),
            Some(inner) => {
                if let Some(found) = unknown_key(v, inner, &path) {
                    return Some(found);
                }
            }
        }
    }
    None
}

/// `combo`, `identity`, or `kind[:p]+kind[:p]...`.
pub fn parse_policy(spec: &str) -> CliResult<AugmentationPolicy> {
    match spec.trim() {
        "combo" => return Ok(AugmentationPolicy::micro_gesture_combo()),
        "identity" => return Ok(AugmentationPolicy::identity()),
        _ => {}
    }
    let mut steps = Vec::new();
    for part in spec.split('+').map(str::trim) {
        let (name, p) = match part.split_once(':') {
            Some((n, p)) => (
                n,
                p.parse::<f64>()
                    .map_err(|_| CliError::invalid(format!("bad probability '{p}' in policy '{spec}'")))?,
            ),
            None => (part, 1.0),
        };
        let kind = AugmentationKind::from_str(name).map_err(|e| CliError::invalid(e.to_string()))?;
        steps.push((kind, p));
    }
    Ok(AugmentationPolicy::new(steps)?)
}
