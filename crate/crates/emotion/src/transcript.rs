//! Interview transcripts, masked transcripts and micro-gesture event logs.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{EmotionError, Result};
use crate::vocabulary::canonical_label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Reporter,
    Player,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::Reporter => "Reporter",
            Speaker::Player => "Player",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Lose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    /// Seconds from the start of the video.
    pub t: f64,
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueTranscript {
    pub video_id: String,
    pub entries: Vec<Utterance>,
}

/// Same shape as the transcript, with text after masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedTranscript {
    pub video_id: String,
    pub entries: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgEvent {
    pub t: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgEventLog {
    pub video_id: String,
    pub ground_truth: Outcome,
    pub events: Vec<MgEvent>,
}

fn check_times<'a>(what: &str, id: &str, times: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut last = f64::NEG_INFINITY;
    for &t in times {
        if !t.is_finite() || t < last {
            return Err(EmotionError::InvalidInput(format!(
                "{what} {id}: timestamps must be finite and non-decreasing"
            )));
        }
        last = t;
    }
    Ok(())
}

fn check_utterances(what: &str, id: &str, entries: &[Utterance]) -> Result<()> {
    check_times(what, id, entries.iter().map(|e| &e.t))?;
    if let Some(i) = entries.iter().position(|e| e.text.trim().is_empty()) {
        return Err(EmotionError::InvalidInput(format!("{what} {id}: entry {i} has empty text")));
    }
    Ok(())
}

impl DialogueTranscript {
    pub fn validate(&self) -> Result<()> {
        check_utterances("transcript", &self.video_id, &self.entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let t: Self = read_json(path)?;
        t.validate()?;
        Ok(t)
    }
}

impl MaskedTranscript {
    pub fn validate(&self) -> Result<()> {
        check_utterances("masked transcript", &self.video_id, &self.entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let t: Self = read_json(path)?;
        t.validate()?;
        Ok(t)
    }
}

impl MgEventLog {
    /// Check ordering and rewrite every label to its canonical spelling.
    pub fn validated(mut self) -> Result<Self> {
        check_times("event log", &self.video_id, self.events.iter().map(|e| &e.t))?;
        for e in &mut self.events {
            e.label = canonical_label(&e.label)?.to_string();
        }
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json::<Self>(path)?.validated()
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| EmotionError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| EmotionError::json(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| EmotionError::json(path, e))?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| EmotionError::io(parent, e))?;
        }
    }
    fs::write(path, text + "\n").map_err(|e| EmotionError::io(path, e))
}

/// Seconds rendered with at most three decimals and no trailing zeros.
pub fn format_timestamp(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}
