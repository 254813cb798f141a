//! Masking, inference prompting, response parsing and Acc@k scoring.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::client::ChatClient;
use crate::error::{EmotionError, Result};
use crate::prompts::{INFERENCE_PROMPT, MASKING_PROMPT, MATCH_WINNER_TEMPLATE, MG_EMOTION_TEMPLATE};
use crate::transcript::{format_timestamp, DialogueTranscript, MaskedTranscript, MgEventLog, Outcome, Utterance};
use crate::vocabulary::canonical_label;

const TIMESTAMP_TOLERANCE: f64 = 5e-4;

// ---------------------------------------------------------------------------
// Masking

fn escape_cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

/// Two-column Markdown table (timestamp | speaker-prefixed text).
pub fn transcript_table(entries: &[Utterance]) -> String {
    let mut out = String::from("| timestamp | text |\n| --- | --- |\n");
    for e in entries {
        out.push_str(&format!(
            "| {} | {}: {} |\n",
            format_timestamp(e.t),
            e.speaker,
            escape_cell(e.text.trim())
        ));
    }
    out
}

pub fn masking_prompt(transcript: &DialogueTranscript) -> String {
    format!("{MASKING_PROMPT}\n\n{}", transcript_table(&transcript.entries))
}

fn split_cells(line: &str) -> Vec<String> {
    let inner = line.trim();
    let inner = inner.strip_prefix('|').unwrap_or(inner);
    let inner = inner.strip_suffix('|').unwrap_or(inner);
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                cur.push('|');
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    cells.push(cur);
    cells.into_iter().map(|c| c.trim().to_string()).collect()
}

fn is_separator_row(cells: &[String]) -> bool {
    cells
        .iter()
        .all(|c| !c.is_empty() && c.chars().all(|ch| matches!(ch, '-' | ':' | ' ')))
}

/// Seconds, or `mm:ss(.fff)`.
fn parse_timestamp(cell: &str) -> Option<f64> {
    if let Ok(v) = cell.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (m, s) = cell.split_once(':')?;
    let m: f64 = m.trim().parse().ok()?;
    let s: f64 = s.trim().parse().ok()?;
    Some(60.0 * m + s)
}

/// Rows of the first Markdown table in `response` as (timestamp, text).
pub fn parse_mask_table(response: &str) -> Result<Vec<(f64, String)>> {
    let fail = |reason: String| EmotionError::TableParse {
        reason,
        raw: response.to_string(),
    };
    let lines: Vec<&str> = response.lines().collect();
    let start = lines
        .iter()
        .position(|l| l.trim_start().starts_with('|'))
        .ok_or_else(|| fail("no Markdown table found".into()))?;
    let block: Vec<&str> = lines[start..].iter().take_while(|l| !l.trim().is_empty()).copied().collect();
    for (i, line) in block.iter().enumerate() {
        let t = line.trim();
        if !(t.starts_with('|') && t.ends_with('|') && t.len() > 1) {
            return Err(fail(format!("table line {} is missing the '|' separator: {t}", i + 1)));
        }
    }
    if block.len() < 2 || !is_separator_row(&split_cells(block[1])) {
        return Err(fail("table header must be followed by a separator row".into()));
    }
    let header = split_cells(block[0]);
    if header.len() != 2 {
        return Err(fail(format!("expected 2 columns, header has {}", header.len())));
    }
    let mut rows = Vec::with_capacity(block.len() - 2);
    for (i, line) in block[2..].iter().enumerate() {
        let cells = split_cells(line);
        if cells.len() != 2 {
            return Err(fail(format!("row {} has {} cells, expected 2", i + 1, cells.len())));
        }
        let t = parse_timestamp(&cells[0])
            .ok_or_else(|| fail(format!("row {}: '{}' is not a timestamp", i + 1, cells[0])))?;
        rows.push((t, cells[1].clone()));
    }
    Ok(rows)
}

fn strip_speaker(text: &str, entry: &Utterance) -> String {
    let prefix = format!("{}:", entry.speaker);
    match text.get(..prefix.len()) {
        Some(p) if p.eq_ignore_ascii_case(&prefix) => text[prefix.len()..].trim().to_string(),
        _ => text.to_string(),
    }
}

/// Align parsed rows with the original entries, keeping speakers and times.
pub fn align_masked(transcript: &DialogueTranscript, rows: Vec<(f64, String)>) -> Result<MaskedTranscript> {
    if rows.len() != transcript.entries.len() {
        return Err(EmotionError::Alignment {
            expected: transcript.entries.len(),
            found: rows.len(),
        });
    }
    let mut entries = Vec::with_capacity(rows.len());
    for (i, ((t, text), original)) in rows.into_iter().zip(&transcript.entries).enumerate() {
        if (t - original.t).abs() > TIMESTAMP_TOLERANCE {
            return Err(EmotionError::TimestampMismatch {
                row: i + 1,
                expected: original.t,
                found: t,
            });
        }
        let text = strip_speaker(&text, original);
        if text.is_empty() {
            return Err(EmotionError::InvalidInput(format!("masked row {} is empty", i + 1)));
        }
        entries.push(Utterance {
            t: original.t,
            speaker: original.speaker,
            text,
        });
    }
    Ok(MaskedTranscript {
        video_id: transcript.video_id.clone(),
        entries,
    })
}

pub fn mask_key(video_id: &str) -> String {
    format!("mask/{video_id}.md")
}

pub fn mask_transcript(transcript: &DialogueTranscript, client: &ChatClient) -> Result<MaskedTranscript> {
    if transcript.entries.is_empty() {
        return Err(EmotionError::InvalidInput(format!(
            "transcript {} has no entries",
            transcript.video_id
        )));
    }
    transcript.validate()?;
    let response = client.complete(&mask_key(&transcript.video_id), &masking_prompt(transcript))?;
    align_masked(transcript, parse_mask_table(&response)?)
}

// ---------------------------------------------------------------------------
// Inference prompt

#[derive(Serialize)]
struct EventsJson<'a> {
    events: Vec<EventJson<'a>>,
}

#[derive(Serialize)]
struct EventJson<'a> {
    t: f64,
    label: &'a str,
}

/// The fixed instruction, the timestamped masked dialogue and, when given,
/// the micro-gesture events as JSON (without the ground truth).
pub fn build_inference_prompt(masked: &MaskedTranscript, mg: Option<&MgEventLog>) -> String {
    let mut out = String::from(INFERENCE_PROMPT);
    out.push_str("\n\nTranscription:\n");
    for e in &masked.entries {
        out.push_str(&format!("[{}] {}: {}\n", format_timestamp(e.t), e.speaker, e.text.trim()));
    }
    if let Some(log) = mg {
        let json = EventsJson {
            events: log.events.iter().map(|e| EventJson { t: e.t, label: &e.label }).collect(),
        };
        out.push_str("\nMicro-gestures (JSON):\n");
        out.push_str(&serde_json::to_string_pretty(&json).expect("event json"));
        out.push('\n');
    }
    out
}

pub fn infer_key(video_id: &str, run: usize) -> String {
    format!("infer/{video_id}/run{run}.txt")
}

// ---------------------------------------------------------------------------
// Responses

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confidence {
    pub win: i64,
    pub lose: i64,
}

impl Confidence {
    /// `None` on a tie.
    pub fn prediction(&self) -> Option<Outcome> {
        match self.win.cmp(&self.lose) {
            std::cmp::Ordering::Greater => Some(Outcome::Win),
            std::cmp::Ordering::Less => Some(Outcome::Lose),
            std::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub text_only: Confidence,
    pub text_mg: Confidence,
}

impl InferenceResult {
    /// The response format requested by the inference prompt.
    pub fn render(&self) -> String {
        format!(
            "text-only: win: {}, lose: {}. text+micro-gestures: win: {}, lose: {}.",
            self.text_only.win, self.text_only.lose, self.text_mg.win, self.text_mg.lose
        )
    }
}

fn block_regex(which: usize) -> &'static Regex {
    static RE: OnceLock<[Regex; 2]> = OnceLock::new();
    let scores = r"\s*win\s*:\s*(?P<win>[^\s,;]+)\s*[,;]?\s*lose\s*:\s*(?P<lose>[^\s,;]+)";
    &RE.get_or_init(|| {
        [
            Regex::new(&format!(r"(?i)text\s*[-_ ]\s*only\s*:{scores}")).expect("regex"),
            Regex::new(&format!(r"(?i)text\s*\+\s*micro\s*-?\s*gestures?\s*:{scores}")).expect("regex"),
        ]
    })[which]
}

fn parse_score(block: &'static str, raw: &str) -> Result<i64> {
    let cleaned = raw.trim_end_matches(['.', '%']);
    let value: i64 = cleaned.parse().map_err(|_| EmotionError::NonIntegerScore {
        block,
        value: raw.to_string(),
    })?;
    if !(0..=100).contains(&value) {
        return Err(EmotionError::ScoreRange { block, value });
    }
    Ok(value)
}

fn parse_block(response: &str, which: usize, block: &'static str) -> Result<Confidence> {
    let caps = block_regex(which)
        .captures(response)
        .ok_or(EmotionError::MissingBlock(block))?;
    let win = parse_score(block, &caps["win"])?;
    let lose = parse_score(block, &caps["lose"])?;
    if win + lose != 100 {
        return Err(EmotionError::ConfidenceSum { block, win, lose });
    }
    Ok(Confidence { win, lose })
}

pub fn parse_confidences(response: &str) -> Result<InferenceResult> {
    Ok(InferenceResult {
        text_only: parse_block(response, 0, "text-only")?,
        text_mg: parse_block(response, 1, "text+micro-gestures")?,
    })
}

// ---------------------------------------------------------------------------
// Scoring

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRuns {
    pub video_id: String,
    pub runs: Vec<InferenceResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub text_only: f64,
    pub text_mg: f64,
}

/// Mean over the first `k` runs of the per-run accuracy across videos.
/// A tie counts as incorrect.
pub fn score_accuracy(results: &[VideoRuns], ground_truth: &BTreeMap<String, Outcome>, k: usize) -> Result<Accuracy> {
    if k == 0 {
        return Err(EmotionError::InvalidInput("k must be >= 1".into()));
    }
    if results.is_empty() {
        return Err(EmotionError::InvalidInput("no videos to score".into()));
    }
    let mut truths = Vec::with_capacity(results.len());
    for v in results {
        if v.runs.len() < k {
            return Err(EmotionError::TooFewRuns {
                video: v.video_id.clone(),
                found: v.runs.len(),
                k,
            });
        }
        truths.push(
            *ground_truth
                .get(&v.video_id)
                .ok_or_else(|| EmotionError::MissingGroundTruth(v.video_id.clone()))?,
        );
    }
    let n = results.len() as f64;
    let (mut text_only, mut text_mg) = (0.0, 0.0);
    for r in 0..k {
        let hits = |pick: fn(&InferenceResult) -> Confidence| {
            results
                .iter()
                .zip(&truths)
                .filter(|(v, t)| pick(&v.runs[r]).prediction() == Some(**t))
                .count() as f64
        };
        text_only += 100.0 * hits(|x| x.text_only) / n;
        text_mg += 100.0 * hits(|x| x.text_mg) / n;
    }
    Ok(Accuracy {
        text_only: text_only / k as f64,
        text_mg: text_mg / k as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub input: String,
    /// Keyed `acc@k`.
    pub accuracy: BTreeMap<String, f64>,
}

/// One row per input condition, one column per `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionReport {
    pub model: String,
    pub num_videos: usize,
    pub rows: Vec<ReportRow>,
}

pub fn build_report(
    model: &str,
    results: &[VideoRuns],
    ground_truth: &BTreeMap<String, Outcome>,
    ks: &[usize],
) -> Result<EmotionReport> {
    let mut text_only = BTreeMap::new();
    let mut text_mg = BTreeMap::new();
    for &k in ks {
        let acc = score_accuracy(results, ground_truth, k)?;
        text_only.insert(format!("acc@{k}"), acc.text_only);
        text_mg.insert(format!("acc@{k}"), acc.text_mg);
    }
    Ok(EmotionReport {
        model: model.to_string(),
        num_videos: results.len(),
        rows: vec![
            ReportRow {
                input: "text-only".into(),
                accuracy: text_only,
            },
            ReportRow {
                input: "text+micro-gestures".into(),
                accuracy: text_mg,
            },
        ],
    })
}

// ---------------------------------------------------------------------------
// Pipeline

/// Mask one video's transcript, then query `runs` times with the event log.
pub fn run_video(
    client: &ChatClient,
    transcript: &DialogueTranscript,
    mg: &MgEventLog,
    runs: usize,
) -> Result<(MaskedTranscript, VideoRuns)> {
    let masked = mask_transcript(transcript, client)?;
    let runs = infer_runs(client, &masked, Some(mg), runs)?;
    Ok((masked, runs))
}

pub fn infer_runs(
    client: &ChatClient,
    masked: &MaskedTranscript,
    mg: Option<&MgEventLog>,
    runs: usize,
) -> Result<VideoRuns> {
    let prompt = build_inference_prompt(masked, mg);
    let results = (1..=runs)
        .map(|r| parse_confidences(&client.complete(&infer_key(&masked.video_id, r), &prompt)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(VideoRuns {
        video_id: masked.video_id.clone(),
        runs: results,
    })
}

// ---------------------------------------------------------------------------
// Prior-knowledge prompts

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Draw {
    MensSingles,
    WomensSingles,
}

impl Draw {
    pub fn name(self) -> &'static str {
        match self {
            Draw::MensSingles => "Men's Singles",
            Draw::WomensSingles => "Women's Singles",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub draw: Draw,
    pub round: u32,
    pub year: u32,
    pub tournament: String,
    pub player1: String,
    pub player2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorCheckItem {
    MicroGesture(String),
    Match(MatchRecord),
}

pub fn ordinal(n: u32) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

pub fn build_priorcheck_prompts(items: &[PriorCheckItem]) -> Result<Vec<String>> {
    items
        .iter()
        .map(|item| match item {
            PriorCheckItem::MicroGesture(label) => {
                Ok(MG_EMOTION_TEMPLATE.replace("{Micro-Gesture}", canonical_label(label)?))
            }
            PriorCheckItem::Match(m) => {
                if m.player1.trim().is_empty() || m.player2.trim().is_empty() || m.tournament.trim().is_empty() {
                    return Err(EmotionError::InvalidInput("match record has an empty field".into()));
                }
                Ok(MATCH_WINNER_TEMPLATE
                    .replace("{Man's/Women's Singles}", m.draw.name())
                    .replace("{Number}st", &ordinal(m.round))
                    .replace("{Year}", &m.year.to_string())
                    .replace("{Match Name}", &m.tournament)
                    .replace("{Player 1}", &m.player1)
                    .replace("{Player 2}", &m.player2))
            }
        })
        .collect()
}
