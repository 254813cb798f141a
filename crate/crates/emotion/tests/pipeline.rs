mod common;

use std::collections::BTreeMap;
use std::fs;

use common::{counted_mock, fixtures, CountingTransport};
use mg_emotion::prompts::{INFERENCE_PROMPT, MASKING_PROMPT};
use mg_emotion::*;

const VIDEOS: [&str; 4] = ["v001", "v002", "v003", "v004"];

fn load(video: &str) -> (DialogueTranscript, MgEventLog) {
    let dir = fixtures().join("videos");
    (
        DialogueTranscript::load(&dir.join(format!("{video}.transcript.json"))).unwrap(),
        MgEventLog::load(&dir.join(format!("{video}.mg.json"))).unwrap(),
    )
}

fn run_all(client: &ChatClient) -> (Vec<VideoRuns>, BTreeMap<String, Outcome>) {
    let mut results = Vec::new();
    let mut truth = BTreeMap::new();
    for v in VIDEOS {
        let (transcript, mg) = load(v);
        let (_, runs) = run_video(client, &transcript, &mg, 5).unwrap();
        truth.insert(v.to_string(), mg.ground_truth);
        results.push(runs);
    }
    (results, truth)
}

#[test]
fn mock_pipeline_reproduces_expected_accuracy() {
    let (client, counter) = counted_mock("mock");
    let (results, truth) = run_all(&client);
    let expected: BTreeMap<String, BTreeMap<String, f64>> =
        serde_json::from_str(&fs::read_to_string(fixtures().join("expected_accuracy.json")).unwrap()).unwrap();
    for k in [1, 3, 5] {
        let acc = score_accuracy(&results, &truth, k).unwrap();
        let key = format!("acc@{k}");
        assert_eq!(acc.text_only, expected["text_only"][&key], "text-only {key}");
        assert_eq!(acc.text_mg, expected["text_mg"][&key], "text+mg {key}");
    }
    assert_eq!(counter.count(), 0);
    assert_eq!(client.exchanges().len(), VIDEOS.len() * 6);
}

#[test]
fn pipeline_is_byte_deterministic() {
    let (a, _) = counted_mock("mock");
    let (b, _) = counted_mock("mock");
    let ra = run_all(&a);
    let rb = run_all(&b);
    assert_eq!(ra, rb);
    assert_eq!(a.exchanges(), b.exchanges());
}

#[test]
fn report_has_one_row_per_input() {
    let (client, _) = counted_mock("mock");
    let (results, truth) = run_all(&client);
    let report = build_report("mock", &results, &truth, &[1, 3, 5]).unwrap();
    assert_eq!(report.num_videos, 4);
    assert_eq!(report.rows[0].input, "text-only");
    assert_eq!(report.rows[1].accuracy["acc@5"], 85.0);
    let keys: Vec<&String> = report.rows[0].accuracy.keys().collect();
    assert_eq!(keys, ["acc@1", "acc@3", "acc@5"]);
}

#[test]
fn empty_transcript_is_rejected_before_any_call() {
    let counter = CountingTransport::default();
    let client = ChatClient::new(EndpointConfig::default(), Box::new(counter.clone()));
    let empty = DialogueTranscript {
        video_id: "v999".into(),
        entries: vec![],
    };
    assert!(matches!(mask_transcript(&empty, &client), Err(EmotionError::InvalidInput(_))));
    assert_eq!(counter.count(), 0);
    assert!(client.exchanges().is_empty());
}

#[test]
fn three_row_fixture_aligns_with_transcript() {
    let (client, _) = counted_mock("mock");
    let (transcript, _) = load("v002");
    let masked = mask_transcript(&transcript, &client).unwrap();
    assert_eq!(masked.entries.len(), 3);
    for (m, o) in masked.entries.iter().zip(&transcript.entries) {
        assert_eq!((m.t, m.speaker), (o.t, o.speaker));
    }
    assert_eq!(masked.entries[0].text, "[MASK] afternoon out there. What went [MASK] in the tiebreak?");
    let exchange = &client.exchanges()[0];
    assert_eq!(exchange.key, "mask/v002.md");
    assert!(exchange.prompt.starts_with(MASKING_PROMPT));
    assert!(exchange.prompt.contains("| 11.75 | Reporter: Will you stay for the doubles event? |"));
}

#[test]
fn speaker_prefixes_and_clock_timestamps_are_accepted() {
    let (client, _) = counted_mock("mock");
    let (t1, _) = load("v001");
    let m1 = mask_transcript(&t1, &client).unwrap();
    assert_eq!(m1.entries[1].text, "Thank you. I felt [MASK] and my serve [MASK].");
    let (t4, _) = load("v004");
    let m4 = mask_transcript(&t4, &client).unwrap();
    assert_eq!(m4.entries[3].t, 12.0);
}

#[test]
fn malformed_tables_are_reported() {
    let (client, _) = counted_mock("malformed_mask");
    let (t2, _) = load("v002");
    match mask_transcript(&t2, &client) {
        Err(EmotionError::TableParse { reason, raw }) => {
            assert!(reason.contains("'|'"), "{reason}");
            assert!(raw.contains("5 I [MASK] too many first serves"));
        }
        other => panic!("expected a table parse error, got {other:?}"),
    }
    let (t3, _) = load("v003");
    assert!(matches!(
        mask_transcript(&t3, &client),
        Err(EmotionError::Alignment { expected: 4, found: 3 })
    ));
}

#[test]
fn inference_prompt_matches_golden_files() {
    let (client, _) = counted_mock("mock");
    let (transcript, mg) = load("v001");
    let masked = mask_transcript(&transcript, &client).unwrap();
    let golden = fs::read_to_string(fixtures().join("golden/v001_inference_prompt.txt")).unwrap();
    assert_eq!(build_inference_prompt(&masked, Some(&mg)), golden);
    let plain = build_inference_prompt(&masked, None);
    assert_eq!(
        plain,
        fs::read_to_string(fixtures().join("golden/v001_inference_prompt_text_only.txt")).unwrap()
    );
    assert!(!plain.contains('{'));
    assert!(plain.starts_with(INFERENCE_PROMPT));
    assert!(plain.contains("ensure that the sum of the confidence levels is 100"));
    assert!(!golden.contains("ground_truth") && !golden.contains("win\""));
}

#[test]
fn every_malformed_response_is_rejected() {
    let dir = fixtures().join("malformed");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        assert!(parse_confidences(&text).is_err(), "{} parsed", path.display());
        seen += 1;
    }
    assert!(seen >= 8);
    let sum = fs::read_to_string(dir.join("sum_mismatch.txt")).unwrap();
    let err = parse_confidences(&sum).unwrap_err();
    assert!(err.to_string().contains("confidence sum ≠ 100"), "{err}");
}

#[test]
fn mock_without_fixture_fails_cleanly() {
    let (client, counter) = counted_mock("mock");
    let transcript = DialogueTranscript {
        video_id: "absent".into(),
        entries: vec![Utterance {
            t: 0.0,
            speaker: Speaker::Player,
            text: "Hello".into(),
        }],
    };
    assert!(matches!(mask_transcript(&transcript, &client), Err(EmotionError::MissingFixture(_))));
    assert_eq!(counter.count(), 0);
}

#[test]
fn event_logs_validate_labels_and_order() {
    let bad_label = r#"{"video_id": "x", "ground_truth": "win", "events": [{"t": 1.0, "label": "Juggling"}]}"#;
    let log: MgEventLog = serde_json::from_str(bad_label).unwrap();
    assert!(matches!(log.validated(), Err(EmotionError::UnknownLabel(_))));
    let unordered = r#"{"video_id": "x", "ground_truth": "lose", "events": [{"t": 2.0, "label": "nodding"}, {"t": 1.0, "label": "Nodding"}]}"#;
    let log: MgEventLog = serde_json::from_str(unordered).unwrap();
    assert!(log.validated().is_err());
    let fine = r#"{"video_id": "x", "ground_truth": "lose", "events": [{"t": 1.0, "label": "  covering   FACE "}]}"#;
    let log: MgEventLog = serde_json::from_str(fine).unwrap();
    assert_eq!(log.validated().unwrap().events[0].label, "Covering face");
}
