#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mgclr")
}

pub fn emotion_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../emotion/tests/fixtures")
}

pub fn mgclr(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).args(args).current_dir(dir).output().expect("spawn mgclr")
}

/// Run and require exit 0; returns the parsed summary line.
pub fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = mgclr(dir, args);
    assert!(
        out.status.success(),
        "mgclr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Manifest with its timestamps removed.
pub fn untimed(path: &Path) -> Value {
    let mut v = read_json(path);
    let obj = v.as_object_mut().unwrap();
    obj.remove("started_unix_ms");
    obj.remove("finished_unix_ms");
    v
}

pub const SMOKE_SPEC: &str = r#"{"samples_per_category": 10, "seed": 5}"#;

/// Synthetic data, both streams pretrained and probed, scores fused, and the
/// emotion harness over the mock fixtures. Returns every manifest, untimed.
pub fn smoke_run(dir: &Path, seed: &str) -> Vec<(String, Value)> {
    std::fs::write(dir.join("spec.json"), SMOKE_SPEC).unwrap();
    let fx = emotion_fixtures();
    let videos = fx.join("videos");
    let mock = fx.join("mock");
    let (videos, mock) = (videos.to_str().unwrap(), mock.to_str().unwrap());
    let steps: Vec<Vec<&str>> = vec![
        vec!["synth-gen", "--spec", "spec.json", "--out", "data/"],
        vec!["pretrain", "--data", "data/dataset.json", "--stream", "spatial", "--epochs", "2", "--out", "sp"],
        vec!["pretrain", "--data", "data/dataset.json", "--stream", "temporal", "--epochs", "2", "--out", "tp"],
        vec!["linear-eval", "--data", "data/dataset.json", "--checkpoint", "sp/encoder.ckpt", "--out", "se"],
        vec!["linear-eval", "--data", "data/dataset.json", "--checkpoint", "tp/encoder.ckpt", "--out", "te"],
        vec!["fuse-eval", "--spatial", "se/scores.json", "--temporal", "te/scores.json", "--out", "fe"],
        vec!["augment-preview", "--in", "data/dataset.json", "--kind", "posterize_time", "--out", "aug/"],
        vec!["emo-mask", "--transcripts", videos, "--mock", mock, "--out", "masked"],
        vec!["emo-infer", "--masked", "masked", "--mg", videos, "--mock", mock, "--runs", "5", "--out", "runs"],
        vec!["emo-score", "--results", "runs", "--mg", videos, "--out", "emo"],
    ];
    let mut manifests = Vec::new();
    for step in steps {
        let mut args = vec!["--seed", seed];
        args.extend(step.iter().copied());
        let summary = ok(dir, &args);
        let path = dir.join(summary["manifest"].as_str().unwrap());
        manifests.push((step[0].to_string(), untimed(&path)));
    }
    manifests
}
