use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mg_core::augment::{augment, AugmentationKind};
use mg_core::checkpoint::{Architecture, Checkpoint};
use mg_core::contrastive::write_loss_csv;
use mg_core::dataset::{load_dataset, write_dataset};
use mg_core::eval::{apply_subject_split, fuse_score_matrices, topk_accuracy, EvalReport, ReportStream, Split, SubjectSplit};
use mg_core::graph::GraphTopology;
use mg_core::model::StreamKind;
use mg_core::pipeline::{evaluate_stream, labels_of, run_pretrain, PretrainPlan};
use mg_core::rng::RandomStream;
use mg_core::skeleton::{resample_sequence, LabeledSample};
use mg_core::synth::{generate, SynthSpec};
use mg_emotion::{
    build_report, infer_runs, mask_transcript, ChatClient, DialogueTranscript, EmotionReport, MaskedTranscript,
    MgEventLog, Outcome, VideoRuns,
};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;
use crate::config::{read_json_value, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{write_json, write_text, ManifestBuilder};

pub struct Context {
    pub seed: Option<u64>,
    pub dry_run: bool,
    pub format: Format,
}

/// Run one subcommand; the returned value is printed as the summary line.
pub fn execute(cli: Cli) -> CliResult<Value> {
    let ctx = Context {
        seed: cli.seed,
        dry_run: cli.dry_run,
        format: cli.format,
    };
    match &cli.command {
        Command::SynthGen(a) => synth_gen(&ctx, a),
        Command::AugmentPreview(a) => augment_preview(&ctx, a),
        Command::Pretrain(a) => pretrain_cmd(&ctx, a),
        Command::LinearEval(a) => linear_eval(&ctx, a),
        Command::FuseEval(a) => fuse_eval(&ctx, a),
        Command::EmoMask(a) => emo_mask(&ctx, a),
        Command::EmoInfer(a) => emo_infer(&ctx, a),
        Command::EmoScore(a) => emo_score(&ctx, a),
    }
}

fn plan(command: &str, config: Value, inputs: &[&Path], outputs: &[PathBuf]) -> Value {
    json!({
        "command": command,
        "dry_run": true,
        "config": config,
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    })
}

fn summary(command: &str, manifest_path: &Path, metrics: &BTreeMap<String, Value>) -> Value {
    json!({"command": command, "manifest": manifest_path.display().to_string(), "metrics": metrics})
}

fn manifest_path(dir: &Path, command: &str) -> PathBuf {
    dir.join(format!("{command}.run.json"))
}

/// A `.json` path is used as is; anything else is a directory receiving `dataset.json`.
fn dataset_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.to_path_buf()
    } else {
        out.join("dataset.json")
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn require_exists(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::config(path, "no such file or directory"))
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

// ---------------------------------------------------------------------------
// Skeleton data and training

fn synth_gen(ctx: &Context, a: &SynthGenArgs) -> CliResult<Value> {
    let mut spec = if a.spec == "default" {
        SynthSpec::default()
    } else {
        let path = Path::new(&a.spec);
        serde_json::from_value::<SynthSpec>(read_json_value(path)?).map_err(|e| CliError::config(path, e))?
    };
    if let Some(seed) = ctx.seed {
        spec.seed = seed;
    }
    spec.validate().map_err(|e| match a.spec.as_str() {
        "default" => CliError::from(e),
        path => CliError::config(path, e),
    })?;
    let dataset = dataset_path(&a.out);
    let dir = parent_dir(&dataset);
    let run_path = manifest_path(&dir, "synth-gen");
    if ctx.dry_run {
        return Ok(plan("synth-gen", to_value(&spec), &[], &[dataset, run_path]));
    }
    let data = generate(&spec)?;
    let payload = write_dataset(&dataset, &data)?;
    let mut m = ManifestBuilder::start("synth-gen", Some(spec.seed), to_value(&spec));
    m.artifact("dataset", &dataset);
    m.artifact("payload", &payload);
    m.metric("num_samples", data.len());
    m.metric("num_categories", spec.num_categories);
    m.metric("num_subjects", spec.num_subjects);
    let manifest = m.finish(&run_path)?;
    Ok(summary("synth-gen", &run_path, &manifest.metrics))
}

fn seed_of(ctx: &Context, cfg: &RunConfig) -> u64 {
    ctx.seed.unwrap_or(cfg.train.seed)
}

fn augment_preview(ctx: &Context, a: &AugmentPreviewArgs) -> CliResult<Value> {
    let cfg = RunConfig::load(a.config.preset.as_deref(), None, a.config.config.as_deref())?;
    let kind = AugmentationKind::from_str(&a.kind).map_err(|e| CliError::invalid(e.to_string()))?;
    require_exists(&a.input)?;
    let seed = seed_of(ctx, &cfg);
    let out = dataset_path(&a.out);
    let run_path = manifest_path(&parent_dir(&out), "augment-preview");
    let snapshot = json!({"kind": kind.name(), "augmentation": cfg.augmentation, "seed": seed});
    if ctx.dry_run {
        return Ok(plan("augment-preview", snapshot, &[&a.input], &[out, run_path]));
    }
    let data = load_dataset(&a.input)?;
    let mut root = RandomStream::new(seed);
    let mut changed = 0usize;
    let mut augmented = Vec::with_capacity(data.len());
    for (i, s) in data.iter().enumerate() {
        let sequence = augment(&s.sequence, kind, &cfg.augmentation, &mut root.fork(i as u64))?;
        changed += usize::from(sequence != s.sequence);
        augmented.push(LabeledSample {
            sequence,
            ..s.clone()
        });
    }
    let payload = write_dataset(&out, &augmented)?;
    let mut m = ManifestBuilder::start("augment-preview", Some(seed), snapshot);
    m.artifact("dataset", &out);
    m.artifact("payload", &payload);
    m.metric("num_samples", augmented.len());
    m.metric("num_changed", changed);
    let manifest = m.finish(&run_path)?;
    Ok(summary("augment-preview", &run_path, &manifest.metrics))
}

/// Lower half of the sorted subject ids (at least one) trains; the rest test.
fn default_split(data: &[LabeledSample]) -> SubjectSplit {
    let subjects: Vec<u32> = data.iter().map(|s| s.subject_id).collect::<BTreeSet<_>>().into_iter().collect();
    let n = (subjects.len() / 2).max(1).min(subjects.len());
    SubjectSplit {
        train_subjects: subjects[..n].to_vec(),
        test_subjects: None,
    }
}

fn resolve_split(cfg: &RunConfig, flag: Option<&Vec<u32>>, data: &[LabeledSample]) -> CliResult<(SubjectSplit, Split)> {
    let chosen = match flag {
        Some(ids) => SubjectSplit {
            train_subjects: ids.clone(),
            test_subjects: None,
        },
        None => cfg.split.clone().unwrap_or_else(|| default_split(data)),
    };
    let split = apply_subject_split(data, &chosen)?;
    for w in &split.warnings {
        eprintln!("warning: {w}");
    }
    Ok((chosen, split))
}

fn joints_of(data: &[LabeledSample]) -> CliResult<usize> {
    data.first()
        .map(|s| s.sequence.num_joints())
        .ok_or_else(|| CliError::Run("dataset is empty".into()))
}

fn architecture(cfg: &RunConfig, joints: usize) -> CliResult<Architecture> {
    Ok(match cfg.stream {
        StreamKind::Spatial => {
            let topology = match &cfg.topology {
                Some(path) => GraphTopology::load(path).map_err(|e| CliError::config(path, e))?,
                None if joints == 15 => GraphTopology::upper_body_15(),
                None => {
                    return Err(CliError::invalid(format!(
                        "{joints}-joint skeletons need a `topology` file in the config"
                    )))
                }
            };
            if topology.joint_count() != joints {
                return Err(CliError::invalid(format!(
                    "topology has {} joints but the data has {joints}",
                    topology.joint_count()
                )));
            }
            Architecture::Spatial {
                config: cfg.spatial.clone(),
                topology,
            }
        }
        StreamKind::Temporal => {
            let mut config = cfg.temporal.clone();
            config.input_dim = joints * 3;
            Architecture::Temporal { config }
        }
    })
}

/// Bring every sequence to the length the architecture expects.
fn conform(data: Vec<LabeledSample>, arch: &Architecture) -> CliResult<Vec<LabeledSample>> {
    let target = match arch {
        Architecture::Spatial { config, .. } => Some(config.frames),
        Architecture::Temporal { .. } => {
            let lengths: BTreeSet<usize> = data.iter().map(|s| s.sequence.num_frames()).collect();
            (lengths.len() > 1).then(|| *lengths.iter().max().expect("non-empty"))
        }
    };
    let Some(t) = target else { return Ok(data) };
    data.into_iter()
        .map(|s| {
            if s.sequence.num_frames() == t {
                return Ok(s);
            }
            Ok(LabeledSample {
                sequence: resample_sequence(&s.sequence, t)?,
                ..s
            })
        })
        .collect()
}

fn pretrain_cmd(ctx: &Context, a: &PretrainArgs) -> CliResult<Value> {
    let stream = a.stream.as_deref().map(StreamKind::from_str).transpose()?;
    let mut cfg = RunConfig::load(a.config.preset.as_deref(), stream, a.config.config.as_deref())?;
    if let Some(s) = stream {
        cfg.stream = s;
    }
    let t = &mut cfg.train;
    t.epochs = a.epochs.unwrap_or(t.epochs);
    t.batch_size = a.batch_size.unwrap_or(t.batch_size);
    t.learning_rate = a.lr.unwrap_or(t.learning_rate);
    t.momentum = a.momentum.unwrap_or(t.momentum);
    t.queue_size = a.queue_size.unwrap_or(t.queue_size);
    t.temperature = a.temperature.unwrap_or(t.temperature);
    t.seed = ctx.seed.unwrap_or(t.seed);
    if let Some(p) = &a.policy {
        cfg.policy = p.clone();
    }
    cfg.validate()?;
    require_exists(&a.data)?;
    let data = load_dataset(&a.data)?;
    let arch = architecture(&cfg, joints_of(&data)?)?;
    let (chosen, split) = resolve_split(&cfg, None, &data)?;
    cfg.split = Some(chosen);
    let train = conform(split.train, &arch)?;
    let ckpt_path = a.out.join("encoder.ckpt");
    let loss_path = a.out.join("loss.csv");
    let run_path = manifest_path(&a.out, "pretrain");
    let pretrain_plan = PretrainPlan {
        architecture: arch,
        train: cfg.train.clone(),
        augmentation: cfg.augmentation.clone(),
        policy: cfg.policy()?,
    };
    let snapshot = to_value(&cfg);
    if ctx.dry_run {
        let mut p = plan("pretrain", snapshot, &[&a.data], &[ckpt_path, loss_path, run_path]);
        p["num_train_samples"] = train.len().into();
        return Ok(p);
    }
    let run = run_pretrain(&pretrain_plan, &train)?;
    run.checkpoint.save(&ckpt_path)?;
    write_loss_csv(&loss_path, &run.outcome.loss_history)?;
    let history = &run.outcome.loss_history;
    let mut m = ManifestBuilder::start("pretrain", Some(cfg.train.seed), snapshot);
    m.artifact("checkpoint", &ckpt_path);
    m.artifact("loss_history", &loss_path);
    m.metric("stream", cfg.stream.name());
    m.metric("num_train_samples", train.len());
    m.metric("epochs_run", history.len());
    m.metric("stopped_early", run.outcome.stopped_early);
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        m.metric("first_epoch_loss", first.mean_loss);
        m.metric("final_epoch_loss", last.mean_loss);
    }
    let manifest = m.finish(&run_path)?;
    Ok(summary("pretrain", &run_path, &manifest.metrics))
}

/// Per-sample class probabilities of one evaluated split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFile {
    pub stream: ReportStream,
    pub num_categories: usize,
    pub video_ids: Vec<String>,
    pub labels: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreFile {
    fn matrix(&self) -> CliResult<Array2<f64>> {
        let rows = self.scores.len();
        let flat: Vec<f64> = self.scores.iter().flatten().copied().collect();
        if rows != self.labels.len() || rows != self.video_ids.len() || flat.len() != rows * self.num_categories {
            return Err(CliError::Run("score file rows, labels and categories disagree".into()));
        }
        Ok(Array2::from_shape_vec((rows, self.num_categories), flat).expect("checked shape"))
    }

    fn load(path: &Path) -> CliResult<Self> {
        require_exists(path)?;
        serde_json::from_value(read_json_value(path)?).map_err(|e| CliError::config(path, e))
    }
}

fn write_report(ctx: &Context, dir: &Path, report: &EvalReport) -> CliResult<PathBuf> {
    let path = dir.join(format!("report.{}", ctx.format.extension()));
    match ctx.format {
        Format::Json => write_json(&path, report)?,
        Format::Csv => {
            let cats = report.per_category.len();
            let mut header = vec!["stream".to_string(), "num_samples".into(), "top1".into(), "top5".into()];
            header.extend((0..cats).map(|c| format!("category_{c}")));
            let stream = to_value(&report.stream);
            let mut row = vec![
                stream.as_str().unwrap_or_default().to_string(),
                report.num_samples.to_string(),
                report.top1.to_string(),
                report.top5.to_string(),
            ];
            row.extend(report.per_category.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            write_text(&path, &format!("{}\n{}\n", header.join(","), row.join(",")))?;
        }
    }
    Ok(path)
}

fn num_categories(data: &[LabeledSample]) -> usize {
    data.iter().map(|s| s.category + 1).max().unwrap_or(0)
}

fn linear_eval(ctx: &Context, a: &LinearEvalArgs) -> CliResult<Value> {
    let mut cfg = RunConfig::load(a.config.preset.as_deref(), None, a.config.config.as_deref())?;
    cfg.validate()?;
    require_exists(&a.data)?;
    require_exists(&a.checkpoint)?;
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let encoder = ckpt.encoder()?;
    let data = load_dataset(&a.data)?;
    let categories = num_categories(&data);
    let (chosen, split) = resolve_split(&cfg, a.train_subjects.as_ref(), &data)?;
    cfg.split = Some(chosen);
    cfg.stream = encoder.stream();
    let seed = seed_of(ctx, &cfg);
    let report_path = a.out.join(format!("report.{}", ctx.format.extension()));
    let scores_path = a.out.join("scores.json");
    let run_path = manifest_path(&a.out, "linear-eval");
    let snapshot = json!({"probe": cfg.probe, "split": cfg.split, "seed": seed, "architecture": ckpt.architecture});
    if ctx.dry_run {
        return Ok(plan("linear-eval", snapshot, &[&a.data, &a.checkpoint], &[report_path, scores_path, run_path]));
    }
    let train = conform(split.train, &ckpt.architecture)?;
    let test = conform(split.test, &ckpt.architecture)?;
    let eval = evaluate_stream(&encoder, &ckpt.params, &train, &test, categories, &cfg.probe, seed)?;
    let report_path = write_report(ctx, &a.out, &eval.report)?;
    let scores = ScoreFile {
        stream: encoder.stream().into(),
        num_categories: categories,
        video_ids: test.iter().map(|s| s.video_id.clone()).collect(),
        labels: labels_of(&test),
        scores: eval.test_scores.rows().into_iter().map(|r| r.to_vec()).collect(),
    };
    write_json(&scores_path, &scores)?;
    let mut m = ManifestBuilder::start("linear-eval", Some(seed), snapshot);
    m.artifact("report", &report_path);
    m.artifact("scores", &scores_path);
    m.metric("stream", encoder.stream().name());
    m.metric("top1", eval.report.top1);
    m.metric("top5", eval.report.top5);
    m.metric("train_top1", eval.train_top1);
    m.metric("num_train_samples", train.len());
    m.metric("num_test_samples", test.len());
    let manifest = m.finish(&run_path)?;
    Ok(summary("linear-eval", &run_path, &manifest.metrics))
}

fn fuse_eval(ctx: &Context, a: &FuseEvalArgs) -> CliResult<Value> {
    let spatial = ScoreFile::load(&a.spatial)?;
    let temporal = ScoreFile::load(&a.temporal)?;
    if spatial.video_ids != temporal.video_ids || spatial.labels != temporal.labels {
        return Err(CliError::invalid("score files cover different samples or labels"));
    }
    if spatial.num_categories != temporal.num_categories {
        return Err(CliError::invalid("score files disagree on the number of categories"));
    }
    let report_path = a.out.join(format!("report.{}", ctx.format.extension()));
    let scores_path = a.out.join("scores.json");
    let run_path = manifest_path(&a.out, "fuse-eval");
    if ctx.dry_run {
        return Ok(plan("fuse-eval", Value::Null, &[&a.spatial, &a.temporal], &[report_path, scores_path, run_path]));
    }
    let (sm, tm) = (spatial.matrix()?, temporal.matrix()?);
    let fused = fuse_score_matrices(&sm, &tm)?;
    let report = EvalReport::from_scores(ReportStream::Fused, &fused, &spatial.labels)?;
    let report_path = write_report(ctx, &a.out, &report)?;
    write_json(
        &scores_path,
        &ScoreFile {
            stream: ReportStream::Fused,
            scores: fused.rows().into_iter().map(|r| r.to_vec()).collect(),
            ..spatial.clone()
        },
    )?;
    let mut m = ManifestBuilder::start("fuse-eval", ctx.seed, Value::Null);
    m.artifact("report", &report_path);
    m.artifact("scores", &scores_path);
    m.metric("top1", report.top1);
    m.metric("top5", report.top5);
    m.metric("spatial_top1", topk_accuracy(&sm, &spatial.labels, 1)?);
    m.metric("temporal_top1", topk_accuracy(&tm, &temporal.labels, 1)?);
    let manifest = m.finish(&run_path)?;
    Ok(summary("fuse-eval", &run_path, &manifest.metrics))
}

// ---------------------------------------------------------------------------
// Emotion harness

fn chat_client(chat: &ChatArgs) -> CliResult<ChatClient> {
    let endpoint = match &chat.config {
        Some(path) => RunConfig::load(None, None, Some(path))?.endpoint,
        None => RunConfig::preset("imigue-desk", StreamKind::Spatial)?.endpoint,
    };
    if let Some(dir) = &chat.mock {
        require_exists(dir)?;
        let mut client = ChatClient::mock(dir);
        client.endpoint = endpoint;
        return Ok(client);
    }
    if chat.live {
        return live_client(endpoint);
    }
    Err(CliError::invalid("no chat backend: pass --mock <dir> or --live"))
}

#[cfg(feature = "live")]
fn live_client(endpoint: mg_emotion::EndpointConfig) -> CliResult<ChatClient> {
    Ok(ChatClient::live(endpoint))
}

#[cfg(not(feature = "live"))]
fn live_client(_endpoint: mg_emotion::EndpointConfig) -> CliResult<ChatClient> {
    Err(CliError::invalid("this build has no live transport (rebuild with --features live)"))
}

/// Files in `dir` ending in `suffix`, sorted, with the stripped stem.
fn files_with_suffix(dir: &Path, suffix: &str) -> CliResult<Vec<(String, PathBuf)>> {
    require_exists(dir)?;
    if dir.is_file() {
        let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let stem = name.strip_suffix(suffix).unwrap_or(name).to_string();
        return Ok(vec![(stem, dir.to_path_buf())]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if let Some(stem) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(suffix)) {
            out.push((stem.to_string(), path.clone()));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(CliError::config(dir, format!("no *{suffix} files")));
    }
    Ok(out)
}

fn backend_name(chat: &ChatArgs) -> &'static str {
    if chat.mock.is_some() {
        "mock"
    } else {
        "live"
    }
}

fn emo_mask(ctx: &Context, a: &EmoMaskArgs) -> CliResult<Value> {
    let client = chat_client(&a.chat)?;
    let files = files_with_suffix(&a.transcripts, ".transcript.json")?;
    let outputs: Vec<PathBuf> = files.iter().map(|(v, _)| a.out.join(format!("{v}.masked.json"))).collect();
    let run_path = manifest_path(&a.out, "emo-mask");
    let snapshot = json!({"endpoint": client.endpoint, "backend": backend_name(&a.chat)});
    if ctx.dry_run {
        let mut outs = outputs;
        outs.push(run_path);
        return Ok(plan("emo-mask", snapshot, &[&a.transcripts], &outs));
    }
    let mut m = ManifestBuilder::start("emo-mask", ctx.seed, snapshot);
    for ((_, path), out) in files.iter().zip(&outputs) {
        let transcript = DialogueTranscript::load(path)?;
        let masked = mask_transcript(&transcript, &client)?;
        write_json(out, &masked)?;
        m.artifact(&masked.video_id, out);
    }
    m.metric("num_videos", files.len());
    m.metric("num_requests", client.exchanges().len());
    let manifest = m.finish(&run_path)?;
    Ok(summary("emo-mask", &run_path, &manifest.metrics))
}

fn emo_infer(ctx: &Context, a: &EmoInferArgs) -> CliResult<Value> {
    if a.runs == 0 {
        return Err(CliError::invalid("--runs must be >= 1"));
    }
    let client = chat_client(&a.chat)?;
    let files = files_with_suffix(&a.masked, ".masked.json")?;
    require_exists(&a.mg)?;
    let run_path = manifest_path(&a.out, "emo-infer");
    let snapshot = json!({"endpoint": client.endpoint, "backend": backend_name(&a.chat), "runs": a.runs});
    if ctx.dry_run {
        let mut outs: Vec<PathBuf> = files.iter().map(|(v, _)| a.out.join(format!("{v}.runs.json"))).collect();
        outs.push(run_path);
        return Ok(plan("emo-infer", snapshot, &[&a.masked, &a.mg], &outs));
    }
    let mut m = ManifestBuilder::start("emo-infer", ctx.seed, snapshot);
    for (_, path) in &files {
        let masked = MaskedTranscript::load(path)?;
        let mg_path = a.mg.join(format!("{}.mg.json", masked.video_id));
        require_exists(&mg_path)?;
        let mg = MgEventLog::load(&mg_path)?;
        let runs = infer_runs(&client, &masked, Some(&mg), a.runs)?;
        let out = a.out.join(format!("{}.runs.json", masked.video_id));
        write_json(&out, &runs)?;
        m.artifact(&masked.video_id, &out);
    }
    m.metric("num_videos", files.len());
    m.metric("num_requests", client.exchanges().len());
    let manifest = m.finish(&run_path)?;
    Ok(summary("emo-infer", &run_path, &manifest.metrics))
}

fn write_emotion_report(ctx: &Context, dir: &Path, report: &EmotionReport) -> CliResult<PathBuf> {
    let path = dir.join(format!("report.{}", ctx.format.extension()));
    match ctx.format {
        Format::Json => write_json(&path, report)?,
        Format::Csv => {
            let keys: Vec<&String> = report.rows.first().map(|r| r.accuracy.keys().collect()).unwrap_or_default();
            let mut text = format!("input,{}\n", keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","));
            for row in &report.rows {
                let cells: Vec<String> = keys.iter().map(|k| row.accuracy[*k].to_string()).collect();
                text.push_str(&format!("{},{}\n", row.input, cells.join(",")));
            }
            write_text(&path, &text)?;
        }
    }
    Ok(path)
}

fn emo_score(ctx: &Context, a: &EmoScoreArgs) -> CliResult<Value> {
    if a.k.is_empty() || a.k.contains(&0) {
        return Err(CliError::invalid("--k needs positive integers"));
    }
    let files = files_with_suffix(&a.results, ".runs.json")?;
    require_exists(&a.mg)?;
    let report_path = a.out.join(format!("report.{}", ctx.format.extension()));
    let run_path = manifest_path(&a.out, "emo-score");
    let snapshot = json!({"model": a.model, "k": a.k});
    if ctx.dry_run {
        return Ok(plan("emo-score", snapshot, &[&a.results, &a.mg], &[report_path, run_path]));
    }
    let mut results = Vec::with_capacity(files.len());
    let mut truth: BTreeMap<String, Outcome> = BTreeMap::new();
    for (_, path) in &files {
        let runs: VideoRuns = mg_emotion::read_json(path)?;
        let mg_path = a.mg.join(format!("{}.mg.json", runs.video_id));
        require_exists(&mg_path)?;
        truth.insert(runs.video_id.clone(), MgEventLog::load(&mg_path)?.ground_truth);
        results.push(runs);
    }
    let report = build_report(&a.model, &results, &truth, &a.k)?;
    let report_path = write_emotion_report(ctx, &a.out, &report)?;
    let mut m = ManifestBuilder::start("emo-score", ctx.seed, snapshot);
    m.artifact("report", &report_path);
    m.metric("num_videos", report.num_videos);
    for row in &report.rows {
        for (k, v) in &row.accuracy {
            m.metric(&format!("{} {k}", row.input), *v);
        }
    }
    let manifest = m.finish(&run_path)?;
    Ok(summary("emo-score", &run_path, &manifest.metrics))
}
