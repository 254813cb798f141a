//! Pretrain, embed and probe one stream end to end.

use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentationConfig, AugmentationPolicy};
use crate::checkpoint::{Architecture, Checkpoint, Encoder};
use crate::contrastive::{pretrain, PretrainOutcome, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{topk_accuracy, train_linear_probe, EvalReport, ProbeSchedule};
use crate::model::{StreamKind, StreamModel};
use crate::nn::{ParamLayout, ParamSet};
use crate::rng::RandomStream;
use crate::skeleton::{LabeledSample, SkeletonSequence};

const EMBED_CHUNK: usize = 64;

pub fn embed_samples<M: StreamModel>(model: &M, params: &ParamSet, samples: &[LabeledSample]) -> Result<Array2<f64>> {
    if samples.is_empty() {
        return Ok(Array2::zeros((0, model.encoder_dim())));
    }
    let refs: Vec<&SkeletonSequence> = samples.iter().map(|s| &s.sequence).collect();
    let blocks = refs
        .chunks(EMBED_CHUNK)
        .map(|c| model.embed(params, c))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    Ok(concatenate(Axis(0), &views).expect("equal widths"))
}

impl Encoder {
    pub fn stream(&self) -> StreamKind {
        match self {
            Encoder::Spatial(_) => StreamKind::Spatial,
            Encoder::Temporal(_) => StreamKind::Temporal,
        }
    }

    pub fn layout(&self) -> &ParamLayout {
        match self {
            Encoder::Spatial(m) => m.layout(),
            Encoder::Temporal(m) => m.layout(),
        }
    }

    /// Parameters drawn the same way the trainer draws its initial query encoder.
    pub fn init_params(&self, seed: u64) -> ParamSet {
        self.layout().init(&mut RandomStream::new(seed).fork(1))
    }

    pub fn embed(&self, params: &ParamSet, samples: &[LabeledSample]) -> Result<Array2<f64>> {
        match self {
            Encoder::Spatial(m) => embed_samples(m, params, samples),
            Encoder::Temporal(m) => embed_samples(m, params, samples),
        }
    }

    pub fn pretrain(
        &self,
        data: &[LabeledSample],
        policy: &AugmentationPolicy,
        augmentation: &AugmentationConfig,
        config: &TrainConfig,
    ) -> Result<PretrainOutcome> {
        match self {
            Encoder::Spatial(m) => pretrain(m, data, policy, augmentation, config),
            Encoder::Temporal(m) => pretrain(m, data, policy, augmentation, config),
        }
    }
}

/// Probe results for one stream on a train/test split.
#[derive(Debug, Clone)]
pub struct StreamEval {
    pub train_top1: f64,
    pub report: EvalReport,
    /// Class probabilities of the test samples, rows in test order.
    pub test_scores: Array2<f64>,
    pub probe_loss: Vec<f64>,
}

pub fn labels_of(samples: &[LabeledSample]) -> Vec<usize> {
    samples.iter().map(|s| s.category).collect()
}

/// Fit a probe on frozen train features and score the test split.
pub fn evaluate_stream(
    encoder: &Encoder,
    params: &ParamSet,
    train: &[LabeledSample],
    test: &[LabeledSample],
    num_categories: usize,
    schedule: &ProbeSchedule,
    seed: u64,
) -> Result<StreamEval> {
    if test.is_empty() {
        return Err(Error::Degenerate("test split is empty".into()));
    }
    let (ytr, yte) = (labels_of(train), labels_of(test));
    let ftr = encoder.embed(params, train)?;
    let fte = encoder.embed(params, test)?;
    let fit = train_linear_probe(&ftr, &ytr, num_categories, schedule, seed)?;
    let train_top1 = topk_accuracy(&fit.probe.scores(&ftr)?, &ytr, 1)?;
    let test_scores = fit.probe.scores(&fte)?;
    let report = EvalReport::from_scores(encoder.stream().into(), &test_scores, &yte)?;
    Ok(StreamEval {
        train_top1,
        report,
        test_scores,
        probe_loss: fit.loss_history,
    })
}

/// Everything one pretraining run needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainPlan {
    pub architecture: Architecture,
    pub train: TrainConfig,
    pub augmentation: AugmentationConfig,
    pub policy: AugmentationPolicy,
}

pub struct PretrainRun {
    pub checkpoint: Checkpoint,
    pub outcome: PretrainOutcome,
}

pub fn run_pretrain(plan: &PretrainPlan, data: &[LabeledSample]) -> Result<PretrainRun> {
    plan.train.validate()?;
    let encoder = Encoder::build(&plan.architecture)?;
    let outcome = encoder.pretrain(data, &plan.policy, &plan.augmentation, &plan.train)?;
    let checkpoint = Checkpoint {
        architecture: plan.architecture.clone(),
        metadata: serde_json::json!({
            "seed": plan.train.seed,
            "epochs_run": outcome.loss_history.len(),
            "stopped_early": outcome.stopped_early,
        }),
        params: outcome.query_params.clone(),
    };
    Ok(PretrainRun { checkpoint, outcome })
}
