//! Linear evaluation on frozen embeddings, top-k metrics, score fusion and
//! cross-subject splits.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StreamKind;
use crate::nn::{log_sum_exp, softmax_rows};
use crate::rng::RandomStream;
use crate::skeleton::LabeledSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSchedule {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Epochs after which the learning rate is divided by `decay`.
    pub milestones: Vec<usize>,
    pub decay: f64,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub weight_decay: f64,
    /// Standardize features with training-set statistics before the linear layer.
    pub standardize: bool,
}

impl Default for ProbeSchedule {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 0.1,
            momentum: 0.9,
            milestones: vec![50, 80],
            decay: 10.0,
            batch_size: None,
            weight_decay: 0.0,
            standardize: true,
        }
    }
}

impl ProbeSchedule {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let drops = self.milestones.iter().filter(|&&m| epoch >= m).count();
        self.learning_rate / self.decay.powi(drops as i32)
    }

    pub fn lr_trace(&self) -> Vec<f64> {
        (0..self.epochs).map(|e| self.lr_at(e)).collect()
    }
}

/// Softmax regression head on frozen features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    /// `C_enc x num_categories`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub feature_mean: Option<Array1<f64>>,
    pub feature_scale: Option<Array1<f64>>,
}

impl LinearProbe {
    pub fn num_categories(&self) -> usize {
        self.bias.len()
    }

    fn prepare(&self, features: &Array2<f64>) -> Array2<f64> {
        match (&self.feature_mean, &self.feature_scale) {
            (Some(m), Some(s)) => (features - m) / s,
            _ => features.clone(),
        }
    }

    pub fn logits(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.weight.nrows() {
            return Err(Error::Dimension {
                context: "probe features",
                expected: self.weight.nrows(),
                found: features.ncols(),
            });
        }
        Ok(self.prepare(features).dot(&self.weight) + &self.bias)
    }

    /// Per-sample softmax scores.
    pub fn scores(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(softmax_rows(&self.logits(features)?))
    }
}

fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    let total: f64 = logits
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &y)| log_sum_exp(row.iter().copied()) - row[y])
        .sum();
    total / labels.len() as f64
}

#[derive(Debug, Clone)]
pub struct ProbeFit {
    pub probe: LinearProbe,
    /// Full-training-set cross-entropy after each epoch.
    pub loss_history: Vec<f64>,
    pub lr_history: Vec<f64>,
}

/// Fit a softmax-regression probe with momentum SGD under `schedule`.
pub fn train_linear_probe(
    features: &Array2<f64>,
    labels: &[usize],
    num_categories: usize,
    schedule: &ProbeSchedule,
    seed: u64,
) -> Result<ProbeFit> {
    if features.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows for {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= num_categories) {
        return Err(Error::InvalidInput(format!("label {bad} outside {num_categories} categories")));
    }
    let distinct: BTreeSet<usize> = labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::Degenerate("linear probe needs at least two categories in the training split".into()));
    }
    let d = features.ncols();
    let (feature_mean, feature_scale) = if schedule.standardize {
        let mean = features.mean_axis(Axis(0)).expect("non-empty");
        let std = features.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
        (Some(mean), Some(std))
    } else {
        (None, None)
    };
    let mut probe = LinearProbe {
        weight: Array2::zeros((d, num_categories)),
        bias: Array1::zeros(num_categories),
        feature_mean,
        feature_scale,
    };
    let x = probe.prepare(features);
    let mut onehot = Array2::zeros((labels.len(), num_categories));
    for (i, &y) in labels.iter().enumerate() {
        onehot[[i, y]] = 1.0;
    }
    let mut vw = Array2::<f64>::zeros(probe.weight.raw_dim());
    let mut vb = Array1::<f64>::zeros(num_categories);
    let mut rng = RandomStream::new(seed);
    let n = labels.len();
    let batch = schedule.batch_size.unwrap_or(n).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_history = Vec::with_capacity(schedule.epochs);
    let mut lr_history = Vec::with_capacity(schedule.epochs);
    for epoch in 0..schedule.epochs {
        let lr = schedule.lr_at(epoch);
        lr_history.push(lr);
        if batch < n {
            rng.shuffle(&mut order);
        }
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb = onehot.select(Axis(0), chunk);
            let p = softmax_rows(&(xb.dot(&probe.weight) + &probe.bias));
            let dl = (p - yb) / chunk.len() as f64;
            let gw = xb.t().dot(&dl) + &probe.weight * schedule.weight_decay;
            let gb = dl.sum_axis(Axis(0));
            vw = &vw * schedule.momentum + gw;
            vb = &vb * schedule.momentum + gb;
            probe.weight.scaled_add(-lr, &vw);
            probe.bias.scaled_add(-lr, &vb);
        }
        let loss = cross_entropy(&(x.dot(&probe.weight) + &probe.bias), labels);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                step: 0,
                loss,
            });
        }
        loss_history.push(loss);
    }
    Ok(ProbeFit {
        probe,
        loss_history,
        lr_history,
    })
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Percentage of rows whose label ranks within the top `k` scores.
pub fn topk_accuracy(scores: &Array2<f64>, labels: &[usize], k: usize) -> Result<f64> {
    if scores.nrows() == 0 || labels.is_empty() {
        return Err(Error::InvalidInput("top-k accuracy of an empty set".into()));
    }
    if scores.nrows() != labels.len() {
        return Err(Error::Dimension {
            context: "top-k labels",
            expected: scores.nrows(),
            found: labels.len(),
        });
    }
    let c = scores.ncols();
    if k == 0 || k > c {
        return Err(Error::InvalidInput(format!("k={k} outside 1..={c}")));
    }
    let hits = scores
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &y)| {
            let s = row[y];
            let rank = row
                .iter()
                .enumerate()
                .filter(|&(j, &v)| v > s || (v == s && j < y))
                .count();
            rank < k
        })
        .count();
    Ok(100.0 * hits as f64 / labels.len() as f64)
}

fn check_distribution(v: &[f64], name: &str) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} scores sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Equal-weight sum of two softmax score vectors.
pub fn fuse_scores(spatial: &[f64], temporal: &[f64]) -> Result<Vec<f64>> {
    if spatial.len() != temporal.len() {
        return Err(Error::Dimension {
            context: "fused score length",
            expected: spatial.len(),
            found: temporal.len(),
        });
    }
    check_distribution(spatial, "spatial")?;
    check_distribution(temporal, "temporal")?;
    Ok(spatial.iter().zip(temporal).map(|(a, b)| a + b).collect())
}

pub fn fuse_score_matrices(spatial: &Array2<f64>, temporal: &Array2<f64>) -> Result<Array2<f64>> {
    if spatial.dim() != temporal.dim() {
        return Err(Error::Dimension {
            context: "fused score matrix rows",
            expected: spatial.nrows(),
            found: temporal.nrows(),
        });
    }
    let mut out = Array2::zeros(spatial.raw_dim());
    for (i, (a, b)) in spatial.rows().into_iter().zip(temporal.rows()).enumerate() {
        let fused = fuse_scores(&a.to_vec(), &b.to_vec())?;
        out.row_mut(i).assign(&Array1::from(fused));
    }
    Ok(out)
}

/// Subject lists as stored in a split file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSplit {
    pub train_subjects: Vec<u32>,
    /// Defaults to every subject not in `train_subjects`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_subjects: Option<Vec<u32>>,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    pub train_subjects: Vec<u32>,
    pub test_subjects: Vec<u32>,
    pub warnings: Vec<String>,
}

/// Partition by subject: train subjects go to `train`, every other subject to `test`.
pub fn cross_subject_split(data: &[LabeledSample], train_subject_ids: &[u32]) -> Split {
    let train_set: BTreeSet<u32> = train_subject_ids.iter().copied().collect();
    let (train, test): (Vec<_>, Vec<_>) = data.iter().cloned().partition(|s| train_set.contains(&s.subject_id));
    let subjects = |v: &[LabeledSample]| -> Vec<u32> {
        v.iter().map(|s| s.subject_id).collect::<BTreeSet<_>>().into_iter().collect()
    };
    let mut warnings = Vec::new();
    if test.is_empty() {
        warnings.push("test split is empty: every subject is in the training group".to_string());
    }
    if train.is_empty() {
        warnings.push("train split is empty: no sample belongs to a training subject".to_string());
    }
    Split {
        train_subjects: subjects(&train),
        test_subjects: subjects(&test),
        train,
        test,
        warnings,
    }
}

/// Apply a split file; explicit test lists must not overlap the train list.
pub fn apply_subject_split(data: &[LabeledSample], split: &SubjectSplit) -> Result<Split> {
    let train: BTreeSet<u32> = split.train_subjects.iter().copied().collect();
    if let Some(test) = &split.test_subjects {
        let overlap: Vec<u32> = test.iter().copied().filter(|s| train.contains(s)).collect();
        if !overlap.is_empty() {
            return Err(Error::InvalidConfig(format!("subjects {overlap:?} are declared in both splits")));
        }
        let test_set: BTreeSet<u32> = test.iter().copied().collect();
        let kept: Vec<LabeledSample> = data
            .iter()
            .filter(|s| train.contains(&s.subject_id) || test_set.contains(&s.subject_id))
            .cloned()
            .collect();
        let mut out = cross_subject_split(&kept, &split.train_subjects);
        let dropped = data.len() - kept.len();
        if dropped > 0 {
            out.warnings.push(format!("{dropped} samples belong to undeclared subjects and were dropped"));
        }
        return Ok(out);
    }
    Ok(cross_subject_split(data, &split.train_subjects))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStream {
    Spatial,
    Temporal,
    Fused,
}

impl From<StreamKind> for ReportStream {
    fn from(k: StreamKind) -> Self {
        match k {
            StreamKind::Spatial => ReportStream::Spatial,
            StreamKind::Temporal => ReportStream::Temporal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub stream: ReportStream,
    pub num_samples: usize,
    pub top1: f64,
    pub top5: f64,
    pub per_category: Vec<Option<f64>>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    /// Build from per-sample scores; top-5 falls back to top-C with fewer categories.
    pub fn from_scores(stream: ReportStream, scores: &Array2<f64>, labels: &[usize]) -> Result<Self> {
        let c = scores.ncols();
        let top1 = topk_accuracy(scores, labels, 1)?;
        let top5 = topk_accuracy(scores, labels, 5.min(c))?;
        let mut confusion = vec![vec![0usize; c]; c];
        for (row, &y) in scores.rows().into_iter().zip(labels) {
            confusion[y][argmax(&row.to_vec())] += 1;
        }
        let per_category = confusion
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let total: usize = r.iter().sum();
                (total > 0).then(|| 100.0 * r[i] as f64 / total as f64)
            })
            .collect();
        Ok(Self {
            stream,
            num_samples: labels.len(),
            top1,
            top5,
            per_category,
            confusion,
        })
    }
}
