//! Momentum-contrastive pretraining shared by both streams: negative-key
//! queue, InfoNCE objective, momentum-updated key encoder and the training loop.

use std::collections::VecDeque;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::augment::{sample_positive_pair, AugmentationConfig, AugmentationPolicy};
use crate::error::{Error, Result};
use crate::model::{StreamKind, StreamModel};
use crate::nn::{log_sum_exp, normalize_rows, normalize_rows_backward, ParamSet, SgdNesterov};
use crate::rng::RandomStream;
use crate::skeleton::{LabeledSample, SkeletonSequence};

const UNIT_TOLERANCE: f64 = 1e-6;

/// Fixed-capacity FIFO of unit-norm keys; the oldest entries are evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyQueue {
    capacity: usize,
    dim: usize,
    /// Reject keys that are not unit-norm instead of normalizing them.
    strict: bool,
    entries: VecDeque<Vec<f64>>,
}

impl KeyQueue {
    pub fn new(capacity: usize, dim: usize) -> Result<Self> {
        if capacity == 0 || dim == 0 {
            return Err(Error::InvalidConfig("queue capacity and key dimension must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            dim,
            strict: false,
            entries: VecDeque::with_capacity(capacity),
        })
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fill(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.iter().map(|v| v.as_slice())
    }

    pub fn enqueue(&mut self, key: &[f64]) -> Result<()> {
        if key.len() != self.dim {
            return Err(Error::Dimension {
                context: "queue key",
                expected: self.dim,
                found: key.len(),
            });
        }
        let norm = key.iter().map(|v| v * v).sum::<f64>().sqrt();
        let stored = if (norm - 1.0).abs() <= UNIT_TOLERANCE {
            key.to_vec()
        } else if self.strict || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput(format!("queue key has norm {norm}, expected 1")));
        } else {
            key.iter().map(|v| v / norm).collect()
        };
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(stored);
        Ok(())
    }

    /// Append rows in order. In strict mode the whole batch is validated first.
    pub fn enqueue_batch(&mut self, keys: &Array2<f64>) -> Result<()> {
        if keys.ncols() != self.dim {
            return Err(Error::Dimension {
                context: "queue key batch",
                expected: self.dim,
                found: keys.ncols(),
            });
        }
        if self.strict {
            for row in keys.rows() {
                let norm = row.dot(&row).sqrt();
                if (norm - 1.0).abs() > UNIT_TOLERANCE {
                    return Err(Error::InvalidInput(format!("queue key has norm {norm}, expected 1")));
                }
            }
        }
        for row in keys.rows() {
            self.enqueue(&row.to_vec())?;
        }
        Ok(())
    }

    /// Keys as a `fill x dim` matrix, oldest first.
    pub fn to_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.entries.len(), self.dim));
        for (i, e) in self.entries.iter().enumerate() {
            m.row_mut(i).assign(&ndarray::ArrayView1::from(e.as_slice()));
        }
        m
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "cosine similarity",
            expected: a.len(),
            found: b.len(),
        });
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// InfoNCE for one query against its positive key and every queued negative.
pub fn info_nce_loss(z_q: &[f64], z_pos: &[f64], queue: &KeyQueue, temperature: f64) -> Result<f64> {
    if queue.is_empty() {
        return Err(Error::InvalidInput("InfoNCE needs at least one queued negative".into()));
    }
    if temperature <= 0.0 {
        return Err(Error::InvalidConfig(format!("temperature must be positive, got {temperature}")));
    }
    let pos = cosine_similarity(z_q, z_pos)? / temperature;
    let mut logits = Vec::with_capacity(queue.fill() + 1);
    logits.push(pos);
    for k in queue.iter() {
        logits.push(cosine_similarity(z_q, k)? / temperature);
    }
    Ok((log_sum_exp(logits.iter().copied()) - pos).max(0.0))
}

/// Batch-mean InfoNCE and its gradient with respect to the raw query rows.
///
/// `keys` are the positive keys (row `i` pairs with query `i`) and `negatives`
/// the queue snapshot; both must already be unit-norm.
pub fn info_nce_batch(queries: &Array2<f64>, keys: &Array2<f64>, negatives: &Array2<f64>, temperature: f64) -> Result<(f64, Array2<f64>)> {
    if negatives.nrows() == 0 {
        return Err(Error::InvalidInput("InfoNCE needs at least one queued negative".into()));
    }
    if queries.dim() != keys.dim() || negatives.ncols() != queries.ncols() {
        return Err(Error::Dimension {
            context: "InfoNCE batch",
            expected: queries.ncols(),
            found: if queries.dim() != keys.dim() { keys.ncols() } else { negatives.ncols() },
        });
    }
    let b = queries.nrows();
    let q = normalize_rows(queries);
    let neg_logits = q.dot(&negatives.t()) / temperature;
    let mut loss = 0.0;
    let mut d_logits_neg = Array2::zeros(neg_logits.raw_dim());
    let mut dq = Array2::zeros(q.raw_dim());
    for i in 0..b {
        let pos = q.row(i).dot(&keys.row(i)) / temperature;
        let row = neg_logits.row(i);
        let lse = log_sum_exp(std::iter::once(pos).chain(row.iter().copied()));
        loss += lse - pos;
        let p_pos = (pos - lse).exp();
        // d loss / d pos = p_pos - 1; d loss / d neg_j = p_j.
        dq.row_mut(i).scaled_add((p_pos - 1.0) / temperature, &keys.row(i));
        for (j, &l) in row.iter().enumerate() {
            d_logits_neg[[i, j]] = (l - lse).exp();
        }
    }
    dq += &(d_logits_neg.dot(negatives) / temperature);
    let scale = 1.0 / b as f64;
    let dq = normalize_rows_backward(queries, &(dq * scale));
    Ok((loss * scale, dq))
}

/// `key <- m * key + (1 - m) * query`, elementwise.
pub fn momentum_update(key: &mut ParamSet, query: &ParamSet, m: f64) -> Result<()> {
    if !key.is_congruent(query) {
        return Err(Error::InvalidInput("key and query parameters are not shape-congruent".into()));
    }
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::InvalidConfig(format!("momentum must lie in [0, 1], got {m}")));
    }
    for (k, q) in key.tensors_mut().iter_mut().zip(query.tensors()) {
        for (kv, &qv) in k.data.iter_mut().zip(&q.data) {
            *kv = m * *kv + (1.0 - m) * qv;
        }
    }
    Ok(())
}

/// Query parameters (trained by gradients) and key parameters (trailing copy).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderPair {
    pub query: ParamSet,
    pub key: ParamSet,
    pub momentum: f64,
}

impl EncoderPair {
    pub fn new(query: ParamSet, momentum: f64) -> Self {
        Self {
            key: query.clone(),
            query,
            momentum,
        }
    }

    pub fn momentum_update(&mut self) -> Result<()> {
        momentum_update(&mut self.key, &self.query, self.momentum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub temperature: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub nesterov_momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub momentum: f64,
    pub queue_size: usize,
    pub seed: u64,
    /// Stop when the epoch loss changes by less than this fraction over five epochs.
    pub plateau_tolerance: Option<f64>,
    pub strict_queue: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            temperature: 0.07,
            learning_rate: 0.01,
            weight_decay: 1e-4,
            nesterov_momentum: 0.9,
            batch_size: 128,
            epochs: 100,
            momentum: 0.999,
            queue_size: 512,
            seed: 0,
            plateau_tolerance: None,
            strict_queue: false,
        }
    }
}

impl TrainConfig {
    /// Full-scale settings with the iMiGUE negative-set size.
    pub fn imigue() -> Self {
        Self::default()
    }

    pub fn ntu() -> Self {
        Self {
            queue_size: 16384,
            ..Self::default()
        }
    }

    /// Small-data preset used by the synthetic acceptance runs.
    pub fn desk() -> Self {
        Self {
            batch_size: 32,
            epochs: 30,
            momentum: 0.99,
            queue_size: 128,
            ..Self::default()
        }
    }

    /// Desk preset for one stream. Over 30 short epochs the graph encoder only
    /// learns with the faster key update; the recurrent one keeps 0.999.
    pub fn desk_for(stream: StreamKind) -> Self {
        match stream {
            StreamKind::Spatial => Self::desk(),
            StreamKind::Temporal => Self {
                momentum: 0.999,
                ..Self::desk()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("temperature", self.temperature),
            ("learning_rate", self.learning_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.weight_decay < 0.0 || !(0.0..1.0).contains(&self.nesterov_momentum) {
            return Err(Error::InvalidConfig("weight_decay must be >= 0 and nesterov_momentum in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!("momentum must lie in [0, 1], got {}", self.momentum)));
        }
        if self.batch_size == 0 || self.queue_size == 0 {
            return Err(Error::InvalidConfig("batch_size and queue_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
}

pub fn write_loss_csv(path: &Path, history: &[EpochLoss]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "epoch,mean_loss").expect("in-memory write");
    for e in history {
        writeln!(out, "{},{}", e.epoch, e.mean_loss).expect("in-memory write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Single-writer training state for one stream.
pub struct Trainer<'a, M: StreamModel> {
    pub model: &'a M,
    pub config: TrainConfig,
    pub policy: AugmentationPolicy,
    pub augmentation: AugmentationConfig,
    pub pair: EncoderPair,
    pub queue: KeyQueue,
    optimizer: SgdNesterov,
    shuffle_rng: RandomStream,
    augment_rng: RandomStream,
    epoch: usize,
    step: usize,
}

impl<'a, M: StreamModel> Trainer<'a, M> {
    /// Initialize query parameters from the seed and fill the queue with one
    /// pass of key-encoder outputs over `data`.
    pub fn new(
        model: &'a M,
        data: &[LabeledSample],
        policy: AugmentationPolicy,
        augmentation: AugmentationConfig,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::InvalidInput("pretraining needs a non-empty dataset".into()));
        }
        let mut root = RandomStream::new(config.seed);
        let params = model.layout().init(&mut root.fork(1));
        let queue = KeyQueue::new(config.queue_size, model.projection_dim())?.strict(config.strict_queue);
        let mut trainer = Self {
            model,
            optimizer: SgdNesterov::new(config.learning_rate, config.nesterov_momentum, config.weight_decay, true),
            pair: EncoderPair::new(params, config.momentum),
            queue,
            shuffle_rng: root.fork(2),
            augment_rng: root.fork(3),
            config,
            policy,
            augmentation,
            epoch: 0,
            step: 0,
        };
        trainer.fill_queue(data)?;
        Ok(trainer)
    }

    fn fill_queue(&mut self, data: &[LabeledSample]) -> Result<()> {
        let take = data.len().min(self.config.queue_size);
        for chunk in data[..take].chunks(self.config.batch_size) {
            let views = chunk
                .iter()
                .map(|s| self.policy.apply(&s.sequence, &self.augmentation, &mut self.augment_rng))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&SkeletonSequence> = views.iter().collect();
            let (k, _) = self.model.project(&self.pair.key, &refs)?;
            self.queue.enqueue_batch(&normalize_rows(&k))?;
        }
        Ok(())
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One optimization step on a batch of raw sequences; returns the batch loss.
    pub fn train_step(&mut self, batch: &[&SkeletonSequence]) -> Result<f64> {
        let mut queries = Vec::with_capacity(batch.len());
        let mut keys = Vec::with_capacity(batch.len());
        for seq in batch {
            let (q, k) = sample_positive_pair(seq, &self.policy, &self.augmentation, &mut self.augment_rng)?;
            queries.push(q);
            keys.push(k);
        }
        let q_refs: Vec<&SkeletonSequence> = queries.iter().collect();
        let k_refs: Vec<&SkeletonSequence> = keys.iter().collect();
        let (zq, cache) = self.model.project(&self.pair.query, &q_refs)?;
        let (zk, _) = self.model.project(&self.pair.key, &k_refs)?;
        let zk = normalize_rows(&zk);
        let negatives = self.queue.to_matrix();
        let (loss, dq) = info_nce_batch(&zq, &zk, &negatives, self.config.temperature)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch: self.epoch,
                step: self.step,
                loss,
            });
        }
        let grads = self.model.backward(&self.pair.query, &cache, &dq);
        self.optimizer.step(&mut self.pair.query, &grads);
        if !self.pair.query.all_finite() {
            return Err(Error::Diverged {
                epoch: self.epoch,
                step: self.step,
                loss: f64::NAN,
            });
        }
        self.pair.momentum_update()?;
        self.queue.enqueue_batch(&zk)?;
        self.step += 1;
        Ok(loss)
    }

    /// One shuffled pass; returns the mean batch loss.
    pub fn run_epoch(&mut self, data: &[LabeledSample]) -> Result<f64> {
        let mut order: Vec<usize> = (0..data.len()).collect();
        self.shuffle_rng.shuffle(&mut order);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<&SkeletonSequence> = chunk.iter().map(|&i| &data[i].sequence).collect();
            total += self.train_step(&batch)?;
            batches += 1;
        }
        self.epoch += 1;
        Ok(total / batches as f64)
    }
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub query_params: ParamSet,
    pub key_params: ParamSet,
    pub loss_history: Vec<EpochLoss>,
    pub stopped_early: bool,
}

pub fn pretrain<M: StreamModel>(
    model: &M,
    data: &[LabeledSample],
    policy: &AugmentationPolicy,
    augmentation: &AugmentationConfig,
    config: &TrainConfig,
) -> Result<PretrainOutcome> {
    let mut trainer = Trainer::new(model, data, policy.clone(), augmentation.clone(), config.clone())?;
    let mut history = Vec::with_capacity(config.epochs);
    let mut stopped_early = false;
    for epoch in 0..config.epochs {
        let mean_loss = trainer.run_epoch(data)?;
        history.push(EpochLoss { epoch, mean_loss });
        if let Some(tol) = config.plateau_tolerance {
            if epoch >= 5 {
                let past = history[epoch - 5].mean_loss;
                if ((mean_loss - past) / past).abs() < tol {
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(PretrainOutcome {
        query_params: trainer.pair.query,
        key_params: trainer.pair.key,
        loss_history: history,
        stopped_early,
    })
}

/// Mean of consecutive windows of `width` epoch losses.
pub fn window_means(history: &[EpochLoss], width: usize) -> Vec<f64> {
    history
        .chunks(width)
        .filter(|c| c.len() == width)
        .map(|c| c.iter().map(|e| e.mean_loss).sum::<f64>() / width as f64)
        .collect()
}
