//! Sequence-form stream: stacked bidirectional GRU over flattened frames,
//! mean-pooled over time, with an affine projection head.
//!
//! Cell (gate columns ordered reset, update, candidate):
//! `r = s(x Wr + br + h Ur + cr)`, `z = s(x Wz + bz + h Uz + cz)`,
//! `n = tanh(x Wn + bn + r * (h Un + cn))`, `h' = (1 - z) * n + z * h`.

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StreamModel;
use crate::nn::{affine, affine_backward, sigmoid, Init, ParamId, ParamLayout, ParamSet};
use crate::skeleton::SkeletonSequence;
use crate::spatial::PROJECTION_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    MeanOverTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecurrentEncoderConfig {
    pub layers: usize,
    pub hidden_units: usize,
    pub input_dim: usize,
    pub pooling: Pooling,
    pub bidirectional: bool,
    pub projection_dim: usize,
}

impl Default for RecurrentEncoderConfig {
    fn default() -> Self {
        Self::desk(45)
    }
}

impl RecurrentEncoderConfig {
    pub fn desk(input_dim: usize) -> Self {
        Self {
            layers: 3,
            hidden_units: 64,
            input_dim,
            pooling: Pooling::MeanOverTime,
            bidirectional: true,
            projection_dim: PROJECTION_DIM,
        }
    }

    pub fn full_scale(input_dim: usize) -> Self {
        Self {
            hidden_units: 1024,
            ..Self::desk(input_dim)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden_units == 0 || self.input_dim == 0 || self.projection_dim == 0 {
            return Err(Error::InvalidConfig(
                "recurrent encoder needs layers, hidden_units, input_dim and projection_dim >= 1".into(),
            ));
        }
        if !self.bidirectional {
            return Err(Error::InvalidConfig("only the bidirectional encoder is supported".into()));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden_units
    }
}

#[derive(Debug, Clone)]
pub struct GruDirection {
    pub input_dim: usize,
    pub hidden: usize,
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b_ih: ParamId,
    pub b_hh: ParamId,
}

impl GruDirection {
    fn build(layout: &mut ParamLayout, prefix: &str, input_dim: usize, hidden: usize) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let u = Init::Uniform { bound };
        Self {
            input_dim,
            hidden,
            w_ih: layout.add(format!("{prefix}.w_ih"), &[input_dim, 3 * hidden], u.clone()),
            w_hh: layout.add(format!("{prefix}.w_hh"), &[hidden, 3 * hidden], u.clone()),
            b_ih: layout.add(format!("{prefix}.b_ih"), &[3 * hidden], u.clone()),
            b_hh: layout.add(format!("{prefix}.b_hh"), &[3 * hidden], u),
        }
    }
}

#[derive(Debug, Clone)]
struct StepCache {
    h_prev: Array2<f64>,
    r: Array2<f64>,
    z: Array2<f64>,
    n: Array2<f64>,
    gh_n: Array2<f64>,
}

#[derive(Debug, Clone)]
struct DirectionCache {
    /// Indexed by processing order, not by frame.
    steps: Vec<StepCache>,
}

/// Run one direction over `frames x (batch x dim)` inputs stacked as
/// `(T*B) x D` with row `t*B + b`. Returns states in frame order.
fn run_direction(params: &ParamSet, dir: &GruDirection, x: &Array2<f64>, frames: usize, batch: usize, reverse: bool) -> (Array2<f64>, DirectionCache) {
    let h_dim = dir.hidden;
    let gx = affine(&x.view(), &params.matrix(dir.w_ih), &params.vector(dir.b_ih));
    let w_hh = params.matrix(dir.w_hh);
    let b_hh = params.vector(dir.b_hh);
    let mut states = Array2::zeros((frames * batch, h_dim));
    let mut h = Array2::<f64>::zeros((batch, h_dim));
    let mut steps = Vec::with_capacity(frames);
    for k in 0..frames {
        let t = if reverse { frames - 1 - k } else { k };
        let gxt = gx.slice(s![t * batch..(t + 1) * batch, ..]);
        let gh = affine(&h.view(), &w_hh, &b_hh);
        let mut r = Array2::zeros((batch, h_dim));
        let mut z = Array2::zeros((batch, h_dim));
        let mut n = Array2::zeros((batch, h_dim));
        let mut h_new = Array2::zeros((batch, h_dim));
        for b in 0..batch {
            for j in 0..h_dim {
                let rv = sigmoid(gxt[[b, j]] + gh[[b, j]]);
                let zv = sigmoid(gxt[[b, h_dim + j]] + gh[[b, h_dim + j]]);
                let nv = (gxt[[b, 2 * h_dim + j]] + rv * gh[[b, 2 * h_dim + j]]).tanh();
                r[[b, j]] = rv;
                z[[b, j]] = zv;
                n[[b, j]] = nv;
                h_new[[b, j]] = (1.0 - zv) * nv + zv * h[[b, j]];
            }
        }
        states.slice_mut(s![t * batch..(t + 1) * batch, ..]).assign(&h_new);
        let gh_n = gh.slice(s![.., 2 * h_dim..]).to_owned();
        steps.push(StepCache {
            h_prev: std::mem::replace(&mut h, h_new),
            r,
            z,
            n,
            gh_n,
        });
    }
    (states, DirectionCache { steps })
}

/// Backward through one direction; `d_states` is in frame order. Returns the input gradient.
#[allow(clippy::too_many_arguments)]
fn direction_backward(
    params: &ParamSet,
    dir: &GruDirection,
    x: &Array2<f64>,
    cache: &DirectionCache,
    d_states: &Array2<f64>,
    frames: usize,
    batch: usize,
    reverse: bool,
    grads: &mut ParamSet,
) -> Array2<f64> {
    let h_dim = dir.hidden;
    let w_hh = params.matrix(dir.w_hh);
    let mut dgx = Array2::zeros((frames * batch, 3 * h_dim));
    let mut dh_next = Array2::<f64>::zeros((batch, h_dim));
    let mut dw_hh = Array2::zeros((h_dim, 3 * h_dim));
    let mut db_hh = ndarray::Array1::zeros(3 * h_dim);
    for k in (0..frames).rev() {
        let t = if reverse { frames - 1 - k } else { k };
        let st = &cache.steps[k];
        let mut dh = d_states.slice(s![t * batch..(t + 1) * batch, ..]).to_owned();
        dh += &dh_next;
        let mut dgh = Array2::zeros((batch, 3 * h_dim));
        let mut dh_prev = Array2::zeros((batch, h_dim));
        for b in 0..batch {
            for j in 0..h_dim {
                let (r, z, n) = (st.r[[b, j]], st.z[[b, j]], st.n[[b, j]]);
                let g = dh[[b, j]];
                let dn = g * (1.0 - z);
                let dz = g * (st.h_prev[[b, j]] - n);
                dh_prev[[b, j]] = g * z;
                let dan = dn * (1.0 - n * n);
                let dr = dan * st.gh_n[[b, j]];
                let dar = dr * r * (1.0 - r);
                let daz = dz * z * (1.0 - z);
                let row = t * batch + b;
                dgx[[row, j]] = dar;
                dgx[[row, h_dim + j]] = daz;
                dgx[[row, 2 * h_dim + j]] = dan;
                dgh[[b, j]] = dar;
                dgh[[b, h_dim + j]] = daz;
                dgh[[b, 2 * h_dim + j]] = dan * r;
            }
        }
        dw_hh += &st.h_prev.t().dot(&dgh);
        db_hh += &dgh.sum_axis(Axis(0));
        dh_prev += &dgh.dot(&w_hh.t());
        dh_next = dh_prev;
    }
    grads.add_matrix(dir.w_hh, &dw_hh);
    let mut g = grads.vector_mut(dir.b_hh);
    g += &db_hh;
    let (dx, dw_ih, db_ih) = affine_backward(&x.view(), &params.matrix(dir.w_ih), &dgx);
    grads.add_matrix(dir.w_ih, &dw_ih);
    let mut g = grads.vector_mut(dir.b_ih);
    g += &db_ih;
    dx
}

#[derive(Debug, Clone)]
pub struct BiGruLayer {
    pub forward: GruDirection,
    pub backward: GruDirection,
}

/// Affine projection `e W + b` into the contrastive space.
#[derive(Debug, Clone)]
pub struct SequenceProjectionHead {
    pub input_dim: usize,
    pub output_dim: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

pub fn project_temporal(params: &ParamSet, head: &SequenceProjectionHead, embedding: &[f64]) -> Result<Vec<f64>> {
    if embedding.len() != head.input_dim {
        return Err(Error::Dimension {
            context: "sequence projection input",
            expected: head.input_dim,
            found: embedding.len(),
        });
    }
    let e = ArrayView2::from_shape((1, embedding.len()), embedding).expect("row vector");
    let z = affine(&e, &params.matrix(head.weight), &params.vector(head.bias));
    Ok(z.into_raw_vec_and_offset().0)
}

#[derive(Debug, Clone)]
pub struct TemporalModel {
    pub config: RecurrentEncoderConfig,
    pub layers: Vec<BiGruLayer>,
    pub head: SequenceProjectionHead,
    layout: ParamLayout,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    forward: DirectionCache,
    backward: DirectionCache,
}

#[derive(Debug, Clone)]
pub struct TemporalCache {
    layers: Vec<LayerCache>,
    frames: usize,
    batch: usize,
    pooled: Array2<f64>,
}

/// Per-layer, per-direction states in frame order, each `(T*B) x H`.
#[derive(Debug, Clone)]
pub struct DirectionalStates {
    pub forward: Vec<Array2<f64>>,
    pub backward: Vec<Array2<f64>>,
}

impl TemporalModel {
    pub fn new(config: RecurrentEncoderConfig) -> Result<Self> {
        config.validate()?;
        let mut layout = ParamLayout::new();
        let mut layers = Vec::new();
        let mut d = config.input_dim;
        for l in 0..config.layers {
            let forward = GruDirection::build(&mut layout, &format!("temporal.gru{l}.fwd"), d, config.hidden_units);
            let backward = GruDirection::build(&mut layout, &format!("temporal.gru{l}.bwd"), d, config.hidden_units);
            layers.push(BiGruLayer { forward, backward });
            d = 2 * config.hidden_units;
        }
        let weight = layout.add(
            "temporal.head.weight",
            &[d, config.projection_dim],
            Init::Uniform {
                bound: 1.0 / (d as f64).sqrt(),
            },
        );
        let bias = layout.add("temporal.head.bias", &[config.projection_dim], Init::Zeros);
        let head = SequenceProjectionHead {
            input_dim: d,
            output_dim: config.projection_dim,
            weight,
            bias,
        };
        Ok(Self {
            config,
            layers,
            head,
            layout,
        })
    }

    /// Stack flattened frames as `(T*B) x (N*3)` with row `t*B + b`.
    fn input(&self, batch: &[&SkeletonSequence]) -> Result<(Array2<f64>, usize)> {
        let first = batch
            .first()
            .ok_or_else(|| Error::InvalidInput("empty batch".into()))?;
        let frames = first.num_frames();
        let d = self.config.input_dim;
        let bs = batch.len();
        let mut x = Array2::zeros((frames * bs, d));
        for (b, seq) in batch.iter().enumerate() {
            let flat = seq.flattened();
            if flat.ncols() != d {
                return Err(Error::Dimension {
                    context: "recurrent encoder input_dim",
                    expected: d,
                    found: flat.ncols(),
                });
            }
            if seq.num_frames() != frames {
                return Err(Error::InvalidInput(format!(
                    "batch mixes lengths {} and {frames}",
                    seq.num_frames()
                )));
            }
            for t in 0..frames {
                x.row_mut(t * bs + b).assign(&flat.row(t));
            }
        }
        Ok((x, frames))
    }

    fn run(&self, params: &ParamSet, x: Array2<f64>, frames: usize, batch: usize) -> (Array2<f64>, Vec<LayerCache>) {
        let h = self.config.hidden_units;
        let mut input = x;
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (fs, fc) = run_direction(params, &layer.forward, &input, frames, batch, false);
            let (bs, bc) = run_direction(params, &layer.backward, &input, frames, batch, true);
            let mut out = Array2::zeros((frames * batch, 2 * h));
            out.slice_mut(s![.., ..h]).assign(&fs);
            out.slice_mut(s![.., h..]).assign(&bs);
            caches.push(LayerCache {
                input,
                forward: fc,
                backward: bc,
            });
            input = out;
        }
        (input, caches)
    }

    fn pool(top: &Array2<f64>, frames: usize, batch: usize) -> Array2<f64> {
        let mut pooled = Array2::zeros((batch, top.ncols()));
        for t in 0..frames {
            pooled += &top.slice(s![t * batch..(t + 1) * batch, ..]);
        }
        pooled / frames as f64
    }

    pub fn encode(&self, params: &ParamSet, batch: &[&SkeletonSequence]) -> Result<Array2<f64>> {
        let (x, frames) = self.input(batch)?;
        let (top, _) = self.run(params, x, frames, batch.len());
        Ok(Self::pool(&top, frames, batch.len()))
    }

    /// States of every layer for a single sequence, rows indexed by frame.
    pub fn directional_states(&self, params: &ParamSet, seq: &SkeletonSequence) -> Result<DirectionalStates> {
        let (x, frames) = self.input(&[seq])?;
        let h = self.config.hidden_units;
        let (top, caches) = self.run(params, x, frames, 1);
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        for next in caches.iter().skip(1).map(|c| &c.input).chain(std::iter::once(&top)) {
            forward.push(next.slice(s![.., ..h]).to_owned());
            backward.push(next.slice(s![.., h..]).to_owned());
        }
        Ok(DirectionalStates { forward, backward })
    }
}

pub fn encode_temporal(model: &TemporalModel, params: &ParamSet, seq: &SkeletonSequence) -> Result<Vec<f64>> {
    Ok(model.encode(params, &[seq])?.into_raw_vec_and_offset().0)
}

impl StreamModel for TemporalModel {
    type Cache = TemporalCache;

    fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    fn encoder_dim(&self) -> usize {
        self.config.output_dim()
    }

    fn projection_dim(&self) -> usize {
        self.head.output_dim
    }

    fn embed(&self, params: &ParamSet, batch: &[&SkeletonSequence]) -> Result<Array2<f64>> {
        self.encode(params, batch)
    }

    fn project(&self, params: &ParamSet, batch: &[&SkeletonSequence]) -> Result<(Array2<f64>, TemporalCache)> {
        let (x, frames) = self.input(batch)?;
        let (top, layers) = self.run(params, x, frames, batch.len());
        let pooled = Self::pool(&top, frames, batch.len());
        let z = affine(&pooled.view(), &params.matrix(self.head.weight), &params.vector(self.head.bias));
        Ok((
            z,
            TemporalCache {
                layers,
                frames,
                batch: batch.len(),
                pooled,
            },
        ))
    }

    fn backward(&self, params: &ParamSet, cache: &TemporalCache, d_proj: &Array2<f64>) -> ParamSet {
        let mut grads = params.zeros_like();
        let (frames, batch) = (cache.frames, cache.batch);
        let (d_pooled, dw, db) = affine_backward(&cache.pooled.view(), &params.matrix(self.head.weight), d_proj);
        grads.add_matrix(self.head.weight, &dw);
        let mut g = grads.vector_mut(self.head.bias);
        g += &db;
        let h = self.config.hidden_units;
        let share = d_pooled / frames as f64;
        let mut d_out = Array2::zeros((frames * batch, 2 * h));
        for t in 0..frames {
            d_out.slice_mut(s![t * batch..(t + 1) * batch, ..]).assign(&share);
        }
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            let df = d_out.slice(s![.., ..h]).to_owned();
            let dbk = d_out.slice(s![.., h..]).to_owned();
            let mut dx = direction_backward(params, &layer.forward, &lc.input, &lc.forward, &df, frames, batch, false, &mut grads);
            dx += &direction_backward(params, &layer.backward, &lc.input, &lc.backward, &dbk, frames, batch, true, &mut grads);
            d_out = dx;
        }
        grads
    }
}
