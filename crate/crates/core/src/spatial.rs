//! Graph-form stream: adaptive graph convolution blocks, temporal convolution,
//! optional attention gates, global pooling and the reprojection head.
//!
//! Activations are stored as [`FeatureMap`]s: a `(B*T*N) x C` matrix whose
//! rows run over sample, then frame, then joint.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{partition_edges, GraphTopology};
use crate::model::StreamModel;
use crate::nn::{affine, affine_backward, sigmoid, softmax_rows, softmax_rows_backward, Init, ParamId, ParamLayout, ParamSet};
use crate::skeleton::{SkeletonSequence, COORD_DIM};

pub const PROJECTION_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub data: Array2<f64>,
    pub batch: usize,
    pub frames: usize,
    pub joints: usize,
}

impl FeatureMap {
    pub fn new(data: Array2<f64>, batch: usize, frames: usize, joints: usize) -> Self {
        assert_eq!(data.nrows(), batch * frames * joints, "feature map rows");
        Self {
            data,
            batch,
            frames,
            joints,
        }
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    fn rows_per_sample(&self) -> usize {
        self.frames * self.joints
    }

    pub fn sample(&self, b: usize) -> ArrayView2<'_, f64> {
        let r = self.rows_per_sample();
        self.data.slice(s![b * r..(b + 1) * r, ..])
    }

    pub fn with_data(&self, data: Array2<f64>) -> Self {
        Self::new(data, self.batch, self.frames, self.joints)
    }

    pub fn from_sequences(batch: &[&SkeletonSequence]) -> Result<Self> {
        let first = batch
            .first()
            .ok_or_else(|| Error::InvalidInput("empty batch".into()))?;
        let (t, n) = (first.num_frames(), first.num_joints());
        let mut data = Array2::zeros((batch.len() * t * n, COORD_DIM));
        for (b, seq) in batch.iter().enumerate() {
            if seq.num_frames() != t || seq.num_joints() != n {
                return Err(Error::InvalidInput(format!(
                    "batch mixes shapes {}x{} and {t}x{n}",
                    seq.num_frames(),
                    seq.num_joints()
                )));
            }
            let block = seq
                .frames()
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((t * n, COORD_DIM))
                .expect("contiguous");
            data.slice_mut(s![b * t * n..(b + 1) * t * n, ..]).assign(&block);
        }
        Ok(Self::new(data, batch.len(), t, n))
    }

    /// Mean over frames and joints: `B x C`.
    pub fn global_pool(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.batch, self.channels()));
        let scale = 1.0 / self.rows_per_sample() as f64;
        for b in 0..self.batch {
            let mean = self.sample(b).sum_axis(Axis(0)) * scale;
            out.row_mut(b).assign(&mean);
        }
        out
    }
}

/// `(T*N) x C` sample block to `N x (T*C)`.
fn to_joint_major(block: ArrayView2<f64>, t: usize, n: usize) -> Array2<f64> {
    let c = block.ncols();
    let mut out = Array2::zeros((n, t * c));
    for ti in 0..t {
        for ni in 0..n {
            out.slice_mut(s![ni, ti * c..(ti + 1) * c])
                .assign(&block.row(ti * n + ni));
        }
    }
    out
}

fn from_joint_major(jm: &Array2<f64>, t: usize, n: usize, c: usize) -> Array2<f64> {
    let mut out = Array2::zeros((t * n, c));
    for ti in 0..t {
        for ni in 0..n {
            out.row_mut(ti * n + ni)
                .assign(&jm.slice(s![ni, ti * c..(ti + 1) * c]));
        }
    }
    out
}

/// Apply an `N x N` graph to every frame of a sample block.
fn mix_frames(g: &ArrayView2<f64>, block: ArrayView2<f64>, t: usize, n: usize) -> Array2<f64> {
    let c = block.ncols();
    from_joint_major(&g.dot(&to_joint_major(block, t, n)), t, n, c)
}

// ---------------------------------------------------------------------------
// Spatial graph convolution

/// One adaptive graph layer: per partition `p`, `relu(D_p^-1/2 (B_p + alpha C_p) D_p^-1/2 X Theta_p)`,
/// summed over the three partitions.
#[derive(Debug, Clone)]
pub struct AdaptiveGraphLayer {
    pub c_in: usize,
    pub c_out: usize,
    pub c_embed: usize,
    pub adaptive: bool,
    pub theta: [ParamId; 3],
    pub graph: [ParamId; 3],
    pub embed_a: [ParamId; 3],
    pub embed_b: [ParamId; 3],
    pub alpha: ParamId,
    /// `D_p^{-1/2}` diagonals, fixed from the initial partition subsets.
    pub degree_inv_sqrt: [Array1<f64>; 3],
}

impl AdaptiveGraphLayer {
    pub fn build(
        layout: &mut ParamLayout,
        prefix: &str,
        topology: &GraphTopology,
        c_in: usize,
        c_out: usize,
        c_embed: usize,
        adaptive: bool,
    ) -> Result<Self> {
        let part = partition_edges(topology, topology.root())?;
        let n = topology.joint_count();
        let names = ["centripetal", "root", "centrifugal"];
        let mut theta = Vec::new();
        let mut graph = Vec::new();
        let mut embed_a = Vec::new();
        let mut embed_b = Vec::new();
        let mut dinv = Vec::new();
        for (p, subset) in part.subsets().iter().enumerate() {
            let nm = names[p];
            theta.push(layout.add(format!("{prefix}.theta.{nm}"), &[c_in, c_out], Init::He { fan_in: c_in }));
            graph.push(layout.add(
                format!("{prefix}.graph.{nm}"),
                &[n, n],
                Init::Values(subset.iter().copied().collect()),
            ));
            embed_a.push(layout.add(format!("{prefix}.embed_a.{nm}"), &[c_in, c_embed], Init::He { fan_in: c_in }));
            embed_b.push(layout.add(format!("{prefix}.embed_b.{nm}"), &[c_in, c_embed], Init::He { fan_in: c_in }));
            dinv.push(subset.rows().into_iter().map(|r| 1.0 / r.sum().max(1.0).sqrt()).collect::<Array1<f64>>());
        }
        let alpha = layout.add(format!("{prefix}.alpha"), &[1], Init::Zeros);
        let arr = |v: Vec<ParamId>| [v[0], v[1], v[2]];
        Ok(Self {
            c_in,
            c_out,
            c_embed,
            adaptive,
            theta: arr(theta),
            graph: arr(graph),
            embed_a: arr(embed_a),
            embed_b: arr(embed_b),
            alpha,
            degree_inv_sqrt: [dinv[0].clone(), dinv[1].clone(), dinv[2].clone()],
        })
    }

    /// Per-sample graph `C_p = softmax_rows(E_a E_b^T / c_embed)` from the frame-mean features.
    fn sample_graph(&self, params: &ParamSet, p: usize, xbar: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let ea = xbar.dot(&params.matrix(self.embed_a[p]));
        let eb = xbar.dot(&params.matrix(self.embed_b[p]));
        let scores = ea.dot(&eb.t()) / self.c_embed as f64;
        (softmax_rows(&scores), ea, eb)
    }

    /// Normalized effective graph for one sample.
    fn effective_graph(&self, params: &ParamSet, p: usize, sample_graph: Option<&Array2<f64>>) -> Array2<f64> {
        let mut m = params.matrix(self.graph[p]).to_owned();
        if let Some(c) = sample_graph {
            m.scaled_add(params.scalar(self.alpha), c);
        }
        let d = &self.degree_inv_sqrt[p];
        let n = d.len();
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] *= d[i] * d[j];
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct SgcCache {
    input: FeatureMap,
    xbar: Vec<Array2<f64>>,
    /// Indexed `[p][b]`: sample graph, embeddings, effective graph.
    sample_graphs: Vec<Vec<(Array2<f64>, Array2<f64>, Array2<f64>)>>,
    effective: Vec<Vec<Array2<f64>>>,
    projected: Vec<Array2<f64>>,
    pre_activation: Vec<Array2<f64>>,
}

fn frame_means(x: &FeatureMap) -> Vec<Array2<f64>> {
    (0..x.batch)
        .map(|b| {
            let blk = x.sample(b);
            let mut acc = Array2::zeros((x.joints, x.channels()));
            for t in 0..x.frames {
                acc += &blk.slice(s![t * x.joints..(t + 1) * x.joints, ..]);
            }
            acc / x.frames as f64
        })
        .collect()
}

pub fn sgc_forward(params: &ParamSet, layer: &AdaptiveGraphLayer, x: &FeatureMap) -> Result<(FeatureMap, SgcCache)> {
    if x.channels() != layer.c_in {
        return Err(Error::Dimension {
            context: "sgc input channels",
            expected: layer.c_in,
            found: x.channels(),
        });
    }
    if x.joints != layer.degree_inv_sqrt[0].len() {
        return Err(Error::Dimension {
            context: "sgc joint count",
            expected: layer.degree_inv_sqrt[0].len(),
            found: x.joints,
        });
    }
    let xbar = frame_means(x);
    let rows = x.rows_per_sample();
    let mut out = Array2::zeros((x.data.nrows(), layer.c_out));
    let mut sample_graphs = Vec::with_capacity(3);
    let mut effective = Vec::with_capacity(3);
    let mut projected = Vec::with_capacity(3);
    let mut pre_activation = Vec::with_capacity(3);
    for p in 0..3 {
        let y = x.data.dot(&params.matrix(layer.theta[p]));
        let mut z = Array2::zeros(y.raw_dim());
        let mut sg_p = Vec::with_capacity(x.batch);
        let mut eff_p = Vec::with_capacity(x.batch);
        for (b, xb) in xbar.iter().enumerate() {
            let sg = if layer.adaptive {
                Some(layer.sample_graph(params, p, xb))
            } else {
                None
            };
            let g = layer.effective_graph(params, p, sg.as_ref().map(|v| &v.0));
            let mixed = mix_frames(&g.view(), y.slice(s![b * rows..(b + 1) * rows, ..]), x.frames, x.joints);
            z.slice_mut(s![b * rows..(b + 1) * rows, ..]).assign(&mixed);
            if let Some(sg) = sg {
                sg_p.push(sg);
            }
            eff_p.push(g);
        }
        out.zip_mut_with(&z, |o, &v| *o += if v > 0.0 { v } else { 0.0 });
        sample_graphs.push(sg_p);
        effective.push(eff_p);
        projected.push(y);
        pre_activation.push(z);
    }
    let cache = SgcCache {
        input: x.clone(),
        xbar,
        sample_graphs,
        effective,
        projected,
        pre_activation,
    };
    Ok((x.with_data(out), cache))
}

pub fn sgc_backward(params: &ParamSet, layer: &AdaptiveGraphLayer, cache: &SgcCache, d_out: &Array2<f64>, grads: &mut ParamSet) -> Array2<f64> {
    let x = &cache.input;
    let rows = x.rows_per_sample();
    let (t, n) = (x.frames, x.joints);
    let mut dx = Array2::zeros(x.data.raw_dim());
    let alpha = params.scalar(layer.alpha);
    for p in 0..3 {
        let z = &cache.pre_activation[p];
        let y = &cache.projected[p];
        let mut dz = d_out.clone();
        dz.zip_mut_with(z, |d, &v| {
            if v <= 0.0 {
                *d = 0.0
            }
        });
        let mut dy = Array2::zeros(y.raw_dim());
        let d = &layer.degree_inv_sqrt[p];
        for b in 0..x.batch {
            let range = b * rows..(b + 1) * rows;
            let dz_b = to_joint_major(dz.slice(s![range.clone(), ..]), t, n);
            let y_b = to_joint_major(y.slice(s![range.clone(), ..]), t, n);
            let g = &cache.effective[p][b];
            let dg = dz_b.dot(&y_b.t());
            dy.slice_mut(s![range, ..])
                .assign(&from_joint_major(&g.t().dot(&dz_b), t, n, layer.c_out));
            let mut dm = dg;
            for i in 0..n {
                for j in 0..n {
                    dm[[i, j]] *= d[i] * d[j];
                }
            }
            params_add(grads, layer.graph[p], &dm);
            if layer.adaptive {
                let (c, ea, eb) = &cache.sample_graphs[p][b];
                grads.add_scalar(layer.alpha, (&dm * c).sum());
                let dc = dm * alpha;
                let ds = softmax_rows_backward(c, &dc) / layer.c_embed as f64;
                let dea = ds.dot(eb);
                let deb = ds.t().dot(ea);
                let xbar = &cache.xbar[b];
                params_add(grads, layer.embed_a[p], &xbar.t().dot(&dea));
                params_add(grads, layer.embed_b[p], &xbar.t().dot(&deb));
                let dxbar = dea.dot(&params.matrix(layer.embed_a[p]).t()) + deb.dot(&params.matrix(layer.embed_b[p]).t());
                let share = dxbar / t as f64;
                for ti in 0..t {
                    let start = b * rows + ti * n;
                    let mut blk = dx.slice_mut(s![start..start + n, ..]);
                    blk += &share;
                }
            }
        }
        params_add(grads, layer.theta[p], &x.data.t().dot(&dy));
        dx += &dy.dot(&params.matrix(layer.theta[p]).t());
    }
    dx
}

fn params_add(grads: &mut ParamSet, id: ParamId, delta: &Array2<f64>) {
    grads.add_matrix(id, delta);
}

// ---------------------------------------------------------------------------
// Temporal convolution

/// 1-D convolution over frames, applied per joint with channel mixing and
/// same-length zero padding. Weight rows are tap-major: `tap * c_in + c`.
#[derive(Debug, Clone)]
pub struct TemporalConv {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl TemporalConv {
    pub fn build(layout: &mut ParamLayout, prefix: &str, c_in: usize, c_out: usize, kernel: usize) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(Error::InvalidConfig(format!("temporal kernel width must be odd, got {kernel}")));
        }
        let weight = layout.add(
            format!("{prefix}.tconv.weight"),
            &[kernel * c_in, c_out],
            Init::He { fan_in: kernel * c_in },
        );
        let bias = layout.add(format!("{prefix}.tconv.bias"), &[c_out], Init::Zeros);
        Ok(Self {
            c_in,
            c_out,
            kernel,
            weight,
            bias,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TgcCache {
    columns: Array2<f64>,
    shape: (usize, usize, usize),
}

fn im2col(x: &FeatureMap, kernel: usize) -> Array2<f64> {
    let c = x.channels();
    let half = kernel / 2;
    let (t, n) = (x.frames, x.joints);
    let mut cols = Array2::zeros((x.data.nrows(), kernel * c));
    for b in 0..x.batch {
        for ti in 0..t {
            for tap in 0..kernel {
                let src_t = ti as isize + tap as isize - half as isize;
                if src_t < 0 || src_t >= t as isize {
                    continue;
                }
                let src = (b * t + src_t as usize) * n;
                let dst = (b * t + ti) * n;
                cols.slice_mut(s![dst..dst + n, tap * c..(tap + 1) * c])
                    .assign(&x.data.slice(s![src..src + n, ..]));
            }
        }
    }
    cols
}

pub fn tgc_forward(params: &ParamSet, conv: &TemporalConv, x: &FeatureMap) -> Result<(FeatureMap, TgcCache)> {
    if x.channels() != conv.c_in {
        return Err(Error::Dimension {
            context: "tgc input channels",
            expected: conv.c_in,
            found: x.channels(),
        });
    }
    let columns = im2col(x, conv.kernel);
    let out = affine(&columns.view(), &params.matrix(conv.weight), &params.vector(conv.bias));
    let cache = TgcCache {
        columns,
        shape: (x.batch, x.frames, x.joints),
    };
    Ok((x.with_data(out), cache))
}

pub fn tgc_backward(params: &ParamSet, conv: &TemporalConv, cache: &TgcCache, d_out: &Array2<f64>, grads: &mut ParamSet) -> Array2<f64> {
    let w = params.matrix(conv.weight);
    let (dcols, dw, db) = affine_backward(&cache.columns.view(), &w, d_out);
    grads.add_matrix(conv.weight, &dw);
    let mut gb = grads.vector_mut(conv.bias);
    gb += &db;
    let (batch, t, n) = cache.shape;
    let c = conv.c_in;
    let half = conv.kernel / 2;
    let mut dx = Array2::zeros((batch * t * n, c));
    for b in 0..batch {
        for ti in 0..t {
            for tap in 0..conv.kernel {
                let src_t = ti as isize + tap as isize - half as isize;
                if src_t < 0 || src_t >= t as isize {
                    continue;
                }
                let src = (b * t + src_t as usize) * n;
                let dst = (b * t + ti) * n;
                let mut target = dx.slice_mut(s![src..src + n, ..]);
                target += &dcols.slice(s![dst..dst + n, tap * c..(tap + 1) * c]);
            }
        }
    }
    dx
}

// ---------------------------------------------------------------------------
// Attention gates

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GateAxis {
    Joint,
    Frame,
    Channel,
}

#[derive(Debug, Clone)]
struct Gate {
    axis: GateAxis,
    weight: ParamId,
    bias: ParamId,
}

/// Squeeze-excitation gates over joints, then frames, then channels.
#[derive(Debug, Clone)]
pub struct AttentionBlock {
    pub enabled: bool,
    gates: Vec<Gate>,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    /// Per gate: input feature map and gate values (`B x K`).
    stages: Vec<(FeatureMap, Array2<f64>)>,
}

impl GateAxis {
    fn size(self, x: &FeatureMap) -> usize {
        match self {
            GateAxis::Joint => x.joints,
            GateAxis::Frame => x.frames,
            GateAxis::Channel => x.channels(),
        }
    }

    fn key(self, t: usize, n: usize, c: usize) -> usize {
        match self {
            GateAxis::Joint => n,
            GateAxis::Frame => t,
            GateAxis::Channel => c,
        }
    }
}

impl AttentionBlock {
    pub fn build(layout: &mut ParamLayout, prefix: &str, frames: usize, joints: usize, channels: usize, enabled: bool) -> Self {
        let mut gates = Vec::new();
        if enabled {
            for (axis, name, k) in [
                (GateAxis::Joint, "joint", joints),
                (GateAxis::Frame, "frame", frames),
                (GateAxis::Channel, "channel", channels),
            ] {
                let bound = 1.0 / (k as f64).sqrt();
                let weight = layout.add(format!("{prefix}.attn.{name}.weight"), &[k, k], Init::Uniform { bound });
                let bias = layout.add(format!("{prefix}.attn.{name}.bias"), &[k], Init::Zeros);
                gates.push(Gate { axis, weight, bias });
            }
        }
        Self { enabled, gates }
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            gates: Vec::new(),
        }
    }

    pub fn forward(&self, params: &ParamSet, x: &FeatureMap) -> Result<(FeatureMap, AttentionCache)> {
        let mut cur = x.clone();
        let mut stages = Vec::new();
        if !self.enabled {
            return Ok((cur, AttentionCache { stages }));
        }
        for gate in &self.gates {
            let k = gate.axis.size(&cur);
            if params.get(gate.weight).shape[0] != k {
                return Err(Error::Dimension {
                    context: "attention gate size",
                    expected: params.get(gate.weight).shape[0],
                    found: k,
                });
            }
            let squeezed = squeeze(&cur, gate.axis);
            let mut g = affine(&squeezed.view(), &params.matrix(gate.weight), &params.vector(gate.bias));
            g.mapv_inplace(sigmoid);
            let mut next = cur.data.clone();
            for_each_cell(&cur, |row, b, t, n, c| {
                next[[row, c]] *= g[[b, gate.axis.key(t, n, c)]];
            });
            stages.push((cur.clone(), g));
            cur = cur.with_data(next);
        }
        Ok((cur, AttentionCache { stages }))
    }

    pub fn backward(&self, params: &ParamSet, cache: &AttentionCache, d_out: &Array2<f64>, grads: &mut ParamSet) -> Array2<f64> {
        let mut d = d_out.clone();
        for (gate, (input, g)) in self.gates.iter().zip(&cache.stages).rev() {
            let axis = gate.axis;
            let k = g.ncols();
            let mut dg = Array2::zeros((input.batch, k));
            let mut dx = Array2::zeros(input.data.raw_dim());
            for_each_cell(input, |row, b, t, n, c| {
                let key = axis.key(t, n, c);
                dg[[b, key]] += d[[row, c]] * input.data[[row, c]];
                dx[[row, c]] = d[[row, c]] * g[[b, key]];
            });
            let dpre = &dg * &g.mapv(|v| v * (1.0 - v));
            let squeezed = squeeze(input, axis);
            let (dsq, dw, db) = affine_backward(&squeezed.view(), &params.matrix(gate.weight), &dpre);
            grads.add_matrix(gate.weight, &dw);
            let mut gb = grads.vector_mut(gate.bias);
            gb += &db;
            let count = (input.frames * input.joints * input.channels() / k) as f64;
            for_each_cell(input, |row, b, t, n, c| {
                dx[[row, c]] += dsq[[b, axis.key(t, n, c)]] / count;
            });
            d = dx;
        }
        d
    }
}

fn for_each_cell(x: &FeatureMap, mut f: impl FnMut(usize, usize, usize, usize, usize)) {
    let mut row = 0;
    for b in 0..x.batch {
        for t in 0..x.frames {
            for n in 0..x.joints {
                for c in 0..x.channels() {
                    f(row, b, t, n, c);
                }
                row += 1;
            }
        }
    }
}

fn squeeze(x: &FeatureMap, axis: GateAxis) -> Array2<f64> {
    let k = axis.size(x);
    let count = (x.frames * x.joints * x.channels() / k) as f64;
    let mut out = Array2::zeros((x.batch, k));
    for_each_cell(x, |row, b, t, n, c| {
        out[[b, axis.key(t, n, c)]] += x.data[[row, c]];
    });
    out / count
}

// ---------------------------------------------------------------------------
// Reprojection head

/// Two-layer MLP `relu(e W1 + b1) W2 + b2` into the contrastive space.
#[derive(Debug, Clone)]
pub struct ReprojectionHead {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

#[derive(Debug, Clone)]
pub struct HeadCache {
    input: Array2<f64>,
    hidden_pre: Array2<f64>,
    hidden: Array2<f64>,
}

impl ReprojectionHead {
    pub fn build(layout: &mut ParamLayout, prefix: &str, input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        let w1 = layout.add(format!("{prefix}.w1"), &[input_dim, hidden_dim], Init::He { fan_in: input_dim });
        let b1 = layout.add(format!("{prefix}.b1"), &[hidden_dim], Init::Zeros);
        let w2 = layout.add(format!("{prefix}.w2"), &[hidden_dim, output_dim], Init::He { fan_in: hidden_dim });
        let b2 = layout.add(format!("{prefix}.b2"), &[output_dim], Init::Zeros);
        Self {
            input_dim,
            hidden_dim,
            output_dim,
            w1,
            b1,
            w2,
            b2,
        }
    }

    pub fn forward(&self, params: &ParamSet, e: &Array2<f64>) -> Result<(Array2<f64>, HeadCache)> {
        if e.ncols() != self.input_dim {
            return Err(Error::Dimension {
                context: "reprojection input",
                expected: self.input_dim,
                found: e.ncols(),
            });
        }
        let hidden_pre = affine(&e.view(), &params.matrix(self.w1), &params.vector(self.b1));
        let hidden = hidden_pre.mapv(|v| v.max(0.0));
        let z = affine(&hidden.view(), &params.matrix(self.w2), &params.vector(self.b2));
        Ok((
            z,
            HeadCache {
                input: e.clone(),
                hidden_pre,
                hidden,
            },
        ))
    }

    pub fn backward(&self, params: &ParamSet, cache: &HeadCache, dz: &Array2<f64>, grads: &mut ParamSet) -> Array2<f64> {
        let (dh, dw2, db2) = affine_backward(&cache.hidden.view(), &params.matrix(self.w2), dz);
        grads.add_matrix(self.w2, &dw2);
        let mut g = grads.vector_mut(self.b2);
        g += &db2;
        let mut dpre = dh;
        dpre.zip_mut_with(&cache.hidden_pre, |d, &v| {
            if v <= 0.0 {
                *d = 0.0
            }
        });
        let (de, dw1, db1) = affine_backward(&cache.input.view(), &params.matrix(self.w1), &dpre);
        grads.add_matrix(self.w1, &dw1);
        let mut g = grads.vector_mut(self.b1);
        g += &db1;
        de
    }
}

/// Single-vector reprojection.
pub fn reproject(params: &ParamSet, head: &ReprojectionHead, embedding: &[f64]) -> Result<Vec<f64>> {
    let e = Array2::from_shape_vec((1, embedding.len()), embedding.to_vec()).expect("row vector");
    let (z, _) = head.forward(params, &e)?;
    Ok(z.into_raw_vec_and_offset().0)
}

// ---------------------------------------------------------------------------
// Encoder

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpatialConfig {
    /// Output channels of each block; the input has 3 coordinate channels.
    pub channels: Vec<usize>,
    pub temporal_kernel: usize,
    pub embed_dim: usize,
    pub adaptive: bool,
    pub attention: bool,
    /// Sequence length; required by the frame attention gate.
    pub frames: usize,
    pub head_hidden: usize,
    pub projection_dim: usize,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SpatialConfig {
    /// Four blocks `16 -> 16 -> 32 -> 64`, attention off.
    pub fn desk() -> Self {
        Self {
            channels: vec![16, 16, 32, 64],
            temporal_kernel: 3,
            embed_dim: 8,
            adaptive: true,
            attention: false,
            frames: 32,
            head_hidden: 64,
            projection_dim: PROJECTION_DIM,
        }
    }

    /// Ten-block joint-stream channel layout with attention gates.
    pub fn full_scale(frames: usize) -> Self {
        Self {
            channels: vec![64, 64, 64, 64, 128, 128, 128, 256, 256, 256],
            temporal_kernel: 9,
            embed_dim: 16,
            adaptive: true,
            attention: true,
            frames,
            head_hidden: 256,
            projection_dim: PROJECTION_DIM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::InvalidConfig("spatial channels must be non-empty and positive".into()));
        }
        if self.temporal_kernel % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "temporal kernel width must be odd, got {}",
                self.temporal_kernel
            )));
        }
        if self.embed_dim == 0 || self.head_hidden == 0 || self.projection_dim == 0 {
            return Err(Error::InvalidConfig("spatial dims must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SpatialBlock {
    pub sgc: AdaptiveGraphLayer,
    pub attention: AttentionBlock,
    pub tgc: TemporalConv,
}

#[derive(Debug, Clone)]
struct BlockCache {
    sgc: SgcCache,
    attention: AttentionCache,
    tgc: TgcCache,
    pre_activation: Array2<f64>,
}

impl SpatialBlock {
    fn forward(&self, params: &ParamSet, x: &FeatureMap) -> Result<(FeatureMap, BlockCache)> {
        let (h, sgc) = sgc_forward(params, &self.sgc, x)?;
        let (h, attention) = self.attention.forward(params, &h)?;
        let (h, tgc) = tgc_forward(params, &self.tgc, &h)?;
        let out = h.data.mapv(|v| v.max(0.0));
        Ok((
            h.with_data(out),
            BlockCache {
                sgc,
                attention,
                tgc,
                pre_activation: h.data,
            },
        ))
    }

    fn backward(&self, params: &ParamSet, cache: &BlockCache, d_out: &Array2<f64>, grads: &mut ParamSet) -> Array2<f64> {
        let mut d = d_out.clone();
        d.zip_mut_with(&cache.pre_activation, |g, &v| {
            if v <= 0.0 {
                *g = 0.0
            }
        });
        let d = tgc_backward(params, &self.tgc, &cache.tgc, &d, grads);
        let d = self.attention.backward(params, &cache.attention, &d, grads);
        sgc_backward(params, &self.sgc, &cache.sgc, &d, grads)
    }
}

/// Graph-form encoder plus its reprojection head.
#[derive(Debug, Clone)]
pub struct SpatialModel {
    pub config: SpatialConfig,
    pub topology: GraphTopology,
    pub blocks: Vec<SpatialBlock>,
    pub head: ReprojectionHead,
    layout: ParamLayout,
}

#[derive(Debug, Clone)]
pub struct SpatialCache {
    blocks: Vec<BlockCache>,
    pooled_shape: (usize, usize, usize),
    head: HeadCache,
}

impl SpatialModel {
    pub fn new(config: SpatialConfig, topology: GraphTopology) -> Result<Self> {
        config.validate()?;
        let mut layout = ParamLayout::new();
        let mut blocks = Vec::new();
        let mut c_in = COORD_DIM;
        for (i, &c_out) in config.channels.iter().enumerate() {
            let prefix = format!("spatial.block{i}");
            let sgc = AdaptiveGraphLayer::build(&mut layout, &prefix, &topology, c_in, c_out, config.embed_dim, config.adaptive)?;
            let attention = AttentionBlock::build(
                &mut layout,
                &prefix,
                config.frames,
                topology.joint_count(),
                c_out,
                config.attention,
            );
            let tgc = TemporalConv::build(&mut layout, &prefix, c_out, c_out, config.temporal_kernel)?;
            blocks.push(SpatialBlock { sgc, attention, tgc });
            c_in = c_out;
        }
        let head = ReprojectionHead::build(&mut layout, "spatial.head", c_in, config.head_hidden, config.projection_dim);
        Ok(Self {
            config,
            topology,
            blocks,
            head,
            layout,
        })
    }

    pub fn encoder_dim(&self) -> usize {
        *self.config.channels.last().expect("validated")
    }

    fn input(&self, batch: &[&SkeletonSequence]) -> Result<FeatureMap> {
        let x = FeatureMap::from_sequences(batch)?;
        if x.joints != self.topology.joint_count() {
            return Err(Error::Dimension {
                context: "spatial encoder joint count",
                expected: self.topology.joint_count(),
                found: x.joints,
            });
        }
        if self.config.attention && x.frames != self.config.frames {
            return Err(Error::Dimension {
                context: "spatial encoder frame count",
                expected: self.config.frames,
                found: x.frames,
            });
        }
        Ok(x)
    }

    fn encode_map(&self, params: &ParamSet, x: FeatureMap) -> Result<(FeatureMap, Vec<BlockCache>)> {
        let mut h = x;
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (next, cache) = block.forward(params, &h)?;
            caches.push(cache);
            h = next;
        }
        Ok((h, caches))
    }

    /// Pooled encoder representation, `B x C_enc`.
    pub fn encode(&self, params: &ParamSet, batch: &[&SkeletonSequence]) -> Result<Array2<f64>> {
        let (h, _) = self.encode_map(params, self.input(batch)?)?;
        Ok(h.global_pool())
    }
}

/// Pooled representation of one sequence.
pub fn encode_spatial(model: &SpatialModel, params: &ParamSet, seq: &SkeletonSequence) -> Result<Vec<f64>> {
    Ok(model.encode(params, &[seq])?.into_raw_vec_and_offset().0)
}

impl StreamModel for SpatialModel {
    type Cache = SpatialCache;

    fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    fn encoder_dim(&self) -> usize {
        SpatialModel::encoder_dim(self)
    }

    fn projection_dim(&self) -> usize {
        self.head.output_dim
    }

    fn embed(&self, params: &ParamSet, batch: &[&SkeletonSequence]) -> Result<Array2<f64>> {
        self.encode(params, batch)
    }

    fn project(&self, params: &ParamSet, batch: &[&SkeletonSequence]) -> Result<(Array2<f64>, SpatialCache)> {
        let (h, blocks) = self.encode_map(params, self.input(batch)?)?;
        let pooled = h.global_pool();
        let (z, head) = self.head.forward(params, &pooled)?;
        Ok((
            z,
            SpatialCache {
                blocks,
                pooled_shape: (h.batch, h.frames, h.joints),
                head,
            },
        ))
    }

    fn backward(&self, params: &ParamSet, cache: &SpatialCache, d_proj: &Array2<f64>) -> ParamSet {
        let mut grads = params.zeros_like();
        let d_pooled = self.head.backward(params, &cache.head, d_proj, &mut grads);
        let (batch, frames, joints) = cache.pooled_shape;
        let rows = frames * joints;
        let mut d = Array2::zeros((batch * rows, d_pooled.ncols()));
        let scale = 1.0 / rows as f64;
        for b in 0..batch {
            let g = d_pooled.row(b).mapv(|v| v * scale);
            for r in 0..rows {
                d.row_mut(b * rows + r).assign(&g);
            }
        }
        for (block, bc) in self.blocks.iter().zip(&cache.blocks).rev() {
            d = block.backward(params, bc, &d, &mut grads);
        }
        grads
    }
}
