use mg_core::graph::{partition_edges, GraphTopology};
use mg_core::nn::ParamSet;
use mg_core::spatial::{AdaptiveGraphLayer, FeatureMap, TemporalConv};
use mg_core::temporal::{GruDirection, TemporalModel};
use ndarray::Array2;

pub fn softmax_naive(s: &Array2<f64>) -> Array2<f64> {
    let mut out = s.clone();
    for mut row in out.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
        row.mapv_inplace(|v| (v - m).exp() / z);
    }
    out
}

pub fn matmul_naive(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = 0.0;
            for k in 0..a.ncols() {
                acc += a[[i, k]] * b[[k, j]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Brute-force graph layer over a `(B*T*N) x C` map.
pub fn sgc_oracle(layer: &AdaptiveGraphLayer, params: &ParamSet, topology: &GraphTopology, x: &FeatureMap) -> Array2<f64> {
    let part = partition_edges(topology, topology.root()).unwrap();
    let (bs, t, n) = (x.batch, x.frames, x.joints);
    let c_in = x.channels();
    let mut out = Array2::zeros((x.data.nrows(), layer.c_out));
    let alpha = params.scalar(layer.alpha);
    for p in 0..3 {
        let a = part.subsets()[p].clone();
        let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[[i, j]]).sum::<f64>().max(1.0)).collect();
        let theta = params.matrix(layer.theta[p]).to_owned();
        let bmat = params.matrix(layer.graph[p]).to_owned();
        for b in 0..bs {
            let mut xbar = Array2::<f64>::zeros((n, c_in));
            for ti in 0..t {
                for j in 0..n {
                    for c in 0..c_in {
                        xbar[[j, c]] += x.data[[(b * t + ti) * n + j, c]] / t as f64;
                    }
                }
            }
            let mut m = bmat.clone();
            if layer.adaptive {
                let ea = matmul_naive(&xbar, &params.matrix(layer.embed_a[p]).to_owned());
                let eb = matmul_naive(&xbar, &params.matrix(layer.embed_b[p]).to_owned());
                let s = matmul_naive(&ea, &eb.t().to_owned()) / layer.c_embed as f64;
                m = m + softmax_naive(&s) * alpha;
            }
            for ti in 0..t {
                for i in 0..n {
                    for co in 0..layer.c_out {
                        let mut acc = 0.0;
                        for j in 0..n {
                            let g = m[[i, j]] / (deg[i].sqrt() * deg[j].sqrt());
                            for c in 0..c_in {
                                acc += g * x.data[[(b * t + ti) * n + j, c]] * theta[[c, co]];
                            }
                        }
                        out[[(b * t + ti) * n + i, co]] += acc.max(0.0);
                    }
                }
            }
        }
    }
    out
}

pub fn tgc_oracle(conv: &TemporalConv, params: &ParamSet, x: &FeatureMap) -> Array2<f64> {
    let w = params.matrix(conv.weight);
    let bias = params.vector(conv.bias);
    let (bs, t, n) = (x.batch, x.frames, x.joints);
    let half = (conv.kernel / 2) as isize;
    let mut out = Array2::zeros((x.data.nrows(), conv.c_out));
    for b in 0..bs {
        for ti in 0..t {
            for j in 0..n {
                for co in 0..conv.c_out {
                    let mut acc = bias[co];
                    for tap in 0..conv.kernel {
                        let src = ti as isize + tap as isize - half;
                        if src < 0 || src >= t as isize {
                            continue;
                        }
                        for c in 0..conv.c_in {
                            acc += x.data[[(b * t + src as usize) * n + j, c]] * w[[tap * conv.c_in + c, co]];
                        }
                    }
                    out[[(b * t + ti) * n + j, co]] = acc;
                }
            }
        }
    }
    out
}

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar unrolled GRU over `xs` (frames x dim), columns of the weight
/// matrices ordered reset, update, candidate.
pub fn gru_oracle(params: &ParamSet, dir: &GruDirection, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let h_dim = dir.hidden;
    let wi = params.matrix(dir.w_ih);
    let wh = params.matrix(dir.w_hh);
    let bi = params.vector(dir.b_ih);
    let bh = params.vector(dir.b_hh);
    let mut h = vec![0.0; h_dim];
    let mut out = Vec::new();
    for x in xs {
        let gate = |g: usize, j: usize, v: &[f64], w: ndarray::ArrayView2<f64>| -> f64 {
            (0..v.len()).map(|k| v[k] * w[[k, g * h_dim + j]]).sum::<f64>()
        };
        let mut next = vec![0.0; h_dim];
        for j in 0..h_dim {
            let r = sig(gate(0, j, x, wi) + bi[j] + gate(0, j, &h, wh) + bh[j]);
            let z = sig(gate(1, j, x, wi) + bi[h_dim + j] + gate(1, j, &h, wh) + bh[h_dim + j]);
            let n = (gate(2, j, x, wi) + bi[2 * h_dim + j] + r * (gate(2, j, &h, wh) + bh[2 * h_dim + j])).tanh();
            next[j] = (1.0 - z) * n + z * h[j];
        }
        h = next;
        out.push(h.clone());
    }
    out
}


/// Stacked bidirectional recurrence over `xs`, mean-pooled over frames.
pub fn temporal_oracle(model: &TemporalModel, params: &ParamSet, xs: &[Vec<f64>]) -> Vec<f64> {
    let mut input = xs.to_vec();
    for layer in &model.layers {
        let fwd = gru_oracle(params, &layer.forward, &input);
        let rev: Vec<Vec<f64>> = input.iter().rev().cloned().collect();
        let mut bwd = gru_oracle(params, &layer.backward, &rev);
        bwd.reverse();
        input = fwd.into_iter().zip(bwd).map(|(f, b)| f.into_iter().chain(b).collect()).collect();
    }
    let mut pooled = vec![0.0; input[0].len()];
    for h in &input {
        for (p, v) in pooled.iter_mut().zip(h) {
            *p += v / input.len() as f64;
        }
    }
    pooled
}

/// Reference FIFO: a plain list that drops its head once it holds `capacity` keys.
pub struct ListQueue {
    pub capacity: usize,
    pub keys: Vec<Vec<f64>>,
}

impl ListQueue {
    pub fn push(&mut self, key: Vec<f64>) {
        if self.keys.len() == self.capacity {
            self.keys.remove(0);
        }
        self.keys.push(key);
    }
}
