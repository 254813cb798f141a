//! Micro-gesture augmentations and the baseline attack-style transforms.
//!
//! Every transform has a `draw_*` step that consumes the random stream and a
//! deterministic `apply_*` step, so tests can pin the drawn parameters.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::skeleton::{resample_indices, SkeletonSequence};

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    CoordinatePerturbation,
    ViewPerturbation,
    RepeatClip,
    ReverseClip,
    PosterizeTime,
    Stretch,
    BaselineCoordinateAttack,
    BaselineViewpointAttack,
    BaselineDropNode,
    BaselineDropFrames,
    BaselineSymmetry,
    Identity,
}

impl AugmentationKind {
    pub const ALL: [AugmentationKind; 12] = [
        AugmentationKind::CoordinatePerturbation,
        AugmentationKind::ViewPerturbation,
        AugmentationKind::RepeatClip,
        AugmentationKind::ReverseClip,
        AugmentationKind::PosterizeTime,
        AugmentationKind::Stretch,
        AugmentationKind::BaselineCoordinateAttack,
        AugmentationKind::BaselineViewpointAttack,
        AugmentationKind::BaselineDropNode,
        AugmentationKind::BaselineDropFrames,
        AugmentationKind::BaselineSymmetry,
        AugmentationKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugmentationKind::CoordinatePerturbation => "coordinate_perturbation",
            AugmentationKind::ViewPerturbation => "view_perturbation",
            AugmentationKind::RepeatClip => "repeat_clip",
            AugmentationKind::ReverseClip => "reverse_clip",
            AugmentationKind::PosterizeTime => "posterize_time",
            AugmentationKind::Stretch => "stretch",
            AugmentationKind::BaselineCoordinateAttack => "baseline_coordinate_attack",
            AugmentationKind::BaselineViewpointAttack => "baseline_viewpoint_attack",
            AugmentationKind::BaselineDropNode => "baseline_drop_node",
            AugmentationKind::BaselineDropFrames => "baseline_drop_frames",
            AugmentationKind::BaselineSymmetry => "baseline_symmetry",
            AugmentationKind::Identity => "identity",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(
            self,
            AugmentationKind::BaselineCoordinateAttack
                | AugmentationKind::BaselineViewpointAttack
                | AugmentationKind::BaselineDropNode
                | AugmentationKind::BaselineDropFrames
                | AugmentationKind::BaselineSymmetry
        )
    }
}

impl FromStr for AugmentationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AugmentationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown augmentation kind '{s}'")))
    }
}

/// Length-dependent fields left as `None` resolve from the sequence length `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    /// Temperature dividing the perturbation coefficient (not the loss temperature).
    pub perturb_temperature: f64,
    /// `None` selects `max(1, ceil(0.3 N))` joints.
    pub perturbed_joint_count: Option<usize>,
    pub lambda_clamp: f64,
    pub lambda_epsilon: f64,
    pub view_major_range: f64,
    pub view_minor_range: f64,
    /// Latest start of a repeated clip; `None` selects `floor(T/4)`.
    pub repeat_l0: Option<usize>,
    /// Repeated clip length bounds; `None` selects `[floor(T/8), floor(T/2) - 1]`.
    pub repeat_len_range: Option<(usize, usize)>,
    /// Reversed clip length bounds; `None` selects `[floor(T/8), floor(T/2)]`.
    pub reverse_len_range: Option<(usize, usize)>,
    pub posterize_segments: usize,
    /// Anchor clip length at both ends; `None` selects `ceil(T/8)`.
    pub posterize_anchor: Option<usize>,
    pub posterize_rate_range: (f64, f64),
    pub stretch_shape_range: (f64, f64),
    pub stretch_tilt_range: (f64, f64),
    pub attack_jitter_scale: f64,
    pub attack_rotation_range: f64,
    /// `None` drops `max(1, floor(T/8))` frames.
    pub drop_frame_count: Option<usize>,
    pub symmetry_axis: usize,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            perturb_temperature: 1.0,
            perturbed_joint_count: None,
            lambda_clamp: 1.0,
            lambda_epsilon: 1e-6,
            view_major_range: PI / 4.0,
            view_minor_range: PI / 6.0,
            repeat_l0: None,
            repeat_len_range: None,
            reverse_len_range: None,
            posterize_segments: 3,
            posterize_anchor: None,
            posterize_rate_range: (0.5, 2.0),
            stretch_shape_range: (1.0, 2.0),
            stretch_tilt_range: (-1.0, 1.0),
            attack_jitter_scale: 0.1,
            attack_rotation_range: PI / 4.0,
            drop_frame_count: None,
            symmetry_axis: 0,
        }
    }
}

impl AugmentationConfig {
    pub fn joints_to_perturb(&self, n: usize) -> usize {
        self.perturbed_joint_count
            .unwrap_or_else(|| ((0.3 * n as f64).ceil() as usize).max(1))
            .min(n)
    }

    pub fn repeat_bounds(&self, t: usize) -> (usize, usize, usize) {
        let l0 = self.repeat_l0.unwrap_or(t / 4);
        let (lo, hi) = self
            .repeat_len_range
            .unwrap_or((t / 8, (t / 2).saturating_sub(1)));
        (l0, lo, hi)
    }

    pub fn reverse_bounds(&self, t: usize) -> (usize, usize) {
        let (lo, hi) = self.reverse_len_range.unwrap_or((t / 8, t / 2));
        (lo.max(1), hi.max(lo.max(1)).min(t))
    }

    pub fn posterize_anchor_len(&self, t: usize) -> usize {
        self.posterize_anchor.unwrap_or(t.div_ceil(8))
    }
}

// ---------------------------------------------------------------------------
// Matrix helpers (row-vector convention: p' = p * M)

pub fn mat_mul3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn row_times(p: [f64; 3], m: &Mat3) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        *o = p[0] * m[0][j] + p[1] * m[1][j] + p[2] * m[2][j];
    }
    out
}

pub fn rotation_x(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]]
}

pub fn rotation_y(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]]
}

pub fn rotation_z(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// `R_X(x) * R_Y(y) * R_Z(z)`.
pub fn euler_rotation(angles: [f64; 3]) -> Mat3 {
    mat_mul3(&mat_mul3(&rotation_x(angles[0]), &rotation_y(angles[1])), &rotation_z(angles[2]))
}

pub fn apply_linear(seq: &SkeletonSequence, m: &Mat3) -> Result<SkeletonSequence> {
    seq.map_joints(|_, _, p| row_times(p, m))
}

// ---------------------------------------------------------------------------
// Coordinate perturbation

/// Per-axis coefficient `(1/tau) (fin - mid) / (mid - sta)` with an epsilon
/// guard on the denominator, clamped to `[-clamp, clamp]`.
pub fn perturbation_coefficient(
    sta: [f64; 3],
    mid: [f64; 3],
    fin: [f64; 3],
    cfg: &AugmentationConfig,
) -> [f64; 3] {
    let mut lambda = [0.0; 3];
    for a in 0..3 {
        let num = fin[a] - mid[a];
        let mut den = mid[a] - sta[a];
        if den.abs() < cfg.lambda_epsilon {
            den = if den < 0.0 { -cfg.lambda_epsilon } else { cfg.lambda_epsilon };
        }
        let raw = num / den / cfg.perturb_temperature;
        lambda[a] = raw.clamp(-cfg.lambda_clamp, cfg.lambda_clamp);
    }
    lambda
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinatePerturbation {
    pub joints: Vec<usize>,
    /// One perturbation row per selected joint, shared by every frame.
    pub offsets: Vec<[f64; 3]>,
}

pub fn draw_coordinate_perturbation(
    n: usize,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> CoordinatePerturbation {
    let joints = rng.choose_distinct(n, cfg.joints_to_perturb(n));
    let offsets = joints
        .iter()
        .map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])
        .collect();
    CoordinatePerturbation { joints, offsets }
}

pub fn apply_coordinate_perturbation(
    seq: &SkeletonSequence,
    cfg: &AugmentationConfig,
    params: &CoordinatePerturbation,
) -> Result<SkeletonSequence> {
    let t = seq.num_frames();
    if t < 3 {
        return Err(Error::InvalidInput(format!(
            "coordinate perturbation needs T >= 3, got {t}"
        )));
    }
    if params.joints.iter().any(|&j| j >= seq.num_joints()) {
        return Err(Error::InvalidInput("perturbed joint out of range".into()));
    }
    let mut shift = vec![[0.0; 3]; seq.num_joints()];
    for (&j, r) in params.joints.iter().zip(&params.offsets) {
        let lambda = perturbation_coefficient(seq.joint(0, j), seq.joint(t / 2, j), seq.joint(t - 1, j), cfg);
        for a in 0..3 {
            shift[j][a] += lambda[a] * r[a];
        }
    }
    seq.map_joints(|_, n, p| [p[0] + shift[n][0], p[1] + shift[n][1], p[2] + shift[n][2]])
}

pub fn coordinate_perturbation(
    seq: &SkeletonSequence,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<SkeletonSequence> {
    if seq.num_frames() < 3 {
        return Err(Error::InvalidInput(format!(
            "coordinate perturbation needs T >= 3, got {}",
            seq.num_frames()
        )));
    }
    let params = draw_coordinate_perturbation(seq.num_joints(), cfg, rng);
    apply_coordinate_perturbation(seq, cfg, &params)
}

// ---------------------------------------------------------------------------
// View perturbation

/// Euler angles: one uniformly chosen axis from the major range, the other two
/// from the minor range.
pub fn draw_view_angles(cfg: &AugmentationConfig, rng: &mut RandomStream) -> [f64; 3] {
    let major = rng.below(3);
    let mut angles = [0.0; 3];
    for (axis, a) in angles.iter_mut().enumerate() {
        let bound = if axis == major { cfg.view_major_range } else { cfg.view_minor_range };
        *a = rng.uniform(-bound, bound);
    }
    angles
}

pub fn view_perturbation(
    seq: &SkeletonSequence,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<SkeletonSequence> {
    let angles = draw_view_angles(cfg, rng);
    apply_linear(seq, &euler_rotation(angles))
}

// ---------------------------------------------------------------------------
// Repeat clip

/// Source-frame map of the lengthened sequence with clip `[start, start+len)`
/// duplicated right after itself.
pub fn repeat_clip_indices(t: usize, start: usize, len: usize) -> Vec<usize> {
    let end = (start + len).min(t);
    (0..end).chain(start..end).chain(end..t).collect()
}

pub fn apply_repeat_clip(seq: &SkeletonSequence, start: usize, len: usize) -> Result<SkeletonSequence> {
    let t = seq.num_frames();
    if start + len > t {
        return Err(Error::InvalidInput(format!("repeat clip [{start}, {}) exceeds T={t}", start + len)));
    }
    let long = repeat_clip_indices(t, start, len);
    let idx: Vec<usize> = resample_indices(long.len(), t).into_iter().map(|i| long[i]).collect();
    seq.gather(&idx)
}

pub fn repeat_clip(
    seq: &SkeletonSequence,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<SkeletonSequence> {
    let t = seq.num_frames();
    let (l0, lo, hi) = cfg.repeat_bounds(t);
    if l0 + hi >= t || lo > hi {
        return Err(Error::InvalidConfig(format!(
            "repeat clip requires L0 + L_high < T and L_low <= L_high (L0={l0}, L=[{lo},{hi}], T={t})"
        )));
    }
    let start = rng.int_inclusive(0, l0);
    let len = rng.int_inclusive(lo, hi);
    apply_repeat_clip(seq, start, len)
}

// ---------------------------------------------------------------------------
// Reverse clip

pub fn reverse_clip_indices(t: usize, start: usize, len: usize) -> Vec<usize> {
    let end = (start + len).min(t);
    (0..start).chain((start..end).rev()).chain(end..t).collect()
}

pub fn apply_reverse_clip(seq: &SkeletonSequence, start: usize, len: usize) -> Result<SkeletonSequence> {
    let t = seq.num_frames();
    if start + len > t {
        return Err(Error::InvalidInput(format!("reverse clip [{start}, {}) exceeds T={t}", start + len)));
    }
    seq.gather(&reverse_clip_indices(t, start, len))
}

pub fn reverse_clip(
    seq: &SkeletonSequence,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<SkeletonSequence> {
    let t = seq.num_frames();
    let (lo, hi) = cfg.reverse_bounds(t);
    let len = rng.int_inclusive(lo, hi);
    let start = rng.int_inclusive(0, t - len);
    apply_reverse_clip(seq, start, len)
}

// ---------------------------------------------------------------------------
// Posterize time

/// Source-frame map: anchors of length `anchor` at both ends are kept, the
/// interior is cut into `rates.len()` equal segments, segment `s` is
/// resampled to `round(len_s * rates[s])` frames, and the warped interior is
/// resampled back to its original length.
pub fn posterize_indices(t: usize, anchor: usize, rates: &[f64]) -> Result<Vec<usize>> {
    let k = rates.len();
    if k == 0 || t < 2 * anchor + k {
        return Err(Error::InvalidInput(format!(
            "posterize needs T >= 2*anchor + segments (T={t}, anchor={anchor}, segments={k})"
        )));
    }
    let interior = t - 2 * anchor;
    let mut warped = Vec::new();
    for (s, &rate) in rates.iter().enumerate() {
        let seg_start = anchor + s * interior / k;
        let seg_len = anchor + (s + 1) * interior / k - seg_start;
        let out_len = ((seg_len as f64 * rate).round() as usize).max(1);
        warped.extend((0..out_len).map(|j| seg_start + j * seg_len / out_len));
    }
    let mut idx: Vec<usize> = (0..anchor).collect();
    idx.extend(resample_indices(warped.len(), interior).into_iter().map(|i| warped[i]));
    idx.extend(t - anchor..t);
    Ok(idx)
}

pub fn apply_posterize_time(seq: &SkeletonSequence, anchor: usize, rates: &[f64]) -> Result<SkeletonSequence> {
    seq.gather(&posterize_indices(seq.num_frames(), anchor, rates)?)
}

pub fn posterize_time(
    seq: &SkeletonSequence,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<SkeletonSequence> {
    let t = seq.num_frames();
    let anchor = cfg.posterize_anchor_len(t);
    let (lo, hi) = cfg.posterize_rate_range;
    let rates: Vec<f64> = (0..cfg.posterize_segments).map(|_| rng.uniform(lo, hi)).collect();
    apply_posterize_time(seq, anchor, &rates)
}

// ---------------------------------------------------------------------------
// Stretch

pub fn shape_matrix(alpha: f64, beta: f64, gamma: f64) -> Mat3 {
    [[alpha, 0.0, 0.0], [0.0, beta, 0.0], [0.0, 0.0, gamma]]
}

/// Off-diagonals in row order: `t_x^y, t_x^z, t_y^x, t_y^z, t_z^x, t_z^y`.
pub fn tilt_matrix(off: [f64; 6]) -> Mat3 {
    [[1.0, off[0], off[1]], [off[2], 1.0, off[3]], [off[4], off[5], 1.0]]
}

/// Draw either a body-shape or a tilt matrix with equal probability.
pub fn draw_stretch_matrix(cfg: &AugmentationConfig, rng: &mut RandomStream) -> Mat3 {
    if rng.unit() < 0.5 {
        let (lo, hi) = cfg.stretch_shape_range;
        shape_matrix(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi))
    } else {
        let (lo, hi) = cfg.stretch_tilt_range;
        let mut off = [0.0; 6];
        for o in off.iter_mut() {
            *o = rng.uniform(lo, hi);
        }
        tilt_matrix(off)
    }
}

pub fn stretch(
    seq: &SkeletonSequence,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<SkeletonSequence> {
    let m = draw_stretch_matrix(cfg, rng);
    apply_linear(seq, &m)
}

// ---------------------------------------------------------------------------
// Baseline attack-style augmentations

pub fn apply_drop_node(seq: &SkeletonSequence, joint: usize) -> Result<SkeletonSequence> {
    seq.map_joints(|_, n, p| if n == joint { [0.0; 3] } else { p })
}

pub fn apply_drop_frames(seq: &SkeletonSequence, frames: &[usize]) -> Result<SkeletonSequence> {
    seq.map_joints(|t, _, p| if frames.contains(&t) { [0.0; 3] } else { p })
}

pub fn apply_symmetry(seq: &SkeletonSequence, axis: usize) -> Result<SkeletonSequence> {
    if axis > 2 {
        return Err(Error::InvalidConfig(format!("symmetry axis {axis} out of range")));
    }
    seq.map_joints(|_, _, mut p| {
        p[axis] = -p[axis];
        p
    })
}

pub fn baseline_augment(
    seq: &SkeletonSequence,
    kind: AugmentationKind,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<SkeletonSequence> {
    match kind {
        AugmentationKind::BaselineDropNode => {
            let joint = rng.below(seq.num_joints());
            apply_drop_node(seq, joint)
        }
        AugmentationKind::BaselineDropFrames => {
            let t = seq.num_frames();
            let count = cfg.drop_frame_count.unwrap_or((t / 8).max(1)).min(t);
            let frames = rng.choose_distinct(t, count);
            apply_drop_frames(seq, &frames)
        }
        AugmentationKind::BaselineSymmetry => apply_symmetry(seq, cfg.symmetry_axis),
        AugmentationKind::BaselineCoordinateAttack => {
            let jitter: Vec<[f64; 3]> = (0..seq.num_joints())
                .map(|_| {
                    let s = cfg.attack_jitter_scale;
                    [rng.uniform(-1.0, 1.0) * s, rng.uniform(-1.0, 1.0) * s, rng.uniform(-1.0, 1.0) * s]
                })
                .collect();
            seq.map_joints(|_, n, p| [p[0] + jitter[n][0], p[1] + jitter[n][1], p[2] + jitter[n][2]])
        }
        AugmentationKind::BaselineViewpointAttack => {
            let axis = rng.below(3);
            let theta = rng.uniform(-cfg.attack_rotation_range, cfg.attack_rotation_range);
            let m = match axis {
                0 => rotation_x(theta),
                1 => rotation_y(theta),
                _ => rotation_z(theta),
            };
            apply_linear(seq, &m)
        }
        other => Err(Error::InvalidInput(format!("'{}' is not a baseline augmentation", other.name()))),
    }
}

/// Dispatch one augmentation kind.
pub fn augment(
    seq: &SkeletonSequence,
    kind: AugmentationKind,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<SkeletonSequence> {
    match kind {
        AugmentationKind::CoordinatePerturbation => coordinate_perturbation(seq, cfg, rng),
        AugmentationKind::ViewPerturbation => view_perturbation(seq, cfg, rng),
        AugmentationKind::RepeatClip => repeat_clip(seq, cfg, rng),
        AugmentationKind::ReverseClip => reverse_clip(seq, cfg, rng),
        AugmentationKind::PosterizeTime => posterize_time(seq, cfg, rng),
        AugmentationKind::Stretch => stretch(seq, cfg, rng),
        AugmentationKind::Identity => Ok(seq.clone()),
        baseline => baseline_augment(seq, baseline, cfg, rng),
    }
}

// ---------------------------------------------------------------------------
// Positive pairs

/// Ordered augmentation list; each entry is applied with its probability, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPolicy {
    pub steps: Vec<(AugmentationKind, f64)>,
}

impl AugmentationPolicy {
    pub fn new(steps: Vec<(AugmentationKind, f64)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidConfig("augmentation policy is empty".into()));
        }
        if let Some((k, w)) = steps.iter().find(|(_, w)| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidConfig(format!(
                "probability {w} for '{}' outside [0, 1]",
                k.name()
            )));
        }
        Ok(Self { steps })
    }

    pub fn identity() -> Self {
        Self {
            steps: vec![(AugmentationKind::Identity, 1.0)],
        }
    }

    /// Coordinate perturbation, stretch and posterize time, each always applied.
    pub fn micro_gesture_combo() -> Self {
        Self {
            steps: vec![
                (AugmentationKind::CoordinatePerturbation, 1.0),
                (AugmentationKind::Stretch, 1.0),
                (AugmentationKind::PosterizeTime, 1.0),
            ],
        }
    }

    pub fn apply(
        &self,
        seq: &SkeletonSequence,
        cfg: &AugmentationConfig,
        rng: &mut RandomStream,
    ) -> Result<SkeletonSequence> {
        let mut out = seq.clone();
        for &(kind, p) in &self.steps {
            let take = p >= 1.0 || rng.unit() < p;
            if take {
                out = augment(&out, kind, cfg, rng)?;
            }
        }
        Ok(out)
    }
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self::micro_gesture_combo()
    }
}

/// Two independently augmented views of `seq`.
pub fn sample_positive_pair(
    seq: &SkeletonSequence,
    policy: &AugmentationPolicy,
    cfg: &AugmentationConfig,
    rng: &mut RandomStream,
) -> Result<(SkeletonSequence, SkeletonSequence)> {
    let a = policy.apply(seq, cfg, rng)?;
    let b = policy.apply(seq, cfg, rng)?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq_from(t: usize, n: usize, f: impl Fn(usize, usize, usize) -> f64) -> SkeletonSequence {
        let mut data = Vec::with_capacity(t * n * 3);
        for ti in 0..t {
            for ni in 0..n {
                for c in 0..3 {
                    data.push(f(ti, ni, c));
                }
            }
        }
        SkeletonSequence::from_flat(t, n, data, 30.0).unwrap()
    }

    fn labelled(t: usize) -> SkeletonSequence {
        // frame index encoded in every coordinate
        seq_from(t, 2, |ti, ni, c| (ti * 100 + ni * 10 + c) as f64)
    }

    fn frame_ids(seq: &SkeletonSequence) -> Vec<usize> {
        (0..seq.num_frames()).map(|t| (seq.joint(t, 0)[0] / 100.0) as usize).collect()
    }

    #[test]
    fn perturbation_zero_numerator_is_identity() {
        let seq = seq_from(5, 3, |t, n, c| if t >= 2 { (n + c) as f64 } else { (t + n * c) as f64 * 0.1 });
        let cfg = AugmentationConfig::default();
        let mut rng = RandomStream::new(1);
        let out = coordinate_perturbation(&seq, &cfg, &mut rng).unwrap();
        assert_eq!(out, seq);
    }

    #[test]
    fn perturbation_zero_offset_is_identity() {
        let seq = seq_from(6, 3, |t, n, c| (t * t + n + c) as f64);
        let cfg = AugmentationConfig::default();
        let params = CoordinatePerturbation {
            joints: vec![0, 2],
            offsets: vec![[0.0; 3]; 2],
        };
        assert_eq!(apply_coordinate_perturbation(&seq, &cfg, &params).unwrap(), seq);
    }

    #[test]
    fn perturbation_scalar_example() {
        let seq = seq_from(3, 1, |t, _, c| if c == 0 { t as f64 } else { 0.0 });
        let cfg = AugmentationConfig::default();
        let params = CoordinatePerturbation {
            joints: vec![0],
            offsets: vec![[0.5, 0.0, 0.0]],
        };
        let out = apply_coordinate_perturbation(&seq, &cfg, &params).unwrap();
        for t in 0..3 {
            assert_eq!(out.joint(t, 0), [t as f64 + 0.5, 0.0, 0.0]);
        }
    }

    #[test]
    fn perturbation_needs_three_frames() {
        let seq = seq_from(2, 1, |_, _, _| 0.0);
        let mut rng = RandomStream::new(0);
        assert!(coordinate_perturbation(&seq, &AugmentationConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn lambda_is_clamped() {
        let cfg = AugmentationConfig {
            lambda_clamp: 0.25,
            ..Default::default()
        };
        let l = perturbation_coefficient([0.0; 3], [1e-9, 1.0, -1.0], [5.0, 3.0, 100.0], &cfg);
        assert_eq!(l, [0.25, 0.25, -0.25]);
    }

    #[test]
    fn rotation_of_unit_y_about_x() {
        let r = euler_rotation([PI / 2.0, 0.0, 0.0]);
        let p = row_times([0.0, 1.0, 0.0], &r);
        assert!((p[0]).abs() < 1e-15 && (p[1]).abs() < 1e-15 && (p[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_angles_are_identity() {
        let seq = labelled(4);
        assert_eq!(apply_linear(&seq, &euler_rotation([0.0; 3])).unwrap(), seq);
    }

    #[test]
    fn view_angles_follow_ranges() {
        let cfg = AugmentationConfig::default();
        let mut rng = RandomStream::new(5);
        for _ in 0..500 {
            let a = draw_view_angles(&cfg, &mut rng);
            let big = a.iter().filter(|x| x.abs() > PI / 6.0).count();
            assert!(big <= 1);
            assert!(a.iter().all(|x| x.abs() <= PI / 4.0));
        }
    }

    #[test]
    fn repeat_clip_index_trace() {
        assert_eq!(repeat_clip_indices(8, 2, 2), vec![0, 1, 2, 3, 2, 3, 4, 5, 6, 7]);
        let seq = labelled(8);
        let out = apply_repeat_clip(&seq, 2, 2).unwrap();
        let long = [0, 1, 2, 3, 2, 3, 4, 5, 6, 7];
        let expect: Vec<usize> = (0..8).map(|t| long[t * 10 / 8]).collect();
        assert_eq!(frame_ids(&out), expect);
        assert_eq!(apply_repeat_clip(&seq, 3, 0).unwrap(), seq);
    }

    #[test]
    fn repeat_clip_constraint_violation() {
        let cfg = AugmentationConfig {
            repeat_l0: Some(4),
            repeat_len_range: Some((1, 4)),
            ..Default::default()
        };
        let mut rng = RandomStream::new(0);
        assert!(matches!(repeat_clip(&labelled(8), &cfg, &mut rng), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn repeat_on_constant_is_identity() {
        let seq = seq_from(16, 2, |_, n, c| (n + c) as f64);
        let mut rng = RandomStream::new(11);
        let out = repeat_clip(&seq, &AugmentationConfig::default(), &mut rng).unwrap();
        assert_eq!(out, seq);
    }

    #[test]
    fn reverse_clip_trace_and_involution() {
        let seq = labelled(8);
        let once = apply_reverse_clip(&seq, 2, 3).unwrap();
        assert_eq!(frame_ids(&once), vec![0, 1, 4, 3, 2, 5, 6, 7]);
        assert_eq!(apply_reverse_clip(&once, 2, 3).unwrap(), seq);
        assert_eq!(apply_reverse_clip(&seq, 5, 1).unwrap(), seq);
    }

    #[test]
    fn posterize_unit_rates_is_identity() {
        let seq = labelled(32);
        assert_eq!(apply_posterize_time(&seq, 4, &[1.0, 1.0, 1.0]).unwrap(), seq);
    }

    #[test]
    fn posterize_precondition() {
        assert!(posterize_indices(9, 4, &[1.0, 1.0]).is_err());
        assert!(posterize_indices(10, 4, &[1.0, 1.0]).is_ok());
    }

    #[test]
    fn stretch_identities_and_example() {
        let seq = labelled(4);
        assert_eq!(apply_linear(&seq, &shape_matrix(1.0, 1.0, 1.0)).unwrap(), seq);
        assert_eq!(apply_linear(&seq, &tilt_matrix([0.0; 6])).unwrap(), seq);
        assert_eq!(row_times([1.0, 2.0, 3.0], &shape_matrix(2.0, 1.0, 1.0)), [2.0, 2.0, 3.0]);
    }

    #[test]
    fn drop_node_single_joint_zeroes_everything() {
        let seq = seq_from(4, 1, |t, _, c| (t + c + 1) as f64);
        let mut rng = RandomStream::new(2);
        let out = baseline_augment(&seq, AugmentationKind::BaselineDropNode, &AugmentationConfig::default(), &mut rng)
            .unwrap();
        assert!(out.frames().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn drop_frames_counts() {
        let seq = seq_from(8, 3, |t, n, c| (t + n + c + 1) as f64);
        let cfg = AugmentationConfig {
            drop_frame_count: Some(2),
            ..Default::default()
        };
        let mut rng = RandomStream::new(8);
        let out = baseline_augment(&seq, AugmentationKind::BaselineDropFrames, &cfg, &mut rng).unwrap();
        let zero_frames = (0..8).filter(|&t| out.frame(t).iter().all(|&v| v == 0.0)).count();
        assert_eq!(zero_frames, 2);
    }

    #[test]
    fn symmetry_is_involution() {
        let seq = labelled(5);
        let mut rng = RandomStream::new(0);
        let cfg = AugmentationConfig::default();
        let once = baseline_augment(&seq, AugmentationKind::BaselineSymmetry, &cfg, &mut rng).unwrap();
        assert_ne!(once, seq);
        let twice = baseline_augment(&once, AugmentationKind::BaselineSymmetry, &cfg, &mut rng).unwrap();
        assert_eq!(twice, seq);
    }

    #[test]
    fn baseline_rejects_non_baseline_kind() {
        let mut rng = RandomStream::new(0);
        let r = baseline_augment(&labelled(4), AugmentationKind::Stretch, &AugmentationConfig::default(), &mut rng);
        assert!(r.is_err());
    }

    #[test]
    fn identity_policy_pairs_equal_input() {
        let seq = labelled(8);
        let mut rng = RandomStream::new(3);
        let (a, b) =
            sample_positive_pair(&seq, &AugmentationPolicy::identity(), &AugmentationConfig::default(), &mut rng)
                .unwrap();
        assert_eq!(a, seq);
        assert_eq!(b, seq);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in AugmentationKind::ALL {
            assert_eq!(k.name().parse::<AugmentationKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert!("flat".parse::<AugmentationKind>().is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(AugmentationPolicy::new(vec![]).is_err());
        assert!(AugmentationPolicy::new(vec![(AugmentationKind::Stretch, 1.5)]).is_err());
    }
}
