//! Skeleton sequences and labelled samples.

use ndarray::{s, Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Number of spatial coordinates per joint.
pub const COORD_DIM: usize = 3;

pub const DEFAULT_FRAME_RATE: f64 = 30.0;

/// A `T x N x 3` joint-coordinate tensor.
///
/// Sequences are stored in a canonical frame with the root joint at the origin
/// in frame 0 (see [`SkeletonSequence::normalize_to_root`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    frames: Array3<f64>,
    frame_rate: f64,
}

impl SkeletonSequence {
    pub fn new(frames: Array3<f64>, frame_rate: f64) -> Result<Self> {
        let (t, n, c) = frames.dim();
        if t < 2 {
            return Err(Error::InvalidInput(format!("sequence needs T >= 2, got {t}")));
        }
        if n < 1 {
            return Err(Error::InvalidInput("sequence needs at least one joint".into()));
        }
        if c != COORD_DIM {
            return Err(Error::InvalidInput(format!("coordinate dim must be 3, got {c}")));
        }
        if let Some((idx, _)) = frames.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                id: String::from("<in-memory>"),
                frame: idx.0,
                joint: idx.1,
            });
        }
        Ok(Self { frames, frame_rate })
    }

    /// Build from a flat T-major, joint-next, coordinate-last buffer.
    pub fn from_flat(t: usize, n: usize, data: Vec<f64>, frame_rate: f64) -> Result<Self> {
        let expected = t * n * COORD_DIM;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                id: String::from("<in-memory>"),
                expected,
                found: data.len(),
            });
        }
        let frames = Array3::from_shape_vec((t, n, COORD_DIM), data)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(frames, frame_rate)
    }

    pub fn num_frames(&self) -> usize {
        self.frames.dim().0
    }

    pub fn num_joints(&self) -> usize {
        self.frames.dim().1
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frames(&self) -> &Array3<f64> {
        &self.frames
    }

    pub fn into_frames(self) -> Array3<f64> {
        self.frames
    }

    /// Joint coordinates of frame `t` as an `N x 3` view.
    pub fn frame(&self, t: usize) -> ArrayView2<'_, f64> {
        self.frames.index_axis(Axis(0), t)
    }

    pub fn joint(&self, t: usize, n: usize) -> [f64; 3] {
        [
            self.frames[[t, n, 0]],
            self.frames[[t, n, 1]],
            self.frames[[t, n, 2]],
        ]
    }

    /// Frames flattened to `T x (N*3)`, the layout consumed by the recurrent stream.
    pub fn flattened(&self) -> Array2<f64> {
        let (t, n, c) = self.frames.dim();
        self.frames
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((t, n * c))
            .expect("contiguous reshape")
    }

    /// Gather frames by source index; used by every temporal transform.
    pub fn gather(&self, indices: &[usize]) -> Result<Self> {
        let (_, n, c) = self.frames.dim();
        let mut out = Array3::zeros((indices.len(), n, c));
        for (dst, &src) in indices.iter().enumerate() {
            if src >= self.num_frames() {
                return Err(Error::InvalidInput(format!(
                    "frame index {src} out of range for T={}",
                    self.num_frames()
                )));
            }
            out.slice_mut(s![dst, .., ..]).assign(&self.frames.slice(s![src, .., ..]));
        }
        Self::new(out, self.frame_rate)
    }

    /// Apply a function to every coordinate row (one joint in one frame).
    pub fn map_joints(&self, mut f: impl FnMut(usize, usize, [f64; 3]) -> [f64; 3]) -> Result<Self> {
        let (t, n, _) = self.frames.dim();
        let mut out = self.frames.clone();
        for ti in 0..t {
            for ni in 0..n {
                let v = f(ti, ni, self.joint(ti, ni));
                for (k, x) in v.into_iter().enumerate() {
                    out[[ti, ni, k]] = x;
                }
            }
        }
        Self::new(out, self.frame_rate)
    }

    /// Translate so that `root` sits at the origin in frame 0.
    ///
    /// Ingestion-side normalization: datasets are expected to be stored
    /// already normalized, so nothing downstream calls this implicitly.
    pub fn normalize_to_root(&self, root: usize) -> Result<Self> {
        if root >= self.num_joints() {
            return Err(Error::InvalidInput(format!("root joint {root} out of range")));
        }
        let origin = self.joint(0, root);
        self.map_joints(|_, _, p| [p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]])
    }
}

/// Source-frame map of nearest-frame (floor) resampling: `floor(t_out * T_in / target)`.
pub fn resample_indices(t_in: usize, target: usize) -> Vec<usize> {
    (0..target).map(|t| t * t_in / target).collect()
}

pub fn resample_sequence(seq: &SkeletonSequence, target_t: usize) -> Result<SkeletonSequence> {
    if target_t < 2 {
        return Err(Error::InvalidInput(format!("target length must be >= 2, got {target_t}")));
    }
    seq.gather(&resample_indices(seq.num_frames(), target_t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sequence: SkeletonSequence,
    pub category: usize,
    pub subject_id: u32,
    pub video_id: String,
}
