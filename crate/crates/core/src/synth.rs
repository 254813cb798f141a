//! Deterministic micro-gesture-like datasets for desk-scale experiments.
//!
//! Each category is a small oscillation of a few distal joints around a rest
//! pose. Subjects add their own body proportions, tempo and joint offsets, so
//! category evidence is subtle relative to who performs it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::augment::{row_times, Mat3};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::skeleton::{LabeledSample, SkeletonSequence, DEFAULT_FRAME_RATE};

/// Rest pose of the 15-joint skeleton (x right, y up, z forward).
pub const REST_POSE_15: [[f64; 3]; 15] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.25, 0.0],
    [0.0, 0.5, 0.0],
    [0.0, 0.62, 0.0],
    [-0.18, 0.48, 0.0],
    [-0.25, 0.25, 0.02],
    [-0.22, 0.05, 0.1],
    [0.18, 0.48, 0.0],
    [0.25, 0.25, 0.02],
    [0.22, 0.05, 0.1],
    [-0.2, 0.0, 0.15],
    [0.2, 0.0, 0.15],
    [-0.1, -0.05, 0.0],
    [0.1, -0.05, 0.0],
    [0.0, 0.62, 0.08],
];

/// Joints that may carry a category's motion: head, elbows, wrists, hands, nose.
const DISTAL_JOINTS: [usize; 8] = [3, 5, 6, 8, 9, 10, 11, 14];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionProgram {
    pub joints: Vec<usize>,
    /// Unit displacement direction.
    pub direction: [f64; 3],
    /// Whole oscillation cycles over the sequence.
    pub cycles: u32,
    pub amplitude: f64,
    pub phase: f64,
    /// Static displacement of the active joints.
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub num_categories: usize,
    /// Total samples per category, over all subjects.
    pub samples_per_category: usize,
    pub num_subjects: usize,
    pub joints: usize,
    pub frames: usize,
    /// Bounds of the per-category oscillation amplitude.
    pub amplitude_range: (f64, f64),
    /// Standard deviation of per-coordinate Gaussian noise.
    pub noise_sigma: f64,
    /// Standard deviation of the per-sample phase shift, radians.
    pub phase_jitter: f64,
    /// Per-sample amplitude factor drawn from `1 +- amplitude_jitter`.
    pub amplitude_jitter: f64,
    /// Scale of the per-subject nuisance factors (0 disables them).
    pub subject_variation: f64,
    /// Explicit programs; drawn from the seed when absent.
    pub programs: Option<Vec<MotionProgram>>,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// 8 categories, 50 samples each from 10 subjects (25 per split), N=15, T=32.
    fn default() -> Self {
        Self {
            num_categories: 8,
            samples_per_category: 50,
            num_subjects: 10,
            joints: 15,
            frames: 32,
            amplitude_range: (0.03, 0.06),
            noise_sigma: 0.005,
            phase_jitter: 0.3,
            amplitude_jitter: 0.2,
            subject_variation: 0.5,
            programs: None,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_categories == 0 {
            return Err(Error::InvalidConfig("synthetic spec needs at least one category".into()));
        }
        if self.samples_per_category == 0 || self.num_subjects == 0 {
            return Err(Error::InvalidConfig("samples_per_category and num_subjects must be >= 1".into()));
        }
        if self.joints != REST_POSE_15.len() {
            return Err(Error::InvalidConfig(format!(
                "synthetic skeleton has {} joints, got {}",
                REST_POSE_15.len(),
                self.joints
            )));
        }
        if self.frames < 2 {
            return Err(Error::InvalidConfig("frames must be >= 2".into()));
        }
        if [self.noise_sigma, self.phase_jitter, self.amplitude_jitter, self.subject_variation]
            .iter()
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidConfig("noise and variation scales must be finite and >= 0".into()));
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig("amplitude_range must satisfy 0 < lo <= hi".into()));
        }
        if let Some(p) = &self.programs {
            if p.len() != self.num_categories {
                return Err(Error::InvalidConfig(format!(
                    "{} programs for {} categories",
                    p.len(),
                    self.num_categories
                )));
            }
            for (i, a) in p.iter().enumerate() {
                if a.joints.iter().any(|&j| j >= self.joints) {
                    return Err(Error::InvalidConfig(format!("program {i} references a joint out of range")));
                }
                if p[..i].iter().any(|b| b == a) {
                    return Err(Error::InvalidConfig(format!("program {i} duplicates an earlier category")));
                }
            }
        }
        Ok(())
    }

    /// Subjects in the first half go to training, the rest to testing.
    pub fn train_subjects(&self) -> Vec<u32> {
        (0..(self.num_subjects / 2).max(1) as u32).collect()
    }
}

/// Per-category programs with distinct (joint set, cycles) signatures.
pub fn draw_programs(num_categories: usize, amplitude_range: (f64, f64), rng: &mut RandomStream) -> Vec<MotionProgram> {
    let mut programs: Vec<MotionProgram> = Vec::with_capacity(num_categories);
    while programs.len() < num_categories {
        let count = 1 + rng.below(2);
        let mut joints: Vec<usize> = rng
            .choose_distinct(DISTAL_JOINTS.len(), count)
            .into_iter()
            .map(|i| DISTAL_JOINTS[i])
            .collect();
        joints.sort_unstable();
        let cycles = 1 + rng.below(4) as u32;
        let taken = programs.iter().any(|p| p.joints == joints && p.cycles == cycles);
        let d = [rng.normal(), rng.normal(), rng.normal()];
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().max(1e-9);
        let program = MotionProgram {
            joints,
            direction: [d[0] / norm, d[1] / norm, d[2] / norm],
            cycles,
            amplitude: rng.uniform(amplitude_range.0, amplitude_range.1),
            phase: rng.uniform(0.0, 2.0 * PI),
            offset: [rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)],
        };
        if !taken {
            programs.push(program);
        }
    }
    programs
}

#[derive(Debug, Clone)]
struct Subject {
    body: Mat3,
    /// Monotone warp `u + warp * u * (1 - u)` of normalized time.
    warp: f64,
    joint_offsets: Vec<[f64; 3]>,
}

fn draw_subject(variation: f64, joints: usize, rng: &mut RandomStream) -> Subject {
    let mut body = [[0.0; 3]; 3];
    for (i, row) in body.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j {
                1.0 + variation * rng.uniform(-0.15, 0.15)
            } else {
                variation * rng.uniform(-0.1, 0.1)
            };
        }
    }
    let warp = variation * rng.uniform(-0.6, 0.6);
    let joint_offsets = (0..joints)
        .map(|_| [0.01 * variation * rng.normal(), 0.01 * variation * rng.normal(), 0.01 * variation * rng.normal()])
        .collect();
    Subject {
        body,
        warp,
        joint_offsets,
    }
}

/// Generate every sample, category-major; sample `k` of a category belongs to
/// subject `k % num_subjects`. Coordinates are rounded to `f32` precision.
pub fn generate(spec: &SynthSpec) -> Result<Vec<LabeledSample>> {
    spec.validate()?;
    let mut root = RandomStream::new(spec.seed);
    let programs = match &spec.programs {
        Some(p) => p.clone(),
        None => draw_programs(spec.num_categories, spec.amplitude_range, &mut root.fork(1)),
    };
    let mut subject_rng = root.fork(2);
    let subjects: Vec<Subject> = (0..spec.num_subjects)
        .map(|_| draw_subject(spec.subject_variation, spec.joints, &mut subject_rng))
        .collect();
    let mut sample_rng = root.fork(3);
    let (t_len, n) = (spec.frames, spec.joints);
    let mut samples = Vec::with_capacity(spec.num_categories * spec.samples_per_category);
    for (c, program) in programs.iter().enumerate() {
        for k in 0..spec.samples_per_category {
            let subject_id = k % spec.num_subjects;
            let subject = &subjects[subject_id];
            let phase = program.phase + spec.phase_jitter * sample_rng.normal();
            let amplitude = program.amplitude * (1.0 + spec.amplitude_jitter * sample_rng.uniform(-1.0, 1.0));
            let mut data = Vec::with_capacity(t_len * n * 3);
            for t in 0..t_len {
                let u = t as f64 / (t_len - 1) as f64;
                let warped = u + subject.warp * u * (1.0 - u);
                let s = (2.0 * PI * program.cycles as f64 * warped + phase).sin();
                for j in 0..n {
                    let mut p = REST_POSE_15[j];
                    if program.joints.contains(&j) {
                        for (x, (d, o)) in p.iter_mut().zip(program.direction.iter().zip(&program.offset)) {
                            *x += o + amplitude * s * d;
                        }
                    }
                    let mut p = row_times(p, &subject.body);
                    for (x, o) in p.iter_mut().zip(&subject.joint_offsets[j]) {
                        *x += o;
                    }
                    for x in p {
                        let noisy = if spec.noise_sigma > 0.0 {
                            x + spec.noise_sigma * sample_rng.normal()
                        } else {
                            x
                        };
                        data.push(noisy as f32 as f64);
                    }
                }
            }
            samples.push(LabeledSample {
                sequence: SkeletonSequence::from_flat(t_len, n, data, DEFAULT_FRAME_RATE)?,
                category: c,
                subject_id: subject_id as u32,
                video_id: format!("synth_c{c:02}_s{k:03}"),
            });
        }
    }
    Ok(samples)
}

/// Programs used by `generate` for this spec.
pub fn programs_for(spec: &SynthSpec) -> Vec<MotionProgram> {
    match &spec.programs {
        Some(p) => p.clone(),
        None => draw_programs(spec.num_categories, spec.amplitude_range, &mut RandomStream::new(spec.seed).fork(1)),
    }
}

/// Oscillation cycles of a sampled signal, from sign changes about its midrange.
pub fn estimate_cycles(signal: &[f64]) -> usize {
    let (lo, hi) = signal
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mid = 0.5 * (lo + hi);
    let crossings = signal
        .windows(2)
        .filter(|w| (w[0] - mid).signum() != (w[1] - mid).signum())
        .count();
    (crossings + 1) / 2
}
