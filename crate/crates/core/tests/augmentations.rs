use mg_core::augment::*;
use mg_core::rng::RandomStream;
use mg_core::skeleton::SkeletonSequence;
use proptest::prelude::*;

fn random_seq(seed: u64, t: usize, n: usize) -> SkeletonSequence {
    let mut rng = RandomStream::new(seed);
    let data = (0..t * n * 3).map(|_| rng.normal()).collect();
    SkeletonSequence::from_flat(t, n, data, 30.0).unwrap()
}

/// Frame `t` carries the value `t` in every coordinate, so frames can be traced back.
fn labelled(t: usize, n: usize) -> SkeletonSequence {
    let data = (0..t).flat_map(|ti| std::iter::repeat_n(ti as f64, n * 3)).collect();
    SkeletonSequence::from_flat(t, n, data, 30.0).unwrap()
}

fn frame_ids(seq: &SkeletonSequence) -> Vec<usize> {
    (0..seq.num_frames()).map(|t| seq.joint(t, 0)[0] as usize).collect()
}

fn max_abs_diff(a: &SkeletonSequence, b: &SkeletonSequence) -> f64 {
    a.frames()
        .iter()
        .zip(b.frames().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[test]
fn drawn_rotations_are_proper_orthogonal() {
    let cfg = AugmentationConfig::default();
    let mut rng = RandomStream::new(99);
    for _ in 0..1000 {
        let r = euler_rotation(draw_view_angles(&cfg, &mut rng));
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
        assert!((det3(&r) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn posterize_matches_index_oracle() {
    // anchor 4, interior [4, 28) cut at 16; 12 frames at rate 0.5 -> 6, at rate 2 -> 24,
    // 30 warped frames floor-resampled to 24.
    let want = vec![
        0, 1, 2, 3, 4, 6, 8, 10, 14, 16, 16, 17, 18, 18, 19, 19, 20, 21, 21, 22, 23, 23, 24, 24, 25, 26, 26, 27,
        28, 29, 30, 31,
    ];
    assert_eq!(posterize_indices(32, 4, &[0.5, 2.0]).unwrap(), want);
    let out = apply_posterize_time(&labelled(32, 2), 4, &[0.5, 2.0]).unwrap();
    assert_eq!(frame_ids(&out), want);
}

#[test]
fn seed_neighbours_give_different_pairs() {
    let seq = random_seq(5, 32, 15);
    let policy = AugmentationPolicy::default();
    let cfg = AugmentationConfig::default();
    for s in 0..100u64 {
        let a = sample_positive_pair(&seq, &policy, &cfg, &mut RandomStream::new(s)).unwrap();
        let again = sample_positive_pair(&seq, &policy, &cfg, &mut RandomStream::new(s)).unwrap();
        let b = sample_positive_pair(&seq, &policy, &cfg, &mut RandomStream::new(s + 1)).unwrap();
        assert_eq!(a, again);
        assert!(a.0 != b.0 || a.1 != b.1, "seed {s}");
    }
}

#[test]
fn every_kind_is_bit_deterministic() {
    let seq = random_seq(8, 24, 6);
    let cfg = AugmentationConfig::default();
    for kind in AugmentationKind::ALL {
        let a = augment(&seq, kind, &cfg, &mut RandomStream::new(4)).unwrap();
        let b = augment(&seq, kind, &cfg, &mut RandomStream::new(4)).unwrap();
        assert_eq!(a, b, "{}", kind.name());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_kind_preserves_shape_and_finiteness(seed in 0u64..10_000, t in 16usize..48, n in 1usize..8) {
        let seq = random_seq(seed, t, n);
        let cfg = AugmentationConfig::default();
        for kind in AugmentationKind::ALL {
            let out = augment(&seq, kind, &cfg, &mut RandomStream::new(seed ^ 0x5a)).unwrap();
            prop_assert_eq!(out.frames().dim(), seq.frames().dim(), "{}", kind.name());
            prop_assert!(out.frames().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn linear_transforms_carry_frame_differences(seed in 0u64..10_000, use_view in any::<bool>()) {
        let seq = random_seq(seed, 12, 4);
        let cfg = AugmentationConfig::default();
        let mut rng = RandomStream::new(seed + 1);
        let m = if use_view {
            euler_rotation(draw_view_angles(&cfg, &mut rng))
        } else {
            draw_stretch_matrix(&cfg, &mut rng)
        };
        let out = apply_linear(&seq, &m).unwrap();
        for t in 0..11 {
            for n in 0..4 {
                let (a0, a1) = (seq.joint(t, n), seq.joint(t + 1, n));
                let d = [a1[0] - a0[0], a1[1] - a0[1], a1[2] - a0[2]];
                let want = row_times(d, &m);
                let (b0, b1) = (out.joint(t, n), out.joint(t + 1, n));
                for c in 0..3 {
                    prop_assert!(((b1[c] - b0[c]) - want[c]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn reverse_and_symmetry_are_involutions(seed in 0u64..10_000, t in 4usize..40, start in 0usize..40, len in 0usize..40, axis in 0usize..3) {
        let seq = random_seq(seed, t, 3);
        let start = start % t;
        let len = len % (t - start + 1);
        let once = apply_reverse_clip(&seq, start, len).unwrap();
        prop_assert_eq!(apply_reverse_clip(&once, start, len).unwrap(), seq.clone());
        let mirrored = apply_symmetry(&seq, axis).unwrap();
        prop_assert_eq!(apply_symmetry(&mirrored, axis).unwrap(), seq);
    }

    #[test]
    fn temporal_resampling_invents_no_poses(seed in 0u64..10_000, t in 16usize..64) {
        let seq = labelled(t, 2);
        let cfg = AugmentationConfig::default();
        let mut rng = RandomStream::new(seed);
        for kind in [AugmentationKind::RepeatClip, AugmentationKind::PosterizeTime] {
            let out = augment(&seq, kind, &cfg, &mut rng).unwrap();
            for ti in 0..t {
                let id = out.joint(ti, 0)[0];
                prop_assert!(id.fract() == 0.0 && (id as usize) < t);
                prop_assert_eq!(out.frame(ti), seq.frame(id as usize));
            }
        }
    }

    #[test]
    fn posterize_keeps_anchors_and_order(seed in 0u64..10_000, t in 16usize..64) {
        let seq = labelled(t, 1);
        let cfg = AugmentationConfig::default();
        let out = posterize_time(&seq, &cfg, &mut RandomStream::new(seed)).unwrap();
        let ids = frame_ids(&out);
        let anchor = cfg.posterize_anchor_len(t);
        prop_assert_eq!(&ids[..anchor], &(0..anchor).collect::<Vec<_>>()[..]);
        prop_assert_eq!(&ids[t - anchor..], &(t - anchor..t).collect::<Vec<_>>()[..]);
        prop_assert!(ids.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn vanishing_lambda_clamp_is_identity(seed in 0u64..10_000) {
        let seq = random_seq(seed, 16, 6);
        let cfg = AugmentationConfig { lambda_clamp: 1e-12, ..AugmentationConfig::default() };
        let out = coordinate_perturbation(&seq, &cfg, &mut RandomStream::new(seed)).unwrap();
        prop_assert!(max_abs_diff(&out, &seq) <= 1e-11);
    }

    #[test]
    fn perturbation_only_moves_selected_joints(seed in 0u64..10_000, n in 1usize..10) {
        let seq = random_seq(seed, 9, n);
        let cfg = AugmentationConfig::default();
        let params = draw_coordinate_perturbation(n, &cfg, &mut RandomStream::new(seed));
        prop_assert_eq!(params.joints.len(), cfg.joints_to_perturb(n));
        let out = apply_coordinate_perturbation(&seq, &cfg, &params).unwrap();
        for j in (0..n).filter(|j| !params.joints.contains(j)) {
            for t in 0..9 {
                prop_assert_eq!(out.joint(t, j), seq.joint(t, j));
            }
        }
        // The shift of a selected joint is the same in every frame.
        for &j in &params.joints {
            let d0: Vec<f64> = (0..3).map(|c| out.joint(0, j)[c] - seq.joint(0, j)[c]).collect();
            for t in 1..9 {
                for c in 0..3 {
                    prop_assert!((out.joint(t, j)[c] - seq.joint(t, j)[c] - d0[c]).abs() < 1e-12);
                }
            }
        }
    }
}
