mod common;

use mg_core::eval::*;
use mg_core::rng::RandomStream;
use mg_core::skeleton::{LabeledSample, SkeletonSequence};
use mg_core::Error;
use ndarray::{array, Array2};

#[test]
fn lr_trace_steps_at_fifty_and_eighty() {
    let trace = ProbeSchedule::default().lr_trace();
    assert_eq!(trace.len(), 100);
    for (e, &lr) in trace.iter().enumerate() {
        let want = match e {
            0..=49 => 0.1,
            50..=79 => 0.01,
            _ => 0.001,
        };
        assert!((lr - want).abs() < 1e-15, "epoch {e}: {lr}");
    }
}

fn separable_cloud(rng: &mut RandomStream, n: usize) -> (Array2<f64>, Vec<usize>) {
    let mut x = Array2::zeros((2 * n, 4));
    let mut y = Vec::new();
    for i in 0..2 * n {
        let c = i % 2;
        let centre = if c == 0 { 2.0 } else { -2.0 };
        x[[i, 0]] = centre + 0.3 * rng.normal();
        for j in 1..4 {
            x[[i, j]] = rng.normal();
        }
        y.push(c);
    }
    (x, y)
}

#[test]
fn separable_fixture_reaches_full_train_accuracy() {
    let mut rng = RandomStream::new(1);
    let (x, y) = separable_cloud(&mut rng, 40);
    let fit = train_linear_probe(&x, &y, 2, &ProbeSchedule::default(), 0).unwrap();
    let scores = fit.probe.scores(&x).unwrap();
    assert_eq!(topk_accuracy(&scores, &y, 1).unwrap(), 100.0);
}

fn noisy_three_class(seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = RandomStream::new(seed);
    let n = 120;
    let x = Array2::from_shape_fn((n, 6), |_| rng.normal());
    let y: Vec<usize> = (0..n).map(|i| (i % 3 + rng.below(2)) % 3).collect();
    (x, y)
}

#[test]
fn probe_loss_is_non_increasing_within_each_segment() {
    // Plain full-batch descent on a convex objective never goes uphill.
    let (x, y) = noisy_three_class(2);
    let schedule = ProbeSchedule {
        momentum: 0.0,
        ..ProbeSchedule::default()
    };
    let fit = train_linear_probe(&x, &y, 3, &schedule, 0).unwrap();
    for seg in [1..50, 51..80, 81..100] {
        for e in seg {
            assert!(
                fit.loss_history[e] <= fit.loss_history[e - 1] + 1e-12,
                "epoch {e}: {} > {}",
                fit.loss_history[e],
                fit.loss_history[e - 1]
            );
        }
    }
}

#[test]
fn momentum_probe_loss_falls_across_each_segment() {
    // Heavy-ball steps may overshoot for an epoch, so only segment ends are compared.
    let (x, y) = noisy_three_class(2);
    let fit = train_linear_probe(&x, &y, 3, &ProbeSchedule::default(), 0).unwrap();
    for (a, b) in [(0, 49), (50, 79), (80, 99)] {
        assert!(fit.loss_history[b] <= fit.loss_history[a], "segment {a}..={b}");
    }
    let best = fit.loss_history.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(fit.loss_history[99] <= best + 1e-3);
}

#[test]
fn permuted_labels_give_chance_accuracy() {
    let mut rng = RandomStream::new(3);
    let (c, n_train, n_test) = (8usize, 400usize, 800usize);
    let mut make = |n: usize| {
        let x = Array2::from_shape_fn((n, 16), |_| rng.normal());
        let y: Vec<usize> = (0..n).map(|_| rng.below(c)).collect();
        (x, y)
    };
    let (xtr, ytr) = make(n_train);
    let (xte, yte) = make(n_test);
    let fit = train_linear_probe(&xtr, &ytr, c, &ProbeSchedule::default(), 0).unwrap();
    let acc = topk_accuracy(&fit.probe.scores(&xte).unwrap(), &yte, 1).unwrap();
    let p = 1.0 / c as f64;
    let sigma = 100.0 * (p * (1.0 - p) / n_test as f64).sqrt();
    assert!((acc - 100.0 * p).abs() <= 3.0 * sigma, "accuracy {acc} vs chance {}", 100.0 * p);
}

#[test]
fn probe_rejects_single_category() {
    let x = Array2::zeros((4, 2));
    assert!(matches!(
        train_linear_probe(&x, &[1, 1, 1, 1], 3, &ProbeSchedule::default(), 0),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn mini_batch_mode_is_deterministic() {
    let mut rng = RandomStream::new(4);
    let (x, y) = separable_cloud(&mut rng, 30);
    let schedule = ProbeSchedule {
        batch_size: Some(16),
        ..ProbeSchedule::default()
    };
    let a = train_linear_probe(&x, &y, 2, &schedule, 9).unwrap();
    let b = train_linear_probe(&x, &y, 2, &schedule, 9).unwrap();
    assert_eq!(a.probe, b.probe);
}

#[test]
fn topk_examples() {
    let scores = array![[0.5, 0.3, 0.2], [0.1, 0.2, 0.7], [0.6, 0.3, 0.1]];
    assert_eq!(topk_accuracy(&scores, &[2, 0, 1], 3).unwrap(), 100.0);
    assert_eq!(topk_accuracy(&scores, &[0, 2, 0], 1).unwrap(), 100.0);
    // Hits at k=2: sample 0 (label 1, rank 2), sample 2 (label 1, rank 2); sample 1 misses.
    let acc = topk_accuracy(&scores, &[1, 0, 1], 2).unwrap();
    assert!((acc - 200.0 / 3.0).abs() < 1e-9);
    assert!((acc - 66.67).abs() < 0.01);
    assert!(topk_accuracy(&Array2::zeros((0, 3)), &[], 1).is_err());
    assert!(topk_accuracy(&scores, &[0, 0, 0], 4).is_err());
}

#[test]
fn topk_ties_prefer_lower_index() {
    let scores = array![[0.25, 0.25, 0.25, 0.25]];
    assert_eq!(topk_accuracy(&scores, &[0], 1).unwrap(), 100.0);
    assert_eq!(topk_accuracy(&scores, &[1], 1).unwrap(), 0.0);
    assert_eq!(topk_accuracy(&scores, &[1], 2).unwrap(), 100.0);
    assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
}

#[test]
fn fusion_examples() {
    let fused = fuse_scores(&[0.7, 0.3], &[0.6, 0.4]).unwrap();
    assert!((fused[0] - 1.3).abs() < 1e-12 && (fused[1] - 0.7).abs() < 1e-12);
    assert_eq!(argmax(&fused), 0);
    let u = [0.25; 4];
    let fused = fuse_scores(&u, &u).unwrap();
    assert_eq!(fused, vec![0.5; 4]);
    assert_eq!(argmax(&fused), 0);
    assert!(matches!(fuse_scores(&[1.0], &[0.5, 0.5]), Err(Error::Dimension { .. })));
    assert!(fuse_scores(&[0.9, 0.3], &[0.5, 0.5]).is_err());
}

fn sample(subject: u32, category: usize, id: usize) -> LabeledSample {
    LabeledSample {
        sequence: SkeletonSequence::from_flat(2, 1, vec![0.0; 6], 30.0).unwrap(),
        category,
        subject_id: subject,
        video_id: format!("v{id}"),
    }
}

#[test]
fn cross_subject_split_examples() {
    let data: Vec<LabeledSample> = (0..12).map(|i| sample((i % 4) as u32, i % 3, i)).collect();
    let split = cross_subject_split(&data, &[0, 1]);
    assert!(split.test.iter().all(|s| s.subject_id >= 2));
    assert!(split.train.iter().all(|s| s.subject_id <= 1));
    assert_eq!(split.train.len() + split.test.len(), data.len());
    assert_eq!(split.test_subjects, vec![2, 3]);

    let all = cross_subject_split(&data, &[0, 1, 2, 3]);
    assert!(all.test.is_empty());
    assert!(!all.warnings.is_empty());

    let overlap = SubjectSplit {
        train_subjects: vec![0, 1],
        test_subjects: Some(vec![1, 2]),
    };
    assert!(matches!(apply_subject_split(&data, &overlap), Err(Error::InvalidConfig(_))));
    let explicit = SubjectSplit {
        train_subjects: vec![0],
        test_subjects: Some(vec![3]),
    };
    let s = apply_subject_split(&data, &explicit).unwrap();
    assert_eq!((s.train.len(), s.test.len()), (3, 3));
}

#[test]
fn report_fields_and_key_order() {
    let scores = array![[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.1, 0.1, 0.8], [0.5, 0.4, 0.1]];
    let report = EvalReport::from_scores(ReportStream::Fused, &scores, &[0, 1, 2, 1]).unwrap();
    assert_eq!(report.top1, 75.0);
    assert_eq!(report.top5, 100.0);
    assert!(report.top1 <= report.top5);
    assert_eq!(report.confusion[1], vec![1, 1, 0]);
    assert_eq!(report.per_category, vec![Some(100.0), Some(50.0), Some(100.0)]);
    let json = serde_json::to_string(&report).unwrap();
    let keys = ["\"stream\"", "\"num_samples\"", "\"top1\"", "\"top5\"", "\"per_category\"", "\"confusion\""];
    let positions: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{json}");
    assert!(json.starts_with("{\"stream\":\"fused\""));
}
