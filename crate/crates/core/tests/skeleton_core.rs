use mg_core::dataset::{load_dataset, write_dataset};
use mg_core::graph::{normalized_adjacency, partition_edges, GraphTopology, Partition};
use mg_core::rng::RandomStream;
use mg_core::skeleton::{resample_indices, resample_sequence, LabeledSample, SkeletonSequence};
use ndarray::Array2;
use proptest::prelude::*;

fn dense_oracle(n: usize, edges: &[(usize, usize)]) -> Array2<f64> {
    let mut a = Array2::<f64>::eye(n);
    for &(i, j) in edges {
        a[[i, j]] = 1.0;
        a[[j, i]] = 1.0;
    }
    let mut d = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let deg: f64 = (0..n).map(|j| a[[i, j]]).sum();
        d[[i, i]] = 1.0 / deg.sqrt();
    }
    d.dot(&a).dot(&d)
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// True when `m + jitter * I` admits a Cholesky factorization.
fn is_psd(m: &Array2<f64>, jitter: f64) -> bool {
    let n = m.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[[i, j]] + if i == j { jitter } else { 0.0 };
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    true
}

#[test]
fn normalized_adjacency_matches_oracle_on_every_small_graph() {
    for n in 1..=6 {
        let pairs = all_pairs(n);
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let topo = GraphTopology::new(n, 0, &edges).unwrap();
            let got = normalized_adjacency(&topo);
            let want = dense_oracle(n, &edges);
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g - w).abs() <= 1e-12, "n={n} mask={mask}");
            }
            assert_eq!(got, got.t());
            let eye = Array2::<f64>::eye(n);
            assert!(is_psd(&(&eye - &got), 1e-9) && is_psd(&(&eye + &got), 1e-9), "n={n} mask={mask}");
        }
    }
}

#[test]
fn equal_seeds_agree_for_ten_thousand_draws() {
    let mut a = RandomStream::new(2024);
    let mut b = RandomStream::new(2024);
    for _ in 0..10_000 {
        assert_eq!(a.next_u64(), b.next_u64());
    }
    assert_eq!(a.position(), b.position());
}

#[test]
fn resample_examples() {
    assert_eq!(resample_indices(4, 2), vec![0, 2]);
    assert_eq!(resample_indices(2, 4), vec![0, 0, 1, 1]);
}

fn sample(rng: &mut RandomStream, id: usize, t: usize, n: usize) -> LabeledSample {
    let data = (0..t * n * 3).map(|_| rng.normal() as f32 as f64).collect();
    LabeledSample {
        sequence: SkeletonSequence::from_flat(t, n, data, 30.0).unwrap(),
        category: id % 5,
        subject_id: (id % 3) as u32,
        video_id: format!("clip{id:03}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partitions_are_disjoint_and_sum_to_a_tilde(n in 1usize..10, bits in any::<u64>(), center in 0usize..10) {
        let pairs = all_pairs(n);
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| bits >> (k % 64) & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let topo = GraphTopology::new(n, 0, &edges).unwrap();
        let part = partition_edges(&topo, center % n).unwrap();
        let subsets = part.subsets();
        let sum = &subsets[0] + &subsets[1] + &subsets[2];
        prop_assert_eq!(sum, topo.adjacency_with_self_loops());
        for i in 0..n {
            prop_assert_eq!(part.classify(i, i), Some(Partition::Root));
        }
    }

    #[test]
    fn resample_is_monotone_and_floor_indexed(t_in in 1usize..80, target in 2usize..80) {
        let idx = resample_indices(t_in, target);
        prop_assert_eq!(idx.len(), target);
        prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        for (t_out, &i) in idx.iter().enumerate() {
            prop_assert_eq!(i, t_out * t_in / target);
        }
    }

    #[test]
    fn resample_at_equal_length_is_identity(seed in any::<u64>(), t in 2usize..40) {
        let mut rng = RandomStream::new(seed);
        let s = sample(&mut rng, 0, t, 3).sequence;
        let once = resample_sequence(&s, t).unwrap();
        prop_assert_eq!(&once, &s);
        prop_assert_eq!(resample_sequence(&once, t).unwrap(), s);
    }

    #[test]
    fn dataset_round_trip_is_bit_exact(seed in any::<u64>(), count in 0usize..6, n in 1usize..5) {
        let mut rng = RandomStream::new(seed);
        let samples: Vec<LabeledSample> = (0..count)
            .map(|i| {
                let t = 2 + rng.below(12);
                sample(&mut rng, i, t, n)
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.json");
        write_dataset(&path, &samples).unwrap();
        let back = load_dataset(&path).unwrap();
        prop_assert_eq!(back.len(), samples.len());
        for (a, b) in back.iter().zip(&samples) {
            prop_assert_eq!(&a.video_id, &b.video_id);
            prop_assert_eq!((a.category, a.subject_id), (b.category, b.subject_id));
            let bits = |s: &SkeletonSequence| s.frames().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.sequence), bits(&b.sequence));
        }
    }
}
