#![allow(dead_code)]

pub mod oracles;

use mg_core::nn::ParamSet;
use mg_core::rng::RandomStream;
use mg_core::skeleton::SkeletonSequence;
use ndarray::Array2;

pub fn random_matrix(rng: &mut RandomStream, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.normal())
}

pub fn random_sequence(rng: &mut RandomStream, t: usize, n: usize) -> SkeletonSequence {
    let data = (0..t * n * 3).map(|_| rng.normal()).collect();
    SkeletonSequence::from_flat(t, n, data, 30.0).unwrap()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Compare analytic gradients against central differences at `points`
/// random flat parameter positions. Returns the worst relative error.
pub fn check_param_gradients(
    params: &ParamSet,
    analytic: &ParamSet,
    points: usize,
    seed: u64,
    loss: impl Fn(&ParamSet) -> f64,
) -> f64 {
    let h = 1e-5;
    let total = params.num_scalars();
    let mut rng = RandomStream::new(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut attempts = 0;
    while checked < points && attempts < points * 20 {
        attempts += 1;
        let i = rng.below(total);
        let a = analytic.flat(i);
        let mut plus = params.clone();
        *plus.flat_mut(i) += h;
        let mut minus = params.clone();
        *minus.flat_mut(i) -= h;
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
        if a.abs() < 1e-9 && numeric.abs() < 1e-9 {
            continue;
        }
        worst = worst.max(relative_error(a, numeric));
        checked += 1;
    }
    assert!(checked >= points, "only {checked} informative gradient points");
    worst
}
