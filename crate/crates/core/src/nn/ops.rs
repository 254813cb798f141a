use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Backward of [`softmax_rows`] given its output `y` and upstream gradient `dy`.
pub fn softmax_rows_backward(y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let mut dx = Array2::zeros(y.raw_dim());
    for ((yr, dyr), mut dxr) in y.rows().into_iter().zip(dy.rows()).zip(dx.rows_mut()) {
        let dot: f64 = yr.iter().zip(dyr).map(|(a, b)| a * b).sum();
        for ((d, &yv), &g) in dxr.iter_mut().zip(yr).zip(dyr) {
            *d = yv * (g - dot);
        }
    }
    dx
}

pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Affine map on row vectors: `x W + b`.
pub fn affine(x: &ArrayView2<f64>, w: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array2<f64> {
    let mut y = x.dot(w);
    y += b;
    y
}

/// Gradients of [`affine`]: returns `(dx, dw, db)`.
pub fn affine_backward(
    x: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    (dy.dot(&w.t()), x.t().dot(dy), dy.sum_axis(Axis(0)))
}

pub fn l2_norm(v: &ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// L2-normalize each row; zero rows are left at zero.
pub fn normalize_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let n = l2_norm(&row.view());
        if n > 0.0 {
            row.mapv_inplace(|v| v / n);
        }
    }
    out
}

/// Backward of row normalization: `dx = (dy - y (y . dy)) / |x|`.
pub fn normalize_rows_backward(x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let mut dx = Array2::zeros(x.raw_dim());
    for ((xr, dyr), mut dxr) in x.rows().into_iter().zip(dy.rows()).zip(dx.rows_mut()) {
        let n = l2_norm(&xr);
        if n == 0.0 {
            continue;
        }
        let dot: f64 = xr.iter().zip(dyr).map(|(a, b)| a * b).sum::<f64>() / n;
        for ((d, &xv), &g) in dxr.iter_mut().zip(xr).zip(dyr) {
            *d = (g - xv / n * dot) / n;
        }
    }
    dx
}
