use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// Index of a tensor inside a [`ParamSet`] built from the same [`ParamLayout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zeros,
    Constant(f64),
    /// Gaussian with standard deviation `sqrt(2 / fan_in)`.
    He { fan_in: usize },
    /// Uniform in `[-bound, bound]`.
    Uniform { bound: f64 },
    /// Fixed values, row-major.
    Values(Vec<f64>),
}

#[derive(Debug, Clone)]
struct Spec {
    name: String,
    shape: Vec<usize>,
    init: Init,
}

/// Ordered list of named parameter shapes with their initializers.
#[derive(Debug, Clone, Default)]
pub struct ParamLayout {
    specs: Vec<Spec>,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, shape: &[usize], init: Init) -> ParamId {
        self.specs.push(Spec {
            name: name.into(),
            shape: shape.to_vec(),
            init,
        });
        ParamId(self.specs.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Materialize parameters, drawing random initializers in layout order.
    pub fn init(&self, rng: &mut RandomStream) -> ParamSet {
        let tensors = self
            .specs
            .iter()
            .map(|s| {
                let numel: usize = s.shape.iter().product();
                let data = match &s.init {
                    Init::Zeros => vec![0.0; numel],
                    Init::Constant(c) => vec![*c; numel],
                    Init::He { fan_in } => {
                        let std = (2.0 / (*fan_in).max(1) as f64).sqrt();
                        (0..numel).map(|_| rng.normal() * std).collect()
                    }
                    Init::Uniform { bound } => (0..numel).map(|_| rng.uniform(-bound, *bound)).collect(),
                    Init::Values(v) => {
                        assert_eq!(v.len(), numel, "fixed init for {} has wrong size", s.name);
                        v.clone()
                    }
                };
                Tensor {
                    name: s.name.clone(),
                    shape: s.shape.clone(),
                    data,
                }
            })
            .collect();
        ParamSet { tensors }
    }

    /// Check that `params` was produced by this layout.
    pub fn check(&self, params: &ParamSet) -> Result<()> {
        if params.tensors.len() != self.specs.len() {
            return Err(Error::Dimension {
                context: "parameter count",
                expected: self.specs.len(),
                found: params.tensors.len(),
            });
        }
        for (s, t) in self.specs.iter().zip(&params.tensors) {
            if s.shape != t.shape || s.name != t.name {
                return Err(Error::InvalidInput(format!(
                    "parameter '{}' {:?} does not match layout '{}' {:?}",
                    t.name, t.shape, s.name, s.shape
                )));
            }
        }
        Ok(())
    }
}

/// Named tensors in layout order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn from_tensors(tensors: Vec<Tensor>) -> Self {
        Self { tensors }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn into_tensors(self) -> Vec<Tensor> {
        self.tensors
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    data: vec![0.0; t.data.len()],
                })
                .collect(),
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn is_congruent(&self, other: &ParamSet) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.shape == b.shape)
    }

    pub fn scalar(&self, id: ParamId) -> f64 {
        self.tensors[id.0].data[0]
    }

    pub fn vector(&self, id: ParamId) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.tensors[id.0].data[..])
    }

    pub fn vector_mut(&mut self, id: ParamId) -> ArrayViewMut1<'_, f64> {
        ArrayViewMut1::from(&mut self.tensors[id.0].data[..])
    }

    /// 2-d view; tensors with more dimensions are viewed as `shape[0] x rest`.
    pub fn matrix(&self, id: ParamId) -> ArrayView2<'_, f64> {
        let t = &self.tensors[id.0];
        let rows = t.shape[0];
        let cols = t.data.len() / rows.max(1);
        ArrayView2::from_shape((rows, cols), &t.data[..]).expect("matrix view")
    }

    pub fn matrix_mut(&mut self, id: ParamId) -> ArrayViewMut2<'_, f64> {
        let t = &mut self.tensors[id.0];
        let rows = t.shape[0];
        let cols = t.data.len() / rows.max(1);
        ArrayViewMut2::from_shape((rows, cols), &mut t.data[..]).expect("matrix view")
    }

    pub fn add_matrix(&mut self, id: ParamId, delta: &Array2<f64>) {
        let mut m = self.matrix_mut(id);
        m += delta;
    }

    pub fn add_scalar(&mut self, id: ParamId, delta: f64) {
        self.tensors[id.0].data[0] += delta;
    }

    /// Scalar at a flat position across all tensors, in layout order.
    pub fn flat(&self, mut index: usize) -> f64 {
        for t in &self.tensors {
            if index < t.data.len() {
                return t.data[index];
            }
            index -= t.data.len();
        }
        panic!("flat index out of range");
    }

    pub fn flat_mut(&mut self, mut index: usize) -> &mut f64 {
        for t in &mut self.tensors {
            if index < t.data.len() {
                return &mut t.data[index];
            }
            index -= t.data.len();
        }
        panic!("flat index out of range");
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ParamSet) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|x| *x *= alpha);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_init_and_views() {
        let mut layout = ParamLayout::new();
        let w = layout.add("w", &[2, 3], Init::Values(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let b = layout.add("b", &[3], Init::Constant(0.5));
        let mut rng = RandomStream::new(0);
        let p = layout.init(&mut rng);
        layout.check(&p).unwrap();
        assert_eq!(p.matrix(w)[[1, 2]], 6.0);
        assert_eq!(p.vector(b).sum(), 1.5);
        assert_eq!(p.flat(6), 0.5);
        assert_eq!(p.num_scalars(), 9);
    }

    #[test]
    fn he_init_is_deterministic() {
        let mut layout = ParamLayout::new();
        layout.add("w", &[8, 8], Init::He { fan_in: 8 });
        let a = layout.init(&mut RandomStream::new(3));
        let b = layout.init(&mut RandomStream::new(3));
        assert_eq!(a, b);
    }
}
