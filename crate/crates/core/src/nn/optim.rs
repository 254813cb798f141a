use super::ParamSet;

/// Stochastic gradient descent with (optionally Nesterov) momentum and L2 weight decay.
///
/// Update per scalar: `g += wd * p; v = mu * v + g; p -= lr * (g + mu * v)` in
/// Nesterov mode, `p -= lr * v` otherwise.
#[derive(Debug, Clone)]
pub struct SgdNesterov {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub nesterov: bool,
    velocity: Option<ParamSet>,
}

impl SgdNesterov {
    pub fn new(lr: f64, momentum: f64, weight_decay: f64, nesterov: bool) -> Self {
        Self {
            lr,
            momentum,
            weight_decay,
            nesterov,
            velocity: None,
        }
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet) {
        let velocity = self.velocity.get_or_insert_with(|| params.zeros_like());
        for ((p, g), v) in params
            .tensors_mut()
            .iter_mut()
            .zip(grads.tensors())
            .zip(velocity.tensors_mut())
        {
            for ((pi, &gi), vi) in p.data.iter_mut().zip(&g.data).zip(v.data.iter_mut()) {
                let g = gi + self.weight_decay * *pi;
                *vi = self.momentum * *vi + g;
                let update = if self.nesterov { g + self.momentum * *vi } else { *vi };
                *pi -= self.lr * update;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Init, ParamLayout};
    use crate::rng::RandomStream;

    #[test]
    fn nesterov_hand_trace() {
        let mut layout = ParamLayout::new();
        layout.add("w", &[1], Init::Constant(1.0));
        let mut p = layout.init(&mut RandomStream::new(0));
        let mut g = p.zeros_like();
        g.tensors_mut()[0].data[0] = 0.5;
        let mut opt = SgdNesterov::new(0.1, 0.9, 0.0, true);
        opt.step(&mut p, &g);
        // v = 0.5, update = 0.5 + 0.45
        assert!((p.flat(0) - (1.0 - 0.1 * 0.95)).abs() < 1e-15);
        opt.step(&mut p, &g);
        // v = 0.9*0.5 + 0.5 = 0.95, update = 0.5 + 0.855
        assert!((p.flat(0) - (0.905 - 0.1 * 1.355)).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_shrinks_without_gradient() {
        let mut layout = ParamLayout::new();
        layout.add("w", &[2], Init::Constant(2.0));
        let mut p = layout.init(&mut RandomStream::new(0));
        let g = p.zeros_like();
        let mut opt = SgdNesterov::new(0.5, 0.0, 0.1, false);
        opt.step(&mut p, &g);
        assert!((p.flat(1) - 1.9).abs() < 1e-15);
    }
}
