//! Adaptive-moment optimizer over [`QNetwork`] parameters.

use super::network::{QNetwork, Scalar};

#[derive(Clone, Debug)]
pub struct Adam<F> {
    pub learning_rate: F,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
    steps: i32,
    m: QNetwork<F>,
    v: QNetwork<F>,
}

impl<F: Scalar> Adam<F> {
    pub fn new(params: &QNetwork<F>, learning_rate: F) -> Self {
        Self {
            learning_rate,
            beta1: F::from(0.9).unwrap(),
            beta2: F::from(0.999).unwrap(),
            epsilon: F::from(1e-8).unwrap(),
            steps: 0,
            m: QNetwork::zeros(params.shape().clone()),
            v: QNetwork::zeros(params.shape().clone()),
        }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    pub fn update(&mut self, params: &mut QNetwork<F>, grad: &QNetwork<F>) {
        self.steps = self.steps.saturating_add(1);
        let one = F::one();
        let (b1, b2) = (self.beta1, self.beta2);
        // Bias correction folded into the step size and epsilon.
        let c2_root = (one - b2.powi(self.steps)).sqrt();
        let step = self.learning_rate * c2_root / (one - b1.powi(self.steps));
        let eps = self.epsilon * c2_root;
        let layers = params.layers_mut().into_iter().zip(self.m.layers_mut()).zip(self.v.layers_mut());
        for (((p, m), v), g) in layers.zip(grad.layers()) {
            let tensors = [
                (p.weight.as_slice_mut(), m.weight.as_slice_mut(), v.weight.as_slice_mut(), g.weight.as_slice()),
                (p.bias.as_slice_mut(), m.bias.as_slice_mut(), v.bias.as_slice_mut(), g.bias.as_slice()),
            ];
            for (p, m, v, g) in tensors {
                let (p, m, v, g) = (p.unwrap(), m.unwrap(), v.unwrap(), g.unwrap());
                for (((p, m), v), &g) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g) {
                    *m = b1 * *m + (one - b1) * g;
                    *v = b2 * *v + (one - b2) * g * g;
                    *p -= step * *m / (v.sqrt() + eps);
                }
            }
        }
    }
}
