//! Branching dueling Q-network with hand-written backpropagation.

use std::fmt::{Debug, Display};

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::{Float, NumAssign};
use rand::Rng;

/// Floating-point element type of the network.
pub trait Scalar: Float + NumAssign + LinalgScalar + ScalarOperand + Debug + Display + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Layer widths. Inputs are `2n`, one branch per gene.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkShape {
    pub inputs: usize,
    pub branches: usize,
    pub trunk: Vec<usize>,
    pub stream: usize,
}

impl NetworkShape {
    pub fn for_genes(genes: usize) -> Self {
        Self { inputs: 2 * genes, branches: genes, trunk: vec![128, 128], stream: 64 }
    }

    pub fn trunk_width(&self) -> usize {
        *self.trunk.last().unwrap_or(&self.inputs)
    }
}

/// Fully connected layer; `weight` is `inputs x outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Scalar> Dense<F> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weight: Array2::zeros((inputs, outputs)), bias: Array1::zeros(outputs) }
    }

    /// Uniform in `+-1/sqrt(inputs)` for weights and biases.
    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || F::from(rng.random_range(-bound..bound)).unwrap();
        let weight = Array2::from_shape_simple_fn((inputs, outputs), &mut draw);
        let bias = Array1::from_shape_simple_fn(outputs, &mut draw);
        Self { weight, bias }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    fn forward(&self, x: &ArrayView2<F>) -> Array2<F> {
        let mut y = x.dot(&self.weight);
        y += &self.bias;
        y
    }

    /// Accumulates parameter gradients into `grad` and returns the input
    /// gradient.
    fn backward(&self, x: &ArrayView2<F>, dy: &Array2<F>, grad: &mut Dense<F>) -> Array2<F> {
        grad.weight += &x.t().dot(dy);
        grad.bias += &dy.sum_axis(Axis(0));
        dy.dot(&self.weight.t())
    }
}

fn relu<F: Scalar>(mut x: Array2<F>) -> Array2<F> {
    x.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
    x
}

fn relu_backward<F: Scalar>(mut dy: Array2<F>, activation: &Array2<F>) -> Array2<F> {
    Zip::from(&mut dy).and(activation).for_each(|g, &a| {
        if a <= F::zero() {
            *g = F::zero();
        }
    });
    dy
}

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork<F> {
    shape: NetworkShape,
    pub trunk: Vec<Dense<F>>,
    pub value_hidden: Dense<F>,
    pub value_out: Dense<F>,
    pub branch_hidden: Vec<Dense<F>>,
    pub branch_out: Vec<Dense<F>>,
}

/// Intermediate activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass<F> {
    input: Array2<F>,
    trunk_act: Vec<Array2<F>>,
    /// Post-activation of the value and branch hidden layers, side by side.
    stream_act: Array2<F>,
    /// State values, length `batch`.
    pub value: Array1<F>,
    /// Raw advantages, `batch x branches x 2`.
    pub advantages: Array3<F>,
    /// Q-values, `batch x branches x 2`; action 0 keeps, 1 flips.
    pub q: Array3<F>,
}

impl<F: Scalar> QNetwork<F> {
    pub fn new<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> Self {
        Self::build(shape, |i, o| Dense::random(i, o, rng))
    }

    pub fn zeros(shape: NetworkShape) -> Self {
        Self::build(shape, Dense::zeros)
    }

    fn build(shape: NetworkShape, mut layer: impl FnMut(usize, usize) -> Dense<F>) -> Self {
        let mut width = shape.inputs;
        let mut trunk = Vec::new();
        for &w in &shape.trunk {
            trunk.push(layer(width, w));
            width = w;
        }
        let value_hidden = layer(width, shape.stream);
        let value_out = layer(shape.stream, 1);
        let mut branch_hidden = Vec::new();
        let mut branch_out = Vec::new();
        for _ in 0..shape.branches {
            branch_hidden.push(layer(width, shape.stream));
            branch_out.push(layer(shape.stream, 2));
        }
        Self { shape, trunk, value_hidden, value_out, branch_hidden, branch_out }
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    /// Layers in declared order: trunk, value stream, then each branch.
    pub fn layers(&self) -> Vec<&Dense<F>> {
        let mut out: Vec<&Dense<F>> = self.trunk.iter().collect();
        out.push(&self.value_hidden);
        out.push(&self.value_out);
        for (h, o) in self.branch_hidden.iter().zip(&self.branch_out) {
            out.push(h);
            out.push(o);
        }
        out
    }

    pub fn layers_mut(&mut self) -> Vec<&mut Dense<F>> {
        let mut out: Vec<&mut Dense<F>> = self.trunk.iter_mut().collect();
        out.push(&mut self.value_hidden);
        out.push(&mut self.value_out);
        for (h, o) in self.branch_hidden.iter_mut().zip(self.branch_out.iter_mut()) {
            out.push(h);
            out.push(o);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Converts every parameter to another element type.
    pub fn cast<G: Scalar>(&self) -> QNetwork<G> {
        let conv = |d: &Dense<F>| Dense {
            weight: d.weight.mapv(|v| G::from(v).unwrap()),
            bias: d.bias.mapv(|v| G::from(v).unwrap()),
        };
        QNetwork {
            shape: self.shape.clone(),
            trunk: self.trunk.iter().map(conv).collect(),
            value_hidden: conv(&self.value_hidden),
            value_out: conv(&self.value_out),
            branch_hidden: self.branch_hidden.iter().map(conv).collect(),
            branch_out: self.branch_out.iter().map(conv).collect(),
        }
    }

    /// Value and branch hidden layers side by side, so the streams share one
    /// matrix product: columns `[value | branch 0 | branch 1 | ...]`.
    fn stream_weights(&self) -> (Array2<F>, Array1<F>) {
        let layers: Vec<&Dense<F>> = std::iter::once(&self.value_hidden).chain(&self.branch_hidden).collect();
        let weights: Vec<_> = layers.iter().map(|l| l.weight.view()).collect();
        let biases: Vec<_> = layers.iter().map(|l| l.bias.view()).collect();
        (
            ndarray::concatenate(Axis(1), &weights).expect("stream layers share the trunk width"),
            ndarray::concatenate(Axis(0), &biases).expect("bias vectors"),
        )
    }

    fn stream_slice(&self, stream: usize) -> ndarray::Slice {
        let w = self.shape.stream;
        ndarray::Slice::from(stream * w..(stream + 1) * w)
    }

    pub fn forward(&self, input: ArrayView2<F>) -> ForwardPass<F> {
        assert_eq!(input.ncols(), self.shape.inputs, "observation width");
        let batch = input.nrows();
        let mut trunk_act: Vec<Array2<F>> = Vec::with_capacity(self.trunk.len());
        for layer in &self.trunk {
            let h = match trunk_act.last() {
                Some(prev) => layer.forward(&prev.view()),
                None => layer.forward(&input),
            };
            trunk_act.push(relu(h));
        }
        let trunk_out = trunk_act.last().map_or(input, |h| h.view());

        let (w, bias) = self.stream_weights();
        let mut stream_act = trunk_out.dot(&w);
        stream_act += &bias;
        let stream_act = relu(stream_act);

        let value_act = stream_act.slice_axis(Axis(1), self.stream_slice(0));
        let value = self.value_out.forward(&value_act).column(0).to_owned();

        let branches = self.shape.branches;
        let mut advantages = Array3::zeros((batch, branches, 2));
        for (d, out) in self.branch_out.iter().enumerate() {
            let act = stream_act.slice_axis(Axis(1), self.stream_slice(d + 1));
            advantages.slice_mut(s![.., d, ..]).assign(&out.forward(&act));
        }

        let half = F::one() / (F::one() + F::one());
        let mut q = advantages.clone();
        for (b, mut row) in q.outer_iter_mut().enumerate() {
            for mut pair in row.outer_iter_mut() {
                let mean = (pair[0] + pair[1]) * half;
                pair[0] += value[b] - mean;
                pair[1] += value[b] - mean;
            }
        }
        ForwardPass { input: input.to_owned(), trunk_act, stream_act, value, advantages, q }
    }

    /// Q-values for a single observation, `branches x 2`.
    pub fn q_values(&self, features: &[F]) -> Array2<F> {
        let x = ArrayView2::from_shape((1, features.len()), features).expect("contiguous features");
        self.forward(x).q.index_axis_move(Axis(0), 0)
    }

    /// Gradient w.r.t. every parameter, given `dq = dLoss/dQ` for the
    /// forward pass `fp`.
    pub fn backward(&self, fp: &ForwardPass<F>, dq: &Array3<F>) -> QNetwork<F> {
        let mut grad = QNetwork::zeros(self.shape.clone());
        let batch = dq.shape()[0];
        let half = F::one() / (F::one() + F::one());
        let mut d_stream = Array2::<F>::zeros(fp.stream_act.raw_dim());

        // Q = V + A - mean(A): dV sums over all outputs, dA centres per branch.
        let dv = dq.sum_axis(Axis(2)).sum_axis(Axis(1)).into_shape_with_order((batch, 1)).expect("column");
        let value_act = fp.stream_act.slice_axis(Axis(1), self.stream_slice(0));
        d_stream
            .slice_axis_mut(Axis(1), self.stream_slice(0))
            .assign(&self.value_out.backward(&value_act, &dv, &mut grad.value_out));

        for d in 0..self.shape.branches {
            let mut da = dq.slice(s![.., d, ..]).to_owned();
            for mut pair in da.outer_iter_mut() {
                let mean = (pair[0] + pair[1]) * half;
                pair[0] -= mean;
                pair[1] -= mean;
            }
            let act = fp.stream_act.slice_axis(Axis(1), self.stream_slice(d + 1));
            let d_act = self.branch_out[d].backward(&act, &da, &mut grad.branch_out[d]);
            d_stream.slice_axis_mut(Axis(1), self.stream_slice(d + 1)).assign(&d_act);
        }
        let d_stream = relu_backward(d_stream, &fp.stream_act);

        let trunk_out = fp.trunk_act.last().map_or(fp.input.view(), |h| h.view());
        let d_w = trunk_out.t().dot(&d_stream);
        let d_b = d_stream.sum_axis(Axis(0));
        let stream_grads = std::iter::once(&mut grad.value_hidden).chain(grad.branch_hidden.iter_mut());
        for (i, g) in stream_grads.enumerate() {
            g.weight.assign(&d_w.slice_axis(Axis(1), self.stream_slice(i)));
            g.bias.assign(&d_b.slice_axis(Axis(0), self.stream_slice(i)));
        }
        if self.trunk.is_empty() {
            return grad;
        }

        let (w, _) = self.stream_weights();
        let mut upstream = d_stream.dot(&w.t());
        for i in (0..self.trunk.len()).rev() {
            let pre_grad = relu_backward(upstream, &fp.trunk_act[i]);
            let input = if i == 0 { fp.input.view() } else { fp.trunk_act[i - 1].view() };
            let g = &mut grad.trunk[i];
            g.weight += &input.t().dot(&pre_grad);
            g.bias += &pre_grad.sum_axis(Axis(0));
            if i == 0 {
                break;
            }
            upstream = pre_grad.dot(&self.trunk[i].weight.t());
        }
        grad
    }

    /// Per-branch MSE between the chosen actions' Q-values and `targets`,
    /// averaged over batch and branches, with its gradient.
    pub fn loss_and_gradient(&self, input: ArrayView2<F>, actions: &[Vec<bool>], targets: &[F]) -> (F, QNetwork<F>) {
        let fp = self.forward(input);
        let (loss, dq) = branch_mse(&fp.q, actions, targets);
        let grad = self.backward(&fp, &dq);
        (loss, grad)
    }
}

/// Loss and `dLoss/dQ` for the branch-averaged squared error.
pub fn branch_mse<F: Scalar>(q: &Array3<F>, actions: &[Vec<bool>], targets: &[F]) -> (F, Array3<F>) {
    let (batch, branches, _) = q.dim();
    assert_eq!(actions.len(), batch);
    assert_eq!(targets.len(), batch);
    let scale = F::one() / F::from(batch * branches).unwrap();
    let two = F::one() + F::one();
    let mut loss = F::zero();
    let mut dq = Array3::zeros(q.raw_dim());
    for b in 0..batch {
        for d in 0..branches {
            let a = actions[b][d] as usize;
            let err = q[[b, d, a]] - targets[b];
            loss += err * err * scale;
            dq[[b, d, a]] = two * err * scale;
        }
    }
    (loss, dq)
}
