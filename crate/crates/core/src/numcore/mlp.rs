use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{axpy, dot, Matrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// One affine layer: `weight` is `out × in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    fn same_shape(&self, other: &Dense) -> bool {
        self.weight.same_shape(&other.weight) && self.bias.len() == other.bias.len()
    }

    fn affine_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        add_matvec(&self.weight, x, out);
    }
}

/// `out += w x`, skipping zero inputs when `x` is mostly zeros (one-hot
/// observations make the first layer sparse).
fn add_matvec(w: &Matrix, x: &[f64], out: &mut [f64]) {
    let nnz = x.iter().filter(|v| **v != 0.0).count();
    if nnz * 4 < x.len() {
        let nz: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        for (r, o) in out.iter_mut().enumerate() {
            let row = w.row(r);
            let mut s = 0.0;
            for &j in &nz {
                s += row[j] * x[j];
            }
            *o += s;
        }
    } else {
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(w.row(r), x);
        }
    }
}

/// Multilayer perceptron parameters: hidden layers use their configured
/// activation, the output layer is always linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
    /// One entry per hidden layer (`layers.len() - 1`).
    activations: Vec<Activation>,
}

/// Gradient (or direction) with the same layout as an [`Mlp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    /// `inputs[l]` is the input fed to layer `l`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn input(&self) -> &[f64] {
        &self.inputs[0]
    }
}

impl Mlp {
    /// Builds a network from explicit layers. `activations` must have one
    /// entry per hidden layer.
    pub fn from_layers(layers: Vec<Dense>, activations: Vec<Activation>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::shape("Mlp::from_layers", "at least one layer", 0));
        }
        if activations.len() + 1 != layers.len() {
            return Err(Error::shape(
                "Mlp::from_layers activations",
                layers.len() - 1,
                activations.len(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::shape(
                    "Mlp::from_layers composition",
                    pair[0].output_dim(),
                    pair[1].input_dim(),
                ));
            }
        }
        for l in &layers {
            if l.bias.len() != l.output_dim() {
                return Err(Error::shape("Mlp::from_layers bias", l.output_dim(), l.bias.len()));
            }
        }
        Ok(Self {
            layers,
            activations,
        })
    }

    /// All-zero network with layer widths `sizes = [in, h1, ..., out]`.
    pub fn zeros(sizes: &[usize], hidden: Activation) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1]))
            .collect::<Vec<_>>();
        let activations = vec![hidden; layers.len() - 1];
        Self {
            layers,
            activations,
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes, hidden);
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.input_dim() as f64).sqrt();
            for w in layer.weight.as_mut_slice() {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        net
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// `[in, h1, ..., out]`.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::output_dim))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    fn activation_for(&self, layer: usize) -> Activation {
        self.activations
            .get(layer)
            .copied()
            .unwrap_or(Activation::Identity)
    }

    fn check_input(&self, input: &[f64], context: &'static str) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::shape(context, self.input_dim(), input.len()));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input, "Mlp::forward")?;
        let mut a = input.to_vec();
        let mut z = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.affine_into(&a, &mut z);
            let act = self.activation_for(l);
            a.clear();
            a.extend(z.iter().map(|&v| act.apply(v)));
        }
        Ok(a)
    }

    pub fn trace(&self, input: &[f64]) -> Result<Trace> {
        self.check_input(input, "Mlp::trace")?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.output_dim());
            layer.affine_into(&a, &mut z);
            let act = self.activation_for(l);
            let next: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok(Trace {
            inputs,
            pre,
            output: a,
        })
    }

    /// Gradients of `output · output_grad` with respect to the parameters and
    /// the input.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let trace = self.trace(input)?;
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.accumulate_backward(&trace, output_grad, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Adds the parameter gradient of `output · output_grad` into `grads` and
    /// returns the input gradient.
    pub fn accumulate_backward(
        &self,
        trace: &Trace,
        output_grad: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        self.backward_impl(trace, output_grad, grads, true)
    }

    /// [`Mlp::accumulate_backward`] without the input gradient.
    pub fn accumulate_param_backward(
        &self,
        trace: &Trace,
        output_grad: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        self.backward_impl(trace, output_grad, grads, false).map(|_| ())
    }

    fn backward_impl(
        &self,
        trace: &Trace,
        output_grad: &[f64],
        grads: &mut Gradients,
        want_input: bool,
    ) -> Result<Vec<f64>> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::shape(
                "Mlp::backward output_grad",
                self.output_dim(),
                output_grad.len(),
            ));
        }
        if !grads.matches(self) {
            return Err(Error::shape(
                "Mlp::backward gradient bundle",
                "layout of the network",
                "different layout",
            ));
        }
        if trace.inputs.len() != self.layers.len() || trace.inputs[0].len() != self.input_dim() {
            return Err(Error::shape(
                "Mlp::backward trace",
                "trace of this network",
                "foreign trace",
            ));
        }
        let mut delta = output_grad.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let x = &trace.inputs[l];
            let g = &mut grads.layers[l];
            axpy(1.0, &delta, &mut g.bias);
            let nnz = x.iter().filter(|v| **v != 0.0).count();
            let sparse = nnz * 4 < x.len();
            let nz: Vec<usize> = if sparse {
                (0..x.len()).filter(|&j| x[j] != 0.0).collect()
            } else {
                Vec::new()
            };
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = g.weight.row_mut(r);
                if sparse {
                    for &j in &nz {
                        row[j] += d * x[j];
                    }
                } else {
                    axpy(d, x, row);
                }
            }
            if l == 0 && !want_input {
                return Ok(Vec::new());
            }
            let mut back = layer.weight.matvec_transposed(&delta)?;
            if l > 0 {
                let act = self.activation_for(l - 1);
                let z = &trace.pre[l - 1];
                let a = &trace.inputs[l];
                for ((b, &zi), &ai) in back.iter_mut().zip(z).zip(a) {
                    *b *= act.derivative(zi, ai);
                }
            }
            delta = back;
        }
        Ok(delta)
    }

    /// Exact forward-mode directional derivative of the output along a
    /// parameter direction.
    pub fn jvp(&self, input: &[f64], direction: &Gradients) -> Result<Vec<f64>> {
        Ok(self.forward_jvp(input, direction)?.1)
    }

    /// Network output together with its directional derivative along a
    /// parameter direction.
    pub fn forward_jvp(&self, input: &[f64], direction: &Gradients) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(input, "Mlp::jvp")?;
        if !direction.matches(self) {
            return Err(Error::shape(
                "Mlp::jvp direction",
                "layout of the network",
                "different layout",
            ));
        }
        let mut a = input.to_vec();
        // The input does not depend on the parameters.
        let mut da: Option<Vec<f64>> = None;
        let mut z = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let d = &direction.layers[l];
            layer.affine_into(&a, &mut z);
            let mut dz = d.bias.clone();
            add_matvec(&d.weight, &a, &mut dz);
            if let Some(da) = &da {
                add_matvec(&layer.weight, da, &mut dz);
            }
            let act = self.activation_for(l);
            a = z.iter().map(|&v| act.apply(v)).collect();
            da = Some(
                dz.iter()
                    .zip(&z)
                    .zip(&a)
                    .map(|((&t, &zi), &ai)| t * act.derivative(zi, ai))
                    .collect(),
            );
        }
        Ok((a, da.unwrap_or_default()))
    }

    /// Directional derivative by symmetric finite differences over the
    /// parameters: `(f(θ+hd) − f(θ−hd)) / 2h`.
    pub fn jvp_fd(&self, input: &[f64], direction: &Gradients, step: f64) -> Result<Vec<f64>> {
        let plus = self.shifted(direction, step)?.forward(input)?;
        let minus = self.shifted(direction, -step)?.forward(input)?;
        Ok(plus
            .iter()
            .zip(&minus)
            .map(|(p, m)| (p - m) / (2.0 * step))
            .collect())
    }

    fn shifted(&self, direction: &Gradients, k: f64) -> Result<Mlp> {
        let mut net = self.clone();
        net.add_scaled(k, direction)?;
        Ok(net)
    }

    /// `self += k · direction`.
    pub fn add_scaled(&mut self, k: f64, direction: &Gradients) -> Result<()> {
        if !direction.matches(self) {
            return Err(Error::shape(
                "Mlp::add_scaled",
                "layout of the network",
                "different layout",
            ));
        }
        for (layer, d) in self.layers.iter_mut().zip(&direction.layers) {
            layer.weight.add_scaled(k, &d.weight)?;
            axpy(k, &d.bias, &mut layer.bias);
        }
        Ok(())
    }

    /// Returns `self − lr · grads`, leaving `self` untouched.
    pub fn sgd_update(&self, grads: &Gradients, lr: f64) -> Result<Mlp> {
        let mut next = self.clone();
        next.sgd_step(grads, lr)?;
        Ok(next)
    }

    /// In-place `self −= lr · grads`.
    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if lr.is_nan() || lr < 0.0 {
            return Err(Error::Contract(format!("learning rate must be >= 0, got {lr}")));
        }
        if !grads.matches(self) {
            return Err(Error::shape(
                "sgd_update",
                "layout of the network",
                "different layout",
            ));
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, &gw) in layer.weight.as_mut_slice().iter_mut().zip(g.weight.as_slice()) {
                *w -= lr * gw;
            }
            for (b, &gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * gb;
            }
        }
        Ok(())
    }
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.input_dim(), l.output_dim()))
                .collect(),
        }
    }

    pub fn matches(&self, net: &Mlp) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(a, b)| a.same_shape(b))
    }

    /// Flattened view: every weight (row-major) then bias, layer by layer.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`Gradients::flatten`] for a bundle with this layout.
    pub fn from_flat(template: &Mlp, flat: &[f64]) -> Result<Self> {
        let mut g = Self::zeros_like(template);
        if flat.len() != template.num_params() {
            return Err(Error::shape("Gradients::from_flat", template.num_params(), flat.len()));
        }
        let mut i = 0;
        for l in &mut g.layers {
            let n = l.weight.as_slice().len();
            l.weight.as_mut_slice().copy_from_slice(&flat[i..i + n]);
            i += n;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
        Ok(g)
    }

    pub fn dot(&self, other: &Gradients) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| dot(a.weight.as_slice(), b.weight.as_slice()) + dot(&a.bias, &b.bias))
            .sum()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            axpy(1.0, b.weight.as_slice(), a.weight.as_mut_slice());
            axpy(1.0, &b.bias, &mut a.bias);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weight.as_mut_slice().iter_mut().for_each(|v| *v *= k);
            l.bias.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weight.as_slice().iter().all(|v| *v == 0.0) && l.bias.iter().all(|v| *v == 0.0)
        })
    }
}
