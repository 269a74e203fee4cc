//! Small fully connected networks with hand-written reverse mode, shared by
//! the GAIN and MIDA imputers.

mod loss;
mod optim;
mod trace;

pub use loss::{bce_terms, clamp_prob, masked_reconstruction, PROB_CLAMP};
pub use optim::{gradient_check, Adam, AdamConfig};
pub use trace::LossTrace;

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::tabular::{BlockKind, EncodingMap};

/// Negative-side slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadKind {
    Sigmoid,
    Softmax,
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadBlock {
    pub start: usize,
    pub width: usize,
    pub kind: HeadKind,
}

/// Per-block output activation. Blocks partition the output columns.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputHead {
    blocks: Vec<HeadBlock>,
}

impl OutputHead {
    pub fn new(blocks: Vec<HeadBlock>) -> Result<Self> {
        let mut next = 0;
        for b in &blocks {
            if b.start != next || b.width == 0 {
                return Err(Error::Config("output head blocks must tile the columns in order".into()));
            }
            next += b.width;
        }
        Ok(OutputHead { blocks })
    }

    pub fn uniform(width: usize, kind: HeadKind) -> Self {
        OutputHead {
            blocks: vec![HeadBlock { start: 0, width, kind }],
        }
    }

    /// Sigmoid over scaled continuous columns, softmax over one-hot blocks.
    pub fn for_encoding(map: &EncodingMap) -> Self {
        OutputHead {
            blocks: map
                .blocks()
                .iter()
                .map(|b| HeadBlock {
                    start: b.start,
                    width: b.width,
                    kind: match b.kind {
                        BlockKind::Continuous { .. } => HeadKind::Sigmoid,
                        BlockKind::Discrete { .. } => HeadKind::Softmax,
                    },
                })
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.start + b.width)
    }

    pub fn blocks(&self) -> &[HeadBlock] {
        &self.blocks
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Activation {
    Identity,
    LeakyRelu,
    Tanh,
    Sigmoid,
    Head(OutputHead),
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    fn apply(&self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => z.clone(),
            Activation::LeakyRelu => z.mapv(|x| if x > 0.0 { x } else { LEAKY_SLOPE * x }),
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Sigmoid => z.mapv(sigmoid),
            Activation::Head(head) => {
                let mut a = z.clone();
                for b in &head.blocks {
                    let mut cols = a.slice_mut(ndarray::s![.., b.start..b.start + b.width]);
                    match b.kind {
                        HeadKind::Linear => {}
                        HeadKind::Sigmoid => cols.mapv_inplace(sigmoid),
                        HeadKind::Softmax => {
                            for mut row in cols.rows_mut() {
                                let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                                row.mapv_inplace(|v| (v - max).exp());
                                let total = row.sum();
                                row.mapv_inplace(|v| v / total);
                            }
                        }
                    }
                }
                a
            }
        }
    }

    /// Gradient with respect to the pre-activation `z`, given the output `a`
    /// and the gradient `g` with respect to `a`.
    fn backward(&self, z: &Array2<f64>, a: &Array2<f64>, g: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => g.clone(),
            Activation::LeakyRelu => {
                let mut out = g.clone();
                Zip::from(&mut out).and(z).for_each(|o, &x| {
                    if x <= 0.0 {
                        *o *= LEAKY_SLOPE
                    }
                });
                out
            }
            Activation::Tanh => Zip::from(g).and(a).map_collect(|&g, &a| g * (1.0 - a * a)),
            Activation::Sigmoid => Zip::from(g).and(a).map_collect(|&g, &a| g * a * (1.0 - a)),
            Activation::Head(head) => {
                let mut out = g.clone();
                for b in &head.blocks {
                    let range = ndarray::s![.., b.start..b.start + b.width];
                    let ab = a.slice(range);
                    let mut ob = out.slice_mut(range);
                    match b.kind {
                        HeadKind::Linear => {}
                        HeadKind::Sigmoid => Zip::from(&mut ob).and(&ab).for_each(|o, &a| *o *= a * (1.0 - a)),
                        HeadKind::Softmax => {
                            for (mut orow, arow) in ob.rows_mut().into_iter().zip(ab.rows()) {
                                let dot: f64 = orow.iter().zip(arow.iter()).map(|(g, a)| g * a).sum();
                                Zip::from(&mut orow).and(&arow).for_each(|o, &a| *o = a * (*o - dot));
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `in × out`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer inputs, pre-activations and outputs of a forward pass.
#[derive(Clone, Debug)]
pub struct Cache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("a network has at least one layer")
    }
}

/// Parameter-shaped container for gradients and optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Gradients {
            weights: mlp.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            bias: mlp.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flat_map(|w| w.iter()).chain(self.bias.iter().flat_map(|b| b.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .flat_map(|w| w.iter_mut())
            .chain(self.bias.iter_mut().flat_map(|b| b.iter_mut()))
    }
}

impl Mlp {
    /// `dims = [input, hidden.., output]`, one activation per layer. Weights
    /// are Xavier-uniform, biases zero.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], activations: Vec<Activation>, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Config("an MLP needs one activation per layer".into()));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, act)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                if let Activation::Head(head) = &act {
                    if head.width() != fan_out {
                        return Err(Error::DimensionMismatch {
                            context: "output head width",
                            expected: fan_out,
                            found: head.width(),
                        });
                    }
                }
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
                Ok(Dense {
                    weights: Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng)),
                    bias: Array1::zeros(fan_out),
                    activation: act,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Mlp { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::EmptyInput("MLP layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].weights.ncols() != pair[1].weights.nrows() {
                return Err(Error::DimensionMismatch {
                    context: "adjacent layer widths",
                    expected: pair[0].weights.ncols(),
                    found: pair[1].weights.nrows(),
                });
            }
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.ncols())
    }

    /// Hidden and output widths, in order.
    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.weights.ncols()).collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter())
            .chain(self.layers.iter().flat_map(|l| l.bias.iter()))
    }

    /// Parameters in the same order as [`Gradients::iter`].
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        let (weights, biases): (Vec<_>, Vec<_>) = self.layers.iter_mut().map(|l| (&mut l.weights, &mut l.bias)).unzip();
        weights
            .into_iter()
            .flat_map(|w| w.iter_mut())
            .chain(biases.into_iter().flat_map(|b| b.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<(Array2<f64>, Cache)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "MLP input",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        let mut cache = Cache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
        };
        let mut current = x.clone();
        for layer in &self.layers {
            let z = current.dot(&layer.weights) + &layer.bias;
            let a = layer.activation.apply(&z);
            cache.inputs.push(current);
            cache.pre.push(z);
            current = a.clone();
            cache.outputs.push(a);
        }
        Ok((current, cache))
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.forward(x).map(|(out, _)| out)
    }

    /// Parameter gradients and the gradient with respect to the input, given
    /// the gradient of the loss with respect to the network output.
    pub fn backward(&self, cache: &Cache, grad_output: &Array2<f64>) -> (Gradients, Array2<f64>) {
        let mut grads = Gradients::zeros_like(self);
        let mut g = grad_output.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let dz = layer.activation.backward(&cache.pre[k], &cache.outputs[k], &g);
            grads.weights[k] = cache.inputs[k].t().dot(&dz);
            grads.bias[k] = dz.sum_axis(Axis(0));
            g = dz.dot(&layer.weights.t());
        }
        (grads, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    #[test]
    fn zero_network_sigmoid_is_half() {
        let mut mlp = Mlp::new(&[3, 2], vec![Activation::Sigmoid], &mut SeedStream::new(1).rng()).unwrap();
        mlp.params_mut().for_each(|p| *p = 0.0);
        let out = mlp.predict(&Array2::from_elem((4, 3), 0.7)).unwrap();
        assert!(out.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn softmax_blocks_normalize() {
        let head = OutputHead::new(vec![
            HeadBlock { start: 0, width: 1, kind: HeadKind::Sigmoid },
            HeadBlock { start: 1, width: 3, kind: HeadKind::Softmax },
            HeadBlock { start: 4, width: 2, kind: HeadKind::Softmax },
        ])
        .unwrap();
        let mlp = Mlp::new(&[5, 8, 6], vec![Activation::Tanh, Activation::Head(head)], &mut SeedStream::new(2).rng()).unwrap();
        let x = Array2::from_shape_fn((7, 5), |(i, j)| ((i * 5 + j) as f64).sin() * 3.0);
        let out = mlp.predict(&x).unwrap();
        for row in out.rows() {
            assert!(row[0] > 0.0 && row[0] < 1.0);
            assert!((row.slice(ndarray::s![1..4]).sum() - 1.0).abs() < 1e-12);
            assert!((row.slice(ndarray::s![4..6]).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_layer_reproduces_input() {
        let mlp = Mlp::from_layers(vec![Dense {
            weights: Array2::eye(3),
            bias: Array1::zeros(3),
            activation: Activation::Identity,
        }])
        .unwrap();
        let x = Array2::from_shape_fn((4, 3), |(i, j)| i as f64 - j as f64 * 0.5);
        assert_eq!(mlp.predict(&x).unwrap(), x);
    }

    #[test]
    fn softmax_cross_entropy_closed_form() {
        let head = OutputHead::uniform(3, HeadKind::Softmax);
        let mlp = Mlp::new(&[2, 3], vec![Activation::Head(head)], &mut SeedStream::new(3).rng()).unwrap();
        let x = Array2::from_shape_vec((2, 2), vec![0.3, -1.2, 2.0, 0.5]).unwrap();
        let y = Array2::from_shape_vec((2, 3), vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let (p, cache) = mlp.forward(&x).unwrap();
        // d/dp of -sum y log p
        let g = Zip::from(&y).and(&p).map_collect(|&y, &p| -y / p);
        let dz = mlp.layers[0].activation.backward(&cache.pre[0], &cache.outputs[0], &g);
        let expected = &p - &y;
        for (a, b) in dz.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradient() {
        let mlp = Mlp::new(&[4, 5, 2], vec![Activation::LeakyRelu, Activation::Sigmoid], &mut SeedStream::new(4).rng()).unwrap();
        let x = Array2::from_elem((3, 4), 0.2);
        let (_, cache) = mlp.forward(&x).unwrap();
        let (grads, gx) = mlp.backward(&cache, &Array2::zeros((3, 2)));
        assert!(grads.iter().all(|&g| g == 0.0));
        assert!(gx.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let mlp = Mlp::new(&[4, 2], vec![Activation::Identity], &mut SeedStream::new(4).rng()).unwrap();
        assert!(matches!(mlp.forward(&Array2::zeros((1, 3))), Err(Error::DimensionMismatch { .. })));
    }
}
