//! Fully connected ReLU networks with inverted dropout and reverse-mode gradients.
//!
//! All passes operate on row-major batches (`[batch, features]`); the
//! single-vector entry points wrap a batch of one.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout masks are drawn and recorded on the tape.
    Train,
    /// Deterministic pass.
    Eval,
}

/// One affine layer: `weight` is `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Real> Dense<T> {
    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    layers: Vec<Dense<T>>,
    activation: Activation,
    dropout_rate: T,
}

/// Activations recorded by a forward pass, consumed by [`NetworkParams::gradient`].
#[derive(Debug, Clone)]
pub struct Tape<T> {
    /// Input to every layer (the network input first).
    inputs: Vec<Array2<T>>,
    /// Per hidden layer: ReLU derivative times the inverted dropout scale.
    factors: Vec<Array2<T>>,
    shape: Vec<(usize, usize)>,
    mode: Mode,
}

impl<T> Tape<T> {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, |a| a.nrows())
    }
}

/// Gradients with the same layout as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(params: &NetworkParams<T>) -> Self {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, factor: T) {
        for l in &mut self.layers {
            l.weight.mapv_inplace(|w| w * factor);
            l.bias.mapv_inplace(|b| b * factor);
        }
    }

    /// First non-finite entry as `(layer, "weight"|"bias", flat index)`.
    pub fn first_non_finite(&self) -> Option<(usize, &'static str, usize)> {
        for (li, l) in self.layers.iter().enumerate() {
            if let Some(i) = l.weight.iter().position(|v| !v.is_finite()) {
                return Some((li, "weight", i));
            }
            if let Some(i) = l.bias.iter().position(|v| !v.is_finite()) {
                return Some((li, "bias", i));
            }
        }
        None
    }

    pub fn shapes_match(&self, params: &NetworkParams<T>) -> bool {
        self.layers.len() == params.layers.len()
            && self.layers.iter().zip(&params.layers).all(|(g, p)| {
                g.weight.dim() == p.weight.dim() && g.bias.len() == p.bias.len()
            })
    }
}

impl<T: Real> NetworkParams<T> {
    pub fn new(layers: Vec<Dense<T>>, activation: Activation, dropout_rate: T) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        if !(dropout_rate >= T::zero() && dropout_rate < T::one()) {
            return Err(Error::Config(format!("dropout rate {dropout_rate} outside [0, 1)")));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::DimensionMismatch {
                    context: "layer bias",
                    expected: l.output_dim(),
                    actual: l.bias.len(),
                });
            }
            if i > 0 && layers[i - 1].output_dim() != l.input_dim() {
                return Err(Error::DimensionMismatch {
                    context: "layer chain",
                    expected: layers[i - 1].output_dim(),
                    actual: l.input_dim(),
                });
            }
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "network parameters".into(),
                    detail: format!("layer {i}"),
                });
            }
        }
        Ok(NetworkParams {
            layers,
            activation,
            dropout_rate,
        })
    }

    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` initialization for every
    /// weight and bias. `dims` lists the input width, hidden widths and output width.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], dropout_rate: T, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut draw = || T::lit(rng.random_range(-bound..bound));
                let weight = Array2::from_shape_simple_fn((fan_out, fan_in), &mut draw);
                let bias = Array1::from_shape_simple_fn(fan_out, &mut draw);
                Dense { weight, bias }
            })
            .collect();
        Self::new(layers, Activation::Relu, dropout_rate)
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn dropout_rate(&self) -> T {
        self.dropout_rate
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Layer widths, input first.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.output_dim()))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn shape(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| l.weight.dim()).collect()
    }

    /// Applies `f` to every parameter in a fixed order (layers, weights row-major, then biases).
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut T)) {
        for l in &mut self.layers {
            l.weight.iter_mut().for_each(&mut f);
            l.bias.iter_mut().for_each(&mut f);
        }
    }

    pub(crate) fn for_each_layer_mut(&mut self, mut f: impl FnMut(&mut Array2<T>, &mut Array1<T>)) {
        for l in &mut self.layers {
            f(&mut l.weight, &mut l.bias);
        }
    }

    pub fn cast<U: Real>(&self) -> NetworkParams<U> {
        NetworkParams {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: l.weight.mapv(|v| U::lit(v.as_f64())),
                    bias: l.bias.mapv(|v| U::lit(v.as_f64())),
                })
                .collect(),
            activation: self.activation,
            dropout_rate: U::lit(self.dropout_rate.as_f64()),
        }
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        input: &[T],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Vec<T>, Tape<T>)> {
        let batch = ArrayView2::from_shape((1, input.len()), input).map_err(|_| {
            Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: input.len(),
            }
        })?;
        let (out, tape) = self.forward_batch(batch, mode, rng)?;
        Ok((out.row(0).to_vec(), tape))
    }

    pub fn forward_batch<R: Rng + ?Sized>(
        &self,
        inputs: ArrayView2<T>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Array2<T>, Tape<T>)> {
        self.check_input(inputs.ncols())?;
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.layers.len()),
            factors: Vec::with_capacity(self.layers.len() - 1),
            shape: self.shape(),
            mode,
        };
        let keep = T::one() - self.dropout_rate;
        let scale = T::one() / keep;
        let drop = mode == Mode::Train && self.dropout_rate > T::zero();
        let keep_f64 = keep.as_f64();

        let mut current = inputs.to_owned();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weight.t());
            z += &layer.bias;
            tape.inputs.push(current);
            if li < last {
                let mut factor = z.mapv(|v| if v > T::zero() { T::one() } else { T::zero() });
                if drop {
                    factor.mapv_inplace(|f| {
                        if rng.random::<f64>() < keep_f64 {
                            f * scale
                        } else {
                            T::zero()
                        }
                    });
                }
                Zip::from(&mut z).and(&factor).for_each(|v, &f| {
                    // relu(z) * dropout == z * factor for z > 0 and 0 otherwise
                    *v = if f > T::zero() { *v * f } else { T::zero() };
                });
                tape.factors.push(factor);
            }
            current = z;
        }
        Ok((current, tape))
    }

    /// Evaluation-mode pass without recording a tape.
    pub fn predict_batch(&self, inputs: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(inputs.ncols())?;
        let last = self.layers.len() - 1;
        let mut current = inputs.to_owned();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weight.t());
            z += &layer.bias;
            if li < last {
                z.mapv_inplace(|v| v.max(T::zero()));
            }
            current = z;
        }
        Ok(current)
    }

    pub fn predict(&self, input: &[T]) -> Result<Vec<T>> {
        let batch = ArrayView2::from_shape((1, input.len()), input).map_err(|_| {
            Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: input.len(),
            }
        })?;
        Ok(self.predict_batch(batch)?.row(0).to_vec())
    }

    /// Reverse-mode gradients of a scalar loss given `dL/d(output)` for every row.
    ///
    /// Returns the parameter gradients (summed over the batch) and `dL/d(input)`.
    pub fn gradient(
        &self,
        tape: &Tape<T>,
        output_grad: ArrayView2<T>,
    ) -> Result<(Gradients<T>, Array2<T>)> {
        if tape.shape != self.shape() {
            return Err(Error::DimensionMismatch {
                context: "stale tape (layer shapes)",
                expected: self.layers.len(),
                actual: tape.shape.len(),
            });
        }
        if output_grad.ncols() != self.output_dim() || output_grad.nrows() != tape.batch_size() {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: self.output_dim(),
                actual: output_grad.ncols(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.to_owned();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &tape.inputs[li];
            let weight = delta.t().dot(input);
            let bias = delta.sum_axis(Axis(0));
            grads.push(Dense { weight, bias });
            let mut upstream = delta.dot(&layer.weight);
            if li > 0 {
                upstream *= &tape.factors[li - 1];
            }
            delta = upstream;
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, delta))
    }

    fn check_input(&self, width: usize) -> Result<()> {
        if width != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: width,
            });
        }
        Ok(())
    }
}

/// Free-function form of [`NetworkParams::forward`].
pub fn network_forward<T: Real, R: Rng + ?Sized>(
    params: &NetworkParams<T>,
    input: &[T],
    mode: Mode,
    rng: &mut R,
) -> Result<(Vec<T>, Tape<T>)> {
    params.forward(input, mode, rng)
}

/// Free-function form of [`NetworkParams::gradient`] for a single-row tape.
pub fn network_gradient<T: Real>(
    params: &NetworkParams<T>,
    tape: &Tape<T>,
    output_grad: &[T],
) -> Result<Gradients<T>> {
    let view = ArrayView2::from_shape((1, output_grad.len()), output_grad).map_err(|_| {
        Error::DimensionMismatch {
            context: "output gradient",
            expected: params.output_dim(),
            actual: output_grad.len(),
        }
    })?;
    params.gradient(tape, view).map(|(g, _)| g)
}
