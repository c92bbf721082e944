//! Brute-force operation census: runs small fully-connected networks on
//! scalars that count every arithmetic operation they take part in.
//!
//! Nothing here reuses the closed forms of [`crate::bo`]; the tallies come
//! from executing the arithmetic, so they can be used to check them.

use std::cell::Cell;
use std::ops::{Add, Div, Mul, Sub};

use crate::bo::BasicOpCounts;
use crate::error::{Error, Result};
use crate::model::{Activation, LayerKind, LossKind, ModelSpec};

/// Operation counters shared by the scalars of one run.
#[derive(Debug, Default)]
pub struct Tally {
    add: Cell<u64>,
    sub: Cell<u64>,
    mul: Cell<u64>,
    div: Cell<u64>,
    root: Cell<u64>,
}

impl Tally {
    pub fn new() -> Self {
        Tally::default()
    }

    /// A scalar that costs nothing to obtain (a constant, weight or input).
    pub fn constant(&self, value: f64) -> CountingScalar<'_> {
        CountingScalar { value, tally: self }
    }

    pub fn snapshot(&self) -> BasicOpCounts {
        BasicOpCounts::new(
            self.add.get(),
            self.sub.get(),
            self.mul.get(),
            self.div.get(),
            self.root.get(),
        )
    }

    fn bump(cell: &Cell<u64>) {
        cell.set(cell.get() + 1);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CountingScalar<'t> {
    value: f64,
    tally: &'t Tally,
}

impl<'t> CountingScalar<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    /// `e^x`, counted in the transcendental slot.
    pub fn exp(self) -> Self {
        Tally::bump(&self.tally.root);
        CountingScalar {
            value: self.value.exp(),
            tally: self.tally,
        }
    }

    fn with(self, value: f64) -> Self {
        CountingScalar {
            value,
            tally: self.tally,
        }
    }
}

macro_rules! counted_op {
    ($trait:ident, $method:ident, $op:tt, $counter:ident) => {
        impl<'t> $trait for CountingScalar<'t> {
            type Output = CountingScalar<'t>;
            fn $method(self, rhs: Self) -> Self {
                Tally::bump(&self.tally.$counter);
                self.with(self.value $op rhs.value)
            }
        }

        impl<'t> $trait<f64> for CountingScalar<'t> {
            type Output = CountingScalar<'t>;
            fn $method(self, rhs: f64) -> Self {
                Tally::bump(&self.tally.$counter);
                self.with(self.value $op rhs)
            }
        }
    };
}

counted_op!(Add, add, +, add);
counted_op!(Sub, sub, -, sub);
counted_op!(Mul, mul, *, mul);
counted_op!(Div, div, /, div);

fn sigmoid(x: CountingScalar<'_>) -> CountingScalar<'_> {
    let one = x.tally.constant(1.0);
    let neg = x.tally.constant(0.0) - x;
    one / (one + neg.exp())
}

fn activate(act: Activation, x: CountingScalar<'_>) -> CountingScalar<'_> {
    match act {
        Activation::None => x,
        Activation::Sigmoid => sigmoid(x),
        Activation::Gelu => x * sigmoid(x * 1.702),
        Activation::Tanh => sigmoid(x * 2.0) * 2.0 - 1.0,
    }
}

/// `g * act'(xi)`; `y` is the stored activation output.
fn activation_delta<'t>(
    act: Activation,
    g: CountingScalar<'t>,
    xi: CountingScalar<'t>,
    y: CountingScalar<'t>,
) -> CountingScalar<'t> {
    let one = g.tally.constant(1.0);
    let derivative = match act {
        Activation::None => one,
        Activation::Sigmoid => y * (one - y),
        Activation::Tanh => one - y * y,
        Activation::Gelu => {
            let z = xi * 1.702;
            let s = sigmoid(z);
            s + z * (s * (one - s))
        }
    };
    g * derivative
}

#[derive(Debug, Clone)]
struct DenseParams {
    /// `weights[j][i]` connects input `i` to output `j`.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

fn dense_layers(model: &ModelSpec) -> Result<Vec<DenseParams>> {
    model
        .layers()
        .iter()
        .enumerate()
        .map(|(li, layer)| match layer.kind {
            LayerKind::FullyConnected { inputs, outputs } => {
                // Deterministic, value-irrelevant weights.
                let w = |j: usize, i: usize| ((li * 31 + j * 7 + i * 3) % 11) as f64 / 11.0 - 0.45;
                Ok(DenseParams {
                    weights: (0..outputs)
                        .map(|j| (0..inputs).map(|i| w(j, i)).collect())
                        .collect(),
                    bias: (0..outputs)
                        .map(|j| 0.1 * ((j % 3) as f64) - 0.05)
                        .collect(),
                    activation: layer.activation,
                })
            }
            LayerKind::Convolutional { .. } => Err(Error::Unsupported(format!(
                "the oracle executes fully-connected layers only, layer {} is convolutional",
                li + 1
            ))),
        })
        .collect()
}

/// Network with explicit parameters, for runs where the values matter.
#[derive(Debug, Clone)]
pub struct OracleNetwork {
    layers: Vec<DenseParams>,
    loss: LossKind,
}

struct LayerTrace<'t> {
    input: Vec<CountingScalar<'t>>,
    pre: Vec<CountingScalar<'t>>,
    out: Vec<CountingScalar<'t>>,
}

impl OracleNetwork {
    /// Builds the network with fixed pseudo-random parameters.
    pub fn from_model(model: &ModelSpec) -> Result<Self> {
        Ok(OracleNetwork {
            layers: dense_layers(model)?,
            loss: model.loss(),
        })
    }

    /// Replaces the parameters; `weights[l][j][i]`, `bias[l][j]`.
    pub fn with_parameters(
        mut self,
        weights: Vec<Vec<Vec<f64>>>,
        bias: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if weights.len() != self.layers.len() || bias.len() != self.layers.len() {
            return Err(Error::Argument(
                "parameter count does not match layer count".into(),
            ));
        }
        for ((layer, w), b) in self.layers.iter_mut().zip(weights).zip(bias) {
            let shape_ok = w.len() == layer.weights.len()
                && w.iter()
                    .zip(&layer.weights)
                    .all(|(a, b)| a.len() == b.len())
                && b.len() == layer.bias.len();
            if !shape_ok {
                return Err(Error::Argument("parameter shape mismatch".into()));
            }
            layer.weights = w;
            layer.bias = b;
        }
        Ok(self)
    }

    fn forward_layer<'t>(
        &self,
        tally: &'t Tally,
        layer: &DenseParams,
        input: Vec<CountingScalar<'t>>,
    ) -> LayerTrace<'t> {
        let pre: Vec<_> = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, &b)| {
                row.iter()
                    .zip(&input)
                    .fold(tally.constant(b), |acc, (&w, &x)| {
                        acc + tally.constant(w) * x
                    })
            })
            .collect();
        let out = pre
            .iter()
            .map(|&xi| activate(layer.activation, xi))
            .collect();
        LayerTrace { input, pre, out }
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        let expected = self.layers[0].weights[0].len();
        if input.len() != expected {
            return Err(Error::Argument(format!(
                "input has {} values, first layer expects {expected}",
                input.len()
            )));
        }
        Ok(())
    }

    pub fn run_forward(&self, input: &[f64]) -> Result<(Vec<f64>, BasicOpCounts)> {
        self.check_input(input)?;
        let tally = Tally::new();
        let mut x: Vec<_> = input.iter().map(|&v| tally.constant(v)).collect();
        for layer in &self.layers {
            x = self.forward_layer(&tally, layer, x).out;
        }
        Ok((x.iter().map(|s| s.value()).collect(), tally.snapshot()))
    }

    /// One instance of forward, loss and backprop followed by one SGD step,
    /// as if the batch held this instance alone.
    pub fn run_training_step(
        &mut self,
        input: &[f64],
        target: &[f64],
        learning_rate: f64,
    ) -> Result<TrainingTally> {
        self.check_input(input)?;
        let outputs = self.layers.last().map(|l| l.bias.len()).unwrap_or(0);
        if target.len() != outputs {
            return Err(Error::Argument(format!(
                "target has {} values, model produces {outputs}",
                target.len()
            )));
        }

        let tally = Tally::new();
        let mut traces = Vec::with_capacity(self.layers.len());
        let mut forward = Vec::with_capacity(self.layers.len());
        let mut x: Vec<_> = input.iter().map(|&v| tally.constant(v)).collect();
        for layer in &self.layers {
            let before = tally.snapshot();
            let trace = self.forward_layer(&tally, layer, x);
            forward.push(diff(tally.snapshot(), before));
            x = trace.out.clone();
            traces.push(trace);
        }

        let before = tally.snapshot();
        let LossKind::Mse = self.loss;
        let residuals: Vec<_> = x
            .iter()
            .zip(target)
            .map(|(&y, &t)| y - tally.constant(t))
            .collect();
        let squared: Vec<_> = residuals.iter().map(|&r| r * r).collect();
        let sum = squared[1..].iter().fold(squared[0], |acc, &s| acc + s);
        let loss_value = sum / residuals.len() as f64;
        let loss = diff(tally.snapshot(), before);

        // Upstream gradient: d(loss)/dy = 2 r / O. The constant 2 / O is
        // folded into the step size below, so the residuals are used as is.
        let grad_scale = 2.0 / residuals.len() as f64;
        let mut upstream = residuals;
        let mut backprop = vec![BasicOpCounts::ZERO; self.layers.len()];
        let mut grads: Vec<(Vec<Vec<CountingScalar<'_>>>, Vec<CountingScalar<'_>>)> =
            Vec::with_capacity(self.layers.len());
        for (li, (layer, trace)) in self.layers.iter().zip(&traces).enumerate().rev() {
            let before = tally.snapshot();
            let deltas: Vec<_> = upstream
                .iter()
                .zip(trace.pre.iter().zip(&trace.out))
                .map(|(&g, (&xi, &y))| activation_delta(layer.activation, g, xi, y))
                .collect();
            // Accumulate into zero-initialized gradient buffers.
            let weight_grads: Vec<Vec<_>> = deltas
                .iter()
                .map(|&d| {
                    trace
                        .input
                        .iter()
                        .map(|&x| tally.constant(0.0) + d * x)
                        .collect()
                })
                .collect();
            let bias_grads: Vec<_> = deltas.iter().map(|&d| tally.constant(0.0) + d).collect();
            if li > 0 {
                upstream = (0..trace.input.len())
                    .map(|i| {
                        let term = |j: usize| tally.constant(layer.weights[j][i]) * deltas[j];
                        (1..deltas.len()).fold(term(0), |acc, j| acc + term(j))
                    })
                    .collect();
            }
            backprop[li] = diff(tally.snapshot(), before);
            grads.push((weight_grads, bias_grads));
        }
        grads.reverse();

        let mut update = Vec::with_capacity(self.layers.len());
        let step = learning_rate * grad_scale;
        for (layer, (weight_grads, bias_grads)) in self.layers.iter_mut().zip(grads) {
            let before = tally.snapshot();
            for (row, grow) in layer.weights.iter_mut().zip(&weight_grads) {
                for (w, &g) in row.iter_mut().zip(grow) {
                    *w = (tally.constant(*w) - g * step).value();
                }
            }
            for (b, &g) in layer.bias.iter_mut().zip(&bias_grads) {
                *b = (tally.constant(*b) - g * step).value();
            }
            update.push(diff(tally.snapshot(), before));
        }

        Ok(TrainingTally {
            forward,
            loss,
            backprop,
            update,
            loss_value: loss_value.value(),
            total: tally.snapshot(),
        })
    }

    /// Plain `f64` loss for the current parameters, no counting.
    pub fn loss_value(&self, input: &[f64], target: &[f64]) -> Result<f64> {
        let (out, _) = self.run_forward(input)?;
        Ok(out
            .iter()
            .zip(target)
            .map(|(y, t)| (y - t) * (y - t))
            .sum::<f64>()
            / out.len() as f64)
    }
}

fn diff(after: BasicOpCounts, before: BasicOpCounts) -> BasicOpCounts {
    BasicOpCounts::new(
        after.add - before.add,
        after.sub - before.sub,
        after.mul - before.mul,
        after.div - before.div,
        after.root - before.root,
    )
}

/// Per-segment tallies of one training step, layers in model order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTally {
    pub forward: Vec<BasicOpCounts>,
    pub loss: BasicOpCounts,
    pub backprop: Vec<BasicOpCounts>,
    pub update: Vec<BasicOpCounts>,
    /// Loss before the update.
    pub loss_value: f64,
    pub total: BasicOpCounts,
}

/// Executes the model's forward pass on `input` and returns outputs and tally.
pub fn run_forward(model: &ModelSpec, input: &[f64]) -> Result<(Vec<f64>, BasicOpCounts)> {
    OracleNetwork::from_model(model)?.run_forward(input)
}

/// Executes one training step on `(input, target)` and returns the
/// segmented tally.
pub fn run_training_step(
    model: &ModelSpec,
    input: &[f64],
    target: &[f64],
) -> Result<TrainingTally> {
    OracleNetwork::from_model(model)?.run_training_step(input, target, 0.01)
}
