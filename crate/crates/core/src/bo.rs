//! Basic-operation census: how many additions, subtractions, multiplications,
//! divisions and transcendental ("root") evaluations each layer performs for
//! one data instance, per run step.
//!
//! The `root` slot covers every transcendental evaluation, exponentials
//! included; activations are priced through their decompositions into the
//! five categories:
//!
//! | activation | decomposition                 | add | sub | mul | div | root |
//! |------------|-------------------------------|-----|-----|-----|-----|------|
//! | sigmoid    | `1 / (1 + e^(0 - x))`         | 1   | 1   | 0   | 1   | 1    |
//! | gelu       | `x * sigmoid(1.702 x)`        | 1   | 1   | 2   | 1   | 1    |
//! | tanh       | `2 * sigmoid(2 x) - 1`        | 1   | 2   | 2   | 1   | 1    |

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};

use crate::error::{Error, Result};
use crate::model::{Activation, AnalysisLevel, LayerKind, LayerSpec, LossKind, ModelSpec};

/// Counters in the fixed order `[add, sub, mul, div, root]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BasicOpCounts {
    pub add: u64,
    pub sub: u64,
    pub mul: u64,
    pub div: u64,
    pub root: u64,
}

impl BasicOpCounts {
    pub const ZERO: BasicOpCounts = BasicOpCounts::new(0, 0, 0, 0, 0);

    pub const fn new(add: u64, sub: u64, mul: u64, div: u64, root: u64) -> Self {
        BasicOpCounts {
            add,
            sub,
            mul,
            div,
            root,
        }
    }

    pub const fn from_array(a: [u64; 5]) -> Self {
        BasicOpCounts::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub const fn to_array(self) -> [u64; 5] {
        [self.add, self.sub, self.mul, self.div, self.root]
    }

    pub fn total(&self) -> u64 {
        self.to_array().iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        *self == BasicOpCounts::ZERO
    }
}

impl From<[u64; 5]> for BasicOpCounts {
    fn from(a: [u64; 5]) -> Self {
        BasicOpCounts::from_array(a)
    }
}

impl Add for BasicOpCounts {
    type Output = BasicOpCounts;

    fn add(self, rhs: Self) -> Self {
        BasicOpCounts::new(
            self.add + rhs.add,
            self.sub + rhs.sub,
            self.mul + rhs.mul,
            self.div + rhs.div,
            self.root + rhs.root,
        )
    }
}

impl AddAssign for BasicOpCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Mul<u64> for BasicOpCounts {
    type Output = BasicOpCounts;

    fn mul(self, k: u64) -> Self {
        BasicOpCounts::new(
            self.add * k,
            self.sub * k,
            self.mul * k,
            self.div * k,
            self.root * k,
        )
    }
}

impl Sum for BasicOpCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(BasicOpCounts::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a BasicOpCounts> for BasicOpCounts {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

impl fmt::Display for BasicOpCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}, {}]",
            self.add, self.sub, self.mul, self.div, self.root
        )
    }
}

/// Per-instance cost of one layer in each run step it takes part in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerBoProfile {
    pub forward: BasicOpCounts,
    /// Zero below the training level.
    pub backprop: BasicOpCounts,
    /// Cost of one optimizer step, zero below the training level.
    pub update_per_batch: BasicOpCounts,
}

const SIGMOID: BasicOpCounts = BasicOpCounts::new(1, 1, 0, 1, 1);

/// Forward cost of applying `act` to `units` values.
pub fn count_activation(act: Activation, units: u64) -> BasicOpCounts {
    let per_unit = match act {
        Activation::None => BasicOpCounts::ZERO,
        Activation::Sigmoid => SIGMOID,
        // scale the argument, sigmoid, then scale the result
        Activation::Gelu => SIGMOID + BasicOpCounts::new(0, 0, 2, 0, 0),
        // 2 x, sigmoid, 2 s, minus one
        Activation::Tanh => SIGMOID + BasicOpCounts::new(0, 1, 2, 0, 0),
    };
    per_unit * units
}

/// Per-unit cost of turning an upstream gradient into the pre-activation
/// delta, `delta = g * act'(xi)`. The final multiplication by `g` is always
/// counted, even for the identity activation.
fn activation_backprop(act: Activation) -> BasicOpCounts {
    let derivative = match act {
        Activation::None => BasicOpCounts::ZERO,
        // y (1 - y) from the stored output
        Activation::Sigmoid => BasicOpCounts::new(0, 1, 1, 0, 0),
        // 1 - y y from the stored output
        Activation::Tanh => BasicOpCounts::new(0, 1, 1, 0, 0),
        // z = 1.702 x, fresh s = sigmoid(z), then s + z s (1 - s)
        Activation::Gelu => {
            BasicOpCounts::new(0, 0, 1, 0, 0) + SIGMOID + BasicOpCounts::new(1, 1, 2, 0, 0)
        }
    };
    derivative + BasicOpCounts::new(0, 0, 1, 0, 0)
}

pub fn count_forward(layer: &LayerSpec) -> BasicOpCounts {
    let macs = match layer.kind {
        LayerKind::FullyConnected { inputs, outputs } => (inputs * outputs) as u64,
        LayerKind::Convolutional {
            out_width,
            kernel,
            in_channels,
            out_channels,
        } => (out_width * out_width * out_channels * in_channels * kernel * kernel) as u64,
    };
    // Each output starts from its bias, so every product costs one add.
    BasicOpCounts::new(macs, 0, macs, 0, 0)
        + count_activation(layer.activation, layer.output_units() as u64)
}

/// Per-instance loss cost for the model's output layer.
pub fn count_loss(output_layer: &LayerSpec, loss: LossKind) -> BasicOpCounts {
    let o = output_layer.output_units() as u64;
    match loss {
        // O differences, O squares, O-1 adds to sum, one division for the mean
        LossKind::Mse => BasicOpCounts::new(o - 1, o, o, 1, 0),
    }
}

fn dense_dims(layer: &LayerSpec, step: &str) -> Result<(u64, u64)> {
    match layer.kind {
        LayerKind::FullyConnected { inputs, outputs } => Ok((inputs as u64, outputs as u64)),
        LayerKind::Convolutional { .. } => Err(Error::Unsupported(format!(
            "{step} counting is only defined for fully-connected layers"
        ))),
    }
}

/// Per-instance backpropagation cost of a fully-connected layer.
///
/// Covers the activation derivative, accumulation of the weight and bias
/// gradients, and (unless this is the first layer) the deltas passed to the
/// previous layer.
pub fn count_backprop(layer: &LayerSpec, is_first_layer: bool) -> Result<BasicOpCounts> {
    let (i, o) = dense_dims(layer, "backpropagation")?;
    let deltas = activation_backprop(layer.activation) * o;
    let weight_grads = BasicOpCounts::new(i * o, 0, i * o, 0, 0);
    let bias_grads = BasicOpCounts::new(o, 0, 0, 0, 0);
    let input_deltas = if is_first_layer {
        BasicOpCounts::ZERO
    } else {
        BasicOpCounts::new(i * (o - 1), 0, i * o, 0, 0)
    };
    Ok(deltas + weight_grads + bias_grads + input_deltas)
}

/// Cost of one plain SGD step on the layer's parameters, `p -= lr * grad`.
pub fn count_update(layer: &LayerSpec) -> Result<BasicOpCounts> {
    let (i, o) = dense_dims(layer, "parameter update")?;
    let params = i * o + o;
    Ok(BasicOpCounts::new(0, params, params, 0, 0))
}

/// Census of a whole model at one analysis level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelBoCounts {
    pub level: AnalysisLevel,
    pub layers: Vec<LayerBoProfile>,
    /// Zero below the validation level.
    pub loss: BasicOpCounts,
    pub forward_total: BasicOpCounts,
    pub backprop_total: BasicOpCounts,
    pub update_per_batch_total: BasicOpCounts,
    /// Everything done for one data instance: forward, loss and backprop as
    /// the level requires. Parameter updates happen per batch and are not
    /// part of it.
    pub per_instance: BasicOpCounts,
    pub instances_per_run: u64,
    pub steps_per_run: u64,
    /// `per_instance * instances_per_run + update_per_batch_total * steps_per_run`.
    pub per_run: BasicOpCounts,
}

pub fn count_model(model: &ModelSpec, level: AnalysisLevel) -> Result<ModelBoCounts> {
    if level.includes_backprop() {
        if let Some(i) = model.layers().iter().position(|l| !l.is_fully_connected()) {
            return Err(Error::Unsupported(format!(
                "training-level analysis needs fully-connected layers, layer {} is convolutional",
                i + 1
            )));
        }
    }

    let layers = model
        .layers()
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let forward = count_forward(layer);
            if level.includes_backprop() {
                Ok(LayerBoProfile {
                    forward,
                    backprop: count_backprop(layer, i == 0)?,
                    update_per_batch: count_update(layer)?,
                })
            } else {
                Ok(LayerBoProfile {
                    forward,
                    backprop: BasicOpCounts::ZERO,
                    update_per_batch: BasicOpCounts::ZERO,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let loss = if level.includes_loss() {
        count_loss(model.output_layer(), model.loss())
    } else {
        BasicOpCounts::ZERO
    };
    let forward_total: BasicOpCounts = layers.iter().map(|l| l.forward).sum();
    let backprop_total: BasicOpCounts = layers.iter().map(|l| l.backprop).sum();
    let update_per_batch_total: BasicOpCounts = layers.iter().map(|l| l.update_per_batch).sum();
    let per_instance = forward_total + loss + backprop_total;

    let training = model.training();
    let instances_per_run = training.instances_per_run();
    let steps_per_run = training.steps_per_run();
    Ok(ModelBoCounts {
        level,
        layers,
        loss,
        forward_total,
        backprop_total,
        update_per_batch_total,
        per_instance,
        instances_per_run,
        steps_per_run,
        per_run: per_instance * instances_per_run + update_per_batch_total * steps_per_run,
    })
}
