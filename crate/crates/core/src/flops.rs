//! Multiply-accumulate baseline: counts only the products and sums of
//! fully-connected and convolutional layers, ignoring activations, loss and
//! every other operation.

use crate::error::Result;
use crate::model::{AnalysisLevel, LayerKind, LayerSpec, ModelSpec};

/// `flops` is always `2 * macs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlopsCount {
    pub macs: u64,
    pub flops: u64,
}

impl FlopsCount {
    pub fn from_macs(macs: u64) -> Self {
        FlopsCount {
            macs,
            flops: 2 * macs,
        }
    }
}

/// Backward passes are taken to cost twice the forward MACs (input and
/// weight gradients), so training costs three forward passes.
pub const TRAINING_MAC_FACTOR: u64 = 3;

pub fn flops_forward(layer: &LayerSpec) -> FlopsCount {
    let macs = match layer.kind {
        LayerKind::FullyConnected { inputs, outputs } => inputs * outputs,
        LayerKind::Convolutional {
            out_width,
            kernel,
            in_channels,
            out_channels,
        } => out_width * out_width * out_channels * in_channels * kernel * kernel,
    };
    FlopsCount::from_macs(macs as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopsReport {
    pub per_instance: FlopsCount,
    pub per_run: FlopsCount,
}

pub fn flops_model(model: &ModelSpec, level: AnalysisLevel) -> Result<FlopsReport> {
    let forward: u64 = model.layers().iter().map(|l| flops_forward(l).macs).sum();
    let macs = if level.includes_backprop() {
        forward * TRAINING_MAC_FACTOR
    } else {
        forward
    };
    Ok(FlopsReport {
        per_instance: FlopsCount::from_macs(macs),
        per_run: FlopsCount::from_macs(macs * model.training().instances_per_run()),
    })
}
