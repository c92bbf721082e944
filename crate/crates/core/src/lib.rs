//! Hardware-agnostic energy cost model for neural networks.
//!
//! The pipeline turns an architecture description into per-layer basic
//! operation counts ([`bo`]), lowers those to transistor operations through
//! an IEEE-754 circuit cost table ([`tos`]), and maps transistor operations
//! to measured energy with a fitted linear model ([`energy`]). A
//! multiply-accumulate baseline ([`flops`]) is provided for comparison, and
//! [`oracle`] re-derives the operation counts by executing the network.

pub mod bo;
pub mod energy;
pub mod error;
pub mod flops;
pub mod model;
pub mod oracle;
pub mod tos;

pub use bo::{
    count_activation, count_backprop, count_forward, count_loss, count_model, count_update,
    BasicOpCounts, LayerBoProfile, ModelBoCounts,
};
pub use error::{Error, Result};
pub use flops::{flops_forward, flops_model, FlopsCount, FlopsReport};
pub use model::{
    model_family, Activation, AnalysisLevel, FloatFormat, LayerKind, LayerSpec, LossKind,
    ModelSpec, TrainingConfig,
};
pub use tos::{
    adder_tos, analyze, fp_op_tos, scaled_unit_tos, tos_from_bos, CostTable, OpKind, ToCount,
    ToProfile,
};
