//! Architecture descriptions: layers, activations, numeric format and the
//! training settings that scale per-instance costs up to a full run.
//!
//! Models are read from a small TOML document:
//!
//! ```toml
//! name = "ffnn-w13"
//! float_format = "fp32"
//! loss = "mse"
//!
//! [training]
//! dataset_len = 1372
//! batch_size = 64
//! epochs = 2000
//!
//! [[layers]]
//! kind = "fully_connected"
//! inputs = 4
//! outputs = 13
//! activation = "sigmoid"
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IEEE-754 style binary floating-point layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    exponent_bits: u32,
    fraction_bits: u32,
}

impl FloatFormat {
    pub const FP16: FloatFormat = FloatFormat {
        exponent_bits: 5,
        fraction_bits: 10,
    };
    pub const FP32: FloatFormat = FloatFormat {
        exponent_bits: 8,
        fraction_bits: 23,
    };
    pub const FP64: FloatFormat = FloatFormat {
        exponent_bits: 11,
        fraction_bits: 52,
    };

    pub fn new(exponent_bits: u32, fraction_bits: u32) -> Result<Self> {
        if exponent_bits == 0 || fraction_bits == 0 {
            return Err(Error::Argument(format!(
                "float format needs at least one exponent and one fraction bit, got e={exponent_bits} f={fraction_bits}"
            )));
        }
        Ok(FloatFormat {
            exponent_bits,
            fraction_bits,
        })
    }

    pub fn sign_bits(&self) -> u32 {
        1
    }

    pub fn exponent_bits(&self) -> u32 {
        self.exponent_bits
    }

    pub fn fraction_bits(&self) -> u32 {
        self.fraction_bits
    }

    /// Significand width including the implicit leading one.
    pub fn significand_bits(&self) -> u32 {
        self.fraction_bits + 1
    }

    pub fn total_bits(&self) -> u32 {
        self.sign_bits() + self.exponent_bits + self.fraction_bits
    }

    /// Preset name, if this is one of the three standard formats.
    pub fn preset_name(&self) -> Option<&'static str> {
        match *self {
            FloatFormat::FP16 => Some("fp16"),
            FloatFormat::FP32 => Some("fp32"),
            FloatFormat::FP64 => Some("fp64"),
            _ => None,
        }
    }
}

impl FromStr for FloatFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fp16" => Ok(FloatFormat::FP16),
            "fp32" => Ok(FloatFormat::FP32),
            "fp64" => Ok(FloatFormat::FP64),
            other => Err(Error::UnknownVariant {
                field: "float_format".into(),
                value: other.into(),
                expected: "fp16, fp32, fp64",
            }),
        }
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.preset_name() {
            Some(name) => f.write_str(name),
            None => write!(f, "fp(1,{},{})", self.exponent_bits, self.fraction_bits),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    None,
    Sigmoid,
    Tanh,
    /// The sigmoid approximation `x * sigmoid(1.702 x)`.
    Gelu,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::None,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Gelu,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Activation::None => "none",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Gelu => "gelu",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownVariant {
                field: "activation".into(),
                value: s.into(),
                expected: "none, sigmoid, tanh, gelu",
            })
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    FullyConnected {
        inputs: usize,
        outputs: usize,
    },
    /// A square convolution producing `out_width x out_width` windows per
    /// output channel.
    Convolutional {
        out_width: usize,
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn fully_connected(inputs: usize, outputs: usize, activation: Activation) -> Self {
        LayerSpec {
            kind: LayerKind::FullyConnected { inputs, outputs },
            activation,
        }
    }

    pub fn convolutional(
        out_width: usize,
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        activation: Activation,
    ) -> Self {
        LayerSpec {
            kind: LayerKind::Convolutional {
                out_width,
                kernel,
                in_channels,
                out_channels,
            },
            activation,
        }
    }

    /// Number of activated output values for one data instance.
    pub fn output_units(&self) -> usize {
        match self.kind {
            LayerKind::FullyConnected { outputs, .. } => outputs,
            LayerKind::Convolutional {
                out_width,
                out_channels,
                ..
            } => out_width * out_width * out_channels,
        }
    }

    pub fn is_fully_connected(&self) -> bool {
        matches!(self.kind, LayerKind::FullyConnected { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let dims: &[(&str, usize)] = match &self.kind {
            LayerKind::FullyConnected { inputs, outputs } => {
                &[("inputs", *inputs), ("outputs", *outputs)]
            }
            LayerKind::Convolutional {
                out_width,
                kernel,
                in_channels,
                out_channels,
            } => &[
                ("out_width", *out_width),
                ("kernel", *kernel),
                ("in_channels", *in_channels),
                ("out_channels", *out_channels),
            ],
        };
        match dims.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(Error::Validation(format!(
                "layer field `{name}` must be >= 1"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Mse,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            other => Err(Error::UnknownVariant {
                field: "loss".into(),
                value: other.into(),
                expected: "mse",
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrainingConfig {
    pub dataset_len: u64,
    pub batch_size: u64,
    pub epochs: u64,
}

impl TrainingConfig {
    /// Data instances processed over the whole run.
    pub fn instances_per_run(&self) -> u64 {
        self.dataset_len * self.epochs
    }

    /// Optimizer steps over the whole run; the last batch of an epoch may be
    /// short.
    pub fn steps_per_run(&self) -> u64 {
        self.dataset_len.div_ceil(self.batch_size) * self.epochs
    }
}

/// Which run steps are analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnalysisLevel {
    /// Forward pass only.
    Inference,
    /// Forward pass and loss.
    Validation,
    /// Forward pass, loss, backpropagation and parameter updates.
    Training,
}

impl AnalysisLevel {
    pub fn includes_loss(&self) -> bool {
        *self >= AnalysisLevel::Validation
    }

    pub fn includes_backprop(&self) -> bool {
        *self >= AnalysisLevel::Training
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalysisLevel::Inference => "inference",
            AnalysisLevel::Validation => "validation",
            AnalysisLevel::Training => "training",
        }
    }
}

impl FromStr for AnalysisLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inference" => Ok(AnalysisLevel::Inference),
            "validation" => Ok(AnalysisLevel::Validation),
            "training" => Ok(AnalysisLevel::Training),
            other => Err(Error::UnknownVariant {
                field: "level".into(),
                value: other.into(),
                expected: "inference, validation, training",
            }),
        }
    }
}

impl fmt::Display for AnalysisLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated model description.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    name: String,
    float_format: FloatFormat,
    layers: Vec<LayerSpec>,
    loss: LossKind,
    training: TrainingConfig,
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        float_format: FloatFormat,
        layers: Vec<LayerSpec>,
        loss: LossKind,
        training: TrainingConfig,
    ) -> Result<Self> {
        let model = ModelSpec {
            name: name.into(),
            float_format,
            layers,
            loss,
            training,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Validation("model name must not be empty".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Validation("model has no layers".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer
                .validate()
                .map_err(|e| Error::Validation(format!("layer {}: {e}", i + 1)))?;
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            let link = match (pair[0].kind, pair[1].kind) {
                (
                    LayerKind::FullyConnected { outputs, .. },
                    LayerKind::FullyConnected { inputs, .. },
                ) => Some((outputs, inputs)),
                (
                    LayerKind::Convolutional { out_channels, .. },
                    LayerKind::Convolutional { in_channels, .. },
                ) => Some((out_channels, in_channels)),
                _ => None,
            };
            if let Some((produced, expected)) = link {
                if produced != expected {
                    return Err(Error::DimensionMismatch {
                        first: i + 1,
                        second: i + 2,
                        produced,
                        expected,
                    });
                }
            }
        }
        let t = &self.training;
        if t.dataset_len == 0 || t.batch_size == 0 || t.epochs == 0 {
            return Err(Error::Validation(
                "dataset_len, batch_size and epochs must all be >= 1".into(),
            ));
        }
        if t.batch_size > t.dataset_len {
            return Err(Error::Validation(format!(
                "batch_size {} exceeds dataset_len {}",
                t.batch_size, t.dataset_len
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn float_format(&self) -> FloatFormat {
        self.float_format
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn training(&self) -> TrainingConfig {
        self.training
    }

    pub fn output_layer(&self) -> &LayerSpec {
        self.layers.last().expect("validated model has layers")
    }

    pub fn with_float_format(mut self, float_format: FloatFormat) -> Self {
        self.float_format = float_format;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Result<Self> {
        self.name = name.into();
        self.validate()?;
        Ok(self)
    }

    /// Parses and validates a model document.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: ModelDoc = toml::from_str(text).map_err(|e| Error::from_toml(&e, text))?;
        doc.into_model()
    }

    /// Serializes into the document format accepted by [`ModelSpec::parse`].
    pub fn to_document(&self) -> String {
        toml::to_string(&ModelDoc::from_model(self)).expect("model document serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    #[serde(default = "default_float_format")]
    float_format: String,
    #[serde(default = "default_loss")]
    loss: String,
    training: TrainingDoc,
    layers: Vec<LayerDoc>,
}

fn default_float_format() -> String {
    "fp32".into()
}

fn default_loss() -> String {
    "mse".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainingDoc {
    dataset_len: u64,
    batch_size: u64,
    epochs: u64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    inputs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outputs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    in_channels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_channels: Option<usize>,
    activation: String,
}

impl LayerDoc {
    fn into_layer(self, index: usize) -> Result<LayerSpec> {
        let field = |name: &str| format!("layers[{index}].{name}");
        let require = |value: Option<usize>, name: &str| {
            value.ok_or_else(|| Error::Parse {
                line: None,
                message: format!("missing field `{}`", field(name)),
            })
        };
        let reject = |value: Option<usize>, name: &str| match value {
            Some(_) => Err(Error::Parse {
                line: None,
                message: format!(
                    "field `{}` is not valid for a {} layer",
                    field(name),
                    self.kind
                ),
            }),
            None => Ok(()),
        };
        let activation = self.activation.parse::<Activation>().map_err(|e| match e {
            Error::UnknownVariant {
                value, expected, ..
            } => Error::UnknownVariant {
                field: field("activation"),
                value,
                expected,
            },
            other => other,
        })?;
        let kind = match self.kind.as_str() {
            "fully_connected" => {
                reject(self.out_width, "out_width")?;
                reject(self.kernel, "kernel")?;
                reject(self.in_channels, "in_channels")?;
                reject(self.out_channels, "out_channels")?;
                LayerKind::FullyConnected {
                    inputs: require(self.inputs, "inputs")?,
                    outputs: require(self.outputs, "outputs")?,
                }
            }
            "convolutional" => {
                reject(self.inputs, "inputs")?;
                reject(self.outputs, "outputs")?;
                LayerKind::Convolutional {
                    out_width: require(self.out_width, "out_width")?,
                    kernel: require(self.kernel, "kernel")?,
                    in_channels: require(self.in_channels, "in_channels")?,
                    out_channels: require(self.out_channels, "out_channels")?,
                }
            }
            other => {
                return Err(Error::UnknownVariant {
                    field: field("kind"),
                    value: other.into(),
                    expected: "fully_connected, convolutional",
                })
            }
        };
        Ok(LayerSpec { kind, activation })
    }

    fn from_layer(layer: &LayerSpec) -> Self {
        let activation = layer.activation.name().to_string();
        match layer.kind {
            LayerKind::FullyConnected { inputs, outputs } => LayerDoc {
                kind: "fully_connected".into(),
                inputs: Some(inputs),
                outputs: Some(outputs),
                activation,
                ..Default::default()
            },
            LayerKind::Convolutional {
                out_width,
                kernel,
                in_channels,
                out_channels,
            } => LayerDoc {
                kind: "convolutional".into(),
                out_width: Some(out_width),
                kernel: Some(kernel),
                in_channels: Some(in_channels),
                out_channels: Some(out_channels),
                activation,
                ..Default::default()
            },
        }
    }
}

impl ModelDoc {
    fn into_model(self) -> Result<ModelSpec> {
        let float_format = self.float_format.parse()?;
        let loss = self.loss.parse()?;
        let layers = self
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| l.into_layer(i))
            .collect::<Result<Vec<_>>>()?;
        ModelSpec::new(
            self.name,
            float_format,
            layers,
            loss,
            TrainingConfig {
                dataset_len: self.training.dataset_len,
                batch_size: self.training.batch_size,
                epochs: self.training.epochs,
            },
        )
    }

    fn from_model(model: &ModelSpec) -> Self {
        ModelDoc {
            name: model.name.clone(),
            // Custom formats have no document spelling; presets are the only
            // ones a document can produce.
            float_format: model
                .float_format
                .preset_name()
                .unwrap_or("fp32")
                .to_string(),
            loss: model.loss.name().to_string(),
            training: TrainingDoc {
                dataset_len: model.training.dataset_len,
                batch_size: model.training.batch_size,
                epochs: model.training.epochs,
            },
            layers: model.layers.iter().map(LayerDoc::from_layer).collect(),
        }
    }
}

/// Builds one model per `(width, activation)` pair, width-major.
///
/// Every hidden layer (all but the last) gets `width` outputs and the given
/// activation; the input width of the first layer, the output width of the
/// last layer and the last layer's activation are kept from `base`.
pub fn model_family(
    base: &ModelSpec,
    widths: impl IntoIterator<Item = usize>,
    activations: &[Activation],
) -> Result<Vec<ModelSpec>> {
    let widths: Vec<usize> = widths.into_iter().collect();
    if widths.is_empty() {
        return Err(Error::Argument("width range is empty".into()));
    }
    if activations.is_empty() {
        return Err(Error::Argument("activation set is empty".into()));
    }
    if base.layers.len() < 2 {
        return Err(Error::Argument(
            "base model needs at least one hidden layer".into(),
        ));
    }
    if let Some(i) = base.layers.iter().position(|l| !l.is_fully_connected()) {
        return Err(Error::Argument(format!(
            "model families are built from fully-connected models; layer {} is convolutional",
            i + 1
        )));
    }

    let last = base.layers.len() - 1;
    let mut family = Vec::with_capacity(widths.len() * activations.len());
    for &width in &widths {
        for &activation in activations {
            let layers = base
                .layers
                .iter()
                .enumerate()
                .map(|(i, layer)| {
                    let LayerKind::FullyConnected { inputs, outputs } = layer.kind else {
                        unreachable!("checked above")
                    };
                    LayerSpec::fully_connected(
                        if i == 0 { inputs } else { width },
                        if i == last { outputs } else { width },
                        if i == last {
                            layer.activation
                        } else {
                            activation
                        },
                    )
                })
                .collect();
            family.push(ModelSpec::new(
                format!("{}-w{}-{}", base.name, width, activation),
                base.float_format,
                layers,
                base.loss,
                base.training,
            )?);
        }
    }
    Ok(family)
}

/// Feed-forward regression network: `inputs -> width x depth -> outputs`,
/// hidden layers use `hidden`, the output layer uses `output`.
#[allow(clippy::too_many_arguments)]
pub fn feed_forward(
    name: impl Into<String>,
    inputs: usize,
    width: usize,
    depth: usize,
    outputs: usize,
    hidden: Activation,
    output: Activation,
    training: TrainingConfig,
) -> Result<ModelSpec> {
    let mut layers = Vec::with_capacity(depth + 1);
    let mut fan_in = inputs;
    for _ in 0..depth {
        layers.push(LayerSpec::fully_connected(fan_in, width, hidden));
        fan_in = width;
    }
    layers.push(LayerSpec::fully_connected(fan_in, outputs, output));
    ModelSpec::new(name, FloatFormat::FP32, layers, LossKind::Mse, training)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BANKNOTE_TRAINING: TrainingConfig = TrainingConfig {
        dataset_len: 1372,
        batch_size: 64,
        epochs: 2000,
    };

    fn banknote_doc(width: usize) -> String {
        format!(
            r#"
name = "banknote-ffnn"
float_format = "fp32"
loss = "mse"

[training]
dataset_len = 1372
batch_size = 64
epochs = 2000

[[layers]]
kind = "fully_connected"
inputs = 4
outputs = {width}
activation = "sigmoid"

[[layers]]
kind = "fully_connected"
inputs = {width}
outputs = {width}
activation = "sigmoid"

[[layers]]
kind = "fully_connected"
inputs = {width}
outputs = {width}
activation = "sigmoid"

[[layers]]
kind = "fully_connected"
inputs = {width}
outputs = 1
activation = "sigmoid"
"#
        )
    }

    #[test]
    fn parses_banknote_network() {
        let model = ModelSpec::parse(&banknote_doc(13)).unwrap();
        let dims: Vec<_> = model
            .layers()
            .iter()
            .map(|l| match l.kind {
                LayerKind::FullyConnected { inputs, outputs } => (inputs, outputs),
                _ => panic!("expected fully connected"),
            })
            .collect();
        assert_eq!(dims, vec![(4, 13), (13, 13), (13, 13), (13, 1)]);
        assert_eq!(model.float_format(), FloatFormat::FP32);
        assert_eq!(model.training(), BANKNOTE_TRAINING);
        assert!(model
            .layers()
            .iter()
            .all(|l| l.activation == Activation::Sigmoid));
    }

    #[test]
    fn parses_minimal_model() {
        let doc = r#"
name = "tiny"
[training]
dataset_len = 1
batch_size = 1
epochs = 1
[[layers]]
kind = "fully_connected"
inputs = 1
outputs = 1
activation = "none"
"#;
        let model = ModelSpec::parse(doc).unwrap();
        assert_eq!(
            model.layers(),
            &[LayerSpec::fully_connected(1, 1, Activation::None)]
        );
        assert_eq!(model.loss(), LossKind::Mse);
    }

    #[test]
    fn dimension_mismatch_names_both_layers() {
        let doc = banknote_doc(13).replacen("inputs = 13", "inputs = 12", 1);
        let err = ModelSpec::parse(&doc).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                first: 1,
                second: 2,
                produced: 13,
                expected: 12
            }
        );
    }

    #[test]
    fn unknown_activation_is_an_enumeration_error() {
        let doc = banknote_doc(5).replacen("\"sigmoid\"", "\"relu\"", 1);
        match ModelSpec::parse(&doc).unwrap_err() {
            Error::UnknownVariant { field, value, .. } => {
                assert_eq!(field, "layers[0].activation");
                assert_eq!(value, "relu");
            }
            other => panic!("unexpected {other:?}"),
        }
        let doc = banknote_doc(5).replace("loss = \"mse\"", "loss = \"hinge\"");
        assert!(matches!(
            ModelSpec::parse(&doc),
            Err(Error::UnknownVariant { .. })
        ));
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let doc = banknote_doc(5).replace("epochs = 2000", "epochs = 2000\nepoch = 3");
        match ModelSpec::parse(&doc).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, Some(10));
                assert!(message.contains("epoch"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_document_reports_line() {
        let doc = "name = \"x\"\nfloat_format = fp32\n";
        match ModelSpec::parse(doc).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conv_fields_on_dense_layer_rejected() {
        let doc = banknote_doc(5).replacen("inputs = 4", "inputs = 4\nkernel = 3", 1);
        assert!(matches!(ModelSpec::parse(&doc), Err(Error::Parse { .. })));
    }

    #[test]
    fn batch_larger_than_dataset_rejected() {
        let doc = banknote_doc(5).replace("batch_size = 64", "batch_size = 2000");
        assert!(matches!(ModelSpec::parse(&doc), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_layer_list_rejected() {
        let doc =
            "name = \"x\"\nlayers = []\n[training]\ndataset_len = 1\nbatch_size = 1\nepochs = 1\n";
        assert!(matches!(ModelSpec::parse(doc), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_dimension_rejected() {
        let doc = banknote_doc(5).replacen("inputs = 4", "inputs = 0", 1);
        assert!(matches!(ModelSpec::parse(&doc), Err(Error::Validation(_))));
    }

    #[test]
    fn float_presets() {
        assert_eq!(
            (
                FloatFormat::FP16.sign_bits(),
                FloatFormat::FP16.exponent_bits(),
                FloatFormat::FP16.fraction_bits()
            ),
            (1, 5, 10)
        );
        assert_eq!(FloatFormat::FP32.total_bits(), 32);
        assert_eq!(FloatFormat::FP64.total_bits(), 64);
        assert!(FloatFormat::new(0, 3).is_err());
        assert_eq!("fp64".parse::<FloatFormat>().unwrap(), FloatFormat::FP64);
    }

    #[test]
    fn steps_round_up() {
        assert_eq!(BANKNOTE_TRAINING.steps_per_run(), 22 * 2000);
        assert_eq!(BANKNOTE_TRAINING.instances_per_run(), 1372 * 2000);
    }

    fn banknote_base() -> ModelSpec {
        feed_forward(
            "ffnn",
            4,
            4,
            3,
            1,
            Activation::Sigmoid,
            Activation::Sigmoid,
            BANKNOTE_TRAINING,
        )
        .unwrap()
    }

    #[test]
    fn family_sizes() {
        let base = banknote_base();
        let fit = model_family(&base, 4..=13, &[Activation::Sigmoid]).unwrap();
        assert_eq!(fit.len(), 10);
        let verify = model_family(
            &base,
            14..=18,
            &[Activation::Sigmoid, Activation::Tanh, Activation::Gelu],
        )
        .unwrap();
        assert_eq!(verify.len(), 15);
        // width-major, then activation order
        assert_eq!(verify[0].layers()[0].activation, Activation::Sigmoid);
        assert_eq!(verify[1].layers()[0].activation, Activation::Tanh);
        assert_eq!(
            verify[3].layers()[0].kind,
            LayerKind::FullyConnected {
                inputs: 4,
                outputs: 15
            }
        );
    }

    #[test]
    fn singleton_family_matches_manual_model() {
        let base = banknote_base();
        let family = model_family(&base, [5], &[Activation::Sigmoid]).unwrap();
        let manual = feed_forward(
            "x",
            4,
            5,
            3,
            1,
            Activation::Sigmoid,
            Activation::Sigmoid,
            BANKNOTE_TRAINING,
        )
        .unwrap();
        assert_eq!(family.len(), 1);
        assert_eq!(family[0].layers(), manual.layers());
    }

    #[test]
    fn family_keeps_output_activation() {
        let base = feed_forward(
            "b",
            4,
            4,
            2,
            1,
            Activation::Sigmoid,
            Activation::None,
            BANKNOTE_TRAINING,
        )
        .unwrap();
        let family = model_family(&base, [7], &[Activation::Gelu]).unwrap();
        let layers = family[0].layers();
        assert_eq!(layers[0].activation, Activation::Gelu);
        assert_eq!(layers[1].activation, Activation::Gelu);
        assert_eq!(layers[2].activation, Activation::None);
    }

    #[test]
    fn family_argument_errors() {
        let base = banknote_base();
        assert!(matches!(
            model_family(&base, Vec::<usize>::new(), &[Activation::Sigmoid]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            model_family(&base, [4], &[]),
            Err(Error::Argument(_))
        ));
        let single = ModelSpec::new(
            "s",
            FloatFormat::FP32,
            vec![LayerSpec::fully_connected(4, 1, Activation::Sigmoid)],
            LossKind::Mse,
            BANKNOTE_TRAINING,
        )
        .unwrap();
        assert!(matches!(
            model_family(&single, [4], &[Activation::Sigmoid]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn document_round_trip() {
        let model = ModelSpec::parse(&banknote_doc(9)).unwrap();
        let again = ModelSpec::parse(&model.to_document()).unwrap();
        assert_eq!(model, again);

        let conv = ModelSpec::new(
            "conv",
            FloatFormat::FP16,
            vec![
                LayerSpec::convolutional(6, 3, 1, 4, Activation::Gelu),
                LayerSpec::fully_connected(144, 10, Activation::None),
            ],
            LossKind::Mse,
            BANKNOTE_TRAINING,
        )
        .unwrap();
        assert_eq!(ModelSpec::parse(&conv.to_document()).unwrap(), conv);
    }
}
