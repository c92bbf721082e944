//! Lowering of basic operations to theoretical transistor operations (TOs).
//!
//! Each floating-point operation is priced by the circuits it exercises:
//!
//! * add / sub: one significand-wide ripple adder, `(F - 1)` full adders plus
//!   one half adder. Subtraction reuses the adder through two's complement.
//!   Exponent alignment is not priced.
//! * mul / div: an XOR for the sign, an `F`-bit multiplier (divider) for the
//!   significand and an `E`-bit adder for the exponent.
//! * root: Newton-Raphson, `x <- (x + a / x) / 2`, one div, one add and one
//!   mul per iteration.
//!
//! `F` is the significand width including the hidden bit, `E` the exponent
//! width. Multiplier and divider costs are scaled from 64-bit reference
//! designs by `(bits / ref_bits)^gamma`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};

use crate::bo::{count_model, BasicOpCounts};
use crate::error::{Error, Result};
use crate::model::{AnalysisLevel, FloatFormat, ModelSpec};

/// Transistor-operation workload. Real valued: scaled circuit costs are
/// fractional.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ToCount(pub f64);

impl ToCount {
    pub const ZERO: ToCount = ToCount(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Add for ToCount {
    type Output = ToCount;
    fn add(self, rhs: Self) -> Self {
        ToCount(self.0 + rhs.0)
    }
}

impl AddAssign for ToCount {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Mul<f64> for ToCount {
    type Output = ToCount;
    fn mul(self, k: f64) -> Self {
        ToCount(self.0 * k)
    }
}

impl Sum for ToCount {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ToCount::ZERO, Add::add)
    }
}

impl fmt::Display for ToCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Root,
}

impl OpKind {
    pub const ALL: [OpKind; 5] = [
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::Div,
        OpKind::Root,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Div => "div",
            OpKind::Root => "root",
        }
    }
}

/// A reference circuit: its width and transistor count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceUnit {
    pub ref_bits: u32,
    pub transistors: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTable {
    /// Transistors in a 1-bit full adder (NOR-XNOR design).
    pub fa_transistors: f64,
    pub ha_transistors: f64,
    pub xor_transistors: f64,
    /// 64-bit Booth-Wallace multiplier.
    pub mult_ref: ReferenceUnit,
    /// 64-bit SRT divider.
    pub div_ref: ReferenceUnit,
    pub scaling_exponent: f64,
    pub newton_iterations: u32,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            fa_transistors: 10.0,
            ha_transistors: 5.0,
            xor_transistors: 6.0,
            mult_ref: ReferenceUnit {
                ref_bits: 64,
                transistors: 90_000.0,
            },
            div_ref: ReferenceUnit {
                ref_bits: 64,
                transistors: 110_000.0,
            },
            scaling_exponent: 2.0,
            newton_iterations: 3,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostTableDoc {
    fa: Option<f64>,
    ha: Option<f64>,
    xor: Option<f64>,
    mult_ref_bits: Option<u32>,
    mult_ref_transistors: Option<f64>,
    div_ref_bits: Option<u32>,
    div_ref_transistors: Option<f64>,
    scaling_exponent: Option<f64>,
    newton_iterations: Option<u32>,
}

impl CostTable {
    pub fn validate(&self) -> Result<()> {
        let costs = [
            ("fa", self.fa_transistors),
            ("ha", self.ha_transistors),
            ("xor", self.xor_transistors),
            ("mult_ref_transistors", self.mult_ref.transistors),
            ("div_ref_transistors", self.div_ref.transistors),
            ("scaling_exponent", self.scaling_exponent),
        ];
        if let Some((name, v)) = costs.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Validation(format!(
                "cost table `{name}` must be > 0, got {v}"
            )));
        }
        if self.mult_ref.ref_bits == 0 || self.div_ref.ref_bits == 0 {
            return Err(Error::Validation("reference widths must be > 0".into()));
        }
        if self.newton_iterations == 0 {
            return Err(Error::Validation("newton_iterations must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses a cost-table document. Every key is optional and falls back to
    /// the default table.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: CostTableDoc = toml::from_str(text).map_err(|e| Error::from_toml(&e, text))?;
        let d = CostTable::default();
        let table = CostTable {
            fa_transistors: doc.fa.unwrap_or(d.fa_transistors),
            ha_transistors: doc.ha.unwrap_or(d.ha_transistors),
            xor_transistors: doc.xor.unwrap_or(d.xor_transistors),
            mult_ref: ReferenceUnit {
                ref_bits: doc.mult_ref_bits.unwrap_or(d.mult_ref.ref_bits),
                transistors: doc.mult_ref_transistors.unwrap_or(d.mult_ref.transistors),
            },
            div_ref: ReferenceUnit {
                ref_bits: doc.div_ref_bits.unwrap_or(d.div_ref.ref_bits),
                transistors: doc.div_ref_transistors.unwrap_or(d.div_ref.transistors),
            },
            scaling_exponent: doc.scaling_exponent.unwrap_or(d.scaling_exponent),
            newton_iterations: doc.newton_iterations.unwrap_or(d.newton_iterations),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn to_document(&self) -> String {
        let doc = CostTableDoc {
            fa: Some(self.fa_transistors),
            ha: Some(self.ha_transistors),
            xor: Some(self.xor_transistors),
            mult_ref_bits: Some(self.mult_ref.ref_bits),
            mult_ref_transistors: Some(self.mult_ref.transistors),
            div_ref_bits: Some(self.div_ref.ref_bits),
            div_ref_transistors: Some(self.div_ref.transistors),
            scaling_exponent: Some(self.scaling_exponent),
            newton_iterations: Some(self.newton_iterations),
        };
        toml::to_string(&doc).expect("cost table serializes")
    }
}

/// Ripple adder of `bits` width: `bits - 1` full adders and one half adder.
pub fn adder_tos(bits: u32, table: &CostTable) -> Result<ToCount> {
    if bits == 0 {
        return Err(Error::Argument("adder width must be >= 1".into()));
    }
    Ok(ToCount(
        f64::from(bits - 1) * table.fa_transistors + table.ha_transistors,
    ))
}

/// Reference circuit scaled to `bits` by a power law with exponent `gamma`.
pub fn scaled_unit_tos(bits: u32, reference: ReferenceUnit, gamma: f64) -> Result<ToCount> {
    if bits == 0 {
        return Err(Error::Argument("unit width must be >= 1".into()));
    }
    if bits == reference.ref_bits {
        return Ok(ToCount(reference.transistors));
    }
    let ratio = f64::from(bits) / f64::from(reference.ref_bits);
    Ok(ToCount(reference.transistors * ratio.powf(gamma)))
}

pub fn fp_op_tos(op: OpKind, fmt: FloatFormat, table: &CostTable) -> ToCount {
    let significand = fmt.significand_bits();
    // Both widths are >= 1 by FloatFormat's invariants.
    let add = adder_tos(significand, table).expect("significand width >= 1");
    let exponent_add = adder_tos(fmt.exponent_bits(), table).expect("exponent width >= 1");
    let xor = ToCount(table.xor_transistors);
    let gamma = table.scaling_exponent;
    let mul = xor
        + scaled_unit_tos(significand, table.mult_ref, gamma).expect("width >= 1")
        + exponent_add;
    let div = xor
        + scaled_unit_tos(significand, table.div_ref, gamma).expect("width >= 1")
        + exponent_add;
    match op {
        OpKind::Add | OpKind::Sub => add,
        OpKind::Mul => mul,
        OpKind::Div => div,
        OpKind::Root => (div + mul + add) * f64::from(table.newton_iterations),
    }
}

/// Per-operation prices for one format, in `[add, sub, mul, div, root]` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpPrices([f64; 5]);

impl OpPrices {
    pub fn new(fmt: FloatFormat, table: &CostTable) -> Self {
        OpPrices(OpKind::ALL.map(|op| fp_op_tos(op, fmt, table).value()))
    }

    pub fn get(&self, op: OpKind) -> ToCount {
        ToCount(self.0[op as usize])
    }

    pub fn lower(&self, bos: BasicOpCounts) -> ToCount {
        ToCount(
            bos.to_array()
                .iter()
                .zip(self.0.iter())
                .map(|(&n, &price)| n as f64 * price)
                .sum(),
        )
    }
}

pub fn tos_from_bos(bos: BasicOpCounts, fmt: FloatFormat, table: &CostTable) -> ToCount {
    OpPrices::new(fmt, table).lower(bos)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerTos {
    pub forward: ToCount,
    pub backprop: ToCount,
    pub update_per_batch: ToCount,
}

/// Phase totals; `total()` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ToTotals {
    pub forward: ToCount,
    pub backprop: ToCount,
    pub loss: ToCount,
    pub update: ToCount,
}

impl ToTotals {
    pub fn total(&self) -> ToCount {
        self.forward + self.backprop + self.loss + self.update
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToProfile {
    pub level: AnalysisLevel,
    pub float_format: FloatFormat,
    pub layers: Vec<LayerTos>,
    /// One data instance; `update` is zero because updates happen per batch.
    pub per_instance: ToTotals,
    /// Cost of a single optimizer step over all layers.
    pub update_per_batch: ToCount,
    pub per_run: ToTotals,
    /// Share of the per-run total not explained by the linear-layer
    /// multiply-accumulates a FLOPs count sees (one mul and one add per MAC).
    pub nonlinear_share: f64,
}

/// Lowers a full model at `level` with the model's own float format.
pub fn analyze(model: &ModelSpec, level: AnalysisLevel, table: &CostTable) -> Result<ToProfile> {
    let counts = count_model(model, level)?;
    let fmt = model.float_format();
    let prices = OpPrices::new(fmt, table);

    let layers = counts
        .layers
        .iter()
        .map(|l| LayerTos {
            forward: prices.lower(l.forward),
            backprop: prices.lower(l.backprop),
            update_per_batch: prices.lower(l.update_per_batch),
        })
        .collect::<Vec<_>>();

    let per_instance = ToTotals {
        forward: layers.iter().map(|l| l.forward).sum(),
        backprop: layers.iter().map(|l| l.backprop).sum(),
        loss: prices.lower(counts.loss),
        update: ToCount::ZERO,
    };
    let update_per_batch: ToCount = layers.iter().map(|l| l.update_per_batch).sum();
    let instances = counts.instances_per_run as f64;
    let per_run = ToTotals {
        forward: per_instance.forward * instances,
        backprop: per_instance.backprop * instances,
        loss: per_instance.loss * instances,
        update: update_per_batch * counts.steps_per_run as f64,
    };

    let linear = crate::flops::flops_model(model, level)?;
    let linear_tos = prices.lower(BasicOpCounts::new(
        linear.per_run.macs,
        0,
        linear.per_run.macs,
        0,
        0,
    ));
    let total = per_run.total().value();
    let nonlinear_share = if total > 0.0 {
        (total - linear_tos.value()) / total
    } else {
        0.0
    };

    Ok(ToProfile {
        level,
        float_format: fmt,
        layers,
        per_instance,
        update_per_batch,
        per_run,
        nonlinear_share,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{feed_forward, Activation, TrainingConfig};
    use proptest::prelude::*;

    const TRAINING: TrainingConfig = TrainingConfig {
        dataset_len: 1372,
        batch_size: 64,
        epochs: 2000,
    };

    #[test]
    fn adder_costs() {
        let t = CostTable::default();
        assert_eq!(adder_tos(24, &t).unwrap(), ToCount(235.0));
        assert_eq!(adder_tos(8, &t).unwrap(), ToCount(75.0));
        assert_eq!(adder_tos(1, &t).unwrap(), ToCount(5.0));
        assert!(matches!(adder_tos(0, &t), Err(Error::Argument(_))));
    }

    #[test]
    fn scaled_unit_costs() {
        let t = CostTable::default();
        assert_eq!(
            scaled_unit_tos(64, t.mult_ref, 2.0).unwrap(),
            ToCount(90_000.0)
        );
        assert_eq!(
            scaled_unit_tos(24, t.mult_ref, 2.0).unwrap(),
            ToCount(12_656.25)
        );
        assert_eq!(
            scaled_unit_tos(24, t.div_ref, 2.0).unwrap(),
            ToCount(15_468.75)
        );
    }

    #[test]
    fn fp_costs() {
        let t = CostTable::default();
        assert_eq!(
            fp_op_tos(OpKind::Add, FloatFormat::FP32, &t),
            ToCount(235.0)
        );
        assert_eq!(
            fp_op_tos(OpKind::Mul, FloatFormat::FP32, &t),
            ToCount(12_737.25)
        );
        assert_eq!(
            fp_op_tos(OpKind::Div, FloatFormat::FP32, &t),
            ToCount(15_549.75)
        );
        assert_eq!(
            fp_op_tos(OpKind::Sub, FloatFormat::FP64, &t),
            ToCount(525.0)
        );
        assert_eq!(
            fp_op_tos(OpKind::Root, FloatFormat::FP32, &t),
            ToCount(3.0 * (15_549.75 + 12_737.25 + 235.0))
        );
    }

    #[test]
    fn lowering_examples() {
        let t = CostTable::default();
        let lower = |a: [u64; 5]| tos_from_bos(a.into(), FloatFormat::FP32, &t);
        assert_eq!(lower([1, 0, 1, 0, 0]), ToCount(12_972.25));
        assert_eq!(lower([0, 0, 0, 0, 0]), ToCount::ZERO);
        assert_eq!(lower([0, 0, 0, 1, 0]), ToCount(15_549.75));
    }

    #[test]
    fn format_monotone_per_op() {
        let t = CostTable::default();
        for op in OpKind::ALL {
            let h = fp_op_tos(op, FloatFormat::FP16, &t);
            let s = fp_op_tos(op, FloatFormat::FP32, &t);
            let d = fp_op_tos(op, FloatFormat::FP64, &t);
            assert!(h < s && s < d, "{op:?}: {h} {s} {d}");
        }
    }

    #[test]
    fn cost_table_document() {
        let t = CostTable::parse("fa = 12\nnewton_iterations = 4\n").unwrap();
        assert_eq!(t.fa_transistors, 12.0);
        assert_eq!(t.newton_iterations, 4);
        assert_eq!(t.ha_transistors, 5.0);
        assert_eq!(CostTable::parse("").unwrap(), CostTable::default());
        assert!(matches!(
            CostTable::parse("fulladder = 3"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            CostTable::parse("fa = -1"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            CostTable::parse("newton_iterations = 0"),
            Err(Error::Validation(_))
        ));
        let t = CostTable {
            scaling_exponent: 1.5,
            ..CostTable::default()
        };
        assert_eq!(CostTable::parse(&t.to_document()).unwrap(), t);
    }

    fn ffnn(width: usize, act: Activation) -> ModelSpec {
        feed_forward("m", 4, width, 3, 1, act, Activation::Sigmoid, TRAINING).unwrap()
    }

    #[test]
    fn analyze_inference_matches_summed_layer_lowering() {
        let t = CostTable::default();
        let model = ffnn(4, Activation::Sigmoid);
        let p = analyze(&model, AnalysisLevel::Inference, &t).unwrap();
        let direct = tos_from_bos([65, 13, 52, 13, 13].into(), FloatFormat::FP32, &t);
        assert!((p.per_instance.total().value() - direct.value()).abs() <= 1e-9 * direct.value());
        // brute force: lower every layer separately, every op separately
        let mut brute = 0.0;
        for layer in model.layers() {
            let c = crate::bo::count_forward(layer).to_array();
            for (n, op) in c.iter().zip(OpKind::ALL) {
                for _ in 0..*n {
                    brute += fp_op_tos(op, FloatFormat::FP32, &t).value();
                }
            }
        }
        assert!((p.per_instance.total().value() - brute).abs() <= 1e-9 * brute);
    }

    #[test]
    fn totals_are_sums_of_parts() {
        let t = CostTable::default();
        let p = analyze(&ffnn(6, Activation::Tanh), AnalysisLevel::Training, &t).unwrap();
        let r = p.per_run;
        assert_eq!(r.total(), r.forward + r.backprop + r.loss + r.update);
        let fwd: ToCount = p.layers.iter().map(|l| l.forward).sum();
        assert_eq!(fwd, p.per_instance.forward);
        assert!(p.per_run.update.value() > 0.0);
        assert!(p.nonlinear_share > 0.0 && p.nonlinear_share < 1.0);
    }

    #[test]
    fn gelu_costs_more_than_sigmoid() {
        let t = CostTable::default();
        for level in [AnalysisLevel::Inference, AnalysisLevel::Training] {
            let s = analyze(&ffnn(10, Activation::Sigmoid), level, &t).unwrap();
            let g = analyze(&ffnn(10, Activation::Gelu), level, &t).unwrap();
            assert!(g.per_run.total() > s.per_run.total());
        }
    }

    #[test]
    fn wider_format_costs_more() {
        let t = CostTable::default();
        let m = ffnn(4, Activation::Sigmoid);
        let s = analyze(&m, AnalysisLevel::Inference, &t).unwrap();
        let d = analyze(
            &m.clone().with_float_format(FloatFormat::FP64),
            AnalysisLevel::Inference,
            &t,
        )
        .unwrap();
        assert!(d.per_instance.total() > s.per_instance.total());
    }

    proptest! {
        #[test]
        fn lowering_is_linear(a in prop::array::uniform5(0u64..10_000), b in prop::array::uniform5(0u64..10_000)) {
            let t = CostTable::default();
            for fmt in [FloatFormat::FP16, FloatFormat::FP32, FloatFormat::FP64] {
                let lhs = tos_from_bos(BasicOpCounts::from(a) + BasicOpCounts::from(b), fmt, &t).value();
                let rhs = tos_from_bos(a.into(), fmt, &t).value() + tos_from_bos(b.into(), fmt, &t).value();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
            }
        }

        #[test]
        fn reference_width_is_exact(gamma in 0.1f64..5.0, transistors in 1.0f64..1e6, bits in 1u32..128) {
            let r = ReferenceUnit { ref_bits: bits, transistors };
            prop_assert_eq!(scaled_unit_tos(bits, r, gamma).unwrap(), ToCount(transistors));
        }

        #[test]
        fn sub_priced_as_add(e in 1u32..16, f in 1u32..64, fa in 1.0f64..50.0, ha in 1.0f64..50.0) {
            let fmt = FloatFormat::new(e, f).unwrap();
            let t = CostTable { fa_transistors: fa, ha_transistors: ha, ..CostTable::default() };
            prop_assert_eq!(fp_op_tos(OpKind::Sub, fmt, &t), fp_op_tos(OpKind::Add, fmt, &t));
        }
    }
}
