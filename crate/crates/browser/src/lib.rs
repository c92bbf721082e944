//! Browser bindings for the cost model. Each export is a thin wrapper over a
//! plain function so the logic is testable off the web.

use tocount_core::model::feed_forward;
use tocount_core::{
    analyze, count_model, fp_op_tos, Activation, AnalysisLevel, CostTable, FloatFormat, ModelSpec,
    OpKind, TrainingConfig,
};
use wasm_bindgen::prelude::*;

const BANKNOTE: TrainingConfig = TrainingConfig {
    dataset_len: 1372,
    batch_size: 64,
    epochs: 2000,
};

/// Per-run TOs of the 4-input, 3-hidden-layer network for each width in
/// `from..=to`, for one hidden activation.
pub fn tos_by_width(
    from: usize,
    to: usize,
    activation: Activation,
    level: AnalysisLevel,
    format: FloatFormat,
) -> tocount_core::Result<Vec<f64>> {
    if from == 0 || to < from || to > 512 {
        return Err(tocount_core::Error::Argument(format!(
            "width range {from}..{to} must lie within 1..512"
        )));
    }
    let table = CostTable::default();
    (from..=to)
        .map(|w| {
            let model = feed_forward(
                "sweep",
                4,
                w,
                3,
                1,
                activation,
                Activation::Sigmoid,
                BANKNOTE,
            )?
            .with_float_format(format);
            Ok(analyze(&model, level, &table)?.per_run.total().value())
        })
        .collect()
}

/// Per-layer forward/backprop counts and TOs of a model document as CSV.
pub fn layer_table(document: &str, level: AnalysisLevel) -> tocount_core::Result<String> {
    let model = ModelSpec::parse(document)?;
    let counts = count_model(&model, level)?;
    let profile = analyze(&model, level, &CostTable::default())?;
    let mut out = String::from("layer,segment,add,sub,mul,div,root,tos\n");
    for (i, (c, t)) in counts.layers.iter().zip(&profile.layers).enumerate() {
        let mut segments = vec![("forward", c.forward, t.forward)];
        if level.includes_backprop() {
            segments.push(("backprop", c.backprop, t.backprop));
            segments.push(("update", c.update_per_batch, t.update_per_batch));
        }
        for (name, bo, tos) in segments {
            let [a, s, m, d, r] = bo.to_array();
            out += &format!("{},{name},{a},{s},{m},{d},{r},{}\n", i + 1, tos.value());
        }
    }
    if level.includes_loss() {
        let [a, s, m, d, r] = counts.loss.to_array();
        out += &format!(
            ",loss,{a},{s},{m},{d},{r},{}\n",
            profile.per_instance.loss.value()
        );
    }
    let [a, s, m, d, r] = counts.per_instance.to_array();
    out += &format!(
        ",per instance,{a},{s},{m},{d},{r},{}\n",
        profile.per_instance.total().value()
    );
    Ok(out)
}

/// TOs of add, sub, mul, div and root for a 1-sign-bit float format.
pub fn prices(exponent_bits: u32, fraction_bits: u32) -> tocount_core::Result<[f64; 5]> {
    let fmt = FloatFormat::new(exponent_bits, fraction_bits)?;
    let table = CostTable::default();
    Ok(OpKind::ALL.map(|op| fp_op_tos(op, fmt, &table).value()))
}

fn js_err(e: tocount_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn parse<T: std::str::FromStr<Err = tocount_core::Error>>(s: &str) -> Result<T, JsError> {
    s.parse().map_err(js_err)
}

#[wasm_bindgen(js_name = tosByWidth)]
pub fn tos_by_width_js(
    from: usize,
    to: usize,
    activation: &str,
    level: &str,
    format: &str,
) -> Result<Vec<f64>, JsError> {
    tos_by_width(from, to, parse(activation)?, parse(level)?, parse(format)?).map_err(js_err)
}

#[wasm_bindgen(js_name = layerTable)]
pub fn layer_table_js(document: &str, level: &str) -> Result<String, JsError> {
    layer_table(document, parse(level)?).map_err(js_err)
}

#[wasm_bindgen(js_name = opPrices)]
pub fn op_prices_js(exponent_bits: u32, fraction_bits: u32) -> Result<Vec<f64>, JsError> {
    prices(exponent_bits, fraction_bits)
        .map(Vec::from)
        .map_err(js_err)
}
