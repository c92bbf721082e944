use std::path::Path;

use tocount_core::energy::LinearModel;
use tocount_core::{analyze, flops_model, model_family, Activation, ToCount};

use crate::svg::{LinePlot, Series};
use crate::table::Table;
use crate::{context, read_text, CliError, CliResult, GlobalOpts, WidthRange};

/// One point of a width x activation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub width: usize,
    pub activation: Activation,
    pub tos: ToCount,
    pub macs: u64,
    pub flops: u64,
    pub predicted_j: Option<f64>,
}

pub fn sweep(
    g: &GlobalOpts,
    base: &Path,
    widths: WidthRange,
    activations: &[Activation],
    fit: Option<&Path>,
    plot: Option<&Path>,
) -> CliResult<String> {
    let base_model = g.load_model(base)?;
    let activations = if activations.is_empty() {
        &[Activation::Sigmoid, Activation::Tanh, Activation::Gelu][..]
    } else {
        activations
    };
    let lm = fit
        .map(|p| LinearModel::parse(&read_text(p)?).map_err(CliError::core(context(p))))
        .transpose()?;
    let table = g.load_cost_table()?;
    let family = model_family(&base_model, widths.iter(), activations)
        .map_err(CliError::core(context(base)))?;

    // model_family is width-major over the given activations.
    let pairs = widths
        .iter()
        .flat_map(|w| activations.iter().map(move |&a| (w, a)));
    let mut rows = Vec::with_capacity(family.len());
    for (model, (width, activation)) in family.iter().zip(pairs) {
        let err = CliError::core(model.name().to_string());
        let tos = analyze(model, g.level, &table)
            .map(|p| p.per_run.total())
            .map_err(err)?;
        let flops = flops_model(model, g.level)
            .map_err(CliError::core(model.name().to_string()))?
            .per_run;
        rows.push(SweepRow {
            width,
            activation,
            tos,
            macs: flops.macs,
            flops: flops.flops,
            predicted_j: lm.as_ref().map(|lm| lm.predict(tos)),
        });
    }

    if let Some(path) = plot {
        let series = activations
            .iter()
            .map(|&a| Series {
                label: a.name().to_string(),
                points: rows
                    .iter()
                    .filter(|r| r.activation == a)
                    .map(|r| (r.width as f64, r.tos.value()))
                    .collect(),
            })
            .collect();
        let svg = LinePlot {
            title: format!("{} TOs per run, {}", base_model.name(), g.level),
            x_label: "width".into(),
            y_label: "TOs".into(),
            series,
        }
        .render();
        std::fs::write(path, svg).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
    }

    let style = g.style();
    let mut t = Table::new(&["width", "activation", "tos", "macs", "flops", "predicted_j"]);
    for r in &rows {
        t.row([
            r.width.to_string(),
            r.activation.name().to_string(),
            style.real(r.tos.value()),
            style.count(r.macs),
            style.count(r.flops),
            r.predicted_j.map(|e| style.real(e)).unwrap_or_default(),
        ]);
    }
    Ok(t.finish())
}
