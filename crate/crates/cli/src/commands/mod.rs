mod count;
mod energy;
pub(crate) mod sweep;

use tocount_core::{analyze, flops_model, AnalysisLevel, CostTable, ModelSpec};

use crate::{Cli, CliError, CliResult, Command, Metric};

pub(crate) fn dispatch(cli: &Cli) -> CliResult<String> {
    let g = &cli.global;
    match &cli.command {
        Command::Count { model } => count::count(g, model),
        Command::Tos { model } => count::tos(g, model),
        Command::Oracle { model } => count::oracle(g, model),
        Command::Ingest {
            traces,
            adapter,
            trim_k,
            samples,
        } => energy::ingest(g, traces, adapter.as_deref(), *trim_k, samples.as_deref()),
        Command::Fit {
            pairs,
            energies,
            models,
            metric,
        } => energy::fit(g, pairs.as_deref(), energies.as_deref(), models, *metric),
        Command::Estimate {
            models,
            fit,
            metric,
        } => energy::estimate(g, models, fit, *metric),
        Command::Sweep {
            base,
            widths,
            activations,
            fit,
            plot,
        } => sweep::sweep(
            g,
            base,
            *widths,
            activations,
            fit.as_deref(),
            plot.as_deref(),
        ),
        Command::Compare { tos, flops, actual } => energy::compare(g, tos, flops, actual),
        Command::Tradeoff { candidates, alpha } => energy::tradeoff(candidates, *alpha),
    }
}

/// The per-run workload figure a fitted model maps to energy.
pub fn workload(
    model: &ModelSpec,
    level: AnalysisLevel,
    table: &CostTable,
    metric: Metric,
) -> tocount_core::Result<f64> {
    Ok(match metric {
        Metric::Tos => analyze(model, level, table)?.per_run.total().value(),
        Metric::Flops => flops_model(model, level)?.per_run.flops as f64,
    })
}

pub(crate) fn workload_for(
    g: &crate::GlobalOpts,
    model: &ModelSpec,
    table: &CostTable,
    metric: Metric,
) -> CliResult<f64> {
    workload(model, g.level, table, metric).map_err(|source| CliError::Core {
        context: model.name().to_string(),
        source,
    })
}
