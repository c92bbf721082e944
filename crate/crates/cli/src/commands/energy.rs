use std::collections::HashMap;
use std::path::{Path, PathBuf};

use tocount_core::energy::{
    self, error_metrics, integrate_power, read_candidates, read_keyed_values, read_pairs,
    tradeoff_select, trimmed_mean, EnergySample, KeyedValue, LinearModel, PowerTrace, TraceAdapter,
};
use tocount_core::ToCount;

use super::workload_for;
use crate::table::Table;
use crate::{context, open, read_text, CliError, CliResult, GlobalOpts, Metric};

/// `w4__07.csv` is run `07` of model `w4`; without the separator the whole
/// stem names the model.
fn split_stem(path: &Path) -> (String, Option<String>) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match stem.split_once("__") {
        Some((model, run)) => (model.to_string(), Some(run.to_string())),
        None => (stem, None),
    }
}

pub fn ingest(
    g: &GlobalOpts,
    traces: &[PathBuf],
    adapter: Option<&Path>,
    trim_k: usize,
    samples_out: Option<&Path>,
) -> CliResult<String> {
    let adapter = adapter
        .map(|p| TraceAdapter::parse(&read_text(p)?).map_err(CliError::core(context(p))))
        .transpose()?;

    let mut samples = Vec::with_capacity(traces.len());
    let mut order: Vec<String> = Vec::new();
    let mut runs: HashMap<String, Vec<f64>> = HashMap::new();
    for path in traces {
        let file = open(path)?;
        let trace = match &adapter {
            Some(a) => PowerTrace::read_with_adapter(file, a),
            None => PowerTrace::read_canonical(file),
        }
        .map_err(CliError::core(context(path)))?;
        let joules = integrate_power(&trace);

        let (model_id, run_id) = split_stem(path);
        let energies = runs.entry(model_id.clone()).or_insert_with(|| {
            order.push(model_id.clone());
            Vec::new()
        });
        let run_id = run_id.unwrap_or_else(|| energies.len().to_string());
        energies.push(joules);
        samples.push(EnergySample {
            model_id,
            run_id,
            joules,
        });
    }

    let style = g.style();
    let mut t = Table::new(&["model_id", "joules", "runs"]);
    for model_id in &order {
        let energies = &runs[model_id];
        let mean = trimmed_mean(energies, trim_k).map_err(CliError::core(model_id.clone()))?;
        t.row([
            model_id.clone(),
            style.real(mean),
            energies.len().to_string(),
        ]);
    }

    if let Some(path) = samples_out {
        let file = std::fs::File::create(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        energy::write_samples(file, &samples).map_err(CliError::core(context(path)))?;
    }
    Ok(t.finish())
}

pub fn fit(
    g: &GlobalOpts,
    pairs: Option<&Path>,
    energies: Option<&Path>,
    models: &[PathBuf],
    metric: Metric,
) -> CliResult<String> {
    let points = match (pairs, energies) {
        (Some(path), _) => read_pairs(open(path)?).map_err(CliError::core(context(path)))?,
        (None, Some(path)) => {
            let measured: HashMap<String, f64> = read_keyed_values(open(path)?)
                .map_err(CliError::core(context(path)))?
                .into_iter()
                .map(|kv| (kv.model_id, kv.value))
                .collect();
            let table = g.load_cost_table()?;
            let mut points = Vec::with_capacity(models.len());
            for model_path in models {
                let model = g.load_model(model_path)?;
                let joules = measured.get(model.name()).ok_or_else(|| {
                    CliError::Usage(format!(
                        "{}: no measured energy for model `{}`",
                        path.display(),
                        model.name()
                    ))
                })?;
                points.push((ToCount(workload_for(g, &model, &table, metric)?), *joules));
            }
            points
        }
        (None, None) => {
            return Err(CliError::Usage(
                "fit needs a pairs file or --energies with --models".into(),
            ))
        }
    };
    let model = energy::fit(&points).map_err(CliError::core("fit"))?;
    Ok(model.to_document())
}

pub fn estimate(
    g: &GlobalOpts,
    models: &[PathBuf],
    fit: &Path,
    metric: Metric,
) -> CliResult<String> {
    let lm = LinearModel::parse(&read_text(fit)?).map_err(CliError::core(context(fit)))?;
    let table = g.load_cost_table()?;
    let style = g.style();
    let metric_column = match metric {
        Metric::Tos => "tos",
        Metric::Flops => "flops",
    };
    let mut t = Table::new(&["model_id", "predicted_j", "activation", metric_column]);
    for path in models {
        let model = g.load_model(path)?;
        let w = workload_for(g, &model, &table, metric)?;
        t.row([
            model.name().to_string(),
            style.real(lm.predict(ToCount(w))),
            model.layers()[0].activation.name().to_string(),
            style.real(w),
        ]);
    }
    Ok(t.finish())
}

fn keyed(path: &Path) -> CliResult<Vec<KeyedValue>> {
    read_keyed_values(open(path)?).map_err(CliError::core(context(path)))
}

pub fn compare(g: &GlobalOpts, tos: &Path, flops: &Path, actual_path: &Path) -> CliResult<String> {
    let (tos_rows, flops_rows, actual_rows) = (keyed(tos)?, keyed(flops)?, keyed(actual_path)?);
    for (path, rows) in [(tos, &tos_rows), (flops, &flops_rows)] {
        if rows.len() != actual_rows.len() {
            return Err(CliError::Usage(format!(
                "{} has {} predictions for {} measurements",
                path.display(),
                rows.len(),
                actual_rows.len()
            )));
        }
    }
    let lookup = |rows: &[KeyedValue], path: &Path, id: &str| -> CliResult<(f64, Option<String>)> {
        rows.iter()
            .find(|kv| kv.model_id == id)
            .map(|kv| (kv.value, kv.group.clone()))
            .ok_or_else(|| CliError::Usage(format!("{}: no prediction for `{id}`", path.display())))
    };

    // (group, tos prediction, flops prediction, actual), in measurement order.
    let mut joined = Vec::with_capacity(actual_rows.len());
    for a in &actual_rows {
        let (t, tg) = lookup(&tos_rows, tos, &a.model_id)?;
        let (f, fg) = lookup(&flops_rows, flops, &a.model_id)?;
        let group = a
            .group
            .clone()
            .or(tg)
            .or(fg)
            .unwrap_or_else(|| "all".into());
        joined.push((group, t, f, a.value));
    }
    let mut groups: Vec<String> = Vec::new();
    for (group, ..) in &joined {
        if !groups.contains(group) {
            groups.push(group.clone());
        }
    }
    if groups.len() > 1 {
        groups.push("all".into());
    }

    let style = g.style();
    let mut t = Table::new(&[
        "group",
        "models",
        "tos_precision_min",
        "tos_precision_max",
        "tos_precision_mean",
        "tos_avg_error_j",
        "tos_max_error_j",
        "flops_precision_min",
        "flops_precision_max",
        "flops_precision_mean",
        "flops_avg_error_j",
        "flops_max_error_j",
    ]);
    let multi = groups.len() > 1;
    for group in &groups {
        let members: Vec<_> = joined
            .iter()
            .filter(|(g, ..)| (multi && group == "all") || g == group)
            .collect();
        let actual: Vec<f64> = members.iter().map(|m| m.3).collect();
        let tos_pred: Vec<f64> = members.iter().map(|m| m.1).collect();
        let flops_pred: Vec<f64> = members.iter().map(|m| m.2).collect();
        let tr = error_metrics(&tos_pred, &actual).map_err(CliError::core(context(actual_path)))?;
        let fr =
            error_metrics(&flops_pred, &actual).map_err(CliError::core(context(actual_path)))?;
        let mut row = vec![group.clone(), members.len().to_string()];
        for r in [&tr, &fr] {
            row.extend([
                style.real(r.min_precision()),
                style.real(r.max_precision()),
                style.real(r.mean_precision()),
                style.real(r.avg_error),
                style.real(r.max_error),
            ]);
        }
        t.row(row);
    }
    Ok(t.finish())
}

pub fn tradeoff(candidates: &Path, alpha: f64) -> CliResult<String> {
    let all = read_candidates(open(candidates)?).map_err(CliError::core(context(candidates)))?;
    let best = tradeoff_select(&all, alpha).map_err(CliError::core(context(candidates)))?;
    let mut t = Table::new(&["model_id"]);
    t.row([best.model_id.as_str()]);
    Ok(t.finish())
}
