use std::path::Path;

use tocount_core::oracle::OracleNetwork;
use tocount_core::{analyze, count_model, BasicOpCounts, LayerKind, ToCount};

use crate::table::Table;
use crate::{context, CliError, CliResult, GlobalOpts, NumberStyle};

fn bo_fields(
    style: NumberStyle,
    section: &str,
    layer: Option<usize>,
    c: BasicOpCounts,
) -> Vec<String> {
    let mut row = vec![
        section.to_string(),
        layer.map(|l| l.to_string()).unwrap_or_default(),
    ];
    row.extend(c.to_array().into_iter().map(|n| style.count(n)));
    row
}

pub fn count(g: &GlobalOpts, path: &Path) -> CliResult<String> {
    let model = g.load_model(path)?;
    let counts = count_model(&model, g.level).map_err(CliError::core(context(path)))?;
    let style = g.style();
    let mut t = Table::new(&["section", "layer", "add", "sub", "mul", "div", "root"]);
    for (i, layer) in counts.layers.iter().enumerate() {
        t.row(bo_fields(style, "forward", Some(i + 1), layer.forward));
        if g.level.includes_backprop() {
            t.row(bo_fields(style, "backprop", Some(i + 1), layer.backprop));
            t.row(bo_fields(
                style,
                "update_per_batch",
                Some(i + 1),
                layer.update_per_batch,
            ));
        }
    }
    if g.level.includes_loss() {
        t.row(bo_fields(style, "loss", None, counts.loss));
    }
    t.row(bo_fields(style, "per_instance", None, counts.per_instance));
    t.row(bo_fields(style, "per_run", None, counts.per_run));
    Ok(t.finish())
}

pub fn tos(g: &GlobalOpts, path: &Path) -> CliResult<String> {
    let model = g.load_model(path)?;
    let table = g.load_cost_table()?;
    let profile = analyze(&model, g.level, &table).map_err(CliError::core(context(path)))?;
    let training = model.training();
    let instances = training.instances_per_run() as f64;
    let steps = training.steps_per_run() as f64;
    let style = g.style();

    let mut t = Table::new(&["quantity", "layer", "per_instance", "per_run"]);
    let mut row =
        |name: &str, layer: Option<usize>, per_instance: Option<ToCount>, per_run: f64| {
            t.row([
                name.to_string(),
                layer.map(|l| l.to_string()).unwrap_or_default(),
                per_instance
                    .map(|v| style.real(v.value()))
                    .unwrap_or_default(),
                style.real(per_run),
            ]);
        };
    for (i, layer) in profile.layers.iter().enumerate() {
        row(
            "d_f",
            Some(i + 1),
            Some(layer.forward),
            layer.forward.value() * instances,
        );
        if g.level.includes_backprop() {
            row(
                "d_bp",
                Some(i + 1),
                Some(layer.backprop),
                layer.backprop.value() * instances,
            );
            // Updates happen once per batch, never per instance.
            row(
                "d_update",
                Some(i + 1),
                Some(ToCount(0.0)),
                layer.update_per_batch.value() * steps,
            );
        }
    }
    let (pi, pr) = (&profile.per_instance, &profile.per_run);
    row("d_f_total", None, Some(pi.forward), pr.forward.value());
    row("d_bp_total", None, Some(pi.backprop), pr.backprop.value());
    row("d_loss", None, Some(pi.loss), pr.loss.value());
    row("d_update", None, Some(pi.update), pr.update.value());
    row("d_total", None, Some(pi.total()), pr.total().value());
    row("nonlinear_share", None, None, profile.nonlinear_share);
    Ok(t.finish())
}

/// Runs the instrumented network once and lays its tallies beside the
/// counter's, segment by segment.
pub fn oracle(g: &GlobalOpts, path: &Path) -> CliResult<String> {
    let model = g.load_model(path)?;
    let ctx = || CliError::core(context(path));
    let counts = count_model(&model, g.level).map_err(ctx())?;
    let mut net = OracleNetwork::from_model(&model).map_err(ctx())?;
    let LayerKind::FullyConnected { inputs, .. } = model.layers()[0].kind else {
        unreachable!("the oracle rejects convolutional layers")
    };
    let outputs = model.output_layer().output_units();
    let x: Vec<f64> = (0..inputs).map(|i| 0.1 * (i + 1) as f64).collect();
    let y = vec![0.5; outputs];

    let mut rows: Vec<(String, Option<usize>, BasicOpCounts, BasicOpCounts)> = Vec::new();
    if g.level.includes_loss() {
        let tally = net.run_training_step(&x, &y, 0.01).map_err(ctx())?;
        for (i, layer) in counts.layers.iter().enumerate() {
            rows.push((
                "forward".into(),
                Some(i + 1),
                layer.forward,
                tally.forward[i],
            ));
        }
        rows.push(("loss".into(), None, counts.loss, tally.loss));
        if g.level.includes_backprop() {
            for (i, layer) in counts.layers.iter().enumerate() {
                rows.push((
                    "backprop".into(),
                    Some(i + 1),
                    layer.backprop,
                    tally.backprop[i],
                ));
                rows.push((
                    "update_per_batch".into(),
                    Some(i + 1),
                    layer.update_per_batch,
                    tally.update[i],
                ));
            }
        }
    } else {
        let (_, tally) = net.run_forward(&x).map_err(ctx())?;
        rows.push(("forward".into(), None, counts.forward_total, tally));
    }

    let mut t = Table::new(&["segment", "layer", "counter", "oracle", "match"]);
    for (segment, layer, counter, oracle) in rows {
        t.row([
            segment,
            layer.map(|l| l.to_string()).unwrap_or_default(),
            counter.to_string(),
            oracle.to_string(),
            (counter == oracle).to_string(),
        ]);
    }
    Ok(t.finish())
}
