//! Synthetic measurement rig standing in for a physical power meter, plus
//! helpers to drive the `tocount` CLI in-process and read its tables.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use tocount_core::model::feed_forward;
use tocount_core::{model_family, Activation, ModelSpec, TrainingConfig};

pub const BANKNOTE_TRAINING: TrainingConfig = TrainingConfig {
    dataset_len: 1372,
    batch_size: 64,
    epochs: 2000,
};

pub const HIDDEN_ACTIVATIONS: [Activation; 3] =
    [Activation::Sigmoid, Activation::Tanh, Activation::Gelu];

/// The 4-input, 3-hidden-layer, 1-output regression network.
pub fn banknote_model(width: usize, hidden: Activation) -> ModelSpec {
    feed_forward(
        format!("banknote-w{width}-{hidden}"),
        4,
        width,
        3,
        1,
        hidden,
        Activation::Sigmoid,
        BANKNOTE_TRAINING,
    )
    .unwrap()
}

pub fn banknote_family(
    widths: impl IntoIterator<Item = usize>,
    acts: &[Activation],
) -> Vec<ModelSpec> {
    model_family(&banknote_model(4, Activation::Sigmoid), widths, acts).unwrap()
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the CLI in-process.
pub fn tocount<S: AsRef<str>>(args: &[S]) -> Run {
    let mut argv = vec!["tocount".to_string()];
    argv.extend(args.iter().map(|a| a.as_ref().to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = tocount_cli::main_with(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn rows(csv_text: &str) -> Vec<HashMap<String, String>> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            headers
                .iter()
                .zip(r.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

pub fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key} = `{}` is not a number", row[key]))
}

pub fn write_models(dir: &Path, models: &[ModelSpec]) -> Vec<PathBuf> {
    models
        .iter()
        .map(|m| {
            let path = dir.join(format!("{}.toml", m.name()));
            fs::write(&path, m.to_document()).unwrap();
            path
        })
        .collect()
}

/// Hidden energy model plus multiplicative Gaussian noise per run, so the
/// spread grows with the energy itself.
pub struct Rig {
    pub intercept: f64,
    pub slope: f64,
    pub relative_sigma: f64,
    pub runs: usize,
}

impl Rig {
    pub fn true_energy(&self, tos: f64) -> f64 {
        self.intercept + self.slope * tos
    }

    pub fn measure(&self, tos: f64, rng: &mut impl Rng) -> Vec<f64> {
        let e = self.true_energy(tos);
        let noise = Normal::new(0.0, self.relative_sigma * e).unwrap();
        (0..self.runs).map(|_| e + noise.sample(rng)).collect()
    }
}

/// One constant-power trace per run, named `<model_id>__<run>.csv`, whose
/// integral is the given energy.
pub fn write_traces(dir: &Path, model_id: &str, energies: &[f64]) -> Vec<PathBuf> {
    energies
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let path = dir.join(format!("{model_id}__{i:02}.csv"));
            let seconds = 8.0;
            let watts = e / seconds;
            fs::write(
                &path,
                format!("elapsed_s,power_w\n0,{watts:?}\n4,{watts:?}\n{seconds},{watts:?}\n"),
            )
            .unwrap();
            path
        })
        .collect()
}

pub fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}
