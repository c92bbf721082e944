use crate::error::{Error, Result};

/// Mean after dropping the `k` largest and `k` smallest values.
pub fn trimmed_mean(samples: &[f64], k: usize) -> Result<f64> {
    if samples.len() <= 2 * k {
        return Err(Error::Argument(format!(
            "trimming {k} from each end needs more than {} samples, got {}",
            2 * k,
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("samples must be finite".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let kept = &sorted[k..sorted.len() - k];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}
