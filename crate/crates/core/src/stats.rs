//! Batch-means estimation for autocorrelated sample paths.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of batches used for standard errors.
pub const DEFAULT_BATCHES: usize = 32;
/// Fewest samples (and batches) accepted by [`batch_means`].
pub const MIN_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MeanEstimate {
    pub fn exact(value: f64) -> Self {
        MeanEstimate {
            estimate: value,
            std_error: 0.0,
            samples: 0,
        }
    }

    /// Affine map `a + b * X` of the estimate.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        MeanEstimate {
            estimate: a + b * self.estimate,
            std_error: b.abs() * self.std_error,
            samples: self.samples,
        }
    }
}

/// Sample mean of `values` with a batch-means standard error.
///
/// The point estimate averages every sample. The standard error comes from
/// `min(DEFAULT_BATCHES, len)` contiguous equal-size batches; a remainder
/// shorter than one batch is left out of the batch variance only.
pub fn batch_means(values: &[f64]) -> Result<MeanEstimate> {
    let n = values.len();
    if n < MIN_BATCHES {
        return Err(Error::InsufficientSamples {
            needed: MIN_BATCHES,
            got: n,
        });
    }
    let estimate = values.iter().sum::<f64>() / n as f64;
    let batches = DEFAULT_BATCHES.min(n);
    let size = n / batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok(MeanEstimate {
        estimate,
        std_error: (var / batches as f64).sqrt(),
        samples: n,
    })
}

/// Mean with batch-means error for any non-empty slice; slices too short
/// for batching get a naive i.i.d. standard error.
pub(crate) fn mean_with_error(values: &[f64]) -> Result<MeanEstimate> {
    if values.len() >= MIN_BATCHES {
        return batch_means(values);
    }
    if values.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(MeanEstimate {
        estimate: mean,
        std_error,
        samples: values.len(),
    })
}
