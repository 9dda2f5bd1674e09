use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Relative reconstruction error `||est - truth||_F / ||truth||_F`.
///
/// Despite the customary name this is the unsquared norm ratio.
pub fn rrse(est: &DenseTensor, truth: &DenseTensor) -> Result<f64> {
    if est.shape() != truth.shape() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has shape {}, truth has shape {}",
            est.shape(),
            truth.shape()
        )));
    }
    let denom = truth.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric("relative error against a zero tensor"));
    }
    let num = est
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

/// Sample mean with a two-sided 95% Student-t confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStat {
    pub mean: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n: usize,
}

impl SummaryStat {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci95_high - self.ci95_low)
    }
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStat> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::UndefinedMetric("summary of an empty sample"));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(SummaryStat {
            mean,
            ci95_low: mean,
            ci95_high: mean,
            n,
        });
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * var.sqrt() / (n as f64).sqrt();
    Ok(SummaryStat {
        mean,
        ci95_low: mean - half,
        ci95_high: mean + half,
        n,
    })
}
