use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which norm the tail values were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormDescriptor {
    pub p: f64,
    pub projection_n: u64,
    pub time: f64,
}

/// Empirical survival function `P(X > λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub thresholds: Vec<f64>,
    pub survival: Vec<f64>,
    /// Binomial standard error `sqrt(s(1 − s)/n)`.
    pub stderr: Vec<f64>,
    pub sample_count: usize,
    pub norm_descriptor: Option<NormDescriptor>,
}

impl TailReport {
    pub fn with_descriptor(mut self, descriptor: NormDescriptor) -> Self {
        self.norm_descriptor = Some(descriptor);
        self
    }

    /// `lambda,survival,stderr` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,survival,stderr\n");
        for ((l, s), e) in self.thresholds.iter().zip(&self.survival).zip(&self.stderr) {
            out.push_str(&format!("{l},{s},{e}\n"));
        }
        out
    }
}

/// `survival[i] = #{v > thresholds[i]} / #values`.
pub fn tail_estimate(values: &[f64], thresholds: &[f64]) -> Result<TailReport> {
    if values.is_empty() {
        return Err(Error::precondition("tail estimate needs at least one value"));
    }
    if values.iter().chain(thresholds).any(|v| v.is_nan()) {
        return Err(Error::precondition("NaN in tail estimate input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut survival = Vec::with_capacity(thresholds.len());
    let mut stderr = Vec::with_capacity(thresholds.len());
    for &l in thresholds {
        let above = sorted.len() - sorted.partition_point(|&v| v <= l);
        let s = above as f64 / n;
        survival.push(s);
        stderr.push((s * (1.0 - s) / n).sqrt());
    }
    Ok(TailReport { thresholds: thresholds.to_vec(), survival, stderr, sample_count: values.len(), norm_descriptor: None })
}
