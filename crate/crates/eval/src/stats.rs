use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::EvalError;
use crate::score::EvalRecord;

/// Two-sided 95% Student-t interval of a mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CIEstimate {
    pub n: usize,
    pub mean: f64,
    /// Half-width; absent when `n < 2`.
    pub radius: Option<f64>,
}

/// The 0.975 quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    assert!(df >= 1, "degrees of freedom must be positive");
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Mean and `t(0.975, n−1) · s / √n`.
pub fn confidence_interval(scores: &[f64]) -> Result<CIEstimate, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = scores.len();
    let m = mean(scores);
    let radius = (n >= 2).then(|| {
        if scores.iter().all(|&x| x == scores[0]) {
            0.0
        } else {
            t_quantile_975(n - 1) * sample_sd(scores) / (n as f64).sqrt()
        }
    });
    Ok(CIEstimate { n, mean: m, radius })
}

/// Per-group and pooled estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub groups: BTreeMap<String, CIEstimate>,
    /// Pooled over every record, not a mean of group means.
    pub overall: CIEstimate,
}

pub fn aggregate(records: &[EvalRecord]) -> Result<Aggregate, EvalError> {
    aggregate_by(records, |r| r.group.clone())
}

pub fn aggregate_by(records: &[EvalRecord], key: impl Fn(&EvalRecord) -> String) -> Result<Aggregate, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut by: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        by.entry(key(r)).or_default().push(r.f1);
    }
    let groups = by
        .into_iter()
        .map(|(k, v)| Ok((k, confidence_interval(&v)?)))
        .collect::<Result<_, EvalError>>()?;
    let all: Vec<f64> = records.iter().map(|r| r.f1).collect();
    Ok(Aggregate {
        groups,
        overall: confidence_interval(&all)?,
    })
}
