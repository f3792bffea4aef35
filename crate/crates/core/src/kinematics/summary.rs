use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::outcome::TrialOutcome;
use crate::error::{Error, Result};

/// Mean with a two-sided 95 % Student-t confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Returns `None` for an empty sample; the interval needs at least two values.
pub fn mean_ci95(values: &[f64]) -> Option<MeanCi> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Some(MeanCi {
            mean,
            ci_low: None,
            ci_high: None,
        });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975);
    let half = t * (var / n as f64).sqrt();
    Some(MeanCi {
        mean,
        ci_low: Some(mean - half),
        ci_high: Some(mean + half),
    })
}

/// One row of the grouped summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub condition: String,
    pub target_distance_m: f64,
    pub n_valid: usize,
    pub n_rejected: usize,
    pub distance_error_mean_m: Option<f64>,
    pub distance_error_ci_low_m: Option<f64>,
    pub distance_error_ci_high_m: Option<f64>,
    pub endpoint_error_mean_m: Option<f64>,
    pub endpoint_error_ci_low_m: Option<f64>,
    pub endpoint_error_ci_high_m: Option<f64>,
    pub disparity_difference_mean_rad: Option<f64>,
    pub disparity_difference_ci_low_rad: Option<f64>,
    pub disparity_difference_ci_high_rad: Option<f64>,
}

/// Target distances are grouped after rounding to the micrometre.
fn distance_key(d: f64) -> i64 {
    (d * 1e6).round() as i64
}

/// Means and 95 % intervals per (condition, target distance), valid trials only.
pub fn summarize(outcomes: &[TrialOutcome]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, i64), Vec<&TrialOutcome>> = BTreeMap::new();
    for o in outcomes {
        groups
            .entry((o.condition.clone(), distance_key(o.target_distance_m)))
            .or_default()
            .push(o);
    }
    groups
        .into_iter()
        .map(|((condition, key), rows)| {
            let valid: Vec<&TrialOutcome> = rows.iter().copied().filter(|o| o.valid).collect();
            let stat = |f: fn(&TrialOutcome) -> Option<f64>| {
                let v: Vec<f64> = valid.iter().filter_map(|o| f(o)).collect();
                mean_ci95(&v)
            };
            let de = stat(|o| o.distance_error_m);
            let ee = stat(|o| o.endpoint_error_m);
            let dd = stat(|o| o.disparity_difference_rad);
            SummaryRow {
                condition,
                target_distance_m: key as f64 * 1e-6,
                n_valid: valid.len(),
                n_rejected: rows.len() - valid.len(),
                distance_error_mean_m: de.map(|s| s.mean),
                distance_error_ci_low_m: de.and_then(|s| s.ci_low),
                distance_error_ci_high_m: de.and_then(|s| s.ci_high),
                endpoint_error_mean_m: ee.map(|s| s.mean),
                endpoint_error_ci_low_m: ee.and_then(|s| s.ci_low),
                endpoint_error_ci_high_m: ee.and_then(|s| s.ci_high),
                disparity_difference_mean_rad: dd.map(|s| s.mean),
                disparity_difference_ci_low_rad: dd.and_then(|s| s.ci_low),
                disparity_difference_ci_high_rad: dd.and_then(|s| s.ci_high),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
