use std::io::Write;

use serde::Serialize;

use super::dataset::FitDataset;
use super::model::{fit, FitResult, ModelSpec, Variant};
use crate::error::{Error, Result};
use crate::pose::EyePose;

/// One line of the comparison table: a variant fitted to one condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub condition: String,
    pub model: Variant,
    pub num_params: usize,
    pub bic_train: f64,
    pub bic_test: Option<f64>,
    pub r2_train: f64,
    pub r2_test: Option<f64>,
    /// Lowest test BIC within the condition (train BIC if there is no test split).
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub fits: Vec<(String, FitResult)>,
}

impl Comparison {
    /// Selected variant per condition.
    pub fn selections(&self) -> Vec<(String, Variant)> {
        self.rows
            .iter()
            .filter(|r| r.selected)
            .map(|r| (r.condition.clone(), r.model))
            .collect()
    }
}

/// Fits both variants to every condition on the same split.
pub fn compare_models(data: &FitDataset, pose: &EyePose) -> Result<Comparison> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for condition in data.conditions() {
        let subset = data.for_condition(&condition);
        let results = [Variant::WithOffset, Variant::ZeroOffset]
            .map(|v| fit(&ModelSpec::new(v, *pose), &subset, None));
        let [with, zero] = results;
        let (with, zero) = (with?, zero?);
        let score = |r: &FitResult| r.test.map_or(r.train.bic, |t| t.bic);
        let pick_with = score(&with) < score(&zero);
        for (res, selected) in [(with, pick_with), (zero, !pick_with)] {
            rows.push(ComparisonRow {
                condition: condition.clone(),
                model: res.variant,
                num_params: res.num_params,
                bic_train: res.train.bic,
                bic_test: res.test.map(|t| t.bic),
                r2_train: res.train.r2,
                r2_test: res.test.map(|t| t.r2),
                selected,
            });
            fits.push((condition.clone(), res));
        }
    }
    Ok(Comparison { rows, fits })
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
