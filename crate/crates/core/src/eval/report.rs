use std::collections::BTreeMap;
use std::fmt;

use crate::eval::cv::FoldResult;
use crate::models::ModelKind;
use crate::scalar::{mean, population_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Mean and population SD of one model's fold MAEs on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub preprocessing: &'static str,
    pub split: Split,
    pub mean_mae: f64,
    pub sd_mae: f64,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Ordered by model, preprocessing, then split.
    pub rows: Vec<SummaryRow>,
    /// `(model, preprocessing, mean test MAE)`, best first.
    pub ranking: Vec<(ModelKind, &'static str, f64)>,
}

impl ComparisonReport {
    pub fn get(&self, model: ModelKind, preprocessing: &str, split: Split) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.preprocessing == preprocessing && r.split == split)
    }

    /// `model,preprocessing,split,mean_mae,sd_mae`
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("model,preprocessing,split,mean_mae,sd_mae\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.model, r.preprocessing, r.split, r.mean_mae, r.sd_mae
            ));
        }
        s
    }

    /// Number of distinct (model, preprocessing) groups.
    pub fn groups(&self) -> usize {
        self.ranking.len()
    }
}

/// Summarise fold results per model and preprocessing and rank by mean test
/// MAE. The result does not depend on the order of `results`.
pub fn compare_models(results: &[FoldResult]) -> ComparisonReport {
    let mut groups: BTreeMap<(ModelKind, &'static str), Vec<&FoldResult>> = BTreeMap::new();
    for r in results {
        groups.entry((r.model, r.preprocessing.label())).or_default().push(r);
    }
    let mut rows = Vec::new();
    let mut ranking = Vec::new();
    for ((model, pre), mut folds) in groups {
        folds.sort_by(|a, b| {
            a.fold
                .cmp(&b.fold)
                .then(a.train_mae.total_cmp(&b.train_mae))
                .then(a.test_mae.total_cmp(&b.test_mae))
        });
        let train: Vec<f64> = folds.iter().map(|f| f.train_mae).collect();
        let test: Vec<f64> = folds.iter().map(|f| f.test_mae).collect();
        for (split, vals) in [(Split::Train, &train), (Split::Test, &test)] {
            rows.push(SummaryRow {
                model,
                preprocessing: pre,
                split,
                mean_mae: mean(vals),
                sd_mae: population_sd(vals),
                folds: vals.len(),
            });
        }
        ranking.push((model, pre, mean(&test)));
    }
    ranking.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(b.1)));
    ComparisonReport { rows, ranking }
}
