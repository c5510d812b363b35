use ndarray::ArrayView2;

use crate::dataset::{FeatureTable, KFoldPlan};
use crate::error::{Error, Result};
use crate::eval::metrics::{mae, r_squared};
use crate::models::{EpochCurve, FittedPreprocessor, ModelKind, ModelSpec, Preprocessing};
use crate::scalar::Scalar;
use crate::seed;

/// Where the scaler and PCA are fitted during cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScalingScope {
    /// On the training folds of each split only.
    #[default]
    PerFold,
    /// Once on the whole table before splitting.
    Global,
}

/// Scores of one model on one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub model: ModelKind,
    pub preprocessing: Preprocessing,
    pub fold: usize,
    pub train_mae: f64,
    pub test_mae: f64,
    /// Test-fold R²; absent when an output is constant on the fold.
    pub r2: Option<f64>,
    pub curve: Option<EpochCurve>,
}

fn score<T: Scalar>(y: ArrayView2<T>, y_hat: ArrayView2<T>) -> Result<f64> {
    mae(y, y_hat).map(Scalar::as_f64)
}

/// k-fold cross-validation of one model. Every fold fits its own
/// preprocessing and model; fold `i` trains with the seed derived from
/// `(seed, i)`.
pub fn run_cv<T: Scalar>(
    table: &FeatureTable<T>,
    spec: &ModelSpec,
    preprocessing: Preprocessing,
    plan: &KFoldPlan,
    seed: u64,
) -> Result<Vec<FoldResult>> {
    run_cv_with(table, spec, preprocessing, plan, seed, ScalingScope::PerFold)
}

pub fn run_cv_with<T: Scalar>(
    table: &FeatureTable<T>,
    spec: &ModelSpec,
    preprocessing: Preprocessing,
    plan: &KFoldPlan,
    seed: u64,
    scope: ScalingScope,
) -> Result<Vec<FoldResult>> {
    if plan.n_rows() != table.n_rows() {
        return Err(Error::validation(format!(
            "fold plan covers {} rows but the table has {}",
            plan.n_rows(),
            table.n_rows()
        )));
    }
    let global = match scope {
        ScalingScope::Global => Some(FittedPreprocessor::fit(table.x(), table.feature_names(), preprocessing)?),
        ScalingScope::PerFold => None,
    };
    (0..plan.k)
        .map(|fold| {
            let context = |e: Error| Error::validation(format!("{} fold {fold}: {e}", spec.kind()));
            let train = plan.train_indices(fold);
            let (x_train, y_train) = table.select(&train);
            let (x_test, y_test) = table.select(plan.test_indices(fold));
            let pre = match &global {
                Some(p) => p.clone(),
                None => FittedPreprocessor::fit(x_train.view(), table.feature_names(), preprocessing)
                    .map_err(context)?,
            };
            let z_train = pre.transform(x_train.view())?;
            let z_test = pre.transform(x_test.view())?;
            let fold_seed = seed::derive_seed(seed, "cv.fold", fold as u64);
            let (model, curve) = spec
                .fit(
                    z_train.view(),
                    y_train.view(),
                    fold_seed,
                    Some((z_test.view(), y_test.view())),
                )
                .map_err(context)?;
            let p_train = model.predict(z_train.view());
            let p_test = model.predict(z_test.view());
            Ok(FoldResult {
                model: spec.kind(),
                preprocessing,
                fold,
                train_mae: score(y_train.view(), p_train.view())?,
                test_mae: score(y_test.view(), p_test.view())?,
                r2: r_squared(y_test.view(), p_test.view()).ok().map(Scalar::as_f64),
                curve,
            })
        })
        .collect()
}

/// Per-fold scores as CSV: `model,preprocessing,fold,train_mae,test_mae,r2`.
pub fn folds_to_csv(results: &[FoldResult]) -> String {
    let mut s = String::from("model,preprocessing,fold,train_mae,test_mae,r2\n");
    for r in results {
        let r2 = r.r2.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model,
            r.preprocessing.label(),
            r.fold + 1,
            r.train_mae,
            r.test_mae,
            r2
        ));
    }
    s
}
