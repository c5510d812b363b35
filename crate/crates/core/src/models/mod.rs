//! The four regressors and the fitted preprocessing pipeline that feeds them.

pub mod adam;
pub mod forest;
pub mod knn;
pub mod linear;
pub mod mlp;
mod pipeline;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use adam::{Adam, AdamConfig};
pub use forest::{fit_forest, predict_forest, ForestConfig, ForestModel, Node, RegressionTree};
pub use knn::{fit_knn, predict_knn, KnnModel, DEFAULT_NEIGHBOURS};
pub use linear::{fit_linear, predict_linear, LinearModel};
pub use mlp::{fit_mlp, predict_mlp, train_mlp, Activation, EpochCurve, MlpConfig, MlpModel};
pub use pipeline::{FittedPreprocessor, Pipeline, Preprocessing, MODEL_FORMAT, MODEL_FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Knn,
    Forest,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Linear, ModelKind::Knn, ModelKind::Forest, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Knn => "knn",
            ModelKind::Forest => "forest",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "lr" => Ok(ModelKind::Linear),
            "knn" | "k-nn" => Ok(ModelKind::Knn),
            "forest" | "rf" | "random_forest" => Ok(ModelKind::Forest),
            "mlp" | "nn" | "neural_network" => Ok(ModelKind::Mlp),
            other => Err(Error::validation(format!(
                "unknown model {other:?} (expected linear, knn, forest or mlp)"
            ))),
        }
    }
}

/// A model kind together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Linear,
    Knn { k: usize },
    Forest(ForestConfig),
    Mlp(MlpConfig),
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Linear => ModelSpec::Linear,
            ModelKind::Knn => ModelSpec::Knn { k: DEFAULT_NEIGHBOURS },
            ModelKind::Forest => ModelSpec::Forest(ForestConfig::default()),
            ModelKind::Mlp => ModelSpec::Mlp(MlpConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Linear => ModelKind::Linear,
            ModelSpec::Knn { .. } => ModelKind::Knn,
            ModelSpec::Forest(_) => ModelKind::Forest,
            ModelSpec::Mlp(_) => ModelKind::Mlp,
        }
    }

    /// Fit on `(x, y)`. Only the MLP uses `validation`, to record its epoch
    /// curve.
    pub fn fit<T: Scalar>(
        &self,
        x: ArrayView2<T>,
        y: ArrayView2<T>,
        seed: u64,
        validation: Option<(ArrayView2<T>, ArrayView2<T>)>,
    ) -> Result<(TrainedModel<T>, Option<EpochCurve>)> {
        Ok(match self {
            ModelSpec::Linear => (TrainedModel::Linear(fit_linear(x, y)?), None),
            ModelSpec::Knn { k } => (TrainedModel::Knn(fit_knn(x, y, *k)?), None),
            ModelSpec::Forest(cfg) => (TrainedModel::Forest(fit_forest(x, y, cfg, seed)?), None),
            ModelSpec::Mlp(cfg) => {
                let (m, curve) = fit_mlp(x, y, cfg, seed, validation)?;
                (TrainedModel::Mlp(m), Some(curve))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "kind", content = "parameters", rename_all = "lowercase")]
pub enum TrainedModel<T> {
    Linear(LinearModel<T>),
    Knn(KnnModel<T>),
    Forest(ForestModel<T>),
    Mlp(MlpModel<T>),
}

impl<T: Scalar> TrainedModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Linear(_) => ModelKind::Linear,
            TrainedModel::Knn(_) => ModelKind::Knn,
            TrainedModel::Forest(_) => ModelKind::Forest,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn predict(&self, x: ArrayView2<T>) -> Array2<T> {
        match self {
            TrainedModel::Linear(m) => predict_linear(m, x),
            TrainedModel::Knn(m) => predict_knn(m, x),
            TrainedModel::Forest(m) => predict_forest(m, x),
            TrainedModel::Mlp(m) => predict_mlp(m, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
            assert_eq!(ModelSpec::default_for(k).kind(), k);
        }
        assert_eq!("NN".parse::<ModelKind>().unwrap(), ModelKind::Mlp);
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
