use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{apply_pca, apply_scaler, fit_pca, fit_scaler_named, PcaFit, StandardScalerFit};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, TrainedModel};
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "npk-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Feature preprocessing applied after standard scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocessing {
    Raw,
    /// Rotate onto principal axes; `None` keeps every component.
    Pca { n_components: Option<usize> },
}

impl Preprocessing {
    pub fn full_pca() -> Self {
        Preprocessing::Pca { n_components: None }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Preprocessing::Raw => "raw",
            Preprocessing::Pca { .. } => "pca",
        }
    }
}

/// Scaler (and optional PCA) fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FittedPreprocessor<T> {
    pub scaler: StandardScalerFit<T>,
    pub pca: Option<PcaFit<T>>,
}

impl<T: Scalar> FittedPreprocessor<T> {
    pub fn fit(x: ArrayView2<T>, feature_names: &[String], mode: Preprocessing) -> Result<Self> {
        let scaler = fit_scaler_named(x, feature_names)?;
        let pca = match mode {
            Preprocessing::Raw => None,
            Preprocessing::Pca { n_components } => {
                let z = apply_scaler(&scaler, x)?;
                Some(fit_pca(z.view(), n_components)?)
            }
        };
        Ok(Self { scaler, pca })
    }

    pub fn transform(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        let z = apply_scaler(&self.scaler, x)?;
        match &self.pca {
            None => Ok(z),
            Some(p) => apply_pca(p, z.view()),
        }
    }

    pub fn mode(&self) -> Preprocessing {
        match &self.pca {
            None => Preprocessing::Raw,
            Some(p) => Preprocessing::Pca {
                n_components: Some(p.n_components()),
            },
        }
    }
}

/// A trained model with the preprocessing it expects, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Pipeline<T> {
    pub format: String,
    pub version: u32,
    pub scalar: String,
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    pub preprocessor: FittedPreprocessor<T>,
    pub model: TrainedModel<T>,
}

impl<T: Scalar> Pipeline<T> {
    pub fn new(
        spec: ModelSpec,
        feature_names: Vec<String>,
        target_names: Vec<String>,
        preprocessor: FittedPreprocessor<T>,
        model: TrainedModel<T>,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            scalar: T::NAME.into(),
            spec,
            feature_names,
            target_names,
            preprocessor,
            model,
        }
    }

    /// Fit preprocessing and model on the full training set.
    pub fn train(
        spec: &ModelSpec,
        x: ArrayView2<T>,
        y: ArrayView2<T>,
        feature_names: &[String],
        target_names: &[String],
        mode: Preprocessing,
        seed: u64,
    ) -> Result<Self> {
        let pre = FittedPreprocessor::fit(x, feature_names, mode)?;
        let z = pre.transform(x)?;
        let (model, _) = spec.fit(z.view(), y, seed, None)?;
        Ok(Self::new(
            spec.clone(),
            feature_names.to_vec(),
            target_names.to_vec(),
            pre,
            model,
        ))
    }

    /// Predict targets from raw features.
    pub fn predict(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        let z = self.preprocessor.transform(x)?;
        Ok(self.model.predict(z.view()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
            scalar: String,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("unreadable container: {e}")))?;
        if header.format != MODEL_FORMAT {
            return Err(Error::Format(format!("not a model container ({:?})", header.format)));
        }
        if header.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {} (expected {MODEL_FORMAT_VERSION})",
                header.version
            )));
        }
        if header.scalar != T::NAME {
            return Err(Error::Format(format!(
                "container holds {} parameters, expected {}",
                header.scalar,
                T::NAME
            )));
        }
        let p: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if p.spec.kind() != p.model.kind() {
            return Err(Error::Format("hyperparameters and parameters disagree on model kind".into()));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FEATURE_NAMES;
    use crate::models::{ForestConfig, MlpConfig, ModelKind};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};

    fn data() -> (Array2<f64>, Array2<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((25, 3), |_| rng.random_range(-3.0..3.0_f64));
        let y = Array2::from_shape_fn((25, 3), |(i, j)| x[[i, j]] * 2.0 + x[[i, (j + 2) % 3]].powi(2));
        (x, y)
    }

    fn names() -> Vec<String> {
        FEATURE_NAMES.map(String::from).to_vec()
    }

    #[test]
    fn every_kind_round_trips_bit_exactly() {
        let (x, y) = data();
        let specs = [
            ModelSpec::default_for(ModelKind::Linear),
            ModelSpec::default_for(ModelKind::Knn),
            ModelSpec::Forest(ForestConfig {
                n_trees: 3,
                ..ForestConfig::default()
            }),
            ModelSpec::Mlp(MlpConfig {
                hidden: vec![6, 5],
                epochs: 15,
                ..MlpConfig::default()
            }),
        ];
        for spec in specs {
            for mode in [Preprocessing::Raw, Preprocessing::full_pca()] {
                let p = Pipeline::train(&spec, x.view(), y.view(), &names(), &names(), mode, 9).unwrap();
                let back = Pipeline::<f64>::from_json(&p.to_json()).unwrap();
                assert_eq!(back, p);
                let a = p.predict(x.view()).unwrap();
                let b = back.predict(x.view()).unwrap();
                assert!(a.iter().zip(b.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
            }
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let (x, y) = data();
        let x = x.mapv(|v| v as f32);
        let y = y.mapv(|v| v as f32);
        let spec = ModelSpec::Mlp(MlpConfig {
            hidden: vec![4],
            epochs: 5,
            ..MlpConfig::default()
        });
        let p = Pipeline::train(&spec, x.view(), y.view(), &names(), &names(), Preprocessing::Raw, 1).unwrap();
        assert_eq!(Pipeline::<f32>::from_json(&p.to_json()).unwrap(), p);
        assert!(Pipeline::<f64>::from_json(&p.to_json()).is_err());
    }

    #[test]
    fn rejects_foreign_containers() {
        assert!(Pipeline::<f64>::from_json("{\"format\":\"other\",\"version\":1,\"scalar\":\"f64\"}").is_err());
        assert!(Pipeline::<f64>::from_json("{\"format\":\"npk-model\",\"version\":9,\"scalar\":\"f64\"}").is_err());
        assert!(Pipeline::<f64>::from_json("not json").is_err());
    }
}
