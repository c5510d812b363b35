pub mod convert;
pub mod eval;
pub mod featurize;
pub mod gen;
pub mod predict;
pub mod train;

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use npk_core::curves::CellGeometry;
use npk_core::dataset::FeatureTable;
use npk_core::models::{Activation, ForestConfig, MlpConfig, ModelKind, ModelSpec, Preprocessing, DEFAULT_NEIGHBOURS};

use crate::args::{ModelOptions, PreprocessingArg};
use crate::settings::Settings;

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn read_table(path: &Path) -> Result<FeatureTable<f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    FeatureTable::read_csv(file).with_context(|| format!("reading {}", path.display()))
}

pub fn geometry(s: &Settings, separation: Option<f64>, area: Option<f64>) -> Result<CellGeometry<f64>> {
    let d = CellGeometry::<f64>::default();
    Ok(CellGeometry::new(
        s.pick(separation, "separation_m", d.separation_m)?,
        s.pick(area, "area_m2", d.area_m2)?,
    )?)
}

pub fn model_spec(s: &Settings, kind: ModelKind, o: &ModelOptions) -> Result<ModelSpec> {
    Ok(match kind {
        ModelKind::Linear => ModelSpec::Linear,
        ModelKind::Knn => ModelSpec::Knn {
            k: s.pick(o.neighbours, "neighbours", DEFAULT_NEIGHBOURS)?,
        },
        ModelKind::Forest => ModelSpec::Forest(ForestConfig {
            n_trees: s.pick(o.trees, "trees", ForestConfig::default().n_trees)?,
            ..ForestConfig::default()
        }),
        ModelKind::Mlp => {
            let linear = o.linear_activation || s.pick(None, "linear_activation", false)?;
            ModelSpec::Mlp(MlpConfig {
                epochs: s.pick(o.epochs, "epochs", MlpConfig::default().epochs)?,
                activation: if linear { Activation::Identity } else { Activation::Relu },
                ..MlpConfig::default()
            })
        }
    })
}

pub fn preprocessing_modes(arg: PreprocessingArg) -> Vec<Preprocessing> {
    match arg {
        PreprocessingArg::Raw => vec![Preprocessing::Raw],
        PreprocessingArg::Pca => vec![Preprocessing::full_pca()],
        PreprocessingArg::Both => vec![Preprocessing::Raw, Preprocessing::full_pca()],
    }
}

pub fn single_mode(arg: PreprocessingArg) -> Result<Preprocessing> {
    match arg {
        PreprocessingArg::Both => bail!("train takes a single preprocessing mode: raw or pca"),
        other => Ok(preprocessing_modes(other)[0]),
    }
}
