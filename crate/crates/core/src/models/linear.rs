use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::scalar::Scalar;

/// Ordinary least squares with an intercept: `Ŷ = X W + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearModel<T> {
    /// `n_features × n_outputs`
    pub weights: Array2<T>,
    pub intercept: Array1<T>,
}

pub fn fit_linear<T: Scalar>(x: ArrayView2<T>, y: ArrayView2<T>) -> Result<LinearModel<T>> {
    let (n, p) = x.dim();
    if n <= p {
        return Err(Error::SingularDesign(format!(
            "{n} rows cannot determine {p} weights and an intercept"
        )));
    }
    let design = concatenate(Axis(1), &[Array2::<T>::ones((n, 1)).view(), x]).expect("same rows");
    let coef = least_squares(design.view(), y)?;
    Ok(LinearModel {
        intercept: coef.row(0).to_owned(),
        weights: coef.slice(s![1.., ..]).to_owned(),
    })
}

pub fn predict_linear<T: Scalar>(model: &LinearModel<T>, x: ArrayView2<T>) -> Array2<T> {
    x.dot(&model.weights) + &model.intercept
}
