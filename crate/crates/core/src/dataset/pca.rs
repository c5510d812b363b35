use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::scalar::Scalar;

/// Principal axes of a data set. Rows of `components` are orthonormal and
/// ordered by descending explained variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PcaFit<T> {
    pub mean: Array1<T>,
    pub components: Array2<T>,
    pub explained_variance: Array1<T>,
}

impl<T: Scalar> PcaFit<T> {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// Map projected coordinates back to centred feature space.
    pub fn inverse_rotate(&self, z: ArrayView2<T>) -> Array2<T> {
        z.dot(&self.components)
    }
}

/// Eigen-decomposition of the sample covariance (divisor `n - 1`). `None`
/// keeps every component.
pub fn fit_pca<T: Scalar>(x: ArrayView2<T>, n_components: Option<usize>) -> Result<PcaFit<T>> {
    let (n, p) = x.dim();
    let keep = n_components.unwrap_or(p);
    if keep > p || keep == 0 {
        return Err(Error::validation(format!(
            "cannot keep {keep} components of {p} features"
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centred = &x - &mean;
    let cov = centred.t().dot(&centred) / T::from_usize_lossy(n - 1);
    let (values, vectors) = symmetric_eigen(cov.view());
    let mut components = vectors.t().slice(ndarray::s![..keep, ..]).to_owned();
    // Fix the sign so the largest-magnitude loading of each axis is positive.
    for mut row in components.rows_mut() {
        let pivot = row
            .iter()
            .copied()
            .fold(T::zero(), |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < T::zero() {
            row.mapv_inplace(|v| -v);
        }
    }
    let explained_variance = values
        .slice(ndarray::s![..keep])
        .mapv(|v| v.max(T::zero()));
    Ok(PcaFit {
        mean,
        components,
        explained_variance,
    })
}

pub fn apply_pca<T: Scalar>(fit: &PcaFit<T>, x: ArrayView2<T>) -> Result<Array2<T>> {
    if x.ncols() != fit.mean.len() {
        return Err(Error::validation(format!(
            "PCA fitted on {} features, got {}",
            fit.mean.len(),
            x.ncols()
        )));
    }
    Ok((&x - &fit.mean).dot(&fit.components.t()))
}
