use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StandardScalerFit<T> {
    pub mean: Array1<T>,
    pub sd: Array1<T>,
}

pub fn fit_scaler<T: Scalar>(x: ArrayView2<T>) -> Result<StandardScalerFit<T>> {
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("column {j}")).collect();
    fit_scaler_named(x, &names)
}

/// Fit with column names used in the degenerate-feature error.
pub fn fit_scaler_named<T: Scalar>(x: ArrayView2<T>, names: &[String]) -> Result<StandardScalerFit<T>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let nf = T::from_usize_lossy(n);
    let sd = Array1::from_iter(x.columns().into_iter().zip(mean.iter()).map(|(col, &m)| {
        (col.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / nf).sqrt()
    }));
    for (j, (&s, &m)) in sd.iter().zip(mean.iter()).enumerate() {
        if !(s > T::lit(16.0) * T::epsilon() * m.abs()) || s == T::zero() {
            let column = names.get(j).cloned().unwrap_or_else(|| format!("column {j}"));
            return Err(Error::DegenerateFeature { column });
        }
    }
    Ok(StandardScalerFit { mean, sd })
}

pub fn apply_scaler<T: Scalar>(fit: &StandardScalerFit<T>, x: ArrayView2<T>) -> Result<Array2<T>> {
    if x.ncols() != fit.mean.len() {
        return Err(Error::validation(format!(
            "scaler fitted on {} features, got {}",
            fit.mean.len(),
            x.ncols()
        )));
    }
    Ok((&x - &fit.mean) / &fit.sd)
}
