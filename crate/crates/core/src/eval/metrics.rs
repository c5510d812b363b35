use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_shapes<T>(y: &ArrayView2<T>, y_hat: &ArrayView2<T>) -> Result<()> {
    if y.dim() != y_hat.dim() {
        return Err(Error::validation(format!(
            "shape mismatch: targets {:?}, predictions {:?}",
            y.dim(),
            y_hat.dim()
        )));
    }
    if y.is_empty() {
        return Err(Error::validation("no samples to score"));
    }
    Ok(())
}

/// Mean absolute error averaged uniformly over samples and outputs.
pub fn mae<T: Scalar>(y: ArrayView2<T>, y_hat: ArrayView2<T>) -> Result<T> {
    check_shapes(&y, &y_hat)?;
    let total: T = y.iter().zip(y_hat.iter()).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(total / T::from_usize_lossy(y.len()))
}

/// Coefficient of determination per output, averaged uniformly.
pub fn r_squared<T: Scalar>(y: ArrayView2<T>, y_hat: ArrayView2<T>) -> Result<T> {
    check_shapes(&y, &y_hat)?;
    let mut total = T::zero();
    for (o, (col, pred)) in y.columns().into_iter().zip(y_hat.columns()).enumerate() {
        let m = col.iter().copied().sum::<T>() / T::from_usize_lossy(col.len());
        let ss_tot: T = col.iter().map(|&v| (v - m) * (v - m)).sum();
        if ss_tot == T::zero() {
            return Err(Error::UndefinedScore { output: o });
        }
        let ss_res: T = col.iter().zip(pred.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
        total += T::one() - ss_res / ss_tot;
    }
    Ok(total / T::from_usize_lossy(y.ncols()))
}
