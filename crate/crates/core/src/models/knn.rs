use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniformly weighted k-nearest-neighbour regressor under the Euclidean
/// metric. Distance ties go to the lower training row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KnnModel<T> {
    pub x: Array2<T>,
    pub y: Array2<T>,
    pub k: usize,
}

pub const DEFAULT_NEIGHBOURS: usize = 5;

pub fn fit_knn<T: Scalar>(x: ArrayView2<T>, y: ArrayView2<T>, k: usize) -> Result<KnnModel<T>> {
    if x.nrows() == 0 {
        return Err(Error::validation("k-NN needs at least one training row"));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::validation("feature and target row counts differ"));
    }
    if k == 0 || k > x.nrows() {
        return Err(Error::validation(format!(
            "k = {k} neighbours requested from {} training rows",
            x.nrows()
        )));
    }
    Ok(KnnModel {
        x: x.to_owned(),
        y: y.to_owned(),
        k,
    })
}

fn squared_distance<T: Scalar>(a: ArrayView1<T>, b: ArrayView1<T>) -> T {
    a.iter().zip(b.iter()).map(|(&p, &q)| (p - q) * (p - q)).sum()
}

impl<T: Scalar> KnnModel<T> {
    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbours(&self, query: ArrayView1<T>) -> Vec<usize> {
        let mut d: Vec<(T, usize)> = self
            .x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| (squared_distance(row, query), i))
            .collect();
        let by_distance = |a: &(T, usize), b: &(T, usize)| {
            a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1))
        };
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, by_distance);
            d.truncate(self.k);
        }
        d.sort_by(by_distance);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

pub fn predict_knn<T: Scalar>(model: &KnnModel<T>, x: ArrayView2<T>) -> Array2<T> {
    let mut out = Array2::zeros((x.nrows(), model.y.ncols()));
    let kf = T::from_usize_lossy(model.k);
    for (q, mut row) in x.rows().into_iter().zip(out.rows_mut()) {
        for i in model.neighbours(q) {
            row += &model.y.row(i);
        }
        row.mapv_inplace(|v| v / kf);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_point_always_wins() {
        let m = fit_knn(array![[1.0_f64, 2.0]].view(), array![[5.0, 6.0]].view(), 1).unwrap();
        let p = predict_knn(&m, array![[100.0, -3.0], [0.0, 0.0]].view());
        assert_eq!(p, array![[5.0, 6.0], [5.0, 6.0]]);
    }

    #[test]
    fn memorizes_with_k1() {
        let x = array![[0.0_f64, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let y = array![[1.0_f64], [2.0], [3.0]];
        let m = fit_knn(x.view(), y.view(), 1).unwrap();
        assert_eq!(predict_knn(&m, x.view()), y);
    }

    #[test]
    fn ties_prefer_lower_rows() {
        let x = array![[1.0_f64], [-1.0], [1.0]];
        let y = array![[10.0_f64], [20.0], [30.0]];
        let m = fit_knn(x.view(), y.view(), 2).unwrap();
        assert_eq!(m.neighbours(array![0.0].view()), vec![0, 1]);
        assert_eq!(predict_knn(&m, array![[0.0]].view()), array![[15.0]]);
    }

    #[test]
    fn validation() {
        let e = Array2::<f64>::zeros((0, 3));
        assert!(fit_knn(e.view(), e.view(), 1).is_err());
        let x = array![[0.0_f64], [1.0]];
        assert!(fit_knn(x.view(), x.view(), 3).is_err());
        assert!(fit_knn(x.view(), x.view(), 0).is_err());
    }
}
