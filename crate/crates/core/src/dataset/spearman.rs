use ndarray::ArrayView1;

use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 1-based ranks with ties sharing the average of the positions they span.
pub fn average_ranks<T: Scalar>(values: ArrayView1<T>) -> Vec<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![T::zero(); n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank (i + j)/2 + 1
        let rank = T::from_usize_lossy(i + j + 2) / T::lit(2.0);
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    let n = T::from_usize_lossy(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == T::zero() || sbb == T::zero() {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).max(-T::one()).min(T::one()))
}

/// Spearman correlation; `None` when either column is constant.
pub fn spearman<T: Scalar>(x: ArrayView1<T>, y: ArrayView1<T>) -> Option<T> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Pairwise Spearman correlations. Undefined entries are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T> {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<T>>>,
}

impl<T: Scalar> CorrelationMatrix<T> {
    pub fn get(&self, a: &str, b: &str) -> Option<T> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        self.values[i][j]
    }

    /// CSV with a leading name column; undefined entries written as `NA`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("variable");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&self.values) {
            out.push_str(name);
            for v in row {
                out.push(',');
                match v {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Spearman matrix over all six columns (features then targets).
pub fn spearman_matrix<T: Scalar>(table: &FeatureTable<T>) -> Result<CorrelationMatrix<T>> {
    if table.n_rows() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: table.n_rows(),
        });
    }
    let cols = table.columns();
    let ranks: Vec<Vec<T>> = cols.columns().into_iter().map(average_ranks).collect();
    let p = ranks.len();
    let mut values = vec![vec![None; p]; p];
    for i in 0..p {
        for j in i..p {
            let r = pearson(&ranks[i], &ranks[j]);
            let r = if i == j { r.map(|_| T::one()) } else { r };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: table.column_names(),
        values,
    })
}
