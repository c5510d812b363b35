//! The feature table and the preprocessing protocol around it.

mod kfold;
mod pca;
mod scaler;
mod spearman;

use std::io::{Read, Write};

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use kfold::{make_kfold, KFoldPlan};
pub use pca::{apply_pca, fit_pca, PcaFit};
pub use scaler::{apply_scaler, fit_scaler, fit_scaler_named, StandardScalerFit};
pub use spearman::{average_ranks, spearman, spearman_matrix, CorrelationMatrix};

pub const FEATURE_NAMES: [&str; 3] = ["ph", "conductivity_s_per_m", "avg_power_w"];
pub const TARGET_NAMES: [&str; 3] = ["c_hno3_mmol", "c_h3po4_mmol", "c_koh_mmol"];

/// Input features (pH, σ, P_av) and target concentrations (mmol/L), one row
/// per solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable<T> {
    feature_names: Vec<String>,
    target_names: Vec<String>,
    x: Array2<T>,
    y: Array2<T>,
}

impl<T: Scalar> FeatureTable<T> {
    pub fn new(
        feature_names: Vec<String>,
        target_names: Vec<String>,
        x: Array2<T>,
        y: Array2<T>,
    ) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::validation(format!(
                "{} feature rows but {} target rows",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: x.nrows(),
            });
        }
        if feature_names.len() != x.ncols() || target_names.len() != y.ncols() {
            return Err(Error::validation("column names do not match matrix widths"));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::validation("feature table contains non-finite entries"));
        }
        Ok(Self {
            feature_names,
            target_names,
            x,
            y,
        })
    }

    /// Table with the canonical column names.
    pub fn from_rows(features: &[[T; 3]], targets: &[[T; 3]]) -> Result<Self> {
        let to_matrix = |rows: &[[T; 3]]| {
            Array2::from_shape_vec((rows.len(), 3), rows.iter().flatten().copied().collect())
                .expect("row-major 3-column buffer")
        };
        Self::new(
            FEATURE_NAMES.map(String::from).to_vec(),
            TARGET_NAMES.map(String::from).to_vec(),
            to_matrix(features),
            to_matrix(targets),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn x(&self) -> ArrayView2<'_, T> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView2<'_, T> {
        self.y.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_names(&self) -> &[String] {
        &self.target_names
    }

    /// All column names, features first.
    pub fn column_names(&self) -> Vec<String> {
        self.feature_names
            .iter()
            .chain(&self.target_names)
            .cloned()
            .collect()
    }

    /// Features and targets side by side.
    pub fn columns(&self) -> Array2<T> {
        ndarray::concatenate(Axis(1), &[self.x.view(), self.y.view()]).expect("equal row counts")
    }

    /// Rows selected by index, in the order given.
    pub fn select(&self, rows: &[usize]) -> (Array2<T>, Array2<T>) {
        (self.x.select(Axis(0), rows), self.y.select(Axis(0), rows))
    }

    /// Per-feature (min, max).
    pub fn feature_ranges(&self) -> Vec<(T, T)> {
        self.x
            .columns()
            .into_iter()
            .map(|c| {
                c.iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.column_names())?;
        for (xr, yr) in self.x.rows().into_iter().zip(self.y.rows()) {
            w.write_record(xr.iter().chain(yr.iter()).map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    /// Read a table whose header is the canonical six columns.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let expected: Vec<&str> = FEATURE_NAMES.iter().chain(&TARGET_NAMES).copied().collect();
        if header != expected {
            return Err(Error::validation(format!(
                "dataset header must be {}, found {}",
                expected.join(","),
                header.join(",")
            )));
        }
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let row = i + 2;
            let mut vals = [T::zero(); 6];
            if record.len() != 6 {
                return Err(Error::Parse {
                    row,
                    message: format!("expected 6 columns, found {}", record.len()),
                });
            }
            for (slot, raw) in vals.iter_mut().zip(record.iter()) {
                *slot = raw.parse::<f64>().map(T::lit).map_err(|_| Error::Parse {
                    row,
                    message: format!("non-numeric value {raw:?}"),
                })?;
            }
            features.push([vals[0], vals[1], vals[2]]);
            targets.push([vals[3], vals[4], vals[5]]);
        }
        Self::from_rows(&features, &targets)
    }
}
