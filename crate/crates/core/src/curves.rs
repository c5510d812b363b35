//! V-I sweep ingestion and the two electrical features derived from a sweep:
//! average power (the area under the I-V curve) and conductivity (the mean
//! incremental conductance scaled by the cell constant).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::SolutionComposition;
use crate::scalar::Scalar;

/// Voltage increment of the sweep, in volts.
pub const DEFAULT_STEP_V: f64 = 0.05;
/// Samples in a canonical 0-5 V sweep.
pub const DEFAULT_SAMPLES: usize = 101;
/// Shortest sweep accepted by the ingestion path.
pub const MIN_SAMPLES: usize = 4;

/// Electrode separation and immersed electrode area of the measuring cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry<T> {
    /// Electrode separation, metres.
    pub separation_m: T,
    /// Immersed electrode area, square metres.
    pub area_m2: T,
}

impl<T: Scalar> Default for CellGeometry<T> {
    fn default() -> Self {
        Self {
            separation_m: T::lit(0.045),
            area_m2: T::lit(1.26e-4),
        }
    }
}

impl<T: Scalar> CellGeometry<T> {
    pub fn new(separation_m: T, area_m2: T) -> Result<Self> {
        let g = Self {
            separation_m,
            area_m2,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.separation_m > T::zero() && self.area_m2 > T::zero())
            || !self.separation_m.is_finite()
            || !self.area_m2.is_finite()
        {
            return Err(Error::validation(format!(
                "cell geometry must be positive (l = {}, A = {})",
                self.separation_m, self.area_m2
            )));
        }
        Ok(())
    }

    /// Cell constant l/A, in 1/m.
    pub fn cell_constant(&self) -> T {
        self.separation_m / self.area_m2
    }

    /// Weight applied to each current increment when the per-interval
    /// conductances of a uniform sweep are averaged:
    /// `l / (step * A * intervals)`. About 71.43 at the default geometry on
    /// the canonical grid.
    pub fn per_interval_coefficient(&self, step_v: T, intervals: usize) -> T {
        self.cell_constant() / (step_v * T::from_usize_lossy(intervals))
    }
}

/// Known composition encoded in a sweep's file name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveLabel<T> {
    pub composition: SolutionComposition<T>,
    pub ph: T,
}

/// How current values in a sweep file are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurrentUnit {
    #[default]
    Amperes,
    Milliamperes,
}

impl CurrentUnit {
    fn to_amperes<T: Scalar>(self, value: T) -> T {
        match self {
            CurrentUnit::Amperes => value,
            CurrentUnit::Milliamperes => value / T::lit(1000.0),
        }
    }
}

/// One voltage sweep: currents (A) sampled on an ascending voltage grid (V)
/// starting at 0 with a fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct VICurve<T> {
    voltages: Vec<T>,
    currents: Vec<T>,
    label: Option<CurveLabel<T>>,
}

impl<T: Scalar> VICurve<T> {
    /// Build a sweep on the canonical 50 mV grid.
    pub fn new(voltages: Vec<T>, currents: Vec<T>) -> Result<Self> {
        Self::with_step(voltages, currents, T::lit(DEFAULT_STEP_V))
    }

    /// Build a sweep on a uniform grid with an arbitrary step.
    pub fn with_step(voltages: Vec<T>, currents: Vec<T>, step_v: T) -> Result<Self> {
        validate_grid(&voltages, &currents, step_v)?;
        Ok(Self {
            voltages,
            currents,
            label: None,
        })
    }

    /// Sample `current(v)` on `samples` grid points `0, step, 2*step, ...`.
    pub fn from_fn(samples: usize, step_v: T, current: impl Fn(T) -> T) -> Result<Self> {
        let voltages: Vec<T> = (0..samples)
            .map(|i| T::from_usize_lossy(i) * step_v)
            .collect();
        let currents = voltages.iter().map(|&v| current(v)).collect();
        Self::with_step(voltages, currents, step_v)
    }

    /// Canonical 101-point, 0-5 V sweep of `current(v)`.
    pub fn canonical(current: impl Fn(T) -> T) -> Self {
        Self::from_fn(DEFAULT_SAMPLES, T::lit(DEFAULT_STEP_V), current)
            .expect("canonical grid is valid whenever the currents are finite")
    }

    pub fn with_label(mut self, label: Option<CurveLabel<T>>) -> Self {
        self.label = label;
        self
    }

    pub fn voltages(&self) -> &[T] {
        &self.voltages
    }

    pub fn currents(&self) -> &[T] {
        &self.currents
    }

    pub fn label(&self) -> Option<&CurveLabel<T>> {
        self.label.as_ref()
    }

    pub fn len(&self) -> usize {
        self.voltages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltages.is_empty()
    }

    /// Number of intervals between successive samples.
    pub fn intervals(&self) -> usize {
        self.voltages.len().saturating_sub(1)
    }
}

fn grid_tolerance<T: Scalar>(v: T) -> T {
    T::lit(1e-9) + T::lit(8.0) * T::epsilon() * v.abs().max(T::one())
}

fn validate_grid<T: Scalar>(voltages: &[T], currents: &[T], step_v: T) -> Result<()> {
    if voltages.len() != currents.len() {
        return Err(Error::validation(format!(
            "{} voltages but {} currents",
            voltages.len(),
            currents.len()
        )));
    }
    if !(step_v > T::zero()) {
        return Err(Error::validation("voltage step must be positive"));
    }
    if let Some(i) = currents.iter().position(|c| !c.is_finite()) {
        return Err(Error::validation(format!("non-finite current at sample {i}")));
    }
    let Some(&first) = voltages.first() else {
        return Ok(());
    };
    if (first).abs() > grid_tolerance(first) {
        return Err(Error::validation(format!(
            "sweep must start at 0 V, found {first}"
        )));
    }
    for (i, w) in voltages.windows(2).enumerate() {
        let dv = w[1] - w[0];
        if !(dv > T::zero()) {
            return Err(Error::validation(format!(
                "voltage not strictly increasing at sample {}",
                i + 1
            )));
        }
        let expected = T::from_usize_lossy(i + 1) * step_v;
        if (w[1] - expected).abs() > grid_tolerance(w[1]) || (dv - step_v).abs() > grid_tolerance(w[1]) {
            return Err(Error::validation(format!(
                "voltage step at sample {} is {dv}, expected {step_v}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Parse `<N>-<P>-<K>-<pH>` (concentrations in mmol/L) from a file stem.
/// Anything else yields `None`.
pub fn parse_label<T: Scalar>(stem: &str) -> Option<CurveLabel<T>> {
    let mut tokens = stem.rsplitn(4, '-');
    let ph = tokens.next()?;
    let k = tokens.next()?;
    let p = tokens.next()?;
    let n = tokens.next()?;
    let num = |s: &str| -> Option<T> {
        let v: f64 = s.trim().parse().ok()?;
        (v.is_finite() && v >= 0.0).then(|| T::lit(v))
    };
    let composition = SolutionComposition::new(num(n)?, num(p)?, num(k)?).ok()?;
    Some(CurveLabel {
        composition,
        ph: num(ph)?,
    })
}

/// Parse a headerless two-column `voltage,current` CSV. Currents are taken as
/// amperes.
pub fn parse_curve_file<T: Scalar>(path: &Path, contents: &str) -> Result<VICurve<T>> {
    parse_curve_file_with_unit(path, contents, CurrentUnit::Amperes)
}

pub fn parse_curve_file_with_unit<T: Scalar>(
    path: &Path,
    contents: &str,
    unit: CurrentUnit,
) -> Result<VICurve<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(contents.as_bytes());
    let mut voltages = Vec::new();
    let mut currents = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(voltages.len() + 1, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let field = |i: usize| -> Result<T> {
            let raw = &record[i];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| Error::Parse {
                    row,
                    message: format!("non-numeric value {raw:?}"),
                })
        };
        voltages.push(field(0)?);
        currents.push(unit.to_amperes(field(1)?));
    }
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(parse_label);
    Ok(VICurve::new(voltages, currents)?.with_label(label))
}

/// Composite Simpson quadrature of samples `y` over the abscissae `x`.
///
/// Leading triplets of intervals use the 3/8 rule; one or two trailing
/// interval pairs use the 1/3 rule so that any interval count of at least two
/// integrates cubics exactly. A single interval falls back to the trapezoid.
pub fn simpson<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len().saturating_sub(1);
    if n == 0 {
        return T::zero();
    }
    if n == 1 {
        return (x[1] - x[0]) * (y[0] + y[1]) / T::lit(2.0);
    }
    let pairs = match n % 3 {
        0 => 0,
        2 => 1,
        _ => 2,
    };
    let triplets = (n - 2 * pairs) / 3;
    let mut total = T::zero();
    let mut i = 0;
    for _ in 0..triplets {
        let h = (x[i + 3] - x[i]) / T::lit(3.0);
        total += T::lit(3.0) * h / T::lit(8.0)
            * (y[i] + T::lit(3.0) * y[i + 1] + T::lit(3.0) * y[i + 2] + y[i + 3]);
        i += 3;
    }
    for _ in 0..pairs {
        let h = (x[i + 2] - x[i]) / T::lit(2.0);
        total += h / T::lit(3.0) * (y[i] + T::lit(4.0) * y[i + 1] + y[i + 2]);
        i += 2;
    }
    debug_assert_eq!(i, n);
    total
}

/// Area under the I-V curve, ∫ I dV, in watts.
pub fn average_power<T: Scalar>(curve: &VICurve<T>) -> Result<T> {
    if curve.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: curve.len(),
        });
    }
    Ok(simpson(curve.voltages(), curve.currents()))
}

/// Mean over successive samples of (ΔI/ΔV)·(l/A), in S/m.
pub fn conductivity<T: Scalar>(curve: &VICurve<T>, geometry: &CellGeometry<T>) -> Result<T> {
    if curve.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: curve.len(),
        });
    }
    geometry.validate()?;
    let v = curve.voltages();
    let i = curve.currents();
    let k = geometry.cell_constant();
    let sum: T = (1..curve.len())
        .map(|n| (i[n] - i[n - 1]) / (v[n] - v[n - 1]) * k)
        .sum();
    Ok(sum / T::from_usize_lossy(curve.intervals()))
}

/// The electrical features of one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFeatures<T> {
    pub avg_power_w: T,
    pub conductivity_s_per_m: T,
}

pub fn features<T: Scalar>(curve: &VICurve<T>, geometry: &CellGeometry<T>) -> Result<CurveFeatures<T>> {
    Ok(CurveFeatures {
        avg_power_w: average_power(curve)?,
        conductivity_s_per_m: conductivity(curve, geometry)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid_csv(f: impl Fn(f64) -> f64) -> String {
        (0..DEFAULT_SAMPLES)
            .map(|i| {
                let v = i as f64 * 0.05;
                format!("{v},{}\n", f(v))
            })
            .collect()
    }

    #[test]
    fn labelled_file_is_parsed() {
        let text = grid_csv(|v| 0.01 * v);
        let c: VICurve<f64> = parse_curve_file(Path::new("data/120-80-300-7.2.csv"), &text).unwrap();
        assert_eq!(c.len(), 101);
        let label = c.label().unwrap();
        assert_eq!(label.ph, 7.2);
        assert_eq!(label.composition.c_hno3, 120.0);
        assert_eq!(label.composition.c_h3po4, 80.0);
        assert_eq!(label.composition.c_koh, 300.0);
    }

    #[test]
    fn unlabelled_stem_is_not_an_error() {
        let text = grid_csv(|v| 0.01 * v);
        let c: VICurve<f64> = parse_curve_file(Path::new("sweep.csv"), &text).unwrap();
        assert!(c.label().is_none());
        assert!(parse_label::<f64>("soil-1-2-3-x").is_none());
        assert!(parse_label::<f64>("1-2-3").is_none());
    }

    #[test]
    fn malformed_row_reports_row_index() {
        let text = "0.0,0.0\n0.05,0.001\n0.10,abc\n0.15,0.003\n";
        let err = parse_curve_file::<f64>(Path::new("x.csv"), text).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        let text = "0.0,0.0,1\n";
        let err = parse_curve_file::<f64>(Path::new("x.csv"), text).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }), "{err}");
    }

    #[test]
    fn non_monotone_voltage_is_rejected() {
        let text = "0.0,0.0\n0.05,0.001\n0.05,0.002\n0.10,0.003\n";
        let err = parse_curve_file::<f64>(Path::new("x.csv"), text).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn milliampere_files_are_rescaled() {
        let text = grid_csv(|v| 20.0 * v);
        let c: VICurve<f64> =
            parse_curve_file_with_unit(Path::new("s.csv"), &text, CurrentUnit::Milliamperes).unwrap();
        assert_relative_eq!(average_power(&c).unwrap(), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn average_power_examples() {
        let lin = VICurve::<f64>::canonical(|v| 0.02 * v);
        assert_relative_eq!(average_power(&lin).unwrap(), 0.25, max_relative = 1e-12);
        let zero = VICurve::<f64>::canonical(|_| 0.0);
        assert_eq!(average_power(&zero).unwrap(), 0.0);
        let cubic = VICurve::<f64>::canonical(|v| v * v * v);
        assert!((average_power(&cubic).unwrap() - 156.25).abs() < 1e-9);
    }

    #[test]
    fn simpson_is_exact_on_cubics_for_every_interval_count() {
        for intervals in 2..40 {
            let x: Vec<f64> = (0..=intervals).map(|i| i as f64 * 0.1).collect();
            let y: Vec<f64> = x.iter().map(|&v| 2.0 * v * v * v - v * v + 3.0).collect();
            let b = x[intervals];
            let exact = 0.5 * b.powi(4) - b.powi(3) / 3.0 + 3.0 * b;
            assert_relative_eq!(simpson(&x, &y), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn short_curves_are_rejected() {
        let c = VICurve::<f64>::from_fn(3, 0.05, |v| v).unwrap();
        assert!(matches!(
            average_power(&c),
            Err(Error::InsufficientData { needed: 4, got: 3 })
        ));
        let c = VICurve::<f64>::from_fn(1, 0.05, |v| v).unwrap();
        assert!(conductivity(&c, &CellGeometry::default()).is_err());
        let c = VICurve::<f64>::from_fn(4, 0.05, |v| v).unwrap();
        assert!(average_power(&c).is_ok());
    }

    #[test]
    fn conductivity_examples() {
        let g = CellGeometry::<f64>::default();
        let ramp = VICurve::<f64>::canonical(|v| 0.02 * v);
        assert_relative_eq!(conductivity(&ramp, &g).unwrap(), 7.142857142857, max_relative = 1e-9);
        let flat = VICurve::<f64>::canonical(|_| 0.3);
        assert_eq!(conductivity(&flat, &g).unwrap(), 0.0);
        let coef = g.per_interval_coefficient(0.05, 100);
        assert!((coef - 71.42857142857).abs() < 1e-9);
    }

    #[test]
    fn geometry_must_be_positive() {
        assert!(CellGeometry::new(0.0_f64, 1.0).is_err());
        assert!(CellGeometry::new(1.0_f64, -1.0).is_err());
        assert!(CellGeometry::new(0.045_f64, 1.26e-4).is_ok());
    }

    #[test]
    fn single_precision_grid_is_accepted() {
        let c = VICurve::<f32>::canonical(|v| 0.02 * v);
        assert!((average_power(&c).unwrap() - 0.25).abs() < 1e-5);
    }

    fn currents() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0..1.0_f64, DEFAULT_SAMPLES)
    }

    fn curve(i: Vec<f64>) -> VICurve<f64> {
        let v = (0..DEFAULT_SAMPLES).map(|k| k as f64 * 0.05).collect();
        VICurve::new(v, i).unwrap()
    }

    proptest! {
        #[test]
        fn average_power_is_linear(a in currents(), b in currents(), alpha in -10.0..10.0_f64, beta in -10.0..10.0_f64) {
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
            let lhs = average_power(&curve(mix)).unwrap();
            let rhs = alpha * average_power(&curve(a)).unwrap() + beta * average_power(&curve(b)).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn conductivity_ignores_offsets(a in currents(), offset in -5.0..5.0_f64) {
            let g = CellGeometry::default();
            let shifted: Vec<f64> = a.iter().map(|x| x + offset).collect();
            let s0 = conductivity(&curve(a), &g).unwrap();
            let s1 = conductivity(&curve(shifted), &g).unwrap();
            prop_assert!((s0 - s1).abs() < 1e-8 * (1.0 + s0.abs()));
        }

        #[test]
        fn conductivity_scales_with_cell_constant(a in currents()) {
            let g = CellGeometry::<f64>::default();
            let c = curve(a);
            let base = conductivity(&c, &g).unwrap();
            let long = conductivity(&c, &CellGeometry { separation_m: 2.0 * g.separation_m, ..g }).unwrap();
            let wide = conductivity(&c, &CellGeometry { area_m2: 2.0 * g.area_m2, ..g }).unwrap();
            prop_assert!((long - 2.0 * base).abs() < 1e-9 * (1.0 + base.abs()));
            prop_assert!((wide - 0.5 * base).abs() < 1e-9 * (1.0 + base.abs()));
        }

        #[test]
        fn monotone_currents_give_non_negative_conductivity(mut a in currents()) {
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            prop_assert!(conductivity(&curve(a), &CellGeometry::default()).unwrap() >= 0.0);
        }
    }
}
