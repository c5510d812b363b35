//! From predicted phantom concentrations to soil nutrient loads.
//!
//! A prediction in mmol/L of H3PO4 or KOH is scaled by a per-model
//! calibration factor, halved to the oxide (2 H3PO4 -> P2O5, 2 KOH -> K2O),
//! converted to mg/L with the oxide's molar mass and finally to kg/ha through
//! the mass of the plough layer.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::models::{ModelKind, Pipeline};
use crate::phantom::Compound;
use crate::scalar::{mean, Scalar};

pub const SOIL_HEADER: [&str; 4] = ["sample_id", "ph", "conductivity_s_per_m", "avg_power_w"];
pub const LAB_HEADER: [&str; 2] = ["lab_p2o5_kg_ha", "lab_k2o_kg_ha"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nutrient {
    P2o5,
    K2o,
}

impl Nutrient {
    pub const ALL: [Nutrient; 2] = [Nutrient::P2o5, Nutrient::K2o];

    pub fn key(self) -> &'static str {
        match self {
            Nutrient::P2o5 => "p2o5",
            Nutrient::K2o => "k2o",
        }
    }

    /// The phantom compound that stands in for this nutrient.
    pub fn compound(self) -> Compound {
        match self {
            Nutrient::P2o5 => Compound::H3po4,
            Nutrient::K2o => Compound::Koh,
        }
    }

    /// Column of the model output holding the compound.
    pub fn target_column(self) -> usize {
        match self {
            Nutrient::P2o5 => 1,
            Nutrient::K2o => 2,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Nutrient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Nutrient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p2o5" | "p" | "h3po4" => Ok(Nutrient::P2o5),
            "k2o" | "k" | "koh" => Ok(Nutrient::K2o),
            other => Err(Error::validation(format!("unknown nutrient {other:?}"))),
        }
    }
}

/// Soil and molar constants of the unit chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionConstants<T> {
    /// g/cm³
    pub bulk_density: T,
    /// m
    pub depth_m: T,
    pub area_ha: T,
    pub molar_mass_hno3: T,
    pub molar_mass_h3po4: T,
    pub molar_mass_koh: T,
    pub molar_mass_k2o: T,
    pub molar_mass_p2o5: T,
}

impl<T: Scalar> Default for ConversionConstants<T> {
    fn default() -> Self {
        Self {
            bulk_density: T::lit(1.5),
            depth_m: T::lit(0.15),
            area_ha: T::one(),
            molar_mass_hno3: T::lit(Compound::Hno3.molar_mass()),
            molar_mass_h3po4: T::lit(Compound::H3po4.molar_mass()),
            molar_mass_koh: T::lit(Compound::Koh.molar_mass()),
            molar_mass_k2o: T::lit(94.2),
            molar_mass_p2o5: T::lit(141.94),
        }
    }
}

impl<T: Scalar> ConversionConstants<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("bulk_density", self.bulk_density),
            ("depth_m", self.depth_m),
            ("area_ha", self.area_ha),
            ("molar_mass_hno3", self.molar_mass_hno3),
            ("molar_mass_h3po4", self.molar_mass_h3po4),
            ("molar_mass_koh", self.molar_mass_koh),
            ("molar_mass_k2o", self.molar_mass_k2o),
            ("molar_mass_p2o5", self.molar_mass_p2o5),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Apply `key = value` overrides using the field names.
    pub fn with_overrides(mut self, kv: &KeyValues) -> Result<Self> {
        let fields: [(&str, &mut T); 8] = [
            ("bulk_density", &mut self.bulk_density),
            ("depth_m", &mut self.depth_m),
            ("area_ha", &mut self.area_ha),
            ("molar_mass_hno3", &mut self.molar_mass_hno3),
            ("molar_mass_h3po4", &mut self.molar_mass_h3po4),
            ("molar_mass_koh", &mut self.molar_mass_koh),
            ("molar_mass_k2o", &mut self.molar_mass_k2o),
            ("molar_mass_p2o5", &mut self.molar_mass_p2o5),
        ];
        for (name, slot) in fields {
            if let Some(v) = kv.get_f64(name)? {
                *slot = T::lit(v);
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn compound_molar_mass(&self, compound: Compound) -> T {
        match compound {
            Compound::Hno3 => self.molar_mass_hno3,
            Compound::H3po4 => self.molar_mass_h3po4,
            Compound::Koh => self.molar_mass_koh,
        }
    }

    pub fn oxide_molar_mass(&self, nutrient: Nutrient) -> T {
        match nutrient {
            Nutrient::P2o5 => self.molar_mass_p2o5,
            Nutrient::K2o => self.molar_mass_k2o,
        }
    }

    /// Mass of soil in the sampled layer, kg.
    pub fn soil_mass_kg(&self) -> T {
        // g/cm³ -> kg/m³ is ×1000, 1 ha is 10⁴ m².
        self.bulk_density * T::lit(1000.0) * self.depth_m * self.area_ha * T::lit(1.0e4)
    }

    /// kg/ha per mg/L (mg/kg) of extract.
    pub fn ppm_factor(&self) -> T {
        self.soil_mass_kg() / self.area_ha / T::lit(1.0e6)
    }
}

/// mmol/L to mg/L.
pub fn mmol_to_ppm<T: Scalar>(conc_mmol: T, molar_mass: T) -> Result<T> {
    if !(conc_mmol >= T::zero()) {
        return Err(Error::validation(format!("concentration must be non-negative, got {conc_mmol}")));
    }
    Ok(conc_mmol * molar_mass)
}

/// mg/L to kg/ha.
pub fn ppm_to_kg_per_ha<T: Scalar>(ppm: T, constants: &ConversionConstants<T>) -> T {
    ppm * constants.ppm_factor()
}

pub fn soil_mass_kg_per_ha<T: Scalar>(constants: &ConversionConstants<T>) -> T {
    constants.soil_mass_kg() / constants.area_ha
}

/// Moles of oxide formed from the compound, two compound moles per oxide.
pub fn compound_to_oxide<T: Scalar>(conc_mmol: T, compound: Compound) -> Result<T> {
    if !(conc_mmol >= T::zero()) {
        return Err(Error::validation(format!("concentration must be non-negative, got {conc_mmol}")));
    }
    match compound {
        Compound::H3po4 | Compound::Koh => Ok(conc_mmol / T::lit(2.0)),
        Compound::Hno3 => Err(Error::validation("HNO3 has no oxide basis in the nutrient chain")),
    }
}

/// Full chain for one nutrient from a compound concentration (already
/// calibrated) to kg/ha.
pub fn compound_mmol_to_kg_per_ha<T: Scalar>(
    conc_mmol: T,
    nutrient: Nutrient,
    constants: &ConversionConstants<T>,
) -> Result<T> {
    let oxide = compound_to_oxide(conc_mmol, nutrient.compound())?;
    let ppm = mmol_to_ppm(oxide, constants.oxide_molar_mass(nutrient))?;
    Ok(ppm_to_kg_per_ha(ppm, constants))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoilSample<T> {
    pub id: String,
    pub ph: T,
    pub conductivity: T,
    pub avg_power: T,
    /// Lab P2O5 and K2O, kg/ha.
    pub lab: Option<[T; 2]>,
}

impl<T: Scalar> SoilSample<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ph", self.ph), ("conductivity", self.conductivity), ("avg_power", self.avg_power)] {
            if !v.is_finite() {
                return Err(Error::validation(format!("sample {}: {name} is not finite", self.id)));
            }
        }
        if let Some(lab) = self.lab {
            for (n, v) in Nutrient::ALL.iter().zip(lab) {
                if !(v.is_finite() && v > T::zero()) {
                    return Err(Error::validation(format!(
                        "sample {}: lab {n} must be positive, got {v}",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn lab_value(&self, nutrient: Nutrient) -> Option<T> {
        self.lab.map(|l| l[nutrient.index()])
    }

    pub fn features(&self) -> [T; 3] {
        [self.ph, self.conductivity, self.avg_power]
    }
}

/// Read `sample_id,ph,conductivity_s_per_m,avg_power_w[,lab_p2o5_kg_ha,lab_k2o_kg_ha]`.
/// Lab cells may be left empty on individual rows.
pub fn read_soil_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<SoilSample<T>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let with_lab = if header == SOIL_HEADER {
        false
    } else if header.len() == 6 && header[..4] == SOIL_HEADER && header[4..] == LAB_HEADER {
        true
    } else {
        return Err(Error::validation(format!(
            "soil header must be {}[,{}], found {}",
            SOIL_HEADER.join(","),
            LAB_HEADER.join(","),
            header.join(",")
        )));
    };
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = i + 2;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        let num = |j: usize| {
            record[j].parse::<f64>().map(T::lit).map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric {}: {:?}", header[j], &record[j]),
            })
        };
        let lab = if with_lab && !(record[4].is_empty() && record[5].is_empty()) {
            Some([num(4)?, num(5)?])
        } else {
            None
        };
        let sample = SoilSample {
            id: record[0].to_string(),
            ph: num(1)?,
            conductivity: num(2)?,
            avg_power: num(3)?,
            lab,
        };
        sample.validate().map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        out.push(sample);
    }
    Ok(out)
}

pub fn write_soil_csv<T: Scalar, W: Write>(samples: &[SoilSample<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let with_lab = samples.iter().any(|s| s.lab.is_some());
    let mut header: Vec<&str> = SOIL_HEADER.to_vec();
    if with_lab {
        header.extend(LAB_HEADER);
    }
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![s.id.clone(), s.ph.to_string(), s.conductivity.to_string(), s.avg_power.to_string()];
        if with_lab {
            match s.lab {
                Some([p, k]) => rec.extend([p.to_string(), k.to_string()]),
                None => rec.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// How the calibration factor is pooled over calibration samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CalibrationMethod {
    /// Mean of per-sample `lab / prediction`.
    #[default]
    MeanOfRatios,
    /// `mean(lab) / mean(prediction)`.
    RatioOfMeans,
}

/// Per model and nutrient multiplicative factors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationSet<T> {
    factors: BTreeMap<(ModelKind, Nutrient), T>,
    pub sample_ids: Vec<String>,
}

impl<T: Scalar> CalibrationSet<T> {
    pub fn new() -> Self {
        Self {
            factors: BTreeMap::new(),
            sample_ids: Vec::new(),
        }
    }

    /// Factor 1 for both nutrients of one model.
    pub fn identity(model: ModelKind) -> Self {
        let mut c = Self::new();
        for n in Nutrient::ALL {
            c.factors.insert((model, n), T::one());
        }
        c
    }

    pub fn set(&mut self, model: ModelKind, nutrient: Nutrient, factor: T) -> Result<()> {
        if !(factor.is_finite() && factor > T::zero()) {
            return Err(Error::validation(format!(
                "calibration factor {model}.{nutrient} must be positive, got {factor}"
            )));
        }
        self.factors.insert((model, nutrient), factor);
        Ok(())
    }

    pub fn factor(&self, model: ModelKind, nutrient: Nutrient) -> Result<T> {
        self.factors
            .get(&(model, nutrient))
            .copied()
            .ok_or_else(|| Error::CalibrationMissing {
                model: model.to_string(),
                nutrient: nutrient.to_string(),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModelKind, Nutrient, T)> + '_ {
        self.factors.iter().map(|(&(m, n), &f)| (m, n, f))
    }

    pub fn merge(&mut self, other: &CalibrationSet<T>) {
        self.factors.extend(other.factors.iter().map(|(k, v)| (*k, *v)));
        for id in &other.sample_ids {
            if !self.sample_ids.contains(id) {
                self.sample_ids.push(id.clone());
            }
        }
    }

    /// Keys are `model.nutrient`, e.g. `mlp.k2o = 0.234`; an optional
    /// `samples` key lists the calibration sample ids.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut c = Self::new();
        for (key, value) in kv.iter() {
            if key == "samples" {
                c.sample_ids = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
                continue;
            }
            let (model, nutrient) = key
                .split_once('.')
                .ok_or_else(|| Error::validation(format!("calibration key {key:?} is not model.nutrient")))?;
            let v: f64 = value
                .parse()
                .map_err(|_| Error::validation(format!("{key}: {value:?} is not a number")))?;
            c.set(model.parse()?, nutrient.parse()?, T::lit(v))?;
        }
        Ok(c)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        for (m, n, f) in self.iter() {
            kv.insert(format!("{m}.{n}"), f.to_string());
        }
        if !self.sample_ids.is_empty() {
            kv.insert("samples", self.sample_ids.join(","));
        }
        kv
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_key_values(&KeyValues::parse(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_key_values().to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Predicted nutrient loads for one sample, kg/ha.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilPrediction<T> {
    pub p2o5: T,
    pub k2o: T,
}

impl<T: Scalar> SoilPrediction<T> {
    pub fn get(&self, nutrient: Nutrient) -> T {
        match nutrient {
            Nutrient::P2o5 => self.p2o5,
            Nutrient::K2o => self.k2o,
        }
    }
}

/// Convert raw model outputs (rows of HNO3, H3PO4, KOH in mmol/L) to kg/ha.
/// Negative concentrations are clipped to zero. Nitrogen is not reported.
pub fn outputs_to_soil<T: Scalar>(
    model: ModelKind,
    outputs: &Array2<T>,
    calibration: &CalibrationSet<T>,
    constants: &ConversionConstants<T>,
) -> Result<Vec<SoilPrediction<T>>> {
    if outputs.ncols() != 3 {
        return Err(Error::validation(format!("expected 3 model outputs, got {}", outputs.ncols())));
    }
    constants.validate()?;
    let factors = [calibration.factor(model, Nutrient::P2o5)?, calibration.factor(model, Nutrient::K2o)?];
    outputs
        .rows()
        .into_iter()
        .map(|row| {
            let load = |n: Nutrient| {
                let mmol = row[n.target_column()].max(T::zero()) * factors[n.index()];
                compound_mmol_to_kg_per_ha(mmol, n, constants)
            };
            Ok(SoilPrediction {
                p2o5: load(Nutrient::P2o5)?,
                k2o: load(Nutrient::K2o)?,
            })
        })
        .collect()
}

/// Run a trained pipeline on soil samples and convert to kg/ha.
pub fn predict_soil<T: Scalar>(
    pipeline: &Pipeline<T>,
    samples: &[SoilSample<T>],
    calibration: &CalibrationSet<T>,
    constants: &ConversionConstants<T>,
) -> Result<Vec<SoilPrediction<T>>> {
    let x = Array2::from_shape_fn((samples.len(), 3), |(i, j)| samples[i].features()[j]);
    let outputs = pipeline.predict(x.view())?;
    outputs_to_soil(pipeline.model.kind(), &outputs, calibration, constants)
}

/// Fit factors from the first `m` samples, which must carry lab values.
/// `uncalibrated` are predictions made with factor 1.
pub fn calibrate<T: Scalar>(
    model: ModelKind,
    uncalibrated: &[SoilPrediction<T>],
    samples: &[SoilSample<T>],
    m: usize,
    method: CalibrationMethod,
) -> Result<CalibrationSet<T>> {
    if uncalibrated.len() != samples.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} samples",
            uncalibrated.len(),
            samples.len()
        )));
    }
    if m == 0 || m > samples.len() {
        return Err(Error::InsufficientData {
            needed: m.max(1),
            got: samples.len(),
        });
    }
    let mut set = CalibrationSet::new();
    for nutrient in Nutrient::ALL {
        let mut lab = Vec::with_capacity(m);
        let mut pred = Vec::with_capacity(m);
        for (s, p) in samples[..m].iter().zip(uncalibrated) {
            let l = s
                .lab_value(nutrient)
                .ok_or_else(|| Error::validation(format!("calibration sample {} has no lab values", s.id)))?;
            let v = p.get(nutrient);
            if method == CalibrationMethod::MeanOfRatios && v == T::zero() {
                return Err(Error::CalibrationDegenerate {
                    nutrient: nutrient.to_string(),
                    sample: s.id.clone(),
                });
            }
            lab.push(l);
            pred.push(v);
        }
        let factor = match method {
            CalibrationMethod::MeanOfRatios => {
                let ratios: Vec<T> = lab.iter().zip(&pred).map(|(&l, &p)| l / p).collect();
                mean(&ratios)
            }
            CalibrationMethod::RatioOfMeans => {
                let denom = mean(&pred);
                if denom == T::zero() {
                    return Err(Error::CalibrationDegenerate {
                        nutrient: nutrient.to_string(),
                        sample: "all".into(),
                    });
                }
                mean(&lab) / denom
            }
        };
        set.set(model, nutrient, factor)?;
    }
    set.sample_ids = samples[..m].iter().map(|s| s.id.clone()).collect();
    Ok(set)
}

/// Denominator of the percentage error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PercentErrorBasis {
    /// `|pred - lab| / lab`
    #[default]
    Lab,
    /// `|pred - lab| / pred`
    Prediction,
}

/// Mean absolute percentage error against lab values.
pub fn percentage_error<T: Scalar>(predictions: &[T], lab: &[T]) -> Result<T> {
    percentage_error_with(predictions, lab, PercentErrorBasis::Lab)
}

pub fn percentage_error_with<T: Scalar>(predictions: &[T], lab: &[T], basis: PercentErrorBasis) -> Result<T> {
    if predictions.len() != lab.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} lab values",
            predictions.len(),
            lab.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let terms = predictions
        .iter()
        .zip(lab)
        .map(|(&p, &l)| {
            let denom = match basis {
                PercentErrorBasis::Lab => l,
                PercentErrorBasis::Prediction => p,
            };
            if denom == T::zero() {
                return Err(Error::validation("percentage error with a zero denominator"));
            }
            Ok((p - l).abs() / denom.abs() * T::lit(100.0))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(mean(&terms))
}

/// Per-nutrient MAPE over samples that carry lab values.
pub fn evaluation_errors<T: Scalar>(
    predictions: &[SoilPrediction<T>],
    samples: &[SoilSample<T>],
    basis: PercentErrorBasis,
) -> Result<[T; 2]> {
    let mut out = [T::zero(); 2];
    for n in Nutrient::ALL {
        let (pred, lab): (Vec<T>, Vec<T>) = predictions
            .iter()
            .zip(samples)
            .filter_map(|(p, s)| s.lab_value(n).map(|l| (p.get(n), l)))
            .unzip();
        out[n.index()] = percentage_error_with(&pred, &lab, basis)?;
    }
    Ok(out)
}

/// Table of lab and predicted loads per sample, with a closing
/// `mape_percent` row when lab values are available.
pub fn soil_report_csv<T: Scalar>(
    model: ModelKind,
    predictions: &[SoilPrediction<T>],
    samples: &[SoilSample<T>],
    mape: Option<[T; 2]>,
) -> String {
    let mut s = String::from("sample_id,model,lab_p2o5_kg_ha,pred_p2o5_kg_ha,lab_k2o_kg_ha,pred_k2o_kg_ha\n");
    let opt = |v: Option<T>| v.map(|v| v.to_string()).unwrap_or_default();
    for (p, sample) in predictions.iter().zip(samples) {
        s.push_str(&format!(
            "{},{model},{},{},{},{}\n",
            sample.id,
            opt(sample.lab_value(Nutrient::P2o5)),
            p.p2o5,
            opt(sample.lab_value(Nutrient::K2o)),
            p.k2o
        ));
    }
    if let Some([p, k]) = mape {
        s.push_str(&format!("mape_percent,{model},,{p},,{k}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ppm_examples() {
        assert_eq!(mmol_to_ppm(80.0, 63.0).unwrap(), 5040.0);
        assert_eq!(mmol_to_ppm(5.0, 98.0).unwrap(), 490.0);
        assert_eq!(mmol_to_ppm(0.0, 98.0).unwrap(), 0.0);
        assert!(mmol_to_ppm(-1.0, 98.0).is_err());
    }

    #[test]
    fn kg_per_ha_examples() {
        let c = ConversionConstants::<f64>::default();
        assert!((c.ppm_factor() - 2.25).abs() < 1e-12);
        assert_relative_eq!(ppm_to_kg_per_ha(100.0, &c), 225.0, max_relative = 1e-12);
        assert_relative_eq!(soil_mass_kg_per_ha(&c), 2.25e6, max_relative = 1e-12);
        let dense = ConversionConstants {
            bulk_density: 3.0,
            ..c
        };
        assert_relative_eq!(dense.ppm_factor(), 4.5, max_relative = 1e-12);
    }

    #[test]
    fn oxide_examples() {
        assert_eq!(compound_to_oxide(2.0, Compound::Koh).unwrap(), 1.0);
        assert_eq!(compound_to_oxide(2.0, Compound::H3po4).unwrap(), 1.0);
        assert_eq!(compound_to_oxide(0.0, Compound::Koh).unwrap(), 0.0);
        assert!(compound_to_oxide(2.0, Compound::Hno3).is_err());
    }

    #[test]
    fn koh_chain_uses_oxide_mass() {
        let c = ConversionConstants::<f64>::default();
        let kg = compound_mmol_to_kg_per_ha(10.0, Nutrient::K2o, &c).unwrap();
        assert_relative_eq!(kg, 1059.75, max_relative = 1e-12);
        let halved_compound = 10.0 * (56.1 / 2.0) * 2.25;
        assert!((kg - halved_compound).abs() > 100.0);
    }

    #[test]
    fn zero_prediction_gives_zero_load() {
        let out = Array2::<f64>::zeros((2, 3));
        let cal = CalibrationSet::identity(ModelKind::Forest);
        let p = outputs_to_soil(ModelKind::Forest, &out, &cal, &ConversionConstants::default()).unwrap();
        assert!(p.iter().all(|p| p.p2o5 == 0.0 && p.k2o == 0.0));
        assert!(matches!(
            outputs_to_soil(ModelKind::Mlp, &out, &cal, &ConversionConstants::default()),
            Err(Error::CalibrationMissing { .. })
        ));
    }

    fn sample(id: &str, lab: [f64; 2]) -> SoilSample<f64> {
        SoilSample {
            id: id.into(),
            ph: 7.0,
            conductivity: 0.1,
            avg_power: 0.01,
            lab: Some(lab),
        }
    }

    #[test]
    fn calibration_examples() {
        let samples = vec![sample("a", [20.0, 200.0]), sample("b", [10.0, 300.0])];
        let exact: Vec<_> = samples
            .iter()
            .map(|s| SoilPrediction {
                p2o5: s.lab.unwrap()[0],
                k2o: s.lab.unwrap()[1],
            })
            .collect();
        let c = calibrate(ModelKind::Knn, &exact, &samples, 2, CalibrationMethod::MeanOfRatios).unwrap();
        assert_eq!(c.factor(ModelKind::Knn, Nutrient::P2o5).unwrap(), 1.0);
        assert_eq!(c.factor(ModelKind::Knn, Nutrient::K2o).unwrap(), 1.0);
        let doubled: Vec<_> = exact
            .iter()
            .map(|p| SoilPrediction {
                p2o5: 2.0 * p.p2o5,
                k2o: 2.0 * p.k2o,
            })
            .collect();
        for method in [CalibrationMethod::MeanOfRatios, CalibrationMethod::RatioOfMeans] {
            let c = calibrate(ModelKind::Knn, &doubled, &samples, 2, method).unwrap();
            assert_relative_eq!(c.factor(ModelKind::Knn, Nutrient::K2o).unwrap(), 0.5);
        }
        assert_eq!(c.sample_ids, vec!["a", "b"]);
        let mut zero = exact.clone();
        zero[1].k2o = 0.0;
        assert!(matches!(
            calibrate(ModelKind::Knn, &zero, &samples, 2, CalibrationMethod::MeanOfRatios),
            Err(Error::CalibrationDegenerate { .. })
        ));
    }

    #[test]
    fn mean_of_ratios_differs_from_ratio_of_means() {
        let samples = vec![sample("a", [10.0, 100.0]), sample("b", [10.0, 100.0])];
        let preds = vec![
            SoilPrediction { p2o5: 5.0, k2o: 50.0 },
            SoilPrediction { p2o5: 20.0, k2o: 200.0 },
        ];
        let a = calibrate(ModelKind::Knn, &preds, &samples, 2, CalibrationMethod::MeanOfRatios).unwrap();
        let b = calibrate(ModelKind::Knn, &preds, &samples, 2, CalibrationMethod::RatioOfMeans).unwrap();
        assert_relative_eq!(a.factor(ModelKind::Knn, Nutrient::P2o5).unwrap(), 1.25);
        assert_relative_eq!(b.factor(ModelKind::Knn, Nutrient::P2o5).unwrap(), 0.8);
    }

    #[test]
    fn calibration_file_round_trip() {
        let mut c = CalibrationSet::<f64>::new();
        c.set(ModelKind::Mlp, Nutrient::P2o5, 0.054).unwrap();
        c.set(ModelKind::Mlp, Nutrient::K2o, 0.234).unwrap();
        c.set(ModelKind::Forest, Nutrient::K2o, 0.123).unwrap();
        c.sample_ids = vec!["s1".into(), "s2".into()];
        let text = c.to_key_values().to_text();
        assert!(text.contains("mlp.k2o = 0.234"));
        let back = CalibrationSet::from_key_values(&KeyValues::parse(&text).unwrap()).unwrap();
        assert_eq!(back, c);
        let aliased = KeyValues::parse("nn.K2O = 0.234\nrf.p2o5 = 0.093").unwrap();
        let a = CalibrationSet::<f64>::from_key_values(&aliased).unwrap();
        assert_eq!(a.factor(ModelKind::Mlp, Nutrient::K2o).unwrap(), 0.234);
        assert!(CalibrationSet::<f64>::from_key_values(&KeyValues::parse("mlp.k2o = -1").unwrap()).is_err());
    }

    #[test]
    fn percentage_error_examples() {
        assert_eq!(percentage_error(&[5.0, 7.0], &[5.0, 7.0]).unwrap(), 0.0);
        assert_relative_eq!(percentage_error(&[110.0, 90.0], &[100.0, 100.0]).unwrap(), 10.0);
        assert!(percentage_error(&[1.0], &[0.0]).is_err());
        assert_relative_eq!(
            percentage_error_with(&[50.0], &[100.0], PercentErrorBasis::Prediction).unwrap(),
            100.0
        );
    }

    #[test]
    fn soil_csv_round_trip() {
        let mut samples = vec![sample("s1", [22.66, 279.0]), sample("s2", [13.39, 157.0])];
        samples[1].lab = None;
        let mut buf = Vec::new();
        write_soil_csv(&samples, &mut buf).unwrap();
        let back: Vec<SoilSample<f64>> = read_soil_csv(buf.as_slice()).unwrap();
        assert_eq!(back, samples);
        let plain = "sample_id,ph,conductivity_s_per_m,avg_power_w\nx,6.5,0.2,0.01\n";
        let s: Vec<SoilSample<f64>> = read_soil_csv(plain.as_bytes()).unwrap();
        assert!(s[0].lab.is_none());
        let bad = "sample_id,ph,conductivity_s_per_m,avg_power_w,lab_p2o5_kg_ha,lab_k2o_kg_ha\nx,6.5,0.2,0.01,0,3\n";
        assert!(read_soil_csv::<f64, _>(bad.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn chain_is_linear_in_factor(
            koh in 0.0..500.0_f64,
            h3po4 in 0.0..5.0_f64,
            a in 0.01..2.0_f64,
            b in 0.01..2.0_f64,
        ) {
            let out = Array2::from_shape_vec((1, 3), vec![1.0, h3po4, koh]).unwrap();
            let c = ConversionConstants::default();
            let mut ca = CalibrationSet::new();
            let mut cb = CalibrationSet::new();
            for n in Nutrient::ALL {
                ca.set(ModelKind::Linear, n, a).unwrap();
                cb.set(ModelKind::Linear, n, b).unwrap();
            }
            let pa = outputs_to_soil(ModelKind::Linear, &out, &ca, &c).unwrap()[0];
            let pb = outputs_to_soil(ModelKind::Linear, &out, &cb, &c).unwrap()[0];
            prop_assert!((pa.k2o * b - pb.k2o * a).abs() <= 1e-9 * (1.0 + pa.k2o * b));
            prop_assert!((pa.p2o5 * b - pb.p2o5 * a).abs() <= 1e-9 * (1.0 + pa.p2o5 * b));
        }
    }
}
