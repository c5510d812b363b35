use std::fs::File;

use anyhow::{bail, Context, Result};
use npk_core::agronomy::{
    calibrate, evaluation_errors, predict_soil, read_soil_csv, soil_report_csv, CalibrationMethod, CalibrationSet,
    ConversionConstants, Nutrient, PercentErrorBasis,
};
use npk_core::models::Pipeline;

use super::write;
use crate::args::{BasisArg, MethodArg, PredictArgs};
use crate::settings::Settings;

pub fn run(s: &Settings, a: PredictArgs) -> Result<()> {
    let pipeline = Pipeline::<f64>::load(&a.model)?;
    let kind = pipeline.model.kind();
    let file = File::open(&a.samples).with_context(|| format!("opening {}", a.samples.display()))?;
    let samples = read_soil_csv::<f64, _>(file).with_context(|| format!("reading {}", a.samples.display()))?;
    if samples.is_empty() {
        bail!("{} holds no samples", a.samples.display());
    }
    let constants = ConversionConstants::default().with_overrides(&s.kv)?;
    let method = match a.method {
        MethodArg::MeanOfRatios => CalibrationMethod::MeanOfRatios,
        MethodArg::RatioOfMeans => CalibrationMethod::RatioOfMeans,
    };
    let basis = match a.error_basis {
        BasisArg::Lab => PercentErrorBasis::Lab,
        BasisArg::Prediction => PercentErrorBasis::Prediction,
    };

    let (calibration, first_eval) = match (a.calibrate_first, &a.calibration) {
        (Some(m), _) => {
            let uncalibrated = predict_soil(&pipeline, &samples, &CalibrationSet::identity(kind), &constants)?;
            (calibrate(kind, &uncalibrated, &samples, m, method)?, m)
        }
        (None, Some(path)) => (CalibrationSet::load(path)?, 0),
        (None, None) if samples.iter().any(|s| s.lab.is_some()) => {
            bail!("no calibration: pass --calibrate-first N to fit factors on the first N samples, or --calibration FILE")
        }
        (None, None) => bail!(
            "the samples carry no lab columns, so factors cannot be fitted; pass --calibration FILE with lines like `{kind}.k2o = 0.234`"
        ),
    };
    if let Some(path) = &a.save_calibration {
        calibration.save(path)?;
    }

    let evaluation = &samples[first_eval..];
    let predictions = predict_soil(&pipeline, evaluation, &calibration, &constants)?;
    let mape = if evaluation.iter().any(|s| s.lab.is_some()) {
        Some(evaluation_errors(&predictions, evaluation, basis)?)
    } else {
        None
    };
    write(&a.output, &soil_report_csv(kind, &predictions, evaluation, mape))?;

    println!("seed {}: {kind} predictions for {} samples", s.seed, evaluation.len());
    for n in Nutrient::ALL {
        println!("  factor {kind}.{n} = {}", calibration.factor(kind, n)?);
    }
    if let Some([p, k]) = mape {
        println!("MAPE P2O5 {p:.2}%  K2O {k:.2}%");
    }
    if evaluation.is_empty() {
        eprintln!("warning: every sample was used for calibration; nothing left to evaluate");
    }
    println!("written to {}", a.output.display());
    Ok(())
}
