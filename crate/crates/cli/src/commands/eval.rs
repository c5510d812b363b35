use anyhow::{Context, Result};
use npk_core::dataset::make_kfold;
use npk_core::eval::{compare_models, folds_to_csv, run_cv_with, svg, ScalingScope, Split};
use npk_core::models::ModelKind;

use super::{model_spec, preprocessing_modes, read_table, write};
use crate::args::{EvalArgs, PreprocessingArg, ScopeArg};
use crate::settings::Settings;

pub fn run(s: &Settings, a: EvalArgs) -> Result<()> {
    let table = read_table(&a.data)?;
    let models = match a.models {
        Some(m) => m.0,
        None => ModelKind::ALL.to_vec(),
    };
    let k = s.pick(a.k, "folds", 5)?;
    let modes = preprocessing_modes(a.preprocessing.unwrap_or(PreprocessingArg::Both));
    let scope = match a.scaling {
        ScopeArg::PerFold => ScalingScope::PerFold,
        ScopeArg::Global => ScalingScope::Global,
    };
    let plan = make_kfold(table.n_rows(), k, s.seed)?;

    let mut results = Vec::new();
    for &kind in &models {
        let spec = model_spec(s, kind, &a.options)?;
        for &mode in &modes {
            let folds = run_cv_with(&table, &spec, mode, &plan, s.seed, scope)
                .with_context(|| format!("{kind} with {} features", mode.label()))?;
            results.extend(folds);
        }
    }
    let report = compare_models(&results);
    write(&a.out_dir.join("report.csv"), &report.to_csv_string())?;
    write(&a.out_dir.join("folds.csv"), &folds_to_csv(&results))?;
    write(&a.out_dir.join("comparison.svg"), &svg::comparison_chart(&report))?;
    for &mode in &modes {
        let curves: Vec<_> = results
            .iter()
            .filter(|r| r.preprocessing == mode)
            .filter_map(|r| r.curve.as_ref().map(|c| (r.fold, c)))
            .collect();
        if curves.is_empty() {
            continue;
        }
        let label = mode.label();
        for (fold, c) in &curves {
            write(&a.out_dir.join(format!("epochs_mlp_{label}_fold{}.csv", fold + 1)), &c.to_csv_string())?;
        }
        let owned: Vec<_> = curves.iter().map(|(_, c)| (*c).clone()).collect();
        write(
            &a.out_dir.join(format!("epochs_mlp_{label}.svg")),
            &svg::epoch_chart(&format!("MLP MAE per epoch ({label})"), &owned),
        )?;
    }

    println!("seed {}, {k}-fold, {} rows", s.seed, table.n_rows());
    println!("{:<8} {:<5} {:>16} {:>16}", "model", "prep", "train MAE", "test MAE");
    for (model, pre, _) in &report.ranking {
        let row = |split| report.get(*model, pre, split).expect("summary row");
        let (tr, te) = (row(Split::Train), row(Split::Test));
        println!(
            "{:<8} {:<5} {:>8.3} ± {:<5.3} {:>8.3} ± {:<5.3}",
            model.as_str(),
            pre,
            tr.mean_mae,
            tr.sd_mae,
            te.mean_mae,
            te.sd_mae
        );
    }
    println!("reports written to {}", a.out_dir.display());
    Ok(())
}
