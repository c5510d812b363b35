use anyhow::{Context, Result};
use npk_core::eval::mae;
use npk_core::models::Pipeline;

use super::{model_spec, read_table, single_mode};
use crate::args::TrainArgs;
use crate::settings::Settings;

pub fn run(s: &Settings, a: TrainArgs) -> Result<()> {
    let table = read_table(&a.data)?;
    let spec = model_spec(s, a.model, &a.options)?;
    let mode = single_mode(a.preprocessing)?;
    let pipeline = Pipeline::train(
        &spec,
        table.x(),
        table.y(),
        table.feature_names(),
        table.target_names(),
        mode,
        s.seed,
    )
    .with_context(|| format!("training {}", a.model))?;
    pipeline.save(&a.output)?;
    let fitted = pipeline.predict(table.x())?;
    println!(
        "seed {}: {} ({}) trained on {} rows, training MAE {:.4}, saved to {}",
        s.seed,
        a.model,
        mode.label(),
        table.n_rows(),
        mae(table.y(), fitted.view())?,
        a.output.display()
    );
    Ok(())
}
