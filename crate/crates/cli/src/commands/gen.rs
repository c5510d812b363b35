use anyhow::Result;
use npk_core::phantom::{generate_dataset, IonModel, PhantomConfig, DEFAULT_STEP_ML, DEFAULT_TOTAL_ML};

use super::{geometry, write};
use crate::args::GenArgs;
use crate::settings::Settings;

pub fn run(s: &Settings, a: GenArgs) -> Result<()> {
    let cfg = PhantomConfig::<f64> {
        seed: s.seed,
        step_ml: s.pick(a.step, "step_ml", DEFAULT_STEP_ML)?,
        total_ml: s.pick(a.total, "total_ml", DEFAULT_TOTAL_ML)?,
        noise_sd: s.pick(a.noise, "noise_sd", 0.01)?,
        ions: IonModel::default().with_overrides(&s.kv)?,
        geometry: geometry(s, None, None)?,
        ..PhantomConfig::default()
    };
    let table = generate_dataset(&cfg)?;
    write(&a.output, &table.to_csv_string())?;
    println!("seed {}: {} rows written to {}", s.seed, table.n_rows(), a.output.display());
    for (name, (lo, hi)) in table.feature_names().iter().zip(table.feature_ranges()) {
        println!("  {name:<22} {lo:>12.6} .. {hi:.6}");
    }
    Ok(())
}
