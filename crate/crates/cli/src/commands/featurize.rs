use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use npk_core::agronomy::{write_soil_csv, SoilSample};
use npk_core::curves::{features, parse_curve_file_with_unit, CellGeometry, CurrentUnit};
use npk_core::dataset::{FeatureTable, FEATURE_NAMES, TARGET_NAMES};
use npk_core::kv::KeyValues;

use super::{geometry, write};
use crate::args::FeaturizeArgs;
use crate::settings::Settings;

struct Row {
    stem: String,
    ph: Option<f64>,
    conductivity: f64,
    avg_power: f64,
    targets: Option<[f64; 3]>,
}

fn sweep_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

fn featurize_file(path: &Path, unit: CurrentUnit, geom: &CellGeometry<f64>) -> Result<Row> {
    let contents = std::fs::read_to_string(path)?;
    let curve = parse_curve_file_with_unit::<f64>(path, &contents, unit)?;
    let f = features(&curve, geom)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Row {
        stem,
        ph: curve.label().map(|l| l.ph),
        conductivity: f.conductivity_s_per_m,
        avg_power: f.avg_power_w,
        targets: curve.label().map(|l| l.composition.targets()),
    })
}

pub fn run(s: &Settings, a: FeaturizeArgs) -> Result<()> {
    let geom = geometry(s, a.separation, a.area)?;
    let unit = if a.milliamps { CurrentUnit::Milliamperes } else { CurrentUnit::Amperes };
    let ph_table = match &a.ph_table {
        Some(p) => KeyValues::parse(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => KeyValues::default(),
    };
    let files = sweep_files(&a.dir)?;
    if files.is_empty() {
        eprintln!("warning: no .csv sweep files in {}", a.dir.display());
    }

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for path in &files {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let row = featurize_file(path, unit, &geom).and_then(|mut r| {
            if r.ph.is_none() {
                r.ph = ph_table.get_f64(&r.stem)?;
            }
            if r.ph.is_none() {
                return Err(anyhow!("no pH: name is not <N>-<P>-<K>-<pH> and the stem is missing from --ph-table"));
            }
            if a.dataset && r.targets.is_none() {
                return Err(anyhow!("unlabeled sweep cannot enter a dataset"));
            }
            Ok(r)
        });
        match row {
            Ok(r) => rows.push(r),
            Err(e) => failures.push(format!("{name}: {e:#}")),
        }
    }

    let text = if a.dataset {
        if rows.len() >= 2 {
            let x: Vec<[f64; 3]> = rows.iter().map(|r| [r.ph.unwrap(), r.conductivity, r.avg_power]).collect();
            let y: Vec<[f64; 3]> = rows.iter().map(|r| r.targets.unwrap()).collect();
            FeatureTable::from_rows(&x, &y)?.to_csv_string()
        } else if rows.is_empty() {
            format!("{}\n", FEATURE_NAMES.iter().chain(&TARGET_NAMES).copied().collect::<Vec<_>>().join(","))
        } else {
            bail!("a dataset needs at least two labeled sweeps");
        }
    } else {
        let samples: Vec<SoilSample<f64>> = rows
            .iter()
            .map(|r| SoilSample {
                id: r.stem.clone(),
                ph: r.ph.unwrap(),
                conductivity: r.conductivity,
                avg_power: r.avg_power,
                lab: None,
            })
            .collect();
        let mut buf = Vec::new();
        write_soil_csv(&samples, &mut buf)?;
        String::from_utf8(buf)?
    };
    write(&a.output, &text)?;
    println!("{} of {} files featurized into {}", rows.len(), files.len(), a.output.display());
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("  {f}");
        }
        bail!("{} file(s) could not be featurized", failures.len());
    }
    Ok(())
}
