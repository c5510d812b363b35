use anyhow::Result;
use npk_core::agronomy::{compound_to_oxide, mmol_to_ppm, ppm_to_kg_per_ha, ConversionConstants, Nutrient};
use npk_core::phantom::Compound;

use crate::args::{CompoundArg, ConvertArgs, UnitArg};
use crate::settings::Settings;

pub fn run(s: &Settings, a: ConvertArgs) -> Result<()> {
    let mut constants = ConversionConstants::<f64>::default().with_overrides(&s.kv)?;
    if let Some(d) = a.density {
        constants.bulk_density = d;
    }
    if let Some(d) = a.depth {
        constants.depth_m = d;
    }
    constants.validate()?;
    let compound = match a.compound {
        CompoundArg::Hno3 => Compound::Hno3,
        CompoundArg::H3po4 => Compound::H3po4,
        CompoundArg::Koh => Compound::Koh,
    };
    let nutrient = match compound {
        Compound::H3po4 => Some(Nutrient::P2o5),
        Compound::Koh => Some(Nutrient::K2o),
        Compound::Hno3 => None,
    };
    let value = a.value * a.factor;
    match a.from {
        UnitArg::Mmol => {
            let f = compound.formula();
            println!("{f:<6} {value} mmol/L");
            println!("{f:<6} {} mg/L", mmol_to_ppm(value, constants.compound_molar_mass(compound))?);
            if let Some(n) = nutrient {
                let oxide = compound_to_oxide(value, compound)?;
                let ppm = mmol_to_ppm(oxide, constants.oxide_molar_mass(n))?;
                let name = n.key().to_uppercase();
                println!("{name:<6} {oxide} mmol/L");
                println!("{name:<6} {ppm} mg/L");
                println!("{name:<6} {} kg/ha", ppm_to_kg_per_ha(ppm, &constants));
            }
        }
        UnitArg::Ppm => {
            if value < 0.0 {
                anyhow::bail!("concentration must be non-negative, got {value}");
            }
            println!("{value} mg/L = {} kg/ha", ppm_to_kg_per_ha(value, &constants));
        }
    }
    println!("(kg/ha per mg/L: {})", constants.ppm_factor());
    Ok(())
}
