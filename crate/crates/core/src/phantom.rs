//! Acid-base phantom synthesis: stock preparation arithmetic, the fixed-volume
//! mixture grid, and a forward electrochemical model that turns a mixture
//! into a pH value and a V-I sweep.
//!
//! HNO3 and KOH are treated as fully dissociated; H3PO4 contributes through
//! its first dissociation only. The hydrogen-ion concentration is the unique
//! root of the charge balance
//! `[H+] + [K+] = [OH-] + [NO3-] + [H2PO4-]` with `[H+][OH-] = Kw`, and the
//! solution conductivity is the sum of limiting molar conductivities weighted
//! by ion concentration.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::curves::{self, CellGeometry, CurveLabel, VICurve, DEFAULT_SAMPLES, DEFAULT_STEP_V};
use crate::dataset::FeatureTable;
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::scalar::Scalar;
use crate::seed;

/// The three compounds of the phantom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Compound {
    Hno3,
    H3po4,
    Koh,
}

impl Compound {
    pub const ALL: [Compound; 3] = [Compound::Hno3, Compound::H3po4, Compound::Koh];

    /// Molar mass in g/mol.
    pub fn molar_mass(self) -> f64 {
        match self {
            Compound::Hno3 => 63.0,
            Compound::H3po4 => 98.0,
            Compound::Koh => 56.1,
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Compound::Hno3 => "HNO3",
            Compound::H3po4 => "H3PO4",
            Compound::Koh => "KOH",
        }
    }
}

/// Default final volume of one phantom, mL.
pub const DEFAULT_TOTAL_ML: f64 = 40.0;
/// Default volume increment of the mixture grid, mL.
pub const DEFAULT_STEP_ML: f64 = 2.0;

/// Concentrations (mmol/L) of the three compounds in one phantom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionComposition<T> {
    pub c_hno3: T,
    pub c_h3po4: T,
    pub c_koh: T,
    /// Final volume, mL.
    pub total_volume_ml: T,
}

impl<T: Scalar> SolutionComposition<T> {
    pub fn new(c_hno3: T, c_h3po4: T, c_koh: T) -> Result<Self> {
        let c = Self {
            c_hno3,
            c_h3po4,
            c_koh,
            total_volume_ml: T::lit(DEFAULT_TOTAL_ML),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn water() -> Self {
        Self {
            c_hno3: T::zero(),
            c_h3po4: T::zero(),
            c_koh: T::zero(),
            total_volume_ml: T::lit(DEFAULT_TOTAL_ML),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let concs = [self.c_hno3, self.c_h3po4, self.c_koh];
        if concs.iter().any(|c| !(c.is_finite() && *c >= T::zero())) {
            return Err(Error::validation(format!(
                "concentrations must be finite and non-negative: {concs:?}"
            )));
        }
        if !(self.total_volume_ml.is_finite() && self.total_volume_ml > T::zero()) {
            return Err(Error::validation("total volume must be positive"));
        }
        Ok(())
    }

    pub fn concentration(&self, compound: Compound) -> T {
        match compound {
            Compound::Hno3 => self.c_hno3,
            Compound::H3po4 => self.c_h3po4,
            Compound::Koh => self.c_koh,
        }
    }

    pub fn targets(&self) -> [T; 3] {
        [self.c_hno3, self.c_h3po4, self.c_koh]
    }
}

/// A prepared stock of one compound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StockSolution<T> {
    pub compound: Compound,
    /// mol/L
    pub molarity: T,
    /// mL
    pub volume_ml: T,
}

impl<T: Scalar> StockSolution<T> {
    pub fn new(compound: Compound, molarity: T, volume_ml: T) -> Result<Self> {
        if !(molarity > T::zero() && molarity.is_finite()) {
            return Err(Error::validation(format!(
                "{} stock molarity must be positive",
                compound.formula()
            )));
        }
        if !(volume_ml > T::zero() && volume_ml.is_finite()) {
            return Err(Error::validation(format!(
                "{} stock volume must be positive",
                compound.formula()
            )));
        }
        Ok(Self {
            compound,
            molarity,
            volume_ml,
        })
    }

    /// The working stocks of the phantom: 0.08 M HNO3, 0.005 M H3PO4 and
    /// 0.535 M KOH, 210 mL each.
    pub fn defaults() -> [Self; 3] {
        let v = T::lit(210.0);
        [
            Self::new(Compound::Hno3, T::lit(0.08), v).unwrap(),
            Self::new(Compound::H3po4, T::lit(0.005), v).unwrap(),
            Self::new(Compound::Koh, T::lit(0.535), v).unwrap(),
        ]
    }
}

/// Molarity of a concentrated reagent from its density (g/mL) and molar mass
/// (g/mol).
pub fn molarity_from_density<T: Scalar>(density_g_per_ml: T, molar_mass: T) -> T {
    density_g_per_ml * T::lit(1000.0) / molar_mass
}

/// Stock volume (mL) that must be diluted to `target_volume_ml` to reach
/// `target_molarity`: `V1 = M2 V2 / M1`.
pub fn dilute<T: Scalar>(stock: &StockSolution<T>, target_molarity: T, target_volume_ml: T) -> Result<T> {
    if !(target_volume_ml > T::zero()) {
        return Err(Error::validation("target volume must be positive"));
    }
    if target_molarity < T::zero() {
        return Err(Error::validation("target molarity must be non-negative"));
    }
    if target_molarity >= stock.molarity {
        return Err(Error::InfeasibleDilution {
            target: target_molarity.as_f64(),
            stock: stock.molarity.as_f64(),
        });
    }
    Ok(target_molarity * target_volume_ml / stock.molarity)
}

/// Molarity (mol/L) of `mass_g` of KOH dissolved to `final_volume_ml`.
pub fn koh_molarity<T: Scalar>(mass_g: T, final_volume_ml: T) -> Result<T> {
    if mass_g < T::zero() || !mass_g.is_finite() {
        return Err(Error::validation("KOH mass must be non-negative"));
    }
    if !(final_volume_ml > T::zero()) {
        return Err(Error::validation("final volume must be positive"));
    }
    Ok(mass_g / (T::lit(Compound::Koh.molar_mass()) * final_volume_ml) * T::lit(1000.0))
}

/// One point of the mixture grid: stock volumes and resulting composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixture<T> {
    /// Stock volumes in mL, ordered HNO3, H3PO4, KOH.
    pub volumes_ml: [T; 3],
    pub composition: SolutionComposition<T>,
}

fn ordered_stocks<T: Scalar>(stocks: &[StockSolution<T>; 3]) -> Result<[StockSolution<T>; 3]> {
    let mut out = *stocks;
    out.sort_by_key(|s| s.compound);
    if out.iter().map(|s| s.compound).ne(Compound::ALL) {
        return Err(Error::validation("need exactly one stock each of HNO3, H3PO4 and KOH"));
    }
    Ok(out)
}

/// Every split of `total_ml` into three non-negative multiples of `step_ml`,
/// mapped to final concentrations. Yields `C(total/step + 2, 2)` mixtures.
pub fn enumerate_mixtures<T: Scalar>(
    step_ml: T,
    total_ml: T,
    stocks: &[StockSolution<T>; 3],
) -> Result<Vec<Mixture<T>>> {
    if !(step_ml > T::zero() && total_ml > T::zero()) {
        return Err(Error::validation("step and total volume must be positive"));
    }
    let ratio = (total_ml / step_ml).as_f64();
    let units = ratio.round();
    if (ratio - units).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::validation(format!(
            "total volume {total_ml} mL is not a multiple of step {step_ml} mL"
        )));
    }
    let units = units as usize;
    let stocks = ordered_stocks(stocks)?;
    let mut out = Vec::with_capacity((units + 1) * (units + 2) / 2);
    for a in 0..=units {
        for b in 0..=units - a {
            let counts = [a, b, units - a - b];
            let volumes_ml = counts.map(|n| T::from_usize_lossy(n) * step_ml);
            let conc = |i: usize| stocks[i].molarity * volumes_ml[i] / total_ml * T::lit(1000.0);
            out.push(Mixture {
                volumes_ml,
                composition: SolutionComposition {
                    c_hno3: conc(0),
                    c_h3po4: conc(1),
                    c_koh: conc(2),
                    total_volume_ml: total_ml,
                },
            });
        }
    }
    Ok(out)
}

/// Limiting molar conductivities (S·cm²/mol) and equilibrium constants of the
/// forward model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonModel {
    pub lambda_h: f64,
    pub lambda_oh: f64,
    pub lambda_k: f64,
    pub lambda_no3: f64,
    pub lambda_h2po4: f64,
    /// First dissociation constant of H3PO4.
    pub ka1: f64,
    /// Ion product of water.
    pub kw: f64,
}

impl Default for IonModel {
    fn default() -> Self {
        Self {
            lambda_h: 349.8,
            lambda_oh: 198.0,
            lambda_k: 73.5,
            lambda_no3: 71.4,
            lambda_h2po4: 33.0,
            ka1: 7.1e-3,
            kw: 1e-14,
        }
    }
}

impl IonModel {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [
            self.lambda_h,
            self.lambda_oh,
            self.lambda_k,
            self.lambda_no3,
            self.lambda_h2po4,
        ];
        if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::validation("limiting conductivities must be positive"));
        }
        if !(self.ka1 > 0.0 && self.ka1 < 1.0) {
            return Err(Error::validation("Ka1 must lie in (0, 1)"));
        }
        if !(self.kw > 0.0 && self.kw < 1e-10) {
            return Err(Error::validation("Kw must be a small positive ion product"));
        }
        Ok(())
    }

    /// Apply overrides from a key-value file. Recognised keys: `lambda_h`,
    /// `lambda_oh`, `lambda_k`, `lambda_no3`, `lambda_h2po4`, `ka1`, `kw`; others are left alone.
    pub fn with_overrides(mut self, kv: &KeyValues) -> Result<Self> {
        let fields: [(&str, &mut f64); 7] = [
            ("lambda_h", &mut self.lambda_h),
            ("lambda_oh", &mut self.lambda_oh),
            ("lambda_k", &mut self.lambda_k),
            ("lambda_no3", &mut self.lambda_no3),
            ("lambda_h2po4", &mut self.lambda_h2po4),
            ("ka1", &mut self.ka1),
            ("kw", &mut self.kw),
        ];
        for (name, slot) in fields {
            if let Some(v) = kv.get_f64(name)? {
                *slot = v;
            }
        }
        self.validate()?;
        Ok(self)
    }
}

/// Equilibrium ion concentrations in mol/L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speciation {
    pub h: f64,
    pub oh: f64,
    pub k: f64,
    pub no3: f64,
    pub h2po4: f64,
}

impl Speciation {
    pub fn ph(&self) -> f64 {
        -self.h.log10()
    }

    /// Conductivity in S/m: `Σ λ c / 10` with λ in S·cm²/mol and c in mol/L.
    pub fn conductivity(&self, ions: &IonModel) -> f64 {
        0.1 * (ions.lambda_h * self.h
            + ions.lambda_oh * self.oh
            + ions.lambda_k * self.k
            + ions.lambda_no3 * self.no3
            + ions.lambda_h2po4 * self.h2po4)
    }
}

const LOG_H_BRACKET: (f64, f64) = (-24.0, 2.0);
const LOG_H_TOLERANCE: f64 = 1e-10;

/// Solve the charge balance for `[H+]` by bisection on `log10 [H+]`.
pub fn speciate<T: Scalar>(comp: &SolutionComposition<T>, ions: &IonModel) -> Speciation {
    let no3 = comp.c_hno3.as_f64() / 1000.0;
    let p_total = comp.c_h3po4.as_f64() / 1000.0;
    let k = comp.c_koh.as_f64() / 1000.0;
    let h2po4 = |h: f64| p_total * ions.ka1 / (ions.ka1 + h);
    // Net positive charge; strictly increasing in h.
    let balance = |h: f64| h + k - ions.kw / h - no3 - h2po4(h);
    let (mut lo, mut hi) = LOG_H_BRACKET;
    while hi - lo > LOG_H_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if balance(10f64.powf(mid)) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h = 10f64.powf(0.5 * (lo + hi));
    Speciation {
        h,
        oh: ions.kw / h,
        k,
        no3,
        h2po4: h2po4(h),
    }
}

pub fn forward_ph<T: Scalar>(comp: &SolutionComposition<T>, ions: &IonModel) -> T {
    T::lit(speciate(comp, ions).ph())
}

/// Conductivity (S/m) predicted by the ion model for a composition.
pub fn model_conductivity<T: Scalar>(comp: &SolutionComposition<T>, ions: &IonModel) -> T {
    T::lit(speciate(comp, ions).conductivity(ions))
}

/// Ohmic sweep of the cell on the canonical grid with multiplicative Gaussian
/// noise of relative standard deviation `noise_sd`.
pub fn forward_sweep<T: Scalar>(
    comp: &SolutionComposition<T>,
    ions: &IonModel,
    geometry: &CellGeometry<T>,
    noise_sd: T,
    seed: u64,
) -> Result<VICurve<T>> {
    if !(noise_sd >= T::zero()) {
        return Err(Error::validation("noise SD must be non-negative"));
    }
    geometry.validate()?;
    let spec = speciate(comp, ions);
    let sigma = T::lit(spec.conductivity(ions));
    let conductance = sigma / geometry.cell_constant();
    let mut rng = seed::rng_for(seed, "phantom.sweep", 0);
    let step = T::lit(DEFAULT_STEP_V);
    let (voltages, currents): (Vec<T>, Vec<T>) = (0..DEFAULT_SAMPLES)
        .map(|i| {
            let v = T::from_usize_lossy(i) * step;
            let z: f64 = rng.sample(StandardNormal);
            (v, conductance * v * (T::one() + noise_sd * T::lit(z)))
        })
        .unzip();
    Ok(VICurve::new(voltages, currents)?.with_label(Some(CurveLabel {
        composition: *comp,
        ph: T::lit(spec.ph()),
    })))
}

/// Everything needed to synthesize the phantom table.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig<T> {
    pub stocks: [StockSolution<T>; 3],
    pub ions: IonModel,
    pub geometry: CellGeometry<T>,
    pub noise_sd: T,
    pub seed: u64,
    pub step_ml: T,
    pub total_ml: T,
}

impl<T: Scalar> Default for PhantomConfig<T> {
    fn default() -> Self {
        Self {
            stocks: StockSolution::defaults(),
            ions: IonModel::default(),
            geometry: CellGeometry::default(),
            noise_sd: T::lit(0.01),
            seed: 0,
            step_ml: T::lit(DEFAULT_STEP_ML),
            total_ml: T::lit(DEFAULT_TOTAL_ML),
        }
    }
}

/// Synthesize one feature row per mixture: pH from the charge balance,
/// conductivity and average power from a simulated sweep. Each mixture draws
/// its noise from its own stream derived from the master seed.
pub fn generate_dataset<T: Scalar>(config: &PhantomConfig<T>) -> Result<FeatureTable<T>> {
    config.ions.validate()?;
    let mixtures = enumerate_mixtures(config.step_ml, config.total_ml, &config.stocks)?;
    let mut features = Vec::with_capacity(mixtures.len());
    let mut targets = Vec::with_capacity(mixtures.len());
    for (i, m) in mixtures.iter().enumerate() {
        let comp = &m.composition;
        let sweep_seed = seed::derive_seed(config.seed, "phantom.mixture", i as u64);
        let curve = forward_sweep(comp, &config.ions, &config.geometry, config.noise_sd, sweep_seed)?;
        let f = curves::features(&curve, &config.geometry)?;
        features.push([forward_ph(comp, &config.ions), f.conductivity_s_per_m, f.avg_power_w]);
        targets.push(comp.targets());
    }
    FeatureTable::from_rows(&features, &targets)
}
