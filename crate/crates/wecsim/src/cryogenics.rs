//! Initial coolant mass, enthalpy stability margin, and the embedded
//! cryogenic material property tables.

use serde::Serialize;

use crate::circuit::TransientResult;
use crate::error::{Result, WecError};
use crate::math::{integrate_adaptive, MonotoneCubic};

/// OFHC copper specific enthalpy relative to 4 K, J/kg (see file header).
pub const COPPER_ENTHALPY_CSV: &str = include_str!("../data/copper_enthalpy.csv");
/// Composite winding volumetric heat capacity, J/(m^3 K) (see file header).
pub const WINDING_HEAT_CAPACITY_CSV: &str = include_str!("../data/winding_heat_capacity.csv");

/// Temperature-indexed property with monotone-cubic interpolation.
///
/// Queries outside the tabulated range are errors, never extrapolations.
#[derive(Debug, Clone)]
pub struct PropertyTable {
    pub name: String,
    pub units: String,
    interp: MonotoneCubic,
}

impl PropertyTable {
    pub fn new(name: &str, units: &str, t_k: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self { name: name.into(), units: units.into(), interp: MonotoneCubic::new(t_k, values)? })
    }

    /// Parse a `T_K,value` CSV with `#` comment lines and one header row.
    pub fn from_csv(name: &str, units: &str, text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut v = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let a = parts.next().unwrap_or("");
            let b = parts.next().unwrap_or("");
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    t.push(x);
                    v.push(y);
                }
                _ => continue, // header row
            }
        }
        Self::new(name, units, t, v)
    }

    pub fn range_k(&self) -> (f64, f64) {
        self.interp.range()
    }

    pub fn at(&self, t_k: f64) -> Result<f64> {
        self.interp.eval(t_k)
    }
}

/// The embedded copper enthalpy table.
pub fn copper_enthalpy() -> PropertyTable {
    PropertyTable::from_csv("copper specific enthalpy", "J/kg", COPPER_ENTHALPY_CSV)
        .expect("embedded copper enthalpy table must parse")
}

/// The embedded composite winding heat capacity table.
pub fn winding_heat_capacity() -> PropertyTable {
    PropertyTable::from_csv("winding volumetric heat capacity", "J/(m^3 K)", WINDING_HEAT_CAPACITY_CSV)
        .expect("embedded winding heat capacity table must parse")
}

/// Liquid hydrogen needed to cool the magnet mass from 300 K to 20 K:
/// M_H = M_mg (h_Cu(300 K) - h_Cu(20 K)) / h_H.
pub fn coolant_mass(
    magnet_mass_kg: f64,
    copper_enthalpy: &PropertyTable,
    h_vap_j_per_kg: f64,
) -> Result<f64> {
    if magnet_mass_kg < 0.0 {
        return Err(WecError::Config(format!("magnet mass must be non-negative, got {magnet_mass_kg} kg")));
    }
    let dh = copper_enthalpy.at(300.0)? - copper_enthalpy.at(20.0)?;
    Ok(magnet_mass_kg * dh / h_vap_j_per_kg)
}

/// Enthalpy stability margin: integral of the volumetric heat capacity over
/// the temperature margin [T_op, T_cs], J/m^3.
pub fn stability_margin(c: &PropertyTable, t_op_k: f64, t_cs_k: f64) -> Result<f64> {
    if t_cs_k < t_op_k {
        return Err(WecError::TemperatureRange { t_k: t_cs_k, lo_k: t_op_k, hi_k: f64::INFINITY });
    }
    if t_cs_k == t_op_k {
        return Ok(0.0);
    }
    let (lo, hi) = c.range_k();
    if t_op_k < lo || t_cs_k > hi {
        return Err(WecError::TableRange { x: if t_op_k < lo { t_op_k } else { t_cs_k }, lo, hi });
    }
    Ok(integrate_adaptive(|t| c.at(t).expect("inside table range"), t_op_k, t_cs_k, 1e-8))
}

/// Per-phase armature current-density duty report.
#[derive(Debug, Clone, Serialize)]
pub struct CurrentDensityReport {
    pub limit_a_per_mm2: f64,
    /// Fraction of samples whose |i|/area exceeds the limit, per phase.
    pub exceedance_fraction: Vec<f64>,
    pub peak_current_a: Vec<f64>,
    pub peak_density_a_per_mm2: Vec<f64>,
    /// True when every phase's exceedance stays under the duty threshold.
    pub pass: bool,
}

/// Fraction of transient samples whose phase current density exceeds the
/// water-cooling limit (strict inequality), per phase.
pub fn armature_current_density_check(
    ts: &TransientResult,
    conductor_area_mm2: f64,
    limit_a_per_mm2: f64,
    duty_threshold: f64,
) -> CurrentDensityReport {
    let n = ts.time_s.len().max(1);
    let mut exceedance = Vec::with_capacity(3);
    let mut peak_i = Vec::with_capacity(3);
    let mut peak_j = Vec::with_capacity(3);
    for phase in &ts.phase_current_a {
        let mut count = 0usize;
        let mut peak = 0.0_f64;
        for &i in phase {
            let j = i.abs() / conductor_area_mm2;
            if j > limit_a_per_mm2 {
                count += 1;
            }
            peak = peak.max(i.abs());
        }
        exceedance.push(count as f64 / n as f64);
        peak_i.push(peak);
        peak_j.push(peak / conductor_area_mm2);
    }
    let pass = exceedance.iter().all(|&f| f < duty_threshold);
    CurrentDensityReport {
        limit_a_per_mm2,
        exceedance_fraction: exceedance,
        peak_current_a: peak_i,
        peak_density_a_per_mm2: peak_j,
        pass,
    }
}

/// Aggregated cryogenic figures for the summary report.
#[derive(Debug, Clone, Serialize)]
pub struct CryoReport {
    pub magnet_mass_kg: f64,
    pub coolant_mass_kg: f64,
    pub current_sharing_temperature_k: f64,
    pub stability_margin_j_per_m3: f64,
}

impl CryoReport {
    pub fn validate(&self, t_op_k: f64, t_c_k: f64) -> Result<()> {
        if self.magnet_mass_kg < 0.0
            || self.coolant_mass_kg < 0.0
            || self.stability_margin_j_per_m3 < 0.0
        {
            return Err(WecError::Config("cryo report fields must be non-negative".into()));
        }
        let t = self.current_sharing_temperature_k;
        if t <= t_op_k || t >= t_c_k {
            return Err(WecError::TemperatureRange { t_k: t, lo_k: t_op_k, hi_k: t_c_k });
        }
        Ok(())
    }
}
