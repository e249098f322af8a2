//! TOML config ingestion: the human-facing schema (drawing units, mm) and its
//! conversion into the SI domain types. The schema is documented in
//! `docs/config.md`; the reference design ships as `data/reference.toml`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{Result, WecError};
use crate::excitation::WaveSpec;
use crate::geometry::{
    ArmatureLayout, CryoParams, MachineConfig, MagnetAssembly, MechanicsParams, OperatingLimits,
    TapeSpec, WindingPack,
};
use crate::superconductor::LiftModel;

/// The embedded reference design.
pub const REFERENCE_TOML: &str = include_str!("../data/reference.toml");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigSchema {
    pub machine: MachineSection,
    /// Tape stock keyed by a free-form name referenced from `magnet.layers`.
    pub tape: BTreeMap<String, TapeSection>,
    pub magnet: MagnetSection,
    pub armature: ArmatureSection,
    pub wave: WaveSpec,
    pub circuit: CircuitSpec,
    pub lift: LiftModel,
    pub cryogenics: CryoParams,
    pub mechanics: MechanicsParams,
    pub limits: OperatingLimits,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MachineSection {
    pub operating_current_a: f64,
    pub operating_temperature_k: f64,
    pub iron_boost_factor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapeSection {
    pub width_mm: f64,
    pub thickness_mm: f64,
    pub ic_ref_a: f64,
    pub reference_temperature_k: f64,
    pub critical_temperature_k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MagnetSection {
    pub count: usize,
    pub inner_radius_mm: f64,
    pub pole_pitch_mm: f64,
    /// Tape names bottom-to-top, one per double pancake.
    pub layers: Vec<String>,
    pub turns_per_pancake: BTreeMap<String, f64>,
    pub insulation_plate_mm: f64,
    pub layer_clearance_mm: f64,
    pub cryostat_height_mm: f64,
    pub cryostat_width_mm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmatureSection {
    pub slot_count: usize,
    pub phases: usize,
    pub coils_per_phase: usize,
    pub turns_per_coil: f64,
    pub coil_height_mm: f64,
    pub coil_inner_radius_mm: f64,
    pub coil_radial_depth_mm: f64,
    pub air_gap_mm: f64,
    pub conductor_area_mm2: f64,
    pub stator_height_mm: f64,
    /// Catalogue "armature coil width" figure, recorded verbatim; the
    /// dimensionally meaningful radial depth is `coil_radial_depth_mm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog_coil_width_mm: Option<f64>,
}

const MM: f64 = 1e-3;

impl ConfigSchema {
    pub fn into_machine(self) -> Result<MachineConfig> {
        let mut tapes: BTreeMap<String, TapeSpec> = BTreeMap::new();
        for (name, t) in &self.tape {
            tapes.insert(
                name.clone(),
                TapeSpec {
                    width_m: t.width_mm * MM,
                    thickness_m: t.thickness_mm * MM,
                    ic_ref_a: t.ic_ref_a,
                    reference_temperature_k: t.reference_temperature_k,
                    critical_temperature_k: t.critical_temperature_k,
                },
            );
        }
        let mut layers = Vec::with_capacity(self.magnet.layers.len());
        for name in &self.magnet.layers {
            let tape = tapes
                .get(name)
                .ok_or_else(|| WecError::Config(format!("magnet layer references unknown tape {name:?}")))?;
            let turns = self
                .magnet
                .turns_per_pancake
                .get(name)
                .ok_or_else(|| WecError::Config(format!("no turns_per_pancake entry for tape {name:?}")))?;
            layers.push((tape.clone(), *turns));
        }
        let pack = WindingPack::stack(
            &layers,
            self.magnet.inner_radius_mm * MM,
            self.magnet.insulation_plate_mm * MM,
            self.magnet.layer_clearance_mm * MM,
        )?;
        let assembly = MagnetAssembly::periodic(
            pack,
            self.magnet.count,
            self.magnet.pole_pitch_mm * MM,
            self.magnet.cryostat_height_mm * MM,
            self.magnet.cryostat_width_mm * MM,
        )?;
        let armature = ArmatureLayout {
            slot_count: self.armature.slot_count,
            phases: self.armature.phases,
            coils_per_phase: self.armature.coils_per_phase,
            turns_per_coil: self.armature.turns_per_coil,
            coil_height_m: self.armature.coil_height_mm * MM,
            coil_inner_radius_m: self.armature.coil_inner_radius_mm * MM,
            coil_radial_depth_m: self.armature.coil_radial_depth_mm * MM,
            air_gap_m: self.armature.air_gap_mm * MM,
            conductor_area_m2: self.armature.conductor_area_mm2 * 1e-6,
            stator_height_m: self.armature.stator_height_mm * MM,
        };
        let machine = MachineConfig {
            assembly,
            armature,
            operating_current_a: self.machine.operating_current_a,
            operating_temperature_k: self.machine.operating_temperature_k,
            wave: self.wave,
            circuit: self.circuit,
            lift: self.lift,
            iron_boost_factor: self.machine.iron_boost_factor,
            mechanics: self.mechanics,
            cryo: self.cryogenics,
            limits: self.limits,
        };
        machine.validate()?;
        Ok(machine)
    }
}

/// Parse a config file body into a validated machine description.
pub fn parse_toml(text: &str) -> Result<MachineConfig> {
    let schema: ConfigSchema =
        toml::from_str(text).map_err(|e| WecError::Config(format!("TOML parse error: {e}")))?;
    schema.into_machine()
}

/// Parse a config file from disk.
pub fn load(path: &std::path::Path) -> Result<MachineConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_toml_parses_and_validates() {
        let m = parse_toml(REFERENCE_TOML).unwrap();
        m.validate().unwrap();
        assert_eq!(m.assembly.packs.len(), 4);
    }

    #[test]
    fn unknown_tape_reference_is_config_error() {
        let broken = REFERENCE_TOML.replace("\"four\",", "\"five\",");
        assert!(matches!(parse_toml(&broken), Err(WecError::Config(_))));
    }

    #[test]
    fn garbage_is_config_error() {
        assert!(matches!(parse_toml("not = [toml"), Err(WecError::Config(_))));
    }
}
