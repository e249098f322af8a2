//! Declarative machine description: tape, double-pancake stacks, magnet
//! assemblies on the actuator, armature coils on the stator, and the global
//! machine configuration.
//!
//! All stored lengths are metres. Turn counts are `f64`: an integer count is
//! the ordinary case, a fractional tail models the partial outermost turn that
//! fixed-tape-length rebuilds need to conserve conductor length exactly.

use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::excitation::WaveSpec;
use crate::error::{Result, WecError};
use crate::superconductor::LiftModel;

/// REBCO tape stock used for one class of double pancakes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapeSpec {
    /// Tape (pancake) width, m.
    pub width_m: f64,
    /// Radial build per turn, m. No turn-to-turn insulation: this is the
    /// full conductor-plus-stabilizer thickness.
    pub thickness_m: f64,
    /// Self-field critical current at `reference_temperature_k`, A.
    pub ic_ref_a: f64,
    /// Temperature the reference Ic is quoted at, K.
    pub reference_temperature_k: f64,
    /// Zero-current critical temperature, K.
    pub critical_temperature_k: f64,
}

impl TapeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width_m <= 0.0 || self.thickness_m <= 0.0 {
            return Err(WecError::InvalidGeometry(format!(
                "tape cross-section must be positive, got {} x {} m",
                self.width_m, self.thickness_m
            )));
        }
        if self.ic_ref_a <= 0.0 {
            return Err(WecError::InvalidGeometry(format!(
                "reference Ic must be positive, got {} A",
                self.ic_ref_a
            )));
        }
        if self.critical_temperature_k <= self.reference_temperature_k {
            return Err(WecError::InvalidGeometry(format!(
                "critical temperature {} K must exceed reference temperature {} K",
                self.critical_temperature_k, self.reference_temperature_k
            )));
        }
        Ok(())
    }

    /// Conductor cross-section, m^2.
    pub fn cross_section_m2(&self) -> f64 {
        self.width_m * self.thickness_m
    }
}

/// One double pancake: two stacked pancake windings from a single tape length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublePancake {
    pub tape: TapeSpec,
    /// Winding inner radius, m.
    pub inner_radius_m: f64,
    /// Turns in each of the two pancakes; fractional tail = partial outer turn.
    pub turns_per_pancake: f64,
    /// Axial centre of the DP relative to the magnet midplane, m.
    pub axial_center_m: f64,
    /// Winding sense, +1 or -1, relative to the magnet polarity.
    pub polarity: f64,
}

impl DoublePancake {
    /// Radial pitch between adjacent turns, m. Equals the tape thickness for
    /// as-wound packs; fixed-length rebuilds may stretch or shrink it.
    pub fn radial_pitch_m(&self) -> f64 {
        self.tape.thickness_m
    }

    pub fn outer_radius_m(&self) -> f64 {
        self.inner_radius_m + self.turns_per_pancake * self.radial_pitch_m()
    }

    /// Axial extent (two pancakes), m.
    pub fn height_m(&self) -> f64 {
        2.0 * self.tape.width_m
    }

    /// Tape length in this DP (both pancakes), m.
    pub fn tape_length_m(&self) -> f64 {
        2.0 * pancake_tape_length(self.inner_radius_m, self.radial_pitch_m(), self.turns_per_pancake)
    }

    pub fn validate(&self) -> Result<()> {
        self.tape.validate()?;
        if self.inner_radius_m <= 0.0 {
            return Err(WecError::InvalidGeometry(format!(
                "inner radius must be positive, got {} m",
                self.inner_radius_m
            )));
        }
        if self.turns_per_pancake < 1.0 {
            return Err(WecError::InvalidGeometry(format!(
                "need at least one turn per pancake, got {}",
                self.turns_per_pancake
            )));
        }
        if self.polarity.abs() != 1.0 {
            return Err(WecError::InvalidGeometry(format!(
                "pancake polarity must be +1 or -1, got {}",
                self.polarity
            )));
        }
        Ok(())
    }
}

/// Length of tape in one pancake: sum of 2*pi*r over all (possibly partial) turns.
fn pancake_tape_length(inner_radius_m: f64, pitch_m: f64, turns: f64) -> f64 {
    let full = turns.floor();
    let frac = turns - full;
    let n = full as usize;
    let mut len = 0.0;
    for i in 0..n {
        len += std::f64::consts::TAU * (inner_radius_m + (i as f64 + 0.5) * pitch_m);
    }
    if frac > 0.0 {
        len += frac * std::f64::consts::TAU * (inner_radius_m + (full + 0.5 * frac) * pitch_m);
    }
    len
}

/// A stacked multi-width magnet: ordered double pancakes separated by
/// insulation plates and coolant clearances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingPack {
    /// Bottom-to-top, axial centres already assigned.
    pub pancakes: Vec<DoublePancake>,
    /// G10 plate between adjacent DPs, m.
    pub insulation_plate_m: f64,
    /// Coolant clearance per DP interface (in addition to the plate), m.
    pub layer_clearance_m: f64,
}

/// Tape usage split by tape width class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TapeUsage {
    /// (tape width, total length), both in metres, sorted by ascending width.
    pub per_width: Vec<(f64, f64)>,
}

impl TapeUsage {
    pub fn total_m(&self) -> f64 {
        self.per_width.iter().map(|(_, l)| l).sum()
    }

    pub fn length_for_width_m(&self, width_m: f64) -> f64 {
        self.per_width
            .iter()
            .find(|(w, _)| (w - width_m).abs() < 1e-12)
            .map(|(_, l)| *l)
            .unwrap_or(0.0)
    }
}

impl WindingPack {
    /// Stack the given (tape, turns) layers bottom-to-top, centring the whole
    /// stack on the magnet midplane.
    pub fn stack(
        layers: &[(TapeSpec, f64)],
        inner_radius_m: f64,
        insulation_plate_m: f64,
        layer_clearance_m: f64,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(WecError::InvalidGeometry("winding pack needs at least one layer".into()));
        }
        let gap = insulation_plate_m + layer_clearance_m;
        let content: f64 =
            layers.iter().map(|(t, _)| 2.0 * t.width_m).sum::<f64>() + gap * (layers.len() - 1) as f64;
        let mut z = -0.5 * content;
        let mut pancakes = Vec::with_capacity(layers.len());
        for (tape, turns) in layers {
            let h = 2.0 * tape.width_m;
            pancakes.push(DoublePancake {
                tape: tape.clone(),
                inner_radius_m,
                turns_per_pancake: *turns,
                axial_center_m: z + 0.5 * h,
                polarity: 1.0,
            });
            z += h + gap;
        }
        let pack = Self { pancakes, insulation_plate_m, layer_clearance_m };
        pack.validate()?;
        Ok(pack)
    }

    /// Stack height including plates and clearances, m.
    pub fn total_height_m(&self) -> f64 {
        let content: f64 = self.pancakes.iter().map(|p| p.height_m()).sum();
        content
            + (self.insulation_plate_m + self.layer_clearance_m) * (self.pancakes.len() - 1) as f64
    }

    /// Radial build of the widest layer, m.
    pub fn total_width_m(&self) -> f64 {
        self.pancakes
            .iter()
            .map(|p| p.outer_radius_m() - p.inner_radius_m)
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.pancakes {
            p.validate()?;
        }
        // DPs must tile the stack without overlap.
        for w in self.pancakes.windows(2) {
            let top_of_lower = w[0].axial_center_m + 0.5 * w[0].height_m();
            let bottom_of_upper = w[1].axial_center_m - 0.5 * w[1].height_m();
            if bottom_of_upper < top_of_lower - 1e-12 {
                return Err(WecError::InvalidGeometry(format!(
                    "double pancakes overlap: {} above {}",
                    bottom_of_upper, top_of_lower
                )));
            }
        }
        Ok(())
    }

    /// Tape length per tape width class, m.
    pub fn tape_usage(&self) -> TapeUsage {
        let mut per_width: Vec<(f64, f64)> = Vec::new();
        for p in &self.pancakes {
            let w = p.tape.width_m;
            match per_width.iter_mut().find(|(pw, _)| (*pw - w).abs() < 1e-12) {
                Some((_, l)) => *l += p.tape_length_m(),
                None => per_width.push((w, p.tape_length_m())),
            }
        }
        per_width.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        TapeUsage { per_width }
    }
}

/// Total tape length per width class for a pack or a whole assembly, m.
pub fn tape_length_of(pack: &WindingPack) -> TapeUsage {
    pack.tape_usage()
}

/// One magnet on the actuator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetPlacement {
    pub pack: WindingPack,
    /// Axial position of the pack midplane, m.
    pub z_m: f64,
    /// Magnetic polarity, +1 or -1.
    pub polarity: f64,
}

/// The four-magnet actuator: identical packs at alternating polarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetAssembly {
    pub packs: Vec<MagnetPlacement>,
    /// Axial distance between adjacent magnet midplanes, m.
    pub pole_pitch_m: f64,
    pub cryostat_height_m: f64,
    pub cryostat_width_m: f64,
}

impl MagnetAssembly {
    /// Build `count` copies of `pack` centred on z = 0, pole pitch apart,
    /// polarity alternating starting with +1 on the lowest magnet.
    pub fn periodic(
        pack: WindingPack,
        count: usize,
        pole_pitch_m: f64,
        cryostat_height_m: f64,
        cryostat_width_m: f64,
    ) -> Result<Self> {
        if count == 0 {
            return Err(WecError::InvalidGeometry("assembly needs at least one magnet".into()));
        }
        let mid = 0.5 * (count as f64 - 1.0);
        let packs = (0..count)
            .map(|i| MagnetPlacement {
                pack: pack.clone(),
                z_m: (i as f64 - mid) * pole_pitch_m,
                polarity: if i % 2 == 0 { 1.0 } else { -1.0 },
            })
            .collect();
        let asm = Self { packs, pole_pitch_m, cryostat_height_m, cryostat_width_m };
        asm.validate()?;
        Ok(asm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.packs.is_empty() {
            return Err(WecError::InvalidGeometry("assembly needs at least one magnet".into()));
        }
        for m in &self.packs {
            m.pack.validate()?;
            if m.polarity.abs() != 1.0 {
                return Err(WecError::InvalidGeometry(format!(
                    "magnet polarity must be +-1, got {}",
                    m.polarity
                )));
            }
        }
        for w in self.packs.windows(2) {
            if w[1].z_m <= w[0].z_m {
                return Err(WecError::InvalidGeometry(
                    "magnet positions must be strictly increasing".into(),
                ));
            }
            if w[0].polarity * w[1].polarity != -1.0 {
                return Err(WecError::InvalidGeometry(
                    "adjacent magnets must have opposite polarity".into(),
                ));
            }
        }
        Ok(())
    }

    /// Tape usage summed over all magnets.
    pub fn tape_usage(&self) -> TapeUsage {
        let mut per_width: Vec<(f64, f64)> = Vec::new();
        for m in &self.packs {
            for (w, l) in m.pack.tape_usage().per_width {
                match per_width.iter_mut().find(|(pw, _)| (*pw - w).abs() < 1e-12) {
                    Some((_, acc)) => *acc += l,
                    None => per_width.push((w, l)),
                }
            }
        }
        per_width.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        TapeUsage { per_width }
    }
}

/// One physical turn as a circular filament.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnLoop {
    pub radius_m: f64,
    pub z_m: f64,
    /// Current multiplier: magnet polarity x winding sense x fractional weight.
    pub weight: f64,
    /// Indices for deterministic reporting.
    pub magnet: usize,
    /// Pancake index within the magnet (0 = lowest).
    pub pancake: usize,
    pub turn: usize,
    /// Tape cross-section of this turn, m (width, thickness).
    pub tape_width_m: f64,
    pub tape_thickness_m: f64,
    /// Self-field reference Ic of this turn's tape, A.
    pub tape_ic_ref_a: f64,
}

/// Discretize a whole assembly into filamentary turns, one loop per physical
/// turn (two pancakes per DP), sorted by (z, radius).
pub fn turn_loops_of(assembly: &MagnetAssembly) -> Vec<TurnLoop> {
    let mut loops = Vec::new();
    for (mag_idx, placement) in assembly.packs.iter().enumerate() {
        let (z_mag, mag_pol) = (placement.z_m, placement.polarity);
        for (dp_idx, dp) in placement.pack.pancakes.iter().enumerate() {
            let pitch = dp.radial_pitch_m();
            let full = dp.turns_per_pancake.floor();
            let frac = dp.turns_per_pancake - full;
            // Lower pancake then upper pancake of the DP.
            for (half, z_off) in [(-0.5, 0usize), (0.5, 1usize)] {
                let (sign, which) = (half, z_off);
                let z = z_mag + dp.axial_center_m + sign * dp.tape.width_m;
                let pancake = dp_idx * 2 + which;
                for i in 0..full as usize {
                    loops.push(TurnLoop {
                        radius_m: dp.inner_radius_m + (i as f64 + 0.5) * pitch,
                        z_m: z,
                        weight: mag_pol * dp.polarity,
                        magnet: mag_idx,
                        pancake,
                        turn: i,
                        tape_width_m: dp.tape.width_m,
                        tape_thickness_m: dp.tape.thickness_m,
                        tape_ic_ref_a: dp.tape.ic_ref_a,
                    });
                }
                if frac > 0.0 {
                    loops.push(TurnLoop {
                        radius_m: dp.inner_radius_m + (full + 0.5 * frac) * pitch,
                        z_m: z,
                        weight: mag_pol * dp.polarity * frac,
                        magnet: mag_idx,
                        pancake,
                        turn: full as usize,
                        tape_width_m: dp.tape.width_m,
                        tape_thickness_m: dp.tape.thickness_m,
                        tape_ic_ref_a: dp.tape.ic_ref_a,
                    });
                }
            }
        }
    }
    loops.sort_by(|a, b| {
        (a.z_m, a.radius_m, a.magnet, a.pancake, a.turn)
            .partial_cmp(&(b.z_m, b.radius_m, b.magnet, b.pancake, b.turn))
            .unwrap()
    });
    loops
}

/// Stator winding layout: concentrated three-phase coils in slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmatureLayout {
    pub slot_count: usize,
    pub phases: usize,
    pub coils_per_phase: usize,
    pub turns_per_coil: f64,
    /// Axial height of one coil, m.
    pub coil_height_m: f64,
    /// Coil winding inner radius, m.
    pub coil_inner_radius_m: f64,
    /// Radial depth of the coil winding, m.
    pub coil_radial_depth_m: f64,
    /// Mechanical gap between cryostat and armature bore, m.
    pub air_gap_m: f64,
    /// Copper cross-section of one conductor, m^2.
    pub conductor_area_m2: f64,
    /// Axial span of the slot array, m.
    pub stator_height_m: f64,
}

impl ArmatureLayout {
    pub fn slot_pitch_m(&self) -> f64 {
        self.stator_height_m / self.slot_count as f64
    }

    /// Axial centre of each coil of the given phase together with its winding
    /// sense; phases occupy every `phases`-th slot, alternating sense pole to
    /// pole so the per-coil EMFs add.
    pub fn phase_coils(&self, phase: usize) -> Vec<(f64, f64)> {
        let pitch = self.slot_pitch_m();
        let mid = 0.5 * (self.slot_count as f64 - 1.0);
        (0..self.coils_per_phase)
            .map(|m| {
                let slot = phase + m * self.phases;
                let z = (slot as f64 - mid) * pitch;
                let sense = if m % 2 == 0 { 1.0 } else { -1.0 };
                (z, sense)
            })
            .collect()
    }

    pub fn validate(&self, magnet_count: usize) -> Result<()> {
        if self.phases != 3 {
            return Err(WecError::InvalidGeometry(format!("expected 3 phases, got {}", self.phases)));
        }
        if self.slot_count != self.phases * self.coils_per_phase {
            return Err(WecError::InvalidGeometry(format!(
                "slot count {} must equal phases x coils per phase = {}",
                self.slot_count,
                self.phases * self.coils_per_phase
            )));
        }
        // 3 slots per pole: 12 slots over 4 poles in the reference machine.
        if self.slot_count != 3 * magnet_count {
            return Err(WecError::InvalidGeometry(format!(
                "slot count {} is not 3 slots per pole for {} magnets",
                self.slot_count, magnet_count
            )));
        }
        if self.turns_per_coil <= 0.0 || self.conductor_area_m2 <= 0.0 {
            return Err(WecError::InvalidGeometry("armature coil turns and conductor area must be positive".into()));
        }
        Ok(())
    }
}

/// Mechanical metadata carried through to reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicsParams {
    pub youngs_modulus_gpa: f64,
}

/// Cryogenic bookkeeping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CryoParams {
    /// Latent heat of vaporization of the coolant, J/kg.
    pub coolant_heat_of_vaporization_j_per_kg: f64,
    /// Effective density of the composite winding, kg/m^3.
    pub composite_density_kg_per_m3: f64,
}

/// Operating limits checked by the analysis commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingLimits {
    /// Stator yoke saturation limit, T.
    pub stator_flux_t: f64,
    /// Water-cooled armature current-density limit, A/mm^2.
    pub armature_current_density_a_per_mm2: f64,
    /// Allowed fraction of samples above the current-density limit.
    pub exceedance_duty: f64,
    /// Optional hard limit on armature current, A.
    pub armature_current_limit_a: Option<f64>,
}

/// Full generator description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub assembly: MagnetAssembly,
    pub armature: ArmatureLayout,
    /// Magnet conduction current, A.
    pub operating_current_a: f64,
    /// Coolant bath temperature, K.
    pub operating_temperature_k: f64,
    pub wave: WaveSpec,
    pub circuit: CircuitSpec,
    pub lift: LiftModel,
    /// Multiplicative calibration for the iron stator yoke the air-core
    /// field model does not represent. 1.0 = bare air core.
    pub iron_boost_factor: f64,
    pub mechanics: MechanicsParams,
    pub cryo: CryoParams,
    pub limits: OperatingLimits,
}

impl MachineConfig {
    pub fn validate(&self) -> Result<()> {
        self.assembly.validate()?;
        self.armature.validate(self.assembly.packs.len())?;
        self.wave.validate()?;
        self.circuit.validate()?;
        if self.operating_current_a <= 0.0 {
            return Err(WecError::InvalidGeometry("operating current must be positive".into()));
        }
        if self.iron_boost_factor < 1.0 {
            return Err(WecError::InvalidGeometry(format!(
                "iron boost factor must be >= 1, got {}",
                self.iron_boost_factor
            )));
        }
        let t = self.operating_temperature_k;
        for m in &self.assembly.packs {
            for p in &m.pack.pancakes {
                if t >= p.tape.critical_temperature_k || t <= 0.0 {
                    return Err(WecError::TemperatureRange {
                        t_k: t,
                        lo_k: 0.0,
                        hi_k: p.tape.critical_temperature_k,
                    });
                }
            }
        }
        Ok(())
    }

    /// Winding conductor volume over all magnets, m^3.
    pub fn winding_volume_m3(&self) -> f64 {
        self.assembly
            .packs
            .iter()
            .flat_map(|m| m.pack.pancakes.iter())
            .map(|dp| dp.tape_length_m() * dp.tape.cross_section_m2())
            .sum()
    }

    /// Winding mass from the effective composite density, kg.
    pub fn magnet_mass_kg(&self) -> f64 {
        self.winding_volume_m3() * self.cryo.composite_density_kg_per_m3
    }
}

/// The embedded reference design at its catalogued operating point.
pub fn build_reference_design() -> MachineConfig {
    crate::config::parse_toml(crate::config::REFERENCE_TOML)
        .expect("embedded reference design must parse")
}
