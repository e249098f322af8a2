//! Output writers (CSV time series and maps, JSON summaries) and the
//! command-level pipeline shared by the CLI and the test suites.
//!
//! All files are SI-with-stated-units, written with shortest-roundtrip float
//! formatting so reruns with identical inputs are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::circuit::{self, Metrics, TransientResult};
use crate::cryogenics;
use crate::error::{Result, WecError};
use crate::excitation::WaveSpec;
use crate::geometry::MachineConfig;
use crate::magnetostatics::{self, FieldMap, LinkageTable, TurnFieldMap};
use crate::mechanics::StressMap;
use crate::optimizer::{self, SweepReport, SweepSpec};
use crate::superconductor::{self, LoadLineResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance record dropped into every output directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub output_directory: String,
    pub tool_version: String,
    /// SHA-256 of the config file body, hex.
    pub config_sha256: String,
    /// Wall-clock time of the run (RFC 3339, UTC). Excluded from the
    /// byte-identity contract, which covers the data outputs.
    pub timestamp_utc: String,
}

impl RunManifest {
    pub fn new(command: &str, config_path: &str, out_dir: &Path, config_body: &str) -> Self {
        Self {
            command: command.to_string(),
            config_path: config_path.to_string(),
            output_directory: out_dir.display().to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config_sha256: sha256_hex(config_body.as_bytes()),
            timestamp_utc: now_rfc3339(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        write_json(&out_dir.join("manifest.json"), self)
    }
}

fn now_rfc3339() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    // days since epoch -> civil date (Howard Hinnant's algorithm)
    let days = (secs / 86_400) as i64;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let mo = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = if mo <= 2 { y + 1 } else { y };
    format!("{y:04}-{mo:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| WecError::Config(format!("JSON serialization failed: {e}")))?;
    std::fs::write(path, body + "\n")?;
    Ok(())
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body)?;
    Ok(())
}

/// Transient time series: t_s, e1_V..e3_V, i1_A..i3_A, vout_V, idc_A.
pub fn transient_csv(ts: &TransientResult) -> String {
    let mut s = String::with_capacity(ts.time_s.len() * 96);
    s.push_str("t_s,e1_V,e2_V,e3_V,i1_A,i2_A,i3_A,vout_V,idc_A\n");
    for i in 0..ts.time_s.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            ts.time_s[i],
            ts.emf_v[0][i],
            ts.emf_v[1][i],
            ts.emf_v[2][i],
            ts.phase_current_a[0][i],
            ts.phase_current_a[1][i],
            ts.phase_current_a[2][i],
            ts.load_voltage_v[i],
            ts.dc_current_a[i],
        );
    }
    s
}

/// Field map: r_mm, z_mm, Br_T, Bz_T, Bmag_T.
pub fn field_map_csv(map: &FieldMap) -> String {
    let mut s = String::from("r_mm,z_mm,Br_T,Bz_T,Bmag_T\n");
    for (r, z, f) in &map.samples {
        let _ = writeln!(s, "{},{},{},{},{}", r * 1e3, z * 1e3, f.b_r, f.b_z, f.magnitude());
    }
    s
}

/// Stress map: pancake, turn, r_mm, z_mm, sigma_hoop_MPa, sigma_radial_MPa.
pub fn stress_csv(map: &StressMap) -> String {
    let mut s = String::from("magnet,pancake,turn,r_mm,z_mm,sigma_hoop_MPa,sigma_radial_MPa\n");
    for x in &map.samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            x.magnet,
            x.pancake,
            x.turn,
            x.r_m * 1e3,
            x.z_m * 1e3,
            x.sigma_hoop_pa / 1e6,
            x.sigma_radial_pa / 1e6
        );
    }
    s
}

/// Load line: I_A, min_Ic_A.
pub fn loadline_csv(curve: &[(f64, f64)]) -> String {
    let mut s = String::from("I_A,min_Ic_A\n");
    for (i, ic) in curve {
        let _ = writeln!(s, "{i},{ic}");
    }
    s
}

/// Waveform: t_s, z_m, v_mps.
pub fn waveform_csv(wave: &WaveSpec, t_end_s: f64, dt_s: f64) -> String {
    let mut s = String::from("t_s,z_m,v_mps\n");
    let n = (t_end_s / dt_s).round() as usize;
    for i in 0..=n {
        let t = i as f64 * dt_s;
        let (z, v) = wave.actuator_state(t);
        let _ = writeln!(s, "{t},{z},{v}");
    }
    s
}

/// Sweep rows as CSV.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut s = String::from(
        "height_mm,width_mm,feasible,Ic_A,margin_A,max_B_T,max_stress_MPa,emf_rms_V,P_out_kW,objective\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.height_mm,
            r.width_mm,
            r.feasible,
            r.critical_current_a,
            r.margin_a,
            r.max_field_t,
            r.max_hoop_stress_mpa,
            r.emf_rms_v,
            r.power_out_kw.map(|p| p.to_string()).unwrap_or_default(),
            r.objective_value
        );
    }
    s
}

/// Load-line command output.
#[derive(Debug, Clone, Serialize)]
pub struct LoadlineReport {
    pub critical_current_a: f64,
    pub operating_current_a: f64,
    pub margin_a: f64,
    pub margin_pct: f64,
    /// Set when the operating point sits at or above the critical current.
    pub margin_negative: bool,
    pub limiting_turn: superconductor::TurnRef,
    pub iterations: usize,
}

impl LoadlineReport {
    pub fn from_result(ll: &LoadLineResult, i_op: f64) -> Self {
        let margin_a = ll.critical_current_a - i_op;
        Self {
            critical_current_a: ll.critical_current_a,
            operating_current_a: i_op,
            margin_a,
            margin_pct: margin_a / i_op * 100.0,
            margin_negative: margin_a <= 0.0,
            limiting_turn: ll.limiting_turn,
            iterations: ll.iterations,
        }
    }
}

/// The combined multiphysics summary (one row per analysis quantity).
#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    pub max_flux_density_t: f64,
    pub avg_flux_density_t: f64,
    pub critical_current_a: f64,
    pub current_margin_a: f64,
    pub current_margin_pct: f64,
    pub margin_negative: bool,
    pub max_stress_mpa: f64,
    pub avg_stress_mpa: f64,
    pub youngs_modulus_gpa: f64,
    pub magnet_mass_kg: f64,
    pub coolant_mass_kg: f64,
    pub current_sharing_temperature_k: f64,
    pub stability_margin_j_per_m3: f64,
    pub gap_peak_field_t: f64,
    pub stator_flux_limit_t: f64,
    pub stator_flux_ok: bool,
}

/// Shared expensive intermediates for the analysis commands.
pub struct Analysis {
    pub machine: MachineConfig,
    pub turn_map: TurnFieldMap,
    pub temperature_factor: f64,
}

impl Analysis {
    pub fn new(machine: MachineConfig) -> Result<Self> {
        machine.validate()?;
        let turn_map = TurnFieldMap::compute(&machine.assembly, machine.iron_boost_factor);
        let temperature_factor =
            superconductor::temperature_factor(&machine.assembly, machine.operating_temperature_k)?;
        Ok(Self { machine, turn_map, temperature_factor })
    }

    pub fn load_line(&self) -> Result<LoadLineResult> {
        superconductor::load_line_from_map(&self.turn_map, &self.machine.lift, self.temperature_factor)
    }

    pub fn summary(&self) -> Result<SummaryReport> {
        let machine = &self.machine;
        let ll = self.load_line()?;
        let (max_b, mean_b) = self.turn_map.magnitude_stats(machine.operating_current_a);
        let stress = crate::mechanics::hoop_stress_map(&self.turn_map, machine.operating_current_a);
        let margin_a = ll.critical_current_a - machine.operating_current_a;

        let h_cu = cryogenics::copper_enthalpy();
        let c_w = cryogenics::winding_heat_capacity();
        let magnet_mass = machine.magnet_mass_kg();
        let coolant = cryogenics::coolant_mass(
            magnet_mass,
            &h_cu,
            machine.cryo.coolant_heat_of_vaporization_j_per_kg,
        )?;
        let t_cs = superconductor::current_sharing_temperature(
            machine.operating_current_a,
            ll.critical_current_a,
            machine.operating_temperature_k,
            machine.assembly.packs[0].pack.pancakes[0].tape.critical_temperature_k,
        )?;
        let margin = cryogenics::stability_margin(&c_w, machine.operating_temperature_k, t_cs)?;
        let gap_peak = magnetostatics::gap_peak_field(machine, 400)?;

        Ok(SummaryReport {
            max_flux_density_t: max_b,
            avg_flux_density_t: mean_b,
            critical_current_a: ll.critical_current_a,
            current_margin_a: margin_a,
            current_margin_pct: margin_a / machine.operating_current_a * 100.0,
            margin_negative: margin_a <= 0.0,
            max_stress_mpa: stress.max_hoop_pa / 1e6,
            avg_stress_mpa: stress.mean_hoop_pa / 1e6,
            youngs_modulus_gpa: machine.mechanics.youngs_modulus_gpa,
            magnet_mass_kg: magnet_mass,
            coolant_mass_kg: coolant,
            current_sharing_temperature_k: t_cs,
            stability_margin_j_per_m3: margin,
            gap_peak_field_t: gap_peak,
            stator_flux_limit_t: machine.limits.stator_flux_t,
            stator_flux_ok: gap_peak < machine.limits.stator_flux_t,
        })
    }
}

/// `simulate` command: transient CSV + metrics JSON + current-density report.
pub fn cmd_simulate(machine: &MachineConfig, cycles: usize, out_dir: &Path) -> Result<Metrics> {
    std::fs::create_dir_all(out_dir)?;
    let table = LinkageTable::build(machine, machine.wave.amplitude_m, 2e-3);
    let (ts, metrics) =
        circuit::run_case(machine, &table, &machine.wave, machine.operating_current_a, cycles)?;
    write_text(&out_dir.join("transient.csv"), &transient_csv(&ts))?;
    write_text(
        &out_dir.join("waveform.csv"),
        &waveform_csv(&machine.wave, machine.wave.period_s() * (cycles + 1) as f64, ts.dt_s),
    )?;
    write_json(&out_dir.join("metrics.json"), &metrics)?;
    let density = cryogenics::armature_current_density_check(
        &ts,
        machine.armature.conductor_area_m2 * 1e6,
        machine.limits.armature_current_density_a_per_mm2,
        machine.limits.exceedance_duty,
    );
    write_json(&out_dir.join("current_density.json"), &density)?;
    Ok(metrics)
}

/// `loadline` command: load-line CSV + margin report JSON.
pub fn cmd_loadline(analysis: &Analysis, out_dir: &Path) -> Result<LoadlineReport> {
    std::fs::create_dir_all(out_dir)?;
    let ll = analysis.load_line()?;
    let i_max = (1.5 * ll.critical_current_a).max(analysis.machine.operating_current_a * 1.2);
    let curve = superconductor::load_line_curve(
        &analysis.turn_map,
        &analysis.machine.lift,
        analysis.temperature_factor,
        i_max,
        121,
    );
    write_text(&out_dir.join("loadline.csv"), &loadline_csv(&curve))?;
    let report = LoadlineReport::from_result(&ll, analysis.machine.operating_current_a);
    write_json(&out_dir.join("loadline.json"), &report)?;
    Ok(report)
}

/// `cryo` command: cryogenic figures JSON + the embedded tables for audit.
pub fn cmd_cryo(analysis: &Analysis, out_dir: &Path) -> Result<cryogenics::CryoReport> {
    std::fs::create_dir_all(out_dir)?;
    let machine = &analysis.machine;
    let ll = analysis.load_line()?;
    let h_cu = cryogenics::copper_enthalpy();
    let c_w = cryogenics::winding_heat_capacity();
    let magnet_mass = machine.magnet_mass_kg();
    let coolant = cryogenics::coolant_mass(
        magnet_mass,
        &h_cu,
        machine.cryo.coolant_heat_of_vaporization_j_per_kg,
    )?;
    let t_cs = superconductor::current_sharing_temperature(
        machine.operating_current_a,
        ll.critical_current_a,
        machine.operating_temperature_k,
        machine.assembly.packs[0].pack.pancakes[0].tape.critical_temperature_k,
    )?;
    let margin = cryogenics::stability_margin(&c_w, machine.operating_temperature_k, t_cs)?;
    let report = cryogenics::CryoReport {
        magnet_mass_kg: magnet_mass,
        coolant_mass_kg: coolant,
        current_sharing_temperature_k: t_cs,
        stability_margin_j_per_m3: margin,
    };
    report.validate(
        machine.operating_temperature_k,
        machine.assembly.packs[0].pack.pancakes[0].tape.critical_temperature_k,
    )?;
    write_json(&out_dir.join("cryo.json"), &report)?;
    write_text(&out_dir.join("copper_enthalpy.csv"), cryogenics::COPPER_ENTHALPY_CSV)?;
    write_text(
        &out_dir.join("winding_heat_capacity.csv"),
        cryogenics::WINDING_HEAT_CAPACITY_CSV,
    )?;
    Ok(report)
}

/// `stress` command: per-turn stress CSV + summary JSON.
pub fn cmd_stress(analysis: &Analysis, out_dir: &Path) -> Result<StressMap> {
    std::fs::create_dir_all(out_dir)?;
    let map = crate::mechanics::hoop_stress_map(&analysis.turn_map, analysis.machine.operating_current_a);
    write_text(&out_dir.join("stress.csv"), &stress_csv(&map))?;
    #[derive(Serialize)]
    struct StressSummary {
        max_hoop_mpa: f64,
        mean_hoop_mpa: f64,
        max_radial_mpa: f64,
        mean_radial_mpa: f64,
        youngs_modulus_gpa: f64,
    }
    write_json(
        &out_dir.join("stress.json"),
        &StressSummary {
            max_hoop_mpa: map.max_hoop_pa / 1e6,
            mean_hoop_mpa: map.mean_hoop_pa / 1e6,
            max_radial_mpa: map.max_radial_pa / 1e6,
            mean_radial_mpa: map.mean_radial_pa / 1e6,
            youngs_modulus_gpa: analysis.machine.mechanics.youngs_modulus_gpa,
        },
    )?;
    Ok(map)
}

/// `sweep` command: candidate grid CSV + JSON.
pub fn cmd_sweep(machine: &MachineConfig, spec: &SweepSpec, out_dir: &Path) -> Result<SweepReport> {
    std::fs::create_dir_all(out_dir)?;
    let report = optimizer::sweep(spec, machine)?;
    write_text(&out_dir.join("sweep.csv"), &sweep_csv(&report))?;
    write_json(&out_dir.join("sweep.json"), &report)?;
    Ok(report)
}

/// `report` command: the merged multiphysics summary plus a field map over
/// the winding cross-section.
pub fn cmd_report(analysis: &Analysis, out_dir: &Path) -> Result<SummaryReport> {
    std::fs::create_dir_all(out_dir)?;
    let summary = analysis.summary()?;
    write_json(&out_dir.join("report.json"), &summary)?;
    let map = magnetostatics::winding_field_map(&analysis.turn_map, analysis.machine.operating_current_a);
    write_text(&out_dir.join("winding_field.csv"), &field_map_csv(&map))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_hashes_config_body() {
        let m = RunManifest::new("simulate", "reference.toml", Path::new("/tmp/out"), "abc");
        // sha256("abc")
        assert_eq!(
            m.config_sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(m.tool_version, TOOL_VERSION);
    }

    #[test]
    fn csv_headers_match_interface() {
        let wave = WaveSpec {
            form: crate::excitation::WaveForm::Sinusoidal,
            amplitude_m: 1.0,
            frequency_hz: 1.0,
            phase_rad: 0.0,
        };
        let csv = waveform_csv(&wave, 1.0, 0.5);
        assert!(csv.starts_with("t_s,z_m,v_mps\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
