//! Fixed-tape-length parameter sweep over magnet height and width, and the
//! single- versus multi-width comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit;
use crate::error::{Result, WecError};
use crate::geometry::{MachineConfig, MagnetAssembly, TapeSpec, WindingPack};
use crate::magnetostatics::{LinkageTable, TurnFieldMap};
use crate::superconductor::{self, LiftModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    OutputPower,
    EmfRms,
}

/// Grid sweep specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub height_min_mm: f64,
    pub height_max_mm: f64,
    pub height_step_mm: f64,
    pub width_min_mm: f64,
    pub width_max_mm: f64,
    pub width_step_mm: f64,
    pub objective: Objective,
    /// Candidates re-evaluated through the full circuit pipeline.
    pub top_k: usize,
    /// Feasibility: required current margin as a fraction of the operating
    /// current (the catalogued design rule is 0.2).
    #[serde(default)]
    pub min_margin_fraction: f64,
    /// Feasibility: optional hoop-stress ceiling, MPa.
    #[serde(default)]
    pub max_stress_mpa: Option<f64>,
}

impl SweepSpec {
    pub fn heights_mm(&self) -> Vec<f64> {
        grid(self.height_min_mm, self.height_max_mm, self.height_step_mm)
    }

    pub fn widths_mm(&self) -> Vec<f64> {
        grid(self.width_min_mm, self.width_max_mm, self.width_step_mm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.heights_mm().is_empty() || self.widths_mm().is_empty() {
            return Err(WecError::Config("sweep grid is empty".into()));
        }
        if self.height_step_mm <= 0.0 || self.width_step_mm <= 0.0 {
            return Err(WecError::Config("sweep steps must be positive".into()));
        }
        Ok(())
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || hi < lo {
        return Vec::new();
    }
    let n = ((hi - lo) / step + 1.5).floor() as usize;
    (0..n).map(|i| lo + i as f64 * step).filter(|&v| v <= hi + 1e-9).collect()
}

/// One evaluated sweep candidate.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub height_mm: f64,
    pub width_mm: f64,
    pub feasible: bool,
    pub critical_current_a: f64,
    pub margin_a: f64,
    pub max_field_t: f64,
    pub max_hoop_stress_mpa: f64,
    pub emf_rms_v: f64,
    /// Full-circuit output power; present for the top-k designs.
    pub power_out_kw: Option<f64>,
    pub objective_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Index of the proxy-objective argmax among feasible rows.
    pub argmax_proxy: usize,
    /// Index of the full-circuit argmax among the re-evaluated top-k.
    pub argmax_full: usize,
}

/// Rebuild the reference stack recipe at a new (height, width): the two
/// wide end DPs stay, the middle layer count follows the height budget, and
/// per-width turn counts are re-derived so each width class keeps exactly the
/// reference tape length (fractional final turns allowed).
pub fn rebuild_at(
    machine: &MachineConfig,
    height_mm: f64,
    width_mm: f64,
) -> Result<MachineConfig> {
    let reference = &machine.assembly.packs[0].pack;
    let magnets = machine.assembly.packs.len() as f64;
    let gap = reference.insulation_plate_m + reference.layer_clearance_m;
    let usage = machine.assembly.tape_usage();

    // partition the reference layers into the end tape and the middle tape
    let end_dp = reference.pancakes.first().unwrap();
    let mid_dp = reference
        .pancakes
        .iter()
        .find(|p| (p.tape.width_m - end_dp.tape.width_m).abs() > 1e-12)
        .unwrap_or(end_dp);
    let end_tape = end_dp.tape.clone();
    let mid_tape = mid_dp.tape.clone();
    let distinct = (end_tape.width_m - mid_tape.width_m).abs() > 1e-12;

    let height_m = height_mm * 1e-3;
    let width_m = width_mm * 1e-3;
    let inner_radius = end_dp.inner_radius_m;

    // middle layer count from the axial budget:
    //   distinct stocks: h = n_mid (2 w_mid + gap) + 4 w_end + gap
    //   single stock:    h = n_mid (2 w_mid + gap) - gap
    let cell = 2.0 * mid_tape.width_m + gap;
    let n_mid = if distinct {
        ((height_m - 4.0 * end_tape.width_m - gap) / cell).round()
    } else {
        ((height_m + gap) / cell).round()
    }
    .max(1.0) as usize;

    // per-class turns from the fixed tape length at the new radial build
    let mid_len = usage.length_for_width_m(mid_tape.width_m);
    let end_len = usage.length_for_width_m(end_tape.width_m);
    let turns_mid = solve_turns(
        mid_len / (magnets * 2.0 * n_mid as f64),
        inner_radius,
        width_m,
    )?;
    let mut layers: Vec<(TapeSpec, f64)> = Vec::new();
    let mid_scaled = TapeSpec { thickness_m: width_m / turns_mid, ..mid_tape.clone() };
    if distinct {
        let turns_end = solve_turns(end_len / (magnets * 2.0 * 2.0), inner_radius, width_m)?;
        let end_scaled = TapeSpec { thickness_m: width_m / turns_end, ..end_tape.clone() };
        layers.push((end_scaled.clone(), turns_end));
        for _ in 0..n_mid {
            layers.push((mid_scaled.clone(), turns_mid));
        }
        layers.push((end_scaled, turns_end));
    } else {
        for _ in 0..n_mid {
            layers.push((mid_scaled.clone(), turns_mid));
        }
    }

    let pack = WindingPack::stack(
        &layers,
        inner_radius,
        reference.insulation_plate_m,
        reference.layer_clearance_m,
    )?;
    let assembly = MagnetAssembly::periodic(
        pack,
        machine.assembly.packs.len(),
        machine.assembly.pole_pitch_m,
        machine.assembly.cryostat_height_m,
        machine.assembly.cryostat_width_m,
    )?;
    let mut candidate = machine.clone();
    candidate.assembly = assembly;
    candidate.validate()?;
    Ok(candidate)
}

/// Solve the (fractional) turn count whose wound length over the radial build
/// `width_m` equals `target_len_m` for one pancake: turns are uniformly
/// pitched at width/turns, so length(n) = 2 pi n (r_in + width/2) up to the
/// fractional-turn correction handled by the loop construction.
fn solve_turns(target_len_m: f64, inner_radius_m: f64, width_m: f64) -> Result<f64> {
    // length per pancake with uniform pitch p = width/n:
    //   L(n) = sum_{i<floor(n)} 2 pi (r + (i+.5)p) + frac 2 pi (r + (floor+.5 frac) p)
    // bracket around the thin-annulus estimate and bisect on n.
    let est = target_len_m / (std::f64::consts::TAU * (inner_radius_m + 0.5 * width_m));
    if est < 1.0 {
        return Err(WecError::InvalidGeometry(format!(
            "tape budget {target_len_m} m yields under one turn per pancake"
        )));
    }
    let len = |n: f64| -> f64 {
        let p = width_m / n;
        let full = n.floor();
        let frac = n - full;
        let m = full as usize;
        let mut acc = 0.0;
        for i in 0..m {
            acc += std::f64::consts::TAU * (inner_radius_m + (i as f64 + 0.5) * p);
        }
        if frac > 0.0 {
            acc += frac * std::f64::consts::TAU * (inner_radius_m + (full + 0.5 * frac) * p);
        }
        acc
    };
    let (mut lo, mut hi) = (est * 0.9, est * 1.1 + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if len(mid) < target_len_m {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * est {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evaluate one candidate cheaply: load line, stress, EMF RMS proxy.
fn evaluate_proxy(candidate: &MachineConfig, spec: &SweepSpec) -> Result<SweepRow> {
    let map = TurnFieldMap::compute(&candidate.assembly, candidate.iron_boost_factor);
    let tf = superconductor::temperature_factor(&candidate.assembly, candidate.operating_temperature_k)?;
    let ll = superconductor::load_line_from_map(&map, &candidate.lift, tf)?;
    let stress = crate::mechanics::hoop_stress_map(&map, candidate.operating_current_a);
    let enough_margin =
        ll.critical_current_a >= candidate.operating_current_a * (1.0 + spec.min_margin_fraction);
    let stress_ok = spec
        .max_stress_mpa
        .map(|lim| stress.max_hoop_pa / 1e6 <= lim)
        .unwrap_or(true);
    let feasible =
        candidate.operating_current_a < ll.critical_current_a && enough_margin && stress_ok;
    let (max_b, _) = map.magnitude_stats(candidate.operating_current_a);

    // coarse linkage table is enough for an RMS proxy
    let table = LinkageTable::build(candidate, candidate.wave.amplitude_m, 5e-3);
    let period = candidate.wave.period_s();
    let n = 400;
    let mut acc = 0.0;
    for i in 0..n {
        let t = period * i as f64 / n as f64;
        let e = circuit::MachineEmf {
            table: &table,
            wave: candidate.wave,
            conduction_current_a: candidate.operating_current_a,
        }
        .emf_at(t);
        acc += e[0] * e[0];
    }
    let emf_rms = (acc / n as f64).sqrt();

    let pack = &candidate.assembly.packs[0].pack;
    Ok(SweepRow {
        height_mm: pack.total_height_m() * 1e3,
        width_mm: pack.total_width_m() * 1e3,
        feasible,
        critical_current_a: ll.critical_current_a,
        margin_a: ll.critical_current_a - candidate.operating_current_a,
        max_field_t: max_b,
        max_hoop_stress_mpa: stress.max_hoop_pa / 1e6,
        emf_rms_v: emf_rms,
        power_out_kw: None,
        objective_value: emf_rms,
    })
}

/// Exhaustive grid sweep at fixed tape length. Candidates are evaluated
/// concurrently and merged in grid order; infeasible candidates are kept and
/// flagged.
pub fn sweep(spec: &SweepSpec, machine: &MachineConfig) -> Result<SweepReport> {
    spec.validate()?;
    let widths = spec.widths_mm();
    let points: Vec<(f64, f64)> = spec
        .heights_mm()
        .into_iter()
        .flat_map(|h| widths.iter().map(move |&w| (h, w)))
        .collect();

    let mut rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&(h, w)| {
            let candidate = rebuild_at(machine, h, w)?;
            evaluate_proxy(&candidate, spec)
        })
        .collect::<Result<Vec<_>>>()?;

    if !rows.iter().any(|r| r.feasible) {
        return Err(WecError::EmptyFeasibleSet);
    }

    // full-circuit evaluation of the proxy top-k feasible rows
    let mut order: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].feasible).collect();
    order.sort_by(|&a, &b| {
        rows[b]
            .emf_rms_v
            .partial_cmp(&rows[a].emf_rms_v)
            .unwrap()
            .then(a.cmp(&b))
    });
    let k = spec.top_k.max(1).min(order.len());
    for &i in order.iter().take(k) {
        let (h, w) = points[i];
        let candidate = rebuild_at(machine, h, w)?;
        let table = LinkageTable::build(&candidate, candidate.wave.amplitude_m, 5e-3);
        let (_, m) = circuit::run_case(
            &candidate,
            &table,
            &candidate.wave,
            candidate.operating_current_a,
            2,
        )?;
        rows[i].power_out_kw = Some(m.power_out_kw);
        if spec.objective == Objective::OutputPower {
            rows[i].objective_value = m.power_out_kw;
        }
    }

    let argmax_proxy = order[0];
    let argmax_full = order
        .iter()
        .take(k)
        .copied()
        .max_by(|&a, &b| {
            rows[a]
                .power_out_kw
                .unwrap_or(f64::NEG_INFINITY)
                .partial_cmp(&rows[b].power_out_kw.unwrap_or(f64::NEG_INFINITY))
                .unwrap()
                .then(b.cmp(&a))
        })
        .unwrap_or(argmax_proxy);

    Ok(SweepReport { rows, argmax_proxy, argmax_full })
}

/// Percentage deltas of multi-width over single-width at shared tape length.
#[derive(Debug, Clone, Serialize)]
pub struct WidthComparison {
    pub single_critical_current_a: f64,
    pub multi_critical_current_a: f64,
    pub delta_ic_pct: f64,
    pub single_power_kw: f64,
    pub multi_power_kw: f64,
    pub delta_power_pct: f64,
}

/// Build the all-4 mm single-width variant of the reference design at the
/// same total tape length and the same 13-layer, 22.4 mm envelope recipe.
pub fn single_width_variant(machine: &MachineConfig) -> Result<MachineConfig> {
    let reference = &machine.assembly.packs[0].pack;
    let magnets = machine.assembly.packs.len() as f64;
    let usage = machine.assembly.tape_usage();
    let total_len = usage.total_m();
    let n_layers = reference.pancakes.len();
    let width_m = reference.total_width_m();
    // narrowest stock is the single-width tape
    let tape = reference
        .pancakes
        .iter()
        .map(|p| &p.tape)
        .min_by(|a, b| a.width_m.partial_cmp(&b.width_m).unwrap())
        .unwrap()
        .clone();
    let inner_radius = reference.pancakes[0].inner_radius_m;
    let turns = solve_turns(total_len / (magnets * 2.0 * n_layers as f64), inner_radius, width_m)?;
    let scaled = TapeSpec { thickness_m: width_m / turns, ..tape };
    let layers: Vec<(TapeSpec, f64)> = (0..n_layers).map(|_| (scaled.clone(), turns)).collect();
    let pack = WindingPack::stack(
        &layers,
        inner_radius,
        reference.insulation_plate_m,
        reference.layer_clearance_m,
    )?;
    let assembly = MagnetAssembly::periodic(
        pack,
        machine.assembly.packs.len(),
        machine.assembly.pole_pitch_m,
        machine.assembly.cryostat_height_m,
        machine.assembly.cryostat_width_m,
    )?;
    let mut single = machine.clone();
    single.assembly = assembly;
    single.validate()?;
    Ok(single)
}

/// Compare the load-line Ic and end-to-end power of two designs sharing the
/// same total tape length. Each design runs at the same relative current
/// margin (I_op scaled by its own Ic), so the comparison is between safe
/// operating points.
pub fn compare_multi_width(
    single: &MachineConfig,
    multi: &MachineConfig,
    lift: &LiftModel,
) -> Result<WidthComparison> {
    let tf_s = superconductor::temperature_factor(&single.assembly, single.operating_temperature_k)?;
    let tf_m = superconductor::temperature_factor(&multi.assembly, multi.operating_temperature_k)?;
    let map_s = TurnFieldMap::compute(&single.assembly, single.iron_boost_factor);
    let map_m = TurnFieldMap::compute(&multi.assembly, multi.iron_boost_factor);
    let ic_s = superconductor::load_line_from_map(&map_s, lift, tf_s)?.critical_current_a;
    let ic_m = superconductor::load_line_from_map(&map_m, lift, tf_m)?.critical_current_a;

    let load_fraction = multi.operating_current_a / ic_m;
    let run = |machine: &MachineConfig, current: f64| -> Result<f64> {
        let table = LinkageTable::build(machine, machine.wave.amplitude_m, 5e-3);
        let (_, m) = circuit::run_case(machine, &table, &machine.wave, current, 2)?;
        Ok(m.power_out_kw)
    };
    let p_m = run(multi, multi.operating_current_a)?;
    let p_s = run(single, load_fraction * ic_s)?;

    Ok(WidthComparison {
        single_critical_current_a: ic_s,
        multi_critical_current_a: ic_m,
        delta_ic_pct: (ic_m / ic_s - 1.0) * 100.0,
        single_power_kw: p_s,
        multi_power_kw: p_m,
        delta_power_pct: (p_m / p_s - 1.0) * 100.0,
    })
}

/// Relative tape-length error of `candidate` against `reference`, per width
/// class (worst case).
pub fn tape_length_error(reference: &MachineConfig, candidate: &MachineConfig) -> f64 {
    let ref_usage = reference.assembly.tape_usage();
    let cand_usage = candidate.assembly.tape_usage();
    let mut worst = 0.0_f64;
    for (w, l_ref) in &ref_usage.per_width {
        let l = cand_usage.length_for_width_m(*w);
        if *l_ref > 0.0 {
            worst = worst.max((l - l_ref).abs() / l_ref);
        }
    }
    // a candidate may merge width classes (single-width rebuild): compare totals too
    worst.min((cand_usage.total_m() - ref_usage.total_m()).abs() / ref_usage.total_m())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_generation() {
        assert_eq!(grid(1.0, 3.0, 1.0), vec![1.0, 2.0, 3.0]);
        assert_eq!(grid(1.0, 1.0, 1.0), vec![1.0]);
        assert!(grid(3.0, 1.0, 1.0).is_empty());
    }

    #[test]
    fn solve_turns_round_trips_length() {
        let r = 0.106;
        let w = 0.0224;
        for target in [30.0, 55.5, 120.0] {
            let n = solve_turns(target, r, w).unwrap();
            let p = w / n;
            let full = n.floor() as usize;
            let frac = n - n.floor();
            let mut len = 0.0;
            for i in 0..full {
                len += std::f64::consts::TAU * (r + (i as f64 + 0.5) * p);
            }
            if frac > 0.0 {
                len += frac * std::f64::consts::TAU * (r + (n.floor() + 0.5 * frac) * p);
            }
            assert!((len - target).abs() < 1e-6 * target, "target {target}: {len}");
        }
    }
}
