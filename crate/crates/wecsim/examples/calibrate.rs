//! One-time calibration of the reference design's empirical constants.
//!
//! Stage 1 picks the iron boost factor from the catalogued field figures
//! (magnet centre and winding maximum at operating current). Stage 2 fits the
//! anisotropic lift model so the magnet load line, the single-width baseline,
//! and the per-turn Ic extremes land on their catalogued values. Stage 3
//! sizes the armature turns and phase resistance from the catalogued phase
//! voltage and output power.
//!
//! Run with `cargo run --release --example calibrate`, then copy the printed
//! TOML fragment into `data/reference.toml`.

use wecsim::circuit::{self, MachineEmf};
use wecsim::geometry::{build_reference_design, MachineConfig};
use wecsim::magnetostatics::{loops_field, LinkageTable, TurnFieldMap};
use wecsim::optimizer::single_width_variant;
use wecsim::superconductor::{load_line_from_map, temperature_factor, LiftModel};

#[allow(clippy::approx_constant)] // teslas, not pi
const CENTER_TARGET_T: f64 = 3.14;
const MAX_TARGET_T: f64 = 4.45;
const IC_TARGET_A: f64 = 215.0;
const IC_SINGLE_TARGET_A: f64 = 150.0;
const TURN_IC_MIN_A: f64 = 248.9;
const TURN_IC_MAX_A: f64 = 951.0;
const MEAN_TARGET_T: f64 = 1.94;
const VRMS_TARGET_V: f64 = 267.0;
const POWER_TARGET_KW: f64 = 14.1;

fn main() {
    let machine = build_reference_design();
    let i_op = machine.operating_current_a;

    // CAL_VERIFY=1: skip the fits, print the case matrix for the config as-is.
    if std::env::var("CAL_VERIFY").is_ok() {
        verify(&machine);
        return;
    }

    // ------------------------------------------------------------------
    // stage 1: iron boost factor from the three field anchors
    // ------------------------------------------------------------------
    let air = TurnFieldMap::compute(&machine.assembly, 1.0);
    let (max_air, mean_air) = air.magnitude_stats(i_op);
    println!("air-core field at {i_op} A:");
    for (_label, dr_mm) in [("bore edge", -1.0), ("bore -3mm", -3.0), ("mid-build", 11.2), ("outer edge", 23.4)] {
        let b = field_at(&machine, i_op, dr_mm * 1e-3);
        println!("  |B| at r_in{dr_mm:+.1} mm, magnet midplane = {b:.4} T");
    }
    let center_air = field_at(&machine, i_op, -1.0e-3);
    println!("  winding max  |B| = {max_air:.4} T");
    println!("  winding mean |B| = {mean_air:.4} T");

    // geometric midpoint of the window where all three banded anchors hold
    let lo = (CENTER_TARGET_T * 0.85 / center_air)
        .max(MAX_TARGET_T * 0.85 / max_air)
        .max(MEAN_TARGET_T * 0.80 / mean_air)
        .max(1.0);
    let hi = (CENTER_TARGET_T * 1.15 / center_air)
        .min(MAX_TARGET_T * 1.15 / max_air)
        .min(MEAN_TARGET_T * 1.20 / mean_air);
    assert!(hi > lo, "field anchor bands admit no common boost: [{lo}, {hi}]");
    let boost = (lo * hi).sqrt();
    println!("feasible boost window [{lo:.4}, {hi:.4}]");
    println!("iron_boost_factor = {boost:.6}");
    println!(
        "  -> centre {:.3} T (band {:.3}..{:.3}), max {:.3} T (band {:.3}..{:.3}), mean {:.3} T (band {:.3}..{:.3})",
        center_air * boost, CENTER_TARGET_T * 0.85, CENTER_TARGET_T * 1.15,
        max_air * boost, MAX_TARGET_T * 0.85, MAX_TARGET_T * 1.15,
        mean_air * boost, MEAN_TARGET_T * 0.8, MEAN_TARGET_T * 1.2
    );

    // ------------------------------------------------------------------
    // stage 2: lift model fit
    // ------------------------------------------------------------------
    let map = TurnFieldMap::compute(&machine.assembly, boost);
    let single = single_width_variant(&machine).expect("single-width variant");
    let map_single = TurnFieldMap::compute(&single.assembly, boost);
    let tf = temperature_factor(&machine.assembly, machine.operating_temperature_k).unwrap();

    let residual = |p: &[f64; 5]| -> f64 {
        let (ic4, k, b0, beta, rho) = (p[0], p[1], p[2], p[3], p[4]);
        let lift = LiftModel::Kim { anisotropy: k, b0_t: b0, beta };
        let multi = scaled_load_line(&map, &lift, tf, ic4, rho);
        let single_ic = scaled_load_line(&map_single, &lift, tf, ic4, rho);
        let (turn_min, turn_max) = turn_ic_range(&map, &lift, tf, ic4, rho, i_op);
        let e1 = (multi / IC_TARGET_A - 1.0).powi(2);
        let e2 = (single_ic / IC_SINGLE_TARGET_A - 1.0).powi(2);
        let e3 = (turn_min / TURN_IC_MIN_A - 1.0).powi(2);
        let e4 = (turn_max / TURN_IC_MAX_A - 1.0).powi(2);
        let e5 = ((multi / single_ic) / (IC_TARGET_A / IC_SINGLE_TARGET_A) - 1.0).powi(2);
        e1 * 4.0 + e2 * 4.0 + e3 + e4 + e5 * 6.0
    };

    // nested grid refinement over (ic4_ref, anisotropy, B0, beta, ic6/ic4)
    let mut best = [900.0, 0.3, 1.5, 1.0, 1.5];
    let mut spans = [600.0, 0.25, 1.2, 0.8, 0.5];
    let mut best_val = residual(&best);
    for round in 0..8 {
        let base = best;
        for i0 in -2..=2i32 {
            for i1 in -2..=2i32 {
                for i2 in -2..=2i32 {
                    for i3 in -2..=2i32 {
                        for i4 in -2..=2i32 {
                            let p = [
                                (base[0] + i0 as f64 * spans[0] / 2.0).max(300.0),
                                (base[1] + i1 as f64 * spans[1] / 2.0).clamp(0.01, 1.0),
                                (base[2] + i2 as f64 * spans[2] / 2.0).max(0.2),
                                (base[3] + i3 as f64 * spans[3] / 2.0).clamp(0.2, 3.0),
                                (base[4] + i4 as f64 * spans[4] / 2.0).clamp(1.0, 2.5),
                            ];
                            let v = residual(&p);
                            if v < best_val {
                                best_val = v;
                                best = p;
                            }
                        }
                    }
                }
            }
        }
        for s in spans.iter_mut() {
            *s *= 0.45;
        }
        println!("fit round {round}: residual {best_val:.6} at {best:?}");
    }

    let lift = LiftModel::Kim { anisotropy: best[1], b0_t: best[2], beta: best[3] };
    let ic_multi = scaled_load_line(&map, &lift, tf, best[0], best[4]);
    let ic_single = scaled_load_line(&map_single, &lift, tf, best[0], best[4]);
    let (tmin, tmax) = turn_ic_range(&map, &lift, tf, best[0], best[4], i_op);
    println!("lift fit:");
    println!("  ic_ref 4 mm   = {:.2} A (6 mm = {:.2})", best[0], best[4] * best[0]);
    println!("  anisotropy    = {:.5}", best[1]);
    println!("  b0_t          = {:.5}", best[2]);
    println!("  beta          = {:.5}", best[3]);
    println!("  multi-width Ic  {ic_multi:.2} A (target {IC_TARGET_A})");
    println!("  single-width Ic {ic_single:.2} A (target {IC_SINGLE_TARGET_A})");
    println!("  delta Ic        {:.2} % (target 43.3)", (ic_multi / ic_single - 1.0) * 100.0);
    println!("  turn Ic range at {i_op} A: {tmin:.1} .. {tmax:.1} A (targets {TURN_IC_MIN_A} / {TURN_IC_MAX_A})");

    // ------------------------------------------------------------------
    // stress preview at the calibrated boost
    // ------------------------------------------------------------------
    let stress = wecsim::mechanics::hoop_stress_map(&map, i_op);
    println!(
        "hoop stress: max {:.2} MPa (band 18.2..30.3), mean {:.2} MPa (band 8.9..14.9)",
        stress.max_hoop_pa / 1e6,
        stress.mean_hoop_pa / 1e6
    );
    let mut worst: Vec<_> = stress.samples.iter().collect();
    worst.sort_by(|a, b| b.sigma_hoop_pa.abs().partial_cmp(&a.sigma_hoop_pa.abs()).unwrap());
    for s in worst.iter().take(5) {
        println!(
            "  magnet {} pancake {} turn {}: sigma {:.1} MPa at r {:.1} mm z {:+.1} mm",
            s.magnet, s.pancake, s.turn, s.sigma_hoop_pa / 1e6, s.r_m * 1e3, s.z_m * 1e3
        );
    }

    // ------------------------------------------------------------------
    // stage 3: armature turns and phase resistance
    // ------------------------------------------------------------------
    let mut cal = machine.clone();
    cal.iron_boost_factor = boost;
    cal.lift = lift.clone();

    let table = LinkageTable::build(&cal, cal.wave.amplitude_m, 2e-3);
    let rms_per_turn = emf_rms(&cal, &table, i_op) / cal.armature.turns_per_coil;
    let turns = (VRMS_TARGET_V / rms_per_turn).round();
    println!("EMF rms per armature turn = {rms_per_turn:.4} V -> turns_per_coil = {turns}");

    cal.armature.turns_per_coil = turns;
    let table = LinkageTable::build(&cal, cal.wave.amplitude_m, 2e-3);
    println!("EMF rms at {turns} turns = {:.2} V (target {VRMS_TARGET_V})", emf_rms(&cal, &table, i_op));

    // scan the phase resistance and pick the band-aware best point
    println!("R_arm scan (N = {turns}):");
    println!("  R_ohm    P_kW   loss_kW  eff_%   PF     peakA");
    let mut choice = (f64::INFINITY, 0.4);
    for r in [0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.5, 2.0] {
        cal.circuit.armature_resistance_ohm = r;
        let (_, m) = circuit::run_case(&cal, &table, &cal.wave, i_op, 3).expect("transient");
        let peak = m.peak_phase_current_a.iter().cloned().fold(0.0, f64::max);
        println!(
            "  {:5.2}  {:6.2}  {:6.2}  {:5.1}  {:5.3}  {:5.1}",
            r, m.power_out_kw, m.joule_loss_kw, m.efficiency_pct, m.power_factor, peak
        );
        // distance outside the P and PF acceptance bands plus a mild pull
        // toward the catalogued loss figure
        let p_viol = ((POWER_TARGET_KW * 0.8 - m.power_out_kw).max(0.0)
            + (m.power_out_kw - POWER_TARGET_KW * 1.2).max(0.0))
            / POWER_TARGET_KW;
        let pf_viol = ((0.74 - m.power_factor).max(0.0) + (m.power_factor - 0.94).max(0.0)) / 0.84;
        let loss_pull = (m.joule_loss_kw - 8.4).abs() / 84.0;
        let score = p_viol * 10.0 + pf_viol * 3.0 + loss_pull;
        if score < choice.0 {
            choice = (score, r);
        }
    }
    // cross-check the full case matrix before freezing the resistance
    let big_table = LinkageTable::build(&cal, 1.75, 2e-3);
    for r in [0.3, 0.4, 0.5, 0.6] {
        cal.circuit.armature_resistance_ohm = r;
        let case = |amp: f64, cur: f64| -> f64 {
            let wave = wecsim::excitation::WaveSpec { amplitude_m: amp, ..cal.wave };
            let (_, m) = circuit::run_case(&cal, &big_table, &wave, cur, 3).expect("transient");
            m.power_out_kw
        };
        let p11 = case(1.25, 179.0);
        let p12 = case(1.25, 215.0);
        let p21 = case(1.75, 179.0);
        let p22 = case(1.75, 215.0);
        let tri_wave = wecsim::excitation::WaveSpec {
            form: wecsim::excitation::WaveForm::Triangular,
            ..cal.wave
        };
        let (_, mt) = circuit::run_case(&cal, &big_table, &tri_wave, 179.0, 3).expect("transient");
        let gap = (1.0 - mt.power_out_kw / p11) * 100.0;
        println!(
            "R={r}: P(1.25,179)={p11:.2} [11.3..16.9], P(1.25,215)={p12:.2} [16.9..25.3], \
             P(1.75,179)={p21:.2} [19.7..29.5], P(1.75,215)={p22:.2} [28.6..42.8], tri gap={gap:.1}% [9.8..39.8]"
        );
    }
    let r_phase = choice.1;
    cal.circuit.armature_resistance_ohm = r_phase;
    let (_, m) = circuit::run_case(&cal, &table, &cal.wave, i_op, 3).expect("transient");
    println!("armature_resistance_ohm = {r_phase:.4}");
    println!(
        "  -> P {:.2} kW, loss {:.2} kW, eff {:.1} %, PF {:.3}, Vrms in {:?}, peaks {:?}",
        m.power_out_kw, m.joule_loss_kw, m.efficiency_pct, m.power_factor, m.vrms_in_v, m.peak_phase_current_a
    );
    println!(
        "  -> fundamentals in/out {:.3} / {:.3} Hz, THD in/out {:.3} / {:.3}",
        m.fundamental_in_hz, m.fundamental_out_hz, m.thd_in, m.thd_out
    );

    println!("\n==== TOML fragment ====");
    println!("iron_boost_factor = {boost}");
    println!("[tape.four] ic_ref_a = {}", best[0]);
    println!("[tape.six]  ic_ref_a = {}", best[4] * best[0]);
    println!("[lift] anisotropy = {}, b0_t = {}, beta = {}", best[1], best[2], best[3]);
    println!("[armature] turns_per_coil = {turns}");
    println!("[circuit] armature_resistance_ohm = {r_phase}");
}

/// Case matrix for the frozen config: acceptance bands in brackets.
fn verify(machine: &MachineConfig) {
    let i_op = machine.operating_current_a;
    let table = LinkageTable::build(machine, 1.75, 2e-3);
    let case = |amp: f64, cur: f64| {
        let wave = wecsim::excitation::WaveSpec { amplitude_m: amp, ..machine.wave };
        circuit::run_case(machine, &table, &wave, cur, 3).expect("transient").1
    };
    let m11 = case(1.25, 179.0);
    let m12 = case(1.25, 215.0);
    let m21 = case(1.75, 179.0);
    let m22 = case(1.75, 215.0);
    let tri_wave = wecsim::excitation::WaveSpec {
        form: wecsim::excitation::WaveForm::Triangular,
        ..machine.wave
    };
    let (_, mt) = circuit::run_case(machine, &table, &tri_wave, i_op, 3).expect("transient");
    let gap = (1.0 - mt.power_out_kw / m11.power_out_kw) * 100.0;
    println!(
        "P(1.25,179)={:.2} [11.3..16.9]  P(1.25,215)={:.2} [16.9..25.3]",
        m11.power_out_kw, m12.power_out_kw
    );
    println!(
        "P(1.75,179)={:.2} [19.7..29.5]  P(1.75,215)={:.2} [28.6..42.8]",
        m21.power_out_kw, m22.power_out_kw
    );
    println!("triangular gap = {gap:.2} % [9.8..39.8]");
    println!(
        "case 1: Vrms_in {:?}  PF {:.3} [0.74..0.94]  loss {:.2} kW  eff {:.1} %  peaks {:?}",
        m11.vrms_in_v, m11.power_factor, m11.joule_loss_kw, m11.efficiency_pct, m11.peak_phase_current_a
    );
    println!(
        "fundamentals in/out {:.3}/{:.3} Hz  energy residual {:.2e}",
        m11.fundamental_in_hz, m11.fundamental_out_hz, m11.energy_residual_fraction
    );
    println!(
        "monotone: 215>179 at 1.25: {}  at 1.75: {}  1.75>1.25 at 179: {}  at 215: {}",
        m12.power_out_kw > m11.power_out_kw,
        m22.power_out_kw > m21.power_out_kw,
        m21.power_out_kw > m11.power_out_kw,
        m22.power_out_kw > m12.power_out_kw
    );
}

/// Air-core |B| at radial offset `dr_m` from the winding inner radius, on
/// magnet 0's midplane.
fn field_at(machine: &MachineConfig, current: f64, dr_m: f64) -> f64 {
    let loops = wecsim::geometry::turn_loops_of(&machine.assembly);
    let placement = &machine.assembly.packs[0];
    let r = placement.pack.pancakes[0].inner_radius_m + dr_m;
    loops_field(&loops, current, r, placement.z_m, 1.0).expect("off-filament").magnitude()
}

/// Load line with the 4 mm reference Ic `ic4` and 6 mm stock at `rho`x.
fn scaled_load_line(map: &TurnFieldMap, lift: &LiftModel, tf: f64, ic4: f64, rho: f64) -> f64 {
    let mut scaled = map.clone();
    for l in scaled.loops.iter_mut() {
        l.tape_ic_ref_a = if (l.tape_width_m - 4.0e-3).abs() < 1e-9 { ic4 } else { rho * ic4 };
    }
    load_line_from_map(&scaled, lift, tf).expect("load line").critical_current_a
}

/// (min, max) per-turn Ic at conduction current `i`.
fn turn_ic_range(map: &TurnFieldMap, lift: &LiftModel, tf: f64, ic4: f64, rho: f64, i: f64) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = 0.0_f64;
    for (l, unit) in map.loops.iter().zip(&map.unit_field) {
        let ic_ref = if (l.tape_width_m - 4.0e-3).abs() < 1e-9 { ic4 } else { rho * ic4 };
        let b = *unit * i;
        let ic = ic_ref * lift.lift(b) * tf;
        min = min.min(ic);
        max = max.max(ic);
    }
    (min, max)
}

fn emf_rms(machine: &MachineConfig, table: &LinkageTable, current: f64) -> f64 {
    let src = MachineEmf { table, wave: machine.wave, conduction_current_a: current };
    let period = machine.wave.period_s();
    let n = 600;
    let mut acc = 0.0;
    for i in 0..n {
        let e = src.emf_at(period * i as f64 / n as f64);
        acc += e[0] * e[0];
    }
    (acc / n as f64).sqrt()
}
