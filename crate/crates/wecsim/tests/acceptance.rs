//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p wecsim --test acceptance -- --nocapture` to see
//! every line. Expensive intermediates (per-turn field maps, flux-linkage
//! tables, the transient case matrix) are computed once and shared.

use once_cell::sync::Lazy;

use wecsim::circuit::{self, DiodeModel, Metrics, SimOptions};
use wecsim::cryogenics;
use wecsim::excitation::{WaveForm, WaveSpec};
use wecsim::geometry::{build_reference_design, MachineConfig};
use wecsim::magnetostatics::{
    self, loop_field, loops_field, FieldVector, LinkageTable, TurnFieldMap,
};
use wecsim::mechanics;
use wecsim::optimizer;
use wecsim::superconductor;
use wecsim::MU_0;

struct Context {
    machine: MachineConfig,
    map: TurnFieldMap,
    temperature_factor: f64,
    table: LinkageTable,
    /// Metrics at (amplitude, conduction current), 3 analysed cycles.
    case_11: (circuit::TransientResult, Metrics),
    case_12: Metrics,
    case_21: Metrics,
    case_22: Metrics,
    triangular: Metrics,
}

static CTX: Lazy<Context> = Lazy::new(|| {
    let machine = build_reference_design();
    let map = TurnFieldMap::compute(&machine.assembly, machine.iron_boost_factor);
    let temperature_factor =
        superconductor::temperature_factor(&machine.assembly, machine.operating_temperature_k)
            .unwrap();
    let table = LinkageTable::build(&machine, 1.75, 2e-3);
    let case = |amp: f64, cur: f64| {
        let wave = WaveSpec { amplitude_m: amp, ..machine.wave };
        circuit::run_case(&machine, &table, &wave, cur, 3).unwrap()
    };
    let case_11 = case(1.25, 179.0);
    let case_12 = case(1.25, 215.0).1;
    let case_21 = case(1.75, 179.0).1;
    let case_22 = case(1.75, 215.0).1;
    let tri_wave = WaveSpec { form: WaveForm::Triangular, ..machine.wave };
    let triangular = circuit::run_case(&machine, &table, &tri_wave, 179.0, 3).unwrap().1;
    Context {
        machine,
        map,
        temperature_factor,
        table,
        case_11,
        case_12,
        case_21,
        case_22,
        triangular,
    }
});

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion}: {detail}");
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

#[test]
fn criterion_01_eq2_exactness() {
    let tape = &CTX.machine.assembly.packs[0].pack.pancakes[0].tape;
    let lift = &CTX.machine.lift;
    let b = FieldVector { b_r: 0.8, b_z: 2.1 };
    let ic0 = tape.ic_ref_a * lift.lift(b);
    let at = |t: f64| superconductor::ic_local(tape, lift, b, t).unwrap();
    let ok_20 = within(at(20.0), ic0, 1e-12);
    let ok_56 = within(at(56.0), 0.5 * ic0, 1e-12);
    let ok_92 = at(92.0).abs() <= 1e-12 * ic0;
    let t_cs = superconductor::current_sharing_temperature(179.0, 215.0, 20.0, 92.0).unwrap();
    let ok_tcs = (t_cs - 32.06).abs() <= 0.01;
    verdict(
        "1 (Eq. 2 exactness + current-sharing temperature)",
        ok_20 && ok_56 && ok_92 && ok_tcs,
        &format!("Ic(20)={:.6}, Ic(56)={:.6}, Ic(92)={:.2e}, T_cs={t_cs:.4} K", at(20.0), at(56.0), at(92.0)),
    );
}

#[test]
fn criterion_02_margin_arithmetic_and_fixed_point() {
    let synthetic = superconductor::LoadLineResult {
        critical_current_a: 215.0,
        limiting_turn: superconductor::TurnRef { magnet: 0, pancake: 0, turn: 0 },
        iterations: 1,
    };
    let (margin_a, margin_pct) = superconductor::current_margin(179.0, &synthetic).unwrap();
    let ok_arith = (margin_a - 36.0).abs() < 1e-12 && (margin_pct - 20.1).abs() < 0.05;

    let ll = superconductor::load_line_from_map(&CTX.map, &CTX.machine.lift, CTX.temperature_factor)
        .unwrap();
    let (ic_at_star, _) = superconductor::min_turn_critical_current(
        &CTX.map,
        &CTX.machine.lift,
        CTX.temperature_factor,
        ll.critical_current_a,
    );
    let residual = (ic_at_star - ll.critical_current_a).abs();
    let ok_fixed = residual < 1e-3;
    verdict(
        "2 (margin arithmetic + load-line fixed point)",
        ok_arith && ok_fixed,
        &format!("margin=({margin_a:.3} A, {margin_pct:.2} %), |Ic(B(I*)) - I*| = {residual:.2e} A"),
    );
}

#[test]
fn criterion_03_magnetostatics_oracle() {
    // on-axis analytic
    let f = loop_field(1.0, 1.0, 0.0, 0.0).unwrap();
    let ok_axis = within(f.b_z, MU_0 / 2.0, 1e-9) && f.b_r == 0.0;

    // brute-force segment sum, 1e6 segments
    let (a, i, r, z) = (1.0, 1.0, 0.5, 0.3);
    let exact = loop_field(a, i, r, z).unwrap();
    let brute = segment_biot_savart(a, i, r, z, 1_000_000);
    let ok_brute = within(exact.b_r, brute.b_r, 1e-8) && within(exact.b_z, brute.b_z, 1e-8);

    // superposition and linearity to 1e-12
    let loops = wecsim::geometry::turn_loops_of(&CTX.machine.assembly);
    let (lo, hi) = loops.split_at(loops.len() / 2);
    let p = (0.140, 0.030);
    let whole = loops_field(&loops, 100.0, p.0, p.1, 1.0).unwrap();
    let parts = loops_field(lo, 100.0, p.0, p.1, 1.0).unwrap()
        + loops_field(hi, 100.0, p.0, p.1, 1.0).unwrap();
    let ok_super = within(whole.b_z, parts.b_z, 1e-12) && within(whole.b_r, parts.b_r, 1e-12);
    let twice = loops_field(&loops, 200.0, p.0, p.1, 1.0).unwrap();
    let ok_linear = within(twice.b_z, 2.0 * whole.b_z, 1e-12) && within(twice.b_r, 2.0 * whole.b_r, 1e-12);

    verdict(
        "3 (filament-field oracle)",
        ok_axis && ok_brute && ok_super && ok_linear,
        &format!(
            "axis rel {:.1e}, brute rel ({:.1e}, {:.1e})",
            (f.b_z - MU_0 / 2.0).abs() / (MU_0 / 2.0),
            (exact.b_r - brute.b_r).abs() / brute.b_r.abs(),
            (exact.b_z - brute.b_z).abs() / brute.b_z.abs()
        ),
    );
}

#[test]
#[allow(clippy::approx_constant)] // 3.14 is a flux density target, not pi
fn criterion_04_calibrated_field_targets() {
    let machine = &CTX.machine;
    // magnet centre: winding bore edge on the central magnet plane
    let placement = &machine.assembly.packs[0];
    let r_center = placement.pack.pancakes[0].inner_radius_m - 1.0e-3;
    let center = magnetostatics::assembly_field(
        &machine.assembly,
        machine.operating_current_a,
        r_center,
        placement.z_m,
        machine.iron_boost_factor,
    )
    .unwrap()
    .magnitude();
    let (max_b, _) = CTX.map.magnitude_stats(machine.operating_current_a);
    let ok_center = within(center, 3.14, 0.15);
    let ok_max = within(max_b, 4.45, 0.15);
    verdict(
        "4 (calibrated field targets)",
        ok_center && ok_max,
        &format!("centre {center:.3} T (3.14 +-15 %), winding max {max_b:.3} T (4.45 +-15 %)"),
    );
}

#[test]
fn criterion_05_rectifier_analytic_and_energy() {
    // ideal six-pulse bridge on a balanced sinusoid
    let spec = circuit::CircuitSpec {
        source_inductance_h: 0.0,
        load_resistance_ohm: 4.2,
        smoothing_inductance_h: 100.0,
        armature_resistance_ohm: 1e-3,
        diode_model: DiodeModel::Ideal,
        diode_forward_drop_v: 0.0,
    };
    let vm = 100.0;
    let f = 5.0;
    let e = move |t: f64| {
        let w = std::f64::consts::TAU * f * t;
        let third = std::f64::consts::TAU / 3.0;
        [vm * w.sin(), vm * (w - third).sin(), vm * (w - 2.0 * third).sin()]
    };
    let ideal = 3.0 * 3.0_f64.sqrt() / std::f64::consts::PI * vm;
    let opts = SimOptions {
        t_end_s: 2.0,
        dt_s: 1e-4,
        initial_dc_current_a: ideal / 4.2,
        ..Default::default()
    };
    let ts = circuit::simulate(e, &spec, &opts).unwrap();
    let per = (1.0 / f / 1e-4).round() as usize;
    let n = ts.bridge_voltage_v.len();
    let mean: f64 =
        ts.bridge_voltage_v[n - 5 * per..].iter().sum::<f64>() / (5 * per) as f64;
    let ok_mean = within(mean, ideal, 0.01);

    // energy residual on every transient run of the suite
    let period = CTX.machine.wave.period_s();
    let resid = CTX.case_11.0.energy_residual_fraction(period, 4.0 * period);
    let ok_energy = resid < 0.005
        && [&CTX.case_12, &CTX.case_21, &CTX.case_22, &CTX.triangular]
            .iter()
            .all(|m| m.energy_residual_fraction < 0.005);

    // diode currents non-negative on the reference run
    let ts_ref = &CTX.case_11.0;
    let mut ok_diode = true;
    for i in 0..ts_ref.time_s.len() {
        for k in 0..3 {
            let on_top = ts_ref.diode_states[i] & (1 << k) != 0;
            let on_bot = ts_ref.diode_states[i] & (1 << (k + 3)) != 0;
            let ip = ts_ref.phase_current_a[k][i];
            if on_top && !on_bot && ip < -1e-9 {
                ok_diode = false;
            }
            if on_bot && !on_top && -ip < -1e-9 {
                ok_diode = false;
            }
        }
    }
    verdict(
        "5 (six-pulse analytic + energy conservation + diode sign)",
        ok_mean && ok_energy && ok_diode,
        &format!(
            "mean V_dc {mean:.3} V vs {ideal:.3}, reference energy residual {resid:.2e}",
        ),
    );
}

#[test]
fn criterion_06_spectral_six_pulse_ratio() {
    // As specified: output fundamental (max-energy bin of the rectified
    // bridge voltage) against 6x the input fundamental (max-energy bin of
    // the EMF). With the wave-spec kinematics of this machine the EMF energy
    // sits at the pole-passing carrier while the rectified output is
    // dominated by the stroke envelope, so the ratio cannot reach 6; see the
    // analysis shipped with the repository history.
    let m = &CTX.case_11.1;
    let ratio = m.fundamental_out_hz / m.fundamental_in_hz;
    let ok = within(ratio, 6.0, 0.10);
    verdict(
        "6 (output fundamental = 6 x input fundamental)",
        ok,
        &format!(
            "f_in {:.3} Hz, f_out {:.3} Hz, ratio {ratio:.3} vs 6 +-10 %; note the pair \
             itself reproduces the catalogued (0.35, 2.01) Hz with the labels exchanged",
            m.fundamental_in_hz, m.fundamental_out_hz
        ),
    );
}

#[test]
fn criterion_07a_power_band() {
    let p = CTX.case_11.1.power_out_kw;
    verdict(
        "7a (P_out of the 1.25 m / 179 A case)",
        within(p, 14.1, 0.20),
        &format!("P_out {p:.2} kW vs 14.1 +-20 %"),
    );
}

#[test]
fn criterion_07b_power_factor_band() {
    // The stroke sweeps the magnets fully out of the stator twice per wave
    // period; the burst duty and commutation reactance cap the achievable
    // power factor well below the catalogued steady-drive figure.
    let pf = CTX.case_11.1.power_factor;
    verdict(
        "7b (power factor of the 1.25 m / 179 A case)",
        (pf - 0.84).abs() <= 0.10,
        &format!("PF {pf:.3} vs 0.84 +-0.1"),
    );
}

#[test]
fn criterion_07c_monotone_trends() {
    let (p11, p12, p21, p22) = (
        CTX.case_11.1.power_out_kw,
        CTX.case_12.power_out_kw,
        CTX.case_21.power_out_kw,
        CTX.case_22.power_out_kw,
    );
    let ok = p12 > p11 && p22 > p21 && p21 > p11 && p22 > p12;
    verdict(
        "7c (strict monotone trends over the case matrix)",
        ok,
        &format!("P = [{p11:.2}, {p12:.2}; {p21:.2}, {p22:.2}] kW"),
    );
}

#[test]
fn criterion_08_triangular_vs_sinusoidal() {
    let p_sin = CTX.case_11.1.power_out_kw;
    let p_tri = CTX.triangular.power_out_kw;
    let gap_pct = (1.0 - p_tri / p_sin) * 100.0;
    let ok = p_tri < p_sin && (gap_pct - 24.77).abs() <= 15.0;
    verdict(
        "8 (triangular wave strictly lower, gap vs 24.77 % +-15 pp)",
        ok,
        &format!("P_tri {p_tri:.2} kW vs P_sin {p_sin:.2} kW, gap {gap_pct:.2} %"),
    );
}

#[test]
fn criterion_09_multi_width_deltas() {
    let single = optimizer::single_width_variant(&CTX.machine).unwrap();
    let map_s = TurnFieldMap::compute(&single.assembly, single.iron_boost_factor);
    let tf = CTX.temperature_factor;
    let ic_s = superconductor::load_line_from_map(&map_s, &CTX.machine.lift, tf)
        .unwrap()
        .critical_current_a;
    let ic_m = superconductor::load_line_from_map(&CTX.map, &CTX.machine.lift, tf)
        .unwrap()
        .critical_current_a;
    let delta_pct = (ic_m / ic_s - 1.0) * 100.0;
    let ok = (delta_pct - 43.3).abs() <= 15.0 && within(ic_s, 150.0, 0.10);
    verdict(
        "9 (multi-width Ic delta + single-width Ic)",
        ok,
        &format!("Ic multi {ic_m:.1} A, single {ic_s:.1} A, delta {delta_pct:.1} % vs 43.3 +-15 pp"),
    );
}

#[test]
fn criterion_10_cryogenics() {
    let h = cryogenics::copper_enthalpy();
    // Eq. (1) homogeneity: exact linear scaling
    let m1 = cryogenics::coolant_mass(10.0, &h, 446.0e3).unwrap();
    let m3 = cryogenics::coolant_mass(30.0, &h, 446.0e3).unwrap();
    let ok_linear = (m3 - 3.0 * m1).abs() <= 1e-12 * m3;

    // adaptive quadrature vs dense trapezoid
    let c = cryogenics::winding_heat_capacity();
    let t_cs = superconductor::current_sharing_temperature(179.0, 215.0, 20.0, 92.0).unwrap();
    let adaptive = cryogenics::stability_margin(&c, 20.0, t_cs).unwrap();
    let n = 10_000;
    let hstep = (t_cs - 20.0) / n as f64;
    let mut trap = 0.5 * (c.at(20.0).unwrap() + c.at(t_cs).unwrap());
    for i in 1..n {
        trap += c.at(20.0 + i as f64 * hstep).unwrap();
    }
    trap *= hstep;
    let ok_quad = (adaptive - trap).abs() <= 1e-6 * trap;

    // Eq. (1) with the repo tables and the derived magnet mass, reported
    // alongside the catalogued 8.23 kg (no hard tolerance: source values
    // are mutually inconsistent)
    let mass = CTX.machine.magnet_mass_kg();
    let coolant = cryogenics::coolant_mass(
        mass,
        &h,
        CTX.machine.cryo.coolant_heat_of_vaporization_j_per_kg,
    )
    .unwrap();
    verdict(
        "10 (cryogenics: Eq. 1 homogeneity + quadrature oracle)",
        ok_linear && ok_quad,
        &format!(
            "magnet {mass:.1} kg -> coolant {coolant:.2} kg (catalogue quotes 8.23 kg, flagged), margin {adaptive:.4e} J/m^3"
        ),
    );
}

#[test]
fn criterion_11a_mechanics_exact_properties() {
    let zero = mechanics::hoop_stress_map(&CTX.map, 0.0);
    let ok_zero = zero.max_hoop_pa == 0.0 && zero.max_radial_pa == 0.0;
    let s1 = mechanics::hoop_stress_map(&CTX.map, 90.0);
    let s2 = mechanics::hoop_stress_map(&CTX.map, 180.0);
    let ok_sq = (s2.max_hoop_pa - 4.0 * s1.max_hoop_pa).abs() <= 1e-10 * s2.max_hoop_pa;
    verdict(
        "11a (zero-current stress + I^2 scaling)",
        ok_zero && ok_sq,
        &format!("max(2I)/max(I) = {:.12}", s2.max_hoop_pa / s1.max_hoop_pa),
    );
}

#[test]
fn criterion_11b_mechanics_stress_bands() {
    // The catalogued tape usage inside the 13-layer, 22.4 mm envelope forces
    // an engineering current density of 110-270 A/mm^2, an order above what
    // the catalogued 24.2 MPa maximum implies; the BJr estimate lands far
    // outside the band. Asserted as specified.
    let s = mechanics::hoop_stress_map(&CTX.map, CTX.machine.operating_current_a);
    let max_mpa = s.max_hoop_pa / 1e6;
    let mean_mpa = s.mean_hoop_pa / 1e6;
    let ok = within(max_mpa, 24.2, 0.25) && within(mean_mpa, 11.9, 0.25);
    verdict(
        "11b (hoop stress bands)",
        ok,
        &format!("max {max_mpa:.1} MPa vs 24.2 +-25 %, mean {mean_mpa:.1} MPa vs 11.9 +-25 %"),
    );
}

/// Straight-segment Biot-Savart reference for one loop.
fn segment_biot_savart(a: f64, current: f64, r: f64, z: f64, n: usize) -> FieldVector {
    let mut b_r = 0.0;
    let mut b_z = 0.0;
    let dphi = std::f64::consts::TAU / n as f64;
    for k in 0..n {
        let phi = (k as f64 + 0.5) * dphi;
        let (sin, cos) = phi.sin_cos();
        let (sx, sy) = (a * cos, a * sin);
        let (dlx, dly) = (-a * sin * dphi, a * cos * dphi);
        let (rx, ry, rz) = (r - sx, -sy, z);
        let dist2 = rx * rx + ry * ry + rz * rz;
        let dist = dist2.sqrt();
        let scale = MU_0 * current / (4.0 * std::f64::consts::PI * dist2 * dist);
        b_r += scale * dly * rz;
        b_z += scale * (dlx * ry - dly * rx);
    }
    FieldVector { b_r, b_z }
}

// ---------------------------------------------------------------------
// criterion 12 (byte-identical reruns) lives in the CLI crate's test
// suite, where the commands and their output files exist.
// ---------------------------------------------------------------------

#[test]
fn smooth_diode_model_agrees_with_ideal_switch() {
    // cross-validation demanded of the two diode models: P_out within 1 %
    let mut machine = CTX.machine.clone();
    machine.circuit.diode_model = DiodeModel::Smooth;
    let (_, smooth) =
        circuit::run_case(&machine, &CTX.table, &machine.wave, machine.operating_current_a, 3)
            .unwrap();
    let p_ideal = CTX.case_11.1.power_out_kw;
    let p_smooth = smooth.power_out_kw;
    assert!(
        (p_smooth - p_ideal).abs() <= 0.01 * p_ideal,
        "ideal {p_ideal:.3} kW vs smooth {p_smooth:.3} kW"
    );
}

#[test]
fn halving_the_time_step_changes_power_under_half_percent() {
    let machine = &CTX.machine;
    let wave = machine.wave;
    let period = wave.period_s();
    let run_dt = |samples_per_cycle: usize| {
        let dt = period / samples_per_cycle as f64;
        let opts = SimOptions { t_end_s: 4.0 * period, dt_s: dt, ..Default::default() };
        let src = circuit::MachineEmf {
            table: &CTX.table,
            wave,
            conduction_current_a: machine.operating_current_a,
        };
        let ts = circuit::simulate(|t| src.emf_at(t), &machine.circuit, &opts).unwrap();
        circuit::metrics(&ts, period, 4.0 * period, period).unwrap().power_out_kw
    };
    let coarse = run_dt(6000);
    let fine = run_dt(12000);
    assert!(
        (fine - coarse).abs() <= 0.005 * coarse,
        "P at dt {coarse:.4} kW vs dt/2 {fine:.4} kW"
    );
}

#[test]
fn bridge_voltage_respects_rectification() {
    // the freewheeling bridge shows -2 Vf minus the micro-ohm switch drop
    let ts = &CTX.case_11.0;
    let tol = 2.0 * CTX.machine.circuit.diode_forward_drop_v + 1e-3;
    for (&t, &v) in ts.time_s.iter().zip(&ts.bridge_voltage_v) {
        assert!(v >= -tol, "bridge voltage {v} V at t = {t} s");
    }
}

#[test]
fn armature_current_density_duty_is_small() {
    let machine = &CTX.machine;
    let report = cryogenics::armature_current_density_check(
        &CTX.case_11.0,
        machine.armature.conductor_area_m2 * 1e6,
        machine.limits.armature_current_density_a_per_mm2,
        machine.limits.exceedance_duty,
    );
    println!(
        "current density: peaks {:?} A, exceedance {:?}",
        report.peak_current_a, report.exceedance_fraction
    );
    assert!(report.pass, "exceedance {:?} above duty threshold", report.exceedance_fraction);
    if let Some(limit) = machine.limits.armature_current_limit_a {
        for p in &report.peak_current_a {
            assert!(*p < limit, "peak {p} A above the recorded {limit} A armature limit");
        }
    }
}

#[test]
fn sweep_argmax_height_within_band() {
    // sweep around the reference point under the catalogued 20 % margin rule
    let spec = optimizer::SweepSpec {
        height_min_mm: 96.0,
        height_max_mm: 144.0,
        height_step_mm: 24.0,
        width_min_mm: 22.4,
        width_max_mm: 28.0,
        width_step_mm: 5.6,
        objective: optimizer::Objective::EmfRms,
        top_k: 2,
        min_margin_fraction: 0.2,
        max_stress_mpa: None,
    };
    let report = optimizer::sweep(&spec, &CTX.machine).unwrap();
    let best = &report.rows[report.argmax_proxy];
    let ok = (best.height_mm - 119.8).abs() <= 0.2 * 119.8;
    // argmax equals brute-force re-evaluation of the rows
    let brute = report
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.feasible)
        .max_by(|a, b| a.1.objective_value.partial_cmp(&b.1.objective_value).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    assert_eq!(brute, report.argmax_proxy, "argmax differs from brute-force re-evaluation");
    // feasible rows respect the margin rule
    for r in report.rows.iter().filter(|r| r.feasible) {
        assert!(r.critical_current_a >= 179.0 * 1.2 - 1e-6);
    }
    verdict(
        "sweep (argmax height near the reference design)",
        ok,
        &format!("argmax ({:.1} mm, {:.1} mm) vs 119.8 +-20 %", best.height_mm, best.width_mm),
    );
}
