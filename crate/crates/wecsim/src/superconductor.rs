//! Critical-current model Ic(B, orientation, T), the magnet load-line solver,
//! and current / temperature margins.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WecError};
use crate::geometry::{MagnetAssembly, TapeSpec};
use crate::magnetostatics::{FieldVector, TurnFieldMap};

/// Critical-current reduction versus local field.
///
/// The perpendicular component is the radial field (normal to the tape face
/// in a pancake winding); the parallel component is the axial field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LiftModel {
    /// Anisotropic Kim form: lift = 1 / (1 + sqrt(k^2 B_par^2 + B_perp^2)/B0)^beta.
    Kim { anisotropy: f64, b0_t: f64, beta: f64 },
    /// Tabulated (B_perp, B_par) -> lift grid with bilinear interpolation.
    Table {
        b_perp_t: Vec<f64>,
        b_par_t: Vec<f64>,
        /// Row-major lift values, rows indexed by `b_perp_t`.
        lift: Vec<Vec<f64>>,
    },
}

impl LiftModel {
    /// Field-independent model (lift = 1 everywhere).
    pub fn unity() -> Self {
        LiftModel::Kim { anisotropy: 0.0, b0_t: 1.0, beta: 0.0 }
    }

    /// Lift factor at the given local field; clamps table queries to the
    /// tabulated rectangle (constant extrapolation).
    pub fn lift(&self, b: FieldVector) -> f64 {
        let b_perp = b.b_r.abs();
        let b_par = b.b_z.abs();
        match self {
            LiftModel::Kim { anisotropy, b0_t, beta } => {
                let eff = (anisotropy * anisotropy * b_par * b_par + b_perp * b_perp).sqrt();
                (1.0 + eff / b0_t).powf(-beta)
            }
            LiftModel::Table { b_perp_t, b_par_t, lift } => {
                bilinear(b_perp_t, b_par_t, lift, b_perp, b_par)
            }
        }
    }
}

fn bilinear(xs: &[f64], ys: &[f64], z: &[Vec<f64>], x: f64, y: f64) -> f64 {
    let x = x.clamp(xs[0], *xs.last().unwrap());
    let y = y.clamp(ys[0], *ys.last().unwrap());
    let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1) - 1;
    let j = ys.partition_point(|&v| v <= y).clamp(1, ys.len() - 1) - 1;
    let tx = (x - xs[i]) / (xs[i + 1] - xs[i]);
    let ty = (y - ys[j]) / (ys[j + 1] - ys[j]);
    let z00 = z[i][j];
    let z10 = z[i + 1][j];
    let z01 = z[i][j + 1];
    let z11 = z[i + 1][j + 1];
    z00 * (1.0 - tx) * (1.0 - ty) + z10 * tx * (1.0 - ty) + z01 * (1.0 - tx) * ty + z11 * tx * ty
}

/// Local critical current of a tape element at field `b` and temperature `t_k`:
/// Ic(T) = Ic0(B) (T_C - T)/(T_C - T_op) with Ic0(B) = reference Ic x lift(B).
pub fn ic_local(tape: &TapeSpec, lift: &LiftModel, b: FieldVector, t_k: f64) -> Result<f64> {
    let t_op = tape.reference_temperature_k;
    let t_c = tape.critical_temperature_k;
    if t_k < t_op || t_k > t_c {
        return Err(WecError::TemperatureRange { t_k, lo_k: t_op, hi_k: t_c });
    }
    let ic0 = tape.ic_ref_a * lift.lift(b);
    Ok(ic0 * (t_c - t_k) / (t_c - t_op))
}

/// Identifies one turn for deterministic reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TurnRef {
    pub magnet: usize,
    pub pancake: usize,
    pub turn: usize,
}

/// Outcome of the load-line fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadLineResult {
    pub critical_current_a: f64,
    /// Limiting turn; lowest (magnet, pancake, turn) wins exact ties.
    pub limiting_turn: TurnRef,
    pub iterations: usize,
}

impl LoadLineResult {
    pub fn margin(&self, i_op_a: f64) -> Result<(f64, f64)> {
        current_margin(i_op_a, self)
    }
}

/// Minimum over turns of Ic0(B(I)) (reference-temperature Ic under local
/// field) at conduction current `current_a`, with the minimizing turn.
fn min_turn_ic(map: &TurnFieldMap, lift: &LiftModel, current_a: f64) -> (f64, TurnRef) {
    let mut best = f64::INFINITY;
    let mut arg = TurnRef { magnet: usize::MAX, pancake: usize::MAX, turn: usize::MAX };
    for (l, unit) in map.loops.iter().zip(&map.unit_field) {
        let b = *unit * current_a;
        let ic0 = l.tape_ic_ref_a * lift.lift(b);
        let key = TurnRef { magnet: l.magnet, pancake: l.pancake, turn: l.turn };
        if ic0 < best || (ic0 == best && key < arg) {
            best = ic0;
            arg = key;
        }
    }
    (best, arg)
}

/// Solve the magnet load line I* = min over turns of Ic(B(I*), T) by
/// bisection, exploiting that min-turn Ic is non-increasing in I.
pub fn magnet_critical_current(
    assembly: &MagnetAssembly,
    lift: &LiftModel,
    t_k: f64,
    iron_boost_factor: f64,
) -> Result<LoadLineResult> {
    let map = TurnFieldMap::compute(assembly, iron_boost_factor);
    load_line_from_map(&map, lift, temperature_factor(assembly, t_k)?)
}

/// Linear temperature scaling (T_C - T)/(T_C - T_op) for the assembly's tape
/// stock; errors if `t_k` is outside `[T_op, T_C]`.
pub fn temperature_factor(assembly: &MagnetAssembly, t_k: f64) -> Result<f64> {
    let tape = &assembly.packs[0].pack.pancakes[0].tape;
    let t_op = tape.reference_temperature_k;
    let t_c = tape.critical_temperature_k;
    if t_k < t_op || t_k > t_c {
        return Err(WecError::TemperatureRange { t_k, lo_k: t_op, hi_k: t_c });
    }
    Ok((t_c - t_k) / (t_c - t_op))
}

/// Load line from a precomputed unit-current turn field map.
pub fn load_line_from_map(
    map: &TurnFieldMap,
    lift: &LiftModel,
    temperature_factor: f64,
) -> Result<LoadLineResult> {
    const TOL_A: f64 = 1e-3;
    const MAX_ITER: usize = 200;

    // g(I) = min-turn Ic(B(I)) - I is strictly decreasing: one root.
    let g = |i: f64| -> (f64, TurnRef) {
        let (ic0, arg) = min_turn_ic(map, lift, i);
        (ic0 * temperature_factor - i, arg)
    };

    let mut lo = 0.0;
    let mut hi = map.loops.iter().map(|l| l.tape_ic_ref_a).fold(0.0_f64, f64::max)
        * temperature_factor
        * 1.05
        + 1.0;
    let (g0, arg0) = g(lo);
    if g0 <= 0.0 {
        // degenerate: zero-current Ic is already zero (e.g. T = T_C)
        return Ok(LoadLineResult { critical_current_a: 0.0, limiting_turn: arg0, iterations: 0 });
    }
    let mut iterations = 0;
    while hi - lo > TOL_A {
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(WecError::LoadLineNoConvergence { iterations, lo_a: lo, hi_a: hi });
        }
        let mid = 0.5 * (lo + hi);
        if g(mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i_star = 0.5 * (lo + hi);
    let (_, limiting_turn) = g(i_star);
    Ok(LoadLineResult { critical_current_a: i_star, limiting_turn, iterations })
}

/// Min-turn critical current at one conduction current: the load-line
/// ordinate Ic(B(I), T), with the minimizing turn.
pub fn min_turn_critical_current(
    map: &TurnFieldMap,
    lift: &LiftModel,
    temperature_factor: f64,
    current_a: f64,
) -> (f64, TurnRef) {
    let (ic0, turn) = min_turn_ic(map, lift, current_a);
    (ic0 * temperature_factor, turn)
}

/// Sample the load line: (conduction current, min-turn Ic at that current).
pub fn load_line_curve(
    map: &TurnFieldMap,
    lift: &LiftModel,
    temperature_factor: f64,
    i_max_a: f64,
    n_points: usize,
) -> Vec<(f64, f64)> {
    (0..n_points.max(2))
        .map(|i| {
            let cur = i_max_a * i as f64 / (n_points.max(2) - 1) as f64;
            let (ic0, _) = min_turn_ic(map, lift, cur);
            (cur, ic0 * temperature_factor)
        })
        .collect()
}

/// Current margin (A, %) of an operating point against a load-line result.
pub fn current_margin(i_op_a: f64, result: &LoadLineResult) -> Result<(f64, f64)> {
    if i_op_a >= result.critical_current_a {
        return Err(WecError::NegativeMargin { i_op_a, i_c_a: result.critical_current_a });
    }
    let margin_a = result.critical_current_a - i_op_a;
    Ok((margin_a, margin_a / i_op_a * 100.0))
}

/// Straight Ic(T) line through (T_op, Ic0) and (T_C, 0), sampled uniformly.
pub fn ic_temperature_curve(ic0_a: f64, t_op_k: f64, t_c_k: f64, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if t_op_k >= t_c_k {
        return Err(WecError::TemperatureRange { t_k: t_op_k, lo_k: 0.0, hi_k: t_c_k });
    }
    let n = n_points.max(2);
    Ok((0..n)
        .map(|i| {
            let t = t_op_k + (t_c_k - t_op_k) * i as f64 / (n - 1) as f64;
            (t, ic0_a * (t_c_k - t) / (t_c_k - t_op_k))
        })
        .collect())
}

/// Current-sharing temperature: T where Ic(T) falls to the operating current.
pub fn current_sharing_temperature(i_op_a: f64, ic0_a: f64, t_op_k: f64, t_c_k: f64) -> Result<f64> {
    if i_op_a <= 0.0 || i_op_a > ic0_a {
        return Err(WecError::NegativeMargin { i_op_a, i_c_a: ic0_a });
    }
    Ok(t_c_k - (t_c_k - t_op_k) * i_op_a / ic0_a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tape() -> TapeSpec {
        TapeSpec {
            width_m: 4.0e-3,
            thickness_m: 0.4e-3,
            ic_ref_a: 800.0,
            reference_temperature_k: 20.0,
            critical_temperature_k: 92.0,
        }
    }

    fn some_field() -> FieldVector {
        FieldVector { b_r: 1.2, b_z: 2.5 }
    }

    fn kim() -> LiftModel {
        LiftModel::Kim { anisotropy: 0.3, b0_t: 1.5, beta: 1.2 }
    }

    #[test]
    fn ic_local_endpoints_and_midpoint() {
        let t = tape();
        let l = kim();
        let b = some_field();
        let ic0 = t.ic_ref_a * l.lift(b);
        assert!((ic_local(&t, &l, b, 92.0).unwrap()).abs() < 1e-12);
        assert!((ic_local(&t, &l, b, 20.0).unwrap() - ic0).abs() < 1e-12 * ic0);
        assert!((ic_local(&t, &l, b, 56.0).unwrap() - 0.5 * ic0).abs() < 1e-12 * ic0);
    }

    #[test]
    fn ic_local_out_of_range_errors() {
        let t = tape();
        assert!(matches!(
            ic_local(&t, &kim(), some_field(), 10.0),
            Err(WecError::TemperatureRange { .. })
        ));
        assert!(matches!(
            ic_local(&t, &kim(), some_field(), 100.0),
            Err(WecError::TemperatureRange { .. })
        ));
    }

    #[test]
    fn lift_is_monotone_non_increasing() {
        let l = kim();
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let b = FieldVector { b_r: 0.1 * i as f64, b_z: 0.0 };
            let v = l.lift(b);
            assert!(v <= prev + 1e-15);
            assert!(v > 0.0 && v <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn unity_lift_is_one_everywhere() {
        let l = LiftModel::unity();
        for b in [FieldVector::ZERO, some_field(), FieldVector { b_r: 9.0, b_z: 4.0 }] {
            assert_eq!(l.lift(b), 1.0);
        }
    }

    #[test]
    fn table_lift_interpolates() {
        let l = LiftModel::Table {
            b_perp_t: vec![0.0, 2.0],
            b_par_t: vec![0.0, 2.0],
            lift: vec![vec![1.0, 0.8], vec![0.6, 0.4]],
        };
        assert!((l.lift(FieldVector { b_r: 1.0, b_z: 1.0 }) - 0.7).abs() < 1e-12);
        // clamped outside the grid
        assert!((l.lift(FieldVector { b_r: 5.0, b_z: 0.0 }) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn margin_arithmetic() {
        let r = LoadLineResult { critical_current_a: 215.0, limiting_turn: TurnRef { magnet: 0, pancake: 0, turn: 0 }, iterations: 1 };
        let (a, pct) = current_margin(179.0, &r).unwrap();
        assert!((a - 36.0).abs() < 1e-12);
        assert!((pct - 20.111_731_843_575_42).abs() < 1e-9);

        let r2 = LoadLineResult { critical_current_a: 200.0, limiting_turn: TurnRef { magnet: 0, pancake: 0, turn: 0 }, iterations: 1 };
        let (a2, pct2) = current_margin(100.0, &r2).unwrap();
        assert_eq!(a2, 100.0);
        assert_eq!(pct2, 100.0);
    }

    #[test]
    fn margin_at_boundary_is_error() {
        let r = LoadLineResult { critical_current_a: 215.0, limiting_turn: TurnRef { magnet: 0, pancake: 0, turn: 0 }, iterations: 1 };
        assert!(matches!(current_margin(215.0, &r), Err(WecError::NegativeMargin { .. })));
    }

    #[test]
    fn temperature_curve_endpoints_and_collinearity() {
        let c = ic_temperature_curve(215.0, 20.0, 92.0, 25).unwrap();
        assert_eq!(c[0], (20.0, 215.0));
        let last = *c.last().unwrap();
        assert_eq!(last.0, 92.0);
        assert!(last.1.abs() < 1e-12);
        // any three samples collinear
        for w in c.windows(3) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let (x2, y2) = w[2];
            let cross = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
            assert!(cross.abs() < 1e-12 * 215.0);
        }
    }

    #[test]
    fn temperature_curve_hand_value() {
        let c = ic_temperature_curve(215.0, 20.0, 92.0, 73).unwrap();
        // sample exactly at 32 K: 215 * 60/72
        let at_32 = c.iter().find(|(t, _)| (t - 32.0).abs() < 1e-9).unwrap();
        assert!((at_32.1 - 215.0 * 60.0 / 72.0).abs() < 1e-9);
    }

    #[test]
    fn current_sharing_temperature_values() {
        let t = current_sharing_temperature(179.0, 215.0, 20.0, 92.0).unwrap();
        assert!((t - 32.0558).abs() < 0.01, "t = {t}");
        assert_eq!(current_sharing_temperature(215.0, 215.0, 20.0, 92.0).unwrap(), 20.0);
        let near_zero = current_sharing_temperature(1e-9, 215.0, 20.0, 92.0).unwrap();
        assert!((near_zero - 92.0).abs() < 1e-6);
    }
}
