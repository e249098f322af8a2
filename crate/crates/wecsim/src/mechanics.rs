//! Per-turn Lorentz-force stress estimates for each magnet.
//!
//! Hoop stress is the unconstrained-turn BJr estimate sigma = J_eng B_z r
//! with J_eng = I / tape cross-section (tension positive). Radial stress is
//! a summation model: each turn's outward body force, integrated over its
//! radial pitch, accumulates as contact pressure on the turns wound outside
//! it, starting from a free inner surface (compression negative). Both stand
//! in for scalar FEM results; neither is an elastic solve.

use serde::Serialize;

use crate::magnetostatics::TurnFieldMap;

#[derive(Debug, Clone, Serialize)]
pub struct StressSample {
    pub magnet: usize,
    pub pancake: usize,
    pub turn: usize,
    pub r_m: f64,
    pub z_m: f64,
    pub sigma_hoop_pa: f64,
    pub sigma_radial_pa: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StressMap {
    pub samples: Vec<StressSample>,
    pub max_hoop_pa: f64,
    pub mean_hoop_pa: f64,
    pub max_radial_pa: f64,
    pub mean_radial_pa: f64,
}

/// Stress estimate at conduction current `current_a`, reusing a unit-current
/// turn field map.
pub fn hoop_stress_map(map: &TurnFieldMap, current_a: f64) -> StressMap {
    // (magnet, pancake, turn) order so each pancake's turns run inner to outer.
    let mut order: Vec<usize> = (0..map.loops.len()).collect();
    order.sort_by_key(|&i| {
        let l = &map.loops[i];
        (l.magnet, l.pancake, l.turn)
    });

    let mut samples: Vec<StressSample> = Vec::with_capacity(order.len());
    let mut current_pancake = (usize::MAX, usize::MAX);
    let mut pressure = 0.0;
    for &i in &order {
        let l = &map.loops[i];
        // The local field flips sign with the loop's winding sense exactly as
        // the current does, so the J x B product is sense-independent.
        let b_z = map.unit_field[i].b_z * current_a * l.weight.signum();
        let j_eng = current_a / (l.tape_width_m * l.tape_thickness_m);
        let sigma_hoop = j_eng * b_z * l.radius_m;

        if (l.magnet, l.pancake) != current_pancake {
            current_pancake = (l.magnet, l.pancake);
            pressure = 0.0;
        }
        let sigma_radial = -pressure;
        pressure += j_eng * b_z * l.tape_thickness_m;

        samples.push(StressSample {
            magnet: l.magnet,
            pancake: l.pancake,
            turn: l.turn,
            r_m: l.radius_m,
            z_m: l.z_m,
            sigma_hoop_pa: sigma_hoop,
            sigma_radial_pa: sigma_radial,
        });
    }

    let mut max_h = 0.0_f64;
    let mut sum_h = 0.0;
    let mut max_r = 0.0_f64;
    let mut sum_r = 0.0;
    for s in &samples {
        max_h = max_h.max(s.sigma_hoop_pa.abs());
        sum_h += s.sigma_hoop_pa.abs();
        max_r = max_r.max(s.sigma_radial_pa.abs());
        sum_r += s.sigma_radial_pa.abs();
    }
    let count = samples.len().max(1) as f64;
    StressMap {
        samples,
        max_hoop_pa: max_h,
        mean_hoop_pa: sum_h / count,
        max_radial_pa: max_r,
        mean_radial_pa: sum_r / count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DoublePancake, MagnetAssembly, TapeSpec, WindingPack};

    fn assembly() -> MagnetAssembly {
        let tape = TapeSpec {
            width_m: 4.0e-3,
            thickness_m: 0.4e-3,
            ic_ref_a: 1000.0,
            reference_temperature_k: 20.0,
            critical_temperature_k: 92.0,
        };
        let dp = DoublePancake {
            tape,
            inner_radius_m: 0.106,
            turns_per_pancake: 12.0,
            axial_center_m: 0.0,
            polarity: 1.0,
        };
        let pack = WindingPack { pancakes: vec![dp], insulation_plate_m: 0.5e-3, layer_clearance_m: 0.0 };
        MagnetAssembly::periodic(pack, 4, 0.2875, 0.1318, 0.0345).unwrap()
    }

    #[test]
    fn zero_current_zero_stress() {
        let map = TurnFieldMap::compute(&assembly(), 1.0);
        let s = hoop_stress_map(&map, 0.0);
        assert!(s.samples.iter().all(|x| x.sigma_hoop_pa == 0.0 && x.sigma_radial_pa == 0.0));
        assert_eq!(s.max_hoop_pa, 0.0);
    }

    #[test]
    fn stress_scales_with_current_squared() {
        let map = TurnFieldMap::compute(&assembly(), 1.0);
        let s1 = hoop_stress_map(&map, 90.0);
        let s2 = hoop_stress_map(&map, 180.0);
        for (a, b) in s1.samples.iter().zip(s2.samples.iter()) {
            let scale = b.sigma_hoop_pa / a.sigma_hoop_pa.max(f64::MIN_POSITIVE);
            if a.sigma_hoop_pa.abs() > 1e-6 {
                assert!((b.sigma_hoop_pa - 4.0 * a.sigma_hoop_pa).abs() <= 1e-10 * b.sigma_hoop_pa.abs());
            }
            let _ = scale;
        }
        assert!((s2.max_hoop_pa - 4.0 * s1.max_hoop_pa).abs() <= 1e-10 * s2.max_hoop_pa);
    }

    #[test]
    fn four_magnet_symmetry() {
        let map = TurnFieldMap::compute(&assembly(), 1.0);
        let s = hoop_stress_map(&map, 150.0);
        let per_magnet: Vec<Vec<&StressSample>> = (0..4)
            .map(|m| s.samples.iter().filter(|x| x.magnet == m).collect())
            .collect();
        // mirror pairs (0,3) and (1,2) are exactly symmetric; magnitudes
        // match turn by turn once the mirrored stacking order is unwound
        for (a, b) in [(0usize, 3usize), (1, 2)] {
            let n = per_magnet[a].len();
            let max_pancake = per_magnet[a].iter().map(|x| x.pancake).max().unwrap();
            for x in &per_magnet[a] {
                let mirrored = per_magnet[b]
                    .iter()
                    .find(|y| y.pancake == max_pancake - x.pancake && y.turn == x.turn)
                    .unwrap();
                let scale = x.sigma_hoop_pa.abs().max(1.0);
                assert!(
                    (x.sigma_hoop_pa.abs() - mirrored.sigma_hoop_pa.abs()).abs() < 1e-9 * scale,
                    "mirror pair ({a},{b}) hoop {} vs {}",
                    x.sigma_hoop_pa,
                    mirrored.sigma_hoop_pa
                );
            }
            assert_eq!(n, per_magnet[b].len());
        }
        // end and inner magnets see different neighbour fields, but the
        // stacks are far enough apart that all four maps agree closely
        for m in 1..4 {
            for (a, b) in per_magnet[0].iter().zip(per_magnet[m].iter()) {
                assert!(
                    (a.sigma_hoop_pa.abs() - b.sigma_hoop_pa.abs()).abs() < 0.01 * s.max_hoop_pa,
                    "magnet {m} hoop {} vs {}",
                    a.sigma_hoop_pa,
                    b.sigma_hoop_pa
                );
            }
        }
    }

    #[test]
    fn mean_never_exceeds_max() {
        let map = TurnFieldMap::compute(&assembly(), 1.0);
        let s = hoop_stress_map(&map, 179.0);
        assert!(s.mean_hoop_pa <= s.max_hoop_pa);
        assert!(s.mean_radial_pa <= s.max_radial_pa);
    }

    #[test]
    fn radial_stress_free_inner_surface() {
        let map = TurnFieldMap::compute(&assembly(), 1.0);
        let s = hoop_stress_map(&map, 179.0);
        for sample in s.samples.iter().filter(|x| x.turn == 0) {
            assert_eq!(sample.sigma_radial_pa, 0.0);
        }
    }
}
