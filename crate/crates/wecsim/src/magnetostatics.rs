//! Axisymmetric field evaluation of the magnet stack: per-loop fields via
//! complete elliptic integrals, superposition over all turns, field maps, and
//! flux linkage of armature coils as a function of actuator displacement.
//!
//! Everything here is a pure function of immutable inputs. Summation order is
//! fixed (loops in `turn_loops_of` order), so results are bitwise reproducible
//! regardless of worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, WecError};
use crate::geometry::{MachineConfig, MagnetAssembly, TurnLoop, turn_loops_of};
use crate::math::{ellipe, ellipk, integrate_adaptive, MonotoneCubic};
use crate::MU_0;

/// Default exclusion radius around a filament, m.
pub const SINGULARITY_EPSILON_M: f64 = 1e-6;

/// Flux density sample, T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldVector {
    pub b_r: f64,
    pub b_z: f64,
}

impl FieldVector {
    pub const ZERO: Self = Self { b_r: 0.0, b_z: 0.0 };

    pub fn magnitude(&self) -> f64 {
        self.b_r.hypot(self.b_z)
    }
}

impl std::ops::Add for FieldVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { b_r: self.b_r + rhs.b_r, b_z: self.b_z + rhs.b_z }
    }
}

impl std::ops::Mul<f64> for FieldVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self { b_r: self.b_r * s, b_z: self.b_z * s }
    }
}

/// Field of a circular filament of radius `a` carrying `current`, evaluated
/// at (r, z) relative to the loop plane, via complete elliptic integrals.
///
/// Errors if the evaluation point is within `SINGULARITY_EPSILON_M` of the
/// filament itself.
pub fn loop_field(a_m: f64, current_a: f64, r_m: f64, z_m: f64) -> Result<FieldVector> {
    if (r_m - a_m).hypot(z_m) < SINGULARITY_EPSILON_M {
        return Err(WecError::SingularPoint { r_m, z_m, epsilon_m: SINGULARITY_EPSILON_M });
    }
    Ok(loop_field_unchecked(a_m, current_a, r_m, z_m))
}

/// Same as [`loop_field`] without the singularity guard; callers must keep
/// the point off the filament.
#[inline]
pub fn loop_field_unchecked(a: f64, current: f64, r: f64, z: f64) -> FieldVector {
    if current == 0.0 {
        return FieldVector::ZERO;
    }
    // On-axis limit: B_z = mu0 I a^2 / (2 (a^2+z^2)^(3/2)).
    if r.abs() < 1e-12 * a {
        let d2 = a * a + z * z;
        return FieldVector { b_r: 0.0, b_z: MU_0 * current * a * a / (2.0 * d2 * d2.sqrt()) };
    }
    let q = (a + r) * (a + r) + z * z;
    let d = (a - r) * (a - r) + z * z;
    let m = 4.0 * a * r / q;
    let k = ellipk(m);
    let e = ellipe(m);
    let pre = MU_0 * current / (std::f64::consts::TAU * q.sqrt());
    let b_z = pre * (k + e * (a * a - r * r - z * z) / d);
    let b_r = pre * (z / r) * (-k + e * (a * a + r * r + z * z) / d);
    FieldVector { b_r, b_z }
}

/// Poloidal flux through a coaxial circular aperture of radius `r` at height
/// `z` above the loop plane: psi = mu0 I sqrt(a r)/k [(2-k^2)K - 2E].
#[inline]
pub fn loop_aperture_flux(a: f64, current: f64, r: f64, z: f64) -> f64 {
    if current == 0.0 || r <= 0.0 {
        return 0.0;
    }
    let q = (a + r) * (a + r) + z * z;
    let m = 4.0 * a * r / q;
    if m <= 0.0 {
        return 0.0;
    }
    MU_0 * current * (a * r / m).sqrt() * ((2.0 - m) * ellipk(m) - 2.0 * ellipe(m))
}

/// Superposed field of a whole assembly at one point, scaled by the iron
/// boost factor. Deterministic summation in `turn_loops_of` order.
pub fn assembly_field(
    assembly: &MagnetAssembly,
    current_a: f64,
    r_m: f64,
    z_m: f64,
    iron_boost_factor: f64,
) -> Result<FieldVector> {
    let loops = turn_loops_of(assembly);
    loops_field(&loops, current_a, r_m, z_m, iron_boost_factor)
}

/// Field of an explicit loop set at one point.
pub fn loops_field(
    loops: &[TurnLoop],
    current_a: f64,
    r_m: f64,
    z_m: f64,
    iron_boost_factor: f64,
) -> Result<FieldVector> {
    let mut acc = FieldVector::ZERO;
    for l in loops {
        let f = loop_field(l.radius_m, current_a * l.weight, r_m, z_m - l.z_m)?;
        acc = acc + f;
    }
    Ok(acc * iron_boost_factor)
}

/// Unit-current flux density at every turn location, self-loop excluded.
///
/// The field seen by turn `i` is the superposition of every other turn at
/// 1 A conduction current, times the iron boost factor; scaling by the actual
/// current is exact because the air-core model is linear.
#[derive(Debug, Clone)]
pub struct TurnFieldMap {
    pub loops: Vec<TurnLoop>,
    /// Per-unit-current field at each loop centre, boost included.
    pub unit_field: Vec<FieldVector>,
}

impl TurnFieldMap {
    pub fn compute(assembly: &MagnetAssembly, iron_boost_factor: f64) -> Self {
        let loops = turn_loops_of(assembly);
        let unit_field: Vec<FieldVector> = loops
            .par_iter()
            .enumerate()
            .map(|(i, target)| {
                let mut acc = FieldVector::ZERO;
                for (j, src) in loops.iter().enumerate() {
                    if i == j {
                        continue; // filament self-field is singular
                    }
                    acc = acc
                        + loop_field_unchecked(
                            src.radius_m,
                            src.weight,
                            target.radius_m,
                            target.z_m - src.z_m,
                        );
                }
                acc * iron_boost_factor
            })
            .collect();
        Self { loops, unit_field }
    }

    pub fn field_at_current(&self, i: usize, current_a: f64) -> FieldVector {
        self.unit_field[i] * current_a
    }

    /// (max, weighted mean) field magnitude at `current_a`, T.
    pub fn magnitude_stats(&self, current_a: f64) -> (f64, f64) {
        let mut max = 0.0_f64;
        let mut sum = 0.0;
        let mut wsum = 0.0;
        for (l, f) in self.loops.iter().zip(&self.unit_field) {
            let m = (*f * current_a).magnitude();
            max = max.max(m);
            let w = l.weight.abs();
            sum += w * m;
            wsum += w;
        }
        (max, sum / wsum)
    }
}

/// A sampled field map with summary statistics.
#[derive(Debug, Clone, Serialize)]
pub struct FieldMap {
    /// (r, z, field) samples; coordinates in metres.
    pub samples: Vec<(f64, f64, FieldVector)>,
    pub max_magnitude_t: f64,
    pub mean_magnitude_t: f64,
}

impl FieldMap {
    fn from_samples(samples: Vec<(f64, f64, FieldVector)>) -> Self {
        let mut max = 0.0_f64;
        let mut sum = 0.0;
        for (_, _, f) in &samples {
            let m = f.magnitude();
            max = max.max(m);
            sum += m;
        }
        let mean = if samples.is_empty() { 0.0 } else { sum / samples.len() as f64 };
        Self { samples, max_magnitude_t: max, mean_magnitude_t: mean }
    }
}

/// Field sampled at every turn location of the winding at `current_a`.
pub fn winding_field_map(map: &TurnFieldMap, current_a: f64) -> FieldMap {
    let samples = map
        .loops
        .iter()
        .zip(&map.unit_field)
        .map(|(l, f)| (l.radius_m, l.z_m, *f * current_a))
        .collect();
    FieldMap::from_samples(samples)
}

/// Field on a rectangular (r, z) grid; grid vectors must be strictly
/// monotone. Points landing on a filament are errors.
pub fn rect_field_map(
    assembly: &MagnetAssembly,
    current_a: f64,
    iron_boost_factor: f64,
    r_grid_m: &[f64],
    z_grid_m: &[f64],
) -> Result<FieldMap> {
    for g in [r_grid_m, z_grid_m] {
        if g.is_empty() || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WecError::InvalidGeometry("field map grid must be strictly monotone".into()));
        }
    }
    let loops = turn_loops_of(assembly);
    let points: Vec<(f64, f64)> = z_grid_m
        .iter()
        .flat_map(|&z| r_grid_m.iter().map(move |&r| (r, z)))
        .collect();
    let fields: Vec<Result<FieldVector>> = points
        .par_iter()
        .map(|&(r, z)| {
            let mut acc = FieldVector::ZERO;
            for l in &loops {
                let f = loop_field(l.radius_m, current_a * l.weight, r, z - l.z_m)?;
                acc = acc + f;
            }
            Ok(acc * iron_boost_factor)
        })
        .collect();
    let mut samples = Vec::with_capacity(points.len());
    for ((r, z), f) in points.into_iter().zip(fields) {
        samples.push((r, z, f?));
    }
    Ok(FieldMap::from_samples(samples))
}

/// Peak field magnitude along the middle of the air gap, for the stator
/// saturation surrogate check.
pub fn gap_peak_field(machine: &MachineConfig, n_axial: usize) -> Result<f64> {
    let asm = &machine.assembly;
    let r_gap = machine.armature.coil_inner_radius_m - 0.5 * machine.armature.air_gap_m;
    let z_half = 0.5 * machine.armature.stator_height_m;
    let loops = turn_loops_of(asm);
    let mut peak = 0.0_f64;
    for i in 0..n_axial {
        let z = -z_half + (i as f64 + 0.5) * (2.0 * z_half / n_axial as f64);
        let f = loops_field(&loops, machine.operating_current_a, r_gap, z, machine.iron_boost_factor)?;
        peak = peak.max(f.magnitude());
    }
    Ok(peak)
}

/// Armature coil modelled as a uniformly wound annular block.
#[derive(Debug, Clone, Copy)]
pub struct CoilGeometry {
    pub inner_radius_m: f64,
    pub radial_depth_m: f64,
    pub height_m: f64,
    /// Coil centre in stator coordinates, m.
    pub z_center_m: f64,
    pub turns: f64,
}

/// Flux linkage of one coil and its displacement derivative, by direct
/// adaptive quadrature over the coil cross-section.
///
/// `displacement_m` shifts the whole magnet assembly axially (positive up).
/// Returns (lambda [Wb-turns], d lambda / d displacement [Wb-turns/m]).
pub fn flux_linkage(
    assembly: &MagnetAssembly,
    coil: &CoilGeometry,
    displacement_m: f64,
    current_a: f64,
    iron_boost_factor: f64,
) -> (f64, f64) {
    let loops = turn_loops_of(assembly);
    let r1 = coil.inner_radius_m;
    let r2 = coil.inner_radius_m + coil.radial_depth_m;
    let z1 = coil.z_center_m - 0.5 * coil.height_m;
    let z2 = coil.z_center_m + 0.5 * coil.height_m;
    let area = (r2 - r1) * (z2 - z1);
    let scale = coil.turns * current_a * iron_boost_factor / area;

    let psi_sum = |rho: f64, zeta: f64| -> f64 {
        let mut acc = 0.0;
        for l in &loops {
            acc += loop_aperture_flux(l.radius_m, l.weight, rho, zeta - l.z_m - displacement_m);
        }
        acc
    };
    let dpsi_sum = |rho: f64, zeta: f64| -> f64 {
        // d psi / d displacement = +2 pi rho B_r at the aperture rim
        let mut acc = 0.0;
        for l in &loops {
            let f = loop_field_unchecked(l.radius_m, l.weight, rho, zeta - l.z_m - displacement_m);
            acc += std::f64::consts::TAU * rho * f.b_r;
        }
        acc
    };

    let lambda = integrate_adaptive(
        |zeta| integrate_adaptive(|rho| psi_sum(rho, zeta), r1, r2, 1e-8),
        z1,
        z2,
        1e-8,
    ) * scale;
    let dlambda = integrate_adaptive(
        |zeta| integrate_adaptive(|rho| dpsi_sum(rho, zeta), r1, r2, 1e-8),
        z1,
        z2,
        1e-8,
    ) * scale;
    (lambda, dlambda)
}

/// Gauss-Legendre nodes/weights of order 6 on [0, 1].
const QUAD6_X: [f64; 6] = [
    0.033_765_242_898_423_99,
    0.169_395_306_766_867_74,
    0.380_690_406_958_401_56,
    0.619_309_593_041_598_5,
    0.830_604_693_233_132_2,
    0.966_234_757_101_576,
];
const QUAD6_W: [f64; 6] = [
    0.085_662_246_189_585_17,
    0.180_380_786_524_069_3,
    0.233_956_967_286_345_52,
    0.233_956_967_286_345_52,
    0.180_380_786_524_069_3,
    0.085_662_246_189_585_17,
];

/// Gauss-Legendre nodes/weights of order 4 on [0, 1].
const QUAD4_X: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const QUAD4_W: [f64; 4] = [
    0.173_927_422_568_727,
    0.326_072_577_431_273,
    0.326_072_577_431_273,
    0.173_927_422_568_727,
];

/// Precomputed flux-linkage tables for fast transient evaluation.
///
/// For each radial quadrature node of the coil annulus, the aperture flux
/// per unit conduction current is tabulated against the axial offset between
/// the stator point and the (displaced) assembly. Phase linkage then reduces
/// to a handful of cubic-interpolated lookups per time step.
#[derive(Debug)]
pub struct LinkageTable {
    /// Radial node weights (sum to 1).
    radial_w: Vec<f64>,
    /// Axial node offsets from the coil centre (m) and weights (sum to 1).
    axial_nodes: Vec<(f64, f64)>,
    /// psi_j(s) per radial node, Wb per ampere of conduction current.
    psi: Vec<MonotoneCubic>,
    /// d psi_j / d s per radial node.
    dpsi: Vec<MonotoneCubic>,
    /// Tabulated range of s, m.
    s_max: f64,
    turns_per_coil: f64,
    /// (z_center, sense) per coil, per phase.
    phase_coils: Vec<Vec<(f64, f64)>>,
}

impl LinkageTable {
    /// Build tables covering displacements up to `max_displacement_m`.
    ///
    /// `du_m` is the table step; 2 mm resolves the pole-pitch-scale linkage
    /// variation to ~1e-9 relative.
    pub fn build(machine: &MachineConfig, max_displacement_m: f64, du_m: f64) -> Self {
        let arm = &machine.armature;
        let loops = turn_loops_of(&machine.assembly);
        let r1 = arm.coil_inner_radius_m;
        let depth = arm.coil_radial_depth_m;

        let radial_nodes: Vec<f64> = QUAD6_X.iter().map(|x| r1 + x * depth).collect();
        let radial_w = QUAD6_W.to_vec();
        let axial_nodes: Vec<(f64, f64)> = QUAD4_X
            .iter()
            .zip(QUAD4_W.iter())
            .map(|(x, w)| ((x - 0.5) * arm.coil_height_m, *w))
            .collect();

        let s_max = 0.5 * arm.stator_height_m
            + arm.coil_height_m
            + max_displacement_m.abs()
            + 0.05;
        let n = (2.0 * s_max / du_m).ceil() as usize + 1;
        let s_grid: Vec<f64> = (0..n).map(|i| -s_max + 2.0 * s_max * i as f64 / (n - 1) as f64).collect();

        let boost = machine.iron_boost_factor;
        let mut psi = Vec::with_capacity(radial_nodes.len());
        let mut dpsi = Vec::with_capacity(radial_nodes.len());
        for &rho in &radial_nodes {
            let rows: Vec<(f64, f64)> = s_grid
                .par_iter()
                .map(|&s| {
                    let mut p = 0.0;
                    let mut dp = 0.0;
                    for l in &loops {
                        let dz = s - l.z_m;
                        p += loop_aperture_flux(l.radius_m, l.weight, rho, dz);
                        let f = loop_field_unchecked(l.radius_m, l.weight, rho, dz);
                        dp += std::f64::consts::TAU * rho * f.b_r;
                    }
                    (p * boost, dp * boost)
                })
                .collect();
            let p: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let dp: Vec<f64> = rows.iter().map(|r| r.1).collect();
            psi.push(MonotoneCubic::new(s_grid.clone(), p).expect("monotone grid"));
            dpsi.push(MonotoneCubic::new(s_grid.clone(), dp).expect("monotone grid"));
        }

        let phase_coils = (0..arm.phases).map(|k| arm.phase_coils(k)).collect();
        Self {
            radial_w,
            axial_nodes,
            psi,
            dpsi,
            s_max,
            turns_per_coil: arm.turns_per_coil,
            phase_coils,
        }
    }

    fn lookup(&self, tables: &[MonotoneCubic], s: f64) -> f64 {
        if s.abs() >= self.s_max {
            return 0.0; // beyond the tabulated reach the assembly field is negligible
        }
        let mut acc = 0.0;
        for (t, w) in tables.iter().zip(&self.radial_w) {
            acc += w * t.eval(s).expect("s within table range");
        }
        acc
    }

    /// Linkage of one coil at stator position `z_c` for displacement `d`,
    /// per ampere of conduction current.
    fn coil_linkage_unit(&self, z_c: f64, d: f64) -> f64 {
        let mut acc = 0.0;
        for &(dz, w) in &self.axial_nodes {
            acc += w * self.lookup(&self.psi, z_c + dz - d);
        }
        acc * self.turns_per_coil
    }

    fn coil_linkage_derivative_unit(&self, z_c: f64, d: f64) -> f64 {
        let mut acc = 0.0;
        for &(dz, w) in &self.axial_nodes {
            // d/dd psi(z - d) = -psi'(s)
            acc -= w * self.lookup(&self.dpsi, z_c + dz - d);
        }
        acc * self.turns_per_coil
    }

    /// Series flux linkage of phase `k` at displacement `d`, Wb-turns,
    /// at conduction current `current_a`.
    pub fn phase_linkage(&self, k: usize, d: f64, current_a: f64) -> f64 {
        self.phase_coils[k]
            .iter()
            .map(|&(z_c, sense)| sense * self.coil_linkage_unit(z_c, d))
            .sum::<f64>()
            * current_a
    }

    /// d(lambda_k)/d(displacement) at `d`, Wb-turns/m.
    pub fn phase_linkage_derivative(&self, k: usize, d: f64, current_a: f64) -> f64 {
        self.phase_coils[k]
            .iter()
            .map(|&(z_c, sense)| sense * self.coil_linkage_derivative_unit(z_c, d))
            .sum::<f64>()
            * current_a
    }

    pub fn phase_count(&self) -> usize {
        self.phase_coils.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DoublePancake, MagnetAssembly, TapeSpec, WindingPack};

    fn tape() -> TapeSpec {
        TapeSpec {
            width_m: 4.0e-3,
            thickness_m: 0.4e-3,
            ic_ref_a: 1000.0,
            reference_temperature_k: 20.0,
            critical_temperature_k: 92.0,
        }
    }

    fn small_assembly(polarity_flip: bool) -> MagnetAssembly {
        let dp = DoublePancake {
            tape: tape(),
            inner_radius_m: 0.106,
            turns_per_pancake: 8.0,
            axial_center_m: 0.0,
            polarity: 1.0,
        };
        let pack = WindingPack { pancakes: vec![dp], insulation_plate_m: 0.5e-3, layer_clearance_m: 0.0 };
        let count = if polarity_flip { 2 } else { 1 };
        MagnetAssembly::periodic(pack, count, 0.2, 0.1318, 0.0345).unwrap()
    }

    #[test]
    fn on_axis_center_matches_analytic() {
        // a = 1 m, I = 1 A at the loop centre: B_z = mu0/2 = 6.2832e-7 T
        let f = loop_field(1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(f.b_r, 0.0);
        assert!((f.b_z - 6.283_185_307e-7).abs() < 1e-9 * 6.28e-7, "b_z = {}", f.b_z);
    }

    #[test]
    fn on_axis_offset_matches_analytic() {
        let (a, i, z) = (0.7, 3.0, 0.4);
        let f = loop_field(a, i, 0.0, z).unwrap();
        let expect = MU_0 * i * a * a / (2.0 * (a * a + z * z).powf(1.5));
        assert!((f.b_z - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn zero_current_zero_field() {
        let f = loop_field(0.3, 0.0, 0.15, 0.09).unwrap();
        assert_eq!(f.b_r, 0.0);
        assert_eq!(f.b_z, 0.0);
    }

    #[test]
    fn singular_point_is_error() {
        let err = loop_field(1.0, 1.0, 1.0 + 1e-8, 0.0);
        assert!(matches!(err, Err(WecError::SingularPoint { .. })));
    }

    /// Brute-force Biot-Savart over straight filament segments.
    fn segment_biot_savart(a: f64, current: f64, r: f64, z: f64, n: usize) -> FieldVector {
        let mut b_r = 0.0;
        let mut b_z = 0.0;
        let dphi = std::f64::consts::TAU / n as f64;
        for k in 0..n {
            let phi = (k as f64 + 0.5) * dphi;
            let (sin, cos) = phi.sin_cos();
            // source point and tangential dl on the loop
            let sx = a * cos;
            let sy = a * sin;
            let dlx = -a * sin * dphi;
            let dly = a * cos * dphi;
            // field point in the x-z plane
            let rx = r - sx;
            let ry = -sy;
            let rz = z;
            let dist2 = rx * rx + ry * ry + rz * rz;
            let dist = dist2.sqrt();
            // dl x r
            let cx = dly * rz;
            let cy = -dlx * rz;
            let cz = dlx * ry - dly * rx;
            let scale = MU_0 * current / (4.0 * std::f64::consts::PI * dist2 * dist);
            b_r += scale * cx;
            b_z += scale * cz;
            let _ = cy; // azimuthal component integrates to zero by symmetry
        }
        FieldVector { b_r, b_z }
    }

    #[test]
    fn off_axis_matches_segment_sum() {
        let (a, i) = (1.0, 1.0);
        let (r, z) = (0.5, 0.3);
        let exact = loop_field(a, i, r, z).unwrap();
        let brute = segment_biot_savart(a, i, r, z, 1_000_000);
        assert!(
            (exact.b_z - brute.b_z).abs() < 1e-8 * brute.b_z.abs(),
            "b_z {} vs {}",
            exact.b_z,
            brute.b_z
        );
        assert!(
            (exact.b_r - brute.b_r).abs() < 1e-8 * brute.b_r.abs(),
            "b_r {} vs {}",
            exact.b_r,
            brute.b_r
        );
    }

    #[test]
    fn aperture_flux_matches_bz_quadrature() {
        let (a, i, z) = (0.9, 2.5, 0.2);
        for r_ap in [0.2, 0.6, 1.4] {
            let psi = loop_aperture_flux(a, i, r_ap, z);
            let by_quad = integrate_adaptive(
                |r| std::f64::consts::TAU * r * loop_field_unchecked(a, i, r, z).b_z,
                0.0,
                r_ap,
                1e-10,
            );
            assert!((psi - by_quad).abs() < 1e-8 * psi.abs().max(1e-12), "r_ap={r_ap}: {psi} vs {by_quad}");
        }
    }

    #[test]
    fn aperture_flux_derivative_is_rim_br() {
        let (a, i) = (0.9, 2.5);
        let (r_ap, z) = (0.5, 0.17);
        let h = 1e-6;
        let fd = (loop_aperture_flux(a, i, r_ap, z + h) - loop_aperture_flux(a, i, r_ap, z - h)) / (2.0 * h);
        let analytic = -std::f64::consts::TAU * r_ap * loop_field_unchecked(a, i, r_ap, z).b_r;
        assert!((fd - analytic).abs() < 1e-6 * analytic.abs(), "{fd} vs {analytic}");
    }

    #[test]
    fn opposite_coaxial_packs_cancel_bz_at_midpoint() {
        let asm = small_assembly(true); // two magnets, opposite polarity
        let f = assembly_field(&asm, 100.0, 0.117, 0.0, 1.0).unwrap();
        assert!(f.b_z.abs() < 1e-10, "b_z = {}", f.b_z);
    }

    #[test]
    fn superposition_is_exact() {
        let asm = small_assembly(true);
        let loops = turn_loops_of(&asm);
        let (lo, hi) = loops.split_at(loops.len() / 2);
        let (r, z) = (0.14, 0.05);
        let whole = loops_field(&loops, 57.0, r, z, 1.0).unwrap();
        let a = loops_field(lo, 57.0, r, z, 1.0).unwrap();
        let b = loops_field(hi, 57.0, r, z, 1.0).unwrap();
        assert!((whole.b_z - (a.b_z + b.b_z)).abs() <= 1e-12 * whole.b_z.abs().max(1e-12));
        assert!((whole.b_r - (a.b_r + b.b_r)).abs() <= 1e-12 * whole.b_r.abs().max(1e-12));
    }

    #[test]
    fn field_scales_linearly_with_current() {
        let asm = small_assembly(false);
        let map = TurnFieldMap::compute(&asm, 1.0);
        let m1 = winding_field_map(&map, 80.0);
        let m2 = winding_field_map(&map, 160.0);
        for (a, b) in m1.samples.iter().zip(m2.samples.iter()) {
            assert!((b.2.b_z - 2.0 * a.2.b_z).abs() <= 1e-12 * b.2.b_z.abs().max(1e-15));
            assert!((b.2.b_r - 2.0 * a.2.b_r).abs() <= 1e-12 * b.2.b_r.abs().max(1e-15));
        }
        assert!((m2.max_magnitude_t - 2.0 * m1.max_magnitude_t).abs() <= 1e-12 * m2.max_magnitude_t);
    }

    #[test]
    fn divergence_free_over_closed_cylinder() {
        let asm = small_assembly(true);
        let loops = turn_loops_of(&asm);
        let (r_cyl, z_lo, z_hi) = (0.16, -0.13, 0.21);
        let cap = |z: f64| -> f64 {
            loops
                .iter()
                .map(|l| loop_aperture_flux(l.radius_m, l.weight * 100.0, r_cyl, z - l.z_m))
                .sum()
        };
        let side = integrate_adaptive(
            |z| {
                std::f64::consts::TAU
                    * r_cyl
                    * loops_field(&loops, 100.0, r_cyl, z, 1.0).unwrap().b_r
            },
            z_lo,
            z_hi,
            1e-10,
        );
        let net = cap(z_hi) - cap(z_lo) + side;
        let max_b = loops_field(&loops, 100.0, 0.117, 0.0, 1.0).unwrap().magnitude();
        let area = std::f64::consts::TAU * r_cyl * (z_hi - z_lo)
            + 2.0 * std::f64::consts::PI * r_cyl * r_cyl;
        assert!(net.abs() < 1e-6 * max_b * area, "net flux {net}");
    }
}
