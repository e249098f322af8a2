//! Transient simulation of the generator electrical system: position-dependent
//! three-phase EMFs feeding a six-pulse diode bridge through per-phase source
//! inductance into an R + smoothing-L DC load.
//!
//! The network is solved by trapezoidal modified nodal analysis with Norton
//! companion models. Diodes are ideal switches by default: a conduction-state
//! machine with switching events located by bisection on the step size, so
//! recorded samples never show reverse diode current. A smooth exponential
//! diode model is available for cross-validation.

#![allow(clippy::needless_range_loop)] // phase loops index several parallel triples

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WecError};
use crate::excitation::WaveSpec;
use crate::geometry::MachineConfig;
use crate::magnetostatics::LinkageTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiodeModel {
    /// Ideal switch with event detection (default).
    Ideal,
    /// Shockley diode with overflow-safe linearization, solved by Newton
    /// iteration; used to cross-check the ideal-switch results.
    Smooth,
}

/// Electrical system parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    /// Series inductance per phase, H.
    pub source_inductance_h: f64,
    /// DC load resistance, ohm.
    pub load_resistance_ohm: f64,
    /// DC smoothing inductance, H.
    pub smoothing_inductance_h: f64,
    /// Armature winding resistance per phase, ohm.
    pub armature_resistance_ohm: f64,
    pub diode_model: DiodeModel,
    /// Forward drop of the ideal-switch model, V.
    pub diode_forward_drop_v: f64,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.source_inductance_h < 0.0 || self.smoothing_inductance_h < 0.0 {
            return Err(WecError::Config("inductances must be non-negative".into()));
        }
        if self.load_resistance_ohm <= 0.0 {
            return Err(WecError::Config("load resistance must be positive".into()));
        }
        if self.armature_resistance_ohm < 0.0 {
            return Err(WecError::Config("armature resistance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Cumulative energy integrals sampled on the output grid, J.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EnergyLedger {
    /// Integral of sum(e_k i_k).
    pub source_j: Vec<f64>,
    /// Integral of the load resistor power.
    pub load_j: Vec<f64>,
    /// Integral of armature conduction losses.
    pub winding_loss_j: Vec<f64>,
    /// Integral of diode conduction losses.
    pub diode_loss_j: Vec<f64>,
    /// Instantaneous stored inductor energy.
    pub inductor_j: Vec<f64>,
}

/// Time series produced by one transient run.
#[derive(Debug, Clone, Serialize)]
pub struct TransientResult {
    pub time_s: Vec<f64>,
    /// Per-phase EMF, V (3 phases).
    pub emf_v: Vec<Vec<f64>>,
    /// Per-phase current into the bridge, A.
    pub phase_current_a: Vec<Vec<f64>>,
    /// Bridge DC terminal voltage v_pn, V.
    pub bridge_voltage_v: Vec<f64>,
    /// Voltage across the load resistor, V (the reported output voltage).
    pub load_voltage_v: Vec<f64>,
    /// DC-link current, A.
    pub dc_current_a: Vec<f64>,
    /// Conduction state bits: 0..2 upper diodes, 3..5 lower diodes.
    pub diode_states: Vec<u8>,
    pub dt_s: f64,
    pub energy: EnergyLedger,
}

impl TransientResult {
    /// Sample index range covering `[t0, t1]`.
    fn window_indices(&self, t0: f64, t1: f64) -> (usize, usize) {
        let i0 = ((t0 / self.dt_s).round() as usize).min(self.time_s.len() - 1);
        let i1 = ((t1 / self.dt_s).round() as usize).min(self.time_s.len() - 1);
        (i0, i1)
    }

    /// Energy-conservation residual over `[t0, t1]`, as a fraction of the
    /// source energy through the window.
    pub fn energy_residual_fraction(&self, t0: f64, t1: f64) -> f64 {
        let (i0, i1) = self.window_indices(t0, t1);
        let e = &self.energy;
        let src = e.source_j[i1] - e.source_j[i0];
        let load = e.load_j[i1] - e.load_j[i0];
        let wind = e.winding_loss_j[i1] - e.winding_loss_j[i0];
        let diode = e.diode_loss_j[i1] - e.diode_loss_j[i0];
        let dstored = e.inductor_j[i1] - e.inductor_j[i0];
        (src - load - wind - diode - dstored).abs() / src.abs().max(1e-30)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub t_end_s: f64,
    /// Output grid step, s.
    pub dt_s: f64,
    pub initial_phase_current_a: [f64; 3],
    pub initial_dc_current_a: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { t_end_s: 1.0, dt_s: 1e-3, initial_phase_current_a: [0.0; 3], initial_dc_current_a: 0.0 }
    }
}

const R_ON_OHM: f64 = 1e-6;
const G_LEAK_S: f64 = 1e-9;
const EVENT_TIME_TOL_S: f64 = 1e-6;
const DIODE_CURRENT_TOL_A: f64 = 1e-12;
const DIODE_VOLTAGE_TOL_V: f64 = 1e-9;
/// Events allowed within one output step before declaring a stuck machine.
const EVENT_BUDGET: usize = 400;
const SMOOTH_IS_A: f64 = 1e-9;
const SMOOTH_VT_V: f64 = 10e-3;

/// Node indices: wye neutral, three bridge terminals, DC+ bus, load midpoint.
/// The DC- bus is ground.
const N_NEUTRAL: usize = 0;
const N_TERM: [usize; 3] = [1, 2, 3];
const N_PLUS: usize = 4;
const N_MID: usize = 5;

#[derive(Debug, Clone, Copy)]
struct State {
    i_phase: [f64; 3],
    i_dc: f64,
    v: [f64; 6],
    /// Diode conduction bits (ideal model only).
    states: u8,
}

struct Stamps {
    g: Matrix6<f64>,
    rhs: Vector6<f64>,
}

impl Stamps {
    fn new() -> Self {
        Self { g: Matrix6::zeros(), rhs: Vector6::zeros() }
    }

    /// Branch a -> b with i = g (v_a - v_b) + j.
    fn norton(&mut self, a: Option<usize>, b: Option<usize>, g: f64, j: f64) {
        if let Some(a) = a {
            self.g[(a, a)] += g;
            self.rhs[a] -= j;
            if let Some(b) = b {
                self.g[(a, b)] -= g;
            }
        }
        if let Some(b) = b {
            self.g[(b, b)] += g;
            self.rhs[b] += j;
            if let Some(a) = a {
                self.g[(b, a)] -= g;
            }
        }
    }
}

/// Companion coefficients for the EMF + R + L source branch (neutral -> terminal).
#[derive(Clone, Copy)]
struct SourceCompanion {
    g: f64,
    /// i = g (vN - vt) + g e_next + hist
    hist: f64,
}

fn source_companion(
    l: f64,
    r: f64,
    h: f64,
    i_prev: f64,
    v_drive_prev: f64,
    e_next: f64,
    backward_euler: bool,
) -> SourceCompanion {
    if l == 0.0 {
        let g = 1.0 / r.max(1e-9);
        return SourceCompanion { g, hist: g * e_next };
    }
    if backward_euler {
        let a = h / l;
        let beta = 1.0 + a * r;
        SourceCompanion { g: a / beta, hist: (i_prev + a * e_next) / beta }
    } else {
        let a = h / (2.0 * l);
        let beta = 1.0 + a * r;
        let gamma = 1.0 - a * r;
        SourceCompanion { g: a / beta, hist: (gamma * i_prev + a * (v_drive_prev + e_next)) / beta }
    }
}

struct DcCompanion {
    g: f64,
    hist: f64,
}

fn dc_companion(l: f64, h: f64, i_prev: f64, v_prev: f64, backward_euler: bool) -> DcCompanion {
    if l == 0.0 {
        // direct connection modelled as a large conductance
        return DcCompanion { g: 1e9, hist: 0.0 };
    }
    if backward_euler {
        DcCompanion { g: h / l, hist: i_prev }
    } else {
        let a = h / (2.0 * l);
        DcCompanion { g: a, hist: i_prev + a * v_prev }
    }
}

/// Junction-voltage limiting for the Newton linearization point: forward
/// excursions past the knee advance logarithmically in current instead of
/// linearly in voltage, which keeps the exponential stamps finite.
fn pnjlim(v_new: f64, v_old: f64, vt: f64) -> f64 {
    let v_crit = vt * (vt / (std::f64::consts::SQRT_2 * SMOOTH_IS_A)).ln();
    if v_new > v_crit && (v_new - v_old).abs() > 2.0 * vt {
        if v_old > 0.0 {
            let arg = 1.0 + (v_new - v_old) / vt;
            if arg > 0.0 {
                v_old + vt * arg.ln()
            } else {
                v_crit
            }
        } else {
            vt * (v_new / vt).max(std::f64::consts::E).ln()
        }
    } else {
        v_new
    }
}

/// Overflow-safe Shockley characteristic: returns (i, di/dv).
fn smooth_diode_iv(v: f64, is: f64, vt: f64) -> (f64, f64) {
    let u = v / vt;
    if u <= 40.0 {
        let e = u.exp();
        (is * (e - 1.0), is * e / vt)
    } else {
        let e40 = 40.0_f64.exp();
        (is * (e40 * (1.0 + (u - 40.0)) - 1.0), is * e40 / vt)
    }
}

struct Engine<'a, F: Fn(f64) -> [f64; 3]> {
    emf: &'a F,
    spec: &'a CircuitSpec,
}

impl<'a, F: Fn(f64) -> [f64; 3]> Engine<'a, F> {
    /// Solve one trial step of size `h` from `from` at time `t`.
    /// Returns the advanced state; diode states are carried unchanged.
    fn trial_ideal(&self, from: &State, t: f64, h: f64, first: bool) -> State {
        let spec = self.spec;
        let e_next = (self.emf)(t + h);
        let e_prev = (self.emf)(t);
        let mut st = Stamps::new();

        let mut src = [SourceCompanion { g: 0.0, hist: 0.0 }; 3];
        for k in 0..3 {
            let v_drive_prev = from.v[N_NEUTRAL] - from.v[N_TERM[k]] + e_prev[k];
            let c = source_companion(
                spec.source_inductance_h,
                spec.armature_resistance_ohm,
                h,
                from.i_phase[k],
                v_drive_prev,
                e_next[k],
                first,
            );
            src[k] = c;
            st.norton(Some(N_NEUTRAL), Some(N_TERM[k]), c.g, c.hist);
        }

        // diodes as ideal switches
        let vf = spec.diode_forward_drop_v;
        for k in 0..3 {
            if from.states & (1 << k) != 0 {
                st.norton(Some(N_TERM[k]), Some(N_PLUS), 1.0 / R_ON_OHM, -vf / R_ON_OHM);
            }
            if from.states & (1 << (k + 3)) != 0 {
                st.norton(None, Some(N_TERM[k]), 1.0 / R_ON_OHM, -vf / R_ON_OHM);
            }
        }

        let dc = dc_companion(
            spec.smoothing_inductance_h,
            h,
            from.i_dc,
            from.v[N_PLUS] - from.v[N_MID],
            first,
        );
        st.norton(Some(N_PLUS), Some(N_MID), dc.g, dc.hist);
        st.norton(Some(N_MID), None, 1.0 / spec.load_resistance_ohm, 0.0);

        // leak conductances keep disconnected islands determined
        st.norton(Some(N_NEUTRAL), None, G_LEAK_S, 0.0);
        for k in 0..3 {
            st.norton(Some(N_TERM[k]), None, G_LEAK_S, 0.0);
        }

        let v = st
            .g
            .lu()
            .solve(&st.rhs)
            .expect("leak-regularized nodal matrix is nonsingular");

        let mut i_phase = [0.0; 3];
        for k in 0..3 {
            i_phase[k] = src[k].g * (v[N_NEUTRAL] - v[N_TERM[k]]) + src[k].hist;
        }
        let i_dc = dc.g * (v[N_PLUS] - v[N_MID]) + dc.hist;
        State {
            i_phase,
            i_dc,
            v: [v[0], v[1], v[2], v[3], v[4], v[5]],
            states: from.states,
        }
    }

    /// Diode currents (upper then lower) in a solved state.
    fn diode_currents(&self, s: &State) -> [f64; 6] {
        let vf = self.spec.diode_forward_drop_v;
        let mut out = [0.0; 6];
        for k in 0..3 {
            if s.states & (1 << k) != 0 {
                out[k] = (s.v[N_TERM[k]] - s.v[N_PLUS] - vf) / R_ON_OHM;
            }
            if s.states & (1 << (k + 3)) != 0 {
                out[k + 3] = (0.0 - s.v[N_TERM[k]] - vf) / R_ON_OHM;
            }
        }
        out
    }

    /// Bit mask of diodes whose constraint is violated in `s`.
    fn violations(&self, s: &State) -> u8 {
        let vf = self.spec.diode_forward_drop_v;
        let i_d = self.diode_currents(s);
        let mut mask = 0u8;
        for k in 0..3 {
            let on_top = s.states & (1 << k) != 0;
            if on_top {
                if i_d[k] < -DIODE_CURRENT_TOL_A {
                    mask |= 1 << k;
                }
            } else if s.v[N_TERM[k]] - s.v[N_PLUS] > vf + DIODE_VOLTAGE_TOL_V {
                mask |= 1 << k;
            }
            let on_bot = s.states & (1 << (k + 3)) != 0;
            if on_bot {
                if i_d[k + 3] < -DIODE_CURRENT_TOL_A {
                    mask |= 1 << (k + 3);
                }
            } else if 0.0 - s.v[N_TERM[k]] > vf + DIODE_VOLTAGE_TOL_V {
                mask |= 1 << (k + 3);
            }
        }
        mask
    }

    /// Advance one output step of size `dt` with event handling.
    fn step_ideal(&self, state: &mut State, t: f64, dt: f64, first: bool) -> Result<()> {
        let mut remaining = dt;
        let mut now = t;
        let mut events = 0usize;
        let mut first_sub = first;
        while remaining > 1e-15 {
            let trial = self.trial_ideal(state, now, remaining, first_sub);
            let mask = self.violations(&trial);
            if mask == 0 {
                *state = trial;
                now += remaining;
                remaining = 0.0;
                first_sub = false;
                continue;
            }
            events += 1;
            if events > EVENT_BUDGET {
                return Err(WecError::StateMachine { t_s: now, states: state.states });
            }
            // Bisect the step size down to the last violation-free length.
            let mut lo = 0.0_f64;
            let mut hi = remaining;
            let mut flip_mask = mask;
            while hi - lo > EVENT_TIME_TOL_S {
                let mid = 0.5 * (lo + hi);
                let probe = self.trial_ideal(state, now, mid, first_sub);
                let m = self.violations(&probe);
                if m == 0 {
                    lo = mid;
                } else {
                    hi = mid;
                    flip_mask = m;
                }
            }
            if lo > 0.0 {
                let commit = self.trial_ideal(state, now, lo, first_sub);
                *state = commit;
                now += lo;
                remaining -= lo;
            }
            state.states ^= flip_mask;
            // restart integration after the topology change
            first_sub = true;
        }
        Ok(())
    }

    /// Smooth-diode step with sub-step halving when the Newton iteration
    /// fails to settle (commutation onsets can defeat a full-step solve).
    fn step_smooth(&self, state: &mut State, t: f64, h: f64, first: bool) -> Result<()> {
        self.step_smooth_adaptive(state, t, h, first, 0)
    }

    fn step_smooth_adaptive(
        &self,
        state: &mut State,
        t: f64,
        h: f64,
        first: bool,
        depth: u32,
    ) -> Result<()> {
        let mut trial = *state;
        match self.newton_step(&mut trial, t, h, first) {
            Ok(()) => {
                *state = trial;
                Ok(())
            }
            Err(e) => {
                if depth >= 12 {
                    return Err(e);
                }
                self.step_smooth_adaptive(state, t, 0.5 * h, first, depth + 1)?;
                self.step_smooth_adaptive(state, t + 0.5 * h, 0.5 * h, false, depth + 1)
            }
        }
    }

    /// One trapezoidal step of the smooth-diode network by Newton iteration.
    fn newton_step(&self, state: &mut State, t: f64, h: f64, first: bool) -> Result<()> {
        let spec = self.spec;
        let e_next = (self.emf)(t + h);
        let e_prev = (self.emf)(t);

        let mut src = [SourceCompanion { g: 0.0, hist: 0.0 }; 3];
        for k in 0..3 {
            let v_drive_prev = state.v[N_NEUTRAL] - state.v[N_TERM[k]] + e_prev[k];
            src[k] = source_companion(
                spec.source_inductance_h,
                spec.armature_resistance_ohm,
                h,
                state.i_phase[k],
                v_drive_prev,
                e_next[k],
                first,
            );
        }
        let dc = dc_companion(
            spec.smoothing_inductance_h,
            h,
            state.i_dc,
            state.v[N_PLUS] - state.v[N_MID],
            first,
        );

        // Newton iteration with per-junction voltage limiting: each diode is
        // linearized at its own limited junction voltage, which is updated
        // from the node solution between iterations.
        let mut v = Vector6::from_row_slice(&state.v);
        let mut vd_lin = [0.0_f64; 6];
        for k in 0..3 {
            vd_lin[k] = v[N_TERM[k]] - v[N_PLUS];
            vd_lin[k + 3] = -v[N_TERM[k]];
        }
        let mut converged = false;
        for _ in 0..300 {
            let mut st = Stamps::new();
            for k in 0..3 {
                st.norton(Some(N_NEUTRAL), Some(N_TERM[k]), src[k].g, src[k].hist);
            }
            st.norton(Some(N_PLUS), Some(N_MID), dc.g, dc.hist);
            st.norton(Some(N_MID), None, 1.0 / spec.load_resistance_ohm, 0.0);
            st.norton(Some(N_NEUTRAL), None, G_LEAK_S, 0.0);
            for k in 0..3 {
                st.norton(Some(N_TERM[k]), None, G_LEAK_S, 0.0);
            }
            for k in 0..3 {
                let (i, g) = smooth_diode_iv(vd_lin[k], SMOOTH_IS_A, SMOOTH_VT_V);
                st.norton(Some(N_TERM[k]), Some(N_PLUS), g, i - g * vd_lin[k]);
                let (i, g) = smooth_diode_iv(vd_lin[k + 3], SMOOTH_IS_A, SMOOTH_VT_V);
                st.norton(None, Some(N_TERM[k]), g, i - g * vd_lin[k + 3]);
            }
            let v_new = match st.g.lu().solve(&st.rhs) {
                Some(x) => x,
                None => return Err(WecError::StateMachine { t_s: t, states: 0 }),
            };
            // mixed relative/absolute settling test: blocked junctions sit at
            // hundreds of volts where micro-volt limit cycles are physically
            // meaningless, conducting ones need micro-volt precision
            let mut settled = true;
            for k in 0..3 {
                let cand_top = v_new[N_TERM[k]] - v_new[N_PLUS];
                let cand_bot = -v_new[N_TERM[k]];
                if (cand_top - vd_lin[k]).abs() > 1e-6 * (1.0 + cand_top.abs())
                    || (cand_bot - vd_lin[k + 3]).abs() > 1e-6 * (1.0 + cand_bot.abs())
                {
                    settled = false;
                }
                vd_lin[k] = pnjlim(cand_top, vd_lin[k], SMOOTH_VT_V);
                vd_lin[k + 3] = pnjlim(cand_bot, vd_lin[k + 3], SMOOTH_VT_V);
            }
            for i in 0..6 {
                if (v_new[i] - v[i]).abs() > 1e-6 * (1.0 + v_new[i].abs()) {
                    settled = false;
                }
            }
            v = v_new;
            if settled {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(WecError::StateMachine { t_s: t, states: 0 });
        }

        for k in 0..3 {
            state.i_phase[k] = src[k].g * (v[N_NEUTRAL] - v[N_TERM[k]]) + src[k].hist;
        }
        state.i_dc = dc.g * (v[N_PLUS] - v[N_MID]) + dc.hist;
        state.v = [v[0], v[1], v[2], v[3], v[4], v[5]];
        Ok(())
    }

    fn diode_loss_power(&self, s: &State) -> f64 {
        match self.spec.diode_model {
            DiodeModel::Ideal => {
                let i_d = self.diode_currents(s);
                let vf = self.spec.diode_forward_drop_v;
                let mut p = 0.0;
                for (n, &i) in i_d.iter().enumerate() {
                    if i != 0.0 {
                        let k = n % 3;
                        let vd = if n < 3 {
                            s.v[N_TERM[k]] - s.v[N_PLUS]
                        } else {
                            -s.v[N_TERM[k]]
                        };
                        p += vd * i;
                        let _ = vf;
                    }
                }
                p
            }
            DiodeModel::Smooth => {
                let mut p = 0.0;
                for k in 0..3 {
                    let vd = s.v[N_TERM[k]] - s.v[N_PLUS];
                    p += vd * smooth_diode_iv(vd, SMOOTH_IS_A, SMOOTH_VT_V).0;
                    let vd = -s.v[N_TERM[k]];
                    p += vd * smooth_diode_iv(vd, SMOOTH_IS_A, SMOOTH_VT_V).0;
                }
                p
            }
        }
    }
}

/// Integrate the rectifier network driven by `emf(t) -> [e1, e2, e3]`.
pub fn simulate<F: Fn(f64) -> [f64; 3]>(
    emf: F,
    spec: &CircuitSpec,
    opts: &SimOptions,
) -> Result<TransientResult> {
    spec.validate()?;
    if opts.dt_s <= 0.0 || opts.t_end_s <= 0.0 {
        return Err(WecError::Config("simulation span and step must be positive".into()));
    }
    let n_steps = (opts.t_end_s / opts.dt_s).round() as usize;
    let engine = Engine { emf: &emf, spec };

    let mut state = State {
        i_phase: opts.initial_phase_current_a,
        i_dc: opts.initial_dc_current_a,
        v: [0.0; 6],
        states: 0,
    };

    let n = n_steps + 1;
    let mut out = TransientResult {
        time_s: Vec::with_capacity(n),
        emf_v: (0..3).map(|_| Vec::with_capacity(n)).collect(),
        phase_current_a: (0..3).map(|_| Vec::with_capacity(n)).collect(),
        bridge_voltage_v: Vec::with_capacity(n),
        load_voltage_v: Vec::with_capacity(n),
        dc_current_a: Vec::with_capacity(n),
        diode_states: Vec::with_capacity(n),
        dt_s: opts.dt_s,
        energy: EnergyLedger::default(),
    };

    let stored_energy = |s: &State| {
        0.5 * spec.source_inductance_h * s.i_phase.iter().map(|i| i * i).sum::<f64>()
            + 0.5 * spec.smoothing_inductance_h * s.i_dc * s.i_dc
    };
    let powers = |s: &State, e: &[f64; 3]| {
        let p_src: f64 = e.iter().zip(&s.i_phase).map(|(e, i)| e * i).sum();
        let p_load = spec.load_resistance_ohm * s.i_dc * s.i_dc;
        let p_wind: f64 =
            s.i_phase.iter().map(|i| spec.armature_resistance_ohm * i * i).sum();
        let p_diode = engine.diode_loss_power(s);
        (p_src, p_load, p_wind, p_diode)
    };

    let mut cum = (0.0, 0.0, 0.0, 0.0);
    let e0 = emf(0.0);
    let mut prev_p = powers(&state, &e0);
    let record = |out: &mut TransientResult, t: f64, s: &State, e: &[f64; 3], cum: (f64, f64, f64, f64)| {
        out.time_s.push(t);
        for k in 0..3 {
            out.emf_v[k].push(e[k]);
            out.phase_current_a[k].push(s.i_phase[k]);
        }
        out.bridge_voltage_v.push(s.v[N_PLUS]);
        out.load_voltage_v.push(spec.load_resistance_ohm * s.i_dc);
        out.dc_current_a.push(s.i_dc);
        out.diode_states.push(s.states);
        out.energy.source_j.push(cum.0);
        out.energy.load_j.push(cum.1);
        out.energy.winding_loss_j.push(cum.2);
        out.energy.diode_loss_j.push(cum.3);
        out.energy.inductor_j.push(stored_energy(s));
    };
    record(&mut out, 0.0, &state, &e0, cum);

    for step in 0..n_steps {
        let t = step as f64 * opts.dt_s;
        match spec.diode_model {
            DiodeModel::Ideal => engine.step_ideal(&mut state, t, opts.dt_s, step == 0)?,
            DiodeModel::Smooth => engine.step_smooth(&mut state, t, opts.dt_s, step == 0)?,
        }
        let t1 = (step + 1) as f64 * opts.dt_s;
        let e = emf(t1);
        let p = powers(&state, &e);
        cum.0 += 0.5 * (prev_p.0 + p.0) * opts.dt_s;
        cum.1 += 0.5 * (prev_p.1 + p.1) * opts.dt_s;
        cum.2 += 0.5 * (prev_p.2 + p.2) * opts.dt_s;
        cum.3 += 0.5 * (prev_p.3 + p.3) * opts.dt_s;
        prev_p = p;
        record(&mut out, t1, &state, &e, cum);
    }
    Ok(out)
}

/// Machine EMF source: e_k(t) = -(d lambda_k / dz)(z(t)) x v(t).
pub struct MachineEmf<'a> {
    pub table: &'a LinkageTable,
    pub wave: WaveSpec,
    pub conduction_current_a: f64,
}

impl<'a> MachineEmf<'a> {
    pub fn emf_at(&self, t: f64) -> [f64; 3] {
        let (z, v) = self.wave.actuator_state(t);
        let mut e = [0.0; 3];
        for (k, ek) in e.iter_mut().enumerate() {
            *ek = -self.table.phase_linkage_derivative(k, z, self.conduction_current_a) * v;
        }
        e
    }
}

/// Per-phase EMF waveforms on a time grid.
pub fn emf_waveforms(
    table: &LinkageTable,
    wave: &WaveSpec,
    conduction_current_a: f64,
    t_grid_s: &[f64],
) -> Vec<[f64; 3]> {
    let src = MachineEmf { table, wave: *wave, conduction_current_a };
    t_grid_s.iter().map(|&t| src.emf_at(t)).collect()
}

/// Derived figures for one run.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub vrms_in_v: Vec<f64>,
    pub vrms_out_v: f64,
    pub power_out_kw: f64,
    /// Mean bridge-side DC power over the window, kW.
    pub power_bridge_kw: f64,
    pub joule_loss_kw: f64,
    pub efficiency_pct: f64,
    pub power_factor: f64,
    pub thd_in: f64,
    pub thd_out: f64,
    pub fundamental_in_hz: f64,
    pub fundamental_out_hz: f64,
    pub peak_phase_current_a: Vec<f64>,
    pub mean_bridge_voltage_v: f64,
    pub energy_residual_fraction: f64,
    pub window_s: (f64, f64),
}

fn trapezoid_mean(x: &[f64], map: impl Fn(f64) -> f64) -> f64 {
    if x.len() < 2 {
        return x.first().copied().map(&map).unwrap_or(0.0);
    }
    let mut acc = 0.5 * (map(x[0]) + map(x[x.len() - 1]));
    for &v in &x[1..x.len() - 1] {
        acc += map(v);
    }
    acc / (x.len() - 1) as f64
}

fn trapezoid_mean2(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    if n < 2 {
        return a.first().zip(b.first()).map(|(x, y)| x * y).unwrap_or(0.0);
    }
    let mut acc = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    for i in 1..n - 1 {
        acc += a[i] * b[i];
    }
    acc / (n - 1) as f64
}

fn rms(x: &[f64]) -> f64 {
    trapezoid_mean(x, |v| v * v).sqrt()
}

/// Spectrum analysis over an integer number of periods: returns
/// (fundamental bin index, fundamental frequency, THD).
///
/// THD follows the energy definition: energy in all non-fundamental,
/// non-DC bins divided by the fundamental-bin energy.
fn spectrum(signal: &[f64], dt: f64) -> Result<(usize, f64, f64)> {
    use rustfft::{num_complex::Complex, FftPlanner};
    let n = signal.len();
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let energy: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let half = n / 2;
    let (mut k_max, mut e_max) = (0usize, 0.0f64);
    for (k, &e) in energy.iter().enumerate().take(half + 1).skip(1) {
        if e > e_max {
            e_max = e;
            k_max = k;
        }
    }
    let total_ac: f64 = energy.iter().skip(1).sum();
    if k_max == 0 || e_max <= 1e-12 * energy[0].max(1e-300) || total_ac <= 1e-18 * energy[0].max(1e-300) {
        return Err(WecError::DegenerateSpectrum);
    }
    let mut fund = e_max;
    if k_max != 0 && k_max * 2 != n {
        fund += energy[n - k_max];
    }
    let harmonics = total_ac - fund;
    let thd = harmonics / fund;
    Ok((k_max, k_max as f64 / (n as f64 * dt), thd))
}

/// Compute derived metrics over the analysis window `[t0, t1]`, which must
/// span at least one full period of `wave_period_s`.
pub fn metrics(ts: &TransientResult, t0: f64, t1: f64, wave_period_s: f64) -> Result<Metrics> {
    if t1 - t0 < wave_period_s - 1e-9 {
        return Err(WecError::WindowTooShort { window_s: t1 - t0, period_s: wave_period_s });
    }
    let (i0, i1) = ts.window_indices(t0, t1);
    let dt = ts.dt_s;

    let vrms_in: Vec<f64> = ts.emf_v.iter().map(|e| rms(&e[i0..=i1])).collect();
    let irms: Vec<f64> = ts.phase_current_a.iter().map(|i| rms(&i[i0..=i1])).collect();
    let vrms_out = rms(&ts.load_voltage_v[i0..=i1]);
    let p_out = trapezoid_mean2(&ts.load_voltage_v[i0..=i1], &ts.dc_current_a[i0..=i1]);
    let p_bridge = trapezoid_mean2(&ts.bridge_voltage_v[i0..=i1], &ts.dc_current_a[i0..=i1]);

    let mut p_src = 0.0;
    for k in 0..3 {
        p_src += trapezoid_mean2(&ts.emf_v[k][i0..=i1], &ts.phase_current_a[k][i0..=i1]);
    }
    let e = &ts.energy;
    let window = (i1 - i0) as f64 * dt;
    let wind_loss = (e.winding_loss_j[i1] - e.winding_loss_j[i0]) / window;
    let diode_loss = (e.diode_loss_j[i1] - e.diode_loss_j[i0]) / window;
    let joule = wind_loss + diode_loss;
    let efficiency = 100.0 * p_out / (p_out + joule).max(1e-30);

    let apparent: f64 = vrms_in.iter().zip(&irms).map(|(v, i)| v * i).sum();
    let power_factor = if apparent > 0.0 { p_src / apparent } else { 0.0 };

    let (_, f_in, thd_in) = spectrum(&ts.emf_v[0][i0..=i1], dt)?;
    let (_, f_out, thd_out) = spectrum(&ts.bridge_voltage_v[i0..=i1], dt)?;

    let peaks: Vec<f64> = ts
        .phase_current_a
        .iter()
        .map(|p| p[i0..=i1].iter().fold(0.0_f64, |m, &x| m.max(x.abs())))
        .collect();

    Ok(Metrics {
        vrms_in_v: vrms_in,
        vrms_out_v: vrms_out,
        power_out_kw: p_out / 1e3,
        power_bridge_kw: p_bridge / 1e3,
        joule_loss_kw: joule / 1e3,
        efficiency_pct: efficiency,
        power_factor,
        thd_in,
        thd_out,
        fundamental_in_hz: f_in,
        fundamental_out_hz: f_out,
        peak_phase_current_a: peaks,
        mean_bridge_voltage_v: trapezoid_mean(&ts.bridge_voltage_v[i0..=i1], |v| v),
        energy_residual_fraction: ts.energy_residual_fraction(t0, t1),
        window_s: (t0, t1),
    })
}

/// End-to-end run: wave -> EMF -> rectifier -> metrics.
///
/// `cycles` wave periods are analysed after one discarded start-up period.
pub fn run_case(
    machine: &MachineConfig,
    table: &LinkageTable,
    wave: &WaveSpec,
    conduction_current_a: f64,
    cycles: usize,
) -> Result<(TransientResult, Metrics)> {
    if cycles == 0 {
        return Err(WecError::Config("cycle count must be at least 1".into()));
    }
    let period = wave.period_s();
    let samples_per_cycle = (period / 1e-3).round() as usize;
    let dt = period / samples_per_cycle as f64;
    let opts = SimOptions {
        t_end_s: period * (cycles + 1) as f64,
        dt_s: dt,
        ..Default::default()
    };
    let src = MachineEmf { table, wave: *wave, conduction_current_a };
    let ts = simulate(|t| src.emf_at(t), &machine.circuit, &opts)?;
    let m = metrics(&ts, period, period * (cycles + 1) as f64, period)?;
    Ok((ts, m))
}
