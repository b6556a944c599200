//! Time-domain integration of the laser system under piecewise-constant
//! injection schedules, with convergence detection to equilibria.
//!
//! The integrator is an embedded Dormand-Prince 5(4) pair with PI step-size
//! control. The system is non-stiff at the parameter scales of interest
//! (eigenvalue real parts of order tens per ns), so an explicit method with
//! error control is sufficient. Integration restarts exactly at every
//! schedule breakpoint, so no step straddles a discontinuity of the injected
//! field.

use thiserror::Error;

use crate::model::{self, ComplexPair, LaserState};
use crate::params::{LaserParams, ToleranceSet};
use crate::Vec6;

/// Piecewise-constant injected field: `segments[k].0` is the start time of
/// segment `k` (strictly increasing), and the segment's field applies until
/// the next start time, or until `horizon` for the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSchedule {
    pub segments: Vec<(f64, ComplexPair)>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("schedule must contain at least one segment")]
    EmptySchedule,
    #[error("segment start times must be strictly increasing and finite")]
    UnorderedSegments,
    #[error("schedule does not cover [{t0}, {t1}] (first segment starts {start}, horizon {horizon})")]
    ScheduleGap { t0: f64, t1: f64, start: f64, horizon: f64 },
    #[error("integration span is empty ({t0} .. {t1})")]
    EmptySpan { t0: f64, t1: f64 },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64, last: LaserState },
}

impl InjectionSchedule {
    pub fn new(segments: Vec<(f64, ComplexPair)>, horizon: f64) -> Result<Self, SimError> {
        if segments.is_empty() {
            return Err(SimError::EmptySchedule);
        }
        for w in segments.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(SimError::UnorderedSegments);
            }
        }
        if !segments.iter().all(|(t, u)| t.is_finite() && u.is_finite()) || !horizon.is_finite() {
            return Err(SimError::UnorderedSegments);
        }
        Ok(Self { segments, horizon })
    }

    /// Schedule holding a single field over the whole horizon.
    pub fn constant(u: ComplexPair, horizon: f64) -> Self {
        Self { segments: vec![(f64::NEG_INFINITY, u)], horizon }
    }

    /// Field in effect at time `t`.
    pub fn field_at(&self, t: f64) -> ComplexPair {
        let mut u = self.segments[0].1;
        for &(start, seg_u) in &self.segments {
            if start <= t {
                u = seg_u;
            } else {
                break;
            }
        }
        u
    }

    fn check_covers(&self, t0: f64, t1: f64) -> Result<(), SimError> {
        if self.segments[0].0 > t0 || self.horizon < t1 {
            return Err(SimError::ScheduleGap {
                t0,
                t1,
                start: self.segments[0].0,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Breakpoints strictly inside `(t0, t1)`, in increasing order.
    fn breakpoints_within(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.segments.iter().map(|s| s.0).filter(|&t| t > t0 && t < t1).collect()
    }
}

/// Sampled solution: states at accepted integrator steps plus every segment
/// boundary, with step-acceptance diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<LaserState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &LaserState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// State at the last sample time `<= t` (no interpolation).
    pub fn state_at_or_before(&self, t: f64) -> Option<(&f64, &LaserState)> {
        let idx = self.times.partition_point(|&s| s <= t);
        if idx == 0 {
            None
        } else {
            Some((&self.times[idx - 1], &self.states[idx - 1]))
        }
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the 5th-order weights and the embedded 4th-order ones.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 6.0;
const PI_ALPHA: f64 = 0.7 / 5.0;
const PI_BETA: f64 = 0.4 / 5.0;

struct Stepper<'p> {
    p: &'p LaserParams,
    u: ComplexPair,
    rel: f64,
    abs: f64,
    accepted: usize,
    rejected: usize,
    /// Error of the previous accepted step, for the PI controller.
    err_old: f64,
}

impl Stepper<'_> {
    fn deriv(&self, v: &Vec6) -> Vec6 {
        model::rhs(&LaserState::from_vec6(v), &self.u, self.p)
    }

    fn error_norm(&self, err: &Vec6, y0: &Vec6, y1: &Vec6) -> f64 {
        let mut acc = 0.0;
        for i in 0..6 {
            let scale = self.abs + self.rel * y0[i].abs().max(y1[i].abs());
            let q = err[i] / scale;
            acc += q * q;
        }
        (acc / 6.0).sqrt()
    }

    /// One trial step of size `h` from `y` with `k1 = f(y)` given. Returns
    /// the 5th-order result, the scaled error norm, and the last stage
    /// (which equals `f` at the new point, for first-same-as-last reuse).
    fn try_step(&self, y: &Vec6, k1: &Vec6, h: f64) -> (Vec6, f64, Vec6) {
        let mut k = [Vec6::zeros(); 7];
        k[0] = *k1;
        for stage in 0..6 {
            let mut yi = *y;
            for j in 0..=stage {
                yi += k[j] * (h * A[stage][j]);
            }
            k[stage + 1] = self.deriv(&yi);
        }
        // The 6th stage node is the 5th-order solution itself, so k[6] is
        // already f at the accepted point.
        let mut y5 = *y;
        for (j, aj) in A[5].iter().enumerate() {
            y5 += k[j] * (h * aj);
        }
        let mut err = Vec6::zeros();
        for (j, ej) in E.iter().enumerate() {
            err += k[j] * (h * ej);
        }
        let norm = self.error_norm(&err, y, &y5);
        (y5, norm, k[6])
    }

    fn initial_step(&self, y: &Vec6, span: f64) -> f64 {
        let f0 = self.deriv(y);
        let scale = self.abs + self.rel * y.norm().max(1e-3);
        let d = f0.norm();
        let h = if d > 0.0 { 0.01 * scale / d } else { 1e-6 };
        h.min(span / 10.0).max(1e-12)
    }

    /// Integrates from `t0` to `t1`, calling `on_accept` after every accepted
    /// step; the callback may return `true` to stop early. Returns the final
    /// `(t, y)` reached.
    fn run(
        &mut self,
        t0: f64,
        y0: Vec6,
        t1: f64,
        mut on_accept: impl FnMut(f64, &Vec6) -> bool,
    ) -> Result<(f64, Vec6), SimError> {
        let span = t1 - t0;
        let mut t = t0;
        let mut y = y0;
        let mut h = self.initial_step(&y, span);
        let mut k1 = self.deriv(&y);
        let h_min = span.abs() * f64::EPSILON * 4.0 + f64::MIN_POSITIVE;
        let mut just_rejected = false;
        while t < t1 {
            let clamped = h >= t1 - t;
            let h_eff = if clamped { t1 - t } else { h };
            let (y_new, err, k_last) = self.try_step(&y, &k1, h_eff);
            if err <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                t = if clamped { t1 } else { t + h_eff };
                y = y_new;
                k1 = k_last;
                self.accepted += 1;
                let err_clamped = err.max(1e-10);
                let mut factor = SAFETY * err_clamped.powf(-PI_ALPHA) * self.err_old.powf(PI_BETA);
                if just_rejected {
                    factor = factor.min(1.0);
                }
                h = h_eff * factor.clamp(MIN_FACTOR, MAX_FACTOR);
                self.err_old = err_clamped;
                just_rejected = false;
                if on_accept(t, &y) {
                    break;
                }
            } else {
                self.rejected += 1;
                just_rejected = true;
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-PI_ALPHA)).clamp(MIN_FACTOR, 0.9)
                } else {
                    MIN_FACTOR
                };
                h = h_eff * factor;
                if h < h_min {
                    return Err(SimError::StepSizeUnderflow {
                        t,
                        last: LaserState::from_vec6(&y),
                    });
                }
            }
        }
        Ok((t, y))
    }
}

/// Integrates the system from `state0` over `[t0, t1]` under the given
/// schedule, restarting at each breakpoint. Sampled output at accepted steps
/// plus breakpoints.
pub fn integrate(
    state0: &LaserState,
    sched: &InjectionSchedule,
    t0: f64,
    t1: f64,
    tol: &ToleranceSet,
    p: &LaserParams,
) -> Result<Trajectory, SimError> {
    if !(t1 > t0) {
        return Err(SimError::EmptySpan { t0, t1 });
    }
    sched.check_covers(t0, t1)?;

    let mut cuts = vec![t0];
    cuts.extend(sched.breakpoints_within(t0, t1));
    cuts.push(t1);

    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![*state0],
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut y = state0.to_vec6();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut stepper = Stepper {
            p,
            u: sched.field_at(0.5 * (a + b)),
            rel: tol.ode_rel,
            abs: tol.ode_abs,
            accepted: 0,
            rejected: 0,
            err_old: 1e-4,
        };
        let (_, y_end) = stepper.run(a, y, b, |t, yt| {
            traj.times.push(t);
            traj.states.push(LaserState::from_vec6(yt));
            false
        })?;
        traj.accepted_steps += stepper.accepted;
        traj.rejected_steps += stepper.rejected;
        y = y_end;
        if *traj.times.last().unwrap() < b {
            traj.times.push(b);
            traj.states.push(LaserState::from_vec6(&y));
        }
    }
    Ok(traj)
}

/// Integrates under the constant field `u` until the right-hand side norm
/// drops below `eps` or `t_max` elapses. Returns the first state meeting the
/// criterion (flag true) or the final state (flag false).
pub fn settle(
    u: &ComplexPair,
    state0: &LaserState,
    t_max: f64,
    eps: f64,
    tol: &ToleranceSet,
    p: &LaserParams,
) -> Result<(LaserState, bool), SimError> {
    assert!(t_max > 0.0 && eps > 0.0);
    if model::rhs_norm(state0, u, p) < eps {
        return Ok((*state0, true));
    }
    let mut stepper = Stepper {
        p,
        u: *u,
        rel: tol.ode_rel,
        abs: tol.ode_abs,
        accepted: 0,
        rejected: 0,
        err_old: 1e-4,
    };
    let mut converged = false;
    let (_, y) = stepper.run(0.0, state0.to_vec6(), t_max, |_, yt| {
        if model::rhs_norm(&LaserState::from_vec6(yt), u, p) < eps {
            converged = true;
            return true;
        }
        false
    })?;
    Ok((LaserState::from_vec6(&y), converged))
}
