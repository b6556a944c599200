//! Strong-injection equilibrium via the contraction fixed point of the
//! reduced map, the asymptotic deviation law, and an empirical root census
//! for intermediate magnitudes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{refine_root, BranchId, ContinuationError, EquilibriumPoint};
use crate::model::{
    self, assemble_equilibrium, reduce_injection, reduced_fixed_point_map, reduced_map,
    ComplexPair,
};
use crate::params::LaserParams;
use crate::Vec2;

/// Outcome of the strong-field solve. `e_lambda` is the relative deviation
/// of the emitted from the injected field in the injection-aligned frame;
/// for plain fixed-point solves (no field phases involved) it is real and
/// equals `x / s - rhat` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongSolveReport {
    pub x: Vec2,
    pub iterations: usize,
    pub final_delta: f64,
    /// Contraction ratio observed over the last iterations (0 when the
    /// solve ended on a Newton step).
    pub contraction_ratio: f64,
    /// True when slow contraction forced a switch to Newton.
    pub used_newton: bool,
    pub e_lambda: ComplexPair,
    pub lambda: Complex64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StrongError {
    #[error("the strong-field solver requires s > 0, got {0}")]
    NotStrong(f64),
    #[error("injection direction must have strictly positive components, got ({0}, {1})")]
    BadDirection(f64, f64),
    #[error("fixed-point iteration diverged at s = {0}; the magnitude is below the contraction regime")]
    Diverged(f64),
    #[error("continuation fallback failed: {0}")]
    Refine(#[from] ContinuationError),
}

/// Solves `F(s, x) = 0` by iterating the fixed-point form `x <- G(s, x)`
/// from `x0 = s * rhat`, switching to Newton when the observed contraction
/// is slow. The direction is normalized internally and the normalization is
/// folded back into the magnitude, so only the product `s * rhat` matters.
pub fn strong_fixed_point(
    s: f64,
    rhat: Vec2,
    tol: f64,
    p: &LaserParams,
) -> Result<StrongSolveReport, StrongError> {
    if !(s > 0.0) {
        return Err(StrongError::NotStrong(s));
    }
    if !(rhat[0] > 0.0 && rhat[1] > 0.0) {
        return Err(StrongError::BadDirection(rhat[0], rhat[1]));
    }
    let scale = rhat.norm();
    let unit = rhat / scale;
    let s_eff = s * scale;

    let mut x = unit * s_eff;
    let mut delta_prev = f64::INFINITY;
    let mut ratio = 0.0;
    let mut used_newton = false;
    let mut iterations = 0;
    let mut final_delta = f64::INFINITY;
    for _ in 0..200 {
        iterations += 1;
        let x_next = reduced_fixed_point_map(s_eff, x, unit, p);
        let delta = (x_next - x).norm();
        x = x_next;
        final_delta = delta;
        if !x.iter().all(|v| v.is_finite()) || x.norm() > 10.0 * s_eff + 10.0 {
            return Err(StrongError::Diverged(s));
        }
        if delta < tol {
            break;
        }
        if delta_prev.is_finite() {
            ratio = delta / delta_prev;
            if ratio > 0.9 && iterations >= 5 {
                // slow contraction: fall back to Newton on the reduced map
                used_newton = true;
                x = refine_root(s_eff, x, unit, tol, p)?;
                final_delta = 0.0;
                break;
            }
        }
        delta_prev = delta;
    }
    if reduced_map(s_eff, x, unit, p).norm() >= tol.max(1e-12 * (1.0 + s_eff)) {
        // certify the residual, with one Newton polish attempt first
        match refine_root(s_eff, x, unit, tol.max(1e-12 * (1.0 + s_eff)), p) {
            Ok(polished) => {
                used_newton = true;
                x = polished;
            }
            Err(_) => return Err(StrongError::Diverged(s)),
        }
    }
    let e = x / s_eff - unit;
    Ok(StrongSolveReport {
        x,
        iterations,
        final_delta,
        contraction_ratio: ratio,
        used_newton,
        e_lambda: ComplexPair::from_re(e[0], e[1]),
        lambda: Complex64::new(s, 0.0),
    })
}

/// The unique equilibrium under strong injection `lambda * uhat`, assembled
/// from the fixed point and residual-certified. The report's `e_lambda` is
/// the deviation vector of the field from the scaled injection in the
/// injection-aligned frame, so `E = (lambda e^{i theta} / |1 + i alpha|)
/// (uhat + e_lambda)`.
pub fn strong_equilibrium(
    lambda: Complex64,
    uhat: &ComplexPair,
    p: &LaserParams,
) -> Result<(EquilibriumPoint, StrongSolveReport), StrongError> {
    let uhat_norm = uhat.norm();
    if uhat.minus.norm() == 0.0 || uhat.plus.norm() == 0.0 || lambda.norm() == 0.0 {
        return Err(StrongError::BadDirection(uhat.minus.norm(), uhat.plus.norm()));
    }
    let s = lambda.norm() * uhat_norm / p.henry_mod();
    let unit = Vec2::new(uhat.minus.norm(), uhat.plus.norm()) / uhat_norm;
    let mut report = strong_fixed_point(s, unit, 1e-13 * (1.0 + s), p)?;

    // the reduction phases already carry the gain phase; only the
    // injection's own phase is added
    let (_, mut phases) = reduce_injection(uhat, p);
    let rot = (lambda / lambda.norm()).arg();
    phases.phi_minus += rot;
    phases.phi_plus += rot;
    let state = assemble_equilibrium(report.x, &phases, p);
    let u = ComplexPair::new(lambda * uhat.minus, lambda * uhat.plus);
    let residual = model::rhs_norm(&state, &u, p);

    // deviation in the injection-aligned frame: componentwise
    // |1 + i alpha| x_j / |lambda| - |uhat_j|, carried on uhat's phases
    let dev = |xj: f64, uj: Complex64| -> Complex64 {
        (uj / uj.norm()) * (p.henry_mod() * xj / lambda.norm() - uj.norm())
    };
    report.e_lambda =
        ComplexPair::new(dev(report.x[0], uhat.minus), dev(report.x[1], uhat.plus));
    report.lambda = lambda;

    let point = EquilibriumPoint {
        e: state.e,
        n_total: state.n_total,
        n_spin: state.n_spin,
        branch: BranchId::PlusX,
        lambda,
        residual,
    };
    Ok((point, report))
}

/// Multi-start Newton census of the reduced-map roots at magnitude `s`: a
/// `grid_n` by `grid_n` grid of starts spanning a box that covers both the
/// strong-field ring and the weak-field seeds, deduplicated by distance.
/// Returns the number of distinct certified roots.
pub fn root_census(s: f64, rhat: Vec2, grid_n: usize, p: &LaserParams) -> usize {
    let scale = rhat.norm();
    let (s_eff, unit) = if scale > 0.0 { (s * scale, rhat / scale) } else { (0.0, rhat) };
    let span = 3.0 * (s_eff.abs()).max(p.mu.sqrt());
    let tol = 1e-10 * (1.0 + s_eff);
    let mut roots: Vec<Vec2> = Vec::new();
    for i in 0..grid_n {
        for j in 0..grid_n {
            let frac = |k: usize| -1.0 + 2.0 * k as f64 / (grid_n - 1).max(1) as f64;
            let x0 = Vec2::new(span * frac(i), span * frac(j));
            if let Ok(root) = refine_root(s_eff, x0, unit, tol, p) {
                let sep = 1e-6 * (1.0 + s_eff);
                if !roots.iter().any(|r| (r - root).norm() < sep) {
                    roots.push(root);
                }
            }
        }
    }
    roots.len()
}
