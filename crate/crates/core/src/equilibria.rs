//! Weak-field equilibrium branches: the nine zero-injection seeds, predictor/
//! corrector continuation in the injection magnitude with fold detection,
//! Newton refinement, the scalar oracle for the symmetric case, first-order
//! asymptotics, and the weak-field radius below which all nine branches
//! coexist.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    self, assemble_equilibrium, reduce_injection, reduced_jacobian, reduced_map, ComplexPair,
    LaserState,
};
use crate::params::LaserParams;
use crate::{Mat2, Vec2};

/// Labels of the nine zero-injection equilibrium families, named by their
/// zero-field polarization limit: off state, left/right circular, and the
/// two orthogonal linear states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchId {
    O,
    PlusL,
    MinusL,
    PlusR,
    MinusR,
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl BranchId {
    pub const ALL: [BranchId; 9] = [
        BranchId::O,
        BranchId::PlusL,
        BranchId::MinusL,
        BranchId::PlusR,
        BranchId::MinusR,
        BranchId::PlusX,
        BranchId::MinusX,
        BranchId::PlusY,
        BranchId::MinusY,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            BranchId::O => "O",
            BranchId::PlusL => "+L",
            BranchId::MinusL => "-L",
            BranchId::PlusR => "+R",
            BranchId::MinusR => "-R",
            BranchId::PlusX => "+X",
            BranchId::MinusX => "-X",
            BranchId::PlusY => "+Y",
            BranchId::MinusY => "-Y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|b| b.label() == s)
    }

    /// Branches lying on the diagonal `x1 = x2` when the two injection
    /// moduli are equal.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, BranchId::O | BranchId::PlusX | BranchId::MinusX)
    }
}

impl std::fmt::Display for BranchId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Continuation mode of a path segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContinuationMode {
    Natural,
    PseudoArclength,
}

/// One accepted continuation sample; `post_fold` marks samples past a
/// turning point reached in pseudo-arclength mode (the original branch label
/// is kept).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub s: f64,
    pub x: Vec2,
    pub det: f64,
    pub mode: ContinuationMode,
    pub post_fold: bool,
}

/// Fold point: the injection magnitude and location where the reduced-map
/// Jacobian became singular along the branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub s: f64,
    pub x: Vec2,
}

/// Traced branch with certified samples and optional fold metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPath {
    pub branch: BranchId,
    pub samples: Vec<BranchSample>,
    pub fold: Option<Fold>,
    /// True when the path reached the requested magnitude without folding.
    pub reached_end: bool,
}

impl BranchPath {
    pub fn last(&self) -> &BranchSample {
        self.samples.last().expect("a path holds at least its seed")
    }
}

/// Equilibrium of the full system with its branch identity and certification
/// residual (norm of the system right-hand side at the point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub e: ComplexPair,
    pub n_total: f64,
    pub n_spin: f64,
    pub branch: BranchId,
    pub lambda: Complex64,
    pub residual: f64,
}

impl EquilibriumPoint {
    pub fn state(&self) -> LaserState {
        LaserState::new(self.e, self.n_total, self.n_spin)
    }
}

/// Zeroth- and first-order coefficients of a branch's field expansion in the
/// injection magnitude (before the common unimodular phase factor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCoeffs {
    pub zeroth: ComplexPair,
    pub first: ComplexPair,
}

/// Step-size policy of the continuation driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub initial_step: f64,
    pub max_step: f64,
    /// Step below which the driver declares a fold (or gives up).
    pub min_step: f64,
    /// Residual each accepted sample must satisfy.
    pub residual_tol: f64,
    pub max_steps: usize,
    /// Continue past folds with the pseudo-arclength predictor/corrector.
    pub pseudo_arclength: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            max_step: 1e-2,
            min_step: 1e-12,
            residual_tol: 1e-10,
            max_steps: 200_000,
            pseudo_arclength: false,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ContinuationError {
    #[error("injection direction must be nonzero")]
    ZeroDirection,
    #[error("target magnitude must be positive, got {0}")]
    BadRange(f64),
    #[error("the reduced Jacobian is singular at the seed of branch {0}")]
    FoldAtStart(BranchId),
    #[error("corrector failed to converge on branch {branch} near s = {s}")]
    CorrectorDiverged { branch: BranchId, s: f64 },
    #[error("Newton iteration hit a singular Jacobian")]
    SingularJacobian,
    #[error("Newton iteration did not converge within {0} steps")]
    MaxIterations(usize),
    #[error("no root bracketed for the scalar branch equation at s = {0}")]
    NoScalarRoot(f64),
    #[error("branch {0} is not covered by the scalar symmetry reduction")]
    NotDiagonal(BranchId),
    #[error("continuation produced no usable fold data")]
    NoFolds,
}

/// Zero-injection seed of a branch, in closed form.
pub fn branch_seed(branch: BranchId, p: &LaserParams) -> Vec2 {
    let circ = (p.delta * (p.mu - 1.0) / (1.0 + p.delta)).sqrt();
    let lin = ((p.mu - 1.0) / 2.0).sqrt();
    match branch {
        BranchId::O => Vec2::zeros(),
        BranchId::PlusL => Vec2::new(circ, 0.0),
        BranchId::MinusL => Vec2::new(-circ, 0.0),
        BranchId::PlusR => Vec2::new(0.0, circ),
        BranchId::MinusR => Vec2::new(0.0, -circ),
        BranchId::PlusX => Vec2::new(lin, lin),
        BranchId::MinusX => Vec2::new(-lin, -lin),
        BranchId::PlusY => Vec2::new(lin, -lin),
        BranchId::MinusY => Vec2::new(-lin, lin),
    }
}

/// Newton refinement of a reduced-map root near `x_guess`. Certifies the
/// returned residual below `tol`; never returns an uncertified point.
pub fn refine_root(
    s: f64,
    x_guess: Vec2,
    rhat: Vec2,
    tol: f64,
    p: &LaserParams,
) -> Result<Vec2, ContinuationError> {
    let mut x = x_guess;
    let max_iter = 50;
    for _ in 0..max_iter {
        let f = reduced_map(s, x, rhat, p);
        if f.norm() < tol {
            return Ok(x);
        }
        let j = reduced_jacobian(x, p);
        let det = j.determinant();
        if det.abs() < 1e-14 * (1.0 + j.norm_squared()) {
            return Err(ContinuationError::SingularJacobian);
        }
        let dx = j.try_inverse().ok_or(ContinuationError::SingularJacobian)? * f;
        x -= dx;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(ContinuationError::SingularJacobian);
        }
    }
    if reduced_map(s, x, rhat, p).norm() < tol {
        Ok(x)
    } else {
        Err(ContinuationError::MaxIterations(max_iter))
    }
}

/// Scale-aware singularity threshold for fold handling.
fn fold_threshold(j: &Mat2) -> f64 {
    1e-8 * (1.0 + j.norm_squared())
}

/// Newton corrector for the continuation driver; on success also returns the
/// determinant of the reduced Jacobian at the corrected point.
fn corrector(
    s: f64,
    x0: Vec2,
    rhat: Vec2,
    tol: f64,
    p: &LaserParams,
) -> Option<(Vec2, f64, usize)> {
    let mut x = x0;
    for it in 0..12 {
        let f = reduced_map(s, x, rhat, p);
        if f.norm() < tol {
            return Some((x, reduced_jacobian(x, p).determinant(), it));
        }
        let j = reduced_jacobian(x, p);
        let inv = j.try_inverse()?;
        let dx = inv * f;
        if !dx.iter().all(|v| v.is_finite()) || dx.norm() > 1e3 {
            return None;
        }
        x -= dx;
    }
    None
}

/// Polishes a fold location by Newton on the bordered system
/// `(F(s, x) = 0, det DF(x) = 0)`; the determinant gradient is taken by
/// central differences. Falls back to `None` when the bordered Jacobian is
/// itself singular (as happens at symmetry-breaking bifurcation points).
fn polish_fold(s0: f64, x0: Vec2, rhat: Vec2, p: &LaserParams) -> Option<Fold> {
    let det_at = |x: Vec2| reduced_jacobian(x, p).determinant();
    let mut v = Vector3::new(x0[0], x0[1], s0);
    for _ in 0..30 {
        let x = Vec2::new(v[0], v[1]);
        let s = v[2];
        let f = reduced_map(s, x, rhat, p);
        let d = det_at(x);
        let res = Vector3::new(f[0], f[1], d);
        if res.norm() < 1e-12 * (1.0 + s.abs()) {
            // reject polishing that wandered far from the bracketing sample
            if (s - s0).abs() < 0.2 * (1.0 + s0.abs()) {
                return Some(Fold { s, x });
            }
            return None;
        }
        let j = reduced_jacobian(x, p);
        let h = 1e-7 * (1.0 + x.norm());
        let gx = (det_at(x + Vec2::new(h, 0.0)) - det_at(x - Vec2::new(h, 0.0))) / (2.0 * h);
        let gy = (det_at(x + Vec2::new(0.0, h)) - det_at(x - Vec2::new(0.0, h))) / (2.0 * h);
        #[rustfmt::skip]
        let bordered = Matrix3::new(
            j[(0, 0)], j[(0, 1)], -rhat[0],
            j[(1, 0)], j[(1, 1)], -rhat[1],
            gx,        gy,        0.0,
        );
        let dv = bordered.lu().solve(&res)?;
        if !dv.iter().all(|c| c.is_finite()) || dv.norm() > 1.0 {
            return None;
        }
        v -= dv;
    }
    None
}

/// Unit tangent of the solution curve in `(x, s)` space: the null direction
/// of the row pair `[DF | -rhat]`, computed as a cross product.
fn curve_tangent(j: &Mat2, rhat: Vec2) -> Vector3<f64> {
    let r1 = Vector3::new(j[(0, 0)], j[(0, 1)], -rhat[0]);
    let r2 = Vector3::new(j[(1, 0)], j[(1, 1)], -rhat[1]);
    let t = r1.cross(&r2);
    let n = t.norm();
    if n > 0.0 {
        t / n
    } else {
        Vector3::new(0.0, 0.0, 1.0)
    }
}

/// Traces the branch from its seed toward `s_max`.
///
/// The predictor is the natural-parameter direction of the branch ODE,
/// `dx/ds = [DF(x)]^{-1} rhat`, followed by a Newton corrector on
/// `F(s, .) = 0`. Steps are rejected when the corrector fails, when the
/// Jacobian determinant changes sign across the step, or when the corrected
/// point strays too far from the prediction (which would indicate a jump
/// onto a different branch). When the step collapses at a singularity the
/// fold is recorded and polished; with `pseudo_arclength` enabled the driver
/// then switches to an arclength predictor with a bordered corrector and
/// keeps tracing past the turning point.
pub fn continue_branch(
    branch: BranchId,
    rhat: Vec2,
    s_max: f64,
    ctrl: &StepControl,
    p: &LaserParams,
) -> Result<BranchPath, ContinuationError> {
    if rhat.norm() == 0.0 {
        return Err(ContinuationError::ZeroDirection);
    }
    if !(s_max > 0.0) {
        return Err(ContinuationError::BadRange(s_max));
    }

    let seed = branch_seed(branch, p);
    let j_seed = reduced_jacobian(seed, p);
    let det_seed = j_seed.determinant();
    if det_seed.abs() < fold_threshold(&j_seed) {
        return Err(ContinuationError::FoldAtStart(branch));
    }

    let mut path = BranchPath {
        branch,
        samples: vec![BranchSample {
            s: 0.0,
            x: seed,
            det: det_seed,
            mode: ContinuationMode::Natural,
            post_fold: false,
        }],
        fold: None,
        reached_end: false,
    };

    let mut s = 0.0;
    let mut x = seed;
    let mut h = ctrl.initial_step;
    let mut steps = 0;

    while s < s_max && steps < ctrl.max_steps {
        steps += 1;
        h = h.min(s_max - s).max(ctrl.min_step * 0.5);
        let j = reduced_jacobian(x, p);
        let det = j.determinant();
        let mut fold_here = det.abs() < fold_threshold(&j);
        if !fold_here {
            match j.try_inverse() {
                Some(inv) => {
                    let tangent = inv * rhat;
                    let s_new = s + h;
                    let x_pred = x + tangent * h;
                    if let Some((x_corr, det_new, iters)) =
                        corrector(s_new, x_pred, rhat, ctrl.residual_tol, p)
                    {
                        let same_sheet = det_new.signum() == det.signum();
                        let near_prediction = (x_corr - x_pred).norm()
                            <= 0.5 * (x_corr - x).norm() + 1e-13
                            && (x_corr - x).norm() <= 4.0 * h * tangent.norm() + 1e-13;
                        if same_sheet && near_prediction {
                            s = s_new;
                            x = x_corr;
                            path.samples.push(BranchSample {
                                s,
                                x,
                                det: det_new,
                                mode: ContinuationMode::Natural,
                                post_fold: false,
                            });
                            if iters <= 2 {
                                h = (2.0 * h).min(ctrl.max_step);
                            }
                            continue;
                        }
                    }
                    // rejected: shrink toward the obstruction
                    h *= 0.5;
                    if h > ctrl.min_step {
                        continue;
                    }
                    // the step collapsed; only a shrinking determinant marks
                    // this as a fold, anything else is a corrector failure
                    if det.abs() < 0.05 * (1.0 + j.norm_squared()) {
                        fold_here = true;
                    } else {
                        return Err(ContinuationError::CorrectorDiverged { branch, s });
                    }
                }
                None => fold_here = true,
            }
        }
        if fold_here {
            let fold = polish_fold(s, x, rhat, p).unwrap_or(Fold { s, x });
            path.fold = Some(fold);
            if ctrl.pseudo_arclength {
                arclength_stage(&mut path, s, x, rhat, s_max, ctrl, p, steps);
            }
            return Ok(path);
        }
    }
    path.reached_end = s >= s_max;
    Ok(path)
}

/// Pseudo-arclength continuation from `(x0, s0)` onward; appends post-fold
/// samples until `s` leaves `[0, s_max]` or the step budget runs out. Best
/// effort: a persistent corrector failure ends the stage, leaving the
/// natural-mode result intact.
#[allow(clippy::too_many_arguments)]
fn arclength_stage(
    path: &mut BranchPath,
    s0: f64,
    x0: Vec2,
    rhat: Vec2,
    s_max: f64,
    ctrl: &StepControl,
    p: &LaserParams,
    steps_used: usize,
) {
    let mut v = Vector3::new(x0[0], x0[1], s0);
    let mut tangent = curve_tangent(&reduced_jacobian(x0, p), rhat);
    if tangent[2] < 0.0 {
        tangent = -tangent;
    }
    let mut h = ctrl.initial_step;
    let mut passed_fold = false;
    let mut steps = steps_used;
    while steps < ctrl.max_steps {
        steps += 1;
        let pred = v + tangent * h;
        let mut w = pred;
        let mut ok = false;
        for _ in 0..12 {
            let xw = Vec2::new(w[0], w[1]);
            let f = reduced_map(w[2], xw, rhat, p);
            let c = tangent.dot(&(w - pred));
            let res = Vector3::new(f[0], f[1], c);
            if res.norm() < ctrl.residual_tol {
                ok = true;
                break;
            }
            let j = reduced_jacobian(xw, p);
            #[rustfmt::skip]
            let bordered = Matrix3::new(
                j[(0, 0)],  j[(0, 1)],  -rhat[0],
                j[(1, 0)],  j[(1, 1)],  -rhat[1],
                tangent[0], tangent[1], tangent[2],
            );
            match bordered.lu().solve(&res) {
                Some(dw) if dw.iter().all(|c| c.is_finite()) => w -= dw,
                _ => break,
            }
        }
        if !ok {
            h *= 0.5;
            if h < ctrl.min_step {
                return;
            }
            continue;
        }
        let x_new = Vec2::new(w[0], w[1]);
        let j_new = reduced_jacobian(x_new, p);
        let mut t_new = curve_tangent(&j_new, rhat);
        if t_new.dot(&tangent) < 0.0 {
            t_new = -t_new;
        }
        if t_new[2] < 0.0 {
            passed_fold = true;
        }
        v = w;
        tangent = t_new;
        h = (h * 1.5).min(ctrl.max_step);
        path.samples.push(BranchSample {
            s: v[2],
            x: x_new,
            det: j_new.determinant(),
            mode: ContinuationMode::PseudoArclength,
            post_fold: passed_fold,
        });
        if v[2] > s_max || v[2] < 0.0 {
            path.reached_end = v[2] > s_max;
            return;
        }
    }
}

/// Diagonal restriction of the reduced map for equal moduli, as the scalar
/// function `g` in `g(eta) = s * rhat_1`.
fn diagonal_gain(eta: f64, p: &LaserParams) -> f64 {
    let sq = eta * eta;
    eta * (1.0
        - p.mu * (p.delta + 2.0 * sq) / (p.delta + 2.0 * (1.0 + p.delta) * sq + 4.0 * sq * sq))
}

/// Independent scalar oracle for the diagonal branches when the two
/// injection moduli are equal: solves the one-dimensional reduction by a
/// safeguarded Newton continuation from the branch seed.
pub fn scalar_branch(
    branch: BranchId,
    rhat1: f64,
    s: f64,
    p: &LaserParams,
) -> Result<f64, ContinuationError> {
    if !branch.is_diagonal() {
        return Err(ContinuationError::NotDiagonal(branch));
    }
    let mut eta = branch_seed(branch, p)[0];
    if s == 0.0 {
        return Ok(eta);
    }
    let dg = |e: f64| {
        let h = 1e-7 * (1.0 + e.abs());
        (diagonal_gain(e + h, p) - diagonal_gain(e - h, p)) / (2.0 * h)
    };
    // walk s in small increments so the root stays on the seed's sheet
    let n_sub = ((s.abs() / 1e-3).ceil() as usize).clamp(1, 100_000);
    for k in 1..=n_sub {
        let sk = s * k as f64 / n_sub as f64;
        let target = sk * rhat1;
        let mut converged = false;
        for _ in 0..60 {
            let r = diagonal_gain(eta, p) - target;
            if r.abs() < 1e-13 * (1.0 + target.abs()) {
                converged = true;
                break;
            }
            let d = dg(eta);
            if d.abs() < 1e-12 {
                return Err(ContinuationError::NoScalarRoot(sk));
            }
            // safeguard: cap the step to avoid hopping between roots
            let cap = 0.1 * (1.0 + eta.abs());
            eta -= (r / d).clamp(-cap, cap);
        }
        if !converged {
            return Err(ContinuationError::NoScalarRoot(sk));
        }
    }
    Ok(eta)
}

/// First-order expansion coefficients of a branch field in the injection
/// magnitude (common phase factor excluded). Requires both components of
/// `uhat` nonzero.
pub fn asymptotic_coeffs(
    branch: BranchId,
    uhat: &ComplexPair,
    p: &LaserParams,
) -> AsymptoticCoeffs {
    let um = uhat.minus / uhat.minus.norm();
    let up = uhat.plus / uhat.plus.norm();
    let circ = (p.delta * (p.mu - 1.0) / (1.0 + p.delta)).sqrt();
    let lin = ((p.mu - 1.0) / 2.0).sqrt();
    let henry = p.henry_mod();
    let gap = p.mu - 1.0;

    let zero = Complex64::new(0.0, 0.0);
    let (zeroth, first) = match branch {
        BranchId::O => (
            ComplexPair::new(zero, zero),
            ComplexPair::new(-uhat.minus / (henry * gap), -uhat.plus / (henry * gap)),
        ),
        BranchId::PlusL | BranchId::MinusL => {
            let sign = if branch == BranchId::PlusL { 1.0 } else { -1.0 };
            let c = 1.0 / (2.0 * henry * gap);
            (
                ComplexPair::new(sign * circ * um, zero),
                ComplexPair::new(c * p.mu * uhat.minus, -c * (1.0 + p.delta) * uhat.plus),
            )
        }
        BranchId::PlusR | BranchId::MinusR => {
            let sign = if branch == BranchId::PlusR { 1.0 } else { -1.0 };
            let c = 1.0 / (2.0 * henry * gap);
            (
                ComplexPair::new(zero, sign * circ * up),
                ComplexPair::new(-c * (1.0 + p.delta) * uhat.minus, c * p.mu * uhat.plus),
            )
        }
        BranchId::PlusX | BranchId::MinusX | BranchId::PlusY | BranchId::MinusY => {
            let (sign, flip) = match branch {
                BranchId::PlusX => (1.0, 1.0),
                BranchId::MinusX => (-1.0, 1.0),
                BranchId::PlusY => (1.0, -1.0),
                _ => (-1.0, -1.0),
            };
            let mod_ratio_pm = uhat.plus.norm() / uhat.minus.norm();
            let c = 1.0 / (4.0 * henry * gap);
            // the off-diagonal coupling enters with opposite sign on the
            // antisymmetric pair
            let cross = (1.0 - p.delta) * flip;
            (
                ComplexPair::new(sign * lin * um, sign * flip * lin * up),
                ComplexPair::new(
                    c * (2.0 * p.mu + p.delta - 1.0 + cross * mod_ratio_pm) * uhat.minus,
                    c * (cross / mod_ratio_pm + 2.0 * p.mu + p.delta - 1.0) * uhat.plus,
                ),
            )
        }
    };
    AsymptoticCoeffs { zeroth, first }
}

/// Common unimodular phase factor `e^{i theta} lambda / |lambda|` of every
/// branch field.
fn phase_factor(lambda: Complex64, p: &LaserParams) -> Complex64 {
    Complex64::from_polar(1.0, p.phase_shift()) * lambda / lambda.norm()
}

/// First-order approximation of a branch field at injection `lambda * uhat`.
pub fn asymptotic_field(
    branch: BranchId,
    lambda: Complex64,
    uhat: &ComplexPair,
    p: &LaserParams,
) -> ComplexPair {
    let coeffs = asymptotic_coeffs(branch, uhat, p);
    let s = lambda.norm();
    let pf = phase_factor(lambda, p);
    ComplexPair::new(
        pf * (coeffs.zeroth.minus + s * coeffs.first.minus),
        pf * (coeffs.zeroth.plus + s * coeffs.first.plus),
    )
}

/// All equilibria of the system under injection `lambda * uhat`: each branch
/// surviving at `s = |lambda|` is evaluated there, assembled into the full
/// state, polished, and residual-certified. Branches past their fold are
/// absent. A zero component of `uhat` leaves the corresponding field phase
/// free; the returned point uses the zero-phase representative (see the
/// arbitrary-phase flags of [`reduce_injection`]).
pub fn equilibria_at(
    lambda: Complex64,
    uhat: &ComplexPair,
    p: &LaserParams,
) -> Result<Vec<EquilibriumPoint>, ContinuationError> {
    assert!(lambda.norm() > 0.0, "the zero-injection equilibria are the branch seeds");
    let u = ComplexPair::new(lambda * uhat.minus, lambda * uhat.plus);
    let (rhat, mut phases) = reduce_injection(uhat, p);
    if rhat.norm() == 0.0 {
        return Err(ContinuationError::ZeroDirection);
    }
    // the reduction phases already carry the gain phase; add the
    // injection's own phase to land on the equilibrium of lambda * uhat
    let rot = (lambda / lambda.norm()).arg();
    phases.phi_minus += rot;
    phases.phi_plus += rot;

    let s = lambda.norm();
    let ctrl = StepControl::default();
    let mut points = Vec::new();
    for branch in BranchId::ALL {
        let path = continue_branch(branch, rhat, s, &ctrl, p)?;
        if !path.reached_end {
            continue;
        }
        let sample = path.last();
        debug_assert!((sample.s - s).abs() < 1e-12);
        // polish hard so the full-system residual sits well below the field
        // decay scale
        let x = refine_root(s, sample.x, rhat, 1e-13 * (1.0 + s), p)?;
        let state = assemble_equilibrium(x, &phases, p);
        let residual = model::rhs_norm(&state, &u, p);
        points.push(EquilibriumPoint {
            e: state.e,
            n_total: state.n_total,
            n_spin: state.n_spin,
            branch,
            lambda,
            residual,
        });
    }
    Ok(points)
}

/// Fold census over all nine branches: traces each one toward `s_max` and
/// records where it folds (or that it survived).
pub fn fold_census(
    rhat: Vec2,
    s_max: f64,
    ctrl: &StepControl,
    p: &LaserParams,
) -> Result<Vec<BranchPath>, ContinuationError> {
    BranchId::ALL.iter().map(|&b| continue_branch(b, rhat, s_max, ctrl, p)).collect()
}

/// Weak-field radius: the smallest fold magnitude over all branches, i.e.
/// the injection magnitude below which the full set of nine equilibria
/// exists. Requires both components of `uhat` nonzero.
pub fn weak_field_radius(uhat: &ComplexPair, p: &LaserParams) -> Result<f64, ContinuationError> {
    let (rhat, _) = reduce_injection(uhat, p);
    if rhat[0] == 0.0 || rhat[1] == 0.0 {
        return Err(ContinuationError::ZeroDirection);
    }
    // folds occur where |X(y(x)) x| is of order mu^(3/2); cover that range
    // generously in s
    let s_cap = 20.0 * (1.0 + p.mu).powf(1.5) / rhat.norm();
    let ctrl = StepControl::default();
    let paths = fold_census(rhat, s_cap, &ctrl, p)?;
    paths
        .iter()
        .filter_map(|path| path.fold.as_ref().map(|f| f.s))
        .min_by(|a, b| a.total_cmp(b))
        .ok_or(ContinuationError::NoFolds)
}
