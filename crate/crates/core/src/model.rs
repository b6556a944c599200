//! Closed-form quantities of the model: the ODE right-hand side and its
//! Jacobian, the gain and carrier matrices, the reduced equilibrium map with
//! its Jacobian and fixed-point form, and the modulus/phase reduction between
//! complex-field equilibria and real 2-vector roots.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::LaserParams;
use crate::{CMat2, CVec2, Mat2, Mat6, Vec2, Vec6};

/// Circularly polarized field pair; `minus` is the left-, `plus` the
/// right-circular component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPair {
    pub minus: Complex64,
    pub plus: Complex64,
}

impl ComplexPair {
    pub const ZERO: Self =
        Self { minus: Complex64::new(0.0, 0.0), plus: Complex64::new(0.0, 0.0) };

    pub fn new(minus: Complex64, plus: Complex64) -> Self {
        Self { minus, plus }
    }

    pub fn from_re(minus: f64, plus: f64) -> Self {
        Self { minus: Complex64::new(minus, 0.0), plus: Complex64::new(plus, 0.0) }
    }

    pub fn norm_sq(&self) -> f64 {
        self.minus.norm_sqr() + self.plus.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Componentwise moduli `(|E_-|, |E_+|)`.
    pub fn moduli(&self) -> Vec2 {
        Vec2::new(self.minus.norm(), self.plus.norm())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { minus: c * self.minus, plus: c * self.plus }
    }

    pub fn is_finite(&self) -> bool {
        self.minus.is_finite() && self.plus.is_finite()
    }

    pub fn to_cvec(&self) -> CVec2 {
        CVec2::new(self.minus, self.plus)
    }
}

impl std::ops::Add for ComplexPair {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { minus: self.minus + rhs.minus, plus: self.plus + rhs.plus }
    }
}

impl std::ops::Sub for ComplexPair {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { minus: self.minus - rhs.minus, plus: self.plus - rhs.plus }
    }
}

/// Full state of the laser: complex field pair plus the two real carrier
/// variables (total carrier excess `n_total` and spin imbalance `n_spin`).
///
/// The real 6-vector ordering is fixed once here and used everywhere:
/// `(Re E_-, Re E_+, Im E_-, Im E_+, N, n)`. It matches the block layout of
/// the linearization returned by [`jacobian`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserState {
    pub e: ComplexPair,
    pub n_total: f64,
    pub n_spin: f64,
}

impl LaserState {
    pub fn new(e: ComplexPair, n_total: f64, n_spin: f64) -> Self {
        Self { e, n_total, n_spin }
    }

    /// Free-running off state `(E, N, n) = (0, mu, 0)`, an equilibrium of the
    /// uninjected system.
    pub fn off_state(p: &LaserParams) -> Self {
        Self { e: ComplexPair::ZERO, n_total: p.mu, n_spin: 0.0 }
    }

    pub fn zero() -> Self {
        Self { e: ComplexPair::ZERO, n_total: 0.0, n_spin: 0.0 }
    }

    pub fn to_vec6(&self) -> Vec6 {
        Vec6::new(
            self.e.minus.re,
            self.e.plus.re,
            self.e.minus.im,
            self.e.plus.im,
            self.n_total,
            self.n_spin,
        )
    }

    pub fn from_vec6(v: &Vec6) -> Self {
        Self {
            e: ComplexPair::new(Complex64::new(v[0], v[2]), Complex64::new(v[1], v[3])),
            n_total: v[4],
            n_spin: v[5],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.n_total.is_finite() && self.n_spin.is_finite()
    }

    /// Euclidean norm of the real 6-vector.
    pub fn norm(&self) -> f64 {
        (self.e.norm_sq() + self.n_total * self.n_total + self.n_spin * self.n_spin).sqrt()
    }
}

/// Phases of the modulus/phase reduction. `theta = -arg(1 + i alpha)` is the
/// gain-induced phase; `minus_arbitrary`/`plus_arbitrary` flag components
/// whose phase was defaulted to zero because the corresponding injection
/// component vanishes (there the equilibrium phase is a free parameter).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseData {
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub theta: f64,
    pub minus_arbitrary: bool,
    pub plus_arbitrary: bool,
}

/// Real 2-vector point of the reduced root problem, with the injection
/// magnitude `s` and direction `rhat` it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub x: Vec2,
    pub s: f64,
    pub rhat: Vec2,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("the radial/tangential split is undefined at x = 0")]
    ZeroVector,
}

/// Gain matrix `diag(1 - (z1 - z2), 1 - (z1 + z2))` for complex arguments.
pub fn gain_matrix(z: &CVec2) -> CMat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    CMat2::new(one - (z[0] - z[1]), zero, zero, one - (z[0] + z[1]))
}

/// Gain matrix for a real carrier pair `(N, n)`.
pub fn gain_matrix_real(v: Vec2) -> Mat2 {
    Mat2::new(1.0 - (v[0] - v[1]), 0.0, 0.0, 1.0 - (v[0] + v[1]))
}

fn carrier_matrix_from_sq(m1: f64, m2: f64, p: &LaserParams) -> Mat2 {
    let total = m1 + m2;
    let imbalance = m2 - m1;
    Mat2::new(1.0 + total, imbalance, imbalance, p.delta + total)
}

/// Carrier relaxation matrix; symmetric, and positive definite for every
/// argument since its determinant is bounded below by `delta`.
pub fn carrier_matrix(z: &CVec2, p: &LaserParams) -> Mat2 {
    carrier_matrix_from_sq(z[0].norm_sqr(), z[1].norm_sqr(), p)
}

pub fn carrier_matrix_real(x: Vec2, p: &LaserParams) -> Mat2 {
    carrier_matrix_from_sq(x[0] * x[0], x[1] * x[1], p)
}

/// Closed form `delta + (1 + delta)|x|^2 + 4 x1^2 x2^2` of the carrier-matrix
/// determinant; strictly positive for all real `x`.
pub fn carrier_matrix_det(x: Vec2, p: &LaserParams) -> f64 {
    let d = p.delta + (1.0 + p.delta) * x.norm_squared() + 4.0 * x[0] * x[0] * x[1] * x[1];
    debug_assert!(d >= p.delta);
    d
}

/// Steady carrier pair `(N, n)` sustained by field moduli `x`: the unique
/// solution of `Y(x) (N, n) = (mu, 0)`.
pub fn steady_carriers(x: Vec2, p: &LaserParams) -> Vec2 {
    let det = carrier_matrix_det(x, p);
    let scale = p.mu / det;
    Vec2::new(
        scale * (p.delta + x.norm_squared()),
        scale * (x[0] * x[0] - x[1] * x[1]),
    )
}

/// Right-hand side of the six-dimensional real system, in the state ordering
/// documented on [`LaserState`].
pub fn rhs(state: &LaserState, u: &ComplexPair, p: &LaserParams) -> Vec6 {
    let gain = Complex64::new(1.0, p.alpha);
    let x1 = 1.0 - (state.n_total - state.n_spin);
    let x2 = 1.0 - (state.n_total + state.n_spin);
    let de_minus = -p.kappa * (gain * x1 * state.e.minus - u.minus);
    let de_plus = -p.kappa * (gain * x2 * state.e.plus - u.plus);
    let i_minus = state.e.minus.norm_sqr();
    let i_plus = state.e.plus.norm_sqr();
    let dn_total = -p.gamma
        * ((1.0 + i_minus + i_plus) * state.n_total + (i_plus - i_minus) * state.n_spin - p.mu);
    let dn_spin = -p.gamma
        * ((i_plus - i_minus) * state.n_total + (p.delta + i_minus + i_plus) * state.n_spin);
    Vec6::new(de_minus.re, de_plus.re, de_minus.im, de_plus.im, dn_total, dn_spin)
}

/// Norm of the right-hand side; zero exactly at equilibria.
pub fn rhs_norm(state: &LaserState, u: &ComplexPair, p: &LaserParams) -> f64 {
    rhs(state, u, p).norm()
}

/// Jacobian of the real six-dimensional system at `state`. The injected
/// field enters the system additively, so the linearization is independent
/// of it.
pub fn jacobian(state: &LaserState, p: &LaserParams) -> Mat6 {
    let (a, k, g) = (p.alpha, p.kappa, p.gamma);
    let x1 = 1.0 - (state.n_total - state.n_spin);
    let x2 = 1.0 - (state.n_total + state.n_spin);
    let (pm, pp) = (state.e.minus.re, state.e.plus.re);
    let (qm, qp) = (state.e.minus.im, state.e.plus.im);

    let mut m = Mat6::zeros();
    // Field block: -kappa (1 + i alpha) X(N, n) split into real and
    // imaginary rows.
    m[(0, 0)] = -k * x1;
    m[(0, 2)] = a * k * x1;
    m[(1, 1)] = -k * x2;
    m[(1, 3)] = a * k * x2;
    m[(2, 0)] = -a * k * x1;
    m[(2, 2)] = -k * x1;
    m[(3, 1)] = -a * k * x2;
    m[(3, 3)] = -k * x2;

    // Field sensitivity to the carriers. Both carrier variables act on each
    // field component through the same coefficient, with opposite signs of n
    // for the minus component.
    let rm = pm - a * qm;
    let rp = pp - a * qp;
    let sm = a * pm + qm;
    let sp = a * pp + qp;
    m[(0, 4)] = k * rm;
    m[(0, 5)] = -k * rm;
    m[(1, 4)] = k * rp;
    m[(1, 5)] = k * rp;
    m[(2, 4)] = k * sm;
    m[(2, 5)] = -k * sm;
    m[(3, 4)] = k * sp;
    m[(3, 5)] = k * sp;

    // Carrier rows: -2 gamma F^T (I - X) on the field columns and
    // -gamma Y(E) on the carrier block.
    let w1 = state.n_total - state.n_spin;
    let w2 = state.n_total + state.n_spin;
    m[(4, 0)] = -2.0 * g * pm * w1;
    m[(4, 1)] = -2.0 * g * pp * w2;
    m[(4, 2)] = -2.0 * g * qm * w1;
    m[(4, 3)] = -2.0 * g * qp * w2;
    m[(5, 0)] = 2.0 * g * pm * w1;
    m[(5, 1)] = -2.0 * g * pp * w2;
    m[(5, 2)] = 2.0 * g * qm * w1;
    m[(5, 3)] = -2.0 * g * qp * w2;

    let i_minus = pm * pm + qm * qm;
    let i_plus = pp * pp + qp * qp;
    m[(4, 4)] = -g * (1.0 + i_minus + i_plus);
    m[(4, 5)] = -g * (i_plus - i_minus);
    m[(5, 4)] = -g * (i_plus - i_minus);
    m[(5, 5)] = -g * (p.delta + i_minus + i_plus);
    m
}

/// Reduced equilibrium map `F(s, x) = X(y(x)) x - s rhat`. Its zeros are the
/// modulus skeletons of the equilibria with injection magnitude `s` along the
/// direction `rhat`.
pub fn reduced_map(s: f64, x: Vec2, rhat: Vec2, p: &LaserParams) -> Vec2 {
    let y = steady_carriers(x, p);
    Vec2::new(
        (1.0 - (y[0] - y[1])) * x[0] - s * rhat[0],
        (1.0 - (y[0] + y[1])) * x[1] - s * rhat[1],
    )
}

/// Jacobian of the reduced map with respect to `x`; independent of `s`.
pub fn reduced_jacobian(x: Vec2, p: &LaserParams) -> Mat2 {
    let (x1, x2) = (x[0], x[1]);
    let (d, mu) = (p.delta, p.mu);
    let sq1 = x1 * x1;
    let sq2 = x2 * x2;
    let det = carrier_matrix_det(x, p);
    let det_sq = det * det;
    let p11 = mu * (d + 2.0 * sq2) * (-d + (1.0 + d) * (sq1 - sq2) + 4.0 * sq1 * sq2);
    let p22 = mu * (d + 2.0 * sq1) * (-d + (1.0 + d) * (sq2 - sq1) + 4.0 * sq1 * sq2);
    let p12 = 2.0 * mu * (d - 1.0) * (d + 2.0 * sq1) * x1 * x2;
    let p21 = 2.0 * mu * (d - 1.0) * (d + 2.0 * sq2) * x1 * x2;
    Matrix2::identity() + Mat2::new(p11, p12, p21, p22) / det_sq
}

/// Fixed-point form `G(s, x) = x - F(s, x)`; `x` is a fixed point of `G`
/// exactly when `F(s, x) = 0`.
pub fn reduced_fixed_point_map(s: f64, x: Vec2, rhat: Vec2, p: &LaserParams) -> Vec2 {
    x - reduced_map(s, x, rhat, p)
}

/// Splits `X(y(x)) x` into components along `x` and perpendicular to it:
/// `X(y(x)) x = |x| (a xhat + b xhat_perp)`. Undefined at the origin.
pub fn radial_tangential_split(x: Vec2, p: &LaserParams) -> Result<(f64, f64), ModelError> {
    let r = x.norm();
    if r == 0.0 {
        return Err(ModelError::ZeroVector);
    }
    let v = reduced_map(0.0, x, Vec2::zeros(), p);
    let a = v.dot(&x) / (r * r);
    let b = (v[0] * x[1] - v[1] * x[0]) / (r * r);
    Ok((a, b))
}

/// Canonical modulus/phase reduction of an injected field: returns the
/// nonnegative pair `r = (|u_-|, |u_+|) / |1 + i alpha|` and the phases for
/// which the gain factor reconstructs `u`. Zero components get phase zero
/// and are flagged arbitrary.
pub fn reduce_injection(u: &ComplexPair, p: &LaserParams) -> (Vec2, PhaseData) {
    let henry = Complex64::new(1.0, p.alpha);
    let scale = henry.norm();
    let r = Vec2::new(u.minus.norm() / scale, u.plus.norm() / scale);
    let minus_arbitrary = u.minus.norm_sqr() == 0.0;
    let plus_arbitrary = u.plus.norm_sqr() == 0.0;
    let phi_minus = if minus_arbitrary { 0.0 } else { (u.minus / henry).arg() };
    let phi_plus = if plus_arbitrary { 0.0 } else { (u.plus / henry).arg() };
    let phases = PhaseData {
        phi_minus,
        phi_plus,
        theta: p.phase_shift(),
        minus_arbitrary,
        plus_arbitrary,
    };
    (r, phases)
}

/// Reconstructs the injected field `u = (1 + i alpha) (r_1 e^{i phi_-},
/// r_2 e^{i phi_+})` from a reduced pair and phases.
pub fn injection_from(r: Vec2, phases: &PhaseData, p: &LaserParams) -> ComplexPair {
    let henry = Complex64::new(1.0, p.alpha);
    ComplexPair::new(
        henry * r[0] * Complex64::from_polar(1.0, phases.phi_minus),
        henry * r[1] * Complex64::from_polar(1.0, phases.phi_plus),
    )
}

/// Builds the full state `(E, N, n)` from a reduced root `x` and phases:
/// `E = (x_1 e^{i phi_-}, x_2 e^{i phi_+})` and `(N, n) = y(x)`.
pub fn assemble_equilibrium(x: Vec2, phases: &PhaseData, p: &LaserParams) -> LaserState {
    let e = ComplexPair::new(
        x[0] * Complex64::from_polar(1.0, phases.phi_minus),
        x[1] * Complex64::from_polar(1.0, phases.phi_plus),
    );
    let y = steady_carriers(x, p);
    LaserState::new(e, y[0], y[1])
}

/// The injected field that makes [`assemble_equilibrium`]`(x, phases)` an
/// equilibrium, namely `(1 + i alpha) J_phi X(y(x)) x`.
pub fn equilibrium_injection(x: Vec2, phases: &PhaseData, p: &LaserParams) -> ComplexPair {
    let v = reduced_map(0.0, x, Vec2::zeros(), p);
    injection_from(v, phases, p)
}

/// Normalized Stokes coordinates `(S1, S2, S3)` of a field pair, computed in
/// the circular basis (`S3 = +1` is pure right-circular polarization).
/// Returns `None` for the zero field.
pub fn stokes_normalized(e: &ComplexPair) -> Option<[f64; 3]> {
    let s0 = e.norm_sq();
    if s0 == 0.0 {
        return None;
    }
    let cross = e.plus * e.minus.conj();
    Some([2.0 * cross.re / s0, 2.0 * cross.im / s0, (e.plus.norm_sqr() - e.minus.norm_sqr()) / s0])
}

/// Central finite-difference Jacobian of the right-hand side; test oracle for
/// [`jacobian`], kept here so integration tests can reuse it.
pub fn jacobian_fd(state: &LaserState, u: &ComplexPair, p: &LaserParams, h: f64) -> Mat6 {
    let v0 = state.to_vec6();
    let mut m = Mat6::zeros();
    for j in 0..6 {
        let mut vp = v0;
        let mut vm = v0;
        vp[j] += h;
        vm[j] -= h;
        let fp = rhs(&LaserState::from_vec6(&vp), u, p);
        let fm = rhs(&LaserState::from_vec6(&vm), u, p);
        let col = (fp - fm) / (2.0 * h);
        for i in 0..6 {
            m[(i, j)] = col[i];
        }
    }
    m
}
