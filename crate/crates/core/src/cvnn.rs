//! The injection-locking activation function (tabulation and evaluation)
//! and the complex-valued network built on it: forward pass with domain
//! constraint, feasible random feature sampling, and linear readout fitting.
//!
//! The activation is radial times a unimodular phase factor, so it is
//! stored as radial samples only; phase covariance is then exact by
//! construction and evaluation reduces to one-dimensional interpolation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{
    refine_root, weak_field_radius, ContinuationError,
};
use crate::model::{assemble_equilibrium, reduce_injection, ComplexPair};
use crate::params::LaserParams;
use crate::stability::{classify_state, StabilityError, Verdict};
use crate::Vec2;

/// One radial node of the activation table: the scalar gain `g` with
/// `rho(lambda) = phase_factor(lambda) * g(|lambda|)`, plus the stability
/// diagnostics of the underlying locked state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSample {
    pub s: f64,
    pub g: f64,
    pub max_re: f64,
    pub stable: bool,
}

/// Tabulated activation for a linearly polarized injection direction,
/// sampled uniformly on `[0, domain_radius]`. The value at `s = 0` stores
/// the one-sided limit of `g`; the function value at the origin itself is
/// defined as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTable {
    pub uhat: ComplexPair,
    pub domain_radius: f64,
    pub params: LaserParams,
    /// Gain phase `-arg(1 + i alpha)` entering the phase factor.
    pub theta: f64,
    /// Phase of an injection with `arg(lambda) = 0`, common to both
    /// components only up to the per-component injection phases; stored for
    /// reconstruction of the full field.
    pub samples: Vec<RadialSample>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CvnnError {
    #[error("the scalar activation requires linear polarization (equal nonzero moduli), got |u-| = {0}, |u+| = {1}")]
    NotLinearlyPolarized(f64, f64),
    #[error("tabulation needs at least 4 radial samples, got {0}")]
    TooFewSamples(usize),
    #[error("|lambda| = {0} is outside the activation domain (radius {1})")]
    DomainViolation(f64, f64),
    #[error("pre-activation of hidden node {node} has modulus {modulus}, outside the domain (radius {radius})")]
    PreActivationOutOfDomain { node: usize, modulus: f64, radius: f64 },
    #[error("network readout expects {expected} features, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("readout fitting needs at least one data point")]
    NoData,
    #[error(transparent)]
    Continuation(#[from] ContinuationError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

/// Builds the activation table for a linearly polarized `uhat` by tracing
/// the locked branch along the diagonal up to the weak-field radius.
/// `n_samples` is the number of radial nodes (at least 4 for the cubic
/// interpolant).
pub fn tabulate_rho(
    uhat: &ComplexPair,
    p: &LaserParams,
    n_samples: usize,
) -> Result<ActivationTable, CvnnError> {
    let (m_minus, m_plus) = (uhat.minus.norm(), uhat.plus.norm());
    if m_minus == 0.0 || (m_minus - m_plus).abs() > 1e-12 * m_minus.max(m_plus) {
        return Err(CvnnError::NotLinearlyPolarized(m_minus, m_plus));
    }
    if n_samples < 4 {
        return Err(CvnnError::TooFewSamples(n_samples));
    }
    let ell = weak_field_radius(uhat, p)?;
    let (rhat, phases) = reduce_injection(uhat, p);

    // walk the locked branch along the uniform radial grid; the branch
    // survives past the weak-field radius, so every node is regular
    let mut samples = Vec::with_capacity(n_samples);
    let mut x = Vec2::from_element(((p.mu - 1.0) / 2.0).sqrt());
    let scale = 1.0 / m_minus;
    for k in 0..n_samples {
        let s = ell * k as f64 / (n_samples - 1) as f64;
        x = refine_root(s, x, rhat, 1e-13 * (1.0 + s), p)?;
        let state = assemble_equilibrium(x, &phases, p);
        let report = classify_state(&state, p, None)?;
        samples.push(RadialSample {
            s,
            g: x[0] * scale,
            max_re: report.max_re,
            stable: report.verdict == Verdict::Stable,
        });
    }
    Ok(ActivationTable {
        uhat: *uhat,
        domain_radius: ell,
        params: *p,
        theta: p.phase_shift(),
        samples,
    })
}

impl ActivationTable {
    /// Cubic interpolation of the radial gain at `s` in
    /// `[0, domain_radius]`; exact at the nodes.
    fn gain_at(&self, s: f64) -> f64 {
        let n = self.samples.len();
        let h = self.domain_radius / (n - 1) as f64;
        let pos = s / h;
        let i = (pos.floor() as usize).min(n - 2);
        let t = pos - i as f64;
        if t == 0.0 {
            return self.samples[i].g;
        }
        // Catmull-Rom with clamped end handling
        let at = |k: isize| -> f64 {
            let k = k.clamp(0, n as isize - 1) as usize;
            self.samples[k].g
        };
        let (g0, g1, g2, g3) =
            (at(i as isize - 1), at(i as isize), at(i as isize + 1), at(i as isize + 2));
        let m1 = 0.5 * (g2 - g0);
        let m2 = 0.5 * (g3 - g1);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * g1
            + (t3 - 2.0 * t2 + t) * m1
            + (-2.0 * t3 + 3.0 * t2) * g2
            + (t3 - t2) * m2
    }

    /// Activation value at `lambda`: the phase factor times the radial
    /// gain. Zero at the origin by convention; magnitudes at or beyond the
    /// domain radius are rejected.
    pub fn eval(&self, lambda: Complex64) -> Result<Complex64, CvnnError> {
        let r = lambda.norm();
        if r == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if r >= self.domain_radius {
            return Err(CvnnError::DomainViolation(r, self.domain_radius));
        }
        let phase = Complex64::from_polar(1.0, self.theta) * lambda / r;
        Ok(phase * self.gain_at(r))
    }

    /// The locked field this activation encodes at `lambda`:
    /// `rho(lambda) * uhat`.
    pub fn locked_field(&self, lambda: Complex64) -> Result<ComplexPair, CvnnError> {
        let rho = self.eval(lambda)?;
        Ok(ComplexPair::new(rho * self.uhat.minus, rho * self.uhat.plus))
    }
}

/// Hidden-layer features: complex weight rows `a_j` (one per hidden node)
/// and offsets `b_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub weights: Vec<Vec<Complex64>>,
    pub offsets: Vec<Complex64>,
}

impl Features {
    pub fn width(&self) -> usize {
        self.offsets.len()
    }

    /// Sufficient feasibility bound for inputs in the ball of radius
    /// `input_radius`: `sum_i |a_ji| R + |b_j| < domain_radius` for every j.
    pub fn feasible(&self, input_radius: f64, domain_radius: f64) -> bool {
        self.weights.iter().zip(&self.offsets).all(|(row, b)| {
            let mass: f64 = row.iter().map(|a| a.norm()).sum();
            mass * input_radius + b.norm() < domain_radius
        })
    }
}

/// Complex-valued network with the tabulated activation: `i0` inputs, a
/// hidden layer of `features`, and a linear readout to `k0` outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVNet {
    pub inputs: usize,
    pub outputs: usize,
    pub features: Features,
    /// Readout matrix, one row of length `width` per output.
    pub readout: Vec<Vec<Complex64>>,
    pub domain_radius: f64,
    pub input_radius: f64,
}

/// Draws `width` features, each feasible by construction for every input in
/// the closed ball of radius `input_radius`: offsets land in an annulus
/// `[0.05, ~0.5] * domain_radius` and each weight row is rescaled so the
/// row mass plus the offset stays below `0.95 * domain_radius`.
/// Deterministic in the seed; widths are nested (a longer draw extends a
/// shorter one feature by feature).
pub fn sample_features(
    inputs: usize,
    width: usize,
    input_radius: f64,
    domain_radius: f64,
    seed: u64,
) -> Features {
    assert!(input_radius > 0.0 && domain_radius > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(width);
    let mut offsets = Vec::with_capacity(width);
    for _ in 0..width {
        let mut row: Vec<Complex64> = (0..inputs)
            .map(|_| {
                let r = rng.gen_range(0.0f64..1.0).sqrt();
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(r, phi)
            })
            .collect();
        let b_mod = rng.gen_range(0.05 * domain_radius..0.5 * domain_radius);
        let b_phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let b = Complex64::from_polar(b_mod, b_phi);
        let raw_mass: f64 = row.iter().map(|a| a.norm()).sum();
        let budget = 0.95 * domain_radius - b_mod;
        let target = rng.gen_range(0.25..1.0) * budget;
        if raw_mass > 0.0 {
            let s = target / (raw_mass * input_radius);
            for a in row.iter_mut() {
                *a *= s;
            }
        }
        weights.push(row);
        offsets.push(b);
    }
    Features { weights, offsets }
}

/// Forward pass `M_k(z) = sum_j c_kj rho(a_j . z + b_j)`. A pre-activation
/// at or beyond the domain radius is an error; a pre-activation of exactly
/// zero uses the origin convention `rho(0) = 0`.
pub fn nn_forward(
    net: &CVNet,
    table: &ActivationTable,
    z: &[Complex64],
) -> Result<Vec<Complex64>, CvnnError> {
    if z.len() != net.inputs {
        return Err(CvnnError::ShapeMismatch { expected: net.inputs, got: z.len() });
    }
    let hidden = hidden_activations(&net.features, table, z)?;
    let mut out = vec![Complex64::new(0.0, 0.0); net.outputs];
    for (k, row) in net.readout.iter().enumerate() {
        if row.len() != hidden.len() {
            return Err(CvnnError::ShapeMismatch { expected: hidden.len(), got: row.len() });
        }
        out[k] = row.iter().zip(&hidden).map(|(c, h)| c * h).sum();
    }
    Ok(out)
}

fn hidden_activations(
    features: &Features,
    table: &ActivationTable,
    z: &[Complex64],
) -> Result<Vec<Complex64>, CvnnError> {
    features
        .weights
        .iter()
        .zip(&features.offsets)
        .enumerate()
        .map(|(node, (row, b))| {
            let pre: Complex64 = row.iter().zip(z).map(|(a, zi)| a * zi).sum::<Complex64>() + b;
            table.eval(pre).map_err(|e| match e {
                CvnnError::DomainViolation(modulus, radius) => {
                    CvnnError::PreActivationOutOfDomain { node, modulus, radius }
                }
                other => other,
            })
        })
        .collect()
}

/// Result of a readout fit: the readout rows, the root-mean-square residual
/// over the training data, and whether the normal equations needed the
/// larger ridge fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub readout: Vec<Vec<Complex64>>,
    pub rmse: f64,
    pub rank_deficient: bool,
}

/// Complex linear least squares for the readout: minimizes the summed
/// squared output error over the data. Normal equations with a tiny ridge,
/// plus iterative refinement to cancel the ridge bias; a Cholesky failure
/// falls back to a larger ridge and is reported.
pub fn fit_readout(
    features: &Features,
    table: &ActivationTable,
    data: &[(Vec<Complex64>, Vec<Complex64>)],
) -> Result<FitResult, CvnnError> {
    if data.is_empty() {
        return Err(CvnnError::NoData);
    }
    let width = features.width();
    let n = data.len();
    let outputs = data[0].1.len();

    let mut phi = DMatrix::<Complex64>::zeros(n, width);
    for (row, (z, _)) in data.iter().enumerate() {
        let h = hidden_activations(features, table, z)?;
        for (col, v) in h.into_iter().enumerate() {
            phi[(row, col)] = v;
        }
    }
    let phi_h = phi.adjoint();
    let gram = &phi_h * &phi;

    let base_ridge = 1e-10;
    let mut rank_deficient = false;
    let solve_with = |ridge: f64| -> Option<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
        let mut g = gram.clone();
        for i in 0..width {
            g[(i, i)] += Complex64::new(ridge, 0.0);
        }
        g.cholesky()
    };
    let chol = match solve_with(base_ridge) {
        Some(c) => c,
        None => {
            rank_deficient = true;
            let scale = gram.diagonal().iter().map(|d| d.re).fold(0.0f64, f64::max);
            solve_with(1e-8 * (1.0 + scale)).ok_or(CvnnError::NoData)?
        }
    };

    let mut readout = vec![vec![Complex64::new(0.0, 0.0); width]; outputs];
    let mut sq_err = 0.0;
    for k in 0..outputs {
        let y = nalgebra::DVector::<Complex64>::from_fn(n, |i, _| data[i].1[k]);
        let mut c = chol.solve(&(&phi_h * &y));
        // iterative refinement removes the ridge bias
        for _ in 0..2 {
            let r = &y - &phi * &c;
            c += chol.solve(&(&phi_h * &r));
        }
        let resid = (&y - &phi * &c).norm_squared();
        sq_err += resid;
        for (slot, v) in readout[k].iter_mut().zip(c.iter()) {
            *slot = *v;
        }
    }
    Ok(FitResult {
        readout,
        rmse: (sq_err / (n * outputs) as f64).sqrt(),
        rank_deficient,
    })
}

/// Single-input identity-target experiment: fits `f(z) = z` over the disk
/// at each requested width (same seed, nested features) and reports the
/// hold-out sup error and training RMSE per width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthResult {
    pub width: usize,
    pub sup_error: f64,
    pub rmse: f64,
}

pub fn identity_fit_experiment(
    table: &ActivationTable,
    widths: &[usize],
    input_radius: f64,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<Vec<WidthResult>, CvnnError> {
    let train = disk_grid(input_radius * 0.999, n_train, seed ^ 0x5eed);
    let test = disk_grid(input_radius * 0.95, n_test, seed ^ 0x7e57);
    let data: Vec<(Vec<Complex64>, Vec<Complex64>)> =
        train.iter().map(|&z| (vec![z], vec![z])).collect();

    let mut out = Vec::new();
    for &width in widths {
        let features = sample_features(1, width, input_radius, table.domain_radius, seed);
        debug_assert!(features.feasible(input_radius, table.domain_radius));
        let fit = fit_readout(&features, table, &data)?;
        let net = CVNet {
            inputs: 1,
            outputs: 1,
            features,
            readout: fit.readout.clone(),
            domain_radius: table.domain_radius,
            input_radius,
        };
        let mut sup = 0.0f64;
        for &z in &test {
            let y = nn_forward(&net, table, &[z])?[0];
            sup = sup.max((y - z).norm());
        }
        out.push(WidthResult { width, sup_error: sup, rmse: fit.rmse });
    }
    Ok(out)
}

/// Deterministic scattered points in the closed disk of radius `r`.
fn disk_grid(r: f64, n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let rad = r * rng.gen_range(0.0f64..1.0).sqrt();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(rad, phi)
        })
        .collect()
}
