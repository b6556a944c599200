//! Consistency checks that span modules: linearized verdicts against
//! time-domain behavior, spectra at exact versus zeroth-order points, and
//! the activation table against settled simulations.

use num_complex::Complex64;
use spinflip::equilibria::{self, BranchId};
use spinflip::model::{self, ComplexPair, LaserState};
use spinflip::stability::{self, Verdict};
use spinflip::{cvnn, sim, LaserParams, ToleranceSet, Vec6};

fn params() -> LaserParams {
    LaserParams::default()
}

fn fig_uhat(theta: f64, p: &LaserParams) -> ComplexPair {
    let m = (p.mu - 1.0).sqrt();
    ComplexPair::from_re(m * theta.cos(), m * theta.sin())
}

fn tight_tol() -> ToleranceSet {
    ToleranceSet { ode_rel: 1e-11, ode_abs: 1e-14, ..ToleranceSet::default() }
}

#[test]
fn jacobian_matches_finite_differences_at_all_branch_points() {
    let p = params();
    let uhat = fig_uhat(std::f64::consts::FRAC_PI_4, &p);
    let pts = equilibria::equilibria_at(Complex64::new(0.02, 0.0), &uhat, &p).unwrap();
    assert_eq!(pts.len(), 9);
    let u = ComplexPair::new(0.02 * uhat.minus, 0.02 * uhat.plus);
    for pt in &pts {
        let state = pt.state();
        let j = model::jacobian(&state, &p);
        let j_fd = model::jacobian_fd(&state, &u, &p, 1e-6);
        assert!((j - j_fd).norm() / j.norm() < 1e-6, "branch {}", pt.branch);
    }
}

#[test]
fn stable_verdict_agrees_with_settling_behavior() {
    // where the linearization says stable, a small kick returns; where it
    // says unstable, a kick along the growing eigendirection departs
    let p = params();
    let uhat = fig_uhat(std::f64::consts::FRAC_PI_4, &p);
    let lambdas = [0.004, 0.009, 0.017, 0.031, 0.045];
    let tol = tight_tol();
    for &lam in &lambdas {
        let u = ComplexPair::new(lam * uhat.minus, lam * uhat.plus);
        let pts = equilibria::equilibria_at(Complex64::new(lam, 0.0), &uhat, &p).unwrap();
        let stable: Vec<_> = pts
            .iter()
            .filter(|pt| {
                stability::classify(pt, &p, None).unwrap().verdict == Verdict::Stable
            })
            .collect();
        assert_eq!(stable.len(), 1, "lambda = {lam}");
        let pt = stable[0];
        assert_eq!(pt.branch, BranchId::PlusX);

        // kick the stable point by 1e-3 and require convergence back
        let mut v = pt.state().to_vec6();
        v += Vec6::new(1e-3, -0.4e-3, 0.3e-3, 0.2e-3, -0.5e-3, 0.1e-3) * 0.5;
        let (end, ok) =
            sim::settle(&u, &LaserState::from_vec6(&v), 80.0, 1e-7, &tol, &p).unwrap();
        assert!(ok, "no convergence at lambda = {lam}");
        assert!(
            (end.to_vec6() - pt.state().to_vec6()).norm() < 1e-6,
            "settled away from the stable point at lambda = {lam}"
        );
    }
}

#[test]
fn unstable_off_branch_point_departs_under_perturbation() {
    let p = params();
    let uhat = fig_uhat(std::f64::consts::FRAC_PI_4, &p);
    let lam = 0.01;
    let u = ComplexPair::new(lam * uhat.minus, lam * uhat.plus);
    let pts = equilibria::equilibria_at(Complex64::new(lam, 0.0), &uhat, &p).unwrap();
    let off = pts.iter().find(|pt| pt.branch == BranchId::O).unwrap();
    let report = stability::classify(off, &p, None).unwrap();
    assert_eq!(report.verdict, Verdict::Unstable);

    let mut v = off.state().to_vec6();
    v[0] += 1e-6;
    let traj = sim::integrate(
        &LaserState::from_vec6(&v),
        &sim::InjectionSchedule::constant(u, 10.0),
        0.0,
        10.0,
        &ToleranceSet::default(),
        &p,
    )
    .unwrap();
    let dist = (traj.last().to_vec6() - off.state().to_vec6()).norm();
    assert!(dist > 1e-2, "distance only {dist}");
}

#[test]
fn spectra_at_zeroth_order_points_approach_the_exact_ones() {
    // the linearization spectrum at the zeroth-order field location (with
    // carriers at (1, 0)) converges to the one at the exact equilibrium
    let p = params();
    let uhat = fig_uhat(std::f64::consts::FRAC_PI_6, &p);
    for branch in [BranchId::PlusX, BranchId::MinusX, BranchId::PlusY, BranchId::MinusY] {
        let mut dists = Vec::new();
        for &lam in &[1e-2, 1e-3, 1e-4] {
            let lamc = Complex64::new(lam, 0.0);
            let pts = equilibria::equilibria_at(lamc, &uhat, &p).unwrap();
            let exact = pts.iter().find(|pt| pt.branch == branch).unwrap();
            let spec_exact = stability::spectrum(&model::jacobian(&exact.state(), &p)).unwrap();

            let coeffs = equilibria::asymptotic_coeffs(branch, &uhat, &p);
            let pf = lamc / lamc.norm();
            let zeroth = LaserState::new(
                ComplexPair::new(pf * coeffs.zeroth.minus, pf * coeffs.zeroth.plus),
                1.0,
                0.0,
            );
            let spec_zeroth = stability::spectrum(&model::jacobian(&zeroth, &p)).unwrap();
            dists.push(stability::matching_distance(&spec_exact, &spec_zeroth));
        }
        // the near-zero eigenvalue pair moves at a rate of order
        // kappa * lambda, so the distance vanishes only linearly: assert
        // monotone decrease across the three decades
        assert!(
            dists[0] > dists[1] && dists[1] > dists[2],
            "branch {branch}: distances {dists:?} not decreasing"
        );
    }
}

#[test]
fn activation_matches_settled_simulation_inside_the_domain() {
    let p = params();
    let uhat = fig_uhat(std::f64::consts::FRAC_PI_4, &p);
    let table = cvnn::tabulate_rho(&uhat, &p, 200).unwrap();
    let tol = tight_tol();
    // deterministic spread of magnitudes and phases inside the domain
    let cases: Vec<Complex64> = (0..10)
        .map(|k| {
            let r = table.domain_radius * (0.08 + 0.9 * k as f64 / 10.0);
            Complex64::from_polar(r, 0.61 * k as f64)
        })
        .collect();
    for lam in cases {
        let u = ComplexPair::new(lam * uhat.minus, lam * uhat.plus);
        let locked = table.locked_field(lam).unwrap();
        // start near the locked state to stay in its basin
        let start = LaserState::new(locked, 1.0, 0.0);
        let (end, ok) = sim::settle(&u, &start, 80.0, 1e-8, &tol, &p).unwrap();
        assert!(ok, "no convergence at lambda = {lam}");
        assert!(
            (end.e - locked).norm() < 1e-5,
            "lambda = {lam}: settled field {:?} vs table {:?}",
            end.e,
            locked
        );
    }
}

#[test]
fn locked_branch_matches_settling_beyond_the_table_domain() {
    // the locked branch continues past the weak-field radius; its values at
    // larger magnitudes must still agree with settled simulations
    let p = params();
    let uhat = fig_uhat(std::f64::consts::FRAC_PI_4, &p);
    let (rhat, _) = model::reduce_injection(&uhat, &p);
    let tol = tight_tol();
    for &lam in &[0.05, 0.1, 0.25] {
        let eta = equilibria::scalar_branch(BranchId::PlusX, rhat[0], lam, &p).unwrap();
        let rho = eta / uhat.minus.norm();
        let locked = ComplexPair::new(rho * uhat.minus, rho * uhat.plus);
        let u = ComplexPair::new(lam * uhat.minus, lam * uhat.plus);
        let (end, ok) =
            sim::settle(&u, &LaserState::new(locked, 1.0, 0.0), 80.0, 1e-8, &tol, &p).unwrap();
        assert!(ok);
        assert!((end.e - locked).norm() < 1e-5, "lambda = {lam}");
    }
}

#[test]
fn settle_reaches_the_equilibria_module_point_from_nearby() {
    let p = params();
    let uhat = fig_uhat(11.0 * std::f64::consts::PI / 24.0, &p);
    let lam = 0.01;
    let u = ComplexPair::new(lam * uhat.minus, lam * uhat.plus);
    let pts = equilibria::equilibria_at(Complex64::new(lam, 0.0), &uhat, &p).unwrap();
    let plus_x = pts.iter().find(|pt| pt.branch == BranchId::PlusX).unwrap();
    let coeffs = equilibria::asymptotic_coeffs(BranchId::PlusX, &uhat, &p);
    let start = LaserState::new(coeffs.zeroth, 1.0, 0.0);
    let (end, ok) = sim::settle(&u, &start, 80.0, 1e-7, &tight_tol(), &p).unwrap();
    assert!(ok);
    assert!((end.to_vec6() - plus_x.state().to_vec6()).norm() < 1e-6);
}
