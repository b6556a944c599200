//! The six analysis subcommands, each a thin orchestration over the library
//! with CSV/JSON emission.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use spinflip::equilibria::{self, BranchId, ContinuationMode, StepControl};
use spinflip::model::{self, ComplexPair, LaserState};
use spinflip::stability;
use spinflip::strong;
use spinflip::{cvnn, sim, LaserParams};

use crate::config::RunConfig;
use crate::outputs::{num, OutputDir};
use crate::CliError;

fn uhat_for_theta(theta: f64, p: &LaserParams) -> ComplexPair {
    let m = (p.mu - 1.0).sqrt();
    ComplexPair::from_re(m * theta.cos(), m * theta.sin())
}

/// The locked (stable-branch) equilibrium for injection `lambda * uhat`,
/// used as the reference overlay of the simulation output.
fn locked_reference(
    lambda: f64,
    uhat: &ComplexPair,
    p: &LaserParams,
) -> Result<LaserState, CliError> {
    let pts = equilibria::equilibria_at(Complex64::new(lambda, 0.0), uhat, p)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    pts.iter()
        .find(|pt| pt.branch == BranchId::PlusX)
        .map(|pt| pt.state())
        .ok_or_else(|| {
            CliError::Numerical(format!("locked branch not found at lambda = {lambda}"))
        })
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let p = cfg.params.build()?;
    let tol = cfg.tolerances.build()?;
    let sim_cfg = &cfg.simulate;
    if sim_cfg.segments.is_empty() {
        return Err(CliError::Config("[simulate] schedule has no segments".into()));
    }
    let global_uhat = cfg.injection.build(&p)?;
    let mut segments = Vec::new();
    let mut seg_meta = Vec::new();
    for seg in &sim_cfg.segments {
        let uhat = match seg.theta_pol {
            Some(theta) => uhat_for_theta(theta, &p),
            None => global_uhat,
        };
        let u = ComplexPair::new(seg.lambda * uhat.minus, seg.lambda * uhat.plus);
        segments.push((seg.t_start_ns, u));
        seg_meta.push((seg.t_start_ns, seg.lambda, uhat));
    }
    let sched = sim::InjectionSchedule::new(segments, sim_cfg.t_end_ns)
        .map_err(|e| CliError::Config(format!("[simulate] {e}")))?;

    let traj = sim::integrate(
        &LaserState::zero(),
        &sched,
        sim_cfg.t_start_ns,
        sim_cfg.t_end_ns,
        &tol,
        &p,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut w = out.csv("trajectory.csv", "t,ReE_minus,ReE_plus,ImE_minus,ImE_plus,N,n")?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if *t < sim_cfg.t_output_from_ns {
            continue;
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(*t),
            num(s.e.minus.re),
            num(s.e.plus.re),
            num(s.e.minus.im),
            num(s.e.plus.im),
            num(s.n_total),
            num(s.n_spin)
        )?;
    }
    w.flush()?;

    // stable-equilibrium overlay, one row per segment
    let mut w = out.csv(
        "reference.csv",
        "t_start,t_end,lambda,ReE_minus,ReE_plus,ImE_minus,ImE_plus,N,n",
    )?;
    for (k, &(t0, lambda, uhat)) in seg_meta.iter().enumerate() {
        let t1 = seg_meta.get(k + 1).map(|m| m.0).unwrap_or(sim_cfg.t_end_ns);
        let r = locked_reference(lambda, &uhat, &p)?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            num(t0),
            num(t1),
            num(lambda),
            num(r.e.minus.re),
            num(r.e.plus.re),
            num(r.e.minus.im),
            num(r.e.plus.im),
            num(r.n_total),
            num(r.n_spin)
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FoldOut {
    branch: String,
    s: f64,
    x: [f64; 2],
}

#[derive(Serialize)]
struct BranchOut {
    branch: String,
    reached_end: bool,
    samples: usize,
    fold: Option<FoldOut>,
}

#[derive(Serialize)]
struct EquilibriaSummary {
    ell: f64,
    s_max: f64,
    lambda_census: f64,
    census_points: usize,
    branches: Vec<BranchOut>,
}

pub fn cmd_equilibria(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let p = cfg.params.build()?;
    let uhat = cfg.injection.build(&p)?;
    if uhat.minus.norm() == 0.0 || uhat.plus.norm() == 0.0 {
        return Err(CliError::Config(
            "[injection] both components must be nonzero for the branch analysis".into(),
        ));
    }
    let section = &cfg.equilibria;
    if !(section.s_max > 0.0) {
        return Err(CliError::Config("[equilibria] s_max must be positive".into()));
    }
    if section.lambda == 0.0 {
        return Err(CliError::Config("[equilibria] lambda must be nonzero".into()));
    }

    let (rhat, phases) = model::reduce_injection(&uhat, &p);
    let ctrl = StepControl { pseudo_arclength: section.pseudo_arclength, ..Default::default() };

    // branch paths; failures are reported per branch without aborting others
    let paths: Vec<_> = BranchId::ALL
        .par_iter()
        .map(|&b| equilibria::continue_branch(b, rhat, section.s_max, &ctrl, &p))
        .collect();

    let mut w = out.csv("branch_paths.csv", "branch,s,x1,x2,detDxF,mode")?;
    let mut e_plane = out.csv(
        "e_plane_paths.csv",
        "branch,lambda,ReE_minus,ReE_plus,ImE_minus,ImE_plus",
    )?;
    let mut branches = Vec::new();
    let mut errors = Vec::new();
    for (b, path) in BranchId::ALL.iter().zip(&paths) {
        let path = match path {
            Ok(path) => path,
            Err(e) => {
                errors.push(format!("{b}: {e}"));
                continue;
            }
        };
        for s in &path.samples {
            let mode = match (s.mode, s.post_fold) {
                (ContinuationMode::Natural, _) => "natural",
                (ContinuationMode::PseudoArclength, false) => "pseudo-arclength",
                (ContinuationMode::PseudoArclength, true) => "pseudo-arclength-postfold",
            };
            writeln!(
                w,
                "{},{},{},{},{},{}",
                b.label(),
                num(s.s),
                num(s.x[0]),
                num(s.x[1]),
                num(s.det),
                mode
            )?;
            // field-plane projection for both injection signs
            for sign in [1.0, -1.0] {
                let state = model::assemble_equilibrium(sign * s.x, &phases, &p);
                writeln!(
                    e_plane,
                    "{},{},{},{},{},{}",
                    b.label(),
                    num(sign * s.s),
                    num(state.e.minus.re),
                    num(state.e.plus.re),
                    num(state.e.minus.im),
                    num(state.e.plus.im)
                )?;
            }
        }
        branches.push(BranchOut {
            branch: b.label().to_string(),
            reached_end: path.reached_end,
            samples: path.samples.len(),
            fold: path.fold.map(|f| FoldOut {
                branch: b.label().to_string(),
                s: f.s,
                x: [f.x[0], f.x[1]],
            }),
        });
    }
    w.flush()?;
    e_plane.flush()?;

    let ell = equilibria::weak_field_radius(&uhat, &p)
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    // point census with polarization coordinates
    let pts = equilibria::equilibria_at(Complex64::new(section.lambda, 0.0), &uhat, &p)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut w = out.csv(
        "equilibria_points.csv",
        "branch,ReE_minus,ReE_plus,ImE_minus,ImE_plus,N,n,residual,S1,S2,S3",
    )?;
    for pt in &pts {
        let stokes = model::stokes_normalized(&pt.e).unwrap_or([f64::NAN; 3]);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            pt.branch.label(),
            num(pt.e.minus.re),
            num(pt.e.plus.re),
            num(pt.e.minus.im),
            num(pt.e.plus.im),
            num(pt.n_total),
            num(pt.n_spin),
            num(pt.residual),
            num(stokes[0]),
            num(stokes[1]),
            num(stokes[2])
        )?;
    }
    w.flush()?;

    out.json(
        "equilibria_summary.json",
        &EquilibriaSummary {
            ell,
            s_max: section.s_max,
            lambda_census: section.lambda,
            census_points: pts.len(),
            branches,
        },
    )?;
    if !errors.is_empty() {
        return Err(CliError::Numerical(format!(
            "continuation failed on {} branch(es): {}",
            errors.len(),
            errors.join("; ")
        )));
    }
    Ok(())
}

pub fn cmd_stability(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let p = cfg.params.build()?;
    let uhat = cfg.injection.build(&p)?;
    let section = &cfg.stability;
    if section.count == 0 {
        return Err(CliError::Config("[stability] count must be at least 1".into()));
    }
    if section.count > 1 && !(section.lambda_max > section.lambda_min) {
        return Err(CliError::Config("[stability] need an increasing range for count > 1".into()));
    }

    // count = 1 classifies the single magnitude lambda_min
    let lambdas: Vec<f64> = (0..section.count)
        .map(|k| {
            if section.count == 1 {
                section.lambda_min
            } else {
                section.lambda_min
                    + (section.lambda_max - section.lambda_min) * k as f64
                        / (section.count - 1) as f64
            }
        })
        .filter(|l| l.abs() > 1e-12)
        .collect();
    if lambdas.is_empty() {
        return Err(CliError::Config("[stability] the sweep contains no nonzero magnitude".into()));
    }

    let rows: Vec<Result<Vec<String>, CliError>> = lambdas
        .par_iter()
        .map(|&lam| {
            let pts = equilibria::equilibria_at(Complex64::new(lam, 0.0), &uhat, &p)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let mut rows = Vec::new();
            for pt in &pts {
                let rep = stability::classify(pt, &p, None)
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    pt.branch.label(),
                    num(lam),
                    num(rep.max_re),
                    rep.verdict,
                    num(pt.e.minus.re),
                    num(pt.e.plus.re)
                ));
            }
            Ok(rows)
        })
        .collect();

    let mut w = out.csv("stability_sweep.csv", "branch,lambda,maxRe,verdict,ReE_minus,ReE_plus")?;
    for row in rows {
        for line in row? {
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_strong(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let p = cfg.params.build()?;
    let uhat = cfg.injection.build(&p)?;
    if cfg.strong.lambda_abs.is_empty() {
        return Err(CliError::Config("[strong] lambda_abs must not be empty".into()));
    }
    let rows: Vec<Result<String, CliError>> = cfg
        .strong
        .lambda_abs
        .par_iter()
        .map(|&lam| {
            if !(lam > 0.0) {
                return Err(CliError::Config(format!(
                    "[strong] magnitudes must be positive, got {lam}"
                )));
            }
            let (point, report) = strong::strong_equilibrium(Complex64::new(lam, 0.0), &uhat, &p)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let e_norm = report.e_lambda.norm();
            let ratio = point.e.norm() / (lam * uhat.norm() / p.henry_mod());
            let stokes = model::stokes_normalized(&point.e).unwrap_or([f64::NAN; 3]);
            Ok(format!(
                "{},{},{},{},{},{},{}",
                num(lam),
                num(e_norm),
                num(e_norm * lam.powf(2.0 / 3.0)),
                num(ratio),
                num(stokes[0]),
                num(stokes[1]),
                num(stokes[2])
            ))
        })
        .collect();
    let mut w = out.csv(
        "strong_sweep.csv",
        "lambda_abs,e_norm,e_norm_times_lambda23,intensity_ratio,S1,S2,S3",
    )?;
    for row in rows {
        writeln!(w, "{}", row?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_activation(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let p = cfg.params.build()?;
    let uhat = cfg.injection.build(&p)?;
    let section = &cfg.activation;
    let table = cvnn::tabulate_rho(&uhat, &p, section.n_samples).map_err(|e| match e {
        cvnn::CvnnError::NotLinearlyPolarized(..) | cvnn::CvnnError::TooFewSamples(_) => {
            CliError::Config(format!("[activation] {e}"))
        }
        other => CliError::Numerical(other.to_string()),
    })?;
    out.json("activation_table.json", &table)?;

    // the real-axis curve, including the sign jump through the origin
    let n = section.curve_points.max(2);
    let mut w = out.csv("activation_curve.csv", "lambda,re_rho,im_rho")?;
    for k in 0..n {
        let lam = table.domain_radius * (-1.0 + 2.0 * k as f64 / (n - 1) as f64) * 0.999;
        let rho = if lam == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            table
                .eval(Complex64::new(lam, 0.0))
                .map_err(|e| CliError::Numerical(e.to_string()))?
        };
        writeln!(w, "{},{},{}", num(lam), num(rho.re), num(rho.im))?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_nnfit(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let p = cfg.params.build()?;
    let uhat = cfg.injection.build(&p)?;
    let section = &cfg.nnfit;
    if section.widths.is_empty() {
        return Err(CliError::Config("[nnfit] widths must not be empty".into()));
    }
    let table = cvnn::tabulate_rho(&uhat, &p, section.table_samples).map_err(|e| match e {
        cvnn::CvnnError::NotLinearlyPolarized(..) | cvnn::CvnnError::TooFewSamples(_) => {
            CliError::Config(format!("[nnfit] {e}"))
        }
        other => CliError::Numerical(other.to_string()),
    })?;
    let results = cvnn::identity_fit_experiment(
        &table,
        &section.widths,
        section.input_radius,
        section.n_train,
        section.n_test,
        cfg.seed,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut w = out.csv("nnfit_widths.csv", "width,sup_error,rmse")?;
    for r in &results {
        writeln!(w, "{},{},{}", r.width, num(r.sup_error), num(r.rmse))?;
    }
    w.flush()?;
    Ok(())
}

/// Applies the `--tol` override: the integrator runs at `(X, X / 1000)`
/// relative/absolute tolerances.
pub fn apply_tol_override(cfg: &mut RunConfig, tol: Option<f64>) -> Result<(), CliError> {
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Config(format!("--tol must be positive, got {t}")));
        }
        cfg.tolerances.ode_rel = t;
        cfg.tolerances.ode_abs = t * 1e-3;
    }
    Ok(())
}

pub fn dispatch(command: &str, cfg: &RunConfig, out_root: &Path) -> Result<(), CliError> {
    let mut out = OutputDir::create(out_root)?;
    match command {
        "simulate" => cmd_simulate(cfg, &mut out)?,
        "equilibria" => cmd_equilibria(cfg, &mut out)?,
        "stability" => cmd_stability(cfg, &mut out)?,
        "strong" => cmd_strong(cfg, &mut out)?,
        "activation" => cmd_activation(cfg, &mut out)?,
        "nnfit" => cmd_nnfit(cfg, &mut out)?,
        other => return Err(CliError::Config(format!("unknown command {other}"))),
    }
    out.manifest(command, cfg)
}
