//! Run configuration: TOML schema with unit-suffixed keys, defaults
//! matching the reference experiment, and validation into core types.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spinflip::model::ComplexPair;
use spinflip::{LaserParams, ToleranceSet};

use crate::CliError;

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub injection: InjectionSection,
    #[serde(default)]
    pub tolerances: TolSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub equilibria: EquilibriaSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub strong: StrongSection,
    #[serde(default)]
    pub activation: ActivationSection,
    #[serde(default)]
    pub nnfit: NnfitSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            params: ParamsSection::default(),
            injection: InjectionSection::default(),
            tolerances: TolSection::default(),
            simulate: SimulateSection::default(),
            equilibria: EquilibriaSection::default(),
            stability: StabilitySection::default(),
            strong: StrongSection::default(),
            activation: ActivationSection::default(),
            nnfit: NnfitSection::default(),
        }
    }
}

/// Physical parameters; rate keys carry their unit in the name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub kappa_per_ns: f64,
    pub gamma_per_ns: f64,
    pub alpha: f64,
    pub delta: f64,
    pub mu: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = LaserParams::default();
        Self { kappa_per_ns: p.kappa, gamma_per_ns: p.gamma, alpha: p.alpha, delta: p.delta, mu: p.mu }
    }
}

impl ParamsSection {
    pub fn build(&self) -> Result<LaserParams, CliError> {
        LaserParams::new(self.kappa_per_ns, self.alpha, self.gamma_per_ns, self.delta, self.mu)
            .map_err(|e| CliError::Config(format!("[params] {e}")))
    }
}

/// Injection direction: either a polarization angle (the direction is then
/// `sqrt(mu - 1) (cos, sin)`, matching the free-running intensity at unit
/// magnitude) or explicit complex components as `[re, im]` pairs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSection {
    pub theta_pol: Option<f64>,
    pub uhat_minus: Option<[f64; 2]>,
    pub uhat_plus: Option<[f64; 2]>,
}

impl InjectionSection {
    pub fn build(&self, p: &LaserParams) -> Result<ComplexPair, CliError> {
        match (self.theta_pol, self.uhat_minus, self.uhat_plus) {
            (Some(theta), None, None) => {
                let m = (p.mu - 1.0).sqrt();
                Ok(ComplexPair::from_re(m * theta.cos(), m * theta.sin()))
            }
            (None, Some(um), Some(up)) => Ok(ComplexPair::new(
                Complex64::new(um[0], um[1]),
                Complex64::new(up[0], up[1]),
            )),
            (None, None, None) => {
                let m = (p.mu - 1.0).sqrt();
                let theta = std::f64::consts::FRAC_PI_4;
                Ok(ComplexPair::from_re(m * theta.cos(), m * theta.sin()))
            }
            _ => Err(CliError::Config(
                "[injection] give either theta_pol or both uhat_minus and uhat_plus".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolSection {
    pub root_residual: f64,
    pub jacobian_fd: f64,
    pub ode_rel: f64,
    pub ode_abs: f64,
}

impl Default for TolSection {
    fn default() -> Self {
        let t = ToleranceSet::default();
        Self {
            root_residual: t.root_residual,
            jacobian_fd: t.jacobian_fd,
            ode_rel: t.ode_rel,
            ode_abs: t.ode_abs,
        }
    }
}

impl TolSection {
    pub fn build(&self) -> Result<ToleranceSet, CliError> {
        let vals = [self.root_residual, self.jacobian_fd, self.ode_rel, self.ode_abs];
        if !vals.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(CliError::Config("[tolerances] values must be positive".into()));
        }
        Ok(ToleranceSet {
            root_residual: self.root_residual,
            jacobian_fd: self.jacobian_fd,
            ode_rel: self.ode_rel,
            ode_abs: self.ode_abs,
        })
    }
}

/// One schedule segment: injection `lambda * uhat(theta_pol)` from
/// `t_start_ns` on. A segment without `theta_pol` uses the global
/// injection direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub t_start_ns: f64,
    pub lambda: f64,
    pub theta_pol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub t_start_ns: f64,
    pub t_end_ns: f64,
    /// Rows before this time are warm-up and are not written out.
    pub t_output_from_ns: f64,
    pub segments: Vec<SegmentSection>,
}

/// The reference scenario: zero state at -4 ns, three 8 ns blocks
/// alternating strong and weak injection while the polarization angle steps
/// through pi/6, pi/4, 11 pi/24.
impl Default for SimulateSection {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        let mut segments = vec![SegmentSection {
            t_start_ns: -4.0,
            lambda: 0.25,
            theta_pol: Some(pi / 6.0),
        }];
        for k in 0..3 {
            let theta = [pi / 6.0, pi / 4.0, 11.0 * pi / 24.0][k];
            let t0 = 8.0 * k as f64;
            if k > 0 {
                segments.push(SegmentSection { t_start_ns: t0, lambda: 0.25, theta_pol: Some(theta) });
            }
            segments.push(SegmentSection {
                t_start_ns: t0 + 4.0,
                lambda: 0.01,
                theta_pol: Some(theta),
            });
        }
        Self { t_start_ns: -4.0, t_end_ns: 24.0, t_output_from_ns: 0.0, segments }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriaSection {
    /// Injection magnitude for the point census (with Stokes coordinates).
    pub lambda: f64,
    /// Range of the traced branch paths.
    pub s_max: f64,
    pub pseudo_arclength: bool,
}

impl Default for EquilibriaSection {
    fn default() -> Self {
        Self { lambda: 0.01, s_max: 0.25, pseudo_arclength: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self { lambda_min: -0.25, lambda_max: 0.25, count: 51 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrongSection {
    pub lambda_abs: Vec<f64>,
}

impl Default for StrongSection {
    fn default() -> Self {
        Self { lambda_abs: vec![10.0, 100.0, 1000.0, 10000.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivationSection {
    pub n_samples: usize,
    /// Points of the real-axis curve written alongside the table.
    pub curve_points: usize,
}

impl Default for ActivationSection {
    fn default() -> Self {
        Self { n_samples: 512, curve_points: 200 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnfitSection {
    pub widths: Vec<usize>,
    pub input_radius: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub table_samples: usize,
}

impl Default for NnfitSection {
    fn default() -> Self {
        Self {
            widths: vec![25, 100, 400],
            input_radius: 1.0,
            n_train: 900,
            n_test: 400,
            table_samples: 256,
        }
    }
}

pub fn load(path: Option<&std::path::Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build() {
        let cfg = RunConfig::default();
        let p = cfg.params.build().unwrap();
        assert_eq!(p.kappa, 300.0);
        let uhat = cfg.injection.build(&p).unwrap();
        assert!((uhat.minus.re - uhat.plus.re).abs() < 1e-15);
        assert_eq!(cfg.simulate.segments.len(), 6);
        cfg.tolerances.build().unwrap();
    }

    #[test]
    fn conflicting_injection_is_rejected() {
        let cfg = InjectionSection {
            theta_pol: Some(0.5),
            uhat_minus: Some([1.0, 0.0]),
            uhat_plus: None,
        };
        assert!(cfg.build(&LaserParams::default()).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("[params]\nkappa = 1.0").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kappa"), "{msg}");
    }
}
