//! End-to-end planning: configuration, fitting, assembly, solve and reconstruction.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::discretize::{assemble, merge_coincident, AssembleOptions, BoundaryConditions, DiscretizedProblem, Limits, EPS_DS, EPS_DTHETA};
use crate::error::{Error, Result};
use crate::format::PathInput;
use crate::kinematics::{JointLimits, WheelGeometry};
use crate::solver::{solve, Settings, Solution};
use crate::spline::{fit_with_u0, sample_initial_trajectory, InitialTrajectory, WaypointPath, DEFAULT_DEGREE};
use crate::trajectory::{indexes, reconstruct, PerformanceReport, Summary, TimedTrajectory};

/// Every tunable of a planning run. Defaults are the reference robot on the
/// Lissajous test: 0.6 m/s, ±1 m/s², 0.6 m/s² lateral, ±2 rad/s, ±0.75 m/s
/// wheels, 0.35 m track, rest-to-rest, 0.01 sampling step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_n_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub v_r_min: f64,
    pub v_r_max: f64,
    pub v_l_min: f64,
    pub v_l_max: f64,
    pub track_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wheel_radius: Option<f64>,
    pub v_s: f64,
    pub v_f: f64,
    pub omega_s: f64,
    pub omega_f: f64,
    pub degree: usize,
    /// Parameter step used when sampling fitted curves and the test curve.
    pub resolution: f64,
    /// Parameter span of the first chord; the chord length itself when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    pub disable_angular: bool,
    pub disable_joint: bool,
    pub strict_joint: bool,
    pub eps_ds: f64,
    pub eps_dtheta: f64,
    pub solver: Settings,
}

impl Default for Config {
    fn default() -> Self {
        let lim = Limits::default();
        let bc = BoundaryConditions::default();
        Config {
            v_max: lim.v_max,
            a_min: lim.a_min,
            a_max: lim.a_max,
            a_n_max: lim.a_n_max,
            omega_min: lim.omega_min,
            omega_max: lim.omega_max,
            v_r_min: lim.joint.v_r_min,
            v_r_max: lim.joint.v_r_max,
            v_l_min: lim.joint.v_l_min,
            v_l_max: lim.joint.v_l_max,
            track_width: lim.geometry.track_width,
            wheel_radius: lim.geometry.wheel_radius,
            v_s: bc.v_s,
            v_f: bc.v_f,
            omega_s: bc.omega_s,
            omega_f: bc.omega_f,
            degree: DEFAULT_DEGREE,
            resolution: 0.01,
            u0: None,
            disable_angular: false,
            disable_joint: false,
            strict_joint: false,
            eps_ds: EPS_DS,
            eps_dtheta: EPS_DTHETA,
            solver: Settings::default(),
        }
    }
}

impl Config {
    /// Parses and validates a JSON config; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.limits().validate()?;
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.degree == 0 {
            return bad("degree must be positive".into());
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        if let Some(u0) = self.u0 {
            if !(u0 > 0.0 && u0.is_finite()) {
                return bad(format!("u0 must be positive, got {u0}"));
            }
        }
        for (name, v) in [("eps_ds", self.eps_ds), ("eps_dtheta", self.eps_dtheta)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let s = &self.solver;
        if !(s.tol_feas > 0.0 && s.tol_gap > 0.0) || s.max_iter == 0 {
            return bad("solver tolerances and max_iter must be positive".into());
        }
        crate::solver::backend_by_name(&s.backend).map(|_| ())
    }

    pub fn limits(&self) -> Limits {
        Limits {
            v_max: self.v_max,
            a_min: self.a_min,
            a_max: self.a_max,
            a_n_max: self.a_n_max,
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            joint: JointLimits {
                v_r_min: self.v_r_min,
                v_r_max: self.v_r_max,
                v_l_min: self.v_l_min,
                v_l_max: self.v_l_max,
            },
            geometry: WheelGeometry {
                track_width: self.track_width,
                wheel_radius: self.wheel_radius,
            },
        }
    }

    pub fn boundary(&self) -> BoundaryConditions {
        BoundaryConditions {
            v_s: self.v_s,
            v_f: self.v_f,
            omega_s: self.omega_s,
            omega_f: self.omega_f,
        }
    }

    pub fn options(&self) -> AssembleOptions {
        AssembleOptions {
            disable_angular: self.disable_angular,
            disable_joint: self.disable_joint,
            strict_joint: self.strict_joint,
            eps_ds: self.eps_ds,
            eps_dtheta: self.eps_dtheta,
        }
    }
}

/// Fits the waypoints and samples the curve at the configured resolution.
pub fn fit_path(w: &WaypointPath, cfg: &Config) -> Result<InitialTrajectory> {
    let u0 = cfg.u0.unwrap_or_else(|| w.chords()[0]);
    let curve = fit_with_u0(w, cfg.degree, u0)?;
    sample_initial_trajectory(&curve, cfg.resolution)
}

/// Samples ready for assembly, plus the fitting time (zero for pre-sampled input).
pub fn prepare(input: &PathInput, cfg: &Config) -> Result<(InitialTrajectory, f64)> {
    let start = Instant::now();
    let traj = match input {
        PathInput::Waypoints(w) => fit_path(w, cfg)?,
        PathInput::Samples(t) => t.clone(),
    };
    let t_fit = match input {
        PathInput::Waypoints(_) => start.elapsed().as_secs_f64(),
        PathInput::Samples(_) => 0.0,
    };
    Ok((merge_coincident(&traj, cfg.eps_ds)?, t_fit))
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub samples: InitialTrajectory,
    pub problem: DiscretizedProblem,
    pub solution: Solution,
    /// Present when the solve was optimal.
    pub trajectory: Option<TimedTrajectory>,
    pub report: PerformanceReport,
}

impl Plan {
    pub fn summary(&self) -> Summary {
        Summary::new(self.solution.status, self.problem.n, &self.report)
    }
}

/// Runs the whole pipeline. A non-optimal solve is returned as a plan without a
/// trajectory; malformed inputs and assembly conflicts are errors.
pub fn plan(input: &PathInput, cfg: &Config) -> Result<Plan> {
    cfg.validate()?;
    let (samples, t_fit) = prepare(input, cfg)?;
    plan_samples(samples, t_fit, cfg)
}

pub fn plan_samples(samples: InitialTrajectory, t_fit: f64, cfg: &Config) -> Result<Plan> {
    let lim = cfg.limits();
    let start = Instant::now();
    let problem = assemble(&samples, &lim, &cfg.boundary(), &cfg.options())?;
    let solution = solve(&problem, &cfg.solver)?;
    let t_c = start.elapsed().as_secs_f64();
    let (trajectory, report) = if solution.is_optimal() {
        let tt = reconstruct(&samples, &solution, &lim)?;
        let report = indexes(&tt, &samples, &lim, t_c, t_fit);
        (Some(tt), report)
    } else {
        let report = PerformanceReport {
            t_c,
            t_fit,
            t_f: f64::NAN,
            zeta: f64::NAN,
            rho: f64::NAN,
            chi: f64::NAN,
        };
        (None, report)
    };
    Ok(Plan {
        samples,
        problem,
        solution,
        trajectory,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolveStatus;

    #[test]
    fn config_defaults_round_trip() {
        let cfg = Config::from_json("{}").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.limits(), Limits::default());
        let back = Config::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let cfg = Config::from_json(r#"{"v_max": 1.5, "solver": {"max_iter": 10}}"#).unwrap();
        assert_eq!(cfg.v_max, 1.5);
        assert_eq!(cfg.solver.max_iter, 10);
    }

    #[test]
    fn config_rejects_unknown_and_invalid() {
        assert!(matches!(Config::from_json(r#"{"vmax": 1}"#), Err(Error::Json(_))));
        assert!(Config::from_json(r#"{"v_max": -1}"#).is_err());
        assert!(Config::from_json(r#"{"resolution": 0}"#).is_err());
        assert!(Config::from_json(r#"{"solver": {"backend": "simplex"}}"#).is_err());
    }

    #[test]
    fn straight_waypoints_plan_end_to_end() {
        let w = WaypointPath::new((0..=10).map(|i| [0.2 * i as f64, 0.0]).collect()).unwrap();
        let cfg = Config::default();
        let plan = plan(&PathInput::Waypoints(w), &cfg).unwrap();
        assert_eq!(plan.solution.status, SolveStatus::Optimal);
        let tt = plan.trajectory.as_ref().unwrap();
        let v = tt.speeds();
        let n = v.len();
        for k in 0..n {
            assert!((v[k] - v[n - 1 - k]).abs() <= 1e-5, "asymmetric at {k}");
        }
        assert!((plan.report.zeta - 1.0).abs() < 1e-6);
        assert!(plan.report.t_fit > 0.0);
    }

    #[test]
    fn fast_start_is_an_infeasibility() {
        let w = WaypointPath::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap();
        let cfg = Config {
            v_s: 1.0,
            ..Config::default()
        };
        let err = plan(&PathInput::Waypoints(w), &cfg).unwrap_err();
        assert!(err.is_infeasibility(), "{err}");
    }
}
