//! Turns a sampled path plus limits into the data of the speed-profile conic program.
//!
//! Unknowns are the node speeds `v_k` (k = 0..n) and one slack `c_k` per segment,
//! with `c_k (v_k + v_{k+1}) >= 1` so that `2 Δs_k c_k` upper-bounds the segment time.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{wrap_angle, JointLimits, WheelGeometry};
use crate::spline::{InitialTrajectory, PathSample};

pub const EPS_DS: f64 = 1e-6;
pub const EPS_DTHETA: f64 = 1e-6;
/// Smallest admissible `v_k + v_{k+1}` when turning speeds back into times.
pub const V_SUM_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_n_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub joint: JointLimits,
    pub geometry: WheelGeometry,
}

impl Default for Limits {
    /// The reference robot: 0.6 m/s, ±1 m/s², 0.6 m/s² lateral, ±2 rad/s,
    /// ±0.75 m/s per wheel, 0.35 m track.
    fn default() -> Self {
        Limits {
            v_max: 0.6,
            a_min: -1.0,
            a_max: 1.0,
            a_n_max: 0.6,
            omega_min: -2.0,
            omega_max: 2.0,
            joint: JointLimits::symmetric(0.75),
            geometry: WheelGeometry {
                track_width: 0.35,
                wheel_radius: None,
            },
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return bad("v_max must be positive");
        }
        if !(self.a_min < 0.0 && self.a_max > 0.0) || !self.a_min.is_finite() || !self.a_max.is_finite() {
            return bad("acceleration bounds must satisfy a_min < 0 < a_max");
        }
        if !(self.a_n_max > 0.0 && self.a_n_max.is_finite()) {
            return bad("a_n_max must be positive");
        }
        if !(self.omega_min < 0.0 && self.omega_max > 0.0)
            || !self.omega_min.is_finite()
            || !self.omega_max.is_finite()
        {
            return bad("angular bounds must satisfy omega_min < 0 < omega_max");
        }
        self.joint.validate()?;
        self.geometry.validate()
    }

    pub fn scaled(&self, velocity: f64, accel: f64, omega: f64) -> Limits {
        Limits {
            v_max: self.v_max * velocity,
            a_min: self.a_min * accel,
            a_max: self.a_max * accel,
            omega_min: self.omega_min * omega,
            omega_max: self.omega_max * omega,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub v_s: f64,
    pub v_f: f64,
    pub omega_s: f64,
    pub omega_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssembleOptions {
    pub disable_angular: bool,
    pub disable_joint: bool,
    /// Also bound wheel speeds evaluated at the segment end node.
    pub strict_joint: bool,
    pub eps_ds: f64,
    pub eps_dtheta: f64,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            disable_angular: false,
            disable_joint: false,
            strict_joint: false,
            eps_ds: EPS_DS,
            eps_dtheta: EPS_DTHETA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    VelocityCap,
    Acceleration,
    AngularVelocity,
    RightWheel,
    LeftWheel,
    Boundary,
    SlackCone,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintFamily::VelocityCap => "velocity cap",
            ConstraintFamily::Acceleration => "linear acceleration",
            ConstraintFamily::AngularVelocity => "angular velocity",
            ConstraintFamily::RightWheel => "right wheel speed",
            ConstraintFamily::LeftWheel => "left wheel speed",
            ConstraintFamily::Boundary => "boundary condition",
            ConstraintFamily::SlackCone => "time slack cone",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProblemFlags {
    pub angular_active: Vec<bool>,
    pub joint_active: Vec<bool>,
    pub strict_joint: bool,
}

/// Required `v_0 + v_1` (start) and `v_{n-2} + v_{n-1}` (end) implied by the
/// angular boundary conditions, when they constrain anything.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryPins {
    pub start_sum: Option<f64>,
    pub end_sum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedProblem {
    pub n: usize,
    pub ds: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub vcap: Vec<f64>,
    pub abar: Vec<f64>,
    pub aunder: Vec<f64>,
    /// Zero on segments whose angular constraint is inactive, like `wbar`/`wunder`.
    pub h: Vec<f64>,
    pub wbar: Vec<f64>,
    pub wunder: Vec<f64>,
    pub g: Vec<f64>,
    pub flags: ProblemFlags,
    pub boundary: BoundaryConditions,
    pub pins: BoundaryPins,
    pub limits: Limits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    V(usize),
    C(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `lower <= Σ coef * var <= upper`; an equality when both bounds coincide.
    Linear {
        family: ConstraintFamily,
        index: usize,
        terms: Vec<(Var, f64)>,
        lower: Option<f64>,
        upper: Option<f64>,
    },
    /// `c_k (v_k + v_{k+1}) >= 1`.
    Cone { segment: usize },
}

impl Constraint {
    pub fn family(&self) -> ConstraintFamily {
        match self {
            Constraint::Linear { family, .. } => *family,
            Constraint::Cone { .. } => ConstraintFamily::SlackCone,
        }
    }

    /// Amount by which `(v, c)` violates this constraint (0 when satisfied).
    pub fn violation(&self, v: &[f64], c: &[f64]) -> f64 {
        match self {
            Constraint::Linear {
                terms, lower, upper, ..
            } => {
                let val: f64 = terms
                    .iter()
                    .map(|(var, a)| {
                        a * match var {
                            Var::V(i) => v[*i],
                            Var::C(i) => c[*i],
                        }
                    })
                    .sum();
                let lo = lower.map_or(0.0, |l| (l - val).max(0.0));
                let hi = upper.map_or(0.0, |u| (val - u).max(0.0));
                lo.max(hi)
            }
            Constraint::Cone { segment: k } => {
                let s = v[*k] + v[*k + 1];
                if c[*k] < 0.0 || s < 0.0 {
                    return f64::INFINITY;
                }
                (1.0 - c[*k] * s).max(0.0)
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Linear {
                family,
                index,
                terms,
                lower,
                upper,
            } => {
                write!(f, "[{family} #{index}] ")?;
                if let (Some(l), Some(u)) = (lower, upper) {
                    if l == u {
                        write_terms(f, terms)?;
                        return write!(f, " = {l:e}");
                    }
                }
                if let Some(l) = lower {
                    write!(f, "{l:e} <= ")?;
                }
                write_terms(f, terms)?;
                if let Some(u) = upper {
                    write!(f, " <= {u:e}")?;
                }
                Ok(())
            }
            Constraint::Cone { segment } => write!(
                f,
                "[{} #{segment}] c{segment} * (v{segment} + v{}) >= 1",
                ConstraintFamily::SlackCone,
                segment + 1
            ),
        }
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[(Var, f64)]) -> fmt::Result {
    for (i, (var, a)) in terms.iter().enumerate() {
        if i > 0 {
            f.write_str(" + ")?;
        }
        match var {
            Var::V(k) => write!(f, "{a:e}*v{k}")?,
            Var::C(k) => write!(f, "{a:e}*c{k}")?,
        }
    }
    Ok(())
}

/// Drops samples closer than `eps` to the previously kept one. The final sample
/// is always kept (it replaces a coincident predecessor).
pub fn merge_coincident(traj: &InitialTrajectory, eps: f64) -> Result<InitialTrajectory> {
    let mut kept: Vec<PathSample> = Vec::with_capacity(traj.len());
    let last = traj.samples.len() - 1;
    for (i, s) in traj.samples.iter().enumerate() {
        match kept.last() {
            Some(prev) if (s.x - prev.x).hypot(s.y - prev.y) < eps => {
                if i == last && kept.len() > 1 {
                    *kept.last_mut().unwrap() = *s;
                }
            }
            _ => kept.push(*s),
        }
    }
    InitialTrajectory::new(kept, traj.resolution)
}

/// Chord length and wrapped heading change of every segment.
pub fn segment_quantities(traj: &InitialTrajectory, eps_ds: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if traj.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    let mut ds = Vec::with_capacity(traj.len() - 1);
    let mut dth = Vec::with_capacity(traj.len() - 1);
    for (k, w) in traj.samples.windows(2).enumerate() {
        let d = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
        if d < eps_ds {
            return Err(Error::DuplicatePoints {
                index: k + 1,
                distance: d,
            });
        }
        ds.push(d);
        dth.push(wrap_angle(w[1].theta - w[0].theta));
    }
    Ok((ds, dth))
}

/// `min(v_max, sqrt(a_n_max / κ))` per node.
pub fn velocity_caps(traj: &InitialTrajectory, lim: &Limits) -> Vec<f64> {
    traj.samples
        .iter()
        .map(|s| {
            if s.kappa > 0.0 {
                lim.v_max.min((lim.a_n_max / s.kappa).sqrt())
            } else {
                lim.v_max
            }
        })
        .collect()
}

/// Bounds on `v_{k+1}^2 - v_k^2`: `(2 Δs a_max, 2 Δs a_min)`.
pub fn accel_coeffs(ds: &[f64], lim: &Limits) -> (Vec<f64>, Vec<f64>) {
    assert!(
        lim.a_min < 0.0 && lim.a_max > 0.0,
        "acceleration bounds must straddle zero"
    );
    let abar = ds.iter().map(|d| 2.0 * d * lim.a_max).collect();
    let aunder = ds.iter().map(|d| 2.0 * d * lim.a_min).collect();
    (abar, aunder)
}

pub struct OmegaCoeffs {
    pub h: Vec<f64>,
    pub wbar: Vec<f64>,
    pub wunder: Vec<f64>,
    pub active: Vec<bool>,
}

/// Bounds on `v_k + v_{k+1}` from the angular rate limits, with `h = 2 Δs / Δθ`.
/// Segments with `|Δθ| < eps_dtheta` are inactive and carry zeros.
pub fn omega_coeffs(ds: &[f64], dtheta: &[f64], lim: &Limits, eps_dtheta: f64) -> OmegaCoeffs {
    let m = ds.len();
    let mut out = OmegaCoeffs {
        h: vec![0.0; m],
        wbar: vec![0.0; m],
        wunder: vec![0.0; m],
        active: vec![false; m],
    };
    for k in 0..m {
        if dtheta[k].abs() < eps_dtheta {
            continue;
        }
        let h = 2.0 * ds[k] / dtheta[k];
        let (a, b) = (h * lim.omega_max, h * lim.omega_min);
        out.h[k] = h;
        out.wunder[k] = a.min(b);
        out.wbar[k] = a.max(b);
        out.active[k] = true;
    }
    out
}

/// `g = d Δθ / (4 Δs)`, the coupling of segment rotation into wheel speeds.
pub fn joint_coeffs(ds: &[f64], dtheta: &[f64], geometry: &WheelGeometry) -> Vec<f64> {
    ds.iter()
        .zip(dtheta)
        .map(|(d, t)| geometry.track_width * t / (4.0 * d))
        .collect()
}

pub fn assemble(
    traj: &InitialTrajectory,
    lim: &Limits,
    bc: &BoundaryConditions,
    opts: &AssembleOptions,
) -> Result<DiscretizedProblem> {
    lim.validate()?;
    let (ds, dtheta) = segment_quantities(traj, opts.eps_ds)?;
    let n = traj.len();
    let vcap = velocity_caps(traj, lim);
    let (abar, aunder) = accel_coeffs(&ds, lim);
    let om = omega_coeffs(&ds, &dtheta, lim, opts.eps_dtheta);
    let g = joint_coeffs(&ds, &dtheta, &lim.geometry);
    let angular_active: Vec<bool> = om.active.iter().map(|&a| a && !opts.disable_angular).collect();
    let joint_active = vec![!opts.disable_joint; n - 1];

    let tol = 1e-12;
    if !(bc.v_s >= 0.0 && bc.v_s <= vcap[0] + tol) {
        return Err(Error::BoundaryInfeasible(format!(
            "start speed {} must lie in [0, {}] (the velocity cap at the first node)",
            bc.v_s, vcap[0]
        )));
    }
    if !(bc.v_f >= 0.0 && bc.v_f <= vcap[n - 1] + tol) {
        return Err(Error::BoundaryInfeasible(format!(
            "final speed {} must lie in [0, {}] (the velocity cap at the last node)",
            bc.v_f,
            vcap[n - 1]
        )));
    }
    for (name, w) in [("start", bc.omega_s), ("final", bc.omega_f)] {
        if !(w >= lim.omega_min && w <= lim.omega_max) {
            return Err(Error::BoundaryInfeasible(format!(
                "{name} angular rate {w} must lie in [{}, {}]",
                lim.omega_min, lim.omega_max
            )));
        }
    }

    let pin = |name: &str, k: usize, v_end: f64, omega: f64| -> Result<Option<f64>> {
        if dtheta[k].abs() < opts.eps_dtheta {
            if omega != 0.0 {
                return Err(Error::BoundaryInfeasible(format!(
                    "{name} angular rate {omega} requested on a straight end segment"
                )));
            }
            return Ok(None);
        }
        if !angular_active[k] {
            return Ok(None);
        }
        if omega == 0.0 && v_end == 0.0 {
            // at rest: the robot is not turning at the end node
            return Ok(None);
        }
        let sum = 2.0 * ds[k] * omega / dtheta[k];
        if sum < v_end + V_SUM_MIN {
            return Err(Error::BoundaryInfeasible(format!(
                "{name} angular rate {omega} cannot be met with end speed {v_end} on a segment turning by {}",
                dtheta[k]
            )));
        }
        Ok(Some(sum))
    };
    let pins = BoundaryPins {
        start_sum: pin("start", 0, bc.v_s, bc.omega_s)?,
        end_sum: pin("final", n - 2, bc.v_f, bc.omega_f)?,
    };

    Ok(DiscretizedProblem {
        n,
        ds,
        dtheta,
        vcap,
        abar,
        aunder,
        h: om.h,
        wbar: om.wbar,
        wunder: om.wunder,
        g,
        flags: ProblemFlags {
            angular_active,
            joint_active,
            strict_joint: opts.strict_joint,
        },
        boundary: *bc,
        pins,
        limits: *lim,
    })
}

impl DiscretizedProblem {
    pub fn segments(&self) -> usize {
        self.n - 1
    }

    /// The full constraint list in the order node bounds, per-segment rows, cones,
    /// then boundary equalities.
    pub fn constraints(&self) -> Vec<Constraint> {
        use ConstraintFamily::*;
        use Var::{C, V};
        let jl = &self.limits.joint;
        let mut out = Vec::with_capacity(self.n + 8 * self.segments());
        for k in 0..self.n {
            out.push(Constraint::Linear {
                family: VelocityCap,
                index: k,
                terms: vec![(V(k), 1.0)],
                lower: Some(0.0),
                upper: Some(self.vcap[k]),
            });
        }
        for k in 0..self.segments() {
            out.push(Constraint::Linear {
                family: Acceleration,
                index: k,
                terms: vec![(V(k + 1), 1.0), (V(k), -1.0), (C(k), -self.abar[k])],
                lower: None,
                upper: Some(0.0),
            });
            out.push(Constraint::Linear {
                family: Acceleration,
                index: k,
                terms: vec![(V(k), 1.0), (V(k + 1), -1.0), (C(k), self.aunder[k])],
                lower: None,
                upper: Some(0.0),
            });
            if self.flags.angular_active[k] {
                out.push(Constraint::Linear {
                    family: AngularVelocity,
                    index: k,
                    terms: vec![(V(k), 1.0), (V(k + 1), 1.0)],
                    lower: Some(self.wunder[k]),
                    upper: Some(self.wbar[k]),
                });
            }
            if self.flags.joint_active[k] {
                let g = self.g[k];
                out.push(Constraint::Linear {
                    family: RightWheel,
                    index: k,
                    terms: vec![(V(k), 1.0 + g), (V(k + 1), g)],
                    lower: Some(jl.v_r_min),
                    upper: Some(jl.v_r_max),
                });
                out.push(Constraint::Linear {
                    family: LeftWheel,
                    index: k,
                    terms: vec![(V(k), 1.0 - g), (V(k + 1), -g)],
                    lower: Some(jl.v_l_min),
                    upper: Some(jl.v_l_max),
                });
                if self.flags.strict_joint {
                    out.push(Constraint::Linear {
                        family: RightWheel,
                        index: k,
                        terms: vec![(V(k), g), (V(k + 1), 1.0 + g)],
                        lower: Some(jl.v_r_min),
                        upper: Some(jl.v_r_max),
                    });
                    out.push(Constraint::Linear {
                        family: LeftWheel,
                        index: k,
                        terms: vec![(V(k), -g), (V(k + 1), 1.0 - g)],
                        lower: Some(jl.v_l_min),
                        upper: Some(jl.v_l_max),
                    });
                }
            }
        }
        for k in 0..self.segments() {
            out.push(Constraint::Cone { segment: k });
        }
        let last = self.n - 1;
        let eq = |index: usize, terms: Vec<(Var, f64)>, value: f64| Constraint::Linear {
            family: Boundary,
            index,
            terms,
            lower: Some(value),
            upper: Some(value),
        };
        out.push(eq(0, vec![(V(0), 1.0)], self.boundary.v_s));
        out.push(eq(last, vec![(V(last), 1.0)], self.boundary.v_f));
        if let Some(s) = self.pins.start_sum {
            out.push(eq(0, vec![(V(0), 1.0), (V(1), 1.0)], s));
        }
        if let Some(s) = self.pins.end_sum {
            out.push(eq(last - 1, vec![(V(last - 1), 1.0), (V(last), 1.0)], s));
        }
        out
    }

    /// Every constraint violated by more than `tol` at `(v, c)`.
    pub fn violated(&self, v: &[f64], c: &[f64], tol: f64) -> Vec<(Constraint, f64)> {
        self.constraints()
            .into_iter()
            .filter_map(|con| {
                let e = con.violation(v, c);
                (e > tol).then_some((con, e))
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
