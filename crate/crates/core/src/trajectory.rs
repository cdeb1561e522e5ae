//! Timed trajectories rebuilt from optimal node speeds, performance indexes, and an
//! independent feasibility check.

use serde::{Deserialize, Serialize};

use crate::discretize::{segment_quantities, velocity_caps, ConstraintFamily, DiscretizedProblem, Limits, EPS_DS, V_SUM_MIN};
use crate::error::{Error, Result};
use crate::format::{fmt_sig, parse_rows};
use crate::kinematics::{body_to_wheel, omega_bounds_for_v, BodyVelocity};
use crate::solver::Solution;
use crate::spline::InitialTrajectory;

/// Tolerance of [`feasibility_check`], in each constraint's physical units.
pub const CHECK_TOL: f64 = 1e-6;

pub const CSV_HEADER: &str = "t,x,y,theta,v,omega,a,v_r,v_l";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

/// Quantities held constant (or linear, for speed) over one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentState {
    pub dt: f64,
    pub a: f64,
    pub omega: f64,
    pub v_r: f64,
    pub v_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedTrajectory {
    pub nodes: Vec<NodeState>,
    pub segments: Vec<SegmentState>,
}

impl TimedTrajectory {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.t)
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.v).collect()
    }

    /// One row per node; segment columns on the start node's row, zeros on the last.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.nodes.len() * 120);
        out.push_str(CSV_HEADER);
        out.push('\n');
        let zero = SegmentState {
            dt: 0.0,
            a: 0.0,
            omega: 0.0,
            v_r: 0.0,
            v_l: 0.0,
        };
        for (k, n) in self.nodes.iter().enumerate() {
            let s = self.segments.get(k).unwrap_or(&zero);
            let fields = [n.t, n.x, n.y, n.theta, n.v, s.omega, s.a, s.v_r, s.v_l];
            let row: Vec<String> = fields.iter().map(|&f| fmt_sig(f)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`TimedTrajectory::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = parse_rows(text, Some(CSV_HEADER))?;
        if rows.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "trajectory needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let mut nodes = Vec::with_capacity(rows.len());
        let mut segments = Vec::with_capacity(rows.len() - 1);
        for (k, (line, r)) in rows.iter().enumerate() {
            if r.len() != 9 {
                return Err(Error::Parse {
                    line: *line,
                    msg: format!("expected 9 columns, found {}", r.len()),
                });
            }
            nodes.push(NodeState {
                t: r[0],
                x: r[1],
                y: r[2],
                theta: r[3],
                v: r[4],
            });
            if k + 1 < rows.len() {
                segments.push(SegmentState {
                    dt: rows[k + 1].1[0] - r[0],
                    a: r[6],
                    omega: r[5],
                    v_r: r[7],
                    v_l: r[8],
                });
            }
        }
        Ok(TimedTrajectory { nodes, segments })
    }
}

/// Rebuilds times, accelerations, angular rates and wheel speeds from node speeds.
///
/// Wheel speeds use the segment's start-node speed with the segment's angular rate.
pub fn reconstruct(traj: &InitialTrajectory, sol: &Solution, lim: &Limits) -> Result<TimedTrajectory> {
    if !sol.is_optimal() {
        return Err(Error::InvalidInput(format!(
            "cannot rebuild a trajectory from a {:?} solution",
            sol.status
        )));
    }
    from_speeds(traj, &sol.v, lim)
}

/// Same as [`reconstruct`] for a bare speed vector.
pub fn from_speeds(traj: &InitialTrajectory, v: &[f64], lim: &Limits) -> Result<TimedTrajectory> {
    let n = traj.len();
    if v.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} speeds for {} samples",
            v.len(),
            n
        )));
    }
    let (ds, dtheta) = segment_quantities(traj, EPS_DS)?;
    let mut segments = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let sum = v[k] + v[k + 1];
        if !(sum > V_SUM_MIN) {
            return Err(Error::StalledSegment { index: k, sum });
        }
        let dt = 2.0 * ds[k] / sum;
        let a = (v[k + 1] * v[k + 1] - v[k] * v[k]) / (2.0 * ds[k]);
        let omega = dtheta[k] * sum / (2.0 * ds[k]);
        let w = body_to_wheel(BodyVelocity { v: v[k], omega }, &lim.geometry);
        segments.push(SegmentState {
            dt,
            a,
            omega,
            v_r: w.v_r,
            v_l: w.v_l,
        });
    }
    let mut t = 0.0;
    let mut nodes = Vec::with_capacity(n);
    for (k, s) in traj.samples.iter().enumerate() {
        nodes.push(NodeState {
            t,
            x: s.x,
            y: s.y,
            theta: s.theta,
            v: v[k],
        });
        if k + 1 < n {
            t += segments[k].dt;
        }
    }
    Ok(TimedTrajectory { nodes, segments })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    /// Assembly plus solve time.
    pub t_c: f64,
    /// Spline fitting and sampling time.
    pub t_fit: f64,
    pub t_f: f64,
    /// Peak speed relative to the speed cap.
    pub zeta: f64,
    /// Peak acceleration relative to its bound on the matching side.
    pub rho: f64,
    /// Peak angular rate relative to the joint-aware angular bound.
    pub chi: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Computes the normalized peak speed, acceleration and angular rate.
pub fn indexes(tt: &TimedTrajectory, traj: &InitialTrajectory, lim: &Limits, t_c: f64, t_fit: f64) -> PerformanceReport {
    let caps = velocity_caps(traj, lim);
    let zeta = tt
        .nodes
        .iter()
        .zip(&caps)
        .map(|(n, &c)| ratio(n.v, c))
        .fold(0.0, f64::max);
    let rho = tt
        .segments
        .iter()
        .map(|s| ratio(s.a, lim.a_max).max(ratio(s.a, lim.a_min)))
        .fold(0.0, f64::max);
    let chi = tt
        .segments
        .iter()
        .zip(&tt.nodes)
        .map(|(s, n)| match omega_bounds_for_v(n.v, &lim.joint, &lim.geometry) {
            Ok((lo, hi)) => {
                let upper = hi.min(lim.omega_max);
                let lower = lo.max(lim.omega_min);
                ratio(s.omega, upper).max(ratio(s.omega, lower))
            }
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    PerformanceReport {
        t_c,
        t_fit,
        t_f: tt.duration(),
        zeta,
        rho,
        chi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Node index for speed and boundary checks, segment index otherwise.
    pub index: usize,
    pub family: ConstraintFamily,
    /// Excess over the bound, in the constraint's physical unit.
    pub magnitude: f64,
}

/// Re-evaluates every constraint of `p` in physical units on the timed trajectory.
pub fn feasibility_check(tt: &TimedTrajectory, p: &DiscretizedProblem) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |index: usize, family: ConstraintFamily, value: f64, lo: f64, hi: f64| {
        let excess = (lo - value).max(value - hi);
        if excess > CHECK_TOL || value.is_nan() {
            out.push(Violation {
                index,
                family,
                magnitude: if value.is_nan() { f64::INFINITY } else { excess },
            });
        }
    };
    if tt.nodes.len() != p.n || tt.segments.len() + 1 != p.n {
        flag(0, ConstraintFamily::Boundary, f64::NAN, 0.0, 0.0);
        return out;
    }
    let lim = &p.limits;
    let jl = &lim.joint;
    for (k, node) in tt.nodes.iter().enumerate() {
        flag(k, ConstraintFamily::VelocityCap, node.v, 0.0, p.vcap[k]);
    }
    for (k, seg) in tt.segments.iter().enumerate() {
        let (v0, v1) = (tt.nodes[k].v, tt.nodes[k + 1].v);
        // a segment only has a finite duration when the speeds do not both vanish
        if !(v0 + v1 > 0.0) || !(seg.dt.is_finite() && seg.dt > 0.0) {
            flag(k, ConstraintFamily::SlackCone, f64::NAN, 0.0, 0.0);
            continue;
        }
        flag(k, ConstraintFamily::Acceleration, seg.a, lim.a_min, lim.a_max);
        if p.flags.angular_active[k] {
            flag(k, ConstraintFamily::AngularVelocity, seg.omega, lim.omega_min, lim.omega_max);
        }
        if p.flags.joint_active[k] {
            flag(k, ConstraintFamily::RightWheel, seg.v_r, jl.v_r_min, jl.v_r_max);
            flag(k, ConstraintFamily::LeftWheel, seg.v_l, jl.v_l_min, jl.v_l_max);
            if p.flags.strict_joint {
                let w = body_to_wheel(BodyVelocity { v: v1, omega: seg.omega }, &lim.geometry);
                flag(k, ConstraintFamily::RightWheel, w.v_r, jl.v_r_min, jl.v_r_max);
                flag(k, ConstraintFamily::LeftWheel, w.v_l, jl.v_l_min, jl.v_l_max);
            }
        }
    }
    let last = p.n - 1;
    let bc = &p.boundary;
    flag(0, ConstraintFamily::Boundary, tt.nodes[0].v, bc.v_s, bc.v_s);
    flag(last, ConstraintFamily::Boundary, tt.nodes[last].v, bc.v_f, bc.v_f);
    if p.pins.start_sum.is_some() {
        let w = tt.segments[0].omega;
        flag(0, ConstraintFamily::Boundary, w, bc.omega_s, bc.omega_s);
    }
    if p.pins.end_sum.is_some() {
        let w = tt.segments[last - 1].omega;
        flag(last - 1, ConstraintFamily::Boundary, w, bc.omega_f, bc.omega_f);
    }
    out
}

/// A maximal run of nodes with speed below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlowRegion {
    pub first: usize,
    pub last: usize,
    /// Node of lowest speed inside the run.
    pub slowest: usize,
}

/// Slow runs whose nodes all lie at least `margin` seconds away from both ends.
pub fn slow_regions(tt: &TimedTrajectory, threshold: f64, margin: f64) -> Vec<SlowRegion> {
    let end = tt.duration();
    let inside = |k: usize| tt.nodes[k].t >= margin && tt.nodes[k].t <= end - margin;
    let mut out = Vec::new();
    let mut current: Option<SlowRegion> = None;
    for (k, node) in tt.nodes.iter().enumerate() {
        if inside(k) && node.v < threshold {
            let r = current.get_or_insert(SlowRegion {
                first: k,
                last: k,
                slowest: k,
            });
            r.last = k;
            if node.v < tt.nodes[r.slowest].v {
                r.slowest = k;
            }
        } else if let Some(r) = current.take() {
            out.push(r);
        }
    }
    out.extend(current);
    out
}

/// The machine-readable run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: crate::solver::SolveStatus,
    pub n: usize,
    pub t_c: f64,
    pub t_fit: f64,
    pub t_f: f64,
    pub zeta: f64,
    pub rho: f64,
    pub chi: f64,
}

impl Summary {
    pub fn new(status: crate::solver::SolveStatus, n: usize, r: &PerformanceReport) -> Self {
        Summary {
            status,
            n,
            t_c: r.t_c,
            t_fit: r.t_fit,
            t_f: r.t_f,
            zeta: r.zeta,
            rho: r.rho,
            chi: r.chi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble, AssembleOptions, BoundaryConditions};
    use crate::kinematics::{integrate_pose, ControlPiece, JointLimits, Pose};
    use crate::solver::{solve, Settings, SolveStatus};
    use crate::spline::PathSample;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn straight(n: usize, ds: f64) -> InitialTrajectory {
        let samples = (0..n)
            .map(|k| PathSample {
                x: k as f64 * ds,
                y: 0.0,
                theta: 0.0,
                kappa: 0.0,
            })
            .collect();
        InitialTrajectory::new(samples, 1.0).unwrap()
    }

    fn arc(n: usize, radius: f64, sweep: f64) -> InitialTrajectory {
        let samples = (0..n)
            .map(|k| {
                let a = sweep * k as f64 / (n - 1) as f64;
                PathSample {
                    x: radius * a.sin(),
                    y: radius * (1.0 - a.cos()),
                    theta: a,
                    kappa: 1.0 / radius,
                }
            })
            .collect();
        InitialTrajectory::new(samples, 1.0).unwrap()
    }

    fn optimal(v: Vec<f64>) -> Solution {
        Solution {
            status: SolveStatus::Optimal,
            c: v.windows(2).map(|w| 1.0 / (w[0] + w[1])).collect(),
            v,
            objective_value: 0.0,
            iterations: 0,
            solve_time: 0.0,
            infeasible_family: None,
        }
    }

    #[test]
    fn bang_bang_reconstruction() {
        let tt = reconstruct(&straight(3, 0.5), &optimal(vec![0.0, 1.0, 0.0]), &Limits::default()).unwrap();
        assert_eq!(tt.segments[0].dt, 1.0);
        assert_eq!(tt.segments[1].dt, 1.0);
        assert_eq!(tt.duration(), 2.0);
        assert_eq!((tt.segments[0].a, tt.segments[1].a), (1.0, -1.0));
        for s in &tt.segments {
            assert_eq!(s.omega, 0.0);
        }
        assert_eq!((tt.segments[0].v_r, tt.segments[0].v_l), (0.0, 0.0));
        assert_eq!((tt.segments[1].v_r, tt.segments[1].v_l), (1.0, 1.0));
    }

    #[test]
    fn turning_segment_arithmetic() {
        // Δs = 0.3 along a chord, heading change 0.5
        let samples = vec![
            PathSample { x: 0.0, y: 0.0, theta: 0.0, kappa: 0.0 },
            PathSample { x: 0.3, y: 0.0, theta: 0.5, kappa: 0.0 },
        ];
        let traj = InitialTrajectory::new(samples, 1.0).unwrap();
        let tt = from_speeds(&traj, &[0.2, 0.4], &Limits::default()).unwrap();
        let s = tt.segments[0];
        assert_abs_diff_eq!(s.dt, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.a, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.omega, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn stalled_segment_is_an_error() {
        let r = from_speeds(&straight(3, 0.5), &[0.0, 0.0, 1.0], &Limits::default());
        assert!(matches!(r, Err(Error::StalledSegment { index: 0, .. })));
        let mut sol = optimal(vec![0.0, 1.0, 0.0]);
        sol.status = SolveStatus::Infeasible;
        assert!(reconstruct(&straight(3, 0.5), &sol, &Limits::default()).is_err());
    }

    #[test]
    fn half_of_every_bound_gives_half_indexes() {
        // constant speed on an arc: accelerate at half a_max, then hold
        let lim = Limits {
            joint: JointLimits::symmetric(100.0),
            ..Limits::default()
        };
        let traj = arc(3, 1.0, 0.2);
        let (ds, dth) = segment_quantities(&traj, EPS_DS).unwrap();
        let caps = velocity_caps(&traj, &lim);
        let v0 = 0.5 * caps[0];
        // ω = Δθ v / Δs on a constant-speed segment; choose v to put ω at half its bound
        let v_omega = 0.5 * lim.omega_max * ds[0] / dth[0];
        let v = v0.min(v_omega);
        let tt = from_speeds(&traj, &[v, v, v], &lim).unwrap();
        let r = indexes(&tt, &traj, &lim, 0.0, 0.0);
        assert_abs_diff_eq!(r.zeta, v / caps[0], epsilon = 1e-12);
        assert_eq!(r.rho, 0.0);
        assert!(r.chi <= 0.5 + 1e-12);

        let tt = from_speeds(&straight(2, 1.0), &[0.0, 1.0], &lim).unwrap();
        let r = indexes(&tt, &straight(2, 1.0), &Limits { v_max: 2.0, ..lim }, 0.0, 0.0);
        assert_abs_diff_eq!(r.rho, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.zeta, 0.5, epsilon = 1e-12);
        let tt = from_speeds(&straight(2, 1.0), &[1.0, 0.0], &lim).unwrap();
        let r = indexes(&tt, &straight(2, 1.0), &Limits { v_max: 2.0, ..lim }, 0.0, 0.0);
        assert_abs_diff_eq!(r.rho, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn chi_uses_joint_aware_bound() {
        // at v = 0.375 with ±0.75 wheels and d = 0.35, |ω| <= 15/7 from the wheels,
        // which is looser than ω_max = 2, so χ normalizes against 2
        let lim = Limits::default();
        let traj = arc(2, 0.2, 0.05);
        let ds = segment_quantities(&traj, EPS_DS).unwrap().0[0];
        let dth = 0.05;
        let v = 0.375;
        let omega = dth * 2.0 * v / (2.0 * ds);
        let tt = from_speeds(&traj, &[v, v], &lim).unwrap();
        let r = indexes(&tt, &traj, &lim, 0.0, 0.0);
        assert_abs_diff_eq!(r.chi, omega / 2.0, epsilon = 1e-12);
        // at v = 0.7 the wheels allow only |ω| <= 2 (0.75 - 0.7) / 0.35 = 2/7
        let v = 0.7;
        let omega = dth * v / ds;
        let tt = from_speeds(&traj, &[v, v], &lim).unwrap();
        let r = indexes(&tt, &traj, &lim, 0.0, 0.0);
        assert_abs_diff_eq!(r.chi, omega / (2.0 / 7.0), epsilon = 1e-9);
    }

    #[test]
    fn hand_built_cap_violation() {
        let lim = Limits::default();
        let traj = straight(4, 0.3);
        let p = assemble(&traj, &lim, &BoundaryConditions::default(), &AssembleOptions::default()).unwrap();
        let sol = solve(&p, &Settings::default()).unwrap();
        let mut v = sol.v.clone();
        v[1] = p.vcap[1] * 1.1;
        // keep acceleration legal by checking a slow, long path
        let tt = from_speeds(&traj, &v, &lim).unwrap();
        let viol = feasibility_check(&tt, &p);
        assert!(viol
            .iter()
            .any(|x| x.family == ConstraintFamily::VelocityCap && x.index == 1));
        assert!(viol
            .iter()
            .filter(|x| x.family == ConstraintFamily::VelocityCap)
            .all(|x| x.index == 1));
    }

    #[test]
    fn csv_round_trip_and_header() {
        let tt = from_speeds(&arc(5, 2.0, 0.4), &[0.0, 0.3, 0.35, 0.2, 0.0], &Limits::default()).unwrap();
        let csv = tt.to_csv();
        assert!(csv.starts_with("t,x,y,theta,v,omega,a,v_r,v_l\n"));
        let last = csv.lines().last().unwrap();
        assert!(last.ends_with(",0,0,0,0"), "{last}");
        let back = TimedTrajectory::from_csv(&csv).unwrap();
        for (a, b) in back.nodes.iter().zip(&tt.nodes) {
            assert!((a.v - b.v).abs() <= 1e-9 * (1.0 + b.v.abs()));
            assert!((a.t - b.t).abs() <= 1e-8 * (1.0 + b.t.abs()));
        }
        let truncated: String = csv.lines().take(3).collect::<Vec<_>>().join("\n") + "\n0.5,1";
        assert!(TimedTrajectory::from_csv(&truncated).is_err());
    }

    #[test]
    fn slow_regions_are_maximal_runs() {
        let v = [0.0, 0.2, 0.5, 0.1, 0.05, 0.4, 0.2, 0.5, 0.0];
        let traj = straight(v.len(), 0.5);
        let mut tt = from_speeds(&traj, &[0.0, 0.3, 0.5, 0.5, 0.5, 0.5, 0.5, 0.3, 0.0], &Limits::default()).unwrap();
        for (node, &s) in tt.nodes.iter_mut().zip(&v) {
            node.v = s;
        }
        let all = slow_regions(&tt, 0.3, 0.0);
        assert_eq!(all.len(), 4);
        assert_eq!((all[1].first, all[1].last, all[1].slowest), (3, 4, 4));
        let t1 = tt.nodes[1].t;
        let inner = slow_regions(&tt, 0.3, t1 + 1e-9);
        assert_eq!(inner.len(), 2);
    }

    #[test]
    fn summary_json_keys() {
        let r = PerformanceReport {
            t_c: 0.1,
            t_fit: 0.0,
            t_f: 3.0,
            zeta: 1.0,
            rho: 1.0,
            chi: 0.5,
        };
        let j = serde_json::to_value(Summary::new(SolveStatus::Optimal, 7, &r)).unwrap();
        let mut keys: Vec<&str> = j.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["chi", "n", "rho", "status", "t_c", "t_f", "t_fit", "zeta"]);
        assert_eq!(j["status"], "optimal");
    }

    fn curvy(seed: u64, n: usize) -> InitialTrajectory {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::with_capacity(n);
        let (mut x, mut y, mut th, mut kappa) = (0.0f64, 0.0f64, 0.0f64, 0.0);
        for _ in 0..n {
            samples.push(PathSample { x, y, theta: th, kappa });
            let ds: f64 = rng.gen_range(0.02..0.1);
            let dth: f64 = rng.gen_range(-0.1..0.1);
            kappa = (dth / ds).abs();
            x += ds * (th + dth / 2.0).cos();
            y += ds * (th + dth / 2.0).sin();
            th += dth;
        }
        InitialTrajectory::new(samples, 1.0).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn solved_trajectories_are_consistent(seed in 0u64..1000, n in 3usize..60) {
            let traj = curvy(seed, n);
            let lim = Limits::default();
            let p = assemble(&traj, &lim, &BoundaryConditions::default(), &AssembleOptions::default()).unwrap();
            let sol = solve(&p, &Settings::default()).unwrap();
            let tt = reconstruct(&traj, &sol, &lim).unwrap();
            prop_assert!((tt.duration() - sol.objective_value).abs() <= 1e-6);
            prop_assert!(feasibility_check(&tt, &p).is_empty());
            let r = indexes(&tt, &traj, &lim, 0.0, 0.0);
            prop_assert!(r.zeta <= 1.0 + 1e-6 && r.rho <= 1.0 + 1e-6 && r.chi <= 1.0 + 1e-6, "{:?}", r);
            let g = &p.g;
            for k in 0..n - 1 {
                let s = tt.segments[k];
                prop_assert!((s.omega * s.dt - p.dtheta[k]).abs() <= 1e-12);
                prop_assert!((tt.nodes[k].v + s.a * s.dt - tt.nodes[k + 1].v).abs() <= 1e-9);
                let (v0, v1) = (tt.nodes[k].v, tt.nodes[k + 1].v);
                prop_assert!((s.v_r - ((1.0 + g[k]) * v0 + g[k] * v1)).abs() <= 1e-12);
                prop_assert!((s.v_l - ((1.0 - g[k]) * v0 - g[k] * v1)).abs() <= 1e-12);
                prop_assert!(tt.nodes[k + 1].t > tt.nodes[k].t);
            }
        }

        #[test]
        fn doubled_limits_stay_within_bounds(seed in 0u64..1000, n in 3usize..40) {
            let traj = curvy(seed, n);
            let lim = Limits::default();
            let wide = Limits {
                v_max: 2.0 * lim.v_max,
                a_min: 2.0 * lim.a_min,
                a_max: 2.0 * lim.a_max,
                a_n_max: 2.0 * lim.a_n_max,
                omega_min: 2.0 * lim.omega_min,
                omega_max: 2.0 * lim.omega_max,
                joint: JointLimits::symmetric(1.5),
                ..lim
            };
            let p = assemble(&traj, &wide, &BoundaryConditions::default(), &AssembleOptions::default()).unwrap();
            let sol = solve(&p, &Settings::default()).unwrap();
            let tt = reconstruct(&traj, &sol, &wide).unwrap();
            let r = indexes(&tt, &traj, &wide, 0.0, 0.0);
            prop_assert!(r.zeta <= 1.0 + 1e-6 && r.rho <= 1.0 + 1e-6 && r.chi <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn pose_chain_follows_samples() {
        let traj = arc(200, 2.0, 1.5);
        let lim = Limits::default();
        let p = assemble(&traj, &lim, &BoundaryConditions::default(), &AssembleOptions::default()).unwrap();
        let sol = solve(&p, &Settings::default()).unwrap();
        let tt = reconstruct(&traj, &sol, &lim).unwrap();
        for k in 0..tt.segments.len() {
            let n = &tt.nodes[k];
            let s = &tt.segments[k];
            let piece = ControlPiece {
                v: 0.5 * (n.v + tt.nodes[k + 1].v),
                omega: s.omega,
                duration: s.dt,
            };
            let end = *integrate_pose(Pose::new(n.x, n.y, n.theta), &[piece]).unwrap().last().unwrap();
            let next = &tt.nodes[k + 1];
            let miss = (end.x - next.x).hypot(end.y - next.y);
            assert!(miss <= 0.05 * p.ds[k], "segment {k}: {miss}");
        }
    }
}
