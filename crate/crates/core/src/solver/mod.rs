//! Solving the speed-profile conic program.
//!
//! [`ConicProgram`] is the backend-neutral form: node speeds and per-segment time
//! slacks, linear rows `a·x <= b`, and rotated cones `c_k (v_k + v_{k+1}) >= 1`.
//! Boundary equalities are substituted out before a backend sees the program.

mod barrier;
mod cone;
mod dp;
mod hsde;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::discretize::{Constraint, ConstraintFamily, DiscretizedProblem, Var};
use crate::error::{Error, Result};

pub use dp::{dp_oracle, OracleResult, DP_GUARD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
    pub backend: String,
    /// Re-solve with exact-acceleration cuts until every slack cone is tight.
    pub tighten: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            max_iter: 200,
            backend: "ipm".into(),
            tighten: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub v: Vec<f64>,
    pub c: Vec<f64>,
    /// `Σ 2 Δs_k c_k`, seconds.
    pub objective_value: f64,
    pub iterations: usize,
    pub solve_time: f64,
    /// Constraint family blamed for infeasibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasible_family: Option<ConstraintFamily>,
}

impl Solution {
    fn infeasible(family: ConstraintFamily) -> Self {
        Solution {
            status: SolveStatus::Infeasible,
            v: Vec::new(),
            c: Vec::new(),
            objective_value: f64::INFINITY,
            iterations: 0,
            solve_time: 0.0,
            infeasible_family: Some(family),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Turns a non-optimal status into the matching error.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(Error::Infeasible {
                family: self.infeasible_family.unwrap_or(ConstraintFamily::Boundary),
            }),
            SolveStatus::MaxIterations => Err(Error::MaxIterations(self.iterations)),
        }
    }
}

/// Linear row `Σ coef_j x[idx_j] <= rhs` over at most three variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub idx: [usize; 3],
    pub coef: [f64; 3],
    pub len: u8,
    pub rhs: f64,
    pub family: ConstraintFamily,
}

impl Row {
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len as usize).map(move |j| (self.idx[j], self.coef[j]))
    }
}

/// `c (σ_free + σ_const) >= 1` where `σ_free` sums the unfixed speeds of the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeBlock {
    pub c: usize,
    pub v: [Option<usize>; 2],
    pub sigma_const: f64,
}

/// Variables are interleaved as `[v_0, c_0, v_1, c_1, ..., c_{n-2}, v_{n-1}]`, so every
/// row and cone touches a window of three consecutive indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub n: usize,
    /// Objective coefficient of every variable (`2 Δs_k` on `c_k`, zero on speeds).
    pub objective: Vec<f64>,
    /// Values of speeds fixed by boundary conditions.
    pub fixed: Vec<Option<f64>>,
    pub rows: Vec<Row>,
    pub cones: Vec<ConeBlock>,
}

pub fn v_index(k: usize) -> usize {
    2 * k
}

pub fn c_index(k: usize) -> usize {
    2 * k + 1
}

/// Why a program could not be built: a constraint that is violated by the fixed
/// boundary values alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildConflict(pub ConstraintFamily);

impl ConicProgram {
    pub fn from_problem(p: &DiscretizedProblem) -> std::result::Result<Self, BuildConflict> {
        let n = p.n;
        let nx = 2 * n - 1;
        let constraints = p.constraints();
        let scale_tol = |v: f64| 1e-12 * (1.0 + v.abs());

        // Boundary equalities: single-variable ones first, then sums with one side known.
        let mut fixed: Vec<Option<f64>> = vec![None; n];
        let equalities: Vec<(&Vec<(Var, f64)>, f64)> = constraints
            .iter()
            .filter_map(|c| match c {
                Constraint::Linear {
                    terms,
                    lower: Some(l),
                    upper: Some(u),
                    ..
                } if l == u => Some((terms, *l)),
                _ => None,
            })
            .collect();
        let mut pending: Vec<(&Vec<(Var, f64)>, f64)> = Vec::new();
        for (terms, value) in equalities {
            if terms.len() == 1 {
                let (Var::V(k), a) = terms[0] else {
                    unreachable!("boundary rows only touch speeds")
                };
                let val = value / a;
                match fixed[k] {
                    Some(old) if (old - val).abs() > scale_tol(val) => {
                        return Err(BuildConflict(ConstraintFamily::Boundary))
                    }
                    _ => fixed[k] = Some(val),
                }
            } else {
                pending.push((terms, value));
            }
        }
        let mut progress = true;
        while progress && !pending.is_empty() {
            progress = false;
            let mut rest = Vec::new();
            for (terms, value) in pending {
                let unknown: Vec<(usize, f64)> = terms
                    .iter()
                    .filter_map(|(var, a)| match var {
                        Var::V(k) if fixed[*k].is_none() => Some((*k, *a)),
                        _ => None,
                    })
                    .collect();
                let known: f64 = terms
                    .iter()
                    .filter_map(|(var, a)| match var {
                        Var::V(k) => fixed[*k].map(|f| a * f),
                        Var::C(_) => None,
                    })
                    .sum();
                match unknown.as_slice() {
                    [] => {
                        if (known - value).abs() > scale_tol(value) {
                            return Err(BuildConflict(ConstraintFamily::Boundary));
                        }
                        progress = true;
                    }
                    [(k, a)] => {
                        fixed[*k] = Some((value - known) / a);
                        progress = true;
                    }
                    _ => rest.push((terms, value)),
                }
            }
            pending = rest;
        }
        if !pending.is_empty() {
            return Err(BuildConflict(ConstraintFamily::Boundary));
        }

        let mut objective = vec![0.0; nx];
        for k in 0..n - 1 {
            objective[c_index(k)] = 2.0 * p.ds[k];
        }

        let mut prog = ConicProgram {
            n,
            objective,
            fixed,
            rows: Vec::with_capacity(constraints.len() * 2),
            cones: Vec::with_capacity(n - 1),
        };
        for con in &constraints {
            match con {
                Constraint::Linear {
                    family,
                    terms,
                    lower,
                    upper,
                    ..
                } => {
                    if lower.is_some() && lower == upper {
                        continue;
                    }
                    if let Some(u) = upper {
                        prog.push_row(*family, terms, 1.0, *u)?;
                    }
                    if let Some(l) = lower {
                        prog.push_row(*family, terms, -1.0, *l)?;
                    }
                }
                Constraint::Cone { segment: k } => {
                    let mut block = ConeBlock {
                        c: c_index(*k),
                        v: [None, None],
                        sigma_const: 0.0,
                    };
                    for (slot, node) in [*k, *k + 1].into_iter().enumerate() {
                        match prog.fixed[node] {
                            Some(f) => block.sigma_const += f,
                            None => block.v[slot] = Some(v_index(node)),
                        }
                    }
                    if block.v == [None, None] && block.sigma_const <= 0.0 {
                        return Err(BuildConflict(ConstraintFamily::SlackCone));
                    }
                    prog.cones.push(block);
                }
            }
        }
        Ok(prog)
    }

    /// Appends `sign * Σ terms <= sign * bound`, substituting fixed speeds.
    fn push_row(
        &mut self,
        family: ConstraintFamily,
        terms: &[(Var, f64)],
        sign: f64,
        bound: f64,
    ) -> std::result::Result<(), BuildConflict> {
        let mut row = Row {
            idx: [0; 3],
            coef: [0.0; 3],
            len: 0,
            rhs: sign * bound,
            family,
        };
        for (var, a) in terms {
            let a = sign * a;
            let j = match var {
                Var::V(k) => match self.fixed[*k] {
                    Some(f) => {
                        row.rhs -= a * f;
                        continue;
                    }
                    None => v_index(*k),
                },
                Var::C(k) => c_index(*k),
            };
            row.idx[row.len as usize] = j;
            row.coef[row.len as usize] = a;
            row.len += 1;
        }
        if row.coef[..row.len as usize].iter().all(|&a| a == 0.0) {
            if row.rhs < -1e-12 * (1.0 + bound.abs()) {
                return Err(BuildConflict(family));
            }
        } else {
            self.rows.push(row);
        }
        Ok(())
    }

    /// Tangent cuts of the exact acceleration limits `v_{k+1}^2 - v_k^2 <= abar_k`
    /// and `v_k^2 - v_{k+1}^2 <= -aunder_k` at the speeds `(a, b)`. Both cuts lie
    /// inside the exact limits everywhere and touch them at the linearization point.
    fn push_accel_cuts(&mut self, p: &DiscretizedProblem, k: usize, a: f64, b: f64) -> std::result::Result<(), BuildConflict> {
        let up = p.abar[k];
        let down = -p.aunder[k];
        let terms = [(Var::V(k), -a), (Var::V(k + 1), (up + a * a).sqrt())];
        self.push_row(ConstraintFamily::Acceleration, &terms, 1.0, up)?;
        let terms = [(Var::V(k), (down + b * b).sqrt()), (Var::V(k + 1), -b)];
        self.push_row(ConstraintFamily::Acceleration, &terms, 1.0, down)
    }

    pub fn num_vars(&self) -> usize {
        2 * self.n - 1
    }

    pub fn is_free(&self, j: usize) -> bool {
        j % 2 == 1 || self.fixed[j / 2].is_none()
    }
}

/// A conic solver able to handle [`ConicProgram`]s.
pub trait ConicBackend {
    fn name(&self) -> &'static str;
    /// Returns the raw variable vector (interleaved, fixed speeds included) on success.
    fn solve_program(&self, prog: &ConicProgram, settings: &Settings) -> Result<BackendOutcome>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendOutcome {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub infeasible_family: Option<ConstraintFamily>,
}

/// The reference backend: barrier path following from a strictly cone-feasible
/// start, with the homogeneous self-dual method as fallback. The fallback either
/// certifies infeasibility or supplies a solution when path following stalls.
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint;

impl ConicBackend for InteriorPoint {
    fn name(&self) -> &'static str {
        "ipm"
    }

    fn solve_program(&self, prog: &ConicProgram, settings: &Settings) -> Result<BackendOutcome> {
        let first = barrier::solve(prog, settings);
        if first.status == SolveStatus::Optimal {
            return Ok(first);
        }
        let second = hsde::solve(prog, settings);
        Ok(BackendOutcome {
            iterations: first.iterations + second.iterations,
            ..second
        })
    }
}

/// The homogeneous self-dual method alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelfDualEmbedding;

impl ConicBackend for SelfDualEmbedding {
    fn name(&self) -> &'static str {
        "hsde"
    }

    fn solve_program(&self, prog: &ConicProgram, settings: &Settings) -> Result<BackendOutcome> {
        Ok(hsde::solve(prog, settings))
    }
}

pub fn backend_by_name(name: &str) -> Result<Box<dyn ConicBackend>> {
    match name {
        "ipm" | "interior-point" => Ok(Box::new(InteriorPoint)),
        "hsde" => Ok(Box::new(SelfDualEmbedding)),
        other => Err(Error::InvalidInput(format!("unknown solver backend '{other}'"))),
    }
}

/// Solves the assembled problem with the backend named in `settings`.
pub fn solve(p: &DiscretizedProblem, settings: &Settings) -> Result<Solution> {
    let backend = backend_by_name(&settings.backend)?;
    solve_with(p, settings, backend.as_ref())
}

pub fn solve_with(p: &DiscretizedProblem, settings: &Settings, backend: &dyn ConicBackend) -> Result<Solution> {
    let start = Instant::now();
    let mut prog = match ConicProgram::from_problem(p) {
        Ok(prog) => prog,
        Err(BuildConflict(family)) => {
            let mut sol = Solution::infeasible(family);
            sol.solve_time = start.elapsed().as_secs_f64();
            return Ok(sol);
        }
    };
    let mut out = backend.solve_program(&prog, settings)?;
    let mut iterations = out.iterations;
    if settings.tighten && out.status == SolveStatus::Optimal {
        iterations += tighten(p, &mut prog, settings, backend, &mut out)?;
    }
    let (v, c) = split(&prog, &out.x);
    let objective_value = c.iter().zip(&p.ds).map(|(c, d)| 2.0 * d * c).sum();
    Ok(Solution {
        status: out.status,
        v,
        c,
        objective_value,
        iterations,
        solve_time: start.elapsed().as_secs_f64(),
        infeasible_family: out.infeasible_family,
    })
}

/// Largest admissible `c_k (v_k + v_{k+1}) - 1` for a solution to count as tight.
pub const TIGHT_TOL: f64 = 1e-7;
const MAX_CUT_ROUNDS: usize = 50;

fn split(prog: &ConicProgram, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = prog.n;
    let v = (0..n).map(|k| prog.fixed[k].unwrap_or(x[v_index(k)])).collect();
    let c = (0..n - 1).map(|k| x[c_index(k)]).collect();
    (v, c)
}

/// The conic program only bounds acceleration through the slack `c_k`, so an optimum
/// may keep `c_k` above `1 / (v_k + v_{k+1})` and hide an acceleration above its
/// limit. Segments where that happens get tangent cuts of the exact limit, relinearized
/// at every round until the objective settles. A relaxed optimum that is already tight
/// is returned unchanged (it is then optimal for the exact problem as well).
fn tighten(
    p: &DiscretizedProblem,
    prog: &mut ConicProgram,
    settings: &Settings,
    backend: &dyn ConicBackend,
    out: &mut BackendOutcome,
) -> Result<usize> {
    let base_rows = prog.rows.len();
    let mut cut = vec![false; p.n - 1];
    let mut last_obj = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..MAX_CUT_ROUNDS {
        let (v, c) = split(prog, &out.x);
        let mut tight = true;
        for k in 0..p.n - 1 {
            if c[k] * (v[k] + v[k + 1]) - 1.0 > TIGHT_TOL {
                tight = false;
                cut[k] = true;
            }
        }
        let obj: f64 = c.iter().zip(&p.ds).map(|(c, d)| 2.0 * d * c).sum();
        if tight {
            if !cut.contains(&true) || (last_obj - obj).abs() <= settings.tol_gap * obj {
                break;
            }
            last_obj = obj;
        }
        prog.rows.truncate(base_rows);
        for k in (0..p.n - 1).filter(|&k| cut[k]) {
            if prog.push_accel_cuts(p, k, v[k], v[k + 1]).is_err() {
                prog.rows.truncate(base_rows);
                return Ok(iterations);
            }
        }
        let next = backend.solve_program(prog, settings)?;
        iterations += next.iterations;
        if next.status != SolveStatus::Optimal {
            break;
        }
        *out = next;
    }
    Ok(iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::JointLimits;
    use crate::discretize::{assemble, AssembleOptions, BoundaryConditions, Limits};
    use crate::spline::{InitialTrajectory, PathSample};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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

    /// A wiggly path: random step lengths and random heading increments.
    fn curvy(seed: u64, n: usize) -> InitialTrajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::with_capacity(n);
        let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
        let mut kappa = 0.0;
        for k in 0..n {
            let ds: f64 = rng.gen_range(0.05..0.3);
            let dth: f64 = rng.gen_range(-0.4..0.4);
            samples.push(PathSample { x, y, theta: th, kappa });
            if k + 1 < n {
                kappa = (dth / ds).abs();
                x += ds * (th + dth / 2.0).cos();
                y += ds * (th + dth / 2.0).sin();
                th += dth;
            }
        }
        InitialTrajectory::new(samples, 1.0).unwrap()
    }

    fn problem(traj: &InitialTrajectory, lim: &Limits, opts: &AssembleOptions) -> DiscretizedProblem {
        assemble(traj, lim, &BoundaryConditions::default(), opts).unwrap()
    }

    fn bang_bang_limits(v_max: f64) -> Limits {
        Limits {
            v_max,
            a_min: -1.0,
            a_max: 1.0,
            joint: JointLimits::symmetric(100.0),
            ..Limits::default()
        }
    }

    fn solve_default(p: &DiscretizedProblem) -> Solution {
        solve(p, &Settings::default()).unwrap()
    }

    #[test]
    fn bang_bang_profile() {
        let p = problem(&straight(3, 0.5), &bang_bang_limits(100.0), &AssembleOptions::default());
        let sol = solve_default(&p);
        assert!(sol.is_optimal(), "{sol:?}");
        assert!((sol.v[1] - 1.0).abs() < 1e-6, "{:?}", sol.v);
        assert_eq!((sol.v[0], sol.v[2]), (0.0, 0.0));
        assert!((sol.objective_value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn speed_cap_binds_first() {
        let p = problem(&straight(3, 0.5), &bang_bang_limits(0.5), &AssembleOptions::default());
        let sol = solve_default(&p);
        assert!(sol.is_optimal());
        assert!((sol.v[1] - 0.5).abs() < 1e-6);
        assert!((sol.objective_value - 4.0).abs() < 1e-6);
    }

    #[test]
    fn start_speed_above_cap_is_infeasible() {
        let mut p = problem(&straight(3, 0.5), &bang_bang_limits(0.5), &AssembleOptions::default());
        p.boundary.v_s = 0.8;
        let sol = solve_default(&p);
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert_eq!(sol.infeasible_family, Some(ConstraintFamily::VelocityCap));
        assert!(matches!(sol.into_result(), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn contradictory_interior_rows_are_certified_infeasible() {
        // the angular band forces v_0 + v_1 >= 1, but the speed cap allows at most 0.5
        let mut p = problem(&curvy(4, 6), &Limits::default(), &AssembleOptions::default());
        p.wunder[2] = 1.0;
        p.wbar[2] = 2.0;
        p.flags.angular_active[2] = true;
        for c in p.vcap.iter_mut() {
            *c = c.min(0.25);
        }
        let sol = solve_default(&p);
        assert_eq!(sol.status, SolveStatus::Infeasible, "{sol:?}");
        assert!(sol.infeasible_family.is_some());
    }

    #[test]
    fn unknown_backend_is_rejected() {
        let p = problem(&straight(3, 0.5), &bang_bang_limits(1.0), &AssembleOptions::default());
        let settings = Settings {
            backend: "simplex".into(),
            ..Settings::default()
        };
        assert!(matches!(solve(&p, &settings), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn settings_json_keys() {
        let s: Settings = serde_json::from_str(r#"{"tol_feas":1e-6,"max_iter":50}"#).unwrap();
        assert_eq!((s.tol_feas, s.tol_gap, s.max_iter), (1e-6, 1e-8, 50));
        assert_eq!(s.backend, "ipm");
        assert!(serde_json::from_str::<Settings>(r#"{"tolerance":1}"#).is_err());
    }

    #[test]
    fn program_layout_is_banded() {
        let p = problem(&curvy(1, 12), &Limits::default(), &AssembleOptions::default());
        let prog = ConicProgram::from_problem(&p).unwrap();
        assert_eq!(prog.fixed[0], Some(0.0));
        assert_eq!(prog.fixed[11], Some(0.0));
        for row in &prog.rows {
            let idx: Vec<usize> = row.terms().map(|t| t.0).collect();
            let lo = *idx.iter().min().unwrap();
            let hi = *idx.iter().max().unwrap();
            assert!(hi - lo <= 2, "{row:?}");
        }
        assert_eq!(prog.cones.len(), 11);
        assert!(prog.objective.iter().skip(1).step_by(2).all(|&q| q > 0.0));
    }

    #[test]
    fn dp_bang_bang() {
        let p = problem(&straight(3, 0.5), &bang_bang_limits(100.0), &AssembleOptions::default());
        // a cap of 100 makes the grid coarse; use a cap near the optimum instead
        let mut p2 = p.clone();
        p2.vcap = vec![1.5; 3];
        let r = dp_oracle(&p2, 1000).unwrap();
        assert!((r.t_f - 2.0).abs() / 2.0 < 0.005, "{}", r.t_f);
        assert!(dp_oracle(&p, 1).is_err());
        assert!(matches!(dp_oracle(&p, 1).unwrap_err(), Error::OracleNoPath));
        assert!(matches!(dp_oracle(&p, 10_000), Err(Error::OracleGuard(_))));
    }

    #[test]
    fn dp_matches_capped_straight_line() {
        let p = problem(&straight(12, 0.2), &bang_bang_limits(0.5), &AssembleOptions::default());
        let sol = solve_default(&p);
        let r = dp_oracle(&p, 500).unwrap();
        let gap = (r.t_f - sol.objective_value) / sol.objective_value;
        assert!((-1e-6..0.01).contains(&gap), "gap {gap}");
        for (a, b) in r.v.iter().zip(&sol.v) {
            assert!((a - b).abs() < 0.05, "{:?} vs {:?}", r.v, sol.v);
        }
    }

    #[test]
    fn oracle_sandwich_on_curvy_paths() {
        for seed in 0..4 {
            let p = problem(&curvy(seed, 20), &Limits::default(), &AssembleOptions::default());
            let sol = solve_default(&p);
            assert!(sol.is_optimal());
            let r = dp_oracle(&p, 400).unwrap();
            let gap = (r.t_f - sol.objective_value) / sol.objective_value;
            assert!((-1e-6..=0.02).contains(&gap), "seed {seed}: gap {gap}");
        }
    }

    #[test]
    fn repeated_solves_are_identical() {
        let p = problem(&curvy(9, 60), &Limits::default(), &AssembleOptions::default());
        let mut a = solve_default(&p);
        let mut b = solve_default(&p);
        a.solve_time = 0.0;
        b.solve_time = 0.0;
        assert_eq!(a, b);
        let bits = |s: &Solution| s.v.iter().chain(&s.c).map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn embedding_backend_agrees_at_looser_tolerance() {
        let p = problem(&curvy(21, 25), &Limits::default(), &AssembleOptions::default());
        let loose = Settings {
            tol_feas: 1e-6,
            tol_gap: 1e-6,
            backend: "hsde".into(),
            ..Settings::default()
        };
        let a = solve(&p, &loose).unwrap();
        let b = solve_default(&p);
        assert!(a.is_optimal() && b.is_optimal());
        assert!((a.objective_value - b.objective_value).abs() <= 1e-5 * b.objective_value);
    }

    #[test]
    fn loose_relaxation_is_tightened_to_the_exact_limit() {
        // a short first segment followed by a long one: the relaxed program accelerates
        // past the exact limit on the first segment by keeping its cone loose
        let p = problem(&curvy(114, 3), &Limits::default(), &AssembleOptions::default());
        let relaxed = solve(&p, &Settings { tighten: false, ..Settings::default() }).unwrap();
        assert!(relaxed.c[0] * relaxed.v[1] > 1.1);
        let sol = solve_default(&p);
        let v1 = p.abar[0].sqrt();
        assert!((sol.v[1] - v1).abs() < 1e-7, "{} vs {v1}", sol.v[1]);
        assert!((sol.objective_value - 2.0 * (p.ds[0] + p.ds[1]) / v1).abs() < 1e-7);
        assert!(sol.objective_value > relaxed.objective_value);
        for k in 0..2 {
            assert!((sol.c[k] * (sol.v[k] + sol.v[k + 1]) - 1.0).abs() <= 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn optimal_solutions_are_feasible_and_tight(seed in 0u64..10_000, n in 3usize..40) {
            let p = problem(&curvy(seed, n), &Limits::default(), &AssembleOptions::default());
            let sol = solve_default(&p);
            prop_assert!(sol.is_optimal(), "{:?}", sol.status);
            let bad = p.violated(&sol.v, &sol.c, 1e-8);
            prop_assert!(bad.is_empty(), "{:?}", bad);
            for k in 0..n - 1 {
                let t = sol.c[k] * (sol.v[k] + sol.v[k + 1]) - 1.0;
                prop_assert!(t.abs() <= 1e-6, "segment {} tightness {}", k, t);
            }
        }

        #[test]
        fn relaxing_never_slows_down(seed in 0u64..10_000, n in 3usize..40) {
            let traj = curvy(seed, n);
            let lim = Limits::default();
            let base = solve_default(&problem(&traj, &lim, &AssembleOptions::default()));
            for opts in [
                AssembleOptions { disable_angular: true, ..AssembleOptions::default() },
                AssembleOptions { disable_joint: true, ..AssembleOptions::default() },
                AssembleOptions { disable_angular: true, disable_joint: true, ..AssembleOptions::default() },
            ] {
                let relaxed = solve_default(&problem(&traj, &lim, &opts));
                prop_assert!(relaxed.objective_value <= base.objective_value + 1e-8,
                    "{} > {}", relaxed.objective_value, base.objective_value);
            }
            let strict = solve_default(&problem(&traj, &lim, &AssembleOptions { strict_joint: true, ..AssembleOptions::default() }));
            prop_assert!(strict.objective_value >= base.objective_value - 1e-8);
        }

        #[test]
        fn halving_speed_limit_never_speeds_up(seed in 0u64..10_000, n in 3usize..40) {
            let traj = curvy(seed, n);
            let lim = Limits::default();
            let half = Limits { v_max: lim.v_max / 2.0, ..lim };
            let a = solve_default(&problem(&traj, &lim, &AssembleOptions::default()));
            let b = solve_default(&problem(&traj, &half, &AssembleOptions::default()));
            prop_assert!(b.objective_value >= a.objective_value - 1e-8);
        }
    }
}
