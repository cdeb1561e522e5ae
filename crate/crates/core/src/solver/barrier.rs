//! Primal-dual path following with logarithmic barriers.
//!
//! Linear rows `a·x <= b` carry explicit slacks and may start infeasible; each cone
//! `c σ >= 1` is kept strictly satisfied along the way and enters through its
//! barrier `-log(c σ - 1)`. The Newton matrix is the Hessian of the barrier
//! Lagrangian, which stays positive definite and has half-bandwidth two.

use super::{BackendOutcome, ConeBlock, ConicProgram, Settings, SolveStatus};
use crate::linalg::SymBand;

const STEP_FRACTION: f64 = 0.99;
const REFINE_STEPS: usize = 2;
const PIVOT_TOL: f64 = 1e-30;
/// Iterations continue until tolerances are met with this factor to spare.
const TARGET_MARGIN: f64 = 1e-2;
/// Smallest starting speed sum on a segment.
const MIN_START_SPEED: f64 = 1e-3;
/// Iterations without a better iterate before an acceptable one is returned.
const STALL_ITERS: usize = 5;

#[derive(Debug, Clone, Copy)]
struct LinRow {
    idx: [usize; 3],
    coef: [f64; 3],
    len: usize,
    rhs: f64,
    /// Original row norm, to report violations in natural units.
    norm: f64,
}

impl LinRow {
    fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |j| (self.idx[j], self.coef[j]))
    }

    fn dot(&self, x: &[f64]) -> f64 {
        self.terms().map(|(j, a)| a * x[j]).sum()
    }
}

struct Model<'a> {
    nx: usize,
    q: Vec<f64>,
    rows: Vec<LinRow>,
    cones: &'a [ConeBlock],
    free: Vec<bool>,
}

impl<'a> Model<'a> {
    fn new(prog: &'a ConicProgram) -> Self {
        let qmax = prog.objective.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let qs = if qmax > 0.0 { qmax } else { 1.0 };
        let rows = prog
            .rows
            .iter()
            .map(|r| {
                let norm = r.terms().map(|(_, a)| a * a).sum::<f64>().sqrt();
                let mut coef = [0.0; 3];
                for j in 0..r.len as usize {
                    coef[j] = r.coef[j] / norm;
                }
                LinRow {
                    idx: r.idx,
                    coef,
                    len: r.len as usize,
                    rhs: r.rhs / norm,
                    norm,
                }
            })
            .collect();
        let nx = prog.num_vars();
        Model {
            nx,
            q: prog.objective.iter().map(|v| v / qs).collect(),
            rows,
            cones: &prog.cones,
            free: (0..nx).map(|j| prog.is_free(j)).collect(),
        }
    }

    fn sigma(&self, k: usize, x: &[f64]) -> f64 {
        let cb = &self.cones[k];
        cb.sigma_const + cb.v.iter().flatten().map(|&j| x[j]).sum::<f64>()
    }

    /// `c σ - 1` for every cone.
    fn cone_slack(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cones.len())
            .map(|k| x[self.cones[k].c] * self.sigma(k, x) - 1.0)
            .collect()
    }

    /// `∇(c σ)ᵀ d` for every cone.
    fn cone_dir(&self, x: &[f64], d: &[f64]) -> Vec<f64> {
        (0..self.cones.len())
            .map(|k| {
                let cb = &self.cones[k];
                d[cb.c] * self.sigma(k, x) + x[cb.c] * (self.sigma(k, d) - cb.sigma_const)
            })
            .collect()
    }

    /// Adds `Σ_k w_k ∇(c σ)_k` to `out`.
    fn add_cone_grad(&self, x: &[f64], w: &[f64], out: &mut [f64]) {
        for (k, cb) in self.cones.iter().enumerate() {
            out[cb.c] += w[k] * self.sigma(k, x);
            for &j in cb.v.iter().flatten() {
                out[j] += w[k] * x[cb.c];
            }
        }
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(x)).collect()
    }

    fn add_at(&self, w: &[f64], out: &mut [f64]) {
        for (r, wi) in self.rows.iter().zip(w) {
            for (j, a) in r.terms() {
                out[j] += a * wi;
            }
        }
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| (r.dot(x) - r.rhs) * r.norm);
        let cones = self.cone_slack(x).into_iter().map(|t| -t);
        rows.chain(cones).fold(0.0, f64::max)
    }
}

struct State {
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    /// `c σ - 1` at `x`.
    t: Vec<f64>,
}

struct Step {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dz: Vec<f64>,
    dy: Vec<f64>,
    dt: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn ratio_step(v: &[f64], d: &[f64]) -> f64 {
    v.iter()
        .zip(d)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

impl<'a> Model<'a> {
    fn start(&self, prog: &ConicProgram) -> State {
        let cap = prog
            .rows
            .iter()
            .filter(|r| r.len == 1 && r.coef[0] > 0.0 && r.idx[0] % 2 == 0)
            .map(|r| r.rhs / r.coef[0])
            .fold(f64::INFINITY, f64::min);
        let v0 = if cap.is_finite() { 0.5 * cap } else { 1.0 };
        let mut x = vec![0.0; self.nx];
        for j in (0..self.nx).step_by(2) {
            if self.free[j] {
                x[j] = v0.max(MIN_START_SPEED);
            }
        }
        for (k, cb) in self.cones.iter().enumerate() {
            let sigma = self.sigma(k, &x).max(MIN_START_SPEED);
            x[cb.c] = 2.0 / sigma;
        }
        // a cone whose free speeds started at zero sum would have t <= 0
        for k in 0..self.cones.len() {
            let cb = self.cones[k];
            if x[cb.c] * self.sigma(k, &x) <= 1.5 {
                for &j in cb.v.iter().flatten() {
                    x[j] = x[j].max(MIN_START_SPEED);
                }
                x[cb.c] = 2.0 / self.sigma(k, &x).max(MIN_START_SPEED * MIN_START_SPEED);
            }
        }
        let ax = self.ax(&x);
        let s: Vec<f64> = self
            .rows
            .iter()
            .zip(&ax)
            .map(|(r, a)| (r.rhs - a).max(0.1))
            .collect();
        let z = s.iter().map(|s| 1.0 / s).collect();
        let t = self.cone_slack(&x);
        let y = t.iter().map(|t| 1.0 / t).collect();
        State { x, s, z, y, t }
    }

    fn newton_matrix(&self, st: &State) -> SymBand {
        let mut m = SymBand::zeros(self.nx, 2);
        for (i, r) in self.rows.iter().enumerate() {
            let d = st.z[i] / st.s[i];
            for (j, a) in r.terms() {
                for (l, b) in r.terms() {
                    if j >= l {
                        m.add(j, l, d * a * b);
                    }
                }
            }
        }
        for (k, cb) in self.cones.iter().enumerate() {
            // Hessian of the barrier Lagrangian in (c, σ): (y/t) [[σ², 1], [1, c²]]
            let w = st.y[k] / st.t[k];
            let c = st.x[cb.c];
            let sigma = self.sigma(k, &st.x);
            m.add(cb.c, cb.c, w * sigma * sigma);
            let vs: Vec<usize> = cb.v.iter().flatten().copied().collect();
            for (a, &va) in vs.iter().enumerate() {
                m.add(va, cb.c, w);
                for &vb in &vs[..=a] {
                    m.add(va, vb, w * c * c);
                }
            }
        }
        for j in 0..self.nx {
            if !self.free[j] {
                m.add(j, j, 1.0);
            }
        }
        m
    }

    /// Newton step for complementarity targets `xi_s` (rows) and `xi_t` (cones).
    fn direction(&self, st: &State, m: &SymBand, chol: &crate::linalg::BandCholesky, rp: &[f64], rd: &[f64], xi_s: &[f64], xi_t: &[f64]) -> Step {
        let mut rhs: Vec<f64> = rd.iter().map(|v| -v).collect();
        let w: Vec<f64> = (0..self.rows.len())
            .map(|i| -(xi_s[i] + st.z[i] * rp[i]) / st.s[i])
            .collect();
        self.add_at(&w, &mut rhs);
        let wt: Vec<f64> = (0..self.cones.len()).map(|k| xi_t[k] / st.t[k]).collect();
        self.add_cone_grad(&st.x, &wt, &mut rhs);
        for j in 0..self.nx {
            if !self.free[j] {
                rhs[j] = 0.0;
            }
        }
        let mut dx = rhs.clone();
        chol.solve(&mut dx);
        for _ in 0..REFINE_STEPS {
            let mut r = vec![0.0; self.nx];
            m.mul_vec(&dx, &mut r);
            for (ri, bi) in r.iter_mut().zip(&rhs) {
                *ri = bi - *ri;
            }
            if inf_norm(&r) <= 1e-15 * (1.0 + inf_norm(&rhs)) {
                break;
            }
            chol.solve(&mut r);
            for (d, e) in dx.iter_mut().zip(&r) {
                *d += e;
            }
        }
        let adx = self.ax(&dx);
        let ds: Vec<f64> = (0..self.rows.len()).map(|i| -rp[i] - adx[i]).collect();
        let dz: Vec<f64> = (0..self.rows.len())
            .map(|i| (xi_s[i] - st.z[i] * ds[i]) / st.s[i])
            .collect();
        let dt = self.cone_dir(&st.x, &dx);
        let dy: Vec<f64> = (0..self.cones.len())
            .map(|k| (xi_t[k] - st.y[k] * dt[k]) / st.t[k])
            .collect();
        Step { dx, ds, dz, dy, dt }
    }

    /// Largest step keeping every slack, multiplier and cone strictly feasible.
    fn max_step(&self, st: &State, d: &Step) -> f64 {
        let mut alpha = ratio_step(&st.s, &d.ds)
            .min(ratio_step(&st.z, &d.dz))
            .min(ratio_step(&st.y, &d.dy));
        // c σ - 1 along the ray is the quadratic t + α dt + α² dc dσ
        for (k, cb) in self.cones.iter().enumerate() {
            let a2 = d.dx[cb.c] * (self.sigma(k, &d.dx) - cb.sigma_const);
            let a1 = d.dt[k];
            let a0 = st.t[k];
            alpha = alpha.min(first_root(a2, a1, a0));
        }
        alpha
    }
}

/// Smallest positive root of `a2 α² + a1 α + a0` with `a0 > 0`, or infinity.
fn first_root(a2: f64, a1: f64, a0: f64) -> f64 {
    if a2 == 0.0 {
        return if a1 < 0.0 { -a0 / a1 } else { f64::INFINITY };
    }
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    let qv = -0.5 * (a1 + a1.signum() * sq);
    let mut best = f64::INFINITY;
    for r in [qv / a2, if qv != 0.0 { a0 / qv } else { f64::INFINITY }] {
        if r > 0.0 {
            best = best.min(r);
        }
    }
    best
}

struct Progress {
    pres: f64,
    dres: f64,
    rel_gap: f64,
}

impl Progress {
    /// Worst measure relative to its tolerance; at most 1 when all tolerances hold.
    fn score(&self, s: &Settings) -> f64 {
        (self.pres / s.tol_feas)
            .max(self.dres / s.tol_feas)
            .max(self.rel_gap / s.tol_gap)
    }
}

/// Runs path following. `status` is `Optimal` or `MaxIterations`; infeasibility is
/// left to the caller.
pub(super) fn solve(prog: &ConicProgram, settings: &Settings) -> BackendOutcome {
    let model = Model::new(prog);
    let mut st = model.start(prog);
    let nrows = model.rows.len();
    let ncones = model.cones.len();
    let degree = (nrows + ncones) as f64;
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let outcome = |x: &[f64], status, iterations| BackendOutcome {
        status,
        x: x.to_vec(),
        iterations,
        infeasible_family: None,
    };

    for iter in 0..=settings.max_iter {
        let ax = model.ax(&st.x);
        let rp: Vec<f64> = (0..nrows)
            .map(|i| ax[i] + st.s[i] - model.rows[i].rhs)
            .collect();
        let mut rd = model.q.clone();
        model.add_at(&st.z, &mut rd);
        let neg_y: Vec<f64> = st.y.iter().map(|v| -v).collect();
        model.add_cone_grad(&st.x, &neg_y, &mut rd);
        for j in 0..model.nx {
            if !model.free[j] {
                rd[j] = 0.0;
            }
        }
        let comp = dot(&st.s, &st.z) + dot(&st.t, &st.y);
        let mu = comp / degree;
        let pcost = dot(&model.q, &st.x);
        let progress = Progress {
            pres: model.violation(&st.x).max(
                rp.iter()
                    .zip(&model.rows)
                    .fold(0.0f64, |a, (r, row)| a.max(r.abs() * row.norm)),
            ),
            dres: inf_norm(&rd),
            rel_gap: comp / pcost.abs().max(1e-12),
        };
        let score = progress.score(settings);
        if score <= TARGET_MARGIN {
            return outcome(&st.x, SolveStatus::Optimal, iter);
        }
        if best.as_ref().map_or(true, |b| score < b.0) {
            best = Some((score, st.x.clone(), iter));
        }
        let settle = |x: &[f64], best: Option<(f64, Vec<f64>, usize)>| match best {
            Some((sc, bx, _)) if sc <= 1.0 => outcome(&bx, SolveStatus::Optimal, iter),
            _ => outcome(x, SolveStatus::MaxIterations, iter),
        };
        // near-degenerate optima can make the residuals drift once the gap is tiny
        let stalled = best
            .as_ref()
            .is_some_and(|b| b.0 <= 1.0 && iter >= b.2 + STALL_ITERS);
        if iter == settings.max_iter || stalled {
            return settle(&st.x, best);
        }

        let m = model.newton_matrix(&st);
        let chol = m.clone().cholesky(PIVOT_TOL);

        let xi_s: Vec<f64> = (0..nrows).map(|i| -st.s[i] * st.z[i]).collect();
        let xi_t: Vec<f64> = (0..ncones).map(|k| -st.t[k] * st.y[k]).collect();
        let aff = model.direction(&st, &m, &chol, &rp, &rd, &xi_s, &xi_t);
        let a_aff = model.max_step(&st, &aff).min(1.0);
        let comp_aff = (0..nrows)
            .map(|i| (st.s[i] + a_aff * aff.ds[i]) * (st.z[i] + a_aff * aff.dz[i]))
            .sum::<f64>()
            + (0..ncones)
                .map(|k| (st.t[k] + a_aff * aff.dt[k]) * (st.y[k] + a_aff * aff.dy[k]))
                .sum::<f64>();
        let sigma = (comp_aff.max(0.0) / comp).powi(3).min(1.0);

        let xi_s: Vec<f64> = (0..nrows)
            .map(|i| sigma * mu - st.s[i] * st.z[i] - aff.ds[i] * aff.dz[i])
            .collect();
        let xi_t: Vec<f64> = (0..ncones)
            .map(|k| sigma * mu - st.t[k] * st.y[k] - aff.dt[k] * aff.dy[k])
            .collect();
        let d = model.direction(&st, &m, &chol, &rp, &rd, &xi_s, &xi_t);
        let alpha = (STEP_FRACTION * model.max_step(&st, &d)).min(1.0);
        if !(alpha > 1e-12) || d.dx.iter().any(|v| !v.is_finite()) {
            return settle(&st.x, best);
        }
        for (v, dv) in st.x.iter_mut().zip(&d.dx) {
            *v += alpha * dv;
        }
        for i in 0..nrows {
            st.s[i] += alpha * d.ds[i];
            st.z[i] += alpha * d.dz[i];
        }
        for k in 0..ncones {
            st.y[k] += alpha * d.dy[k];
        }
        st.t = model.cone_slack(&st.x);
        if st.t.iter().any(|t| !(*t > 0.0)) {
            return settle(&st.x, best);
        }
    }
    unreachable!("loop returns on the last iteration")
}
