//! Homogeneous self-dual interior-point method for the speed-profile program.
//!
//! The program is put in the standard conic form `min qᵀx s.t. Gx + s = h`, `s` in a
//! product of a nonnegative orthant and 3-dimensional second-order cones, and solved
//! through a homogeneous self-dual embedding with Mehrotra predictor-corrector steps
//! and Nesterov–Todd scaling. Because every row touches three consecutive variables,
//! the reduced normal equations `Gᵀ W⁻² G` have half-bandwidth two and each Newton
//! step costs linear time.

use std::f64::consts::SQRT_2;

use super::cone::{self, SocScaling, V3};
use super::{BackendOutcome, ConeBlock, ConicProgram, Settings, SolveStatus};
use crate::discretize::ConstraintFamily;
use crate::linalg::{BandCholesky, SymBand};

const STEP_FRACTION: f64 = 0.99;
const REFINE_STEPS: usize = 3;
const PIVOT_TOL: f64 = 1e-30;
/// Iterations continue until the tolerances are met with this much to spare; an
/// iterate that only meets the plain tolerances is accepted when progress stalls.
const TARGET_MARGIN: f64 = 1e-2;

#[derive(Debug, Clone, Copy)]
struct SRow {
    idx: [usize; 3],
    coef: [f64; 3],
    len: usize,
}

impl SRow {
    fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |j| (self.idx[j], self.coef[j]))
    }

    fn dot(&self, x: &[f64]) -> f64 {
        self.terms().map(|(j, a)| a * x[j]).sum()
    }
}

/// Standard-form data. Slack layout: `ml` orthant entries, then three per cone.
struct Data {
    nx: usize,
    q: Vec<f64>,
    g: Vec<SRow>,
    h: Vec<f64>,
    ml: usize,
    nc: usize,
    free: Vec<bool>,
    families: Vec<ConstraintFamily>,
    /// Scale that turns a normalized orthant row back into its natural units.
    row_norm: Vec<f64>,
    cones: Vec<ConeBlock>,
}

impl Data {
    fn new(prog: &ConicProgram) -> Self {
        let nx = prog.num_vars();
        let qmax = prog.objective.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let qs = if qmax > 0.0 { qmax } else { 1.0 };
        let q: Vec<f64> = prog.objective.iter().map(|v| v / qs).collect();
        let mut g = Vec::with_capacity(prog.rows.len() + 3 * prog.cones.len());
        let mut h = Vec::with_capacity(g.capacity());
        let mut families = Vec::with_capacity(prog.rows.len());
        let mut row_norm = Vec::with_capacity(prog.rows.len());
        for row in &prog.rows {
            let norm = row.terms().map(|(_, a)| a * a).sum::<f64>().sqrt();
            let mut r = SRow {
                idx: row.idx,
                coef: [0.0; 3],
                len: row.len as usize,
            };
            for j in 0..r.len {
                r.coef[j] = row.coef[j] / norm;
            }
            g.push(r);
            h.push(row.rhs / norm);
            families.push(row.family);
            row_norm.push(norm);
        }
        let ml = g.len();
        let k = -1.0 / SQRT_2;
        for cb in &prog.cones {
            let mut plus = SRow {
                idx: [cb.c, 0, 0],
                coef: [k, 0.0, 0.0],
                len: 1,
            };
            let mut minus = plus;
            for v in cb.v.iter().flatten() {
                plus.idx[plus.len] = *v;
                plus.coef[plus.len] = k;
                plus.len += 1;
                minus.idx[minus.len] = *v;
                minus.coef[minus.len] = -k;
                minus.len += 1;
            }
            g.push(plus);
            g.push(minus);
            g.push(SRow {
                idx: [0; 3],
                coef: [0.0; 3],
                len: 0,
            });
            h.push(cb.sigma_const / SQRT_2);
            h.push(-cb.sigma_const / SQRT_2);
            h.push(SQRT_2);
        }
        Data {
            nx,
            q,
            g,
            h,
            ml,
            nc: prog.cones.len(),
            free: (0..nx).map(|j| prog.is_free(j)).collect(),
            families,
            row_norm,
            cones: prog.cones.clone(),
        }
    }

    /// Largest constraint violation of `x` in natural units.
    fn violation(&self, x: &[f64]) -> f64 {
        let rows = (0..self.ml).map(|i| (self.g[i].dot(x) - self.h[i]) * self.row_norm[i]);
        let cones = self.cones.iter().map(|cb| {
            let sigma = cb.sigma_const + cb.v.iter().flatten().map(|&j| x[j]).sum::<f64>();
            1.0 - x[cb.c] * sigma
        });
        rows.chain(cones).fold(0.0, f64::max)
    }

    fn m(&self) -> usize {
        self.g.len()
    }

    fn degree(&self) -> f64 {
        (self.ml + self.nc) as f64
    }

    fn gx(&self, x: &[f64]) -> Vec<f64> {
        self.g.iter().map(|r| r.dot(x)).collect()
    }

    fn gtz(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nx];
        for (r, zi) in self.g.iter().zip(z) {
            for (j, a) in r.terms() {
                out[j] += a * zi;
            }
        }
        out
    }

    fn cone(v: &[f64], base: usize) -> V3 {
        [v[base], v[base + 1], v[base + 2]]
    }

    fn cone_base(&self, k: usize) -> usize {
        self.ml + 3 * k
    }

    /// Shifts `r` into the interior of the cone product when it is not already there.
    fn push_interior(&self, r: &mut [f64]) {
        let mut alpha = f64::NEG_INFINITY;
        for v in &r[..self.ml] {
            alpha = alpha.max(-v);
        }
        for k in 0..self.nc {
            let b = self.cone_base(k);
            alpha = alpha.max(r[b + 1].hypot(r[b + 2]) - r[b]);
        }
        if alpha >= 0.0 {
            let shift = 1.0 + alpha;
            for v in &mut r[..self.ml] {
                *v += shift;
            }
            for k in 0..self.nc {
                r[self.cone_base(k)] += shift;
            }
        }
    }

    /// Largest step keeping `x + α d` in the cone product.
    fn max_step(&self, x: &[f64], d: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for i in 0..self.ml {
            if d[i] < 0.0 {
                alpha = alpha.min(-x[i] / d[i]);
            }
        }
        for k in 0..self.nc {
            let b = self.cone_base(k);
            alpha = alpha.min(cone::max_step(&Self::cone(x, b), &Self::cone(d, b)));
        }
        alpha
    }

    /// Names the constraint family that carries the infeasibility certificate `z`.
    fn blame(&self, z: &[f64]) -> ConstraintFamily {
        let mut weight: Vec<(ConstraintFamily, f64, f64)> = Vec::new();
        let mut add = |fam: ConstraintFamily, hz: f64, zz: f64| {
            match weight.iter_mut().find(|(f, _, _)| *f == fam) {
                Some(e) => {
                    e.1 += hz;
                    e.2 += zz;
                }
                None => weight.push((fam, hz, zz)),
            }
        };
        for i in 0..self.ml {
            add(self.families[i], self.h[i] * z[i], z[i]);
        }
        for i in self.ml..self.m() {
            add(ConstraintFamily::SlackCone, self.h[i] * z[i], z[i].abs());
        }
        let most_negative = weight
            .iter()
            .filter(|e| e.1 < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match most_negative {
            Some(e) => e.0,
            None => weight
                .iter()
                .max_by(|a, b| a.2.total_cmp(&b.2))
                .map_or(ConstraintFamily::Boundary, |e| e.0),
        }
    }
}

/// Scaling point and factorized normal equations for one iteration.
struct Factor {
    /// Orthant scaling `w_i = sqrt(s_i / z_i)`.
    lin: Vec<f64>,
    soc: Vec<SocScaling>,
    soc_winv2: Vec<[[f64; 3]; 3]>,
    /// `λ = W z = W⁻¹ s`.
    lambda: Vec<f64>,
    chol: BandCholesky,
}

fn assemble(data: &Data, lin_inv2: &[f64], soc_blocks: &[(f64, f64, f64)]) -> SymBand {
    let mut m = SymBand::zeros(data.nx, 2);
    for (r, d) in data.g[..data.ml].iter().zip(lin_inv2) {
        for (j, a) in r.terms() {
            for (l, b) in r.terms() {
                if j >= l {
                    m.add(j, l, d * a * b);
                }
            }
        }
    }
    // cone rows map (c, σ) onto the first two slack coordinates by a 45° rotation
    for (k, &(pp, pm, mm)) in soc_blocks.iter().enumerate() {
        let plus = &data.g[data.cone_base(k)];
        let c = plus.idx[0];
        let vs = &plus.idx[1..plus.len];
        let (cc, cs, ss) = (pp, pm, mm);
        m.add(c, c, cc);
        for (a, &va) in vs.iter().enumerate() {
            m.add(va, c, cs);
            for &vb in &vs[..=a] {
                m.add(va, vb, ss);
            }
        }
    }
    for j in 0..data.nx {
        if !data.free[j] {
            m.add(j, j, 1.0);
        }
    }
    m
}

impl Factor {
    fn new(data: &Data, s: &[f64], z: &[f64]) -> Self {
        let lin: Vec<f64> = (0..data.ml).map(|i| (s[i] / z[i]).sqrt()).collect();
        let mut lambda = vec![0.0; data.m()];
        for i in 0..data.ml {
            lambda[i] = (s[i] * z[i]).sqrt();
        }
        let mut soc = Vec::with_capacity(data.nc);
        for k in 0..data.nc {
            let b = data.cone_base(k);
            let sc = SocScaling::new(&Data::cone(s, b), &Data::cone(z, b));
            let l = sc.apply(&Data::cone(z, b));
            lambda[b..b + 3].copy_from_slice(&l);
            soc.push(sc);
        }
        let soc_winv2: Vec<_> = soc.iter().map(SocScaling::inv_squared).collect();
        let lin_inv2: Vec<f64> = lin.iter().map(|w| 1.0 / (w * w)).collect();
        let blocks: Vec<_> = soc.iter().map(SocScaling::inv_squared_rotated).collect();
        let chol = assemble(data, &lin_inv2, &blocks).cholesky(PIVOT_TOL);
        Factor {
            lin,
            soc,
            soc_winv2,
            lambda,
            chol,
        }
    }

    fn identity(data: &Data) -> Self {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let unit = SocScaling {
            eta: 1.0,
            w: [1.0, 0.0, 0.0],
        };
        let lin = vec![1.0; data.ml];
        let chol = assemble(data, &lin, &vec![(1.0, 0.0, 1.0); data.nc]).cholesky(PIVOT_TOL);
        Factor {
            lin,
            soc: vec![unit; data.nc],
            soc_winv2: vec![id; data.nc],
            lambda: vec![1.0; data.m()],
            chol,
        }
    }

    fn map_blocks(&self, data: &Data, v: &[f64], lin: impl Fn(usize, f64) -> f64, soc: impl Fn(usize, &V3) -> V3) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for i in 0..data.ml {
            out[i] = lin(i, v[i]);
        }
        for k in 0..data.nc {
            let b = data.cone_base(k);
            out[b..b + 3].copy_from_slice(&soc(k, &Data::cone(v, b)));
        }
        out
    }

    fn w(&self, data: &Data, v: &[f64]) -> Vec<f64> {
        self.map_blocks(data, v, |i, x| self.lin[i] * x, |k, x| self.soc[k].apply(x))
    }

    fn w_inv(&self, data: &Data, v: &[f64]) -> Vec<f64> {
        self.map_blocks(data, v, |i, x| x / self.lin[i], |k, x| self.soc[k].apply_inv(x))
    }

    fn w_inv2(&self, data: &Data, v: &[f64]) -> Vec<f64> {
        self.map_blocks(
            data,
            v,
            |i, x| x / (self.lin[i] * self.lin[i]),
            |k, x| cone::mat_vec(&self.soc_winv2[k], x),
        )
    }

    /// `λ ∘ \ v`.
    fn lambda_div(&self, data: &Data, v: &[f64]) -> Vec<f64> {
        let l = &self.lambda;
        self.map_blocks(
            data,
            v,
            |i, x| x / l[i],
            |k, x| cone::jdiv(&Data::cone(l, data.cone_base(k)), x),
        )
    }

    fn kkt_once(&self, data: &Data, rx: &[f64], rz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = self.w_inv2(data, rz);
        let mut a = data.gtz(&t);
        for j in 0..data.nx {
            a[j] = if data.free[j] { a[j] + rx[j] } else { 0.0 };
        }
        self.chol.solve(&mut a);
        let mut ga = data.gx(&a);
        for (g, r) in ga.iter_mut().zip(rz) {
            *g -= r;
        }
        let b = self.w_inv2(data, &ga);
        (a, b)
    }

    /// Solves `[0 Gᵀ; G -W²] [a; b] = [rx; rz]`. The second block row holds by
    /// construction of `b`; the first is polished by iterative refinement.
    fn solve_kkt(&self, data: &Data, rx: &[f64], rz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut a, mut b) = self.kkt_once(data, rx, rz);
        let scale = 1.0 + inf_norm(rx).max(inf_norm(rz));
        let zero = vec![0.0; data.m()];
        for _ in 0..REFINE_STEPS {
            let gtb = data.gtz(&b);
            let e: Vec<f64> = (0..data.nx)
                .map(|j| if data.free[j] { rx[j] - gtb[j] } else { 0.0 })
                .collect();
            if inf_norm(&e) <= 1e-15 * scale {
                break;
            }
            let (da, db) = self.kkt_once(data, &e, &zero);
            axpy(&mut a, 1.0, &da);
            axpy(&mut b, 1.0, &db);
        }
        (a, b)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

struct Iterate {
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dz: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Residuals {
    rx: Vec<f64>,
    rz: Vec<f64>,
    rtau: f64,
}

impl Iterate {
    fn start(data: &Data) -> Self {
        let f = Factor::identity(data);
        let (x, neg_s) = f.solve_kkt(data, &vec![0.0; data.nx], &data.h);
        // least squares: x minimizes |Gx - h|, and b = Gx - h
        let mut s: Vec<f64> = neg_s.iter().map(|v| -v).collect();
        data.push_interior(&mut s);
        let (_, mut z) = f.solve_kkt(data, &data.q.iter().map(|v| -v).collect::<Vec<_>>(), &vec![0.0; data.m()]);
        data.push_interior(&mut z);
        Iterate {
            x,
            s,
            z,
            tau: 1.0,
            kappa: 1.0,
        }
    }

    fn residuals(&self, data: &Data) -> Residuals {
        let mut rx = data.gtz(&self.z);
        for j in 0..data.nx {
            rx[j] = if data.free[j] { rx[j] + data.q[j] * self.tau } else { 0.0 };
        }
        let gx = data.gx(&self.x);
        let rz = (0..data.m())
            .map(|i| self.s[i] + gx[i] - data.h[i] * self.tau)
            .collect();
        let rtau = self.kappa + dot(&data.q, &self.x) + dot(&data.h, &self.z);
        Residuals { rx, rz, rtau }
    }

    fn step(&mut self, d: &Direction, alpha: f64) {
        axpy(&mut self.x, alpha, &d.dx);
        axpy(&mut self.s, alpha, &d.ds);
        axpy(&mut self.z, alpha, &d.dz);
        self.tau += alpha * d.dtau;
        self.kappa += alpha * d.dkappa;
    }

    fn max_step(&self, data: &Data, d: &Direction) -> f64 {
        let mut alpha = data.max_step(&self.s, &d.ds).min(data.max_step(&self.z, &d.dz));
        if d.dtau < 0.0 {
            alpha = alpha.min(-self.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            alpha = alpha.min(-self.kappa / d.dkappa);
        }
        alpha
    }
}

#[allow(clippy::too_many_arguments)]
fn direction(
    data: &Data,
    f: &Factor,
    it: &Iterate,
    res: &Residuals,
    base: &(Vec<f64>, Vec<f64>),
    sigma: f64,
    d_s: &[f64],
    d_kappa: f64,
) -> Direction {
    let keep = 1.0 - sigma;
    let corr = f.w(data, &f.lambda_div(data, d_s));
    let r1: Vec<f64> = res.rx.iter().map(|v| -keep * v).collect();
    let r2: Vec<f64> = (0..data.m()).map(|i| -keep * res.rz[i] - corr[i]).collect();
    let (x2, z2) = f.solve_kkt(data, &r1, &r2);
    let (x1, z1) = base;
    let num = -keep * res.rtau - d_kappa / it.tau - dot(&data.q, &x2) - dot(&data.h, &z2);
    let den = dot(&data.q, x1) + dot(&data.h, z1) - it.kappa / it.tau;
    let dtau = num / den;
    let mut dx = x2;
    axpy(&mut dx, dtau, x1);
    let mut dz = z2;
    axpy(&mut dz, dtau, z1);
    // equals corr - W²Δz, evaluated through the linear equation to keep the
    // primal residual exact
    let gdx = data.gx(&dx);
    let ds: Vec<f64> = (0..data.m())
        .map(|i| -keep * res.rz[i] - gdx[i] + data.h[i] * dtau)
        .collect();
    let dkappa = (d_kappa - it.kappa * dtau) / it.tau;
    Direction {
        dx,
        ds,
        dz,
        dtau,
        dkappa,
    }
}

/// Convergence measures of the current iterate.
struct Measures {
    pres: f64,
    dres: f64,
    gap: f64,
    rel_gap: f64,
    infeas_ratio: Option<f64>,
}

impl Measures {
    fn new(data: &Data, it: &Iterate, res: &Residuals) -> Self {
        let tau = it.tau;
        let xhat: Vec<f64> = it.x.iter().map(|v| v / tau).collect();
        let pres = (inf_norm(&res.rz) / tau / (1.0 + inf_norm(&data.h))).max(data.violation(&xhat));
        let dres = inf_norm(&res.rx) / tau / (1.0 + inf_norm(&data.q));
        let pcost = dot(&data.q, &it.x) / tau;
        let dcost = -dot(&data.h, &it.z) / tau;
        let gap = dot(&it.s, &it.z) / (tau * tau);
        let rel_gap = gap / pcost.abs().min(dcost.abs()).max(1e-300);
        let hz = dot(&data.h, &it.z);
        let infeas_ratio = (hz < 0.0).then(|| inf_norm(&data.gtz(&it.z)) / -hz);
        Measures {
            pres,
            dres,
            gap,
            rel_gap,
            infeas_ratio,
        }
    }

    fn optimal(&self, s: &Settings, slack: f64) -> bool {
        self.pres <= slack * s.tol_feas
            && self.dres <= slack * s.tol_feas
            && (self.gap <= slack * s.tol_gap || self.rel_gap <= slack * s.tol_gap)
    }

    fn infeasible(&self, s: &Settings, slack: f64) -> bool {
        self.infeas_ratio.is_some_and(|r| r <= slack * s.tol_feas)
    }
}

/// Status for an iterate that cannot be improved further.
fn settle(meas: &Measures, settings: &Settings) -> SolveStatus {
    if meas.optimal(settings, 1.0) {
        SolveStatus::Optimal
    } else if meas.infeasible(settings, 1.0) {
        SolveStatus::Infeasible
    } else {
        SolveStatus::MaxIterations
    }
}

/// Solves the program or returns an infeasibility certificate.
pub(super) fn solve(prog: &ConicProgram, settings: &Settings) -> BackendOutcome {
    {
        let data = Data::new(prog);
        let m = data.m();
        let nu = data.degree();
        let mut it = Iterate::start(&data);
        let finish = |it: &Iterate, status: SolveStatus, iterations: usize| {
            let family = (status == SolveStatus::Infeasible).then(|| data.blame(&it.z));
            let x = if status == SolveStatus::Infeasible {
                vec![f64::NAN; data.nx]
            } else {
                it.x.iter().map(|v| v / it.tau).collect()
            };
            BackendOutcome {
                status,
                x,
                iterations,
                infeasible_family: family,
            }
        };
        let mut e = vec![0.0; m];
        e[..data.ml].fill(1.0);
        for k in 0..data.nc {
            e[data.cone_base(k)] = 1.0;
        }

        for iter in 0..=settings.max_iter {
            let res = it.residuals(&data);
            let meas = Measures::new(&data, &it, &res);
            if meas.optimal(settings, TARGET_MARGIN) {
                return finish(&it, SolveStatus::Optimal, iter);
            }
            if meas.infeasible(settings, TARGET_MARGIN) {
                return finish(&it, SolveStatus::Infeasible, iter);
            }
            if iter == settings.max_iter {
                return finish(&it, settle(&meas, settings), iter);
            }
            let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (nu + 1.0);

            let f = Factor::new(&data, &it.s, &it.z);
            let base = f.solve_kkt(&data, &data.q.iter().map(|v| -v).collect::<Vec<_>>(), &data.h);

            // predictor
            let lam = &f.lambda;
            let lam_sq = f.map_blocks(
                &data,
                lam,
                |_, x| x * x,
                |_, x| cone::jprod(x, x),
            );
            let ds_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
            let dk_aff = -it.kappa * it.tau;
            let aff = direction(&data, &f, &it, &res, &base, 0.0, &ds_aff, dk_aff);
            let alpha_aff = it.max_step(&data, &aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3);

            // corrector
            let ws = f.w_inv(&data, &aff.ds);
            let wz = f.w(&data, &aff.dz);
            let cross = f.map_blocks(
                &data,
                &ws,
                |i, x| x * wz[i],
                |k, x| cone::jprod(x, &Data::cone(&wz, data.cone_base(k))),
            );
            let ds_cc: Vec<f64> = (0..m)
                .map(|i| -lam_sq[i] - cross[i] + sigma * mu * e[i])
                .collect();
            let dk_cc = -it.kappa * it.tau - aff.dkappa * aff.dtau + sigma * mu;
            let dir = direction(&data, &f, &it, &res, &base, sigma, &ds_cc, dk_cc);
            let alpha = (STEP_FRACTION * it.max_step(&data, &dir)).min(1.0);
            if !(alpha > 1e-12) || !dir.dtau.is_finite() {
                let status = settle(&meas, settings);
                return finish(&it, status, iter);
            }
            it.step(&dir, alpha);
        }
        unreachable!("loop returns on the last iteration")
    }
}
