//! Brute-force speed planning on a velocity grid, used to cross-check the conic solver.

use crate::discretize::DiscretizedProblem;
use crate::error::{Error, Result};

/// Upper bound on `n · M²`, the number of edge checks.
pub const DP_GUARD: f64 = 1e8;

const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub t_f: f64,
    pub v: Vec<f64>,
}

fn edge_ok(p: &DiscretizedProblem, k: usize, v0: f64, v1: f64) -> bool {
    let sum = v0 + v1;
    if sum <= 0.0 {
        return false;
    }
    let dsq = v1 * v1 - v0 * v0;
    if dsq > p.abar[k] + EDGE_TOL || dsq < p.aunder[k] - EDGE_TOL {
        return false;
    }
    if p.flags.angular_active[k] && (sum < p.wunder[k] - EDGE_TOL || sum > p.wbar[k] + EDGE_TOL) {
        return false;
    }
    if p.flags.joint_active[k] {
        let jl = &p.limits.joint;
        let g = p.g[k];
        let mut checks = vec![((1.0 + g) * v0 + g * v1, jl.v_r_min, jl.v_r_max), ((1.0 - g) * v0 - g * v1, jl.v_l_min, jl.v_l_max)];
        if p.flags.strict_joint {
            checks.push((g * v0 + (1.0 + g) * v1, jl.v_r_min, jl.v_r_max));
            checks.push((-g * v0 + (1.0 - g) * v1, jl.v_l_min, jl.v_l_max));
        }
        if checks
            .iter()
            .any(|&(w, lo, hi)| w < lo - EDGE_TOL || w > hi + EDGE_TOL)
        {
            return false;
        }
    }
    true
}

/// Shortest path through a layered graph whose node `(k, j)` is the speed
/// `j · vcap_k / M`. Boundary speeds snap to the nearest level; pinned end sums are
/// matched within one grid step at each of the two nodes involved.
pub fn dp_oracle(p: &DiscretizedProblem, m: usize) -> Result<OracleResult> {
    if m == 0 {
        return Err(Error::InvalidInput("grid size must be at least 1".into()));
    }
    let n = p.n;
    let load = n as f64 * (m as f64).powi(2);
    if load > DP_GUARD {
        return Err(Error::OracleGuard(load));
    }
    let levels = m + 1;
    let step: Vec<f64> = p.vcap.iter().map(|c| c / m as f64).collect();
    let speed = |k: usize, j: usize| j as f64 * step[k];
    let snap = |k: usize, v: f64| -> usize {
        if step[k] > 0.0 {
            ((v / step[k]).round() as usize).min(m)
        } else {
            0
        }
    };
    let pin_ok = |k: usize, v0: f64, v1: f64| -> bool {
        let start = p.pins.start_sum.filter(|_| k == 0);
        let end = p.pins.end_sum.filter(|_| k == n - 2);
        start
            .into_iter()
            .chain(end)
            .all(|s| (v0 + v1 - s).abs() <= step[k] + step[k + 1] + EDGE_TOL)
    };

    let mut cost = vec![f64::INFINITY; levels];
    let mut parent = vec![vec![usize::MAX; levels]; n];
    cost[snap(0, p.boundary.v_s)] = 0.0;
    let last_level = snap(n - 1, p.boundary.v_f);
    for k in 0..n - 1 {
        let mut next = vec![f64::INFINITY; levels];
        let targets: Vec<usize> = if k + 1 == n - 1 { vec![last_level] } else { (0..levels).collect() };
        for (j, &base) in cost.iter().enumerate() {
            if !base.is_finite() {
                continue;
            }
            let v0 = speed(k, j);
            for &jj in &targets {
                let v1 = speed(k + 1, jj);
                if !edge_ok(p, k, v0, v1) || !pin_ok(k, v0, v1) {
                    continue;
                }
                let c = base + 2.0 * p.ds[k] / (v0 + v1);
                if c < next[jj] {
                    next[jj] = c;
                    parent[k + 1][jj] = j;
                }
            }
        }
        cost = next;
    }
    let t_f = cost[last_level];
    if !t_f.is_finite() {
        return Err(Error::OracleNoPath);
    }
    let mut v = vec![0.0; n];
    let mut j = last_level;
    for k in (0..n).rev() {
        v[k] = speed(k, j);
        if k > 0 {
            j = parent[k][j];
        }
    }
    Ok(OracleResult { t_f, v })
}
