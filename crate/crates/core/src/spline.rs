//! Clamped, non-uniform B-spline interpolation of waypoint paths.
//!
//! Knots are spaced by chord length: each interior knot advances by
//! `u0 * d_i / d_0`, where `d_i` is the i-th chord and `d_0` the first one. The
//! ends are clamped with `p + 1` repeated knots so the curve starts and ends
//! exactly on the first and last waypoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::wrap_angle;
use crate::linalg::BandMatrix;

pub const DEFAULT_DEGREE: usize = 3;
/// Minimum tangent norm (per knot unit) for headings and curvature.
pub const TANGENT_EPS: f64 = 1e-9;
/// Minimum distance between consecutive waypoints, meters.
pub const WAYPOINT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPath {
    points: Vec<[f64; 2]>,
}

impl WaypointPath {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a waypoint path needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidInput(format!("waypoint {i} is not finite")));
        }
        for (i, w) in points.windows(2).enumerate() {
            let d = dist(w[0], w[1]);
            if d <= WAYPOINT_EPS {
                return Err(Error::DuplicatePoints {
                    index: i + 1,
                    distance: d,
                });
            }
        }
        Ok(WaypointPath { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn chords(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| dist(w[0], w[1])).collect()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineCurve {
    pub degree: usize,
    pub knots: Vec<f64>,
    pub control_points: Vec<[f64; 2]>,
}

/// Cox–de Boor recursion for `N_{i,p}(u)`, with `0/0` taken as zero.
///
/// The degree-0 functions are half-open indicators `[u_i, u_{i+1})`, except that
/// the last non-empty span also includes its right end so the basis still sums
/// to one at the end of the domain.
pub fn basis(i: usize, p: usize, u: f64, knots: &[f64]) -> Result<f64> {
    if i + p + 1 >= knots.len() {
        return Err(Error::IndexOutOfRange {
            index: i + p + 1,
            len: knots.len(),
        });
    }
    Ok(basis_rec(i, p, u, knots))
}

fn basis_rec(i: usize, p: usize, u: f64, k: &[f64]) -> f64 {
    if p == 0 {
        if k[i] <= u && u < k[i + 1] {
            return 1.0;
        }
        let last = *k.last().unwrap();
        // closed right end on the final non-degenerate span
        if u == last && k[i + 1] == last && k[i] < last {
            return 1.0;
        }
        return 0.0;
    }
    let mut v = 0.0;
    let den1 = k[i + p] - k[i];
    if den1 != 0.0 {
        v += (u - k[i]) / den1 * basis_rec(i, p - 1, u, k);
    }
    let den2 = k[i + p + 1] - k[i + 1];
    if den2 != 0.0 {
        v += (k[i + p + 1] - u) / den2 * basis_rec(i + 1, p - 1, u, k);
    }
    v
}

/// Knot span index containing `u` for a curve with `n + 1` control points.
fn find_span(n: usize, p: usize, u: f64, k: &[f64]) -> usize {
    if u >= k[n + 1] {
        return n;
    }
    if u <= k[p] {
        return p;
    }
    let (mut lo, mut hi) = (p, n + 1);
    let mut mid = (lo + hi) / 2;
    while u < k[mid] || u >= k[mid + 1] {
        if u < k[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
        mid = (lo + hi) / 2;
    }
    mid
}

/// Nonzero basis functions at `u` and their derivatives up to `nd`:
/// `out[k][j]` is the k-th derivative of `N_{span-p+j, p}`.
fn ders_basis(span: usize, u: f64, p: usize, nd: usize, k: &[f64]) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - k[span + 1 - j];
        right[j] = k[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; nd + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for kk in 1..=nd.min(p) {
            let mut d = 0.0;
            let rk = r as isize - kk as isize;
            let pk = p - kk;
            if r >= kk {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { kk - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                d += a[s2][kk] * ndu[r][pk];
            }
            ders[kk][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for kk in 1..=nd.min(p) {
        for j in 0..=p {
            ders[kk][j] *= fac;
        }
        fac *= (p - kk) as f64;
    }
    ders
}

impl BSplineCurve {
    pub fn new(degree: usize, knots: Vec<f64>, control_points: Vec<[f64; 2]>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("degree must be positive".into()));
        }
        if knots.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidInput("knot vector must be non-decreasing".into()));
        }
        if knots.len() != control_points.len() + degree + 1 {
            return Err(Error::InvalidInput(format!(
                "{} knots do not match {} control points of degree {degree}",
                knots.len(),
                control_points.len()
            )));
        }
        Ok(BSplineCurve {
            degree,
            knots,
            control_points,
        })
    }

    /// Valid parameter range `[u_p, u_{m-p}]`.
    pub fn domain(&self) -> (f64, f64) {
        let p = self.degree;
        (self.knots[p], self.knots[self.knots.len() - 1 - p])
    }

    fn check_domain(&self, u: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        let tol = 1e-12 * (1.0 + hi.abs());
        if !(u >= lo - tol && u <= hi + tol) {
            return Err(Error::OutOfDomain { u, lo, hi });
        }
        Ok(())
    }

    fn derivatives(&self, u: f64, nd: usize) -> Result<Vec<[f64; 2]>> {
        self.check_domain(u)?;
        let (lo, hi) = self.domain();
        let u = u.clamp(lo, hi);
        let p = self.degree;
        let n = self.control_points.len() - 1;
        let span = find_span(n, p, u, &self.knots);
        let ders = ders_basis(span, u, p, nd, &self.knots);
        let mut out = vec![[0.0; 2]; nd + 1];
        for (k, row) in ders.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                let q = self.control_points[span - p + j];
                out[k][0] += b * q[0];
                out[k][1] += b * q[1];
            }
        }
        Ok(out)
    }

    pub fn eval(&self, u: f64) -> Result<[f64; 2]> {
        Ok(self.derivatives(u, 0)?[0])
    }

    pub fn eval_derivative(&self, u: f64, order: usize) -> Result<[f64; 2]> {
        if order > self.degree {
            return Err(Error::DerivativeOrder {
                order,
                degree: self.degree,
            });
        }
        Ok(self.derivatives(u, order)?[order])
    }

    /// Four-quadrant tangent angle in `(-π, π]`.
    pub fn heading(&self, u: f64) -> Result<f64> {
        let t = self.eval_derivative(u, 1)?;
        heading_of(t, u)
    }

    /// Unsigned curvature `|x'y'' - y'x''| / |C'|^3`.
    pub fn curvature(&self, u: f64) -> Result<f64> {
        if self.degree < 2 {
            return Err(Error::DerivativeOrder {
                order: 2,
                degree: self.degree,
            });
        }
        let d = self.derivatives(u, 2)?;
        curvature_of(d[1], d[2], u)
    }
}

pub(crate) fn heading_of(t: [f64; 2], u: f64) -> Result<f64> {
    let norm = t[0].hypot(t[1]);
    if norm < TANGENT_EPS {
        return Err(Error::DegenerateTangent { u, norm });
    }
    Ok(wrap_angle(t[1].atan2(t[0])))
}

pub(crate) fn curvature_of(d1: [f64; 2], d2: [f64; 2], u: f64) -> Result<f64> {
    let norm = d1[0].hypot(d1[1]);
    if norm < TANGENT_EPS {
        return Err(Error::DegenerateTangent { u, norm });
    }
    Ok((d1[0] * d2[1] - d1[1] * d2[0]).abs() / (norm * norm * norm))
}

/// Parameter assigned to each waypoint: `0`, then cumulative `u0 * d_i / d_0`.
pub fn chord_parameters(w: &WaypointPath, u0: f64) -> Result<Vec<f64>> {
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::InvalidInput(format!("u0 must be positive, got {u0}")));
    }
    let chords = w.chords();
    if let Some((i, &d)) = chords.iter().enumerate().find(|(_, &d)| d <= 0.0) {
        return Err(Error::DuplicatePoints {
            index: i + 1,
            distance: d,
        });
    }
    let d0 = chords[0];
    let mut params = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    params.push(acc);
    for d in &chords {
        acc += u0 * d / d0;
        params.push(acc);
    }
    Ok(params)
}

/// Clamped chord-length knot vector with `len(w) + 2p` entries.
pub fn chord_length_knots(w: &WaypointPath, p: usize, u0: f64) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::InvalidInput("degree must be positive".into()));
    }
    let params = chord_parameters(w, u0)?;
    Ok(clamped_knots(&params, p))
}

fn clamped_knots(params: &[f64], p: usize) -> Vec<f64> {
    let first = params[0];
    let last = *params.last().unwrap();
    let mut knots = Vec::with_capacity(params.len() + 2 * p);
    knots.extend(std::iter::repeat(first).take(p + 1));
    knots.extend_from_slice(&params[1..params.len() - 1]);
    knots.extend(std::iter::repeat(last).take(p + 1));
    knots
}

/// Interpolating fit with `u0` equal to the first chord (knots in arc-length units).
pub fn fit(w: &WaypointPath, p: usize) -> Result<BSplineCurve> {
    let d0 = w.chords()[0];
    fit_with_u0(w, p, d0)
}

/// Global interpolation through every waypoint.
///
/// The `p - 1` missing equations come from vanishing derivatives of order
/// 2, 3, ... at the ends (natural end conditions), split between start and end.
pub fn fit_with_u0(w: &WaypointPath, p: usize, u0: f64) -> Result<BSplineCurve> {
    if p == 0 {
        return Err(Error::InvalidInput("degree must be positive".into()));
    }
    let params = chord_parameters(w, u0)?;
    let knots = clamped_knots(&params, p);
    let ncp = w.len() + p - 1;
    let n = ncp - 1;
    let extra = p - 1;
    let n_start = extra.div_ceil(2);
    let n_end = extra - n_start;
    let start_orders: Vec<usize> = (2..2 + n_start).collect();
    let end_orders: Vec<usize> = (2..2 + n_end).collect();

    // (row, first column, coefficients)
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(ncp);
    let (u_lo, u_hi) = (knots[p], knots[knots.len() - 1 - p]);
    let max_order = p.min(1 + n_start.max(n_end));
    let lo_span = find_span(n, p, u_lo, &knots);
    let lo_ders = ders_basis(lo_span, u_lo, p, max_order, &knots);
    for &o in &start_orders {
        rows.push((lo_span - p, lo_ders[o].clone()));
    }
    for &t in &params {
        let span = find_span(n, p, t, &knots);
        let d = ders_basis(span, t, p, 0, &knots);
        rows.push((span - p, d[0].clone()));
    }
    let hi_span = find_span(n, p, u_hi, &knots);
    let hi_ders = ders_basis(hi_span, u_hi, p, max_order, &knots);
    for &o in &end_orders {
        rows.push((hi_span - p, hi_ders[o].clone()));
    }
    debug_assert_eq!(rows.len(), ncp);

    let (mut kl, mut ku) = (0usize, 0usize);
    for (r, (c0, coef)) in rows.iter().enumerate() {
        for (j, &v) in coef.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let c = c0 + j;
            if c > r {
                ku = ku.max(c - r);
            } else {
                kl = kl.max(r - c);
            }
        }
    }
    let mut a = BandMatrix::new(ncp, kl, ku);
    for (r, (c0, coef)) in rows.iter().enumerate() {
        for (j, &v) in coef.iter().enumerate() {
            if v != 0.0 {
                a.set(r, c0 + j, v);
            }
        }
    }
    let mut rhs = vec![[0.0; 2]; ncp];
    for (j, pt) in w.points().iter().enumerate() {
        rhs[n_start + j] = *pt;
    }
    a.solve(&mut rhs)?;
    BSplineCurve::new(p, knots, rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub kappa: f64,
}

/// Fixed-resolution samples of a path: pose and unsigned curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialTrajectory {
    pub samples: Vec<PathSample>,
    /// Parameter step between samples (knot units, or seconds for analytic curves).
    pub resolution: f64,
}

impl InitialTrajectory {
    pub fn new(mut samples: Vec<PathSample>, resolution: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter_mut().enumerate() {
            if !(s.x.is_finite() && s.y.is_finite() && s.theta.is_finite()) {
                return Err(Error::InvalidInput(format!("sample {i} is not finite")));
            }
            if !(s.kappa.is_finite() && s.kappa >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has invalid curvature {}",
                    s.kappa
                )));
            }
            s.theta = wrap_angle(s.theta);
        }
        Ok(InitialTrajectory {
            samples,
            resolution,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Samples the curve every `du` over its clamped domain; the final sample sits
/// exactly on the domain end.
pub fn sample_initial_trajectory(c: &BSplineCurve, du: f64) -> Result<InitialTrajectory> {
    let (lo, hi) = c.domain();
    let len = hi - lo;
    if !(len > 0.0) {
        return Err(Error::InvalidInput("curve has an empty domain".into()));
    }
    if !(du > 0.0 && du < len) {
        return Err(Error::InvalidInput(format!(
            "resolution {du} must lie in (0, {len})"
        )));
    }
    let n = (len / du + 1e-9).floor() as usize + 1;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let u = if i + 1 == n { hi } else { lo + i as f64 * du };
        let d = c.derivatives(u, 2.min(c.degree))?;
        let theta = heading_of(d[1], u)?;
        let kappa = if c.degree >= 2 {
            curvature_of(d[1], d[2], u)?
        } else {
            0.0
        };
        samples.push(PathSample {
            x: d[0][0],
            y: d[0][1],
            theta,
            kappa,
        });
    }
    InitialTrajectory::new(samples, du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn path(pts: &[[f64; 2]]) -> WaypointPath {
        WaypointPath::new(pts.to_vec()).unwrap()
    }

    #[test]
    fn basis_examples() {
        let u = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(basis(0, 0, 0.5, &u).unwrap(), 1.0);
        assert_abs_diff_eq!(basis(0, 1, 0.5, &u).unwrap(), 0.5);
        assert!(matches!(basis(1, 2, 0.5, &u), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn partition_of_unity_on_clamped_knots() {
        let w = path(&[[0.0, 0.0], [1.0, 0.5], [2.5, 0.0], [3.0, 2.0], [5.0, 2.0]]);
        for p in 1..=4 {
            let k = chord_length_knots(&w, p, 1.0).unwrap();
            let ncp = k.len() - p - 1;
            let (lo, hi) = (k[p], k[k.len() - 1 - p]);
            for s in 0..=200 {
                let u = lo + (hi - lo) * s as f64 / 200.0;
                let sum: f64 = (0..ncp).map(|i| basis(i, p, u, &k).unwrap()).sum();
                assert!((sum - 1.0).abs() < 1e-12, "p={p} u={u} sum={sum}");
                for i in 0..ncp {
                    if u < k[i] || u > k[i + p + 1] {
                        assert_eq!(basis(i, p, u, &k).unwrap(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn ders_basis_agrees_with_recursion() {
        let w = path(&[[0.0, 0.0], [1.0, 0.5], [2.5, 0.0], [3.0, 2.0], [5.0, 2.0], [6.0, 1.0]]);
        let p = 3;
        let k = chord_length_knots(&w, p, 0.7).unwrap();
        let n = k.len() - p - 2;
        for s in 0..50 {
            let u = k[p] + (k[n + 1] - k[p]) * s as f64 / 49.0;
            let span = find_span(n, p, u, &k);
            let d = ders_basis(span, u, p, 0, &k);
            for j in 0..=p {
                let r = basis(span - p + j, p, u, &k).unwrap();
                assert!((d[0][j] - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chord_knots_examples() {
        let w = path(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let k = chord_length_knots(&w, 3, 1.0).unwrap();
        assert_eq!(k, vec![0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 2.0, 2.0, 2.0]);

        let w = path(&[[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]]);
        let k = chord_length_knots(&w, 3, 1.0).unwrap();
        assert_eq!(k.len(), w.len() + 6);
        assert_abs_diff_eq!(k[4] - k[3], 1.0);
        assert_abs_diff_eq!(k[5] - k[4], 2.0);
        // domain length telescopes to u0 * sum(d) / d0
        let k = chord_length_knots(&w, 3, 0.5).unwrap();
        assert_abs_diff_eq!(k[k.len() - 1] - k[0], 0.5 * 3.0 / 1.0);

        assert!(WaypointPath::new(vec![[0.0, 0.0], [0.0, 0.0]]).is_err());
        assert!(chord_length_knots(&w, 3, 0.0).is_err());
    }

    #[test]
    fn chord_knots_are_local() {
        let pts = vec![[0.0, 0.0], [1.0, 0.3], [2.0, 0.0], [3.0, 1.0], [4.0, 1.5], [5.0, 1.0]];
        let base = chord_length_knots(&path(&pts), 3, 1.0).unwrap();
        let mut moved = pts.clone();
        moved[3] = [3.2, 0.6];
        let k = chord_length_knots(&path(&moved), 3, 1.0).unwrap();
        // waypoint 3 sets the knot of param t_3 (index p + 3) and everything after
        for i in 0..3 + 3 {
            assert_eq!(base[i], k[i], "knot {i} changed");
        }
        assert_ne!(base[6], k[6]);
    }

    #[test]
    fn two_point_linear_fit() {
        let w = path(&[[0.0, 0.0], [2.0, 1.0]]);
        let c = fit(&w, 1).unwrap();
        assert_eq!(c.control_points.len(), 2);
        let (lo, hi) = c.domain();
        let mid = c.eval(0.5 * (lo + hi)).unwrap();
        assert_abs_diff_eq!(mid[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mid[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn collinear_fit_stays_on_line() {
        let w = path(&[[0.0, 0.0], [0.5, 0.25], [2.0, 1.0], [3.0, 1.5], [3.2, 1.6]]);
        let c = fit(&w, 3).unwrap();
        assert_eq!(c.control_points.len(), w.len() + 2);
        let (lo, hi) = c.domain();
        for s in 0..=100 {
            let u = lo + (hi - lo) * s as f64 / 100.0;
            let q = c.eval(u).unwrap();
            assert!((q[1] - 0.5 * q[0]).abs() < 1e-9);
            assert_abs_diff_eq!(c.curvature(u).unwrap(), 0.0, epsilon = 1e-9);
        }
        let first = c.eval(lo).unwrap();
        let last = c.eval(hi).unwrap();
        assert_abs_diff_eq!(first[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(last[0], 3.2, epsilon = 1e-9);
        assert_abs_diff_eq!(last[1], 1.6, epsilon = 1e-9);
    }

    #[test]
    fn fit_interpolates_waypoints_for_all_degrees() {
        let pts: Vec<[f64; 2]> = (0..25)
            .map(|i| {
                let t = i as f64 * 0.3;
                [t.cos() * (1.0 + 0.1 * t), t.sin() * 2.0]
            })
            .collect();
        let w = path(&pts);
        for p in 1..=5 {
            let c = fit(&w, p).unwrap();
            let params = chord_parameters(&w, w.chords()[0]).unwrap();
            for (t, pt) in params.iter().zip(w.points()) {
                let q = c.eval(*t).unwrap();
                assert!(dist(q, *pt) < 1e-9, "p={p}: residual {}", dist(q, *pt));
            }
        }
    }

    #[test]
    fn natural_end_conditions_hold() {
        let w = path(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [3.0, 1.0]]);
        let c = fit(&w, 3).unwrap();
        let (lo, hi) = c.domain();
        let a = c.eval_derivative(lo, 2).unwrap();
        let b = c.eval_derivative(hi, 2).unwrap();
        assert!(a[0].abs() < 1e-9 && a[1].abs() < 1e-9);
        assert!(b[0].abs() < 1e-9 && b[1].abs() < 1e-9);
    }

    #[test]
    fn circle_curvature() {
        let r = 2.0;
        let pts: Vec<[f64; 2]> = (0..=40)
            .map(|i| {
                let a = PI * i as f64 / 40.0;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let c = fit(&path(&pts), 3).unwrap();
        let (lo, hi) = c.domain();
        for s in 0..=100 {
            let u = lo + (hi - lo) * (0.15 + 0.7 * s as f64 / 100.0);
            let k = c.curvature(u).unwrap();
            assert!((k - 0.5).abs() < 0.01, "kappa {k} at {u}");
        }
    }

    #[test]
    fn heading_branches() {
        assert_abs_diff_eq!(heading_of([1.0, 0.0], 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(heading_of([0.0, -1.0], 0.0).unwrap(), -PI / 2.0);
        assert_abs_diff_eq!(heading_of([-1.0, 0.0], 0.0).unwrap(), PI);
        assert_abs_diff_eq!(heading_of([-1.0, -0.0], 0.0).unwrap(), PI);
        assert_abs_diff_eq!(heading_of([1.0, 1.0], 0.0).unwrap(), PI / 4.0);
        assert!(matches!(
            heading_of([0.0, 1e-12], 0.3),
            Err(Error::DegenerateTangent { .. })
        ));
    }

    #[test]
    fn derivative_errors() {
        let w = path(&[[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]);
        let c = fit(&w, 1).unwrap();
        assert!(matches!(c.eval_derivative(0.5, 2), Err(Error::DerivativeOrder { .. })));
        assert!(matches!(c.curvature(0.5), Err(Error::DerivativeOrder { .. })));
        let c = fit(&w, 3).unwrap();
        assert!(matches!(c.eval(-1.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn sampling_counts_and_straight_line() {
        let w = path(&[[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]]);
        let c = fit_with_u0(&w, 3, 0.5).unwrap();
        assert_eq!(c.domain(), (0.0, 1.0));
        let t = sample_initial_trajectory(&c, 0.25).unwrap();
        assert_eq!(t.len(), 5);
        for s in &t.samples {
            assert_abs_diff_eq!(s.theta, PI / 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.kappa, 0.0, epsilon = 1e-9);
        }
        let last = t.samples.last().unwrap();
        assert_abs_diff_eq!(last.x, 1.0, epsilon = 1e-12);
        assert!(sample_initial_trajectory(&c, 2.0).is_err());
        assert!(sample_initial_trajectory(&c, 0.0).is_err());
        // non-divisible resolution: last sample still on the domain end
        let t = sample_initial_trajectory(&c, 0.3).unwrap();
        assert_eq!(t.len(), 4);
        assert_abs_diff_eq!(t.samples[3].y, 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn derivative_matches_finite_difference(seed in 0u64..1000, frac in 0.02f64..0.98) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pts = vec![[0.0, 0.0]];
            for _ in 0..8 {
                let last: [f64; 2] = *pts.last().unwrap();
                let a: f64 = rng.gen_range(-1.0..1.0);
                let l: f64 = rng.gen_range(0.3..1.5);
                pts.push([last[0] + l * a.cos(), last[1] + l * a.sin()]);
            }
            let c = fit(&path(&pts), 3).unwrap();
            let (lo, hi) = c.domain();
            let u = lo + (hi - lo) * frac;
            let h = 1e-6;
            let a = c.eval(u - h).unwrap();
            let b = c.eval(u + h).unwrap();
            let fd = [(b[0] - a[0]) / (2.0 * h), (b[1] - a[1]) / (2.0 * h)];
            let d = c.eval_derivative(u, 1).unwrap();
            let err = (fd[0] - d[0]).hypot(fd[1] - d[1]);
            prop_assert!(err <= 1e-5 * d[0].hypot(d[1]).max(1e-3), "err {}", err);
        }

        #[test]
        fn sampled_heading_steps_are_small(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pts = vec![[0.0, 0.0]];
            let mut heading: f64 = 0.0;
            for _ in 0..10 {
                heading += rng.gen_range(-0.8..0.8);
                let last: [f64; 2] = *pts.last().unwrap();
                pts.push([last[0] + heading.cos(), last[1] + heading.sin()]);
            }
            let c = fit(&path(&pts), 3).unwrap();
            let t = sample_initial_trajectory(&c, 0.05).unwrap();
            for w in t.samples.windows(2) {
                prop_assert!(wrap_angle(w[1].theta - w[0].theta).abs() < PI);
                prop_assert!(w[0].theta > -PI && w[0].theta <= PI);
            }
        }
    }
}
