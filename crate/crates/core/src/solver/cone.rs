//! Second-order cone arithmetic for 3-dimensional blocks: Jordan algebra,
//! Nesterov–Todd scaling, and step-to-boundary.

pub type V3 = [f64; 3];

#[inline]
pub fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `x0^2 - |x1|^2`.
#[inline]
pub fn jnorm2(x: &V3) -> f64 {
    (x[0] - x[1].hypot(x[2])) * (x[0] + x[1].hypot(x[2]))
}

/// Jordan product `x ∘ y = (x·y, x0 y1 + y0 x1)`.
#[inline]
pub fn jprod(x: &V3, y: &V3) -> V3 {
    [
        dot(x, y),
        x[0] * y[1] + y[0] * x[1],
        x[0] * y[2] + y[0] * x[2],
    ]
}

/// Solves `l ∘ u = v` for `u`.
#[inline]
pub fn jdiv(l: &V3, v: &V3) -> V3 {
    let rho = jnorm2(l);
    let u0 = (l[0] * v[0] - l[1] * v[1] - l[2] * v[2]) / rho;
    [u0, (v[1] - u0 * l[1]) / l[0], (v[2] - u0 * l[2]) / l[0]]
}

/// Largest `α >= 0` with `x + α d` in the cone (infinite when unbounded); `x` interior.
pub fn max_step(x: &V3, d: &V3) -> f64 {
    // f(α) = a α² + 2 b α + c, c > 0; the first positive root bounds the step
    let a = d[0] * d[0] - d[1] * d[1] - d[2] * d[2];
    let b = x[0] * d[0] - x[1] * d[1] - x[2] * d[2];
    let c = jnorm2(x).max(0.0);
    let mut alpha = f64::INFINITY;
    if d[0] < 0.0 {
        alpha = -x[0] / d[0];
    }
    if a.abs() < 1e-300 {
        if b < 0.0 {
            alpha = alpha.min(-c / (2.0 * b));
        }
        return alpha;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        // no sign change of f; only the half-space condition matters
        return alpha;
    }
    let sq = disc.sqrt();
    // stable roots of a α² + 2 b α + c
    let q = -(b + b.signum() * sq);
    let r1 = q / a;
    let r2 = if q != 0.0 { c / q } else { f64::INFINITY };
    for r in [r1, r2] {
        if r > 0.0 {
            alpha = alpha.min(r);
        }
    }
    alpha
}

/// Nesterov–Todd scaling of one cone block: `W = η L(w)` with `L` the hyperbolic
/// rotation defined by `w` (`w0^2 - |w1|^2 = 1`), so that `W z = W^{-1} s = λ`.
#[derive(Debug, Clone, Copy)]
pub struct SocScaling {
    pub eta: f64,
    pub w: V3,
}

impl SocScaling {
    pub fn new(s: &V3, z: &V3) -> Self {
        let sr = jnorm2(s).max(1e-300).sqrt();
        let zr = jnorm2(z).max(1e-300).sqrt();
        let sb = [s[0] / sr, s[1] / sr, s[2] / sr];
        let zb = [z[0] / zr, z[1] / zr, z[2] / zr];
        let gamma = ((1.0 + dot(&sb, &zb)) / 2.0).sqrt();
        let w = [
            (sb[0] + zb[0]) / (2.0 * gamma),
            (sb[1] - zb[1]) / (2.0 * gamma),
            (sb[2] - zb[2]) / (2.0 * gamma),
        ];
        SocScaling {
            eta: (sr / zr).sqrt(),
            w,
        }
    }

    fn rotate(w: &V3, sign: f64, x: &V3) -> V3 {
        let (w1, w2) = (sign * w[1], sign * w[2]);
        let wx = w1 * x[1] + w2 * x[2];
        let f = x[0] + wx / (1.0 + w[0]);
        [w[0] * x[0] + wx, x[1] + f * w1, x[2] + f * w2]
    }

    pub fn apply(&self, x: &V3) -> V3 {
        let r = Self::rotate(&self.w, 1.0, x);
        [self.eta * r[0], self.eta * r[1], self.eta * r[2]]
    }

    pub fn apply_inv(&self, x: &V3) -> V3 {
        let r = Self::rotate(&self.w, -1.0, x);
        [r[0] / self.eta, r[1] / self.eta, r[2] / self.eta]
    }

    #[cfg(test)]
    /// `W^2 = η² (2 w wᵀ - J)` as a dense symmetric matrix.
    pub fn squared(&self) -> [[f64; 3]; 3] {
        self.quad(1.0, self.eta * self.eta)
    }

    /// `W^{-2} = η^{-2} (2 ŵ ŵᵀ - J)` with `ŵ = J w`.
    pub fn inv_squared(&self) -> [[f64; 3]; 3] {
        self.quad(-1.0, 1.0 / (self.eta * self.eta))
    }

    /// `W^{-2}` restricted to the plane spanned by `(1, ±1, 0)/√2`, written as the
    /// 2×2 block `[[pp, pm], [pm, mm]]` in those coordinates. The entries come from
    /// `ŵ0 ± ŵ1` computed without cancellation.
    pub fn inv_squared_rotated(&self) -> (f64, f64, f64) {
        let (w0, w1, w2) = (self.w[0], -self.w[1], -self.w[2]);
        let big = w0 + w1.abs();
        let small = (1.0 + w2 * w2) / big;
        let (plus, minus) = if w1 >= 0.0 { (big, small) } else { (small, big) };
        let f = 1.0 / (self.eta * self.eta);
        (f * plus * plus, f * w2 * w2, f * minus * minus)
    }

    fn quad(&self, sign: f64, scale: f64) -> [[f64; 3]; 3] {
        let w = [self.w[0], sign * self.w[1], sign * self.w[2]];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = 2.0 * w[i] * w[j];
            }
        }
        m[0][0] -= 1.0;
        m[1][1] += 1.0;
        m[2][2] += 1.0;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        m
    }
}

pub fn mat_vec(m: &[[f64; 3]; 3], x: &V3) -> V3 {
    [dot(&m[0], x), dot(&m[1], x), dot(&m[2], x)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &V3, b: &V3, tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol * (1.0 + b[i].abs()))
    }

    #[test]
    fn nt_scaling_maps_s_and_z_to_the_same_point() {
        let s = [3.0, 1.0, -2.0];
        let z = [2.0, -0.5, 0.7];
        let w = SocScaling::new(&s, &z);
        let lz = w.apply(&z);
        let ls = w.apply_inv(&s);
        assert!(close(&lz, &ls, 1e-12), "{lz:?} vs {ls:?}");
        let back = w.apply_inv(&w.apply(&[0.3, 0.2, -0.1]));
        assert!(close(&back, &[0.3, 0.2, -0.1], 1e-12));
        let w2 = w.squared();
        let direct = w.apply(&w.apply(&z));
        assert!(close(&mat_vec(&w2, &z), &direct, 1e-12));
        let wi2 = w.inv_squared();
        let (pp, pm, mm) = w.inv_squared_rotated();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (p, m) = ([r, r, 0.0], [r, -r, 0.0]);
        assert!((dot(&p, &mat_vec(&wi2, &p)) - pp).abs() < 1e-12);
        assert!((dot(&p, &mat_vec(&wi2, &m)) - pm).abs() < 1e-12);
        assert!((dot(&m, &mat_vec(&wi2, &m)) - mm).abs() < 1e-12);
        assert!(close(&mat_vec(&wi2, &s), &w.apply_inv(&w.apply_inv(&s)), 1e-12));
    }

    #[test]
    fn jordan_division_inverts_product() {
        let l = [2.0, 0.3, -0.4];
        let u = [0.5, -1.0, 2.0];
        let v = jprod(&l, &u);
        assert!(close(&jdiv(&l, &v), &u, 1e-12));
    }

    #[test]
    fn step_to_boundary() {
        let x = [2.0, 0.0, 0.0];
        let a = max_step(&x, &[-1.0, 0.0, 0.0]);
        assert!((a - 2.0).abs() < 1e-12);
        let a = max_step(&x, &[0.0, 1.0, 0.0]);
        assert!((a - 2.0).abs() < 1e-12);
        assert!(max_step(&x, &[1.0, 0.5, 0.0]).is_infinite());
        let d = [-0.3, 0.8, 0.2];
        let a = max_step(&x, &d);
        let y = [x[0] + a * d[0], x[1] + a * d[1], x[2] + a * d[2]];
        assert!(jnorm2(&y).abs() < 1e-9 && y[0] >= 0.0);
    }
}
