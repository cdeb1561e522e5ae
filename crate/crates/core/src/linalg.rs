//! Small banded solvers: a general LU with partial pivoting (spline interpolation)
//! and a symmetric Cholesky factorization (interior-point normal equations).

use crate::error::{Error, Result};

/// General band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row position keeps a window of width `2*kl + ku + 1` starting at column
/// `i - kl`, which leaves room for the fill produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    rows: Vec<(isize, Vec<f64>)>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        let rows = (0..n)
            .map(|i| (i as isize - kl as isize, vec![0.0; width]))
            .collect();
        BandMatrix {
            n,
            kl,
            ku,
            width,
            rows,
        }
    }

    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let off = col as isize - self.rows[row].0;
        (off >= 0 && (off as usize) < self.width).then_some(off as usize)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map_or(0.0, |s| self.rows[row].1[s])
    }

    /// Panics when `(row, col)` lies outside the declared band.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let lo = row.saturating_sub(self.kl);
        assert!(
            col >= lo && col <= row + self.ku,
            "entry ({row}, {col}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(row, col).expect("band slot");
        self.rows[row].1[s] = value;
    }

    /// Solves `A X = B` in place for `M` right-hand-side columns, consuming the matrix.
    pub fn solve<const M: usize>(mut self, rhs: &mut [[f64; M]]) -> Result<()> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let scale = self
            .rows
            .iter()
            .flat_map(|r| r.1.iter())
            .fold(0.0f64, |a, &b| a.max(b.abs()));
        let tiny = scale * 1e-14;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut piv = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularSystem(k));
            }
            let hi = (k + self.kl + self.ku).min(n - 1);
            if piv != k {
                // columns left of k are already eliminated in both rows
                for c in k..=hi {
                    let (sa, sb) = (self.slot(k, c).unwrap(), self.slot(piv, c).unwrap());
                    let tmp = self.rows[k].1[sa];
                    self.rows[k].1[sa] = self.rows[piv].1[sb];
                    self.rows[piv].1[sb] = tmp;
                }
                rhs.swap(piv, k);
            }
            let pivot = self.get(k, k);
            for r in k + 1..=last {
                let f = self.get(r, k) / pivot;
                if f == 0.0 {
                    continue;
                }
                for c in k..=hi {
                    let a = self.get(k, c);
                    if a != 0.0 {
                        let s = self.slot(r, c).expect("fill inside window");
                        self.rows[r].1[s] -= f * a;
                    }
                }
                let pk = rhs[k];
                for (dst, src) in rhs[r].iter_mut().zip(pk.iter()) {
                    *dst -= f * src;
                }
            }
        }
        for k in (0..n).rev() {
            let hi = (k + self.kl + self.ku).min(n - 1);
            let mut acc = rhs[k];
            for c in k + 1..=hi {
                let a = self.get(k, c);
                if a != 0.0 {
                    for m in 0..M {
                        acc[m] -= a * rhs[c][m];
                    }
                }
            }
            let d = self.get(k, k);
            for v in acc.iter_mut() {
                *v /= d;
            }
            rhs[k] = acc;
        }
        Ok(())
    }
}

/// Symmetric positive (semi)definite band matrix, lower storage, half-bandwidth `b`.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    b: usize,
    /// `data[i * (b + 1) + j]` holds `A[i][i - b + j]`.
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, b: usize) -> Self {
        SymBand {
            n,
            b,
            data: vec![0.0; n * (b + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.b);
        i * (self.b + 1) + self.b + j - i
    }

    /// Adds `v` to `A[i][j]` (and implicitly `A[j][i]`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for v in y.iter_mut() {
            *v = 0.0;
        }
        for i in 0..self.n {
            let lo = i.saturating_sub(self.b);
            for j in lo..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
    }

    /// In-place Cholesky. Pivots that collapse below `rel_tol * max_diag` are replaced
    /// by a huge value, which zeroes that direction in subsequent solves.
    pub fn cholesky(mut self, rel_tol: f64) -> BandCholesky {
        let n = self.n;
        let b = self.b;
        let max_diag = (0..n)
            .map(|i| self.data[self.idx(i, i)].abs())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            let lo = i.saturating_sub(b);
            for j in lo..=i {
                let mut s = self.data[self.idx(i, j)];
                let kl = lo.max(j.saturating_sub(b));
                for k in kl..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if i == j {
                    let d = if s <= rel_tol * max_diag {
                        1e64
                    } else {
                        s
                    };
                    let id = self.idx(i, i);
                    self.data[id] = d.sqrt();
                } else {
                    let ij = self.idx(i, j);
                    self.data[ij] = s / self.data[self.idx(j, j)];
                }
            }
        }
        BandCholesky { factor: self }
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: SymBand,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &mut [f64]) {
        let f = &self.factor;
        let n = f.n;
        for i in 0..n {
            let lo = i.saturating_sub(f.b);
            let mut s = rhs[i];
            for k in lo..i {
                s -= f.data[f.idx(i, k)] * rhs[k];
            }
            rhs[i] = s / f.data[f.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            let hi = (i + f.b).min(n - 1);
            for k in i + 1..=hi {
                s -= f.data[f.idx(k, i)] * rhs[k];
            }
            rhs[i] = s / f.data[f.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn band_lu_matches_dense_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let (kl, ku) = (2, 1);
        let mut dense = vec![vec![0.0; n]; n];
        let mut a = BandMatrix::new(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal forces row interchanges
                let v: f64 = rng.gen_range(-1.0..1.0) + if i == j { 0.05 } else { 0.0 };
                dense[i][j] = v;
                a.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut rhs: Vec<[f64; 1]> = (0..n)
            .map(|i| [(0..n).map(|j| dense[i][j] * x[j]).sum()])
            .collect();
        a.solve(&mut rhs).unwrap();
        for i in 0..n {
            assert!((rhs[i][0] - x[i]).abs() < 1e-9, "{i}: {} vs {}", rhs[i][0], x[i]);
        }
    }

    #[test]
    fn band_lu_singular() {
        let mut a = BandMatrix::new(3, 1, 1);
        a.set(0, 0, 1.0);
        a.set(1, 0, 1.0);
        a.set(2, 2, 1.0);
        let mut rhs = vec![[1.0]; 3];
        assert!(matches!(a.solve(&mut rhs), Err(Error::SingularSystem(1))));
    }

    #[test]
    fn cholesky_solves_spd_band() {
        let n = 9;
        let mut m = SymBand::zeros(n, 2);
        for i in 0..n {
            m.add(i, i, 6.0);
            if i >= 1 {
                m.add(i, i - 1, -2.0);
            }
            if i >= 2 {
                m.add(i, i - 2, 0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut b = vec![0.0; n];
        m.mul_vec(&x, &mut b);
        let f = m.cholesky(1e-14);
        f.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
    }
}
