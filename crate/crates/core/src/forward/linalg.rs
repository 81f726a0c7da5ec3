//! Sparse symmetric storage, banded Cholesky and Jacobi-preconditioned CG.

use crate::error::{Error, Result};

/// Compressed sparse rows holding both triangles of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates. The
    /// sort is stable so duplicate sums do not depend on anything but the
    /// triplet order.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len() / 4);
        let mut vals: Vec<f64> = Vec::with_capacity(t.len() / 4);
        let mut last = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(p) => self.vals[span.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// Largest `|r − c|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    /// `max |A − Aᵀ|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, v)| (v - self.get(c, r)).abs()))
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul(y)).map(|(a, b)| a * b).sum()
    }
}

/// Cholesky factor `L` of a banded SPD matrix, stored row by row over the
/// band `[i − bw, i]`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c <= r {
                    l[r * w + (c + bw - r)] = v;
                }
            }
        }
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let (ri, rj) = (i * w + bw - i, j * w + bw - j);
                let dot: f64 = (lo..j).map(|k| l[ri + k] * l[rj + k]).sum();
                let s = l[ri + j] - dot;
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                    }
                    l[ri + i] = s.sqrt();
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let ri = i * w + bw - i;
            let lo = i.saturating_sub(bw);
            let dot: f64 = (lo..i).map(|k| self.l[ri + k] * y[k]).sum();
            y[i] = (y[i] - dot) / self.l[ri + i];
        }
        for i in (0..n).rev() {
            let ri = i * w + bw - i;
            y[i] /= self.l[ri + i];
            let (yi, lo) = (y[i], i.saturating_sub(bw));
            for (yk, l) in y[lo..i].iter_mut().zip(&self.l[ri + lo..ri + i]) {
                *yk -= l * yi;
            }
        }
        y
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients, stopping at relative residual
/// `tol`.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgStats)> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            CgStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite {
                index: it,
                pivot: pap,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r) / bnorm;
        if res <= tol {
            return Ok((
                x,
                CgStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: norm(&r) / bnorm,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    // 1D Laplacian plus a second off-diagonal: SPD with bandwidth 2.
    fn sample(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 6.0));
            if i + 1 < n {
                t.push((i, i + 1, -2.0));
                t.push((i + 1, i, -2.0));
            }
            if i + 2 < n {
                t.push((i, i + 2, 0.5));
                t.push((i + 2, i, 0.5));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_are_summed() {
        let a =
            CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (0, 1, 2.0)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn cholesky_and_cg_agree() {
        let a = sample(40);
        assert_eq!(a.bandwidth(), 2);
        let x_true: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul(&x_true);
        let x = BandCholesky::factor(&a).unwrap().solve(&b);
        let (y, stats) = conjugate_gradient(&a, &b, 1e-12, 500).unwrap();
        assert!(stats.iterations > 0);
        for i in 0..40 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
            assert!((y[i] - x_true[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a =
            CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(
            BandCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }
}
