//! Banded least-squares solves for 1-D curve fits.

use crate::error::{Error, Result};
use crate::mfa::basis::{basis_into, MAX_ORDER};
use crate::mfa::KnotVector;
use crate::scalar::Real;

/// Sparse collocation matrix: row `r` has `p + 1` nonzeros starting at column `first[r]`.
#[derive(Debug, Clone)]
pub(crate) struct Collocation<T> {
    pub first: Vec<usize>,
    pub values: Vec<[T; MAX_ORDER]>,
    pub order: usize,
    pub n_ctrl: usize,
}

impl<T: Real> Collocation<T> {
    pub fn new(kv: &KnotVector<T>, params: &[T]) -> Self {
        let p = kv.degree();
        let mut first = Vec::with_capacity(params.len());
        let mut values = Vec::with_capacity(params.len());
        for &u in params {
            let span = kv.span_unchecked(u);
            let mut row = [T::zero(); MAX_ORDER];
            basis_into(kv, span, u, &mut row);
            first.push(span - p);
            values.push(row);
        }
        Self {
            first,
            values,
            order: p + 1,
            n_ctrl: kv.n_ctrl(),
        }
    }

    pub fn rows(&self) -> usize {
        self.first.len()
    }

    /// Applies the matrix: `out[r] = sum_c N[r][c] * coeffs[c * stride]`.
    #[inline]
    pub fn apply_strided(&self, coeffs: &[T], stride: usize, out: &mut [T]) {
        for (r, o) in out.iter_mut().enumerate() {
            let c0 = self.first[r];
            let row = &self.values[r];
            let mut acc = T::zero();
            for (j, &w) in row.iter().enumerate().take(self.order) {
                acc += w * coeffs[(c0 + j) * stride];
            }
            *o = acc;
        }
    }
}

/// Cholesky factor of the banded normal matrix `NᵀN`, bandwidth `p`.
#[derive(Debug, Clone)]
pub(crate) struct NormalSolver<T> {
    n: usize,
    bw: usize,
    /// Lower factor, dense row-major; only the band is touched.
    l: Vec<T>,
    basis: Collocation<T>,
}

impl<T: Real> NormalSolver<T> {
    pub fn new(basis: Collocation<T>) -> Result<Self> {
        let n = basis.n_ctrl;
        let bw = basis.order - 1;
        if basis.rows() < n {
            return Err(Error::Numeric(format!(
                "{} samples cannot determine {n} control points",
                basis.rows()
            )));
        }
        let mut a = vec![T::zero(); n * n];
        for (r, &c0) in basis.first.iter().enumerate() {
            let row = &basis.values[r];
            for i in 0..basis.order {
                for j in 0..=i {
                    a[(c0 + i) * n + c0 + j] += row[i] * row[j];
                }
            }
        }
        // Band-limited Cholesky: entries outside |i - j| <= bw stay zero.
        let scale = (0..n).map(|i| a[i * n + i]).fold(T::zero(), T::max);
        for j in 0..n {
            let k0 = j.saturating_sub(bw);
            let mut d = a[j * n + j];
            for k in k0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > scale * T::of(1e-14)) {
                return Err(Error::Numeric(format!(
                    "normal equations are singular at column {j} (pivot {d})"
                )));
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let mut s = a[i * n + j];
                for k in i.saturating_sub(bw).max(k0)..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
        }
        Ok(Self { n, bw, l: a, basis })
    }

    /// Least-squares coefficients for samples `q[r * stride]`, written to
    /// `out[c * out_stride]`. `rhs` is scratch of length `n`.
    pub fn solve_strided(
        &self,
        q: &[T],
        stride: usize,
        out: &mut [T],
        out_stride: usize,
        rhs: &mut [T],
    ) {
        let n = self.n;
        rhs.iter_mut().for_each(|v| *v = T::zero());
        for (r, &c0) in self.basis.first.iter().enumerate() {
            let qv = q[r * stride];
            let row = &self.basis.values[r];
            for j in 0..self.basis.order {
                rhs[c0 + j] += row[j] * qv;
            }
        }
        for i in 0..n {
            let mut s = rhs[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[i * n + k] * rhs[k];
            }
            rhs[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in i + 1..(i + self.bw + 1).min(n) {
                s -= self.l[k * n + i] * rhs[k];
            }
            rhs[i] = s / self.l[i * n + i];
        }
        for (c, &v) in rhs.iter().enumerate() {
            out[c * out_stride] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// Dense normal equations solved by Gaussian elimination, for comparison.
    fn dense_lsq(kv: &KnotVector<f64>, u: &[f64], q: &[f64]) -> Vec<f64> {
        let n = kv.n_ctrl();
        let col = Collocation::new(kv, u);
        let mut full = vec![vec![0.0; n]; u.len()];
        for r in 0..u.len() {
            for j in 0..col.order {
                full[r][col.first[r] + j] = col.values[r][j];
            }
        }
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = (0..u.len()).map(|r| full[r][i] * full[r][j]).sum();
            }
            a[i][n] = (0..u.len()).map(|r| full[r][i] * q[r]).sum();
        }
        for c in 0..n {
            let piv = (c..n)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
                .unwrap();
            a.swap(c, piv);
            for r in 0..n {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n] / a[i][i]).collect()
    }

    #[test]
    fn banded_solve_matches_dense_reference() {
        for (p, n_ctrl, n_samples) in [(1, 4, 9), (2, 7, 20), (3, 10, 10), (2, 12, 33)] {
            let kv = KnotVector::<f64>::clamped_uniform(p, n_ctrl).unwrap();
            let u = params(n_samples);
            let q: Vec<f64> = u.iter().map(|x| (7.0 * x).sin() + x * x).collect();
            let solver = NormalSolver::new(Collocation::new(&kv, &u)).unwrap();
            let mut out = vec![0.0; n_ctrl];
            let mut rhs = vec![0.0; n_ctrl];
            solver.solve_strided(&q, 1, &mut out, 1, &mut rhs);
            let want = dense_lsq(&kv, &u, &q);
            for (a, b) in out.iter().zip(&want) {
                assert!((a - b).abs() < 1e-9, "p={p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let kv = KnotVector::<f64>::clamped_uniform(2, 6).unwrap();
        assert!(NormalSolver::new(Collocation::new(&kv, &params(5))).is_err());
    }
}
