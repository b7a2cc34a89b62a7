//! Nonzero B-spline basis functions and their derivatives (Cox-de Boor).

use crate::mfa::KnotVector;
use crate::scalar::Real;

/// Highest supported polynomial degree; basis scratch space lives on the stack.
pub const MAX_DEGREE: usize = 7;
pub(crate) const MAX_ORDER: usize = MAX_DEGREE + 1;

/// Values of the `p + 1` basis functions `N[span-p ..= span]` at `u`.
pub fn basis_funs<T: Real>(kv: &KnotVector<T>, span: usize, u: T) -> Vec<T> {
    let mut out = [T::zero(); MAX_ORDER];
    basis_into(kv, span, u, &mut out);
    out[..=kv.degree()].to_vec()
}

/// Writes the nonzero basis values into `out[..=p]`.
#[inline]
pub(crate) fn basis_into<T: Real>(kv: &KnotVector<T>, span: usize, u: T, out: &mut [T; MAX_ORDER]) {
    let p = kv.degree();
    let knots = kv.knots();
    let mut left = [T::zero(); MAX_ORDER];
    let mut right = [T::zero(); MAX_ORDER];
    out[0] = T::one();
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = T::zero();
        for r in 0..j {
            let temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Basis values and derivatives up to `order`: row `k` holds the `k`-th
/// derivative of `N[span-p ..= span]` with respect to `u`. Rows past the
/// degree are zero.
pub fn ders_basis_funs<T: Real>(
    kv: &KnotVector<T>,
    span: usize,
    u: T,
    order: usize,
) -> Vec<Vec<T>> {
    let p = kv.degree();
    let mut rows = vec![vec![T::zero(); p + 1]; order + 1];
    let n = order.min(p);
    let mut buf = [[T::zero(); MAX_ORDER]; MAX_ORDER];
    ders_into(kv, span, u, n, &mut buf);
    for (k, row) in rows.iter_mut().enumerate().take(n + 1) {
        row.copy_from_slice(&buf[k][..=p]);
    }
    rows
}

/// Derivative table for `order <= p` into `ders[k][..=p]`.
pub(crate) fn ders_into<T: Real>(
    kv: &KnotVector<T>,
    span: usize,
    u: T,
    order: usize,
    ders: &mut [[T; MAX_ORDER]; MAX_ORDER],
) {
    let p = kv.degree();
    let knots = kv.knots();
    let mut ndu = [[T::zero(); MAX_ORDER]; MAX_ORDER];
    let mut left = [T::zero(); MAX_ORDER];
    let mut right = [T::zero(); MAX_ORDER];
    ndu[0][0] = T::one();
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = T::zero();
        for r in 0..j {
            // Lower triangle holds knot differences, upper triangle basis values.
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = [[T::zero(); MAX_ORDER]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = T::one();
        for k in 1..=order {
            let mut d = T::zero();
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize {
                k - 1
            } else {
                p - r
            };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = T::of_usize(p);
    for k in 1..=order {
        for j in 0..=p {
            ders[k][j] *= factor;
        }
        factor *= T::of_usize(p - k);
    }
}
