use crate::error::{Error, Result};
use crate::scalar::Real;

/// Clamped knot vector on `[0, 1]`: the first and last `degree + 1` knots are
/// 0 and 1, interior knots lie strictly inside.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector<T> {
    degree: usize,
    knots: Vec<T>,
}

impl<T: Real> KnotVector<T> {
    /// Clamped vector with `n_ctrl - degree - 1` uniformly spaced interior knots.
    pub fn clamped_uniform(degree: usize, n_ctrl: usize) -> Result<Self> {
        if degree < 1 || degree > super::MAX_DEGREE {
            return Err(Error::Parameter(format!(
                "degree must be in 1..={}, got {degree}",
                super::MAX_DEGREE
            )));
        }
        if n_ctrl < degree + 1 {
            return Err(Error::Parameter(format!(
                "need at least degree+1 = {} control points, got {n_ctrl}",
                degree + 1
            )));
        }
        let spans = n_ctrl - degree;
        let mut knots = Vec::with_capacity(n_ctrl + degree + 1);
        knots.extend(std::iter::repeat_n(T::zero(), degree + 1));
        for i in 1..spans {
            knots.push(T::of_usize(i) / T::of_usize(spans));
        }
        knots.extend(std::iter::repeat_n(T::one(), degree + 1));
        Ok(Self { degree, knots })
    }

    /// Clamped vector whose interior knots follow the data parameters: knot
    /// averaging when `n_ctrl` equals the sample count, otherwise the
    /// interpolated placement that gives every span a similar number of
    /// parameters. Both keep the collocation matrix well conditioned.
    pub fn fitted(degree: usize, n_ctrl: usize, params: &[T]) -> Result<Self> {
        let uniform = Self::clamped_uniform(degree, n_ctrl)?;
        let m = params.len();
        if n_ctrl > m {
            return Err(Error::Parameter(format!(
                "{n_ctrl} control points for {m} parameters"
            )));
        }
        let p = degree;
        let mut knots = Vec::with_capacity(n_ctrl + p + 1);
        knots.extend(std::iter::repeat_n(T::zero(), p + 1));
        if n_ctrl == m {
            for j in 1..n_ctrl - p {
                let sum: T = params[j..j + p].iter().copied().sum();
                knots.push(sum / T::of_usize(p));
            }
        } else {
            let d = m as f64 / (n_ctrl - p) as f64;
            for j in 1..n_ctrl - p {
                let x = j as f64 * d;
                let i = x.floor() as usize;
                let a = T::of(x - i as f64);
                knots.push((T::one() - a) * params[i - 1] + a * params[i]);
            }
        }
        knots.extend(std::iter::repeat_n(T::one(), p + 1));
        debug_assert_eq!(knots.len(), uniform.knots.len());
        Self::from_knots(p, knots)
    }

    /// Validates an explicit clamped knot sequence.
    pub fn from_knots(degree: usize, knots: Vec<T>) -> Result<Self> {
        if degree < 1 || degree > super::MAX_DEGREE {
            return Err(Error::Parameter(format!("unsupported degree {degree}")));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Parameter(format!(
                "degree {degree} needs at least {} knots, got {}",
                2 * (degree + 1),
                knots.len()
            )));
        }
        let m = knots.len();
        let clamped = knots[..=degree].iter().all(|&k| k == T::zero())
            && knots[m - degree - 1..].iter().all(|&k| k == T::one());
        if !clamped {
            return Err(Error::Parameter(
                "knot vector is not clamped to [0, 1]".into(),
            ));
        }
        let interior = &knots[degree + 1..m - degree - 1];
        if interior.iter().any(|&k| !(k > T::zero() && k < T::one())) {
            return Err(Error::Parameter(
                "interior knots must lie strictly inside (0, 1)".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parameter("knots must be nondecreasing".into()));
        }
        Ok(Self { degree, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn n_ctrl(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Index `i` with `knots[i] <= u < knots[i + 1]`; `u == 1` maps to the
    /// last nonempty span.
    pub fn find_span(&self, u: T) -> Result<usize> {
        if !(u >= T::zero() && u <= T::one()) {
            return Err(Error::ParamRange(u.to_f64_lossy()));
        }
        Ok(self.span_unchecked(u))
    }

    #[inline]
    pub(crate) fn span_unchecked(&self, u: T) -> usize {
        let n = self.n_ctrl() - 1;
        if u >= self.knots[n + 1] {
            return n;
        }
        if u <= self.knots[self.degree] {
            return self.degree;
        }
        // Largest i in [p, n] with knots[i] <= u.
        let (mut lo, mut hi) = (self.degree, n + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Inserts a knot strictly inside `(0, 1)`, adding one control point.
    pub fn insert(&mut self, u: T) -> Result<()> {
        if !(u > T::zero() && u < T::one()) {
            return Err(Error::ParamRange(u.to_f64_lossy()));
        }
        let pos = self.knots.partition_point(|&k| k <= u);
        self.knots.insert(pos, u);
        Ok(())
    }

    /// Schoenberg-Whitney check: every basis function can be matched with a
    /// distinct parameter inside its support, which makes the least-squares
    /// normal matrix nonsingular. `params` must be sorted.
    pub fn fits_parameters(&self, params: &[T]) -> bool {
        let p = self.degree;
        let n = self.n_ctrl();
        let mut next = 0;
        for j in 0..n {
            let (a, b) = (self.knots[j], self.knots[j + p + 1]);
            let mut found = false;
            while next < params.len() {
                let t = params[next];
                next += 1;
                let inside_left = t > a || (j == 0 && t >= a);
                let inside_right = t < b || (j == n - 1 && t <= b);
                if inside_left && inside_right {
                    found = true;
                    break;
                }
                if !inside_right {
                    return false;
                }
            }
            if !found {
                return false;
            }
        }
        true
    }
}
