use crate::error::{Error, Result};
use crate::mfa::basis::{basis_into, ders_into, MAX_ORDER};
use crate::mfa::KnotVector;
use crate::scalar::Real;

/// Trivariate tensor-product B-spline over an axis-aligned physical box.
///
/// Control points are stored x-fastest. The physical box maps affinely onto
/// the parameter cube `[0, 1]^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfaModel<T> {
    pub(crate) knots: [KnotVector<T>; 3],
    pub(crate) ctrl: Vec<T>,
    pub(crate) domain_min: [T; 3],
    pub(crate) domain_max: [T; 3],
    pub(crate) source_dims: [usize; 3],
    pub(crate) e_max_achieved: T,
}

impl<T: Real> MfaModel<T> {
    pub fn new(
        knots: [KnotVector<T>; 3],
        ctrl: Vec<T>,
        domain_min: [T; 3],
        domain_max: [T; 3],
        source_dims: [usize; 3],
        e_max_achieved: T,
    ) -> Result<Self> {
        let expected: usize = knots.iter().map(KnotVector::n_ctrl).product();
        if ctrl.len() != expected {
            return Err(Error::Dimension(format!(
                "knot vectors need {expected} control points, got {}",
                ctrl.len()
            )));
        }
        if (0..3).any(|a| !(domain_max[a] > domain_min[a])) {
            return Err(Error::Parameter(
                "model domain must have positive extent".into(),
            ));
        }
        Ok(Self {
            knots,
            ctrl,
            domain_min,
            domain_max,
            source_dims,
            e_max_achieved,
        })
    }

    pub fn knots(&self) -> &[KnotVector<T>; 3] {
        &self.knots
    }

    pub fn degree(&self) -> [usize; 3] {
        [
            self.knots[0].degree(),
            self.knots[1].degree(),
            self.knots[2].degree(),
        ]
    }

    pub fn n_ctrl(&self) -> [usize; 3] {
        [
            self.knots[0].n_ctrl(),
            self.knots[1].n_ctrl(),
            self.knots[2].n_ctrl(),
        ]
    }

    pub fn ctrl(&self) -> &[T] {
        &self.ctrl
    }

    /// Mutable access for tests that probe local support.
    pub fn ctrl_mut(&mut self) -> &mut [T] {
        &mut self.ctrl
    }

    pub fn domain_min(&self) -> [T; 3] {
        self.domain_min
    }

    pub fn domain_max(&self) -> [T; 3] {
        self.domain_max
    }

    pub fn source_dims(&self) -> [usize; 3] {
        self.source_dims
    }

    /// Max relative error over the input samples recorded at encode time.
    pub fn e_max_achieved(&self) -> T {
        self.e_max_achieved
    }

    #[inline]
    pub fn ctrl_index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.n_ctrl();
        i + n[0] * (j + n[1] * k)
    }

    pub fn contains(&self, p: [T; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.domain_min[a] && p[a] <= self.domain_max[a])
    }

    /// Parameter coordinate of `p`; errors if `p` is outside the domain.
    pub fn parameter(&self, p: [T; 3]) -> Result<[T; 3]> {
        if !self.contains(p) {
            return Err(Error::Domain {
                point: crate::scalar::vec3_f64(p),
                min: crate::scalar::vec3_f64(self.domain_min),
                max: crate::scalar::vec3_f64(self.domain_max),
            });
        }
        Ok(self.parameter_unchecked(p))
    }

    #[inline]
    pub(crate) fn parameter_unchecked(&self, p: [T; 3]) -> [T; 3] {
        let mut u = [T::zero(); 3];
        for a in 0..3 {
            let t = (p[a] - self.domain_min[a]) / (self.domain_max[a] - self.domain_min[a]);
            u[a] = t.max(T::zero()).min(T::one());
        }
        u
    }

    /// Spline value at physical point `p`, summing the `(p+1)^3` control
    /// points whose basis functions are nonzero there.
    pub fn decode_value(&self, p: [T; 3]) -> Result<T> {
        let u = self.parameter(p)?;
        Ok(self.value_at_param(u))
    }

    pub(crate) fn value_at_param(&self, u: [T; 3]) -> T {
        let mut basis = [[T::zero(); MAX_ORDER]; 3];
        let mut first = [0usize; 3];
        for a in 0..3 {
            let kv = &self.knots[a];
            let span = kv.span_unchecked(u[a]);
            basis_into(kv, span, u[a], &mut basis[a]);
            first[a] = span - kv.degree();
        }
        let [ox, oy, oz] = [
            self.knots[0].degree() + 1,
            self.knots[1].degree() + 1,
            self.knots[2].degree() + 1,
        ];
        let n = self.n_ctrl();
        let mut acc = T::zero();
        for k in 0..oz {
            let mut acc_y = T::zero();
            for j in 0..oy {
                let row = first[0] + n[0] * (first[1] + j + n[1] * (first[2] + k));
                let mut acc_x = T::zero();
                for i in 0..ox {
                    acc_x += basis[0][i] * self.ctrl[row + i];
                }
                acc_y += basis[1][j] * acc_x;
            }
            acc += basis[2][k] * acc_y;
        }
        acc
    }

    /// Physical-space gradient: parametric partials scaled by `1 / extent`
    /// per axis.
    pub fn decode_gradient(&self, p: [T; 3]) -> Result<[T; 3]> {
        let u = self.parameter(p)?;
        Ok(self.value_and_gradient_at_param(u).1)
    }

    /// Value and physical gradient in one pass.
    pub fn decode_value_and_gradient(&self, p: [T; 3]) -> Result<(T, [T; 3])> {
        let u = self.parameter(p)?;
        Ok(self.value_and_gradient_at_param(u))
    }

    pub(crate) fn value_and_gradient_at_param(&self, u: [T; 3]) -> (T, [T; 3]) {
        let mut ders = [[[T::zero(); MAX_ORDER]; MAX_ORDER]; 3];
        let mut first = [0usize; 3];
        for a in 0..3 {
            let kv = &self.knots[a];
            let span = kv.span_unchecked(u[a]);
            ders_into(kv, span, u[a], 1, &mut ders[a]);
            first[a] = span - kv.degree();
        }
        let [ox, oy, oz] = [
            self.knots[0].degree() + 1,
            self.knots[1].degree() + 1,
            self.knots[2].degree() + 1,
        ];
        let n = self.n_ctrl();
        let (mut v, mut gx, mut gy, mut gz) = (T::zero(), T::zero(), T::zero(), T::zero());
        for k in 0..oz {
            let (nz, dz) = (ders[2][0][k], ders[2][1][k]);
            let (mut v_y, mut gx_y, mut gy_y) = (T::zero(), T::zero(), T::zero());
            for j in 0..oy {
                let (ny, dy) = (ders[1][0][j], ders[1][1][j]);
                let row = first[0] + n[0] * (first[1] + j + n[1] * (first[2] + k));
                let (mut v_x, mut gx_x) = (T::zero(), T::zero());
                for i in 0..ox {
                    let c = self.ctrl[row + i];
                    v_x += ders[0][0][i] * c;
                    gx_x += ders[0][1][i] * c;
                }
                v_y += ny * v_x;
                gx_y += ny * gx_x;
                gy_y += dy * v_x;
            }
            v += nz * v_y;
            gx += nz * gx_y;
            gy += nz * gy_y;
            gz += dz * v_y;
        }
        let inv = |a: usize| T::one() / (self.domain_max[a] - self.domain_min[a]);
        (v, [gx * inv(0), gy * inv(1), gz * inv(2)])
    }

    /// Converts the coefficient type.
    pub fn cast<U: Real>(&self) -> MfaModel<U> {
        let conv_v = |v: &[T]| {
            v.iter()
                .map(|x| U::of(x.to_f64_lossy()))
                .collect::<Vec<U>>()
        };
        let conv3 = |v: [T; 3]| {
            [
                U::of(v[0].to_f64_lossy()),
                U::of(v[1].to_f64_lossy()),
                U::of(v[2].to_f64_lossy()),
            ]
        };
        let knots = [0, 1, 2].map(|a| {
            KnotVector::from_knots(self.knots[a].degree(), conv_v(self.knots[a].knots()))
                .expect("cast keeps a clamped vector clamped")
        });
        MfaModel {
            knots,
            ctrl: conv_v(&self.ctrl),
            domain_min: conv3(self.domain_min),
            domain_max: conv3(self.domain_max),
            source_dims: self.source_dims,
            e_max_achieved: U::of(self.e_max_achieved.to_f64_lossy()),
        }
    }
}

/// Input samples per control point; knots and header are not counted.
pub fn compression_ratio<T: Real>(model: &MfaModel<T>) -> f64 {
    let src: f64 = model.source_dims.iter().map(|&d| d as f64).product();
    let ctrl: f64 = model.n_ctrl().iter().map(|&d| d as f64).product();
    src / ctrl
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model_with(ctrl_dims: [usize; 3], source: [usize; 3]) -> MfaModel<f64> {
        let knots = ctrl_dims.map(|n| KnotVector::clamped_uniform(1, n).unwrap());
        let count = ctrl_dims.iter().product();
        MfaModel::new(knots, vec![0.0; count], [0.0; 3], [1.0; 3], source, 0.0).unwrap()
    }

    #[test]
    fn compression_ratio_arithmetic() {
        assert_eq!(compression_ratio(&model_with([4, 5, 6], [4, 5, 6])), 1.0);
        assert_eq!(compression_ratio(&model_with([32; 3], [64; 3])), 8.0);
        // Large-model accounting without allocating the lattice.
        let big = 1024f64.powi(3) / 256f64.powi(3);
        assert_eq!(big, 64.0);
    }

    #[test]
    fn rejects_inconsistent_ctrl_length() {
        let knots = [2, 2, 2].map(|n| KnotVector::<f64>::clamped_uniform(1, n).unwrap());
        assert!(MfaModel::new(knots, vec![0.0; 7], [0.0; 3], [1.0; 3], [2; 3], 0.0).is_err());
    }

    #[test]
    fn out_of_domain_query_fails() {
        let m = model_with([2; 3], [2; 3]);
        assert!(matches!(
            m.decode_value([1.5, 0.0, 0.0]),
            Err(Error::Domain { .. })
        ));
        assert!(m.decode_gradient([0.0, -0.01, 0.0]).is_err());
    }

    #[test]
    fn trilinear_corner_model() {
        // Degree 1, 2 control points per axis: corner values of f = x + 2y + 4z.
        let knots = [2, 2, 2].map(|n| KnotVector::<f64>::clamped_uniform(1, n).unwrap());
        let ctrl = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let m = MfaModel::new(knots, ctrl, [0.0; 3], [1.0; 3], [2; 3], 0.0).unwrap();
        assert!((m.decode_value([0.5; 3]).unwrap() - 3.5).abs() < 1e-15);
        let g = m.decode_gradient([0.3, 0.6, 0.2]).unwrap();
        assert!(
            (g[0] - 1.0).abs() < 1e-12 && (g[1] - 2.0).abs() < 1e-12 && (g[2] - 4.0).abs() < 1e-12
        );
    }

    #[test]
    fn local_support_ignores_distant_control_points() {
        let knots = [8, 7, 9].map(|n| KnotVector::<f64>::clamped_uniform(2, n).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ctrl: Vec<f64> = (0..8 * 7 * 9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut m = MfaModel::new(knots, ctrl, [0.0; 3], [2.0; 3], [8, 7, 9], 0.0).unwrap();
        for _ in 0..50 {
            let p = [
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
            ];
            let u = m.parameter(p).unwrap();
            let spans: Vec<usize> = (0..3)
                .map(|a| m.knots[a].find_span(u[a]).unwrap())
                .collect();
            let before = m.decode_value(p).unwrap();
            // Pick a control point whose x index lies outside the active window.
            let i = if spans[0] >= 3 { 0 } else { 7 };
            let idx = m.ctrl_index(i, 3, 4);
            m.ctrl_mut()[idx] += 1000.0;
            assert_eq!(m.decode_value(p).unwrap().to_bits(), before.to_bits());
            m.ctrl_mut()[idx] -= 1000.0;
        }
    }
}
