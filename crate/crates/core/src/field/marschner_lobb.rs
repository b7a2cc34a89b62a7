use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::ScalarGrid3D;
use crate::scalar::Real;

/// Marschner-Lobb test signal: a slow `sin` falloff along z plus a radial
/// ripple in the xy plane, normalized into `[0, 1]` for `alpha >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarschnerLobb {
    pub f_m: f64,
    pub alpha: f64,
}

impl Default for MarschnerLobb {
    fn default() -> Self {
        Self {
            f_m: 6.0,
            alpha: 0.25,
        }
    }
}

impl MarschnerLobb {
    /// Default physical domain on every axis.
    pub const DOMAIN: (f64, f64) = (0.0, 7.0);

    pub fn new(f_m: f64, alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() || !f_m.is_finite() {
            return Err(Error::Parameter(format!(
                "Marschner-Lobb needs finite f_M and alpha > -1 (got f_M={f_m}, alpha={alpha})"
            )));
        }
        Ok(Self { f_m, alpha })
    }

    #[inline]
    fn ripple(&self, r: f64) -> f64 {
        (2.0 * PI * self.f_m * (PI * r / 2.0).cos()).cos()
    }

    pub fn value(&self, p: [f64; 3]) -> f64 {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        (1.0 - (PI * p[2] / 2.0).sin() + self.alpha * (1.0 + self.ripple(r)))
            / (2.0 * (1.0 + self.alpha))
    }

    /// Analytic gradient, used for reference renders.
    pub fn gradient(&self, p: [f64; 3]) -> [f64; 3] {
        let norm = 2.0 * (1.0 + self.alpha);
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let dz = -(PI / 2.0) * (PI * p[2] / 2.0).cos() / norm;
        if r == 0.0 {
            return [0.0, 0.0, dz];
        }
        // d/dr cos(2 pi f cos(pi r / 2)) = sin(2 pi f cos(pi r/2)) * 2 pi f * sin(pi r / 2) * pi / 2
        let inner = 2.0 * PI * self.f_m * (PI * r / 2.0).cos();
        let drho = inner.sin() * 2.0 * PI * self.f_m * (PI * r / 2.0).sin() * PI / 2.0;
        let dr = self.alpha * drho / norm;
        [dr * p[0] / r, dr * p[1] / r, dz]
    }
}

/// Samples the Marschner-Lobb signal on a regular lattice spanning
/// `domain_min..=domain_max`.
pub fn generate_marschner_lobb<T: Real>(
    dims: [usize; 3],
    domain_min: [f64; 3],
    domain_max: [f64; 3],
    signal: MarschnerLobb,
) -> Result<ScalarGrid3D<T>> {
    let signal = MarschnerLobb::new(signal.f_m, signal.alpha)?;
    let dmin = crate::scalar::vec3_of::<T>(domain_min);
    let dmax = crate::scalar::vec3_of::<T>(domain_max);
    // Positions are computed in f64 so f32 grids hold correctly rounded samples.
    let coords: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            let n = dims[a].max(2);
            (0..dims[a])
                .map(|i| {
                    if i + 1 == n {
                        domain_max[a]
                    } else {
                        domain_min[a] + i as f64 * (domain_max[a] - domain_min[a]) / (n - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(dims.iter().product());
    for &z in &coords[2] {
        for &y in &coords[1] {
            for &x in &coords[0] {
                values.push(T::of(signal.value([x, y, z])));
            }
        }
    }
    ScalarGrid3D::new(dims, dmin, dmax, values)
}
