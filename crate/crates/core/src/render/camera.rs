use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(a: [f64; 3]) -> [f64; 3] {
    scale(a, 1.0 / norm(a))
}

/// Pinhole camera. Pixel row 0 is the top of the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    /// Vertical field of view in degrees.
    #[serde(rename = "fov")]
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::Camera(format!(
                "fov must be in (0, 180), got {}",
                self.fov_deg
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Camera("image size must be at least 1x1".into()));
        }
        let all = self.position.iter().chain(&self.look_at).chain(&self.up);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Camera("non-finite camera vector".into()));
        }
        let forward = sub(self.look_at, self.position);
        if norm(forward) == 0.0 {
            return Err(Error::Camera("look_at coincides with position".into()));
        }
        let side = cross(normalize(forward), self.up);
        if norm(side) <= 1e-12 * norm(self.up).max(1e-300) {
            return Err(Error::Camera("up is parallel to the view direction".into()));
        }
        Ok(())
    }

    pub fn forward(&self) -> [f64; 3] {
        normalize(sub(self.look_at, self.position))
    }

    /// Same view with a different image size.
    pub fn with_size(&self, width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            ..self.clone()
        }
    }

    /// Camera on a sphere around `target`: azimuth in the xy plane from +x,
    /// elevation towards +z, both in degrees.
    pub fn orbit(
        target: [f64; 3],
        distance: f64,
        azimuth_deg: f64,
        elevation_deg: f64,
        fov_deg: f64,
        size: (usize, usize),
    ) -> Self {
        let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
        let offset = [
            distance * el.cos() * az.cos(),
            distance * el.cos() * az.sin(),
            distance * el.sin(),
        ];
        Self {
            position: add(target, offset),
            look_at: target,
            up: [0.0, 0.0, 1.0],
            fov_deg,
            width: size.0,
            height: size.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    /// Unit length.
    pub dir: [f64; 3],
}

impl Ray {
    pub fn at(&self, t: f64) -> [f64; 3] {
        add(self.origin, scale(self.dir, t))
    }
}

/// Precomputed camera basis for generating per-pixel rays on demand.
#[derive(Debug, Clone)]
pub struct RayGenerator {
    origin: [f64; 3],
    forward: [f64; 3],
    right: [f64; 3],
    up: [f64; 3],
    half_h: f64,
    half_w: f64,
    width: usize,
    height: usize,
}

impl RayGenerator {
    pub fn new(camera: &Camera) -> Result<Self> {
        camera.validate()?;
        let forward = camera.forward();
        let right = normalize(cross(forward, camera.up));
        let up = cross(right, forward);
        let half_h = (camera.fov_deg.to_radians() / 2.0).tan();
        let half_w = half_h * camera.width as f64 / camera.height as f64;
        Ok(Self {
            origin: camera.position,
            forward,
            right,
            up,
            half_h,
            half_w,
            width: camera.width,
            height: camera.height,
        })
    }

    #[inline]
    pub fn ray(&self, px: usize, py: usize) -> Ray {
        let sx = (2.0 * (px as f64 + 0.5) / self.width as f64 - 1.0) * self.half_w;
        let sy = (1.0 - 2.0 * (py as f64 + 0.5) / self.height as f64) * self.half_h;
        let d = add(self.forward, add(scale(self.right, sx), scale(self.up, sy)));
        Ray {
            origin: self.origin,
            dir: normalize(d),
        }
    }
}

/// One ray per pixel through the pixel centre, row-major from the top-left.
pub fn make_rays(camera: &Camera) -> Result<Vec<Ray>> {
    let gen = RayGenerator::new(camera)?;
    let mut rays = Vec::with_capacity(camera.width * camera.height);
    for py in 0..camera.height {
        for px in 0..camera.width {
            rays.push(gen.ray(px, py));
        }
    }
    Ok(rays)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        [
            p[0].clamp(self.min[0], self.max[0]),
            p[1].clamp(self.min[1], self.max[1]),
            p[2].clamp(self.min[2], self.max[2]),
        ]
    }

    pub fn center(&self) -> [f64; 3] {
        scale(add(self.min, self.max), 0.5)
    }

    pub fn diagonal(&self) -> f64 {
        norm(sub(self.max, self.min))
    }

    /// Slab test. Returns `(t_near, t_far)` clipped to `t >= 0`, or `None`
    /// when the ray misses. Faces are inclusive, so a ray travelling inside
    /// a face plane counts as a hit.
    pub fn intersect(&self, ray: &Ray) -> Option<(f64, f64)> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            let o = ray.origin[a];
            let d = ray.dir[a];
            if d == 0.0 {
                if o < self.min[a] || o > self.max[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let (mut near, mut far) = ((self.min[a] - o) * inv, (self.max[a] - o) * inv);
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

/// Free-function form of [`Aabb::intersect`].
pub fn intersect_aabb(ray: &Ray, aabb: &Aabb) -> Option<(f64, f64)> {
    aabb.intersect(ray)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam(w: usize, h: usize, fov: f64) -> Camera {
        Camera {
            position: [0.0, 0.0, 0.0],
            look_at: [0.0, 0.0, -1.0],
            up: [0.0, 1.0, 0.0],
            fov_deg: fov,
            width: w,
            height: h,
        }
    }

    #[test]
    fn centre_pixel_looks_at_target() {
        let c = Camera {
            position: [10.0, -3.0, 7.0],
            look_at: [3.5, 3.5, 3.5],
            up: [0.0, 0.0, 1.0],
            fov_deg: 40.0,
            width: 9,
            height: 7,
        };
        let rays = make_rays(&c).unwrap();
        let centre = rays[3 * 9 + 4].dir;
        let f = c.forward();
        for a in 0..3 {
            assert!((centre[a] - f[a]).abs() < 1e-15);
        }
    }

    #[test]
    fn directions_are_unit_length() {
        let c = Camera {
            position: [1.0, 2.0, 3.0],
            look_at: [-4.0, 0.5, 2.0],
            up: [0.3, 0.2, 1.0],
            fov_deg: 75.0,
            width: 31,
            height: 17,
        };
        for r in make_rays(&c).unwrap() {
            assert!((norm(r.dir) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corner_pixel_for_ninety_degree_fov() {
        // Square image, fov 90: the image plane at distance 1 spans [-1, 1].
        // The top-left pixel centre sits half a pixel in from the corner.
        let w = 8usize;
        let rays = make_rays(&cam(w, w, 90.0)).unwrap();
        let e = 1.0 - 1.0 / w as f64;
        let len = (2.0 * e * e + 1.0).sqrt();
        let want = [-e / len, e / len, -1.0 / len];
        let got = rays[0].dir;
        for a in 0..3 {
            assert!((got[a] - want[a]).abs() < 1e-14, "{got:?} vs {want:?}");
        }
        let br = rays[w * w - 1].dir;
        assert!((br[0] - e / len).abs() < 1e-14 && (br[1] + e / len).abs() < 1e-14);
    }

    #[test]
    fn invalid_cameras_are_rejected() {
        let mut c = cam(4, 4, 45.0);
        c.up = [0.0, 0.0, 2.0];
        assert!(matches!(make_rays(&c), Err(Error::Camera(_))));
        assert!(make_rays(&cam(4, 4, 180.0)).is_err());
        assert!(make_rays(&cam(0, 4, 45.0)).is_err());
        let mut c = cam(4, 4, 45.0);
        c.look_at = c.position;
        assert!(make_rays(&c).is_err());
    }

    #[test]
    fn unit_cube_entry_and_exit() {
        let b = Aabb::new([0.0; 3], [1.0; 3]);
        let r = Ray {
            origin: [-1.0, 0.5, 0.5],
            dir: [1.0, 0.0, 0.0],
        };
        assert_eq!(intersect_aabb(&r, &b), Some((1.0, 2.0)));
        let away = Ray {
            origin: [-1.0, 0.5, 0.5],
            dir: [-1.0, 0.0, 0.0],
        };
        assert_eq!(intersect_aabb(&away, &b), None);
        let inside = Ray {
            origin: [0.5; 3],
            dir: [0.0, 0.0, 1.0],
        };
        assert_eq!(intersect_aabb(&inside, &b), Some((0.0, 0.5)));
    }

    /// Membership sampled along the ray must agree with the slab interval.
    #[test]
    fn grazing_rays_agree_with_sampled_membership() {
        let b = Aabb::new([0.0; 3], [1.0; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cases = [
            Ray {
                origin: [-1.0, 0.0, 0.5],
                dir: [1.0, 0.0, 0.0],
            },
            Ray {
                origin: [-1.0, 1.0, 1.0],
                dir: [1.0, 0.0, 0.0],
            },
            Ray {
                origin: [0.3, -2.0, 1.0],
                dir: [0.0, 1.0, 0.0],
            },
            Ray {
                origin: [-1.0, 1.0 + 1e-9, 0.5],
                dir: [1.0, 0.0, 0.0],
            },
            Ray {
                origin: [0.0, 0.0, -3.0],
                dir: [0.0, 0.0, 1.0],
            },
        ];
        for ray in cases {
            let hit = b.intersect(&ray);
            for _ in 0..1000 {
                let t: f64 = rng.gen_range(0.0..5.0);
                let inside = b.contains(ray.at(t));
                let in_interval = hit.is_some_and(|(t0, t1)| t >= t0 && t <= t1);
                assert_eq!(inside, in_interval, "ray {ray:?} at t={t}");
            }
        }
    }
}
