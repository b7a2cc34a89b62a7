use crate::error::{Error, Result};
use crate::field::{filters, Filter, MarschnerLobb, ScalarGrid3D};
use crate::mfa::MfaModel;
use crate::render::camera::{add, dot, norm, normalize, scale, Aabb, Camera, Ray, RayGenerator};
use crate::render::{PartialImage, TransferFunction};
use crate::scalar::{vec3_of, Real};

/// Anything the ray caster can query for values and gradients.
///
/// Points passed in are already clamped into [`VolumeSource::bounds`].
pub trait VolumeSource: Sync {
    fn bounds(&self) -> Aabb;
    fn value(&self, p: [f64; 3]) -> f64;
    fn value_and_gradient(&self, p: [f64; 3]) -> (f64, [f64; 3]);
}

impl<T: Real> VolumeSource for MfaModel<T> {
    fn bounds(&self) -> Aabb {
        Aabb::new(
            crate::scalar::vec3_f64(self.domain_min()),
            crate::scalar::vec3_f64(self.domain_max()),
        )
    }

    #[inline]
    fn value(&self, p: [f64; 3]) -> f64 {
        self.value_at_param(self.parameter_unchecked(vec3_of(p)))
            .to_f64_lossy()
    }

    #[inline]
    fn value_and_gradient(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        let (v, g) = self.value_and_gradient_at_param(self.parameter_unchecked(vec3_of(p)));
        (v.to_f64_lossy(), crate::scalar::vec3_f64(g))
    }
}

/// A discrete grid reconstructed with a baseline filter, optionally
/// restricted to a sub-box of its domain.
#[derive(Debug, Clone)]
pub struct GridSource<'a, T> {
    pub grid: &'a ScalarGrid3D<T>,
    pub filter: Filter,
    pub bounds: Aabb,
}

impl<'a, T: Real> GridSource<'a, T> {
    pub fn new(grid: &'a ScalarGrid3D<T>, filter: Filter) -> Self {
        let bounds = Aabb::new(
            crate::scalar::vec3_f64(grid.domain_min()),
            crate::scalar::vec3_f64(grid.domain_max()),
        );
        Self {
            grid,
            filter,
            bounds,
        }
    }

    pub fn with_bounds(mut self, bounds: Aabb) -> Self {
        self.bounds = bounds;
        self
    }
}

impl<T: Real> VolumeSource for GridSource<'_, T> {
    fn bounds(&self) -> Aabb {
        self.bounds
    }

    #[inline]
    fn value(&self, p: [f64; 3]) -> f64 {
        filters::sample_unchecked(self.grid, vec3_of(p), self.filter).to_f64_lossy()
    }

    fn value_and_gradient(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        let q = vec3_of(p);
        let v = filters::sample_unchecked(self.grid, q, self.filter).to_f64_lossy();
        let g = filters::gradient_unchecked(self.grid, q, self.filter);
        (v, crate::scalar::vec3_f64(g))
    }
}

/// The continuous Marschner-Lobb signal, used for ground-truth renders.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticSource {
    pub signal: MarschnerLobb,
    pub bounds: Aabb,
}

impl VolumeSource for AnalyticSource {
    fn bounds(&self) -> Aabb {
        self.bounds
    }

    fn value(&self, p: [f64; 3]) -> f64 {
        self.signal.value(p)
    }

    fn value_and_gradient(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        (self.signal.value(p), self.signal.gradient(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shading {
    Off,
    BlinnPhong {
        ambient: f64,
        diffuse: f64,
        specular: f64,
        shininess: f64,
        /// Direction towards the light; normalized on use.
        light_dir: [f64; 3],
    },
}

impl Shading {
    pub fn default_blinn_phong() -> Self {
        Shading::BlinnPhong {
            ambient: 0.3,
            diffuse: 0.7,
            specular: 0.2,
            shininess: 20.0,
            light_dir: [1.0, 1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayCastConfig {
    /// Ray step in world units.
    pub step: f64,
    pub termination_alpha: f64,
    pub shading: Shading,
    /// Composited under the final image at merge time, never per block.
    pub background: [f64; 4],
}

impl Default for RayCastConfig {
    fn default() -> Self {
        Self {
            step: 0.02,
            termination_alpha: 0.99,
            shading: Shading::Off,
            background: [0.0, 0.0, 0.0, 1.0],
        }
    }
}

impl RayCastConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Parameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.termination_alpha > 0.0 && self.termination_alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "termination alpha must be in (0, 1], got {}",
                self.termination_alpha
            )));
        }
        if let Shading::BlinnPhong { light_dir, .. } = self.shading {
            if norm(light_dir) == 0.0 {
                return Err(Error::Parameter("light direction must be nonzero".into()));
            }
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Parameter(
                "background components must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Rescales an opacity defined for step `dt_ref` to step `dt`.
#[inline]
pub fn opacity_correct(alpha: f64, dt: f64, dt_ref: f64) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    1.0 - (1.0 - alpha).powf(dt / dt_ref)
}

/// Everything a worker needs to turn a source into a partial image.
#[derive(Debug, Clone)]
pub struct RenderRequest {
    pub camera: Camera,
    pub tf: TransferFunction,
    pub config: RayCastConfig,
    /// Dataset-wide value range used to normalize values for the table.
    pub value_range: [f64; 2],
}

impl RenderRequest {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        self.config.validate()?;
        if !(self.value_range[1] >= self.value_range[0]) {
            return Err(Error::Parameter(format!(
                "bad value range {:?}",
                self.value_range
            )));
        }
        Ok(())
    }
}

struct Marcher<'a> {
    source: &'a dyn VolumeSource,
    bounds: Aabb,
    clamp_box: Aabb,
    tf: &'a TransferFunction,
    cfg: &'a RayCastConfig,
    vmin: f64,
    inv_range: f64,
    zero_gradient: f64,
    light: [f64; 3],
}

impl Marcher<'_> {
    /// Front-to-back accumulation over samples `t_k = k * step` with
    /// `t_near <= t_k < t_far`. Sample positions are global along the ray, so
    /// adjacent blocks split a ray's samples without overlap or gaps.
    fn march(&self, ray: &Ray) -> [f64; 4] {
        let Some((t0, t1)) = self.bounds.intersect(ray) else {
            return [0.0; 4];
        };
        let dt = self.cfg.step;
        let mut k = (t0 / dt).ceil();
        if k * dt < t0 {
            k += 1.0;
        }
        let mut acc = [0.0f64; 4];
        loop {
            let t = k * dt;
            if t >= t1 {
                break;
            }
            k += 1.0;
            let p = self.clamp_box.clamp(ray.at(t));
            let (value, grad) = match self.cfg.shading {
                Shading::Off => (self.source.value(p), None),
                Shading::BlinnPhong { .. } => {
                    let (v, g) = self.source.value_and_gradient(p);
                    (v, Some(g))
                }
            };
            let s = ((value - self.vmin) * self.inv_range).clamp(0.0, 1.0);
            let rgba = self.tf.lookup(s);
            let alpha = opacity_correct(rgba[3], dt, self.tf.dt_ref());
            if alpha <= 0.0 {
                continue;
            }
            let color = match (grad, self.cfg.shading) {
                (
                    Some(g),
                    Shading::BlinnPhong {
                        ambient,
                        diffuse,
                        specular,
                        shininess,
                        ..
                    },
                ) if norm(g) > self.zero_gradient => {
                    let n = scale(normalize(g), -1.0);
                    let v = scale(ray.dir, -1.0);
                    let h = normalize(add(self.light, v));
                    let diff = dot(n, self.light).max(0.0);
                    let spec = dot(n, h).max(0.0).powf(shininess);
                    let lit = ambient + diffuse * diff;
                    [
                        (rgba[0] * lit + specular * spec).clamp(0.0, 1.0),
                        (rgba[1] * lit + specular * spec).clamp(0.0, 1.0),
                        (rgba[2] * lit + specular * spec).clamp(0.0, 1.0),
                    ]
                }
                _ => [rgba[0], rgba[1], rgba[2]],
            };
            let w = (1.0 - acc[3]) * alpha;
            acc[0] += w * color[0];
            acc[1] += w * color[1];
            acc[2] += w * color[2];
            acc[3] += w;
            if acc[3] >= self.cfg.termination_alpha {
                break;
            }
        }
        acc
    }
}

/// Ray casts `source` inside `bounds` into a premultiplied partial image.
/// The background is not applied here.
pub fn render_block(
    source: &dyn VolumeSource,
    bounds: &Aabb,
    request: &RenderRequest,
    block_id: usize,
    order_key: usize,
) -> Result<PartialImage> {
    request.validate()?;
    let cam = &request.camera;
    let gen = RayGenerator::new(cam)?;
    let [vmin, vmax] = request.value_range;
    let range = vmax - vmin;
    let light = match request.config.shading {
        Shading::BlinnPhong { light_dir, .. } => normalize(light_dir),
        Shading::Off => [0.0; 3],
    };
    let marcher = Marcher {
        source,
        bounds: *bounds,
        clamp_box: source.bounds(),
        tf: &request.tf,
        cfg: &request.config,
        vmin,
        inv_range: if range > 0.0 { 1.0 / range } else { 0.0 },
        zero_gradient: 1e-12 * if range > 0.0 { range } else { 1.0 },
        light,
    };
    let mut image = PartialImage::transparent(cam.width, cam.height, block_id, order_key);
    if request.tf.is_transparent() {
        return Ok(image);
    }
    for py in 0..cam.height {
        for px in 0..cam.width {
            image.pixels[py * cam.width + px] = marcher.march(&gen.ray(px, py));
        }
    }
    Ok(image)
}
