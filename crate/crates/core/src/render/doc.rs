//! Line-oriented `key = value` documents used for cameras, transfer
//! functions, render settings and raw-volume sidecars.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may repeat
//! (transfer-function `node` lines); single-valued keys use the last
//! occurrence.
//!
//! Camera document:
//!
//! ```text
//! position = 17.5 12.0 14.0
//! look_at  = 3.5 3.5 3.5
//! up       = 0 0 1
//! fov      = 30
//! width    = 768
//! height   = 768
//! ```
//!
//! Transfer-function document (node values are normalized to `[0, 1]`):
//!
//! ```text
//! dt_ref = 0.02
//! # node = value  r g b  opacity
//! node = 0.0  0 0 0  0
//! node = 1.0  1 1 1  0.8
//! ```
//!
//! Render-settings document (all keys optional):
//!
//! ```text
//! step = 0.02
//! termination_alpha = 0.99
//! shading = blinn_phong        # or: off
//! ambient = 0.3
//! diffuse = 0.7
//! specular = 0.2
//! shininess = 20
//! light_dir = 1 1 1
//! background = 0 0 0 1
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::render::{Camera, RayCastConfig, Shading, TfNode, TransferFunction};

#[derive(Debug, Clone, Default)]
pub struct KeyValueDoc {
    entries: Vec<(usize, String, String)>,
}

impl KeyValueDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Document {
                line: idx + 1,
                reason: format!("expected 'key = value', got '{line}'"),
            })?;
            entries.push((idx + 1, k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    fn last(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .rev()
            .find(|(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_str()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.last(key).map(|(_, v)| v)
    }

    pub fn required(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Document {
            line: 0,
            reason: format!("missing key '{key}'"),
        })
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
        self.entries
            .iter()
            .filter(move |(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_str()))
    }

    fn numbers(line: usize, v: &str) -> Result<Vec<f64>> {
        v.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Document {
                    line,
                    reason: format!("'{s}' is not a number"),
                })
            })
            .collect()
    }

    fn fixed<const N: usize>(&self, key: &str) -> Result<[f64; N]> {
        let (line, v) = self.last(key).ok_or_else(|| Error::Document {
            line: 0,
            reason: format!("missing key '{key}'"),
        })?;
        let nums = Self::numbers(line, v)?;
        nums.try_into().map_err(|n: Vec<f64>| Error::Document {
            line,
            reason: format!("'{key}' needs {N} numbers, got {}", n.len()),
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        Ok(self.fixed::<1>(key)?[0])
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.get(key).is_some() {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn f64x3(&self, key: &str) -> Result<[f64; 3]> {
        self.fixed::<3>(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let (line, v) = self.last(key).ok_or_else(|| Error::Document {
            line: 0,
            reason: format!("missing key '{key}'"),
        })?;
        v.parse().map_err(|_| Error::Document {
            line,
            reason: format!("'{key}' must be a non-negative integer"),
        })
    }

    pub fn usize3(&self, key: &str) -> Result<[usize; 3]> {
        let (line, v) = self.last(key).ok_or_else(|| Error::Document {
            line: 0,
            reason: format!("missing key '{key}'"),
        })?;
        let parts: Vec<usize> = v
            .split(|c: char| c.is_whitespace() || c == ',' || c == 'x')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Document {
                line,
                reason: format!("'{key}' must hold integers"),
            })?;
        parts.try_into().map_err(|_| Error::Document {
            line,
            reason: format!("'{key}' needs 3 integers"),
        })
    }
}

pub fn parse_camera(text: &str) -> Result<Camera> {
    let doc = KeyValueDoc::parse(text)?;
    let cam = Camera {
        position: doc.f64x3("position")?,
        look_at: doc.f64x3("look_at")?,
        up: doc.f64x3("up")?,
        fov_deg: doc.f64("fov")?,
        width: doc.usize("width")?,
        height: doc.usize("height")?,
    };
    cam.validate()?;
    Ok(cam)
}

pub fn format_camera(cam: &Camera) -> String {
    let v = |a: [f64; 3]| format!("{:?} {:?} {:?}", a[0], a[1], a[2]);
    format!(
        "position = {}\nlook_at = {}\nup = {}\nfov = {:?}\nwidth = {}\nheight = {}\n",
        v(cam.position),
        v(cam.look_at),
        v(cam.up),
        cam.fov_deg,
        cam.width,
        cam.height
    )
}

pub fn parse_transfer_function(text: &str) -> Result<TransferFunction> {
    let doc = KeyValueDoc::parse(text)?;
    let dt_ref = doc.f64("dt_ref")?;
    let mut nodes = Vec::new();
    for (line, v) in doc.all("node") {
        let n = KeyValueDoc::numbers(line, v)?;
        if n.len() != 5 {
            return Err(Error::Document {
                line,
                reason: format!("node needs 'value r g b opacity', got {} numbers", n.len()),
            });
        }
        nodes.push(TfNode {
            value: n[0],
            color: [n[1], n[2], n[3]],
            opacity: n[4],
        });
    }
    TransferFunction::new(nodes, dt_ref)
}

pub fn format_transfer_function(tf: &TransferFunction) -> String {
    let mut out = format!("dt_ref = {:?}\n# node = value r g b opacity\n", tf.dt_ref());
    for n in tf.nodes() {
        let _ = writeln!(
            out,
            "node = {:?} {:?} {:?} {:?} {:?}",
            n.value, n.color[0], n.color[1], n.color[2], n.opacity
        );
    }
    out
}

pub fn parse_render_config(text: &str) -> Result<RayCastConfig> {
    let doc = KeyValueDoc::parse(text)?;
    let base = RayCastConfig::default();
    let shading = match doc.get("shading").unwrap_or("off") {
        "off" | "none" => Shading::Off,
        "blinn_phong" | "phong" => {
            let Shading::BlinnPhong {
                ambient,
                diffuse,
                specular,
                shininess,
                light_dir,
            } = Shading::default_blinn_phong()
            else {
                unreachable!()
            };
            Shading::BlinnPhong {
                ambient: doc.f64_or("ambient", ambient)?,
                diffuse: doc.f64_or("diffuse", diffuse)?,
                specular: doc.f64_or("specular", specular)?,
                shininess: doc.f64_or("shininess", shininess)?,
                light_dir: if doc.get("light_dir").is_some() {
                    doc.f64x3("light_dir")?
                } else {
                    light_dir
                },
            }
        }
        other => {
            return Err(Error::Document {
                line: 0,
                reason: format!("unknown shading '{other}'"),
            })
        }
    };
    let background = if doc.get("background").is_some() {
        doc.fixed::<4>("background")?
    } else {
        base.background
    };
    let cfg = RayCastConfig {
        step: doc.f64_or("step", base.step)?,
        termination_alpha: doc.f64_or("termination_alpha", base.termination_alpha)?,
        shading,
        background,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn format_render_config(cfg: &RayCastConfig) -> String {
    let mut out = format!(
        "step = {:?}\ntermination_alpha = {:?}\n",
        cfg.step, cfg.termination_alpha
    );
    match cfg.shading {
        Shading::Off => out.push_str("shading = off\n"),
        Shading::BlinnPhong {
            ambient,
            diffuse,
            specular,
            shininess,
            light_dir,
        } => {
            let _ = write!(
                out,
                "shading = blinn_phong\nambient = {ambient:?}\ndiffuse = {diffuse:?}\nspecular = {specular:?}\nshininess = {shininess:?}\nlight_dir = {:?} {:?} {:?}\n",
                light_dir[0], light_dir[1], light_dir[2]
            );
        }
    }
    let b = cfg.background;
    let _ = writeln!(
        out,
        "background = {:?} {:?} {:?} {:?}",
        b[0], b[1], b[2], b[3]
    );
    out
}
