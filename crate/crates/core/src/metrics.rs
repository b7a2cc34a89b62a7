//! Image- and volume-domain fidelity metrics.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::ScalarGrid3D;
use crate::render::{RgbImage, VolumeSource};
use crate::scalar::Real;

const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const PEAK_8BIT: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mse: f64,
    /// `f64::INFINITY` for identical images; serialized as `"inf"`.
    #[serde(serialize_with = "ser_psnr", deserialize_with = "de_psnr")]
    pub psnr_db: f64,
    pub ssim: f64,
}

fn ser_psnr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_psnr<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Psnr {
        Num(f64),
        Text(String),
    }
    match Psnr::deserialize(d)? {
        Psnr::Num(v) => Ok(v),
        Psnr::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Psnr::Text(t) => Err(serde::de::Error::custom(format!("bad psnr {t:?}"))),
    }
}

/// `inf` or the value with two decimals.
pub fn format_psnr(psnr: f64) -> String {
    if psnr.is_infinite() {
        "inf".into()
    } else {
        format!("{psnr:.2}")
    }
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mse={:.4} psnr_db={} ssim={:.6}",
            self.mse,
            format_psnr(self.psnr_db),
            self.ssim
        )
    }
}

/// `10 log10(peak^2 / mse)`; infinite for zero error.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

fn check_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::Dimension(format!(
            "images are {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Mean squared error over every pixel and RGB channel on the 0..255 scale.
pub fn mse(test: &RgbImage, reference: &RgbImage) -> Result<f64> {
    check_dims(test, reference)?;
    let sum: f64 = test
        .data
        .iter()
        .zip(&reference.data)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / test.data.len() as f64)
}

fn luma(img: &RgbImage) -> Vec<f64> {
    img.data
        .chunks_exact(3)
        .map(|p| LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64)
        .collect()
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let x = i as f64 - c;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Valid-mode separable filtering of a `w x h` plane.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|i| k[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM on luma over every full 11x11 Gaussian window. Images smaller
/// than the window fall back to a single window with uniform weights.
pub fn ssim(test: &RgbImage, reference: &RgbImage) -> Result<f64> {
    check_dims(test, reference)?;
    let (w, h) = (test.width, test.height);
    let (x, y) = (luma(test), luma(reference));
    let c1 = (K1 * PEAK_8BIT).powi(2);
    let c2 = (K2 * PEAK_8BIT).powi(2);
    let index = |mx: f64, my: f64, sxx: f64, syy: f64, sxy: f64| {
        ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2))
    };
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx = x.iter().map(|v| (v - mx) * (v - mx)).sum::<f64>() / n;
        let syy = y.iter().map(|v| (v - my) * (v - my)).sum::<f64>() / n;
        let sxy = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / n;
        return Ok(index(mx, my, sxx, syy, sxy));
    }
    let k = gaussian_window();
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<f64>>();
    let mx = filter_valid(&x, w, h, &k);
    let my = filter_valid(&y, w, h, &k);
    let exx = filter_valid(&sq(&x, &x), w, h, &k);
    let eyy = filter_valid(&sq(&y, &y), w, h, &k);
    let exy = filter_valid(&sq(&x, &y), w, h, &k);
    let total: f64 = (0..mx.len())
        .map(|i| {
            let (a, b) = (mx[i], my[i]);
            index(a, b, exx[i] - a * a, eyy[i] - b * b, exy[i] - a * b)
        })
        .sum();
    Ok(total / mx.len() as f64)
}

pub fn image_metrics(test: &RgbImage, reference: &RgbImage) -> Result<QualityReport> {
    let mse = mse(test, reference)?;
    Ok(QualityReport {
        mse,
        psnr_db: psnr_from_mse(mse, PEAK_8BIT),
        ssim: ssim(test, reference)?,
    })
}

/// PSNR between two lattices, with the reference's value range as peak.
pub fn volume_psnr<T: Real, U: Real>(
    test: &ScalarGrid3D<T>,
    reference: &ScalarGrid3D<U>,
) -> Result<f64> {
    if test.dims() != reference.dims() {
        return Err(Error::Dimension(format!(
            "volumes are {:?} and {:?}",
            test.dims(),
            reference.dims()
        )));
    }
    let peak = reference.value_range().to_f64_lossy();
    if peak <= 0.0 {
        return Err(Error::Parameter(
            "reference has zero value range; PSNR undefined".into(),
        ));
    }
    let sum: f64 = test
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| {
            let d = a.to_f64_lossy() - b.to_f64_lossy();
            d * d
        })
        .sum();
    Ok(psnr_from_mse(sum / test.len() as f64, peak))
}

/// Evaluates `source` at every lattice point of `reference`, producing a grid
/// comparable with [`volume_psnr`]. Points are clamped into the source bounds.
pub fn resample_onto<T: Real>(
    source: &dyn VolumeSource,
    reference: &ScalarGrid3D<T>,
) -> Result<ScalarGrid3D<f64>> {
    let bounds = source.bounds();
    let dims = reference.dims();
    let mut values = Vec::with_capacity(reference.len());
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let p = crate::scalar::vec3_f64(reference.position(i, j, k));
                values.push(source.value(bounds.clamp(p)));
            }
        }
    }
    ScalarGrid3D::new(
        dims,
        crate::scalar::vec3_f64(reference.domain_min()),
        crate::scalar::vec3_f64(reference.domain_max()),
        values,
    )
}
