//! Headerless little-endian volumes with a key/value text sidecar.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::ScalarGrid3D;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawDtype {
    F32,
    F64,
    U8,
}

impl RawDtype {
    pub fn size(self) -> usize {
        match self {
            RawDtype::F32 => 4,
            RawDtype::F64 => 8,
            RawDtype::U8 => 1,
        }
    }
}

impl FromStr for RawDtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f32" | "float32" | "float" => Ok(RawDtype::F32),
            "f64" | "float64" | "double" => Ok(RawDtype::F64),
            "u8" | "uint8" | "uchar" => Ok(RawDtype::U8),
            other => Err(Error::Parameter(format!("unknown dtype '{other}'"))),
        }
    }
}

impl fmt::Display for RawDtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RawDtype::F32 => "f32",
            RawDtype::F64 => "f64",
            RawDtype::U8 => "u8",
        })
    }
}

/// Contents of the sidecar metadata file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMeta {
    pub dims: [usize; 3],
    pub dtype: RawDtype,
    pub domain_min: [f64; 3],
    pub domain_max: [f64; 3],
}

/// `volume.raw` -> `volume.raw.meta`.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    let mut s = raw.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn load_raw<T: Real>(
    path: &Path,
    dims: [usize; 3],
    dtype: RawDtype,
    domain_min: [f64; 3],
    domain_max: [f64; 3],
) -> Result<ScalarGrid3D<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let count = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or_else(|| Error::Parameter(format!("dims {dims:?} overflow")))?;
    let expected = (count * dtype.size()) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: path.to_owned(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let values: Vec<T> = match dtype {
        RawDtype::U8 => bytes.iter().map(|&b| T::of(b as f64)).collect(),
        RawDtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| T::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect(),
        RawDtype::F64 => bytes
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
            .collect(),
    };
    ScalarGrid3D::new(
        dims,
        crate::scalar::vec3_of(domain_min),
        crate::scalar::vec3_of(domain_max),
        values,
    )
}

/// Loads a volume using the dims, dtype and domain recorded in its sidecar.
pub fn load_raw_with_sidecar<T: Real>(path: &Path) -> Result<(ScalarGrid3D<T>, RawMeta)> {
    let meta = read_sidecar(&sidecar_path(path))?;
    let grid = load_raw(
        path,
        meta.dims,
        meta.dtype,
        meta.domain_min,
        meta.domain_max,
    )?;
    Ok((grid, meta))
}

/// Writes the samples as little-endian `dtype`, x-fastest, plus the sidecar.
/// `u8` output rounds and clamps to `0..=255`.
pub fn save_raw<T: Real>(grid: &ScalarGrid3D<T>, path: &Path, dtype: RawDtype) -> Result<()> {
    let mut buf = Vec::with_capacity(grid.len() * dtype.size());
    for &v in grid.values() {
        let v = v.to_f64_lossy();
        match dtype {
            RawDtype::U8 => buf.push(v.round().clamp(0.0, 255.0) as u8),
            RawDtype::F32 => buf.extend_from_slice(&(v as f32).to_le_bytes()),
            RawDtype::F64 => buf.extend_from_slice(&v.to_le_bytes()),
        }
    }
    fs::write(path, &buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    write_sidecar(
        &sidecar_path(path),
        &RawMeta {
            dims: grid.dims(),
            dtype,
            domain_min: crate::scalar::vec3_f64(grid.domain_min()),
            domain_max: crate::scalar::vec3_f64(grid.domain_max()),
        },
    )
}

pub fn write_sidecar(path: &Path, meta: &RawMeta) -> Result<()> {
    let mut f =
        fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let d = meta.dims;
    let (lo, hi) = (meta.domain_min, meta.domain_max);
    writeln!(f, "dims = {} {} {}", d[0], d[1], d[2])
        .and_then(|_| writeln!(f, "dtype = {}", meta.dtype))
        .and_then(|_| writeln!(f, "domain_min = {:?} {:?} {:?}", lo[0], lo[1], lo[2]))
        .and_then(|_| writeln!(f, "domain_max = {:?} {:?} {:?}", hi[0], hi[1], hi[2]))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_sidecar(path: &Path) -> Result<RawMeta> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let doc = crate::render::doc::KeyValueDoc::parse(&text)?;
    Ok(RawMeta {
        dims: doc.usize3("dims")?,
        dtype: doc.required("dtype")?.parse()?,
        domain_min: doc.f64x3("domain_min")?,
        domain_max: doc.f64x3("domain_max")?,
    })
}
