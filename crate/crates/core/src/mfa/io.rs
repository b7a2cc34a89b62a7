//! Binary model format, little-endian:
//!
//! ```text
//! "MFA1"            4 bytes
//! version           u32 (= 1)
//! degree            u8  x 3
//! n_ctrl            u32 x 3
//! source_dims       u32 x 3
//! domain_min        f64 x 3
//! domain_max        f64 x 3
//! e_max_achieved    f64
//! per axis:         u32 knot count, then f64 knots
//! control points    f64, x-fastest
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mfa::{KnotVector, MfaModel};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"MFA1";
pub const VERSION: u32 = 1;
const HEADER_BYTES: usize = 4 + 4 + 3 + 12 + 12 + 24 + 24 + 8;

/// Exact on-disk size for the given knot counts and control-point total.
pub fn model_file_size(knot_counts: [usize; 3], ctrl_count: usize) -> usize {
    HEADER_BYTES + knot_counts.iter().map(|k| 4 + 8 * k).sum::<usize>() + 8 * ctrl_count
}

pub fn encode_bytes<T: Real>(model: &MfaModel<T>) -> Vec<u8> {
    let kc = [0, 1, 2].map(|a| model.knots[a].knots().len());
    let mut out = Vec::with_capacity(model_file_size(kc, model.ctrl.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for kv in &model.knots {
        out.push(kv.degree() as u8);
    }
    for kv in &model.knots {
        out.extend_from_slice(&(kv.n_ctrl() as u32).to_le_bytes());
    }
    for d in model.source_dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let mut put = |v: T| out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    model.domain_min.into_iter().for_each(&mut put);
    model.domain_max.into_iter().for_each(&mut put);
    put(model.e_max_achieved);
    for kv in &model.knots {
        out.extend_from_slice(&(kv.knots().len() as u32).to_le_bytes());
        for &k in kv.knots() {
            out.extend_from_slice(&k.to_f64_lossy().to_le_bytes());
        }
    }
    for &c in &model.ctrl {
        out.extend_from_slice(&c.to_f64_lossy().to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated: need {n} bytes at offset {}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn decode_bytes<T: Real>(buf: &[u8]) -> Result<MfaModel<T>> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, not an MFA1 model".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let degree = [r.u8()?, r.u8()?, r.u8()?];
    let n_ctrl = [r.u32()?, r.u32()?, r.u32()?];
    let source_dims = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let dmin = [r.f64()?, r.f64()?, r.f64()?];
    let dmax = [r.f64()?, r.f64()?, r.f64()?];
    let e_max = r.f64()?;
    let mut knots = Vec::with_capacity(3);
    for a in 0..3 {
        let count = r.u32()? as usize;
        let expected = n_ctrl[a] as usize + degree[a] as usize + 1;
        if count != expected {
            return Err(Error::Format(format!(
                "axis {a}: {count} knots, expected n_ctrl + degree + 1 = {expected}"
            )));
        }
        let raw = r.take(count * 8)?;
        let ks = raw
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        knots.push(
            KnotVector::from_knots(degree[a] as usize, ks)
                .map_err(|e| Error::Format(e.to_string()))?,
        );
    }
    let total: usize = n_ctrl.iter().map(|&n| n as usize).product();
    let raw = r.take(total * 8)?;
    if r.pos != buf.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            buf.len() - r.pos
        )));
    }
    let ctrl = raw
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
        .collect();
    let kz = knots.pop().expect("three axes");
    let ky = knots.pop().expect("three axes");
    let kx = knots.pop().expect("three axes");
    MfaModel::new(
        [kx, ky, kz],
        ctrl,
        crate::scalar::vec3_of(dmin),
        crate::scalar::vec3_of(dmax),
        source_dims,
        T::of(e_max),
    )
    .map_err(|e| Error::Format(e.to_string()))
}

pub fn save_model<T: Real>(model: &MfaModel<T>, path: &Path) -> Result<()> {
    fs::write(path, encode_bytes(model))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_model<T: Real>(path: &Path) -> Result<MfaModel<T>> {
    let buf = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    decode_bytes(&buf)
}
