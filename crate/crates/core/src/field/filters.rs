//! Separable reconstruction kernels on the sample lattice.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarGrid3D;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    Nearest,
    Trilinear,
    /// Cubic B-spline convolution; smooths, does not interpolate.
    Tricubic,
    /// Keys cubic with `a = -0.5`; interpolates.
    CatmullRom,
}

impl Filter {
    pub const ALL: [Filter; 4] = [
        Filter::Nearest,
        Filter::Trilinear,
        Filter::Tricubic,
        Filter::CatmullRom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Filter::Nearest => "nearest",
            Filter::Trilinear => "trilinear",
            Filter::Tricubic => "tricubic",
            Filter::CatmullRom => "catmull_rom",
        }
    }

    /// Lattice samples the kernel may touch on each side of the cell.
    pub fn halo(self) -> usize {
        match self {
            Filter::Nearest | Filter::Trilinear => 0,
            Filter::Tricubic | Filter::CatmullRom => 1,
        }
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "nearest" => Ok(Filter::Nearest),
            "trilinear" | "linear" => Ok(Filter::Trilinear),
            "tricubic" | "bspline" | "cubic_bspline" => Ok(Filter::Tricubic),
            "catmull_rom" | "catmullrom" | "keys" => Ok(Filter::CatmullRom),
            other => Err(Error::Parameter(format!("unknown filter '{other}'"))),
        }
    }
}

impl std::fmt::Display for Filter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// 1-D weights for a sample at fractional offset `t` in `[0, 1]` past lattice
/// index `i0`. Returns the offset of the first tap relative to `i0`, the tap
/// weights and the tap count.
pub fn kernel_weights<T: Real>(filter: Filter, t: T) -> (isize, [T; 4], usize) {
    let one = T::one();
    let zero = T::zero();
    match filter {
        Filter::Nearest => {
            let off = if t >= T::of(0.5) { 1 } else { 0 };
            (off, [one, zero, zero, zero], 1)
        }
        Filter::Trilinear => (0, [one - t, t, zero, zero], 2),
        Filter::Tricubic => {
            let six = T::of(6.0);
            let t2 = t * t;
            let t3 = t2 * t;
            let s = one - t;
            (
                -1,
                [
                    s * s * s / six,
                    (T::of(3.0) * t3 - T::of(6.0) * t2 + T::of(4.0)) / six,
                    (-T::of(3.0) * t3 + T::of(3.0) * t2 + T::of(3.0) * t + one) / six,
                    t3 / six,
                ],
                4,
            )
        }
        Filter::CatmullRom => (
            -1,
            [keys(one + t), keys(t), keys(one - t), keys(T::of(2.0) - t)],
            4,
        ),
    }
}

/// Keys cubic convolution kernel with `a = -0.5`.
fn keys<T: Real>(x: T) -> T {
    let a = T::of(-0.5);
    let x = x.abs();
    let x2 = x * x;
    let x3 = x2 * x;
    if x <= T::one() {
        (a + T::of(2.0)) * x3 - (a + T::of(3.0)) * x2 + T::one()
    } else if x < T::of(2.0) {
        a * x3 - T::of(5.0) * a * x2 + T::of(8.0) * a * x - T::of(4.0) * a
    } else {
        T::zero()
    }
}

fn check_inside<T: Real>(grid: &ScalarGrid3D<T>, p: [T; 3]) -> Result<()> {
    if grid.contains(p) {
        Ok(())
    } else {
        Err(Error::Domain {
            point: crate::scalar::vec3_f64(p),
            min: crate::scalar::vec3_f64(grid.domain_min()),
            max: crate::scalar::vec3_f64(grid.domain_max()),
        })
    }
}

/// Reconstructs the field at physical point `p`. Taps falling outside the
/// lattice clamp to the edge sample.
pub fn sample_baseline<T: Real>(grid: &ScalarGrid3D<T>, p: [T; 3], filter: Filter) -> Result<T> {
    check_inside(grid, p)?;
    Ok(sample_unchecked(grid, p, filter))
}

pub(crate) fn sample_unchecked<T: Real>(grid: &ScalarGrid3D<T>, p: [T; 3], filter: Filter) -> T {
    let dims = grid.dims();
    let mut first = [0isize; 3];
    let mut weights = [[T::zero(); 4]; 3];
    let mut taps = [0usize; 3];
    for a in 0..3 {
        let u = grid.lattice_coordinate(a, p[a]);
        let max_cell = (dims[a] - 2) as isize;
        let i0 = (u.floor().to_isize().unwrap_or(0)).clamp(0, max_cell);
        let t = (u - T::of(i0 as f64)).max(T::zero()).min(T::one());
        let (off, w, n) = kernel_weights(filter, t);
        first[a] = i0 + off;
        weights[a] = w;
        taps[a] = n;
    }
    let clamp = |a: usize, i: isize| i.clamp(0, dims[a] as isize - 1) as usize;
    let mut acc = T::zero();
    for kz in 0..taps[2] {
        let k = clamp(2, first[2] + kz as isize);
        let wz = weights[2][kz];
        let mut acc_y = T::zero();
        for ky in 0..taps[1] {
            let j = clamp(1, first[1] + ky as isize);
            let wy = weights[1][ky];
            let mut acc_x = T::zero();
            for kx in 0..taps[0] {
                let i = clamp(0, first[0] + kx as isize);
                acc_x += weights[0][kx] * grid.get(i, j, k);
            }
            acc_y += wy * acc_x;
        }
        acc += wz * acc_y;
    }
    acc
}

/// Central differences of [`sample_baseline`] with a step of half the lattice
/// spacing per axis, one-sided where the stencil would leave the domain.
pub fn gradient_baseline<T: Real>(
    grid: &ScalarGrid3D<T>,
    p: [T; 3],
    filter: Filter,
) -> Result<[T; 3]> {
    check_inside(grid, p)?;
    Ok(gradient_unchecked(grid, p, filter))
}

pub(crate) fn gradient_unchecked<T: Real>(
    grid: &ScalarGrid3D<T>,
    p: [T; 3],
    filter: Filter,
) -> [T; 3] {
    let mut g = [T::zero(); 3];
    let (lo_dom, hi_dom) = (grid.domain_min(), grid.domain_max());
    for a in 0..3 {
        let h = grid.spacing(a) * T::of(0.5);
        let mut fwd = p;
        fwd[a] = p[a] + h;
        let mut back = p;
        back[a] = p[a] - h;
        let has_fwd = fwd[a] <= hi_dom[a];
        let has_back = back[a] >= lo_dom[a];
        g[a] = match (has_back, has_fwd) {
            (true, true) => {
                (sample_unchecked(grid, fwd, filter) - sample_unchecked(grid, back, filter))
                    / (h + h)
            }
            (false, true) => {
                (sample_unchecked(grid, fwd, filter) - sample_unchecked(grid, p, filter)) / h
            }
            (true, false) => {
                (sample_unchecked(grid, p, filter) - sample_unchecked(grid, back, filter)) / h
            }
            (false, false) => T::zero(),
        };
    }
    g
}
