use crate::error::{Error, Result};
use crate::scalar::Real;

/// Regular lattice of scalar samples mapped onto an axis-aligned physical box.
///
/// Samples are stored x-fastest. Sample `i` along axis `k` sits at
/// `domain_min[k] + i * (domain_max[k] - domain_min[k]) / (dims[k] - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid3D<T> {
    dims: [usize; 3],
    domain_min: [T; 3],
    domain_max: [T; 3],
    values: Vec<T>,
    value_min: T,
    value_max: T,
}

impl<T: Real> ScalarGrid3D<T> {
    pub fn new(
        dims: [usize; 3],
        domain_min: [T; 3],
        domain_max: [T; 3],
        values: Vec<T>,
    ) -> Result<Self> {
        validate_lattice(dims, domain_min, domain_max)?;
        let expected = dims[0] * dims[1] * dims[2];
        if values.len() != expected {
            return Err(Error::Dimension(format!(
                "grid {dims:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        let mut value_min = T::infinity();
        let mut value_max = T::neg_infinity();
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite sample {v}")));
            }
            value_min = value_min.min(v);
            value_max = value_max.max(v);
        }
        Ok(Self {
            dims,
            domain_min,
            domain_max,
            values,
            value_min,
            value_max,
        })
    }

    /// Builds a grid by evaluating `f` at every lattice point's physical position.
    pub fn from_fn(
        dims: [usize; 3],
        domain_min: [T; 3],
        domain_max: [T; 3],
        mut f: impl FnMut([T; 3]) -> T,
    ) -> Result<Self> {
        validate_lattice(dims, domain_min, domain_max)?;
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        let coord = |axis: usize, i: usize| {
            let t = T::of_usize(i) / T::of_usize(dims[axis] - 1);
            domain_min[axis] + t * (domain_max[axis] - domain_min[axis])
        };
        for k in 0..dims[2] {
            let z = coord(2, k);
            for j in 0..dims[1] {
                let y = coord(1, j);
                for i in 0..dims[0] {
                    values.push(f([coord(0, i), y, z]));
                }
            }
        }
        Self::new(dims, domain_min, domain_max, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn domain_min(&self) -> [T; 3] {
        self.domain_min
    }

    pub fn domain_max(&self) -> [T; 3] {
        self.domain_max
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn value_min(&self) -> T {
        self.value_min
    }

    pub fn value_max(&self) -> T {
        self.value_max
    }

    pub fn value_range(&self) -> T {
        self.value_max - self.value_min
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.index(i, j, k)]
    }

    /// Physical distance between neighbouring samples along `axis`.
    pub fn spacing(&self, axis: usize) -> T {
        (self.domain_max[axis] - self.domain_min[axis]) / T::of_usize(self.dims[axis] - 1)
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> T {
        if i == self.dims[axis] - 1 {
            return self.domain_max[axis];
        }
        self.domain_min[axis] + T::of_usize(i) * self.spacing(axis)
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> [T; 3] {
        [
            self.coordinate(0, i),
            self.coordinate(1, j),
            self.coordinate(2, k),
        ]
    }

    pub fn contains(&self, p: [T; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.domain_min[a] && p[a] <= self.domain_max[a])
    }

    /// Continuous lattice coordinate of a physical point along `axis`.
    #[inline]
    pub fn lattice_coordinate(&self, axis: usize, x: T) -> T {
        (x - self.domain_min[axis]) / self.spacing(axis)
    }

    /// Copies the inclusive sample-index box `lo..=hi` into a new grid whose
    /// domain is the physical extent of that box.
    pub fn extract(&self, lo: [usize; 3], hi: [usize; 3]) -> Result<Self> {
        for a in 0..3 {
            if lo[a] >= hi[a] || hi[a] >= self.dims[a] {
                return Err(Error::Parameter(format!(
                    "extract range {lo:?}..={hi:?} invalid for dims {:?}",
                    self.dims
                )));
            }
        }
        let dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                let row = self.index(lo[0], j, k);
                values.extend_from_slice(&self.values[row..row + dims[0]]);
            }
        }
        let dmin = self.position(lo[0], lo[1], lo[2]);
        let dmax = self.position(hi[0], hi[1], hi[2]);
        Self::new(dims, dmin, dmax, values)
    }

    /// Converts the sample type.
    pub fn cast<U: Real>(&self) -> ScalarGrid3D<U> {
        let conv = |v: [T; 3]| {
            [
                U::of(v[0].to_f64_lossy()),
                U::of(v[1].to_f64_lossy()),
                U::of(v[2].to_f64_lossy()),
            ]
        };
        let values: Vec<U> = self
            .values
            .iter()
            .map(|v| U::of(v.to_f64_lossy()))
            .collect();
        ScalarGrid3D::new(
            self.dims,
            conv(self.domain_min),
            conv(self.domain_max),
            values,
        )
        .expect("casting a valid grid keeps it valid")
    }
}

fn validate_lattice<T: Real>(dims: [usize; 3], dmin: [T; 3], dmax: [T; 3]) -> Result<()> {
    for a in 0..3 {
        if dims[a] < 2 {
            return Err(Error::Parameter(format!(
                "grid needs at least 2 samples per axis, got {dims:?}"
            )));
        }
        if !(dmax[a] > dmin[a]) || !dmin[a].is_finite() || !dmax[a].is_finite() {
            return Err(Error::Parameter(format!(
                "domain max must exceed min on axis {a}: [{}, {}]",
                dmin[a], dmax[a]
            )));
        }
    }
    Ok(())
}

/// Stride sampling keeping the first and last sample of every axis.
///
/// `factor` must divide `dims - 1` on every axis; the physical domain is unchanged.
pub fn downsample<T: Real>(grid: &ScalarGrid3D<T>, factor: usize) -> Result<ScalarGrid3D<T>> {
    if factor == 0 {
        return Err(Error::Parameter("downsample factor must be >= 1".into()));
    }
    let dims = grid.dims();
    if let Some(axis) = (0..3).find(|&a| (dims[a] - 1) % factor != 0) {
        return Err(Error::Parameter(format!(
            "factor {factor} does not divide dims-1 = {} on axis {axis}",
            dims[axis] - 1
        )));
    }
    let out_dims = [
        (dims[0] - 1) / factor + 1,
        (dims[1] - 1) / factor + 1,
        (dims[2] - 1) / factor + 1,
    ];
    let mut values = Vec::with_capacity(out_dims.iter().product());
    for k in 0..out_dims[2] {
        for j in 0..out_dims[1] {
            for i in 0..out_dims[0] {
                values.push(grid.get(i * factor, j * factor, k * factor));
            }
        }
    }
    ScalarGrid3D::new(out_dims, grid.domain_min(), grid.domain_max(), values)
}
