//! Uniform wavenumber lattice.
//!
//! A [`GridSpec`] describes the box `origin + h * [0, n)^3` in wavenumber
//! space. Storage order everywhere in the crate is z-fastest:
//! `flat = (i * ny + j) * nz + l`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: T,
    pub origin: [T; 3],
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(dims: [usize; 3], h: T, origin: [T; 3]) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::InvalidGrid(format!("every axis needs at least 2 points, got {dims:?}")));
        }
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { nx: dims[0], ny: dims[1], nz: dims[2], h, origin })
    }

    /// Grid with `origin` moved to the nearest point of `h * Z^3`.
    ///
    /// Only lattice-aligned grids are closed under `k - l`, which the
    /// convolution needs.
    pub fn aligned(dims: [usize; 3], h: T, origin: [T; 3]) -> Result<Self> {
        let snapped = origin.map(|o| (o / h).round() * h);
        Self::new(dims, h, snapped)
    }

    /// Smallest lattice-aligned grid with spacing `h` covering `[min, max]`.
    ///
    /// The origin is snapped down and point counts rounded up, so the result
    /// always contains the requested box.
    pub fn covering(min: [T; 3], max: [T; 3], h: T) -> Result<Self> {
        let mut dims = [0usize; 3];
        let mut origin = [T::zero(); 3];
        for a in 0..3 {
            if !(max[a] > min[a]) {
                return Err(Error::InvalidGrid(format!("empty extent on axis {a}")));
            }
            // Relative slack so that exact multiples of h are not bumped by rounding.
            let slack = T::of(1e-9);
            let lo = (min[a] / h + slack).floor();
            origin[a] = lo * h;
            let span = ((max[a] / h - slack).ceil() - lo).to_usize().unwrap_or(0);
            dims[a] = (span + 1).max(2);
        }
        Self::new(dims, h, origin)
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight `h^3` for lattice sums approximating `∫ dk`.
    pub fn cell_volume(&self) -> T {
        self.h * self.h * self.h
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.ny + j) * self.nz + l
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let l = idx % self.nz;
        let ij = idx / self.nz;
        [ij / self.ny, ij % self.ny, l]
    }

    pub fn wavenumber(&self, idx: [usize; 3]) -> Result<[T; 3]> {
        let dims = self.dims();
        if idx.iter().zip(dims.iter()).any(|(&i, &n)| i >= n) {
            return Err(Error::IndexOutOfRange { index: idx, extents: dims });
        }
        Ok(self.wavenumber_unchecked(idx))
    }

    #[inline]
    pub fn wavenumber_unchecked(&self, idx: [usize; 3]) -> [T; 3] {
        [
            self.origin[0] + self.h * T::of_usize(idx[0]),
            self.origin[1] + self.h * T::of_usize(idx[1]),
            self.origin[2] + self.h * T::of_usize(idx[2]),
        ]
    }

    /// Wavenumber coordinate of index `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> T {
        self.origin[axis] + self.h * T::of_usize(i)
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<T> {
        (0..self.dims()[axis]).map(|i| self.coord(axis, i)).collect()
    }

    /// Nearest grid index to wavenumber `k`, or `None` outside the box.
    pub fn index_of(&self, k: [T; 3]) -> Option<[usize; 3]> {
        let dims = self.dims();
        let mut out = [0usize; 3];
        for a in 0..3 {
            let r = ((k[a] - self.origin[a]) / self.h).round();
            if r < T::zero() {
                return None;
            }
            let i = r.to_usize()?;
            if i >= dims[a] {
                return None;
            }
            out[a] = i;
        }
        Some(out)
    }

    /// `origin / h` as integers, when the origin sits on the `h`-lattice.
    pub fn lattice_offset(&self) -> Result<[i64; 3]> {
        let mut out = [0i64; 3];
        for a in 0..3 {
            let q = self.origin[a] / self.h;
            let r = q.round();
            let tol = T::of(1e-6) * (T::one() + q.abs());
            if (q - r).abs() > tol {
                return Err(Error::MisalignedOrigin {
                    origin: self.origin.map(Scalar::to_f64_lossy),
                    h: self.h.to_f64_lossy(),
                });
            }
            out[a] = r.to_i64().unwrap_or(0);
        }
        Ok(out)
    }

    /// `|k|^2` at every grid point, in storage order.
    pub fn k_squared(&self) -> Vec<T> {
        let xs = self.axis_coords(0);
        let ys = self.axis_coords(1);
        let zs = self.axis_coords(2);
        let mut out = Vec::with_capacity(self.len());
        for &x in &xs {
            for &y in &ys {
                let xy = x * x + y * y;
                out.extend(zs.iter().map(|&z| xy + z * z));
            }
        }
        out
    }

    /// Same geometry, within a relative tolerance on the floating parameters.
    pub fn same_as(&self, other: &Self) -> bool {
        let tol = T::of(1e-12);
        let close = |a: T, b: T| (a - b).abs() <= tol * (T::one() + a.abs().max(b.abs()));
        self.dims() == other.dims() && close(self.h, other.h) && (0..3).all(|a| close(self.origin[a], other.origin[a]))
    }

    /// Converts the grid to another scalar type.
    pub fn cast<U: Scalar>(&self) -> GridSpec<U> {
        GridSpec {
            nx: self.nx,
            ny: self.ny,
            nz: self.nz,
            h: U::of(self.h.to_f64_lossy()),
            origin: self.origin.map(|o| U::of(o.to_f64_lossy())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn half_grid() -> GridSpec<f64> {
        GridSpec::new([61, 61, 399], 0.5, [-15.0, -15.0, 1.0]).unwrap()
    }

    #[test]
    fn wavenumber_at_origin_and_offsets() {
        let g = half_grid();
        assert_eq!(g.wavenumber([0, 0, 0]).unwrap(), [-15.0, -15.0, 1.0]);
        assert_eq!(g.wavenumber([2, 0, 0]).unwrap(), [-14.0, -15.0, 1.0]);
    }

    #[test]
    fn wavenumber_on_reference_resolution() {
        let g = GridSpec::new([160, 160, 1440], 0.14907, [-15.0, -15.0, 1.0]).unwrap();
        let k = g.wavenumber([1, 0, 0]).unwrap();
        assert_relative_eq!(k[0], -14.85093, max_relative = 1e-15);
        assert_eq!(k[1], -15.0);
        assert_eq!(k[2], 1.0);
    }

    #[test]
    fn wavenumber_rejects_out_of_range() {
        let g = half_grid();
        assert!(matches!(g.wavenumber([61, 0, 0]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn cell_volume_is_h_cubed() {
        let mk = |h| GridSpec::new([2, 2, 2], h, [0.0; 3]).unwrap().cell_volume();
        assert_eq!(mk(1.0), 1.0);
        assert_eq!(mk(0.5), 0.125);
        assert_relative_eq!(mk(0.14907), 3.3126e-3, max_relative = 1e-4);
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(GridSpec::new([1, 4, 4], 1.0, [0.0; 3]).is_err());
        assert!(GridSpec::new([4, 4, 4], 0.0, [0.0; 3]).is_err());
        assert!(GridSpec::new([4, 4, 4], -1.0, [0.0; 3]).is_err());
    }

    #[test]
    fn covering_reference_domain() {
        let g = GridSpec::covering([-15.0, -15.0, 1.0], [15.0, 15.0, 200.0], 0.14907).unwrap();
        for a in 0..3 {
            let lo = [-15.0, -15.0, 1.0][a];
            let hi = [15.0, 15.0, 200.0][a];
            assert!(g.origin[a] <= lo);
            assert!(g.coord(a, g.dims()[a] - 1) >= hi);
        }
        g.lattice_offset().unwrap();
    }

    #[test]
    fn misaligned_origin_is_reported() {
        let g = GridSpec::new([4, 4, 4], 0.3, [0.1, 0.0, 0.0]).unwrap();
        assert!(matches!(g.lattice_offset(), Err(Error::MisalignedOrigin { .. })));
        let a = GridSpec::aligned([4, 4, 4], 0.3, [0.1, -0.95, 1.0]).unwrap();
        assert_eq!(a.lattice_offset().unwrap(), [0, -3, 3]);
    }

    #[test]
    fn flat_unflat_roundtrip() {
        let g = GridSpec::new([3, 4, 5], 1.0, [0.0; 3]).unwrap();
        for idx in 0..g.len() {
            let [i, j, l] = g.unflat(idx);
            assert_eq!(g.flat(i, j, l), idx);
        }
        assert_eq!(g.flat(0, 0, 1), 1);
    }

    proptest! {
        #[test]
        fn index_of_inverts_wavenumber(
            i in 0usize..40, j in 0usize..40, l in 0usize..300,
            h in 0.05f64..1.0, ox in -20.0f64..20.0, oz in -5.0f64..5.0,
        ) {
            let g = GridSpec::new([40, 40, 300], h, [ox, -ox, oz]).unwrap();
            let k = g.wavenumber([i, j, l]).unwrap();
            prop_assert_eq!(g.index_of(k), Some([i, j, l]));
        }

        #[test]
        fn covering_contains_requested_box(
            lo in -20.0f64..0.0, width in 0.5f64..30.0, h in 0.1f64..2.0,
        ) {
            let g = GridSpec::covering([lo; 3], [lo + width; 3], h).unwrap();
            for a in 0..3 {
                prop_assert!(g.origin[a] <= lo + 1e-9);
                prop_assert!(g.coord(a, g.dims()[a] - 1) >= lo + width - 1e-9);
            }
        }
    }
}
